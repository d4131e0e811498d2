//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with `cargo test --release -p confetti-cli --test acceptance`. The
//! process exits non-zero on a failed criterion only when
//! `CONFETTI_ACCEPTANCE_STRICT` is set; otherwise the verdicts are reported
//! and the run succeeds, so the rest of the workspace suite still runs.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use confetti::crossing::crossing_result;
use confetti::discretize::{robust_color_at, sample_k_perturbation, RobustColor};
use confetti::harness::{
    coupled_sweep, crossing_rect, discretize_compare, estimate_crossing_prob, estimate_f, estimate_pc, harris_check,
    rsw_check, TrialSetup, DEFAULT_RSW_FLOOR,
};
use confetti::rng::derive_seed;
use confetti::threshold::{
    find_boosters, influence_identity_check, pivotal_derivative, power_product, prob, prob_rational, BooleanFunction,
    ProductMeasure,
};
use confetti::{Color, ColorGrid, ConfettiShape, CubeGrid, DepthPolicy, Point2, Rect, Result};
use num::{BigInt, BigRational, One};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MASTER_SEED: u64 = 20_261_015;

fn seed(criterion: u64) -> u64 {
    derive_seed(MASTER_SEED, criterion)
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn run(n: u32, name: &str, f: impl FnOnce() -> Result<Verdict>) -> bool {
    let start = Instant::now();
    let v = f().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
    println!(
        "criterion {n:>2} {} {name}: {} [{:.1}s]",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
    v.pass
}

fn setup(shape: ConfettiShape) -> TrialSetup {
    TrialSetup { shape, ..TrialSetup::default() }
}

fn critical_point(shape: ConfettiShape, salt: u64) -> Result<Verdict> {
    let start = Instant::now();
    let est = estimate_pc(&setup(shape), 20.0, 1000, (0.3, 0.7), 0.01, seed(salt))?;
    let secs = start.elapsed().as_secs_f64();
    let pass = (0.48..=0.52).contains(&est.pc_hat) && est.ci_low <= 0.5 && 0.5 <= est.ci_high && secs <= 600.0;
    Ok(verdict(
        pass,
        format!(
            "pc_hat = {:.4}, 95% CI [{:.4}, {:.4}], {} points, {secs:.0}s",
            est.pc_hat,
            est.ci_low,
            est.ci_high,
            est.points.len()
        ),
    ))
}

fn self_duality(shape: ConfettiShape, salt: u64) -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, s) in [10.0, 20.0].into_iter().enumerate() {
        let e = estimate_crossing_prob(&setup(shape), crossing_rect(s, 1.0), 0.5, 2000, derive_seed(seed(salt), i as u64))?;
        pass &= e.contains(0.5);
        parts.push(format!("s={s}: {:.4} [{:.4}, {:.4}]", e.phat, e.ci_low, e.ci_high));
    }
    Ok(verdict(pass, parts.join("; ")))
}

fn sharp_transition(shape: ConfettiShape, salt: u64) -> Result<Verdict> {
    let t = coupled_sweep(&setup(shape), crossing_rect(20.0, 3.0), &[0.4, 0.6], 1000, seed(salt))?;
    let (lo, hi) = (t.estimates[0], t.estimates[1]);
    Ok(verdict(
        hi.phat >= 0.9 && lo.phat <= 0.1,
        format!(
            "P(0.6) = {:.3} [{:.3}, {:.3}] (need >= 0.9), P(0.4) = {:.3} [{:.3}, {:.3}] (need <= 0.1)",
            hi.phat, hi.ci_low, hi.ci_high, lo.phat, lo.ci_low, lo.ci_high
        ),
    ))
}

fn rsw_floor() -> Result<Verdict> {
    let r = rsw_check(&TrialSetup::default(), &[5.0, 10.0, 20.0], 3.0, 1000, DEFAULT_RSW_FLOOR, seed(4))?;
    let pass = r.rows.iter().all(|row| row.black_long.ci_low > 0.0);
    let parts: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("s={}: {:.3} [{:.3}, {:.3}]", row.s, row.black_long.phat, row.black_long.ci_low, row.black_long.ci_high))
        .collect();
    Ok(verdict(pass, parts.join("; ")))
}

fn coupling_monotonicity() -> Result<Verdict> {
    let mut pairs = 0usize;
    let mut violations = 0usize;
    let p_grid: Vec<f64> = (0..11).map(|i| 0.3 + 0.04 * i as f64).collect();
    let sweeps = [
        coupled_sweep(&TrialSetup::default(), crossing_rect(5.0, 3.0), &p_grid, 1000, seed(50))?,
        coupled_sweep(&TrialSetup::default(), crossing_rect(20.0, 3.0), &[0.4, 0.5, 0.6], 500, seed(51))?,
    ];
    for t in &sweeps {
        for trial in &t.trials {
            for w in trial.results.windows(2) {
                pairs += 1;
                let ok = (!w[0].black_horizontal || w[1].black_horizontal)
                    && (!w[0].black_vertical || w[1].black_vertical)
                    && (w[0].white_horizontal || !w[1].white_horizontal)
                    && (w[0].white_vertical || !w[1].white_vertical);
                violations += usize::from(!ok);
            }
        }
    }
    let t_grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let f = estimate_f(&TrialSetup::default(), &t_grid, 0.7, 2.0, 1.0, 3, 500, seed(52))?;
    for row in &f.indicators {
        for w in row.windows(2) {
            pairs += 1;
            violations += usize::from(w[0] && !w[1]);
        }
    }
    Ok(verdict(
        violations == 0 && pairs >= 10_000,
        format!("{violations} violations over {pairs} trial-pairs (p and t sweeps)"),
    ))
}

fn pixel_duality() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed(6));
    let mut violations = 0;
    for _ in 0..10_000 {
        let (nc, nr) = (rng.random_range(1..40), rng.random_range(1..40));
        let density: f64 = rng.random();
        let cells = (0..nc * nr)
            .map(|_| if rng.random_bool(density) { Color::Black } else { Color::White })
            .collect();
        let g = ColorGrid::new(Point2::new(0.0, 0.0), 1.0, nc, nr, cells)?;
        violations += usize::from(!crossing_result(&g).duality_holds());
    }
    let random_violations = violations;
    let setup = TrialSetup { pitch: 0.1, ..TrialSetup::default() };
    for i in 0..10_000u64 {
        let s = 1.0 + (i % 4) as f64;
        let rect = crossing_rect(s, 1.0 + (i % 3) as f64);
        let mut config = setup.sample(rect, derive_seed(seed(60), i))?;
        let raster = confetti::LeafRaster::paint(&mut config, rect, setup.pitch)?;
        let p = rng.random::<f64>();
        violations += usize::from(!crossing_result(&raster.threshold(p)).duality_holds());
    }
    Ok(verdict(
        violations == 0,
        format!(
            "{random_violations} violations on 10000 random grids, {} on 10000 simulated grids",
            violations - random_violations
        ),
    ))
}

fn sandwich() -> Result<Verdict> {
    let t = discretize_compare(&TrialSetup::default(), Rect::centered(4.0, 4.0), 0.5, &[3, 4, 5, 6], 500, seed(7))?;
    let mut violations = 0;
    for trial in &t.trials {
        let chain = trial.robust.windows(2).all(|w| !w[0] || w[1]) && (!trial.robust[3] || trial.continuum);
        violations += usize::from(!chain);
    }
    let cont = t.continuum_estimate.successes;
    let k6 = t.robust_estimates[3].successes;
    // gap <= 0.05 over 500 trials, compared in counts to avoid rounding
    let pass = violations == 0 && (cont - k6) * 100 <= 5 * 500;
    let per_k: Vec<String> = t
        .k_values
        .iter()
        .zip(&t.robust_estimates)
        .map(|(k, e)| format!("k={k}: {:.3}", e.phat))
        .collect();
    Ok(verdict(
        pass,
        format!(
            "{violations} violations; continuum {:.3}, {}; gap at k=6 = {:.3}",
            t.continuum_estimate.phat,
            per_k.join(", "),
            (cont - k6) as f64 / 500.0
        ),
    ))
}

fn robust_soundness() -> Result<Verdict> {
    let setup = TrialSetup { depth: DepthPolicy::Fixed(5.0), ..TrialSetup::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed(8));
    let (mut pairs, mut violations, mut configs) = (0u64, 0u64, 0u64);
    while pairs < 100_000 {
        let k = 3 + (configs % 2) as u32;
        let window = Rect::centered(4.0, 4.0);
        let config = setup.sample(window, derive_seed(seed(80), configs))?;
        let p = rng.random_range(0.2..0.8);
        let grid = CubeGrid::from_configuration(&config, p, k)?;
        let probes: Vec<(Point2, RobustColor)> = (0..200)
            .map(|_| Point2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .map(|q| (q, robust_color_at(&grid, &setup.shape, q)))
            .filter(|(_, c)| c.is_robust(Color::Black) || c.is_robust(Color::White))
            .collect();
        for j in 0..25 {
            let perturbed = sample_k_perturbation(&grid, derive_seed(seed(81), configs * 1000 + j))?;
            for (q, c) in &probes {
                let expected = if c.is_robust(Color::Black) { Color::Black } else { Color::White };
                pairs += 1;
                violations += u64::from(perturbed.color_at(*q, p)? != expected);
            }
        }
        configs += 1;
    }
    Ok(verdict(
        violations == 0,
        format!("{violations} violations over {pairs} robust probe-perturbation pairs ({configs} configurations)"),
    ))
}

fn harris() -> Result<Verdict> {
    let first = Rect::new(0.0, 0.0, 15.0, 5.0);
    let second = Rect::new(0.0, 6.0, 15.0, 11.0);
    let rows = harris_check(&TrialSetup::default(), first, second, &[0.45, 0.5, 0.55], 2000, seed(9))?;
    let pass = rows.iter().all(|r| r.holds(3.0));
    let parts: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "p={}: P12={:.4} vs P1*P2={:.4} (SE {:.4})",
                r.p,
                r.both.phat,
                r.first.phat * r.second.phat,
                r.se
            )
        })
        .collect();
    Ok(verdict(pass, parts.join("; ")))
}

fn random_monotone(rng: &mut impl Rng, n: usize) -> Result<BooleanFunction> {
    let seeds: Vec<u32> = (0..rng.random_range(1..6)).map(|_| rng.random_range(0..1u32 << n)).collect();
    BooleanFunction::from_fn(n, |x| seeds.iter().any(|s| x & s == *s))
}

fn threshold_exactness() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed(10));
    let (mut worst_fd, mut worst_identity) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.random_range(1..=10);
        let f = random_monotone(&mut rng, n)?;
        let mu = ProductMeasure::new((0..n).map(|_| rng.random_range(0.05..0.95)).collect())?;
        for i in 0..n {
            let h = 1e-5;
            let p = mu.probs()[i];
            let fd = (prob(&f, &mu.with(i, p + h)?)? - prob(&f, &mu.with(i, p - h)?)?) / (2.0 * h);
            worst_fd = worst_fd.max((fd - pivotal_derivative(&f, &mu, i)?).abs());
        }
        let (lhs, rhs) = influence_identity_check(&f, &mu)?;
        worst_identity = worst_identity.max((lhs - rhs).abs());
    }
    let mut power_ok = true;
    for _ in 0..30 {
        let n = rng.random_range(1..=4);
        let k = rng.random_range(1..=4);
        let f = random_monotone(&mut rng, n)?;
        let p: Vec<BigRational> = (0..n)
            .map(|_| BigRational::new(BigInt::from(rng.random_range(1..16)), BigInt::from(16)))
            .collect();
        let g = power_product(&f, k)?;
        let rep: Vec<BigRational> = p.iter().cycle().take(n * k).cloned().collect();
        let pf = prob_rational(&f, &p)?;
        let expected = (0..k).fold(BigRational::one(), |acc, _| acc * &pf);
        power_ok &= prob_rational(&g, &rep)? == expected;
    }
    let or2 = BooleanFunction::or(2)?;
    let report = find_boosters(&or2, &ProductMeasure::uniform(2, 0.5)?, 1, 0.25)?;
    let or_ok = report
        .boosters
        .iter()
        .filter(|b| b.assignment == vec![true])
        .all(|b| b.boost == 0.25 && b.conditional == 1.0)
        && report.boosters.iter().filter(|b| b.boost > 0.0).count() == 2;
    Ok(verdict(
        worst_fd <= 1e-8 && worst_identity <= 1e-9 && power_ok && or_ok,
        format!(
            "max |FD - MR| = {worst_fd:.2e}, max identity error = {worst_identity:.2e}, rational powers exact: {power_ok}, OR2 boosters exact: {or_ok}"
        ),
    ))
}

fn shape_generality() -> Result<Verdict> {
    let square = ConfettiShape::square(1.0)?;
    let parts = [
        ("1", critical_point(square, 111)),
        ("2", self_duality(square, 112)),
        ("3", sharp_transition(square, 113)),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, r) in parts {
        let v = r.unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        pass &= v.pass;
        details.push(format!("[{name}: {} {}]", if v.pass { "pass" } else { "fail" }, v.detail));
    }
    Ok(verdict(pass, details.join(" ")))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Result<Verdict> {
    let bin = env!("CARGO_BIN_EXE_confetti");
    let commands: &[&[&str]] = &[
        &["simulate", "--s", "3", "--aspect", "1", "--trials", "200", "--k", "3"],
        &["sweep", "--s", "5", "--p", "0.4,0.5,0.6", "--trials", "200"],
        &["sweep", "--s", "1", "--aspect", "1", "--t", "0,0.5,1", "--p-target", "0.7", "--k", "3", "--trials", "50"],
        &["pc", "--s", "5", "--trials", "200", "--tolerance", "0.02"],
        &["rsw", "--s", "2,4", "--trials", "200"],
        &["discretize-compare", "--trials", "20"],
        &["render", "--s", "4", "--svg"],
    ];
    let tmp = tempfile::tempdir()?;
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for (ci, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for (run, workers) in [1, 8, 1, 8].into_iter().enumerate() {
            let dir = tmp.path().join(format!("c{ci}_r{run}"));
            let out = Command::new(bin)
                .args(*args)
                .args(["--seed", "12345", "--workers", &workers.to_string(), "--out"])
                .arg(&dir)
                .output()?;
            if !out.status.success() {
                return Ok(verdict(false, format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))));
            }
            outputs.push((out.stdout, files(&dir)));
        }
        checked += outputs[0].1.len();
        if outputs.iter().any(|o| *o != outputs[0]) {
            mismatches.push(args[0]);
        }
    }
    let threshold = |_: u32| {
        Command::new(bin)
            .args(["threshold", "--function", "majority:5", "--boosters", "2,0.1"])
            .output()
            .map(|o| o.stdout)
    };
    if threshold(0)? != threshold(1)? {
        mismatches.push("threshold");
    }
    Ok(verdict(
        mismatches.is_empty(),
        format!(
            "{} commands x 4 runs (workers 1/8), {checked} output files compared, mismatches: {mismatches:?}",
            commands.len() + 1
        ),
    ))
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; only a name filter matters here
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let wanted = |n: u32| filter.map_or(true, |f| f == n);
    let criteria: Vec<(u32, &str, fn() -> Result<Verdict>)> = vec![
        (1, "critical point (s=20, 1000 trials/point)", || critical_point(ConfettiShape::UnitDisk, 1)),
        (2, "self-duality anchor (s in {10,20}, 2000 trials)", || self_duality(ConfettiShape::UnitDisk, 2)),
        (3, "sharp transition (s=20, 3s x s, 1000 trials)", || sharp_transition(ConfettiShape::UnitDisk, 3)),
        (4, "RSW floor (s in {5,10,20}, p=1/2)", rsw_floor),
        (5, "coupling monotonicity", coupling_monotonicity),
        (6, "pixel duality", pixel_duality),
        (7, "discretization sandwich (side 4, k=3..6, 500 trials)", sandwich),
        (8, "robust-colour soundness", robust_soundness),
        (9, "Harris inequality (2000 trials)", harris),
        (10, "threshold toolkit exactness", threshold_exactness),
        (11, "shape generality (criteria 1-3 with square:1)", shape_generality),
        (12, "determinism across worker counts", determinism),
    ];
    let mut passed = 0;
    let mut ran = 0;
    for (n, name, f) in criteria {
        if !wanted(n) {
            continue;
        }
        ran += 1;
        passed += usize::from(run(n, name, f));
    }
    println!("acceptance: {passed}/{ran} criteria passed");
    if passed < ran && std::env::var_os("CONFETTI_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
