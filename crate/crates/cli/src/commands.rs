use std::fs;
use std::path::Path;

use confetti::harness::output::{bit, csv_document, json_document};
use confetti::harness::{
    coupled_sweep, crossing_rect, discretize_compare as run_compare, estimate_f, estimate_pc, render_ppm, render_svg,
    rsw_check, Manifest, SweepTable,
};
use confetti::threshold::{
    find_boosters, influence_identity_check, pivotal_derivative, prob, resample_flip_prob, total_influence,
    BooleanFunction, ProductMeasure,
};
use confetti::{ConfettiError, Rect, Result};
use serde::Serialize;
use serde_json::json;

use crate::settings::Settings;
use crate::{CompareArgs, PcArgs, RenderArgs, RswArgs, SimulateArgs, SweepArgs, ThresholdArgs};

/// Writes `name` under `out` (when given); the JSON summary also goes to stdout.
struct Sink<'a> {
    out: Option<&'a Path>,
}

impl Sink<'_> {
    fn new(out: Option<&Path>) -> Result<Sink<'_>> {
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
        }
        Ok(Sink { out })
    }

    fn file(&self, name: &str, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = self.out {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }

    fn summary(&self, manifest: &Manifest, args: &impl Serialize, result: &impl Serialize) -> Result<()> {
        let doc = json_document(manifest, args, result)?;
        self.file("summary.json", doc.as_bytes())?;
        print!("{doc}");
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

const TRIAL_HEADER: [&str; 8] = ["seed", "p", "s", "h", "bH", "bV", "wH", "wV"];

fn trial_rows(table: &SweepTable, s: f64, h: f64) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for t in &table.trials {
        for (p, r) in table.p_values.iter().zip(&t.results) {
            rows.push(vec![
                t.seed.to_string(),
                fmt(*p),
                fmt(s),
                fmt(h),
                bit(r.black_horizontal),
                bit(r.black_vertical),
                bit(r.white_horizontal),
                bit(r.white_vertical),
            ]);
        }
    }
    rows
}

fn rect_or(settings: &Settings, fallback: Rect) -> Rect {
    settings.window.unwrap_or(fallback)
}

#[derive(Serialize)]
struct RunArgs<'a, T: Serialize> {
    command: &'a str,
    #[serde(flatten)]
    settings: &'a Settings,
    #[serde(flatten)]
    extra: T,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let settings = Settings::resolve(&a.common, &[0.5])?;
    let p = settings.single_p()?;
    let rect = rect_or(&settings, crossing_rect(a.s, a.aspect));
    let args = RunArgs {
        command: "simulate",
        settings: &settings,
        extra: json!({ "s": a.s, "aspect": a.aspect, "k": a.k, "rect": rect }),
    };
    let manifest = Manifest::new(settings.seed, &args)?;
    let sink = Sink::new(a.common.out.as_deref())?;
    let setup = settings.setup();
    let table = settings.install(|| coupled_sweep(&setup, rect, &[p], settings.trials, settings.seed))??;
    sink.file(
        "trials.csv",
        csv_document(&manifest, &TRIAL_HEADER, trial_rows(&table, a.s, settings.pitch))?.as_bytes(),
    )?;
    let mut result = json!({
        "rect": rect,
        "black_horizontal": table.estimates[0],
        "black_vertical": table.estimate_by(0, |r| r.black_vertical),
        "white_horizontal": table.estimate_by(0, |r| r.white_horizontal),
        "white_vertical": table.estimate_by(0, |r| r.white_vertical),
    });
    if let Some(k) = a.k {
        let centred = Rect::centered(rect.width(), rect.height());
        let cmp = settings.install(|| run_compare(&setup, centred, p, &[k], settings.trials, settings.seed))??;
        sink.file("discretize.csv", sandwich_csv(&manifest, &cmp)?.as_bytes())?;
        result["robust"] = json!({ "k": k, "rect": centred, "robust": cmp.robust_estimates[0], "continuum": cmp.continuum_estimate });
    }
    sink.summary(&manifest, &args, &result)
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    if !a.t.is_empty() {
        return sweep_t(a);
    }
    let settings = Settings::resolve(&a.common, &[0.4, 0.45, 0.5, 0.55, 0.6])?;
    let rect = rect_or(&settings, crossing_rect(a.s, a.aspect));
    let args = RunArgs {
        command: "sweep",
        settings: &settings,
        extra: json!({ "s": a.s, "aspect": a.aspect, "k": a.k, "rect": rect }),
    };
    let manifest = Manifest::new(settings.seed, &args)?;
    let sink = Sink::new(a.common.out.as_deref())?;
    let setup = settings.setup();
    let table = settings.install(|| coupled_sweep(&setup, rect, &settings.p, settings.trials, settings.seed))??;
    sink.file(
        "trials.csv",
        csv_document(&manifest, &TRIAL_HEADER, trial_rows(&table, a.s, settings.pitch))?.as_bytes(),
    )?;
    let mut result = json!({
        "rect": rect,
        "p": table.p_values,
        "black_horizontal": table.estimates,
    });
    if let Some(k) = a.k {
        let centred = Rect::centered(rect.width(), rect.height());
        let per_p = settings.install(|| {
            settings
                .p
                .iter()
                .map(|&p| run_compare(&setup, centred, p, &[k], settings.trials, settings.seed))
                .collect::<Result<Vec<_>>>()
        })??;
        let mut rows = Vec::new();
        for cmp in &per_p {
            rows.extend(sandwich_rows(cmp));
        }
        let doc = csv_document(&manifest, &SANDWICH_HEADER, rows)?;
        sink.file("discretize.csv", doc.as_bytes())?;
        result["robust"] = json!(per_p
            .iter()
            .map(|c| json!({ "p": c.p, "robust": c.robust_estimates[0], "continuum": c.continuum_estimate }))
            .collect::<Vec<_>>());
    }
    sink.summary(&manifest, &args, &result)
}

fn sweep_t(a: SweepArgs) -> Result<()> {
    let settings = Settings::resolve(&a.common, &[0.5])?;
    let (Some(p_target), Some(k)) = (a.p_target, a.k) else {
        return Err(ConfettiError::InvalidParams("--t requires --p-target and --k".into()));
    };
    let args = RunArgs {
        command: "sweep",
        settings: &settings,
        extra: json!({ "s": a.s, "aspect": a.aspect, "t": a.t, "p_target": p_target, "k": k }),
    };
    let manifest = Manifest::new(settings.seed, &args)?;
    let sink = Sink::new(a.common.out.as_deref())?;
    let setup = settings.setup();
    let table = settings
        .install(|| estimate_f(&setup, &a.t, p_target, a.s, a.aspect, k, settings.trials, settings.seed))??;
    let mut rows = Vec::new();
    for (i, row) in table.indicators.iter().enumerate() {
        for (j, hit) in row.iter().enumerate() {
            rows.push(vec![
                i.to_string(),
                fmt(table.t_values[j]),
                fmt(table.thresholds[j]),
                k.to_string(),
                bit(*hit),
            ]);
        }
    }
    let doc = csv_document(&manifest, &["trial", "t", "p", "k", "robust_crossing"], rows)?;
    sink.file("interpolation.csv", doc.as_bytes())?;
    let result = json!({
        "rect": table.rect,
        "t": table.t_values,
        "p": table.thresholds,
        "robust_crossing": table.estimates,
    });
    sink.summary(&manifest, &args, &result)
}

pub fn pc(a: PcArgs) -> Result<()> {
    let settings = Settings::resolve(&a.common, &[0.5])?;
    let bracket = (a.bracket[0], a.bracket[1]);
    let args = RunArgs {
        command: "pc",
        settings: &settings,
        extra: json!({ "s": a.s, "bracket": a.bracket, "tolerance": a.tolerance }),
    };
    let manifest = Manifest::new(settings.seed, &args)?;
    let sink = Sink::new(a.common.out.as_deref())?;
    let setup = settings.setup();
    let est = settings.install(|| estimate_pc(&setup, a.s, settings.trials, bracket, a.tolerance, settings.seed))??;
    let rows = est.points.iter().map(|(p, e)| {
        vec![
            fmt(*p),
            e.successes.to_string(),
            e.n_trials.to_string(),
            fmt(e.phat),
            fmt(e.ci_low),
            fmt(e.ci_high),
        ]
    });
    let doc = csv_document(&manifest, &["p", "successes", "trials", "phat", "ci_low", "ci_high"], rows)?;
    sink.file("pc_points.csv", doc.as_bytes())?;
    sink.summary(&manifest, &args, &est)
}

pub fn rsw(a: RswArgs) -> Result<()> {
    let settings = Settings::resolve(&a.common, &[0.5])?;
    let args = RunArgs {
        command: "rsw",
        settings: &settings,
        extra: json!({ "s": a.s, "aspect": a.aspect, "floor": a.floor }),
    };
    let manifest = Manifest::new(settings.seed, &args)?;
    let sink = Sink::new(a.common.out.as_deref())?;
    let setup = settings.setup();
    let report =
        settings.install(|| rsw_check(&setup, &a.s, a.aspect, settings.trials, a.floor, settings.seed))??;
    let rows = report.rows.iter().map(|r| {
        vec![
            fmt(r.s),
            fmt(r.black_long.phat),
            fmt(r.black_long.ci_low),
            fmt(r.black_long.ci_high),
            fmt(r.white_short.phat),
        ]
    });
    let doc = csv_document(&manifest, &["s", "phat", "ci_low", "ci_high", "white_vertical"], rows)?;
    sink.file("rsw.csv", doc.as_bytes())?;
    sink.summary(&manifest, &args, &report)
}

const SANDWICH_HEADER: [&str; 5] = ["seed", "p", "k", "robust_crossing", "continuum_crossing"];

fn sandwich_rows(t: &confetti::harness::SandwichTable) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for trial in &t.trials {
        for (k, hit) in t.k_values.iter().zip(&trial.robust) {
            rows.push(vec![
                trial.seed.to_string(),
                fmt(t.p),
                k.to_string(),
                bit(*hit),
                bit(trial.continuum),
            ]);
        }
    }
    rows
}

fn sandwich_csv(manifest: &Manifest, t: &confetti::harness::SandwichTable) -> Result<String> {
    csv_document(manifest, &SANDWICH_HEADER, sandwich_rows(t))
}

pub fn discretize_compare(a: CompareArgs) -> Result<()> {
    let settings = Settings::resolve(&a.common, &[0.5])?;
    let p = settings.single_p()?;
    let rect = rect_or(&settings, Rect::centered(a.side, a.side));
    let args = RunArgs {
        command: "discretize-compare",
        settings: &settings,
        extra: json!({ "side": a.side, "k": a.k, "rect": rect }),
    };
    let manifest = Manifest::new(settings.seed, &args)?;
    let sink = Sink::new(a.common.out.as_deref())?;
    let setup = settings.setup();
    let table = settings.install(|| run_compare(&setup, rect, p, &a.k, settings.trials, settings.seed))??;
    sink.file("discretize.csv", sandwich_csv(&manifest, &table)?.as_bytes())?;
    let result = json!({
        "rect": rect,
        "p": p,
        "k": table.k_values,
        "robust": table.robust_estimates,
        "continuum": table.continuum_estimate,
        "gaps": (0..table.k_values.len()).map(|j| table.gap(j)).collect::<Vec<_>>(),
    });
    sink.summary(&manifest, &args, &result)
}

pub fn render(a: RenderArgs) -> Result<()> {
    let settings = Settings::resolve(&a.common, &[0.25, 0.5, 0.75])?;
    let region = rect_or(&settings, Rect::centered(a.s, a.s));
    let args = RunArgs {
        command: "render",
        settings: &settings,
        extra: json!({ "s": a.s, "pixels_per_unit": a.pixels_per_unit, "svg": a.svg, "region": region }),
    };
    let manifest = Manifest::new(settings.seed, &args)?;
    let sink = Sink::new(a.common.out.as_deref())?;
    let config = settings.setup().sample(region, settings.seed)?;
    let mut files = Vec::new();
    for &p in &settings.p {
        let ppm = render_ppm(&config, p, region, a.pixels_per_unit)?;
        // the manifest rides in a PPM comment right after the magic number
        let mut bytes = format!("P6\n{}\n", manifest.comment_line()).into_bytes();
        bytes.extend_from_slice(&ppm[3..]);
        let name = format!("confetti_p{p}.ppm");
        sink.file(&name, &bytes)?;
        files.push(name);
        if a.svg {
            let svg = render_svg(&config, p, region, a.pixels_per_unit)?;
            let name = format!("confetti_p{p}.svg");
            let text = format!("<!-- {} -->\n{svg}", manifest.comment_line().trim_start_matches("# "));
            sink.file(&name, text.as_bytes())?;
            files.push(name);
        }
    }
    sink.summary(&manifest, &args, &json!({ "region": region, "leaves": config.len(), "files": files }))
}

fn parse_function(text: &str, n_hint: Option<usize>) -> Result<BooleanFunction> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    if name == "table" {
        let path = arg.ok_or_else(|| ConfettiError::InvalidParams("table needs a file: table:<hexfile>".into()))?;
        let text = fs::read_to_string(path)
            .map_err(|e| ConfettiError::InvalidParams(format!("cannot read {path}: {e}")))?;
        return BooleanFunction::from_hex(&text);
    }
    let n = match arg {
        Some(a) => a
            .parse::<usize>()
            .map_err(|_| ConfettiError::InvalidParams(format!("bad arity '{a}'")))?,
        None => n_hint.ok_or_else(|| {
            ConfettiError::InvalidParams(format!("give the arity as {name}:<n> or pass one p per coordinate"))
        })?,
    };
    match name {
        "dictator" => BooleanFunction::dictator(n, 0),
        "or" => BooleanFunction::or(n),
        "and" => BooleanFunction::and(n),
        "majority" => BooleanFunction::majority(n),
        "parity" => BooleanFunction::parity(n),
        other => Err(ConfettiError::InvalidParams(format!("unknown function '{other}'"))),
    }
}

pub fn threshold(a: ThresholdArgs) -> Result<()> {
    let hint = (a.p.len() > 1).then_some(a.p.len());
    let f = parse_function(&a.function, hint)?;
    let p = match a.p.as_slice() {
        [single] => vec![*single; f.n()],
        many => many.to_vec(),
    };
    let mu = ProductMeasure::new(p)?;
    let boosters = match &a.boosters {
        Some(text) => {
            let (k, tau) = text
                .split_once(',')
                .ok_or_else(|| ConfettiError::InvalidParams("--boosters expects K,tau".into()))?;
            let k: usize = k.trim().parse().map_err(|_| ConfettiError::InvalidParams(format!("bad K '{k}'")))?;
            let tau: f64 =
                tau.trim().parse().map_err(|_| ConfettiError::InvalidParams(format!("bad tau '{tau}'")))?;
            Some(find_boosters(&f, &mu, k, tau)?)
        }
        None => None,
    };
    let monotone = f.up_set_check();
    let flips = (0..f.n()).map(|i| resample_flip_prob(&f, &mu, i)).collect::<Result<Vec<_>>>()?;
    let (derivatives, identity) = if monotone {
        let d = (0..f.n()).map(|i| pivotal_derivative(&f, &mu, i)).collect::<Result<Vec<_>>>()?;
        let (lhs, rhs) = influence_identity_check(&f, &mu)?;
        (Some(d), Some(json!({ "total_influence": lhs, "weighted_derivative_sum": rhs })))
    } else {
        (None, None)
    };
    let args = json!({
        "command": "threshold",
        "function": a.function,
        "p": mu.probs(),
        "boosters": a.boosters,
    });
    let result = json!({
        "n": f.n(),
        "table_hex": f.to_hex(),
        "monotone": monotone,
        "prob": prob(&f, &mu)?,
        "resample_flip_prob": flips,
        "total_influence": total_influence(&f, &mu)?,
        "pivotal_derivative": derivatives,
        "influence_identity": identity,
        "boosters": boosters,
    });
    let manifest = Manifest::new(0, &args)?;
    let sink = Sink::new(a.out.as_deref())?;
    sink.summary(&manifest, &args, &result)
}
