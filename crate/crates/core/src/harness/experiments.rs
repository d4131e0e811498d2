//! Coupled Monte Carlo experiments on crossing events.
//!
//! Every trial draws one configuration from a seed derived from the master
//! seed and the trial index; all parameters of a sweep are then read off that
//! configuration by mark thresholding. Trials run on the ambient rayon pool
//! and are collected in index order, so results do not depend on the number
//! of workers.

use rayon::prelude::*;
use serde::Serialize;

use super::stats::{bootstrap_midpoint_ci, logistic_midpoint, DesignPoint, Estimate};
use crate::crossing::{crossing_result, has_crossing, CrossingResult, Direction, LeafRaster};
use crate::discretize::{robust_crossing, CubeGrid};
use crate::error::{ConfettiError, Result};
use crate::geometry::Rect;
use crate::model::{sample_configuration, Color, ColorParams, Configuration, DepthPolicy, InterpolationPath};
use crate::rng::derive_seed;
use crate::shape::{ConfettiShape, Footprint};

/// Bootstrap resamples used for the critical-point interval.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// How each trial samples and rasterizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialSetup {
    pub shape: ConfettiShape,
    /// Total intensity `λ_b + λ_w`.
    pub lambda: f64,
    pub pitch: f64,
    pub depth: DepthPolicy,
    /// Fail the run when a raster violates black-8/white-4 duality.
    pub assert_duality: bool,
}

impl Default for TrialSetup {
    fn default() -> Self {
        TrialSetup {
            shape: ConfettiShape::UnitDisk,
            lambda: 2.0,
            pitch: 0.05,
            depth: DepthPolicy::Auto,
            assert_duality: false,
        }
    }
}

impl TrialSetup {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(ConfettiError::InvalidParams(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(ConfettiError::InvalidParams(format!("pitch must be positive, got {}", self.pitch)));
        }
        Ok(())
    }

    /// One configuration over `window`; colours are applied later by threshold.
    pub fn sample(&self, window: Rect, seed: u64) -> Result<Configuration> {
        let params = ColorParams::from_lambda_p(self.lambda, 0.5)?;
        sample_configuration(window, self.shape, params, seed, self.depth)
    }

    fn with_min_depth(&self, min_depth: f64) -> TrialSetup {
        let auto = 8.0 / (self.lambda * self.shape.area());
        let current = match self.depth {
            DepthPolicy::Auto => auto,
            DepthPolicy::Fixed(t) => t,
        };
        TrialSetup {
            depth: DepthPolicy::Fixed(current.max(min_depth)),
            ..*self
        }
    }
}

/// Experiment description shared by the command-line front end.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentPlan {
    pub setup: TrialSetup,
    /// Width over height of the crossing rectangle.
    pub rect_aspect: f64,
    pub s_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub t_values: Vec<f64>,
    pub k_values: Vec<u32>,
    pub trials: u64,
    pub master_seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.setup.validate()?;
        if self.trials == 0 {
            return Err(ConfettiError::InvalidParams("trials must be at least 1".into()));
        }
        if !(self.rect_aspect > 0.0 && self.rect_aspect.is_finite()) {
            return Err(ConfettiError::InvalidParams(format!("aspect must be positive, got {}", self.rect_aspect)));
        }
        check_ascending("s", &self.s_values)?;
        check_ascending("p", &self.p_values)?;
        check_ascending("t", &self.t_values)?;
        if self.k_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfettiError::InvalidParams("k values must be strictly ascending".into()));
        }
        if let Some(s) = self.s_values.iter().find(|s| !(**s > 0.0)) {
            return Err(ConfettiError::InvalidParams(format!("scale must be positive, got {s}")));
        }
        if let Some(p) = self.p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ConfettiError::InvalidParams(format!("p must lie in [0, 1], got {p}")));
        }
        if let Some(t) = self.t_values.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(ConfettiError::InvalidParams(format!("t must lie in [0, 1], got {t}")));
        }
        Ok(())
    }
}

fn check_ascending(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] > w[1]) {
        return Err(ConfettiError::InvalidParams(format!("{name} values must be finite and ascending")));
    }
    Ok(())
}

/// `[0, aspect·s] × [0, s]`.
pub fn crossing_rect(s: f64, aspect: f64) -> Rect {
    Rect::from_size(aspect * s, s)
}

fn run_trials<T: Send>(trials: u64, seed: u64, f: impl Fn(u64, u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..trials)
        .into_par_iter()
        .map(|i| f(i, derive_seed(seed, i)))
        .collect()
}

/// Per-trial crossing outcomes on one configuration at every `p`.
pub fn crossing_trial(setup: &TrialSetup, rect: Rect, p_values: &[f64], seed: u64) -> Result<Vec<CrossingResult>> {
    let mut config = setup.sample(rect, seed)?;
    let raster = LeafRaster::paint(&mut config, rect, setup.pitch)?;
    p_values
        .iter()
        .map(|&p| {
            let r = crossing_result(&raster.threshold(p));
            if setup.assert_duality {
                r.check_duality()?;
            }
            Ok(r)
        })
        .collect()
}

/// One row of trial output: the trial seed and its outcome at each `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub results: Vec<CrossingResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rect: Rect,
    pub p_values: Vec<f64>,
    pub trials: Vec<TrialRecord>,
    /// Black horizontal crossing estimate at each `p`.
    pub estimates: Vec<Estimate>,
}

impl SweepTable {
    /// Estimate of an arbitrary per-trial event at column `j`.
    pub fn estimate_by(&self, j: usize, event: impl Fn(&CrossingResult) -> bool) -> Estimate {
        let hits = self.trials.iter().filter(|t| event(&t.results[j])).count() as u64;
        Estimate::from_counts(hits, self.trials.len() as u64)
    }
}

/// Black-increasing events must not switch off, and white ones must not switch
/// on, as `p` increases on a fixed trial.
fn assert_monotone(trial: u64, p_values: &[f64], results: &[CrossingResult]) -> Result<()> {
    for (j, w) in results.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let black_ok = (!a.black_horizontal || b.black_horizontal) && (!a.black_vertical || b.black_vertical);
        let white_ok = (a.white_horizontal || !b.white_horizontal) && (a.white_vertical || !b.white_vertical);
        if !(black_ok && white_ok) {
            return Err(ConfettiError::MonotonicityViolation(format!(
                "trial {trial}: crossing indicators not monotone between p = {} and p = {}",
                p_values[j],
                p_values[j + 1]
            )));
        }
    }
    Ok(())
}

/// All `p` evaluated on the same configurations; fails on any monotonicity violation.
pub fn coupled_sweep(setup: &TrialSetup, rect: Rect, p_values: &[f64], trials: u64, seed: u64) -> Result<SweepTable> {
    setup.validate()?;
    check_ascending("p", p_values)?;
    if p_values.is_empty() || trials == 0 {
        return Err(ConfettiError::InvalidParams("need at least one p value and one trial".into()));
    }
    let records = run_trials(trials, seed, |i, trial_seed| {
        let results = crossing_trial(setup, rect, p_values, trial_seed)?;
        assert_monotone(i, p_values, &results)?;
        Ok(TrialRecord { seed: trial_seed, results })
    })?;
    let mut table = SweepTable {
        rect,
        p_values: p_values.to_vec(),
        trials: records,
        estimates: Vec::new(),
    };
    table.estimates = (0..p_values.len())
        .map(|j| table.estimate_by(j, |r| r.black_horizontal))
        .collect();
    Ok(table)
}

/// Probability of a black horizontal crossing of `rect` at `p`.
pub fn estimate_crossing_prob(setup: &TrialSetup, rect: Rect, p: f64, trials: u64, seed: u64) -> Result<Estimate> {
    Ok(coupled_sweep(setup, rect, &[p], trials, seed)?.estimates[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustSweepTable {
    pub rect: Rect,
    pub k: u32,
    pub t_values: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// `indicators[trial][j]`: robust black horizontal crossing at `t_values[j]`.
    pub indicators: Vec<Vec<bool>>,
    pub estimates: Vec<Estimate>,
}

/// Robust `k`-level crossing probability along the interpolation path towards
/// `p_target`, with the `(aspect·s) × s` rectangle centred at the origin.
#[allow(clippy::too_many_arguments)]
pub fn estimate_f(
    setup: &TrialSetup,
    t_values: &[f64],
    p_target: f64,
    s: f64,
    aspect: f64,
    k: u32,
    trials: u64,
    seed: u64,
) -> Result<RobustSweepTable> {
    setup.validate()?;
    check_ascending("t", t_values)?;
    if !(p_target > 0.5 && p_target <= 1.0) {
        return Err(ConfettiError::InvalidParams(format!("p_target must lie in (1/2, 1], got {p_target}")));
    }
    let path = InterpolationPath::new(p_target)?;
    let setup = TrialSetup { lambda: 2.0, ..setup.with_min_depth(k as f64) };
    let rect = Rect::centered(aspect * s, s);
    let thresholds: Vec<f64> = t_values.iter().map(|&t| path.threshold(t)).collect();
    let indicators = run_trials(trials, seed, |i, trial_seed| {
        let config = setup.sample(rect, trial_seed)?;
        let row = thresholds
            .iter()
            .map(|&p| {
                let grid = CubeGrid::from_configuration(&config, p, k)?;
                robust_crossing(&grid, &setup.shape, rect, Direction::Horizontal, Color::Black, setup.pitch)
            })
            .collect::<Result<Vec<bool>>>()?;
        if let Some(j) = row.windows(2).position(|w| w[0] && !w[1]) {
            return Err(ConfettiError::MonotonicityViolation(format!(
                "trial {i}: robust crossing lost between t = {} and t = {}",
                t_values[j],
                t_values[j + 1]
            )));
        }
        Ok(row)
    })?;
    let n = indicators.len() as u64;
    let estimates = (0..t_values.len())
        .map(|j| Estimate::from_counts(indicators.iter().filter(|r| r[j]).count() as u64, n))
        .collect();
    Ok(RobustSweepTable {
        rect,
        k,
        t_values: t_values.to_vec(),
        thresholds,
        indicators,
        estimates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichTrial {
    pub seed: u64,
    /// Robust crossing at each `k`, ascending.
    pub robust: Vec<bool>,
    pub continuum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichTable {
    pub rect: Rect,
    pub p: f64,
    pub k_values: Vec<u32>,
    pub trials: Vec<SandwichTrial>,
    pub robust_estimates: Vec<Estimate>,
    pub continuum_estimate: Estimate,
}

impl SandwichTable {
    /// `P̂(continuum) − P̂(robust at k_values[j])`.
    pub fn gap(&self, j: usize) -> f64 {
        self.continuum_estimate.phat - self.robust_estimates[j].phat
    }
}

/// Robust crossings at increasing `k` against the continuum crossing of `rect`
/// (centred at the origin), all probed at the same cell centres. Fails if
/// `robust(k) ≤ robust(k') ≤ continuum` is ever violated.
pub fn discretize_compare(
    setup: &TrialSetup,
    rect: Rect,
    p: f64,
    k_values: &[u32],
    trials: u64,
    seed: u64,
) -> Result<SandwichTable> {
    setup.validate()?;
    if k_values.is_empty() || k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfettiError::InvalidParams("k values must be non-empty and strictly ascending".into()));
    }
    let k_max = *k_values.last().unwrap();
    let setup = setup.with_min_depth(k_max as f64);
    let records = run_trials(trials, seed, |i, trial_seed| {
        let mut config = setup.sample(rect, trial_seed)?;
        let robust = k_values
            .iter()
            .map(|&k| {
                let grid = CubeGrid::from_configuration(&config, p, k)?;
                robust_crossing(&grid, &setup.shape, rect, Direction::Horizontal, Color::Black, setup.pitch)
            })
            .collect::<Result<Vec<bool>>>()?;
        let raster = LeafRaster::paint(&mut config, rect, setup.pitch)?;
        let continuum = has_crossing(&raster.threshold(p), Direction::Horizontal, Color::Black);
        let chain_ok = robust.windows(2).all(|w| !w[0] || w[1]) && (!robust[robust.len() - 1] || continuum);
        if !chain_ok {
            return Err(ConfettiError::MonotonicityViolation(format!(
                "trial {i}: sandwich violated, robust {robust:?}, continuum {continuum}"
            )));
        }
        Ok(SandwichTrial {
            seed: trial_seed,
            robust,
            continuum,
        })
    })?;
    let n = records.len() as u64;
    let robust_estimates = (0..k_values.len())
        .map(|j| Estimate::from_counts(records.iter().filter(|r| r.robust[j]).count() as u64, n))
        .collect();
    let continuum_estimate = Estimate::from_counts(records.iter().filter(|r| r.continuum).count() as u64, n);
    Ok(SandwichTable {
        rect,
        p,
        k_values: k_values.to_vec(),
        trials: records,
        robust_estimates,
        continuum_estimate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcEstimate {
    pub pc_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    /// Every evaluated `p` with its estimate, in evaluation order.
    pub points: Vec<(f64, Estimate)>,
    /// False when the logistic fit failed and `pc_hat` is the bracket midpoint.
    pub logistic: bool,
}

/// Bisection for the point where `oracle(p, step)` crosses ½, refined by a
/// logistic fit through every evaluated point. `step` numbers the evaluations
/// so the oracle can derive independent seeds.
pub fn estimate_pc_with(
    mut oracle: impl FnMut(f64, u64) -> Result<Estimate>,
    bracket: (f64, f64),
    tolerance: f64,
    seed: u64,
) -> Result<PcEstimate> {
    if !(tolerance >= 0.005) {
        return Err(ConfettiError::InvalidParams(format!("tolerance must be at least 0.005, got {tolerance}")));
    }
    let (mut lo, mut hi) = bracket;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(ConfettiError::InvalidParams(format!("bad bracket [{lo}, {hi}]")));
    }
    let mut points = Vec::new();
    let mut step = 0u64;
    let mut eval = |p: f64, points: &mut Vec<(f64, Estimate)>| -> Result<f64> {
        let e = oracle(p, step)?;
        step += 1;
        points.push((p, e));
        Ok(e.phat)
    };
    let f_lo = eval(lo, &mut points)?;
    let f_hi = eval(hi, &mut points)?;
    if !(f_lo < 0.5 && f_hi > 0.5) {
        return Err(ConfettiError::Bracketing(format!(
            "estimates {f_lo} at p = {lo} and {f_hi} at p = {hi} do not straddle 1/2"
        )));
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if eval(mid, &mut points)? < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let design: Vec<DesignPoint> = points
        .iter()
        .map(|(x, e)| DesignPoint { x: *x, successes: e.successes, n: e.n_trials })
        .collect();
    let midpoint = 0.5 * (lo + hi);
    let fitted = logistic_midpoint(&design).filter(|m| (bracket.0..=bracket.1).contains(m));
    let (pc_hat, ci) = match fitted {
        Some(m) => (m, bootstrap_midpoint_ci(&design, BOOTSTRAP_RESAMPLES, derive_seed(seed, u64::MAX))),
        None => (midpoint, None),
    };
    let (ci_low, ci_high) = ci.unwrap_or((lo, hi));
    Ok(PcEstimate {
        pc_hat,
        ci_low: ci_low.min(pc_hat),
        ci_high: ci_high.max(pc_hat),
        bracket: (lo, hi),
        points,
        logistic: fitted.is_some(),
    })
}

/// Critical point from square (`s × s`) black horizontal crossings.
pub fn estimate_pc(
    setup: &TrialSetup,
    s: f64,
    trials_per_point: u64,
    bracket: (f64, f64),
    tolerance: f64,
    seed: u64,
) -> Result<PcEstimate> {
    setup.validate()?;
    let rect = crossing_rect(s, 1.0);
    estimate_pc_with(
        |p, step| estimate_crossing_prob(setup, rect, p, trials_per_point, derive_seed(seed, step)),
        bracket,
        tolerance,
        seed,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RswRow {
    pub s: f64,
    /// Black horizontal crossing of `(aspect·s) × s` at `p = ½`.
    pub black_long: Estimate,
    /// White vertical crossing of the same rectangle; the complement of `black_long`.
    pub white_short: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RswReport {
    pub rows: Vec<RswRow>,
    pub floor: f64,
    pub all_above_floor: bool,
}

pub const DEFAULT_RSW_FLOOR: f64 = 0.02;

/// Long-direction crossings at `p = ½` across scales.
pub fn rsw_check(setup: &TrialSetup, s_values: &[f64], aspect: f64, trials: u64, floor: f64, seed: u64) -> Result<RswReport> {
    let rows = s_values
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let table = coupled_sweep(setup, crossing_rect(s, aspect), &[0.5], trials, derive_seed(seed, i as u64))?;
            Ok(RswRow {
                s,
                black_long: table.estimates[0],
                white_short: table.estimate_by(0, |r| r.white_vertical),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_above_floor = rows.iter().all(|r| r.black_long.phat > floor);
    Ok(RswReport {
        rows,
        floor,
        all_above_floor,
    })
}

/// `theta ≥ threshold` (closed comparison).
pub fn percolation_certificate(theta: f64, threshold: f64) -> bool {
    theta >= threshold
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarrisRow {
    pub p: f64,
    pub first: Estimate,
    pub second: Estimate,
    pub both: Estimate,
    /// Standard error of the joint estimate.
    pub se: f64,
}

impl HarrisRow {
    /// `P̂(E₁∩E₂) ≥ P̂(E₁)P̂(E₂) − slack·SE`.
    pub fn holds(&self, slack: f64) -> bool {
        self.both.phat >= self.first.phat * self.second.phat - slack * self.se
    }
}

/// Joint and marginal black horizontal crossings of two rectangles sampled in
/// one configuration, at each `p`.
pub fn harris_check(
    setup: &TrialSetup,
    first: Rect,
    second: Rect,
    p_values: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<HarrisRow>> {
    setup.validate()?;
    let window = Rect::new(
        first.x0.min(second.x0),
        first.y0.min(second.y0),
        first.x1.max(second.x1),
        first.y1.max(second.y1),
    );
    let outcomes = run_trials(trials, seed, |_, trial_seed| {
        let mut config = setup.sample(window, trial_seed)?;
        let r1 = LeafRaster::paint(&mut config, first, setup.pitch)?;
        let r2 = LeafRaster::paint(&mut config, second, setup.pitch)?;
        Ok(p_values
            .iter()
            .map(|&p| {
                (
                    has_crossing(&r1.threshold(p), Direction::Horizontal, Color::Black),
                    has_crossing(&r2.threshold(p), Direction::Horizontal, Color::Black),
                )
            })
            .collect::<Vec<_>>())
    })?;
    let n = outcomes.len() as u64;
    Ok(p_values
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let count = |f: &dyn Fn(bool, bool) -> bool| {
                outcomes.iter().filter(|o| f(o[j].0, o[j].1)).count() as u64
            };
            let both = Estimate::from_counts(count(&|a, b| a && b), n);
            HarrisRow {
                p,
                first: Estimate::from_counts(count(&|a, _| a), n),
                second: Estimate::from_counts(count(&|_, b| b), n),
                se: both.std_error(),
                both,
            }
        })
        .collect())
}
