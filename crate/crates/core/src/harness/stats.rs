//! Proportion intervals, logistic fitting, and a parametric bootstrap.

use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::rng::{derive_seed, rng_from_seed};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A proportion with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub phat: f64,
    pub successes: u64,
    pub n_trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn from_counts(successes: u64, n_trials: u64) -> Estimate {
        assert!(successes <= n_trials && n_trials > 0, "{successes}/{n_trials}");
        let phat = successes as f64 / n_trials as f64;
        let (lo, hi) = wilson_interval(successes, n_trials, Z95);
        Estimate {
            phat,
            successes,
            n_trials,
            ci_low: lo.min(phat),
            ci_high: hi.max(phat),
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    /// Binomial standard error `sqrt(p(1-p)/n)`.
    pub fn std_error(&self) -> f64 {
        (self.phat * (1.0 - self.phat) / self.n_trials as f64).sqrt()
    }
}

pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Binomial observations at a design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignPoint {
    pub x: f64,
    pub successes: u64,
    pub n: u64,
}

/// Maximum-likelihood fit of `P(x) = 1 / (1 + exp(-(a + b x)))`.
///
/// Returns `(a, b)`, or `None` when the likelihood has no finite maximiser
/// (perfect separation) or Newton's method fails to converge.
pub fn logistic_mle(points: &[DesignPoint]) -> Option<(f64, f64)> {
    let loglik = |a: f64, b: f64| -> f64 {
        points
            .iter()
            .map(|pt| {
                let eta = a + b * pt.x;
                // log σ(η) = -softplus(-η), log(1-σ(η)) = -softplus(η)
                -(pt.successes as f64) * softplus(-eta) - ((pt.n - pt.successes) as f64) * softplus(eta)
            })
            .sum()
    };
    let total: u64 = points.iter().map(|p| p.n).sum();
    let succ: u64 = points.iter().map(|p| p.successes).sum();
    if total == 0 || succ == 0 || succ == total {
        return None;
    }
    let mut a = ((succ as f64) / (total - succ) as f64).ln();
    let mut b = 0.0;
    let mut current = loglik(a, b);
    for _ in 0..200 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for pt in points {
            let mu = sigmoid(a + b * pt.x);
            let n = pt.n as f64;
            let r = pt.successes as f64 - n * mu;
            let w = n * mu * (1.0 - mu);
            ga += r;
            gb += r * pt.x;
            haa += w;
            hab += w * pt.x;
            hbb += w * pt.x * pt.x;
        }
        let det = haa * hbb - hab * hab;
        if !(det.abs() > 1e-300) {
            return None;
        }
        let da = (hbb * ga - hab * gb) / det;
        let db = (haa * gb - hab * ga) / det;
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let next = loglik(na, nb);
            if next >= current - 1e-12 {
                let gain = next - current;
                a = na;
                b = nb;
                current = next;
                accepted = true;
                if gain.abs() < 1e-12 && (step * da).abs() < 1e-10 && (step * db).abs() < 1e-8 {
                    return finite(a, b);
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return finite(a, b);
        }
        if b.abs() > 1e6 {
            return None;
        }
    }
    finite(a, b)
}

fn finite(a: f64, b: f64) -> Option<(f64, f64)> {
    (a.is_finite() && b.is_finite() && b != 0.0).then_some((a, b))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Crossing point `x` with fitted probability ½.
pub fn logistic_midpoint(points: &[DesignPoint]) -> Option<f64> {
    logistic_mle(points).map(|(a, b)| -a / b)
}

/// Percentile interval of the fitted midpoint under parametric resampling of
/// every design point's count from `Bin(n, phat)`.
pub fn bootstrap_midpoint_ci(points: &[DesignPoint], resamples: usize, seed: u64) -> Option<(f64, f64)> {
    let mut fits = Vec::with_capacity(resamples);
    for b in 0..resamples {
        let mut rng = rng_from_seed(derive_seed(seed, b as u64));
        let resampled: Vec<DesignPoint> = points
            .iter()
            .map(|pt| {
                let phat = pt.successes as f64 / pt.n as f64;
                let draw = Binomial::new(pt.n, phat).expect("valid binomial").sample(&mut rng);
                DesignPoint { successes: draw, ..*pt }
            })
            .collect();
        if let Some(m) = logistic_midpoint(&resampled) {
            fits.push(m);
        }
    }
    if fits.len() * 2 < resamples.max(1) {
        return None;
    }
    fits.sort_by(f64::total_cmp);
    Some((quantile(&fits, 0.025), quantile(&fits, 0.975)))
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
