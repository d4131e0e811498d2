//! Merging of `--config` files with command-line flags.

use std::fs;
use std::path::Path;

use confetti::harness::TrialSetup;
use confetti::{ConfettiError, ConfettiShape, DepthPolicy, Rect, Result};
use serde::{Deserialize, Serialize};

use crate::Common;

/// Contents of a `--config` JSON file. Flags given on the command line win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub shape: Option<ConfettiShape>,
    pub lambda: Option<f64>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub p: Option<Vec<f64>>,
    pub window: Option<Rect>,
    pub seed: Option<u64>,
    pub depth_policy: Option<DepthPolicy>,
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(Option::<OneOrMany>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    }))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfettiError::InvalidParams(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ConfettiError::InvalidParams(format!("bad config {}: {e}", path.display())))
    }
}

/// Fully resolved run parameters; this is what summaries record and hash.
/// Worker count and output directory are left out so they cannot change outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub shape: ConfettiShape,
    pub lambda: f64,
    pub p: Vec<f64>,
    pub window: Option<Rect>,
    pub seed: u64,
    pub depth_policy: DepthPolicy,
    pub pitch: f64,
    pub trials: u64,
    pub assert_duality: bool,
    #[serde(skip)]
    pub workers: Option<usize>,
}

pub const DEFAULT_TRIALS: u64 = 1000;

impl Settings {
    pub fn resolve(common: &Common, default_p: &[f64]) -> Result<Settings> {
        let file = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let (lambda, p) = match (common.lambda_black, common.lambda_white) {
            (Some(lb), Some(lw)) => {
                let params = confetti::ColorParams::new(lb, lw)?;
                (params.lambda_total(), vec![params.p()])
            }
            _ => {
                let lambda = common.lambda.or(file.lambda).unwrap_or(2.0);
                let p = if !common.p.is_empty() {
                    common.p.clone()
                } else {
                    file.p.unwrap_or_else(|| default_p.to_vec())
                };
                (lambda, p)
            }
        };
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ConfettiError::InvalidParams(format!("p must lie in [0, 1], got {bad}")));
        }
        if p.windows(2).any(|w| w[0] > w[1]) {
            return Err(ConfettiError::InvalidParams("p values must be ascending".into()));
        }
        if common.workers == Some(0) {
            return Err(ConfettiError::InvalidParams("workers must be at least 1".into()));
        }
        let settings = Settings {
            shape: common.shape.or(file.shape).unwrap_or_default(),
            lambda,
            p,
            window: file.window,
            seed: common.seed.or(file.seed).unwrap_or(0),
            depth_policy: file.depth_policy.unwrap_or_default(),
            pitch: common.pitch.unwrap_or(0.05),
            trials: common.trials.unwrap_or(DEFAULT_TRIALS),
            assert_duality: common.assert_duality,
            workers: common.workers,
        };
        if settings.trials == 0 {
            return Err(ConfettiError::InvalidParams("trials must be at least 1".into()));
        }
        settings.setup().validate()?;
        Ok(settings)
    }

    pub fn setup(&self) -> TrialSetup {
        TrialSetup {
            shape: self.shape,
            lambda: self.lambda,
            pitch: self.pitch,
            depth: self.depth_policy,
            assert_duality: self.assert_duality,
        }
    }

    pub fn single_p(&self) -> Result<f64> {
        match self.p.as_slice() {
            [p] => Ok(*p),
            other => Err(ConfettiError::InvalidParams(format!(
                "expected a single p, got {} values",
                other.len()
            ))),
        }
    }

    /// Runs `f` on a pool of the requested size.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.workers {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| ConfettiError::InvalidParams(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}
