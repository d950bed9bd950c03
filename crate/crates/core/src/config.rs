//! Evaluation settings, read from the JSON file passed with `--config`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{AlphaGrid, MetricGrid, ZeroCoverageFallback};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    pub bootstrap_iters: usize,
    pub probe_c: f64,
    pub folds: usize,
    pub high_trust_alpha: f64,
    pub tce_fallback: ZeroCoverageFallback,
    /// Also fit MLP combiners and report the LR-vs-MLP AUROC ablation.
    pub combiner_ablation: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            alpha_min: 0.05,
            alpha_max: 0.30,
            alpha_step: 0.01,
            bootstrap_iters: 200,
            probe_c: 0.1,
            folds: 5,
            high_trust_alpha: 0.15,
            tce_fallback: ZeroCoverageFallback::PerAlpha,
            combiner_ablation: true,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha_grid().points()?;
        if self.bootstrap_iters == 0 {
            return Err(Error::invalid("bootstrap_iters must be at least 1"));
        }
        if !(self.probe_c > 0.0 && self.probe_c.is_finite()) {
            return Err(Error::invalid("probe_c must be positive"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("folds must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.high_trust_alpha) {
            return Err(Error::invalid("high_trust_alpha must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn alpha_grid(&self) -> AlphaGrid {
        AlphaGrid {
            min: self.alpha_min,
            max: self.alpha_max,
            step: self.alpha_step,
        }
    }

    pub fn metric_grid(&self) -> MetricGrid {
        MetricGrid {
            alpha: self.alpha_grid(),
            bootstrap_iters: self.bootstrap_iters,
            fallback: self.tce_fallback,
        }
    }
}
