//! Experiment configuration, read from TOML.
//!
//! ```toml
//! kernel = "doob"          # doob | bdg
//! n_steps = 64
//! n_trials = 100000
//! seed = 7
//! parallel = true
//! output_dir = "out"
//! slack_sigmas = 3.0
//!
//! [law]
//! kind = "gaussian"        # gaussian (sigma) | rademacher | uniform (half_width)
//! sigma = 1.0
//!
//! [moments]
//! p_grid = [2.0, 3.0, 4.0, 6.0, 8.0]   # default for doob; bdg uses [2, 4, 6]
//!
//! [tail]
//! fit_p_min = 2.0
//! fit_p_max = 16.0
//! fit_points = 16
//! p0 = 2.0
//! t_grid_points = 32
//! upper_quantile = 0.999
//! min_exceedances = 50
//! fenchel_p_grid = 512
//! y_points = 400
//! ```
//!
//! Every key is optional; missing keys take the defaults shown.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::descriptor::parse_kernel;
use crate::error::{Error, Result};
use crate::harness::simulate::{IncrementLaw, SimulationConfig};

/// Verification runs need at least this many trials.
pub const MIN_VERIFICATION_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: String,
    pub law: IncrementLaw,
    pub n_steps: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub parallel: bool,
    pub output_dir: PathBuf,
    pub slack_sigmas: f64,
    pub moments: MomentSettings,
    pub tail: TailSettings,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentSettings {
    /// `None` selects the kernel's default grid.
    pub p_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailSettings {
    /// Window for the least-squares fit of `ln |ξ_n|_p ≈ a + (1/m) ln p`.
    pub fit_p_min: f64,
    pub fit_p_max: f64,
    pub fit_points: usize,
    /// `p₀` of the transfer kernel.
    pub p0: f64,
    pub t_grid_points: usize,
    pub upper_quantile: f64,
    pub min_exceedances: usize,
    pub fenchel_p_grid: usize,
    pub y_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kernel: "doob".into(),
            law: IncrementLaw::Gaussian { sigma: 1.0 },
            n_steps: 64,
            n_trials: 100_000,
            seed: 7,
            parallel: true,
            output_dir: PathBuf::from("."),
            slack_sigmas: 3.0,
            moments: MomentSettings::default(),
            tail: TailSettings::default(),
        }
    }
}

impl Default for TailSettings {
    fn default() -> Self {
        Self {
            fit_p_min: 2.0,
            fit_p_max: 16.0,
            fit_points: 16,
            p0: 2.0,
            t_grid_points: 32,
            upper_quantile: 0.999,
            min_exceedances: 50,
            fenchel_p_grid: 512,
            y_points: 400,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for the BDG run.
    pub fn bdg_defaults() -> Self {
        Self {
            kernel: "bdg".into(),
            ..Self::default()
        }
    }

    /// The moment grid: the configured one, else `{2, 3, 4, 6, 8}` for Doob
    /// and `{2, 4, 6}` for BDG.
    pub fn p_grid(&self) -> Vec<f64> {
        match &self.moments.p_grid {
            Some(grid) => grid.clone(),
            None if self.kernel.trim() == "bdg" => vec![2.0, 4.0, 6.0],
            None => vec![2.0, 3.0, 4.0, 6.0, 8.0],
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::parse("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            n_steps: self.n_steps,
            n_trials: self.n_trials,
            law: self.law,
            seed: self.seed,
            parallel: self.parallel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        parse_kernel(&self.kernel)?;
        if !matches!(self.kernel.trim(), "doob" | "bdg") {
            return Err(Error::param("kernel", "verification runs support doob and bdg only"));
        }
        self.simulation().validate()?;
        if !(self.slack_sigmas >= 0.0) {
            return Err(Error::param("slack_sigmas", "must be >= 0"));
        }
        let grid = self.p_grid();
        if grid.is_empty() || grid.iter().any(|&p| !(p > 1.0 && p.is_finite())) {
            return Err(Error::param("moments.p_grid", "need a nonempty list of finite p > 1"));
        }
        let t = &self.tail;
        if !(1.0 <= t.fit_p_min && t.fit_p_min < t.fit_p_max && t.fit_p_max.is_finite()) || t.fit_points < 2 {
            return Err(Error::param("tail.fit_*", "need 1 <= fit_p_min < fit_p_max and fit_points >= 2"));
        }
        if !(t.p0 >= 1.0) {
            return Err(Error::param("tail.p0", "must be >= 1"));
        }
        if !(t.upper_quantile > 0.0 && t.upper_quantile <= 1.0) {
            return Err(Error::param("tail.upper_quantile", "must lie in (0, 1]"));
        }
        if t.t_grid_points < 2 || t.fenchel_p_grid < 16 || t.y_points < 2 {
            return Err(Error::param("tail", "grid sizes too small"));
        }
        Ok(())
    }

    pub fn validate_for_verification(&self) -> Result<()> {
        self.validate()?;
        if self.n_trials < MIN_VERIFICATION_TRIALS {
            return Err(Error::param(
                "n_trials",
                format!("verification runs need at least {MIN_VERIFICATION_TRIALS} trials, got {}", self.n_trials),
            ));
        }
        Ok(())
    }
}
