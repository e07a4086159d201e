//! Discrete-time martingales as partial sums of independent centered
//! increments.
//!
//! Trial `i` draws its increments from a ChaCha8 generator seeded with the
//! master seed and switched to stream `i`, so every trial's path depends only
//! on `(seed, i)`. Results are therefore identical whether trials run
//! serially or in parallel.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::moments::EmpiricalSample;

/// Law of the i.i.d. martingale increments.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum IncrementLaw {
    Gaussian {
        #[serde(default = "unit")]
        sigma: f64,
    },
    Rademacher,
    Uniform {
        #[serde(default = "unit")]
        half_width: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl IncrementLaw {
    /// Zero scale is accepted and gives the degenerate all-zero walk.
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            IncrementLaw::Gaussian { sigma } => ("sigma", sigma),
            IncrementLaw::Uniform { half_width } => ("half_width", half_width),
            IncrementLaw::Rademacher => return Ok(()),
        };
        if v >= 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::param(name, format!("must be finite and >= 0, got {v}")))
        }
    }

    /// Variance of one increment.
    pub fn variance(&self) -> f64 {
        match *self {
            IncrementLaw::Gaussian { sigma } => sigma * sigma,
            IncrementLaw::Rademacher => 1.0,
            IncrementLaw::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            IncrementLaw::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            IncrementLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            IncrementLaw::Uniform { half_width } => half_width * (2.0 * rng.random::<f64>() - 1.0),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            IncrementLaw::Gaussian { sigma } => format!("gaussian({sigma})"),
            IncrementLaw::Rademacher => "rademacher".into(),
            IncrementLaw::Uniform { half_width } => format!("uniform({half_width})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub n_steps: usize,
    pub n_trials: usize,
    pub law: IncrementLaw,
    pub seed: u64,
    pub parallel: bool,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::param("n_steps", "must be >= 1"));
        }
        if self.n_trials == 0 {
            return Err(Error::param("n_trials", "must be >= 1"));
        }
        self.law.validate()
    }
}

/// Per-trial summary of one path `ε_1, …, ε_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    /// `ε_n`
    pub terminal: f64,
    /// `max_{k ≤ n} ε_k`, signed
    pub running_max: f64,
    /// `Σ_k d_k²`
    pub quad_variation: f64,
}

/// Simulated trials with the three samples used by the verifications.
#[derive(Debug, Clone)]
pub struct MartingalePathBatch {
    pub config: SimulationConfig,
    /// Per-trial summaries in trial order.
    pub paths: Vec<PathSummary>,
    /// `|ε_n|`
    pub terminal: EmpiricalSample,
    /// `max(M*, 0)`; for `t > 0` the tail equals that of the signed `M*`.
    pub running_max: EmpiricalSample,
    /// `√⟨M,M⟩_n`
    pub quad_variation_sqrt: EmpiricalSample,
}

impl MartingalePathBatch {
    /// Trials where the signed running maximum is below the terminal value.
    /// Always zero for a correct simulator.
    pub fn pathwise_violations(&self) -> usize {
        self.paths.iter().filter(|s| s.running_max < s.terminal).count()
    }

    /// `⟨M,M⟩_n` per trial.
    pub fn quad_variation(&self) -> Result<EmpiricalSample> {
        EmpiricalSample::from_nonnegative(self.paths.iter().map(|s| s.quad_variation))
    }
}

fn simulate_path(law: IncrementLaw, n_steps: usize, seed: u64, trial: u64) -> PathSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let mut level = 0.0;
    let mut running_max = f64::NEG_INFINITY;
    let mut quad_variation = 0.0;
    for _ in 0..n_steps {
        let d = law.draw(&mut rng);
        level += d;
        quad_variation += d * d;
        running_max = running_max.max(level);
    }
    PathSummary {
        terminal: level,
        running_max,
        quad_variation,
    }
}

pub fn simulate_martingale(cfg: &SimulationConfig) -> Result<MartingalePathBatch> {
    cfg.validate()?;
    let run = |i: usize| simulate_path(cfg.law, cfg.n_steps, cfg.seed, i as u64);
    let paths: Vec<PathSummary> = if cfg.parallel {
        (0..cfg.n_trials).into_par_iter().map(run).collect()
    } else {
        (0..cfg.n_trials).map(run).collect()
    };
    let info = format!(
        "ChaCha8 seed={} stream=trial index, law={}, n_steps={}",
        cfg.seed,
        cfg.law.name(),
        cfg.n_steps
    );
    let terminal = EmpiricalSample::from_outcomes(paths.iter().map(|s| s.terminal))?
        .with_seed_info(info.clone());
    let running_max = EmpiricalSample::from_nonnegative(paths.iter().map(|s| s.running_max.max(0.0)))?
        .with_seed_info(info.clone());
    let quad_variation_sqrt =
        EmpiricalSample::from_nonnegative(paths.iter().map(|s| s.quad_variation.sqrt()))?
            .with_seed_info(info);
    Ok(MartingalePathBatch {
        config: *cfg,
        paths,
        terminal,
        running_max,
        quad_variation_sqrt,
    })
}
