//! Martingale simulation and the Doob / BDG verification runs.

pub mod config;
pub mod simulate;
pub mod verify;

pub use config::{ExperimentConfig, MomentSettings, TailSettings, MIN_VERIFICATION_TRIALS};
pub use simulate::{simulate_martingale, IncrementLaw, MartingalePathBatch, PathSummary, SimulationConfig};
pub use verify::{
    fit_power_index, run_experiment, verify_bdg, verify_bdg_batch, verify_doob, verify_doob_batch,
    MomentReport, MomentRow, VerificationReport,
};
