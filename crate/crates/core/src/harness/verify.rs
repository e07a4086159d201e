//! Monte Carlo checks of the Doob and BDG maximal inequalities, at the level
//! of moments and of tails.

use std::fmt::Write as _;
use std::path::Path;

use crate::conjugate::{FenchelConfig, TailBound};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::simulate::{simulate_martingale, MartingalePathBatch};
use crate::moments::{
    check_tail_dominance, empirical_moment, gls_norm_on_grid, natural_function, DominanceOptions,
    DominanceReport, EmpiricalSample, MomentOracle,
};
use crate::psi::{log_spaced, make_power, GeneratingFunction, PDomain};
use crate::transfer::{build_psi_function, power_transfer, RSlice, TransferKernel};

/// Points of the `p` grid used to tabulate transferred generating functions.
const PSI_GRID_POINTS: usize = 128;
/// Points of the grid on which the GLS norm of the terminal sample is taken.
const NORM_GRID_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub p: f64,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// `rhs + slack·σ − lhs`, with σ the combined standard error.
    pub margin: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
    pub slack_sigmas: f64,
}

impl MomentReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violation).count()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
        w.write_record(["p", "lhs", "rhs", "margin"])
            .map_err(|e| Error::io(path, e))?;
        for r in &self.rows {
            w.write_record([r.p.to_string(), r.lhs.to_string(), r.rhs.to_string(), r.margin.to_string()])
                .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn moment_row(p: f64, lhs: (f64, f64), rhs: (f64, f64), slack: f64) -> MomentRow {
    let sigma = lhs.1.hypot(rhs.1);
    let margin = rhs.0 + slack * sigma - lhs.0;
    MomentRow {
        p,
        lhs: lhs.0,
        lhs_stderr: lhs.1,
        rhs: rhs.0,
        rhs_stderr: rhs.1,
        margin,
        violation: margin < 0.0,
    }
}

/// Outcome of one verification run.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub kernel: &'static str,
    pub law: String,
    pub n_steps: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub moments: MomentReport,
    /// Fitted growth index `m` of the terminal moments (Doob only).
    pub fitted_m: Option<f64>,
    /// Scale `C` of the tail bound.
    pub scale_c: Option<f64>,
    pub tail_bound: Option<TailBound>,
    pub tail: Option<DominanceReport>,
    pub pathwise_violations: usize,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn moment_violations(&self) -> usize {
        self.moments.violations()
    }

    pub fn tail_violations(&self) -> usize {
        self.tail.as_ref().map_or(0, DominanceReport::violations)
    }

    pub fn passed(&self) -> bool {
        self.moment_violations() == 0 && self.tail_violations() == 0 && self.pathwise_violations == 0
    }

    /// Writes `moment_report.csv`, `tail_report.csv` and `conjugate.csv`.
    /// When no tail check ran, the tail and conjugate files hold only their
    /// headers.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.moments.write_csv(dir.join("moment_report.csv"))?;
        let tail = self.tail.clone().unwrap_or(DominanceReport {
            rows: Vec::new(),
            slack_sigmas: self.moments.slack_sigmas,
        });
        tail.write_csv(dir.join("tail_report.csv"))?;
        let conj = dir.join("conjugate.csv");
        match &self.tail_bound {
            Some(b) => b.table().write_csv(&conj),
            None => std::fs::write(&conj, "y,hstar,argmax_p\n").map_err(|e| Error::io(&conj, e)),
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} verification: law={} n_steps={} n_trials={} seed={}",
            self.kernel, self.law, self.n_steps, self.n_trials, self.seed
        );
        for r in &self.moments.rows {
            let _ = writeln!(
                s,
                "  p={:<5} lhs={:.6} rhs={:.6} margin={:.6}{}",
                r.p,
                r.lhs,
                r.rhs,
                r.margin,
                if r.violation { "  VIOLATION" } else { "" }
            );
        }
        if let Some(m) = self.fitted_m {
            let _ = writeln!(s, "  fitted m = {m:.4}");
        }
        if let (Some(c), Some(b)) = (self.scale_c, &self.tail_bound) {
            let _ = writeln!(s, "  tail bound scale C = {c:.6}, valid from t = {:.6}", b.valid_from());
        }
        if let Some(t) = &self.tail {
            let margin = t.min_margin().map_or("n/a".to_string(), |m| format!("{m:.3e}"));
            let _ = writeln!(
                s,
                "  tail check: {} grid points, {} violations, min margin {margin}",
                t.rows.len(),
                t.violations()
            );
        }
        if self.pathwise_violations > 0 {
            let _ = writeln!(s, "  pathwise violations: {}", self.pathwise_violations);
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        let _ = write!(
            s,
            "  moment violations: {}, tail violations: {}",
            self.moment_violations(),
            self.tail_violations()
        );
        s
    }
}

/// Least-squares fit of `ln |ζ|_p = a + (1/m) ln p` over `n` log-spaced
/// points of `[p_min, p_max]`; returns `m`. `None` when the moments are not
/// positive or do not grow.
pub fn fit_power_index(oracle: &MomentOracle, p_min: f64, p_max: f64, n: usize) -> Result<Option<f64>> {
    let grid = log_spaced(p_min, p_max, n)?;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for p in grid {
        let v = oracle.eval(p);
        if !(v > 0.0 && v.is_finite()) {
            return Ok(None);
        }
        xs.push(p.ln());
        ys.push(v.ln());
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok((slope > 0.0 && slope.is_finite()).then(|| 1.0 / slope))
}

fn dominance_options(cfg: &ExperimentConfig) -> DominanceOptions {
    DominanceOptions {
        slack_sigmas: cfg.slack_sigmas,
        grid_points: cfg.tail.t_grid_points,
        upper_quantile: cfg.tail.upper_quantile,
        min_exceedances: cfg.tail.min_exceedances,
    }
}

/// `y_max` covering `ln(t/C)` for every `t` up to the sample maximum.
fn y_max_for(sample: &EmpiricalSample, c: f64) -> f64 {
    (sample.max() / c).ln().max(0.0) + 1.0
}

fn law_info(batch: &MartingalePathBatch) -> (String, usize, usize, u64) {
    let c = &batch.config;
    (c.law.name(), c.n_steps, c.n_trials, c.seed)
}

pub fn verify_doob(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    cfg.validate_for_verification()?;
    let batch = simulate_martingale(&cfg.simulation())?;
    verify_doob_batch(&batch, cfg)
}

/// Doob check on an existing batch:
/// (a) `|M*|_p ≤ p/(p−1) |ξ_n|_p` at every grid `p`, up to the slack;
/// (b) the tail of `M*` against the bound transferred through the Doob
/// kernel from `p^{1/m}`, scaled by the GLS norm of `ξ_n` in that space.
pub fn verify_doob_batch(batch: &MartingalePathBatch, cfg: &ExperimentConfig) -> Result<VerificationReport> {
    let slack = cfg.slack_sigmas;
    let grid = cfg.p_grid();
    let mut rows = Vec::with_capacity(grid.len());
    for &p in &grid {
        let lhs = empirical_moment(&batch.running_max, p)?;
        let term = empirical_moment(&batch.terminal, p)?;
        let factor = p / (p - 1.0);
        rows.push(moment_row(
            p,
            (lhs.value, lhs.stderr),
            (factor * term.value, factor * term.stderr),
            slack,
        ));
    }
    let (law, n_steps, n_trials, seed) = law_info(batch);
    let mut report = VerificationReport {
        kernel: "doob",
        law,
        n_steps,
        n_trials,
        seed,
        moments: MomentReport { rows, slack_sigmas: slack },
        fitted_m: None,
        scale_c: None,
        tail_bound: None,
        tail: None,
        pathwise_violations: batch.pathwise_violations(),
        notes: Vec::new(),
    };

    let t = &cfg.tail;
    let terminal = MomentOracle::from_sample(batch.terminal.clone());
    let Some(m) = fit_power_index(&terminal, t.fit_p_min, t.fit_p_max, t.fit_points)? else {
        report
            .notes
            .push("terminal moments are zero or flat; tail check trivially satisfied".into());
        return Ok(report);
    };
    report.fitted_m = Some(m);

    let window = PDomain::closed(1.0, t.fit_p_max)?;
    let beta = make_power(m, window)?;
    let norm_grid = log_spaced(1.0, t.fit_p_max, NORM_GRID_POINTS)?;
    let norm = gls_norm_on_grid(&terminal, &beta, &norm_grid)?.value;
    if !(norm > 0.0 && norm.is_finite()) {
        report.notes.push(format!("GLS norm {norm} unusable; tail check skipped"));
        return Ok(report);
    }
    let kernel = TransferKernel::doob().with_p0(t.p0)?;
    let p_grid = log_spaced(1.0, t.fit_p_max, PSI_GRID_POINTS)?;
    let tau = build_psi_function(&kernel, &MomentOracle::from_generating_function(beta), &p_grid)?;
    let bound = TailBound::from_psi(
        &tau,
        norm,
        y_max_for(&batch.running_max, norm),
        t.y_points,
        &FenchelConfig::with_grid_size(t.fenchel_p_grid),
    )?;
    report.tail = Some(check_tail_dominance(&batch.running_max, &bound, &dominance_options(cfg)));
    report.scale_c = Some(norm);
    report.tail_bound = Some(bound);
    Ok(report)
}

pub fn verify_bdg(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    cfg.validate_for_verification()?;
    let batch = simulate_martingale(&cfg.simulation())?;
    verify_bdg_batch(&batch, cfg)
}

/// BDG check on an existing batch:
/// (a) `|M*|_p ≤ √e |⟨M,M⟩_n|_{p/2}^{1/2}` at every grid `p ≥ 2`;
/// (b) the tail of `M*` against `τ(p) = √e β(p/2)^{1/2}` with `β` the
/// natural function of `⟨M,M⟩_n`, so that the norm factor is 1.
///
/// The `p` range of the tail bound is capped at the largest moment grid
/// point. Violations are findings, not errors; see [`VerificationReport::notes`].
pub fn verify_bdg_batch(batch: &MartingalePathBatch, cfg: &ExperimentConfig) -> Result<VerificationReport> {
    let grid = cfg.p_grid();
    if let Some(&p) = grid.iter().find(|&&p| p < 2.0) {
        return Err(Error::param("moments.p_grid", format!("BDG needs p >= 2, got {p}")));
    }
    let slack = cfg.slack_sigmas;
    let root_e = std::f64::consts::E.sqrt();
    let qv = batch.quad_variation()?;
    let grid = cfg.p_grid();
    let mut rows = Vec::with_capacity(grid.len());
    for &p in &grid {
        let lhs = empirical_moment(&batch.running_max, p)?;
        let q = empirical_moment(&qv, p / 2.0)?;
        let root = q.value.sqrt();
        // delta method for the square root
        let root_se = if root > 0.0 { q.stderr / (2.0 * root) } else { 0.0 };
        rows.push(moment_row(
            p,
            (lhs.value, lhs.stderr),
            (root_e * root, root_e * root_se),
            slack,
        ));
    }
    let (law, n_steps, n_trials, seed) = law_info(batch);
    let mut report = VerificationReport {
        kernel: "bdg",
        law,
        n_steps,
        n_trials,
        seed,
        moments: MomentReport { rows, slack_sigmas: slack },
        fitted_m: None,
        scale_c: None,
        tail_bound: None,
        tail: None,
        pathwise_violations: batch.pathwise_violations(),
        notes: Vec::new(),
    };

    let p_top = grid.iter().copied().fold(2.0, f64::max);
    let qv_oracle = MomentOracle::from_sample(qv);
    match natural_function(&qv_oracle, PDomain::closed(1.0, p_top / 2.0)?) {
        Ok(beta) => {
            let p0 = cfg.tail.p0.max(2.0);
            let p_grid = log_spaced(1.0, p_top, PSI_GRID_POINTS)?;
            let mut table = Vec::with_capacity(p_grid.len());
            for p in p_grid {
                let q = p.max(p0);
                let inf = power_transfer(|_, _| root_e, 0.5, &beta, q, &RSlice::Points(vec![q / 2.0]))?;
                table.push((p, inf.value));
            }
            let tau = GeneratingFunction::from_table(&table)?;
            let bound = TailBound::from_psi(
                &tau,
                1.0,
                y_max_for(&batch.running_max, 1.0),
                cfg.tail.y_points,
                &FenchelConfig::with_grid_size(cfg.tail.fenchel_p_grid),
            )?;
            report.tail = Some(check_tail_dominance(&batch.running_max, &bound, &dominance_options(cfg)));
            report.scale_c = Some(1.0);
            report.tail_bound = Some(bound);
        }
        Err(_) => report
            .notes
            .push("quadratic variation is zero; tail check trivially satisfied".into()),
    }
    if report.moment_violations() > 0 || report.tail_violations() > 0 {
        report.notes.push(format!(
            "warning: {} moment and {} tail violations of the sqrt(e) constant",
            report.moment_violations(),
            report.tail_violations()
        ));
    }
    Ok(report)
}

/// Runs the verification selected by `cfg.kernel`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    match cfg.kernel.trim() {
        "doob" => verify_doob(cfg),
        "bdg" => verify_bdg(cfg),
        other => Err(Error::param(
            "kernel",
            format!("verification runs support `doob` and `bdg`, got `{other}`"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::simulate::IncrementLaw;

    fn small(kernel: &str, law: IncrementLaw) -> ExperimentConfig {
        let mut cfg = if kernel == "bdg" {
            ExperimentConfig::bdg_defaults()
        } else {
            ExperimentConfig::default()
        };
        cfg.law = law;
        cfg.n_trials = 20_000;
        cfg
    }

    #[test]
    fn fit_recovers_exact_power() {
        let o = MomentOracle::from_fn("p^(1/3)", f64::INFINITY, |p| 2.5 * p.powf(1.0 / 3.0));
        let m = fit_power_index(&o, 2.0, 16.0, 16).unwrap().unwrap();
        assert!((m - 3.0).abs() < 1e-10);
        let flat = MomentOracle::constant(1.0).unwrap();
        assert_eq!(fit_power_index(&flat, 2.0, 16.0, 16).unwrap(), None);
        let zero = MomentOracle::constant(0.0).unwrap();
        assert_eq!(fit_power_index(&zero, 2.0, 16.0, 16).unwrap(), None);
    }

    #[test]
    fn gaussian_doob_small_run() {
        let r = verify_doob(&small("doob", IncrementLaw::Gaussian { sigma: 1.0 })).unwrap();
        assert!(r.passed(), "{}", r.summary());
        let p2 = &r.moments.rows[0];
        assert_eq!(p2.p, 2.0);
        assert!(p2.lhs / (p2.rhs / 2.0) <= 2.0);
        let m = r.fitted_m.unwrap();
        assert!((m - 2.0).abs() <= 0.3, "m = {m}");
        assert!(!r.tail.as_ref().unwrap().rows.is_empty());
    }

    #[test]
    fn degenerate_walk_passes_trivially() {
        let r = verify_doob(&small("doob", IncrementLaw::Gaussian { sigma: 0.0 })).unwrap();
        assert!(r.passed());
        assert!(r.tail.is_none());
        assert!(r.moments.rows.iter().all(|row| row.lhs == 0.0 && row.rhs == 0.0));
        let r = verify_bdg(&small("bdg", IncrementLaw::Uniform { half_width: 0.0 })).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn rademacher_bdg_right_side_is_exact() {
        let r = verify_bdg(&small("bdg", IncrementLaw::Rademacher)).unwrap();
        let want = std::f64::consts::E.sqrt() * 8.0;
        for row in &r.moments.rows {
            assert_eq!(row.rhs, want);
            assert_eq!(row.rhs_stderr, 0.0);
        }
        assert_eq!(r.moment_violations(), 0, "{}", r.summary());
    }

    #[test]
    fn bdg_rejects_small_p() {
        let mut cfg = small("bdg", IncrementLaw::Rademacher);
        cfg.moments.p_grid = Some(vec![1.5, 2.0]);
        assert!(verify_bdg(&cfg).is_err());
    }

    #[test]
    fn verification_needs_enough_trials() {
        let mut cfg = small("doob", IncrementLaw::Rademacher);
        cfg.n_trials = 999;
        assert!(verify_doob(&cfg).is_err());
    }

    #[test]
    fn outputs_have_expected_headers() {
        let r = verify_doob(&small("doob", IncrementLaw::Rademacher)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        r.write_outputs(dir.path()).unwrap();
        let read = |name: &str| std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(read("moment_report.csv").starts_with("p,lhs,rhs,margin\n"));
        assert!(read("tail_report.csv").starts_with("t,empirical,stderr,bound,violation\n"));
        assert!(read("conjugate.csv").starts_with("y,hstar,argmax_p\n"));
    }
}
