//! Moment oracles, empirical samples, Grand Lebesgue Space norms and the
//! statistical check of a tail bound against a sample.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::conjugate::TailBound;
use crate::error::{Error, Result};
use crate::psi::{grid_sup, log_spaced, GeneratingFunction, GridSup, PDomain, P_MAX};

/// Absolute values of simulated or observed outcomes, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    seed_info: Option<String>,
}

impl EmpiricalSample {
    /// Takes absolute values of arbitrary real outcomes.
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::from_nonnegative(outcomes.into_iter().map(f64::abs))
    }

    pub fn from_nonnegative(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::param("sample", format!("value {bad} is not finite and >= 0")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self {
            values,
            seed_info: None,
        })
    }

    pub fn with_seed_info(mut self, info: impl Into<String>) -> Self {
        self.seed_info = Some(info.into());
        self
    }

    pub fn seed_info(&self) -> Option<&str> {
        self.seed_info.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Lower empirical quantile: the smallest value with at least `q n`
    /// observations at or below it.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.values.len();
        let k = ((q.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        self.values[k - 1]
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("scale must be positive, got {c}")));
        }
        Ok(Self {
            values: self.values.iter().map(|v| v * c).collect(),
            seed_info: self.seed_info.clone(),
        })
    }

    /// Reads a single-column CSV with header `value`. Signs are dropped.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Row {
            value: f64,
        }
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::io(path, e))?;
        let mut values = Vec::new();
        for row in reader.deserialize::<Row>() {
            values.push(row.map_err(|e| Error::io(path, e))?.value);
        }
        Ok(Self::from_outcomes(values)?.with_seed_info(format!("loaded from {}", path.display())))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
        w.write_record(["value"]).map_err(|e| Error::io(path, e))?;
        for v in &self.values {
            w.write_record([v.to_string()]).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Plug-in `((1/n) Σ v_i^p)^{1/p}` with a jackknife standard error.
///
/// Values are divided by the sample maximum before raising to `p`, so large
/// `p` does not overflow.
pub fn empirical_moment(s: &EmpiricalSample, p: f64) -> Result<Estimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("need finite p >= 1, got {p}")));
    }
    let vmax = s.max();
    if vmax == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            stderr: 0.0,
        });
    }
    let n = s.len();
    let weights: Vec<f64> = s.values.iter().map(|v| (v / vmax).powf(p)).collect();
    let total: f64 = weights.iter().sum();
    let value = vmax * (total / n as f64).powf(1.0 / p);
    if !value.is_finite() {
        return Err(Error::Overflow { p });
    }
    if n == 1 {
        return Ok(Estimate { value, stderr: 0.0 });
    }
    let m = (n - 1) as f64;
    let leave_one_out =
        |w: f64| vmax * ((total - w).max(0.0) / m).powf(1.0 / p);
    let mean = weights.iter().map(|&w| leave_one_out(w)).sum::<f64>() / n as f64;
    let ss: f64 = weights
        .iter()
        .map(|&w| {
            let d = leave_one_out(w) - mean;
            d * d
        })
        .sum();
    Ok(Estimate {
        value,
        stderr: (ss * m / n as f64).sqrt(),
    })
}

/// `#{v_i > t} / n` and its binomial standard error.
pub fn empirical_tail(s: &EmpiricalSample, t: f64) -> Estimate {
    let n = s.len();
    let above = n - s.values.partition_point(|&v| v <= t);
    let f = above as f64 / n as f64;
    Estimate {
        value: f,
        stderr: (f * (1.0 - f) / n as f64).sqrt(),
    }
}

type MomentFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum OracleKind {
    Constant(f64),
    Normal { sigma: f64 },
    Exponential { rate: f64 },
    Uniform { half_width: f64 },
    Sample(Arc<EmpiricalSample>),
    Custom(MomentFn),
}

/// The map `p ↦ |ζ|_p`, either in closed form or from a sample.
#[derive(Clone)]
pub struct MomentOracle {
    kind: OracleKind,
    scale: f64,
    finite_up_to: f64,
    label: String,
}

impl fmt::Debug for MomentOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentOracle")
            .field("label", &self.label)
            .field("scale", &self.scale)
            .field("finite_up_to", &self.finite_up_to)
            .finish()
    }
}

fn nonnegative(name: &'static str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be finite and >= 0, got {v}")))
    }
}

impl MomentOracle {
    fn analytic(kind: OracleKind, label: String) -> Self {
        Self {
            kind,
            scale: 1.0,
            finite_up_to: f64::INFINITY,
            label,
        }
    }

    /// `|ζ| = c` almost surely.
    pub fn constant(c: f64) -> Result<Self> {
        Ok(Self::analytic(
            OracleKind::Constant(nonnegative("c", c)?),
            format!("const({c})"),
        ))
    }

    /// Symmetric ±1 variable; every moment equals 1.
    pub fn rademacher() -> Self {
        Self::analytic(OracleKind::Constant(1.0), "rademacher".into())
    }

    /// `N(0, σ²)`: `|N|_p = σ (2^{p/2} Γ((p+1)/2) / √π)^{1/p}`.
    pub fn normal(sigma: f64) -> Result<Self> {
        Ok(Self::analytic(
            OracleKind::Normal {
                sigma: nonnegative("sigma", sigma)?,
            },
            format!("normal({sigma})"),
        ))
    }

    /// Exponential with the given rate: `Γ(p+1)^{1/p} / rate`.
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", format!("must be positive, got {rate}")));
        }
        Ok(Self::analytic(
            OracleKind::Exponential { rate },
            format!("exponential({rate})"),
        ))
    }

    /// Uniform on `[−a, a]`: `a / (p+1)^{1/p}`.
    pub fn uniform(half_width: f64) -> Result<Self> {
        Ok(Self::analytic(
            OracleKind::Uniform {
                half_width: nonnegative("a", half_width)?,
            },
            format!("uniform({half_width})"),
        ))
    }

    pub fn from_sample(sample: EmpiricalSample) -> Self {
        let label = format!("sample(n={})", sample.len());
        Self::analytic(OracleKind::Sample(Arc::new(sample)), label)
    }

    /// Arbitrary `p ↦ |ζ|_p`, finite for `p < finite_up_to`.
    pub fn from_fn<F>(label: impl Into<String>, finite_up_to: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: OracleKind::Custom(Arc::new(f)),
            scale: 1.0,
            finite_up_to,
            label: label.into(),
        }
    }

    /// Oracle whose moments are the values of a generating function.
    pub fn from_generating_function(g: GeneratingFunction) -> Self {
        let label = g.tag().to_string();
        let d = *g.domain();
        let finite_up_to = if d.include_hi() { d.hi().next_up() } else { d.hi() };
        Self::from_fn(label, finite_up_to, move |p| g.eval(p))
    }

    /// The oracle of `c ζ`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        nonnegative("c", c)?;
        let mut out = self.clone();
        out.scale *= c;
        out.label = format!("{c}*{}", self.label);
        Ok(out)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn finite_up_to(&self) -> f64 {
        self.finite_up_to
    }

    pub fn sample(&self) -> Option<&EmpiricalSample> {
        match &self.kind {
            OracleKind::Sample(s) => Some(s),
            _ => None,
        }
    }

    /// `|ζ|_p`; `+∞` at or beyond `finite_up_to`.
    pub fn eval(&self, p: f64) -> f64 {
        if p >= self.finite_up_to {
            return f64::INFINITY;
        }
        let raw = match &self.kind {
            OracleKind::Constant(c) => *c,
            OracleKind::Normal { sigma } => {
                let ln_abs_moment =
                    0.5 * p * std::f64::consts::LN_2 + ln_gamma(0.5 * (p + 1.0)) - 0.5 * PI.ln();
                sigma * (ln_abs_moment / p).exp()
            }
            OracleKind::Exponential { rate } => (ln_gamma(p + 1.0) / p).exp() / rate,
            OracleKind::Uniform { half_width } => half_width / (p + 1.0).powf(1.0 / p),
            OracleKind::Sample(s) => empirical_moment(s, p)
                .map(|e| e.value)
                .unwrap_or(f64::INFINITY),
            OracleKind::Custom(f) => f(p),
        };
        self.scale * raw
    }
}

/// `||ζ||_{Gκ} = sup_p |ζ|_p / κ(p)` on a log grid over the common domain of
/// κ and the oracle's finite range. The grid value is a lower estimate.
pub fn gls_norm(oracle: &MomentOracle, kappa: &GeneratingFunction, grid_size: usize) -> Result<GridSup> {
    gls_norm_with_cap(oracle, kappa, grid_size, P_MAX)
}

pub fn gls_norm_with_cap(
    oracle: &MomentOracle,
    kappa: &GeneratingFunction,
    grid_size: usize,
    p_max: f64,
) -> Result<GridSup> {
    let finite = PDomain::new(1.0, oracle.finite_up_to(), true, false)?;
    let domain = kappa.domain().intersect(&finite)?;
    let grid = domain.log_grid(grid_size, p_max)?;
    gls_norm_on_grid(oracle, kappa, &grid)
}

/// The same supremum on caller-chosen `p` values.
pub fn gls_norm_on_grid(
    oracle: &MomentOracle,
    kappa: &GeneratingFunction,
    grid: &[f64],
) -> Result<GridSup> {
    for &p in grid {
        kappa.try_eval(p)?;
    }
    grid_sup(grid, "moment / kappa", |p| oracle.eval(p) / kappa.eval(p))
}

/// κ₀(p) = |ζ|_p, the generating function for which `||ζ||_{Gκ₀} = 1`.
pub fn natural_function(oracle: &MomentOracle, domain: PDomain) -> Result<GeneratingFunction> {
    if domain.hi() > oracle.finite_up_to() {
        return Err(Error::NonFinite {
            what: "natural function: oracle is infinite inside the domain",
            p: oracle.finite_up_to(),
            value: f64::INFINITY,
        });
    }
    for p in domain.log_grid(16, P_MAX)? {
        let v = oracle.eval(p);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonFinite {
                what: "natural function must be positive and finite",
                p,
                value: v,
            });
        }
    }
    let o = oracle.clone();
    Ok(GeneratingFunction::from_fn(
        format!("natural[{}]", oracle.label()),
        domain,
        move |p| o.eval(p),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceOptions {
    pub slack_sigmas: f64,
    pub grid_points: usize,
    /// The grid ends at this sample quantile.
    pub upper_quantile: f64,
    /// Grid points with fewer sample values above them are dropped.
    pub min_exceedances: usize,
}

impl Default for DominanceOptions {
    fn default() -> Self {
        Self {
            slack_sigmas: 3.0,
            grid_points: 32,
            upper_quantile: 0.999,
            min_exceedances: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceRow {
    pub t: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub rows: Vec<DominanceRow>,
    pub slack_sigmas: f64,
}

impl DominanceReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violation).count()
    }

    /// Smallest `bound − empirical` over the grid, if any.
    pub fn min_margin(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.bound - r.empirical)
            .min_by(f64::total_cmp)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
        w.write_record(["t", "empirical", "stderr", "bound", "violation"])
            .map_err(|e| Error::io(path, e))?;
        for r in &self.rows {
            w.write_record([
                r.t.to_string(),
                r.empirical.to_string(),
                r.stderr.to_string(),
                r.bound.to_string(),
                (r.violation as u8).to_string(),
            ])
            .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Flags every grid point where the empirical survival function exceeds the
/// bound by more than `slack_sigmas` standard errors.
pub fn check_tail_dominance(
    s: &EmpiricalSample,
    bound: &TailBound,
    opts: &DominanceOptions,
) -> DominanceReport {
    check_tail_dominance_fn(s, |t| bound.eval(t), bound.valid_from(), opts)
}

/// [`check_tail_dominance`] for an arbitrary bound function, starting the
/// log grid at `t_start`.
pub fn check_tail_dominance_fn(
    s: &EmpiricalSample,
    bound: impl Fn(f64) -> f64,
    t_start: f64,
    opts: &DominanceOptions,
) -> DominanceReport {
    let t_end = s.quantile(opts.upper_quantile);
    let grid = if t_start > 0.0 && t_end > t_start {
        log_spaced(t_start, t_end, opts.grid_points.max(2)).unwrap_or_default()
    } else {
        Vec::new()
    };
    let n = s.len() as f64;
    let rows = grid
        .into_iter()
        .filter_map(|t| {
            let est = empirical_tail(s, t);
            if (est.value * n).round() < opts.min_exceedances as f64 {
                return None;
            }
            let b = bound(t);
            Some(DominanceRow {
                t,
                empirical: est.value,
                stderr: est.stderr,
                bound: b,
                violation: est.value - opts.slack_sigmas * est.stderr > b,
            })
        })
        .collect();
    DominanceReport {
        rows,
        slack_sigmas: opts.slack_sigmas,
    }
}
