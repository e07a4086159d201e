//! Moment transfer: from `|ξ|_p ≤ g(p, r, |η|_r)` for `(p, r) ∈ D` and the
//! moments of `η`, build
//!
//! ```text
//! ψ(p) = inf_{r ∈ R(p)} g(max(p, p₀), r, |η|_r)
//! ```
//!
//! so that `|ξ|_p ≤ ψ(p)`. Below `p₀` the slice and first argument are frozen
//! at `p₀`, which makes ψ constant there. That is sound because `|ξ|_p` is
//! nondecreasing in `p`.
//!
//! `D` is represented by its slices `R(p)`, either a finite set of `r` or an
//! interval. Kernels must be nondecreasing in `z`: only then can an upper
//! bound on `|η|_r` be pushed through `g`.

use std::f64::consts::E;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moments::MomentOracle;
use crate::optimize::golden_min;
use crate::psi::{GeneratingFunction, PDomain, P_MAX};

/// `R(p)`, the admissible `r` values for a given `p`.
#[derive(Debug, Clone, PartialEq)]
pub enum RSlice {
    Points(Vec<f64>),
    Interval(PDomain),
}

pub type SliceFn = Arc<dyn Fn(f64) -> RSlice + Send + Sync>;
pub type Factor = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type GeneralKernel = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelForm {
    /// `g(p, r, z)`
    General(GeneralKernel),
    /// `v(p, r) · z`
    Linear(Factor),
    /// `v₁(p, r) · z^α`, `α > 0`
    Power { factor: Factor, alpha: f64 },
}

/// Infimum search settings for interval slices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfimumConfig {
    pub r_grid_size: usize,
    pub golden_iters: usize,
    pub r_max: f64,
}

impl Default for InfimumConfig {
    fn default() -> Self {
        Self {
            r_grid_size: 256,
            golden_iters: 64,
            r_max: P_MAX,
        }
    }
}

/// The infimum over a slice and where it was attained. When every candidate
/// is non-finite, `value` is `+∞` and `finite` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceInfimum {
    pub value: f64,
    pub argmin_r: f64,
    pub finite: bool,
}

/// Minimizes `objective` over `slice`: exhaustively on a point set, by a log
/// grid plus golden-section refinement on an interval. Non-finite values are
/// skipped and ties go to the smallest `r`.
pub fn infimum_over_slice(
    slice: &RSlice,
    objective: impl Fn(f64) -> f64,
    cfg: &InfimumConfig,
    p: f64,
) -> Result<SliceInfimum> {
    let candidates = match slice {
        RSlice::Points(rs) => {
            let mut rs = rs.clone();
            rs.sort_by(f64::total_cmp);
            rs.dedup();
            rs
        }
        RSlice::Interval(d) => d.log_grid(cfg.r_grid_size, cfg.r_max)?,
    };
    if candidates.is_empty() {
        return Err(Error::EmptySlice { p });
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, &r) in candidates.iter().enumerate() {
        let v = objective(r);
        if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    let Some((i, mut value)) = best else {
        return Ok(SliceInfimum {
            value: f64::INFINITY,
            argmin_r: f64::NAN,
            finite: false,
        });
    };
    let mut argmin_r = candidates[i];
    if matches!(slice, RSlice::Interval(_)) && cfg.golden_iters > 0 && candidates.len() > 1 {
        let lo = candidates[i.saturating_sub(1)].ln();
        let hi = candidates[(i + 1).min(candidates.len() - 1)].ln();
        let (u, v) = golden_min(
            |u| {
                let v = objective(u.exp());
                if v.is_finite() {
                    v
                } else {
                    f64::INFINITY
                }
            },
            lo,
            hi,
            cfg.golden_iters,
        );
        if v < value {
            value = v;
            argmin_r = u.exp();
        }
    }
    Ok(SliceInfimum {
        value,
        argmin_r,
        finite: true,
    })
}

/// A transfer kernel `g` with its domain `D` given slice-wise, plus `p₀`.
#[derive(Clone)]
pub struct TransferKernel {
    label: String,
    p_domain: PDomain,
    slice: SliceFn,
    form: KernelForm,
    p0: f64,
}

impl fmt::Debug for TransferKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransferKernel")
            .field("label", &self.label)
            .field("p_domain", &self.p_domain)
            .field("p0", &self.p0)
            .finish()
    }
}

impl TransferKernel {
    /// `p_domain` is the projection `U` of `D`. Without an explicit `p0` the
    /// lower end of `U` is used, nudged inward when it is excluded.
    pub fn new(
        label: impl Into<String>,
        p_domain: PDomain,
        slice: SliceFn,
        form: KernelForm,
        p0: Option<f64>,
    ) -> Result<Self> {
        if let KernelForm::Power { alpha, .. } = &form {
            if !(*alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
            }
        }
        let default_p0 = p_domain.grid_bounds(P_MAX)?.0;
        let kernel = Self {
            label: label.into(),
            p_domain,
            slice,
            form,
            p0: default_p0,
        };
        match p0 {
            Some(p0) => kernel.with_p0(p0),
            None => Ok(kernel),
        }
    }

    pub fn with_p0(mut self, p0: f64) -> Result<Self> {
        if !self.p_domain.contains(p0) {
            return Err(Error::OutsideDomain {
                p: p0,
                domain: self.p_domain.to_string(),
            });
        }
        self.p0 = p0;
        Ok(self)
    }

    /// Doob: `D = {(p, p) : p > 1}`, `g = p/(p−1) · z`.
    pub fn doob() -> Self {
        let domain = PDomain::above(1.0).expect("static domain");
        Self::new(
            "doob",
            domain,
            Arc::new(|p| RSlice::Points(vec![p])),
            KernelForm::Linear(Arc::new(|p, _| p / (p - 1.0))),
            None,
        )
        .expect("static kernel")
    }

    /// Burkholder–Davis–Gundy: `D = {(p, p/2) : p ≥ 2}`, `g = √e · z^{1/2}`,
    /// applied to the moments of the quadratic variation.
    pub fn bdg() -> Self {
        let domain = PDomain::from(2.0).expect("static domain");
        Self::new(
            "bdg",
            domain,
            Arc::new(|p| RSlice::Points(vec![p / 2.0])),
            KernelForm::Power {
                factor: Arc::new(|_, _| E.sqrt()),
                alpha: 0.5,
            },
            None,
        )
        .expect("static kernel")
    }

    /// A discrete `D` given row by row: `g(p, r, z) = factor · z^alpha`.
    pub fn from_rows(rows: &[KernelRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::param("kernel table", "no rows"));
        }
        for row in rows {
            if !(row.p >= 1.0 && row.r >= 1.0 && row.p.is_finite() && row.r.is_finite()) {
                return Err(Error::param("kernel table", format!("need p, r >= 1 in {row:?}")));
            }
            if !(row.factor >= 0.0 && row.alpha > 0.0) {
                return Err(Error::param("kernel table", format!("need factor >= 0, alpha > 0 in {row:?}")));
            }
        }
        let lo = rows.iter().map(|r| r.p).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.p).fold(f64::NEG_INFINITY, f64::max);
        let p_domain = if hi > lo {
            PDomain::closed(lo, hi)?
        } else {
            return Err(Error::param("kernel table", "need at least two distinct p values"));
        };
        let rows: Arc<Vec<KernelRow>> = Arc::new(rows.to_vec());
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        let for_slice = Arc::clone(&rows);
        let slice: SliceFn = Arc::new(move |p| {
            RSlice::Points(for_slice.iter().filter(|row| same(row.p, p)).map(|row| row.r).collect())
        });
        let form = KernelForm::General(Arc::new(move |p, r, z| {
            rows.iter()
                .find(|row| same(row.p, p) && same(row.r, r))
                .map(|row| row.factor * z.powf(row.alpha))
                .unwrap_or(f64::INFINITY)
        }));
        Self::new("custom", p_domain, slice, form, None)
    }

    /// Reads a CSV with header `p,r,factor,alpha`.
    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::io(path, e))?;
        let rows = reader
            .deserialize::<KernelRow>()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::io(path, e))?;
        let mut kernel = Self::from_rows(&rows)?;
        kernel.label = format!("custom({})", path.display());
        Ok(kernel)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn p_domain(&self) -> &PDomain {
        &self.p_domain
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    pub fn slice(&self, p: f64) -> RSlice {
        (self.slice)(p)
    }

    pub fn g(&self, p: f64, r: f64, z: f64) -> f64 {
        match &self.form {
            KernelForm::General(g) => g(p, r, z),
            KernelForm::Linear(v) => v(p, r) * z,
            KernelForm::Power { factor, alpha } => factor(p, r) * z.powf(*alpha),
        }
    }

    /// Random spot check that `g(p, r, ·)` is nondecreasing, with `p` drawn
    /// from `U` and `r` from `R(p)`. Returns the first counterexample.
    pub fn check_z_monotone(&self, trials: usize, seed: u64) -> Result<()> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = self.p_domain.grid_bounds(P_MAX)?;
        for _ in 0..trials {
            let p = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
            let r = match self.slice(p) {
                RSlice::Points(rs) if rs.is_empty() => continue,
                RSlice::Points(rs) => rs[rng.random_range(0..rs.len())],
                RSlice::Interval(d) => {
                    let (a, b) = d.grid_bounds(P_MAX)?;
                    a + rng.random::<f64>() * (b - a)
                }
            };
            let z1 = rng.random::<f64>() * 10.0;
            let z2 = z1 + rng.random::<f64>() * 10.0;
            let (g1, g2) = (self.g(p, r, z1), self.g(p, r, z2));
            if g1 > g2 {
                return Err(Error::param(
                    "kernel",
                    format!("g({p}, {r}, z) decreases in z: {g1} at z={z1} > {g2} at z={z2}"),
                ));
            }
        }
        Ok(())
    }
}

/// One row of a tabulated discrete kernel.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
pub struct KernelRow {
    pub p: f64,
    pub r: f64,
    pub factor: f64,
    pub alpha: f64,
}

/// `inf_{r ∈ R(p)} g(p, r, |η|_r)` with no `p₀` branching.
pub fn kernel_infimum(
    kernel: &TransferKernel,
    eta: &MomentOracle,
    p: f64,
    cfg: &InfimumConfig,
) -> Result<SliceInfimum> {
    infimum_over_slice(&kernel.slice(p), |r| kernel.g(p, r, eta.eval(r)), cfg, p)
}

/// ψ_{p₀}[η](p): the kernel infimum at `p` for `p > p₀`, and at `p₀` for
/// `1 ≤ p ≤ p₀`.
pub fn psi_from_kernel(kernel: &TransferKernel, eta: &MomentOracle, p: f64) -> Result<SliceInfimum> {
    psi_from_kernel_with(kernel, eta, p, &InfimumConfig::default())
}

pub fn psi_from_kernel_with(
    kernel: &TransferKernel,
    eta: &MomentOracle,
    p: f64,
    cfg: &InfimumConfig,
) -> Result<SliceInfimum> {
    if !(p >= 1.0) || (p > kernel.p0 && !kernel.p_domain.contains(p)) {
        return Err(Error::OutsideDomain {
            p,
            domain: format!("{} or [1, {}]", kernel.p_domain, kernel.p0),
        });
    }
    kernel_infimum(kernel, eta, p.max(kernel.p0), cfg)
}

fn beta_at(beta: &GeneratingFunction, r: f64) -> f64 {
    if beta.domain().contains(r) {
        beta.eval(r)
    } else {
        f64::INFINITY
    }
}

/// τ(p) = inf_r v(p, r) β(r) for the linear case `|ξ|_p ≤ v(p, r) |η|_r`,
/// which gives `||ξ||_{Gτ} ≤ ||η||_{Gβ}`.
pub fn tau_linear(
    v: impl Fn(f64, f64) -> f64,
    beta: &GeneratingFunction,
    p: f64,
    r_slice: &RSlice,
) -> Result<SliceInfimum> {
    infimum_over_slice(r_slice, |r| v(p, r) * beta_at(beta, r), &InfimumConfig::default(), p)
}

/// τ_α(p) = inf_r v₁(p, r) β(r)^α for `|ξ|_p ≤ v₁(p, r) |η|_r^α`, which
/// gives `|ξ|_p ≤ τ_α(p) ||η||_{Gβ}^α`.
pub fn power_transfer(
    v1: impl Fn(f64, f64) -> f64,
    alpha: f64,
    beta: &GeneratingFunction,
    p: f64,
    r_slice: &RSlice,
) -> Result<SliceInfimum> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    infimum_over_slice(
        r_slice,
        |r| v1(p, r) * beta_at(beta, r).powf(alpha),
        &InfimumConfig::default(),
        p,
    )
}

/// Tabulates ψ_{p₀}[η] on `p_grid` and wraps it as a generating function
/// interpolated in `(ln p, ln ψ)`. Grid points are evaluated in parallel and
/// assembled in grid order.
pub fn build_psi_function(
    kernel: &TransferKernel,
    eta: &MomentOracle,
    p_grid: &[f64],
) -> Result<GeneratingFunction> {
    let values = p_grid
        .par_iter()
        .map(|&p| {
            let inf = psi_from_kernel(kernel, eta, p)?;
            if inf.finite {
                Ok((p, inf.value))
            } else {
                Err(Error::NonFinite {
                    what: "psi from kernel: no finite value on the slice",
                    p,
                    value: inf.value,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let g = GeneratingFunction::from_table(&values)?;
    Ok(GeneratingFunction::from_fn(
        format!("psi[{}; {}]", kernel.label(), eta.label()),
        *g.domain(),
        move |p| g.eval(p),
    ))
}
