//! Young–Fenchel conjugate of `h(p) = p ln ψ(p)` and the tail bounds it
//! induces.
//!
//! If `|ζ|_p ≤ C ψ(p)` on the domain of ψ, Chebyshev's inequality at every
//! admissible `p` gives
//!
//! ```text
//! P(|ζ| > t) ≤ exp(−h*(ln(t/C))),   h*(y) = sup_p (p y − h(p)).
//! ```
//!
//! The supremum is computed on a grid and refined locally, so the result is
//! a lower estimate of `h*` and the tail bound errs on the safe side. A
//! coarser grid or a truncated domain only makes the bound larger.

use std::f64::consts::E;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optimize::golden_max;
use crate::psi::{make_power, GeneratingFunction, PDomain, P_MAX};
use crate::quadrature::{integrate_to_infinity, QuadConfig, QuadResult};

/// Relative slack on the `t ≥ C e` threshold, so a `t` typed as a rounded
/// decimal of `C e` is still inside the region.
pub const VALIDITY_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FenchelConfig {
    pub p_grid_size: usize,
    pub golden_iters: usize,
    /// Cap replacing an infinite upper endpoint of the ψ domain.
    pub p_max: f64,
}

impl Default for FenchelConfig {
    fn default() -> Self {
        Self {
            p_grid_size: 512,
            golden_iters: 64,
            p_max: P_MAX,
        }
    }
}

impl FenchelConfig {
    pub fn with_grid_size(p_grid_size: usize) -> Self {
        Self {
            p_grid_size,
            ..Self::default()
        }
    }

    pub fn with_p_max(mut self, p_max: f64) -> Self {
        self.p_max = p_max;
        self
    }
}

/// `h(p) = p ln ψ(p)`. Negative wherever ψ < 1.
pub fn h_of(psi: &GeneratingFunction, p: f64) -> Result<f64> {
    Ok(p * psi.try_eval(p)?.ln())
}

/// `h` sampled on a log grid, ready to answer `h*(y)` queries.
struct ConjugateSolver<'a> {
    psi: &'a GeneratingFunction,
    grid: Vec<f64>,
    h: Vec<f64>,
    golden_iters: usize,
}

impl<'a> ConjugateSolver<'a> {
    fn new(psi: &'a GeneratingFunction, cfg: &FenchelConfig) -> Result<Self> {
        if cfg.p_grid_size < 16 {
            return Err(Error::param(
                "p_grid_size",
                format!("need at least 16 points, got {}", cfg.p_grid_size),
            ));
        }
        let grid = psi.domain().log_grid(cfg.p_grid_size, cfg.p_max)?;
        let h = grid
            .iter()
            .map(|&p| {
                let value = p * psi.eval(p).ln();
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(Error::NonFinite {
                        what: "h(p) = p ln psi(p)",
                        p,
                        value,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            psi,
            grid,
            h,
            golden_iters: cfg.golden_iters,
        })
    }

    fn solve(&self, y: f64) -> (f64, f64) {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, (&p, &h)) in self.grid.iter().zip(&self.h).enumerate() {
            let v = p * y - h;
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        let mut argmax = self.grid[best];
        if self.golden_iters > 0 {
            let lo = self.grid[best.saturating_sub(1)].ln();
            let hi = self.grid[(best + 1).min(self.grid.len() - 1)].ln();
            let objective = |u: f64| {
                let p = u.exp();
                p * y - p * self.psi.eval(p).ln()
            };
            let (u, v) = golden_max(objective, lo, hi, self.golden_iters);
            if v > best_val {
                best_val = v;
                argmax = u.exp();
            }
        }
        (best_val, argmax)
    }
}

/// Gridded `h*(y)` with the maximizing `p` for each `y`.
#[derive(Debug, Clone)]
pub struct ConjugateTable {
    y_grid: Vec<f64>,
    hstar: Vec<f64>,
    argmax_p: Vec<f64>,
    source_domain: PDomain,
}

impl ConjugateTable {
    pub fn y_grid(&self) -> &[f64] {
        &self.y_grid
    }

    pub fn hstar(&self) -> &[f64] {
        &self.hstar
    }

    pub fn argmax_p(&self) -> &[f64] {
        &self.argmax_p
    }

    pub fn source_domain(&self) -> &PDomain {
        &self.source_domain
    }

    pub fn len(&self) -> usize {
        self.y_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_grid.is_empty()
    }

    /// Checks monotonicity, convexity on the grid and argmax membership.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::param("conjugate table", msg));
        for i in 1..self.len() {
            if self.hstar[i] < self.hstar[i - 1] {
                return fail(format!(
                    "h* decreases between y = {} and y = {}",
                    self.y_grid[i - 1],
                    self.y_grid[i]
                ));
            }
        }
        for i in 1..self.len().saturating_sub(1) {
            let (y0, y1, y2) = (self.y_grid[i - 1], self.y_grid[i], self.y_grid[i + 1]);
            let w = (y1 - y0) / (y2 - y0);
            let chord = (1.0 - w) * self.hstar[i - 1] + w * self.hstar[i + 1];
            let tol = 1e-9 * (1.0 + self.hstar[i].abs());
            if self.hstar[i] > chord + tol {
                return fail(format!("h* is not convex at y = {y1}"));
            }
        }
        let (lo, hi) = (self.source_domain.lo(), self.source_domain.hi());
        for &p in &self.argmax_p {
            if p < lo || p > hi {
                return fail(format!("argmax p = {p} outside {}", self.source_domain));
            }
        }
        Ok(())
    }

    /// Lower bound of `h*(y)` at any `y`: the upper envelope of the
    /// supporting lines `p_j y − h(p_j)` recorded in the table.
    pub fn lower_bound_at(&self, y: f64) -> f64 {
        self.y_grid
            .iter()
            .zip(&self.hstar)
            .zip(&self.argmax_p)
            .map(|((&yj, &hj), &pj)| hj + pj * (y - yj))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
        w.write_record(["y", "hstar", "argmax_p"])
            .map_err(|e| Error::io(path, e))?;
        for i in 0..self.len() {
            w.write_record([
                self.y_grid[i].to_string(),
                self.hstar[i].to_string(),
                self.argmax_p[i].to_string(),
            ])
            .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Computes `h*(y) = sup_p (p y − h(p))` at every `y` in `y_grid`.
pub fn fenchel_transform(
    psi: &GeneratingFunction,
    y_grid: &[f64],
    cfg: &FenchelConfig,
) -> Result<ConjugateTable> {
    if y_grid.is_empty() {
        return Err(Error::param("y_grid", "must not be empty"));
    }
    if y_grid.windows(2).any(|w| !(w[1] >= w[0])) || y_grid.iter().any(|y| !y.is_finite()) {
        return Err(Error::param("y_grid", "must be finite and sorted ascending"));
    }
    let solver = ConjugateSolver::new(psi, cfg)?;
    let (hstar, argmax_p) = y_grid.iter().map(|&y| solver.solve(y)).unzip();
    Ok(ConjugateTable {
        y_grid: y_grid.to_vec(),
        hstar,
        argmax_p,
        source_domain: *psi.domain(),
    })
}

/// `h*(y)` and its maximizer at a single `y`.
pub fn conjugate_at(psi: &GeneratingFunction, y: f64, cfg: &FenchelConfig) -> Result<(f64, f64)> {
    Ok(ConjugateSolver::new(psi, cfg)?.solve(y))
}

fn in_validity_region(t: f64, scale_c: f64) -> bool {
    t / scale_c >= E * (1.0 - VALIDITY_REL_TOL)
}

fn check_scale(scale_c: f64) -> Result<()> {
    if scale_c > 0.0 && scale_c.is_finite() {
        Ok(())
    } else {
        Err(Error::param("scale_C", format!("must be positive and finite, got {scale_c}")))
    }
}

/// Bound on `P(|ζ| > t)` for a variable with `|ζ|_p ≤ C ψ(p)`. Returns 1
/// below `t = C e`.
pub fn tail_from_psi(psi: &GeneratingFunction, scale_c: f64, t: f64) -> Result<f64> {
    tail_from_psi_with(psi, scale_c, t, &FenchelConfig::default())
}

pub fn tail_from_psi_with(
    psi: &GeneratingFunction,
    scale_c: f64,
    t: f64,
    cfg: &FenchelConfig,
) -> Result<f64> {
    check_scale(scale_c)?;
    if !in_validity_region(t, scale_c) {
        return Ok(1.0);
    }
    let (hstar, _) = conjugate_at(psi, (t / scale_c).ln(), cfg)?;
    Ok((-hstar).exp().clamp(0.0, 1.0))
}

/// A tabulated tail bound `t ↦ exp(−h*(ln(t/C)))`, clamped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct TailBound {
    table: ConjugateTable,
    scale_c: f64,
    valid_from: f64,
}

impl TailBound {
    pub fn new(table: ConjugateTable, scale_c: f64) -> Result<Self> {
        check_scale(scale_c)?;
        Ok(Self {
            table,
            scale_c,
            valid_from: scale_c * E,
        })
    }

    /// Tabulates `h*` on `y_points` equally spaced values in `[0, y_max]`.
    pub fn from_psi(
        psi: &GeneratingFunction,
        scale_c: f64,
        y_max: f64,
        y_points: usize,
        cfg: &FenchelConfig,
    ) -> Result<Self> {
        if !(y_max > 0.0) || y_points < 2 {
            return Err(Error::param("y_grid", "need y_max > 0 and at least two points"));
        }
        let step = y_max / (y_points - 1) as f64;
        let y_grid: Vec<f64> = (0..y_points).map(|i| step * i as f64).collect();
        Self::new(fenchel_transform(psi, &y_grid, cfg)?, scale_c)
    }

    pub fn table(&self) -> &ConjugateTable {
        &self.table
    }

    pub fn scale_c(&self) -> f64 {
        self.scale_c
    }

    pub fn valid_from(&self) -> f64 {
        self.valid_from
    }

    pub fn eval(&self, t: f64) -> f64 {
        if !in_validity_region(t, self.scale_c) {
            return 1.0;
        }
        let h = self.table.lower_bound_at((t / self.scale_c).ln());
        (-h).exp().clamp(0.0, 1.0)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, ts: &[f64]) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
        w.write_record(["t", "bound"]).map_err(|e| Error::io(path, e))?;
        for &t in ts {
            w.write_record([t.to_string(), self.eval(t).to_string()])
                .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgaussianRow {
    pub t: f64,
    pub bound: f64,
    pub closed_form: f64,
    pub rel_err: f64,
}

/// Outcome of comparing the computed tail of ψ(p) = p^{1/m} with
/// `exp(−c(m) t^m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgaussianReport {
    pub m: f64,
    /// Least-squares fit of `−ln bound ≈ c t^m` from the computed bounds.
    pub c_computed: f64,
    /// `1/(m e)`, from the stationary point `p = e^{m y − 1}`.
    pub c_closed_form: f64,
    pub rows: Vec<SubgaussianRow>,
    pub max_rel_err: f64,
    pub tolerance: f64,
    /// Points whose relative error exceeds the tolerance.
    pub violations: Vec<f64>,
}

impl SubgaussianReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
            && ((self.c_computed - self.c_closed_form) / self.c_closed_form).abs() <= self.tolerance
    }
}

/// Tabulates the tail of p^{1/m} on `t ∈ [e, 10]` and checks it against
/// `exp(−t^m/(m e))` at relative tolerance 1e-3.
pub fn subgaussian_family_check(m: f64) -> Result<SubgaussianReport> {
    const T_MAX: f64 = 10.0;
    const POINTS: usize = 64;
    const TOL: f64 = 1e-3;
    // the maximizer e^{m ln t − 1} must lie inside the grid cap
    let p_cap = (m * T_MAX.ln() - 1.0).exp() * 4.0;
    let cfg = FenchelConfig::default().with_p_max(p_cap.max(P_MAX));
    let psi = make_power(m, PDomain::full())?;
    let c_closed_form = 1.0 / (m * E);

    let mut rows = Vec::with_capacity(POINTS);
    for i in 0..POINTS {
        let t = E + (T_MAX - E) * i as f64 / (POINTS - 1) as f64;
        let bound = tail_from_psi_with(&psi, 1.0, t, &cfg)?;
        let closed_form = (-c_closed_form * t.powf(m)).exp();
        rows.push(SubgaussianRow {
            t,
            bound,
            closed_form,
            rel_err: ((bound - closed_form) / closed_form).abs(),
        });
    }
    let (num, den) = rows.iter().fold((0.0, 0.0), |(num, den), r| {
        let tm = r.t.powf(m);
        (num - r.bound.ln() * tm, den + tm * tm)
    });
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let violations = rows.iter().filter(|r| r.rel_err > TOL).map(|r| r.t).collect();
    Ok(SubgaussianReport {
        m,
        c_computed: num / den,
        c_closed_form,
        rows,
        max_rel_err,
        tolerance: TOL,
        violations,
    })
}

/// `( ∫_0^∞ p t^{p−1} T(t) dt )^{1/p}`, the `L_p` norm implied by a
/// survival function `T`.
pub fn moments_from_tail(
    tail: impl Fn(f64) -> f64,
    p: f64,
    quad: &QuadConfig,
) -> Result<(f64, QuadResult)> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("need finite p >= 1, got {p}")));
    }
    let integrand = |t: f64| {
        if t <= 0.0 {
            if p == 1.0 {
                tail(0.0)
            } else {
                0.0
            }
        } else {
            p * t.powf(p - 1.0) * tail(t)
        }
    };
    let r = integrate_to_infinity(integrand, 0.0, quad)?;
    Ok((r.value.max(0.0).powf(1.0 / p), r))
}
