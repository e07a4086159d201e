//! Generating functions ψ(p) on sub-intervals of `[1, ∞]`.
//!
//! A [`GeneratingFunction`] is an immutable, positive function of the moment
//! index `p`. Closed forms are used wherever one exists; tabulated functions
//! interpolate piecewise-linearly in `(ln p, ln ψ)`.
//!
//! Every grid operation runs over logarithmically spaced `p` values. An
//! infinite upper endpoint is truncated at a cap (default [`P_MAX`]) and
//! excluded endpoints are nudged inward by the relative offset
//! [`ENDPOINT_NUDGE`], so they are never evaluated.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default truncation of an infinite `p` range for grid operations.
pub const P_MAX: f64 = 1e3;

/// Relative inward offset applied to excluded grid endpoints.
pub const ENDPOINT_NUDGE: f64 = 1e-9;

/// An interval of admissible moment indices, `1 ≤ lo < hi ≤ ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PDomain {
    lo: f64,
    hi: f64,
    include_lo: bool,
    include_hi: bool,
}

impl PDomain {
    pub fn new(lo: f64, hi: f64, include_lo: bool, include_hi: bool) -> Result<Self> {
        if !lo.is_finite() || lo < 1.0 {
            return Err(Error::InvalidDomain(format!("lower endpoint {lo} must be finite and >= 1")));
        }
        if hi.is_nan() || hi <= lo {
            return Err(Error::InvalidDomain(format!("upper endpoint {hi} must exceed {lo}")));
        }
        if hi.is_infinite() && include_hi {
            return Err(Error::InvalidDomain("an infinite upper endpoint cannot be included".into()));
        }
        Ok(Self {
            lo,
            hi,
            include_lo,
            include_hi,
        })
    }

    /// `[lo, hi]`
    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, hi.is_finite())
    }

    /// `(lo, hi)`
    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    /// `[lo, ∞)`
    pub fn from(lo: f64) -> Result<Self> {
        Self::new(lo, f64::INFINITY, true, false)
    }

    /// `(lo, ∞)`
    pub fn above(lo: f64) -> Result<Self> {
        Self::new(lo, f64::INFINITY, false, false)
    }

    /// `[1, ∞)`, the full range of Lebesgue–Riesz indices.
    pub fn full() -> Self {
        Self {
            lo: 1.0,
            hi: f64::INFINITY,
            include_lo: true,
            include_hi: false,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn include_lo(&self) -> bool {
        self.include_lo
    }

    pub fn include_hi(&self) -> bool {
        self.include_hi
    }

    pub fn contains(&self, p: f64) -> bool {
        let above = if self.include_lo { p >= self.lo } else { p > self.lo };
        let below = if self.include_hi { p <= self.hi } else { p < self.hi };
        above && below
    }

    pub fn intersect(&self, other: &PDomain) -> Result<PDomain> {
        let (lo, include_lo) = match self.lo.partial_cmp(&other.lo) {
            Some(std::cmp::Ordering::Greater) => (self.lo, self.include_lo),
            Some(std::cmp::Ordering::Less) => (other.lo, other.include_lo),
            _ => (self.lo, self.include_lo && other.include_lo),
        };
        let (hi, include_hi) = match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Less) => (self.hi, self.include_hi),
            Some(std::cmp::Ordering::Greater) => (other.hi, other.include_hi),
            _ => (self.hi, self.include_hi && other.include_hi),
        };
        if lo >= hi {
            return Err(Error::EmptyIntersection {
                left: self.to_string(),
                right: other.to_string(),
            });
        }
        PDomain::new(lo, hi, include_lo, include_hi)
    }

    /// Finite endpoints used by grid operations: excluded endpoints nudged
    /// inward, an infinite upper endpoint replaced by `p_max`.
    pub fn grid_bounds(&self, p_max: f64) -> Result<(f64, f64)> {
        let a = if self.include_lo {
            self.lo
        } else {
            self.lo * (1.0 + ENDPOINT_NUDGE)
        };
        let b = if self.hi.is_infinite() {
            p_max
        } else if self.include_hi {
            self.hi
        } else {
            self.hi * (1.0 - ENDPOINT_NUDGE)
        };
        if !(a < b) {
            return Err(Error::InvalidDomain(format!(
                "{self} collapses to an empty grid range under cap {p_max}"
            )));
        }
        Ok((a, b))
    }

    /// `n ≥ 2` points equi-spaced in `ln p` between the grid bounds.
    pub fn log_grid(&self, n: usize, p_max: f64) -> Result<Vec<f64>> {
        let (a, b) = self.grid_bounds(p_max)?;
        log_spaced(a, b, n)
    }
}

impl fmt::Display for PDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.include_lo { '[' } else { '(' };
        let close = if self.include_hi { ']' } else { ')' };
        write!(f, "{open}{}, {}{close}", self.lo, self.hi)
    }
}

/// `n` points from `a` to `b` (both `> 0`), equi-spaced in logarithm.
/// The endpoints are reproduced exactly.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::param("grid_size", format!("need at least 2 points, got {n}")));
    }
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::param("grid", format!("bad log-grid bounds [{a}, {b}]")));
    }
    let (la, lb) = (a.ln(), b.ln());
    let step = (lb - la) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|k| (la + step * k as f64).exp()).collect();
    grid[0] = a;
    grid[n - 1] = b;
    Ok(grid)
}

/// How [`combine`] merges its operands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CombineMode {
    Product,
    /// `c · ∏ operands`
    Scale(f64),
    PointwiseMin,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Power { exponent: f64 },
    DoobFactor,
    Constant(f64),
    Table(Arc<LogLogTable>),
    Combined { mode: CombineMode, parts: Vec<GeneratingFunction> },
    Custom(ScalarFn),
}

/// A positive function ψ(p) on a [`PDomain`].
#[derive(Clone)]
pub struct GeneratingFunction {
    domain: PDomain,
    kind: Kind,
    tag: String,
}

impl fmt::Debug for GeneratingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratingFunction")
            .field("tag", &self.tag)
            .field("domain", &self.domain)
            .finish()
    }
}

impl GeneratingFunction {
    pub fn domain(&self) -> &PDomain {
        &self.domain
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Evaluates without a domain check. Callers that cannot guarantee
    /// membership should use [`GeneratingFunction::try_eval`].
    pub fn eval(&self, p: f64) -> f64 {
        match &self.kind {
            Kind::Power { exponent } => p.powf(*exponent),
            Kind::DoobFactor => p / (p - 1.0),
            Kind::Constant(c) => *c,
            Kind::Table(table) => table.eval(p),
            Kind::Combined { mode, parts } => match mode {
                CombineMode::Product => parts.iter().map(|g| g.eval(p)).product(),
                CombineMode::Scale(c) => c * parts.iter().map(|g| g.eval(p)).product::<f64>(),
                CombineMode::PointwiseMin => parts
                    .iter()
                    .map(|g| g.eval(p))
                    .fold(f64::INFINITY, f64::min),
            },
            Kind::Custom(f) => f(p),
        }
    }

    pub fn try_eval(&self, p: f64) -> Result<f64> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain {
                p,
                domain: self.domain.to_string(),
            });
        }
        Ok(self.eval(p))
    }

    pub fn with_domain(&self, domain: PDomain) -> Result<Self> {
        let domain = self.domain.intersect(&domain)?;
        Ok(Self {
            domain,
            kind: self.kind.clone(),
            tag: self.tag.clone(),
        })
    }

    /// Wraps an arbitrary closure. The closure must be positive and finite on
    /// the interior of `domain`.
    pub fn from_fn<F>(tag: impl Into<String>, domain: PDomain, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            domain,
            kind: Kind::Custom(Arc::new(f)),
            tag: tag.into(),
        }
    }

    pub fn constant(c: f64, domain: PDomain) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("constant must be positive and finite, got {c}")));
        }
        Ok(Self {
            domain,
            kind: Kind::Constant(c),
            tag: format!("const({c})"),
        })
    }

    /// Table-backed function over `(p, value)` pairs, interpolated linearly
    /// in `(ln p, ln value)`. The domain is the closed hull of the `p` column.
    pub fn from_table(points: &[(f64, f64)]) -> Result<Self> {
        let table = LogLogTable::new(points)?;
        let domain = PDomain::closed(table.p_first(), table.p_last())?;
        Ok(Self {
            domain,
            kind: Kind::Table(Arc::new(table)),
            tag: format!("table({} pts)", points.len()),
        })
    }

    /// Loads a two-column CSV with header `p,value`.
    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::io(path, e))?;
        let mut points = Vec::new();
        for record in reader.deserialize::<TableRow>() {
            let row = record.map_err(|e| Error::io(path, e))?;
            points.push((row.p, row.value));
        }
        let mut g = Self::from_table(&points)?;
        g.tag = format!("table({})", path.display());
        Ok(g)
    }
}

#[derive(serde::Deserialize)]
struct TableRow {
    p: f64,
    value: f64,
}

#[derive(Debug)]
struct LogLogTable {
    p: Vec<f64>,
    v: Vec<f64>,
    ln_p: Vec<f64>,
}

impl LogLogTable {
    fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("table", "need at least two rows"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::param("table", "p column must be strictly increasing"));
            }
        }
        for &(p, v) in points {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::param("table", format!("p = {p} must be finite and >= 1")));
            }
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "table value must be positive and finite",
                    p,
                    value: v,
                });
            }
        }
        Ok(Self {
            p: points.iter().map(|&(p, _)| p).collect(),
            v: points.iter().map(|&(_, v)| v).collect(),
            ln_p: points.iter().map(|&(p, _)| p.ln()).collect(),
        })
    }

    fn p_first(&self) -> f64 {
        self.p[0]
    }

    fn p_last(&self) -> f64 {
        self.p[self.p.len() - 1]
    }

    /// Linear in `(ln p, ln v)`, written as `v₀ (v₁/v₀)^w` so that nodes and
    /// flat segments are reproduced exactly.
    fn eval(&self, p: f64) -> f64 {
        let n = self.p.len();
        let i = self.p.partition_point(|&q| q <= p).clamp(1, n - 1);
        let (x0, x1) = (self.ln_p[i - 1], self.ln_p[i]);
        let (v0, v1) = (self.v[i - 1], self.v[i]);
        if p == self.p[i - 1] {
            return v0;
        }
        let w = (p.ln() - x0) / (x1 - x0);
        v0 * (v1 / v0).powf(w)
    }
}

/// ψ(p) = p^{1/m}.
pub fn make_power(m: f64, domain: PDomain) -> Result<GeneratingFunction> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::param("m", format!("power index must be positive, got {m}")));
    }
    Ok(GeneratingFunction {
        domain,
        kind: Kind::Power { exponent: 1.0 / m },
        tag: format!("power({m})"),
    })
}

/// v(p) = p/(p−1), the Doob maximal factor. `p = 1` must not be an included
/// endpoint.
pub fn make_doob_factor(domain: PDomain) -> Result<GeneratingFunction> {
    if domain.lo() == 1.0 && domain.include_lo() {
        return Err(Error::InvalidDomain(format!(
            "Doob factor p/(p-1) is infinite at p = 1, which {domain} includes"
        )));
    }
    Ok(GeneratingFunction {
        domain,
        kind: Kind::DoobFactor,
        tag: "doob".into(),
    })
}

/// Pointwise combination over the intersection of the operands' domains.
pub fn combine(parts: &[GeneratingFunction], mode: CombineMode) -> Result<GeneratingFunction> {
    let first = parts
        .first()
        .ok_or_else(|| Error::param("operands", "combine needs at least one operand"))?;
    if let CombineMode::Scale(c) = mode {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("scale must be positive and finite, got {c}")));
        }
    }
    let mut domain = first.domain;
    for g in &parts[1..] {
        domain = domain.intersect(&g.domain)?;
    }
    let names: Vec<&str> = parts.iter().map(|g| g.tag.as_str()).collect();
    let tag = match mode {
        CombineMode::Product => format!("product[{}]", names.join(", ")),
        CombineMode::Scale(c) => format!("scale({c}, {})", names.join(", ")),
        CombineMode::PointwiseMin => format!("min[{}]", names.join(", ")),
    };
    Ok(GeneratingFunction {
        domain,
        kind: Kind::Combined {
            mode,
            parts: parts.to_vec(),
        },
        tag,
    })
}

/// Supremum found on a grid, with the location where it was attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSup {
    pub value: f64,
    pub argmax_p: f64,
}

/// Maximum of `f` over `grid`; ties resolve to the smallest `p`.
pub(crate) fn grid_sup(
    grid: &[f64],
    what: &'static str,
    f: impl Fn(f64) -> f64,
) -> Result<GridSup> {
    let mut best = GridSup {
        value: f64::NEG_INFINITY,
        argmax_p: f64::NAN,
    };
    for &p in grid {
        let value = f(p);
        if !value.is_finite() {
            return Err(Error::NonFinite { what, p, value });
        }
        if value > best.value {
            best = GridSup { value, argmax_p: p };
        }
    }
    Ok(best)
}

/// `C = sup_p ν₁(p)/ν₂(p)` on a log grid over the common domain, so that
/// `ν₁ ≤ C ν₂` there. A grid supremum never exceeds the true one.
pub fn dominance_constant(
    nu1: &GeneratingFunction,
    nu2: &GeneratingFunction,
    grid_size: usize,
) -> Result<GridSup> {
    dominance_constant_with_cap(nu1, nu2, grid_size, P_MAX)
}

pub fn dominance_constant_with_cap(
    nu1: &GeneratingFunction,
    nu2: &GeneratingFunction,
    grid_size: usize,
    p_max: f64,
) -> Result<GridSup> {
    let domain = nu1.domain.intersect(&nu2.domain)?;
    let grid = domain.log_grid(grid_size, p_max)?;
    grid_sup(&grid, "ratio nu1/nu2", |p| nu1.eval(p) / nu2.eval(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> PDomain {
        PDomain::full()
    }

    #[test]
    fn power_values() {
        assert_eq!(make_power(2.0, full()).unwrap().eval(4.0), 2.0);
        assert_eq!(make_power(1.0, full()).unwrap().eval(3.5), 3.5);
        assert_eq!(make_power(4.0, full()).unwrap().eval(16.0), 2.0);
    }

    #[test]
    fn power_rejects_nonpositive_index() {
        assert!(make_power(0.0, full()).is_err());
        assert!(make_power(-1.0, full()).is_err());
    }

    #[test]
    fn doob_factor_values() {
        let v = make_doob_factor(PDomain::above(1.0).unwrap()).unwrap();
        assert_eq!(v.eval(2.0), 2.0);
        assert_eq!(v.eval(3.0), 1.5);
        assert!((v.eval(1e6) - 1.000001000001).abs() < 1e-12);
    }

    #[test]
    fn doob_factor_rejects_included_one() {
        assert!(make_doob_factor(PDomain::closed(1.0, 4.0).unwrap()).is_err());
        assert!(make_doob_factor(PDomain::closed(1.5, 4.0).unwrap()).is_ok());
    }

    #[test]
    fn domain_validation() {
        assert!(PDomain::new(0.5, 2.0, true, true).is_err());
        assert!(PDomain::new(2.0, 2.0, true, true).is_err());
        assert!(PDomain::new(1.0, f64::INFINITY, true, true).is_err());
        let d = PDomain::open(1.0, 3.0).unwrap();
        assert!(!d.contains(1.0) && d.contains(2.0) && !d.contains(3.0));
    }

    #[test]
    fn excluded_endpoints_are_nudged() {
        let d = PDomain::open(1.0, 4.0).unwrap();
        let (a, b) = d.grid_bounds(P_MAX).unwrap();
        assert!(a > 1.0 && d.contains(a));
        assert!(b < 4.0 && d.contains(b));
        let closed = PDomain::closed(1.0, 4.0).unwrap();
        assert_eq!(closed.grid_bounds(P_MAX).unwrap(), (1.0, 4.0));
        assert_eq!(full().grid_bounds(50.0).unwrap(), (1.0, 50.0));
    }

    #[test]
    fn intersection_keeps_tighter_flags() {
        let a = PDomain::closed(1.0, 4.0).unwrap();
        let b = PDomain::above(2.0).unwrap();
        let c = a.intersect(&b).unwrap();
        assert_eq!(c, PDomain::new(2.0, 4.0, false, true).unwrap());
        let d = PDomain::closed(5.0, 6.0).unwrap();
        assert!(matches!(a.intersect(&d), Err(Error::EmptyIntersection { .. })));
    }

    #[test]
    fn combine_examples() {
        let doob = make_doob_factor(PDomain::above(1.0).unwrap()).unwrap();
        let root = make_power(2.0, full()).unwrap();
        let prod = combine(&[doob, root.clone()], CombineMode::Product).unwrap();
        assert!((prod.eval(2.0) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(!prod.domain().contains(1.0));

        let one = GeneratingFunction::constant(1.0, full()).unwrap();
        let scaled = combine(&[one], CombineMode::Scale(3.0)).unwrap();
        assert_eq!(scaled.eval(7.0), 3.0);

        let two = GeneratingFunction::constant(2.0, full()).unwrap();
        let min = combine(&[root, two], CombineMode::PointwiseMin).unwrap();
        assert_eq!(min.eval(9.0), 2.0);
        assert_eq!(min.eval(1.0), 1.0);
    }

    #[test]
    fn combine_rejects_disjoint_domains() {
        let a = GeneratingFunction::constant(1.0, PDomain::closed(1.0, 2.0).unwrap()).unwrap();
        let b = GeneratingFunction::constant(1.0, PDomain::closed(3.0, 4.0).unwrap()).unwrap();
        assert!(combine(&[a, b], CombineMode::Product).is_err());
    }

    #[test]
    fn dominance_examples() {
        let d = PDomain::closed(1.0, 4.0).unwrap();
        let root = make_power(2.0, d).unwrap();
        let lin = make_power(1.0, d).unwrap();
        let c = dominance_constant(&root, &lin, 64).unwrap();
        assert_eq!(c.value, 1.0);
        assert_eq!(c.argmax_p, 1.0);

        assert_eq!(dominance_constant(&root, &root, 17).unwrap().value, 1.0);

        let twice = combine(std::slice::from_ref(&root), CombineMode::Scale(2.0)).unwrap();
        let c = dominance_constant(&twice, &root, 33).unwrap();
        assert!((c.value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dominance_rejects_small_grid() {
        let g = make_power(2.0, full()).unwrap();
        assert!(dominance_constant(&g, &g, 1).is_err());
    }

    #[test]
    fn table_interpolates_in_log_log() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 8.0].iter().map(|&p: &f64| (p, p.sqrt())).collect();
        let g = GeneratingFunction::from_table(&pts).unwrap();
        // a power law is linear in log-log coordinates
        assert!((g.eval(4.0) - 2.0).abs() < 1e-12);
        assert!((g.eval(1.5) - 1.5f64.sqrt()).abs() < 1e-12);
        assert!(g.try_eval(9.0).is_err());
    }

    #[test]
    fn table_rejects_bad_rows() {
        assert!(GeneratingFunction::from_table(&[(1.0, 1.0)]).is_err());
        assert!(GeneratingFunction::from_table(&[(2.0, 1.0), (1.0, 1.0)]).is_err());
        assert!(GeneratingFunction::from_table(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
    }

    #[test]
    fn log_grid_endpoints_exact() {
        let g = log_spaced(1.5, 64.0, 10).unwrap();
        assert_eq!(g[0], 1.5);
        assert_eq!(g[9], 64.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
