//! One-dimensional search helpers shared by the conjugate and transfer code.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[a, b]`.
///
/// Returns the best point evaluated, `(x, f(x))`. Non-finite evaluations are
/// treated as `-∞`, so the search steers away from them.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let score = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = score(x1);
    let mut f2 = score(x2);
    let mut best = if f2 > f1 { (x2, f2) } else { (x1, f1) };

    for _ in 0..iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = score(x1);
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = score(x2);
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
        if b - a <= f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
    }
    best
}

/// Golden-section search for a minimum, `(x, f(x))`.
pub fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let (x, v) = golden_max(
        |x| {
            let v = f(x);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                -v
            }
        },
        a,
        b,
        iters,
    );
    (x, -v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 100);
        assert!((x - 0.3).abs() < 1e-7);
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn finds_boundary_minimum() {
        let (x, _) = golden_min(|x| x, 2.0, 5.0, 80);
        assert!((x - 2.0).abs() < 1e-9);
    }

    #[test]
    fn avoids_nan() {
        let (x, v) = golden_max(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, 80);
        assert!(x <= 0.5 && v.is_finite());
    }
}
