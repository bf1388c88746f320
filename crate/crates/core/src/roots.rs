//! Inversion of strictly increasing scalar functions.

/// Bisection for `h(t) = target` on `[lo, hi]`, with `h` increasing.
///
/// Stops when `|h(t) - target| < abs_tol`, when the bracket can no longer
/// shrink, or after `max_iter` halvings. Returns the midpoint estimate and
/// its residual; the caller checks that the target was bracketed.
pub fn bisect_increasing<H: Fn(f64) -> f64>(
    h: H,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    abs_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let mut best = (lo, h(lo) - target);
    let hi_res = h(hi) - target;
    if hi_res.abs() < best.1.abs() {
        best = (hi, hi_res);
    }
    for _ in 0..max_iter {
        if best.1.abs() < abs_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = h(mid) - target;
        if r.abs() < best.1.abs() {
            best = (mid, r);
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_exponential() {
        let (t, r) = bisect_increasing(f64::exp, 2.0, 0.0, 1.0, 1e-14, 200);
        assert!((t - 2.0_f64.ln()).abs() < 1e-13);
        assert!(r.abs() < 1e-14);
    }

    #[test]
    fn endpoint_targets() {
        let (t, _) = bisect_increasing(|x| x, 0.0, 0.0, 1.0, 1e-15, 200);
        assert_eq!(t, 0.0);
        let (t, _) = bisect_increasing(|x| x, 1.0, 0.0, 1.0, 1e-15, 200);
        assert_eq!(t, 1.0);
    }

    #[test]
    fn flat_stretch_terminates() {
        // h' vanishes at 3π/2; bisection must still converge
        let h = |x: f64| 1.0 + x - x.cos();
        let target = h(3.0 * std::f64::consts::FRAC_PI_2);
        let (t, r) = bisect_increasing(h, target, 0.0, 6.0, 1e-13, 200);
        assert!(r.abs() < 1e-12);
        assert!((h(t) - target).abs() < 1e-12);
    }
}
