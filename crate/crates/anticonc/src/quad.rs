//! Adaptive Simpson quadrature shared by the integral-bound routines.
//!
//! All integrands here are smooth products of exponentials and cosines, so
//! Simpson with Richardson correction converges fast; the adaptive splitter
//! only spends panels where curvature concentrates.

/// Default absolute tolerance for bound integrals.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

/// Default recursion cap; 2^40 panels is far beyond any integrand used here,
/// so hitting it means the tolerance request was unreasonable rather than the
/// integrand hard. The best available estimate is returned in that case.
pub const DEFAULT_MAX_DEPTH: u32 = 40;

/// Forced subdivision levels before the error test may accept a panel.
/// Guards against spikes or kinks that the first few nodes straddle; 2^6
/// initial panels cost ~129 evaluations, negligible for every integrand here.
const MIN_DEPTH: u32 = 6;

/// Adaptive Simpson integral of `f` over `[a, b]` with absolute tolerance
/// `tol` and recursion depth cap `max_depth`. Uses the standard halving
/// rule: accept a panel when |S_half - S| <= 15 tol_panel and add the
/// Richardson term (S_half - S)/15.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> f64 {
    assert!(a.is_finite() && b.is_finite() && b >= a);
    assert!(tol > 0.0);
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson_panel(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth, max_depth.min(MIN_DEPTH))
}

fn simpson_panel(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth_left: u32,
    forced_left: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_panel(a, m, fa, flm, fm);
    let right = simpson_panel(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth_left == 0 || (forced_left == 0 && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    let forced = forced_left.saturating_sub(1);
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth_left - 1, forced)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth_left - 1, forced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cubic_is_exact() {
        // Simpson integrates cubics exactly regardless of tolerance.
        let val = adaptive_simpson(&|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-6, DEFAULT_MAX_DEPTH);
        assert!((val - 0.0).abs() < 1e-13, "val = {val}");
    }

    #[test]
    fn sine_over_half_period() {
        let val = adaptive_simpson(&|x| x.sin(), 0.0, PI, 1e-12, DEFAULT_MAX_DEPTH);
        assert!((val - 2.0).abs() < 1e-11);
    }

    #[test]
    fn gaussian_tail_window() {
        // int_0^8 e^{-x^2} dx = sqrt(pi)/2 erf(8); erf(8) = 1 to machine precision.
        let val = adaptive_simpson(&|x| (-x * x).exp(), 0.0, 8.0, 1e-12, DEFAULT_MAX_DEPTH);
        assert!((val - PI.sqrt() / 2.0).abs() < 1e-11, "val = {val}");
    }

    #[test]
    fn narrow_spike_resolved() {
        // Spike of width ~1e-3 at x = 0.3; total mass ~ sqrt(pi) * 1e-3.
        let f = |x: f64| (-((x - 0.3) / 1e-3).powi(2)).exp();
        let val = adaptive_simpson(&f, 0.0, 1.0, 1e-12, DEFAULT_MAX_DEPTH);
        let expected = PI.sqrt() * 1e-3;
        assert!((val - expected).abs() < 1e-10, "val = {val}");
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(adaptive_simpson(&|x| x, 3.0, 3.0, 1e-10, DEFAULT_MAX_DEPTH), 0.0);
    }

    #[test]
    fn additivity_over_split() {
        let f = |x: f64| (-x * x).exp() * (3.0 * x).cos();
        let whole = adaptive_simpson(&f, 0.0, 4.0, 1e-12, DEFAULT_MAX_DEPTH);
        let parts = adaptive_simpson(&f, 0.0, 1.3, 1e-12, DEFAULT_MAX_DEPTH)
            + adaptive_simpson(&f, 1.3, 4.0, 1e-12, DEFAULT_MAX_DEPTH);
        assert!((whole - parts).abs() < 1e-11);
    }
}
