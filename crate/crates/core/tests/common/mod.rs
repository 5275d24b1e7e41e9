//! Independent oracles for the acceptance suite: adaptive quadrature and
//! dense-grid brute force. Nothing here calls back into the code paths under
//! test beyond plain density/quantile evaluations.

/// Adaptive Simpson on a finite interval.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson_estimate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (f(a) + 4.0 * fm + f(b)), fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, _) = simpson_estimate(f, a, m);
        let (right, _) = simpson_estimate(f, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    let (whole, _) = simpson_estimate(f, a, b);
    recurse(f, a, b, whole, tol, 52)
}

/// Integrate a density over its support by splitting at the supplied
/// breakpoints (typically quantiles, so each panel carries moderate mass).
/// The breakpoints only steer the adaptivity; the value is a plain integral.
pub fn integrate_panels(f: &dyn Fn(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    assert!(breaks.len() >= 2);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        assert!(w[1] >= w[0], "breakpoints must be sorted: {w:?}");
        if w[1] > w[0] {
            total += simpson(f, w[0], w[1], tol / breaks.len() as f64);
        }
    }
    total
}

/// Argmax of `f` over a `points x points` dense grid on the box, skipping
/// `-inf` cells; ties resolve to the first (lexicographically smallest) hit.
pub fn dense_grid_argmax(
    f: &dyn Fn(&[f64]) -> f64,
    lower: &[f64; 2],
    upper: &[f64; 2],
    points: usize,
) -> Option<([f64; 2], f64)> {
    let step = |j: usize, k: usize| lower[j] + (upper[j] - lower[j]) * k as f64 / (points - 1) as f64;
    let mut best: Option<([f64; 2], f64)> = None;
    for k1 in 0..points {
        for k0 in 0..points {
            let eta = [step(0, k0), step(1, k1)];
            let v = f(&eta);
            if v == f64::NEG_INFINITY {
                continue;
            }
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((eta, v));
            }
        }
    }
    best
}
