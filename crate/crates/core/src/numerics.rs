//! Numerical utilities shared across the crate: stable shape-parameter
//! transforms, compensated summation, and empirical-distribution helpers.

/// Shape values with `|xi|` at or below this threshold are routed to the
/// `xi = 0` limiting branch of the GEV/GP transforms.
pub const XI_ZERO_TOL: f64 = 1e-8;

/// `log(1 + xi * z) / xi`, continuously extended to `z` at `xi = 0`.
///
/// Requires `1 + xi * z > 0`. Evaluated through `ln_1p` so the regime
/// `XI_ZERO_TOL < |xi| < 1e-4` does not lose precision to cancellation.
#[inline]
pub fn shape_log1p(xi: f64, z: f64) -> f64 {
    if xi.abs() <= XI_ZERO_TOL {
        z
    } else {
        (xi * z).ln_1p() / xi
    }
}

/// Inverse companion of [`shape_log1p`]: `(exp(xi * w) - 1) / xi`,
/// continuously extended to `w` at `xi = 0`.
#[inline]
pub fn shape_expm1(xi: f64, w: f64) -> f64 {
    if xi.abs() <= XI_ZERO_TOL {
        w
    } else {
        (xi * w).exp_m1() / xi
    }
}

/// Kahan-compensated accumulator.
///
/// Keeps long criterion sums reproducible under permutation of the summands
/// to about one ulp of the total, independent of length.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty(), "ks_distance: empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("ks_distance: NaN sample"));
    let n = sorted.len() as f64;
    let mut sup = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = (f - i as f64 / n).abs();
        let hi = ((i + 1) as f64 / n - f).abs();
        sup = sup.max(lo).max(hi);
    }
    sup
}

/// Two-sided Kolmogorov critical value `sqrt(ln(2/alpha) / (2n))`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Sample median with the lower-median convention for even lengths.
pub fn lower_median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "lower_median: empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("lower_median: NaN value"));
    sorted[(sorted.len() - 1) / 2]
}

/// Nearest-rank quantile of a sample (`q` in `[0, 1]`).
pub fn quantile_nearest_rank(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile_nearest_rank: empty slice");
    assert!((0.0..=1.0).contains(&q), "quantile must be in [0, 1]");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("quantile: NaN value"));
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Mean and standard error of a sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    assert!(n >= 1.0);
    let mut acc = KahanSum::new();
    for &v in values {
        acc.add(v);
    }
    let mean = acc.value() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let mut sq = KahanSum::new();
    for &v in values {
        sq.add((v - mean) * (v - mean));
    }
    let var = sq.value() / (n - 1.0);
    (mean, (var / n).sqrt())
}
