//! Distribution utilities: empirical CDFs, Weibull sampling and fitting, and
//! Kolmogorov-Smirnov distances.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    Empty,
    #[error("sample contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("Weibull fit needs at least {needed} samples, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("Weibull fit needs strictly positive samples, found {value} at index {index}")]
    NonPositive { index: usize, value: f64 },
    #[error("all samples are equal; the Weibull likelihood has no maximum")]
    Degenerate,
    #[error("Weibull shape and scale must be positive, got shape={shape}, scale={scale}")]
    BadParameters { shape: f64, scale: f64 },
}

/// Right-continuous empirical CDF over a sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Ecdf, StatsError> {
        if values.is_empty() {
            return Err(StatsError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(i));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    /// Distinct values with the cumulative fraction reached at each.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let cum = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = cum,
                _ => out.push((v, cum)),
            }
        }
        out
    }

    /// Lower quantile: the smallest sample value `x` with `F(x) >= q`.
    /// `quantile(0.5)` of `[1, 2, 3, 4]` is 2.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted.len();
        let rank = (q.clamp(0.0, 1.0) * n as f64).ceil() as usize;
        self.sorted[rank.clamp(1, n) - 1]
    }
}

pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>, StatsError> {
    Ok(Ecdf::new(values)?.points())
}

/// Inverse-transform draw `scale * (-ln U)^(1/shape)`.
pub fn weibull_sample<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1], keeping ln finite.
    let u: f64 = 1.0 - rng.gen::<f64>();
    scale * (-u.ln()).powf(1.0 / shape)
}

pub fn weibull_cdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    -(-(x / scale).powf(shape)).exp_m1()
}

pub fn weibull_quantile(p: f64, shape: f64, scale: f64) -> f64 {
    scale * (-(-p).ln_1p()).powf(1.0 / shape)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedWeibull {
    pub shape: f64,
    pub scale: f64,
    pub n_samples: usize,
    pub ks_statistic: f64,
}

impl FittedWeibull {
    pub fn cdf(&self, x: f64) -> f64 {
        weibull_cdf(x, self.shape, self.scale)
    }

    /// Advisory 5% KS threshold for this sample size.
    pub fn ks_critical(&self) -> f64 {
        ks_critical_5pct(self.n_samples)
    }
}

const MLE_MIN_SAMPLES: usize = 10;
const MLE_TOL: f64 = 1e-8;
const MLE_BRACKET: (f64, f64) = (1e-3, 50.0);

/// Maximum-likelihood Weibull fit.
///
/// The profile score for the shape `k`,
///
/// ```text
/// g(k) = sum(x^k ln x) / sum(x^k) - 1/k - mean(ln x)
/// ```
///
/// is strictly increasing, so its root is found by bisection on a bracket
/// that starts at `[1e-3, 50]` and widens geometrically when needed. The
/// scale then follows as `(mean(x^k))^(1/k)`. Powers are evaluated relative
/// to the largest sample so heavy-tailed data does not overflow.
pub fn weibull_mle(samples: &[f64]) -> Result<FittedWeibull, StatsError> {
    if samples.len() < MLE_MIN_SAMPLES {
        return Err(StatsError::TooFew {
            needed: MLE_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    for (index, &value) in samples.iter().enumerate() {
        if !value.is_finite() {
            return Err(StatsError::NonFinite(index));
        }
        if value <= 0.0 {
            return Err(StatsError::NonPositive { index, value });
        }
    }
    let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    let max_log = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_log = logs.iter().copied().fold(f64::INFINITY, f64::min);
    if max_log == min_log {
        return Err(StatsError::Degenerate);
    }
    let n = logs.len() as f64;
    let mean_log = logs.iter().sum::<f64>() / n;
    // Centering on the max keeps every weight in (0, 1].
    let centered: Vec<f64> = logs.iter().map(|l| l - max_log).collect();

    let score = |k: f64| -> f64 {
        let (mut s0, mut s1) = (0.0, 0.0);
        for &c in &centered {
            let w = (k * c).exp();
            s0 += w;
            s1 += w * c;
        }
        s1 / s0 + max_log - 1.0 / k - mean_log
    };

    let (mut lo, mut hi) = MLE_BRACKET;
    while score(lo) > 0.0 {
        lo /= 2.0;
    }
    while score(hi) < 0.0 {
        hi *= 2.0;
    }
    while hi - lo > MLE_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if score(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let shape = 0.5 * (lo + hi);
    let mean_pow = centered.iter().map(|c| (shape * c).exp()).sum::<f64>() / n;
    let scale = max_log.exp() * mean_pow.powf(1.0 / shape);
    let ks_statistic = ks_statistic(samples, |x| weibull_cdf(x, shape, scale))?;
    Ok(FittedWeibull {
        shape,
        scale,
        n_samples: samples.len(),
        ks_statistic,
    })
}

/// One-sample KS distance `sup |F_n(x) - F(x)|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64, StatsError> {
    let e = Ecdf::new(samples)?;
    let n = e.len() as f64;
    let mut d: f64 = 0.0;
    let values = e.values();
    let mut i = 0;
    while i < values.len() {
        let x = values[i];
        let mut j = i;
        while j < values.len() && values[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((j as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = j;
    }
    Ok(d.min(1.0))
}

/// KS distance for integer data: `max_k |F_n(k) - F(k)|` over the observed
/// range. Comparing only at integers avoids the spurious jumps the
/// continuous form reports for discrete references.
pub fn ks_statistic_discrete<F: Fn(usize) -> f64>(samples: &[usize], cdf: F) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let max = samples.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for &s in samples {
        counts[s] += 1;
    }
    let n = samples.len() as f64;
    let mut cum = 0usize;
    let mut d: f64 = 0.0;
    for (k, c) in counts.iter().enumerate() {
        cum += c;
        d = d.max((cum as f64 / n - cdf(k)).abs());
    }
    d
}

/// Two-sample KS distance `sup |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let ea = Ecdf::new(a)?;
    let eb = Ecdf::new(b)?;
    let (va, vb) = (ea.values(), eb.values());
    let (na, nb) = (va.len() as f64, vb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < va.len() && j < vb.len() {
        let x = va[i].min(vb[j]);
        while i < va.len() && va[i] <= x {
            i += 1;
        }
        while j < vb.len() && vb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Large-sample 5% critical value `1.36 / sqrt(n)`.
pub fn ks_critical_5pct(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

/// Two-sample analogue `1.36 * sqrt((n + m) / (n m))`.
pub fn ks_critical_5pct_two_sample(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.36 * ((n + m) / (n * m)).sqrt()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ecdf_examples() {
        assert_eq!(ecdf(&[5.0]).unwrap(), vec![(5.0, 1.0)]);
        let e = Ecdf::new(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(e.quantile(0.5), 2.0);
        assert_eq!(e.quantile(0.0), 1.0);
        assert_eq!(e.quantile(1.0), 4.0);
        assert_eq!(e.eval(2.0), 0.5);
        assert_eq!(e.eval(0.5), 0.0);
        assert!(matches!(Ecdf::new(&[]), Err(StatsError::Empty)));
    }

    #[test]
    fn ecdf_ties_collapse() {
        assert_eq!(
            ecdf(&[1.0, 1.0, 2.0, 1.0]).unwrap(),
            vec![(1.0, 0.75), (2.0, 1.0)]
        );
    }

    #[test]
    fn ecdf_resampling_stays_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let original: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>()).collect();
        let e = Ecdf::new(&original).unwrap();
        let n = 4000;
        let resampled: Vec<f64> = (0..n).map(|_| e.quantile(rng.gen::<f64>())).collect();
        let d = ks_two_sample(&original, &resampled).unwrap();
        assert!(d <= 2.0 / (n as f64).sqrt(), "D = {d}");
    }

    #[test]
    fn weibull_cdf_points() {
        assert_eq!(weibull_cdf(0.0, 0.4, 1284.0), 0.0);
        assert!((weibull_cdf(1e300, 0.4, 1284.0) - 1.0).abs() < 1e-15);
        for shape in [0.35, 0.9, 1.0, 3.0] {
            let v = weibull_cdf(550.0, shape, 550.0);
            assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn weibull_quantile_inverts_cdf() {
        for p in [1e-9, 0.01, 0.25, 0.5, 0.9, 0.999_999] {
            for (shape, scale) in [(0.4, 1284.0), (0.35, 550.0), (2.0, 1.0)] {
                let x = weibull_quantile(p, shape, scale);
                assert!((weibull_cdf(x, shape, scale) - p).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn weibull_sample_mean_matches_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let s: f64 = (0..n).map(|_| weibull_sample(0.4, 1284.0, &mut rng)).sum();
        let expected = 1284.0 * statrs::function::gamma::gamma(1.0 + 1.0 / 0.4);
        let m = s / n as f64;
        assert!((m / expected - 1.0).abs() < 0.02, "mean {m} vs {expected}");
    }

    fn draw(shape: f64, scale: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| weibull_sample(shape, scale, &mut rng)).collect()
    }

    #[test]
    fn mle_recovers_session_models() {
        for (shape, scale) in [(0.4, 1284.0), (0.35, 550.0)] {
            let fit = weibull_mle(&draw(shape, scale, 100_000, 5)).unwrap();
            assert!((fit.shape - shape).abs() < 0.02, "{fit:?}");
            assert!((fit.scale / scale - 1.0).abs() < 0.05, "{fit:?}");
            assert!(fit.ks_statistic < fit.ks_critical());
        }
    }

    #[test]
    fn mle_exponential_case() {
        let fit = weibull_mle(&draw(1.0, 10.0, 50_000, 9)).unwrap();
        assert!((fit.shape - 1.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn mle_rejects_bad_samples() {
        assert!(matches!(
            weibull_mle(&[1.0; 5]),
            Err(StatsError::TooFew { .. })
        ));
        assert!(matches!(
            weibull_mle(&[2.0; 20]),
            Err(StatsError::Degenerate)
        ));
        let mut v = vec![1.0; 20];
        v[3] = -1.0;
        assert!(matches!(
            weibull_mle(&v),
            Err(StatsError::NonPositive { index: 3, .. })
        ));
        v[3] = 0.0;
        assert!(weibull_mle(&v).is_err());
    }

    #[test]
    fn mle_error_shrinks_with_n() {
        // Average |shape error| over replicates at n = 1e3, 1e4, 1e5; the
        // log-log slope should sit near -1/2.
        let ns = [1_000usize, 10_000, 100_000];
        let reps = [40u64, 20, 8];
        let mut errs = Vec::new();
        for (&n, &r) in ns.iter().zip(&reps) {
            let e: f64 = (0..r)
                .map(|s| (weibull_mle(&draw(0.4, 1284.0, n, 100 + s)).unwrap().shape - 0.4).abs())
                .sum::<f64>()
                / r as f64;
            errs.push(e);
        }
        let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log10()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.log10()).collect();
        let (mx, my) = (mean(&xs), mean(&ys));
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((-0.8..=-0.3).contains(&slope), "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn ks_examples() {
        let a = [0.3, 0.1, 0.7];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        let step = |x: f64| if x < 0.5 { 0.0 } else { 1.0 };
        let d = ks_statistic(&u, step).unwrap();
        assert!((d - 0.5).abs() < 0.02, "D = {d}");
    }

    #[test]
    fn ks_two_sample_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..300).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..170).map(|_| rng.gen::<f64>() * 1.2).collect();
        let d1 = ks_two_sample(&a, &b).unwrap();
        let d2 = ks_two_sample(&b, &a).unwrap();
        assert_eq!(d1, d2);
        assert!((0.0..=1.0).contains(&d1));
        let disjoint = ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(disjoint, 1.0);
    }

    #[test]
    fn ks_null_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 500;
        let trials = 400;
        let passed = (0..trials)
            .filter(|_| {
                let s: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
                ks_statistic(&s, |x| x.clamp(0.0, 1.0)).unwrap() <= ks_critical_5pct(n)
            })
            .count();
        assert!(passed as f64 / trials as f64 >= 0.93, "{passed}/{trials}");
    }
}
