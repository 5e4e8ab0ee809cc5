//! Overlapping Allan variance and noise-component identification.
//!
//! For a cluster size `n` the estimator averages the squared difference of
//! adjacent `n`-sample cluster means over every start index
//! `k = 0..N-2n`:
//!
//! ```text
//! avar(n) = 1 / (2 (N - 2n + 1)) * sum_k (mean(x[k+n..k+2n]) - mean(x[k..k+n]))^2
//! ```
//!
//! On a log-log plot of the Allan deviation `sigma(tau) = sqrt(avar)` white
//! noise has slope -1/2, flicker noise 0 and random walk +1/2. The
//! coefficients are read off straight segments of that plot:
//!
//! | component   | law                           | readout                        |
//! |-------------|-------------------------------|--------------------------------|
//! | white N     | `avar = N^2 / tau`            | `N = sigma(1)`                 |
//! | flicker B   | `avar = 2 B^2 ln 2 / pi`      | `B = sigma * sqrt(pi / 2 ln 2)` |
//! | random walk | `avar = K^2 tau / 3`          | `K = sigma(3)`                 |

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// Allan variance over a grid of cluster sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvarCurve {
    pub cluster_sizes: Vec<usize>,
    /// `n / sample_rate_hz`, seconds.
    pub taus: Vec<f64>,
    pub avar: Vec<f64>,
    pub adev: Vec<f64>,
    pub n_samples: usize,
    pub sample_rate_hz: f64,
}

impl AvarCurve {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }
}

/// Prefix sums carried as an unevaluated `hi + lo` pair (Neumaier), so that
/// window sums stay accurate on long records with a large DC level.
struct PrefixSums {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl PrefixSums {
    fn new(x: &[f64]) -> Self {
        let mut hi = Vec::with_capacity(x.len() + 1);
        let mut lo = Vec::with_capacity(x.len() + 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        hi.push(0.0);
        lo.push(0.0);
        for &v in x {
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
            hi.push(sum);
            lo.push(comp);
        }
        PrefixSums { hi, lo }
    }

    /// Sum of `x[a..b]`.
    #[inline]
    fn window(&self, a: usize, b: usize) -> f64 {
        (self.hi[b] - self.hi[a]) + (self.lo[b] - self.lo[a])
    }
}

/// Below this many window-sample operations per cluster size the window
/// sums are accumulated term by term instead of read off the prefix sums.
const DIRECT_WORK: usize = 1 << 16;

fn avar_at(x: &[f64], sums: &PrefixSums, n: usize) -> f64 {
    let len = x.len();
    let terms = len - 2 * n + 1;
    let nf = n as f64;
    let direct = len * n <= DIRECT_WORK;
    let window = |a: usize| -> f64 {
        if direct {
            let mut s = 0.0;
            for v in &x[a..a + n] {
                s += v;
            }
            s
        } else {
            sums.window(a, a + n)
        }
    };
    let mut acc = 0.0;
    for k in 0..terms {
        let d = window(k + n) / nf - window(k) / nf;
        acc += d * d;
    }
    acc / (2.0 * terms as f64)
}

/// Fully overlapping Allan variance for each cluster size.
///
/// Sizes are sorted and deduplicated; each must satisfy `1 <= n` and
/// `2n < N`.
pub fn allan_variance(ts: &TimeSeries, cluster_sizes: &[usize]) -> Result<AvarCurve> {
    let x = ts.samples();
    let len = x.len();
    if len < 4 {
        return Err(Error::invalid(format!(
            "Allan variance needs at least 4 samples, got {len}"
        )));
    }
    let mut sizes = cluster_sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() {
        return Err(Error::invalid("no cluster sizes given"));
    }
    if sizes[0] == 0 {
        return Err(Error::invalid("cluster size must be at least 1"));
    }
    if let Some(&n) = sizes.iter().find(|&&n| 2 * n >= len) {
        return Err(Error::ClusterTooLarge { n, len });
    }

    let sums = PrefixSums::new(x);
    let avar: Vec<f64> = sizes.par_iter().map(|&n| avar_at(x, &sums, n)).collect();
    let fs = ts.sample_rate_hz();
    Ok(AvarCurve {
        taus: sizes.iter().map(|&n| n as f64 / fs).collect(),
        adev: avar.iter().map(|v| v.sqrt()).collect(),
        avar,
        cluster_sizes: sizes,
        n_samples: len,
        sample_rate_hz: fs,
    })
}

/// Log-spaced cluster sizes from 1 up to `n_samples / 2 - 1`, about
/// `points_per_decade` per decade, deduplicated after rounding.
pub fn default_cluster_grid(n_samples: usize, points_per_decade: usize) -> Vec<usize> {
    let cap = (n_samples / 2).saturating_sub(1).max(1);
    let ppd = points_per_decade.max(1) as f64;
    let mut grid: Vec<usize> = Vec::new();
    for i in 0.. {
        let n = 10f64.powf(i as f64 / ppd).round() as usize;
        if n > cap {
            break;
        }
        if grid.last() != Some(&n) {
            grid.push(n);
        }
    }
    grid
}

/// Straight-segment classification settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentOptions {
    /// Allowed `|slope - target|` on the Allan-deviation log-log plot.
    pub slope_tolerance: f64,
    /// Width of each sliding fit window, in decades of tau.
    pub window_decades: f64,
    /// Largest RMS residual (log10 units) for a window to count as straight.
    pub max_residual: f64,
    /// Points with `n > max_cluster_fraction * N` are ignored: too few
    /// independent clusters back them.
    pub max_cluster_fraction: f64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        SegmentOptions {
            slope_tolerance: 0.15,
            window_decades: 1.0,
            max_residual: 0.03,
            max_cluster_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseComponent {
    White,
    Flicker,
    RandomWalk,
}

impl NoiseComponent {
    pub const ALL: [NoiseComponent; 3] = [
        NoiseComponent::White,
        NoiseComponent::Flicker,
        NoiseComponent::RandomWalk,
    ];

    /// Log-log slope of the Allan deviation.
    pub fn slope(self) -> f64 {
        match self {
            NoiseComponent::White => -0.5,
            NoiseComponent::Flicker => 0.0,
            NoiseComponent::RandomWalk => 0.5,
        }
    }
}

/// How one coefficient was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    pub component: NoiseComponent,
    /// Free least-squares slope over the window.
    pub slope: f64,
    pub tau_start: f64,
    pub tau_end: f64,
    /// RMS residual of the free fit, log10 units.
    pub residual: f64,
    pub points: usize,
    /// tau at which the fixed-slope line was evaluated.
    pub readout_tau: f64,
    /// Allan deviation of the fixed-slope line at `readout_tau`.
    pub readout_adev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCoefficients {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub white_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flicker_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_walk_k: Option<f64>,
    pub fit_report: Vec<SegmentFit>,
}

impl NoiseCoefficients {
    pub fn get(&self, component: NoiseComponent) -> Option<f64> {
        match component {
            NoiseComponent::White => self.white_n,
            NoiseComponent::Flicker => self.flicker_b,
            NoiseComponent::RandomWalk => self.random_walk_k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Least-squares line through `(x, y)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Some(LineFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
    })
}

/// Log-log slope of the Allan deviation over points with
/// `tau_lo <= tau <= tau_hi`.
pub fn adev_slope(curve: &AvarCurve, tau_lo: f64, tau_hi: f64) -> Option<LineFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = curve
        .taus
        .iter()
        .zip(&curve.adev)
        .filter(|(&t, &s)| t >= tau_lo && t <= tau_hi && s > 0.0)
        .map(|(t, s)| (t.log10(), s.log10()))
        .unzip();
    fit_line(&x, &y)
}

pub fn extract_coefficients(curve: &AvarCurve) -> Result<NoiseCoefficients> {
    extract_coefficients_with(curve, &SegmentOptions::default())
}

/// Identifies straight segments of the Allan-deviation plot and reads the
/// white, flicker and random-walk coefficients off them.
///
/// Every run of points spanning `window_decades` is fitted by least squares.
/// A window is classified as a component when its slope is within
/// `slope_tolerance` of the component's slope and its residual is below
/// `max_residual`. Among a component's windows the one closest to the
/// target slope wins; the coefficient comes from the line of exactly the
/// target slope through that window, extrapolated to the readout tau if
/// needed. A component without a qualifying window is reported absent.
pub fn extract_coefficients_with(curve: &AvarCurve, opts: &SegmentOptions) -> Result<NoiseCoefficients> {
    check_density(curve)?;

    let limit = opts.max_cluster_fraction * curve.n_samples as f64;
    let points: Vec<(f64, f64)> = curve
        .cluster_sizes
        .iter()
        .zip(curve.taus.iter().zip(&curve.adev))
        .filter(|(&n, (_, &s))| n as f64 <= limit && s > 0.0)
        .map(|(_, (t, s))| (t.log10(), s.log10()))
        .collect();

    let mut best: [Option<(f64, SegmentFit)>; 3] = [None, None, None];
    for start in 0..points.len() {
        let lo = points[start].0;
        let window: Vec<(f64, f64)> = points[start..]
            .iter()
            .take_while(|p| p.0 <= lo + opts.window_decades + 1e-9)
            .copied()
            .collect();
        let span = window.last().map_or(0.0, |p| p.0 - lo);
        if window.len() < 3 || span < 0.9 * opts.window_decades {
            continue;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = window.iter().copied().unzip();
        let Some(fit) = fit_line(&x, &y) else { continue };
        if fit.residual > opts.max_residual {
            continue;
        }
        for (slot, component) in best.iter_mut().zip(NoiseComponent::ALL) {
            let target = component.slope();
            let miss = (fit.slope - target).abs();
            if miss > opts.slope_tolerance {
                continue;
            }
            if slot.as_ref().is_some_and(|(m, _)| *m <= miss) {
                continue;
            }
            // fixed-slope line through the window
            let intercept = y.iter().zip(&x).map(|(b, a)| b - target * a).sum::<f64>() / x.len() as f64;
            let readout_tau = match component {
                NoiseComponent::White => 1.0,
                NoiseComponent::RandomWalk => 3.0,
                NoiseComponent::Flicker => 10f64.powf(0.5 * (x[0] + x[x.len() - 1])),
            };
            let readout_adev = 10f64.powf(intercept + target * readout_tau.log10());
            *slot = Some((
                miss,
                SegmentFit {
                    component,
                    slope: fit.slope,
                    tau_start: 10f64.powf(x[0]),
                    tau_end: 10f64.powf(x[x.len() - 1]),
                    residual: fit.residual,
                    points: x.len(),
                    readout_tau,
                    readout_adev,
                },
            ));
        }
    }

    let flicker_scale = (std::f64::consts::PI / (2.0 * std::f64::consts::LN_2)).sqrt();
    let [white, flicker, walk] = best.map(|b| b.map(|(_, fit)| fit));
    Ok(NoiseCoefficients {
        white_n: white.as_ref().map(|f| f.readout_adev),
        flicker_b: flicker.as_ref().map(|f| f.readout_adev * flicker_scale),
        random_walk_k: walk.as_ref().map(|f| f.readout_adev),
        fit_report: [white, flicker, walk].into_iter().flatten().collect(),
    })
}

fn check_density(curve: &AvarCurve) -> Result<()> {
    let too_few = |why: String| Err(Error::invalid(format!("too few points for coefficient extraction: {why}")));
    if curve.len() < 7 {
        return too_few(format!("{} points", curve.len()));
    }
    let span = (curve.taus[curve.len() - 1] / curve.taus[0]).log10();
    if span < 2.0 {
        return too_few(format!("curve spans {span:.2} decades, need 2"));
    }
    let density = (curve.len() - 1) as f64 / span;
    if density < 3.0 - 1e-9 {
        return too_few(format!("{density:.2} points per decade, need 3"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(v, 1.0).unwrap()
    }

    /// Direct transcription of the estimator with explicit cluster sums.
    fn naive_avar(x: &[f64], n: usize) -> f64 {
        let terms = x.len() - 2 * n + 1;
        let nf = n as f64;
        let mut acc = 0.0;
        for k in 0..terms {
            let mut s1 = 0.0;
            for v in &x[k..k + n] {
                s1 += v;
            }
            let mut s2 = 0.0;
            for v in &x[k + n..k + 2 * n] {
                s2 += v;
            }
            let d = s2 / nf - s1 / nf;
            acc += d * d;
        }
        acc / (2.0 * terms as f64)
    }

    #[test]
    fn hand_case() {
        let c = allan_variance(&ts(vec![1.0, 2.0, 3.0, 4.0]), &[1]).unwrap();
        assert_eq!(c.avar, vec![0.5]);
        assert_eq!(c.adev, vec![0.5f64.sqrt()]);
    }

    #[test]
    fn constant_series_is_zero() {
        let c = allan_variance(&ts(vec![3.25; 50]), &[1, 5, 12, 24]).unwrap();
        assert!(c.avar.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cluster_bounds() {
        assert!(matches!(
            allan_variance(&ts(vec![0.0; 10]), &[5]),
            Err(Error::ClusterTooLarge { n: 5, len: 10 })
        ));
        assert!(allan_variance(&ts(vec![0.0; 10]), &[4]).is_ok());
        assert!(allan_variance(&ts(vec![0.0; 3]), &[1]).is_err());
        assert!(allan_variance(&ts(vec![0.0; 10]), &[0]).is_err());
    }

    #[test]
    fn taus_use_sample_rate() {
        let t = TimeSeries::new((0..100).map(f64::from).collect(), 50.0).unwrap();
        let c = allan_variance(&t, &[10, 5, 5]).unwrap();
        assert_eq!(c.cluster_sizes, vec![5, 10]);
        assert_eq!(c.taus, vec![0.1, 0.2]);
    }

    #[test]
    fn grid_examples() {
        assert_eq!(default_cluster_grid(8, 10), vec![1, 2, 3]);
        let g = default_cluster_grid(1000, 4);
        assert_eq!(g[0], 1);
        assert!(*g.last().unwrap() <= 499);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let big = default_cluster_grid(1_000_000, 10);
        assert!((45..=65).contains(&big.len()), "{} points", big.len());
        assert!(*big.last().unwrap() >= 100_000);
    }

    #[test]
    fn line_fit_exact() {
        let x = [0.0, 1.0, 2.0];
        let y = [1.0, 0.5, 0.0];
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-15);
        assert!((f.intercept - 1.0).abs() < 1e-15);
        assert!(f.residual < 1e-15);
    }

    fn synthetic_curve(law: impl Fn(f64) -> f64) -> AvarCurve {
        let sizes = default_cluster_grid(10_000_000, 8);
        let taus: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        let avar: Vec<f64> = taus.iter().map(|&t| law(t)).collect();
        AvarCurve {
            adev: avar.iter().map(|v| v.sqrt()).collect(),
            avar,
            taus,
            cluster_sizes: sizes,
            n_samples: 10_000_000,
            sample_rate_hz: 1.0,
        }
    }

    #[test]
    fn exact_laws_give_exact_coefficients() {
        let n = 0.3;
        let c = extract_coefficients(&synthetic_curve(|t| n * n / t)).unwrap();
        assert!((c.white_n.unwrap() - n).abs() < 1e-12);
        assert_eq!(c.flicker_b, None);
        assert_eq!(c.random_walk_k, None);

        let k = 0.02;
        let c = extract_coefficients(&synthetic_curve(|t| k * k * t / 3.0)).unwrap();
        assert!((c.random_walk_k.unwrap() - k).abs() < 1e-12);
        assert_eq!(c.white_n, None);

        let b = 0.7;
        let plateau = 2.0 * b * b * std::f64::consts::LN_2 / std::f64::consts::PI;
        let c = extract_coefficients(&synthetic_curve(|_| plateau)).unwrap();
        assert!((c.flicker_b.unwrap() - b).abs() < 1e-12);
        assert_eq!(c.fit_report.len(), 1);
    }

    #[test]
    fn sparse_curve_is_rejected() {
        let mut c = synthetic_curve(|t| 1.0 / t);
        c.cluster_sizes.truncate(5);
        c.taus.truncate(5);
        c.avar.truncate(5);
        c.adev.truncate(5);
        assert!(extract_coefficients(&c).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_naive_double_loop_on_exact_data(v in prop::collection::vec(-1000i32..1000, 4..=64)) {
            let x: Vec<f64> = v.iter().map(|&i| f64::from(i)).collect();
            let sizes: Vec<usize> = (1..).take_while(|n| 2 * n < x.len()).collect();
            let c = allan_variance(&ts(x.clone()), &sizes).unwrap();
            for (i, &n) in sizes.iter().enumerate() {
                prop_assert_eq!(c.avar[i].to_bits(), naive_avar(&x, n).to_bits());
            }
        }

        #[test]
        fn matches_naive_double_loop_on_short_reals(v in prop::collection::vec(-10.0f64..10.0, 4..=64)) {
            let sizes: Vec<usize> = (1..).take_while(|n| 2 * n < v.len()).collect();
            let c = allan_variance(&ts(v.clone()), &sizes).unwrap();
            for (i, &n) in sizes.iter().enumerate() {
                prop_assert_eq!(c.avar[i].to_bits(), naive_avar(&v, n).to_bits());
            }
        }

        #[test]
        fn scale_and_offset(v in prop::collection::vec(-10.0f64..10.0, 8..200), scale in 0.01f64..100.0, offset in -1e3f64..1e3) {
            prop_assume!(v.iter().any(|&x| (x - v[0]).abs() > 1e-3));
            let sizes = default_cluster_grid(v.len(), 5);
            let base = allan_variance(&ts(v.clone()), &sizes).unwrap();
            let scaled = allan_variance(&ts(v.iter().map(|x| scale * x).collect()), &sizes).unwrap();
            let shifted = allan_variance(&ts(v.iter().map(|x| x + offset).collect()), &sizes).unwrap();
            for i in 0..sizes.len() {
                let b = base.avar[i];
                prop_assert!((scaled.avar[i] - scale * scale * b).abs() <= 1e-12 * scale * scale * b);
                prop_assert!((shifted.avar[i] - b).abs() <= 1e-10 * b);
            }
        }
    }
}
