//! Time-series containers, frequency bands, the Fourier grid, and lag-domain
//! covariance primitives shared by every analysis.
//!
//! Frequencies inside the library are in cycles per sample, in `(-0.5, 0.5]`.
//! Bands carry their limits in Hertz and are converted with the series'
//! sample rate at the point of use.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `T x P` real-valued multichannel recording.
///
/// Samples are stored channel-major (one `Vec` per channel) because nearly
/// every operation (filtering, Fourier transforms, lagged products) walks a
/// single channel at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelSeries {
    channels: Vec<Vec<f64>>,
    sample_rate_hz: f64,
    labels: Vec<String>,
}

impl MultiChannelSeries {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate_hz: f64, labels: Vec<String>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidInput("series needs at least one channel".into()));
        }
        let len = channels[0].len();
        if len < 2 {
            return Err(Error::InvalidInput(format!(
                "series needs at least 2 samples, got {len}"
            )));
        }
        if let Some(p) = channels.iter().position(|c| c.len() != len) {
            return Err(Error::InvalidInput(format!(
                "channel {p} has {} samples, expected {len}",
                channels[p].len()
            )));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if labels.len() != channels.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} channels",
                labels.len(),
                channels.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate channel label '{l}'")));
            }
        }
        for (p, c) in channels.iter().enumerate() {
            if let Some(t) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite value at sample {t} of channel {p}"
                )));
            }
        }
        Ok(Self {
            channels,
            sample_rate_hz,
            labels,
        })
    }

    /// Builds a series with default labels `X1..XP`.
    pub fn from_channels(channels: Vec<Vec<f64>>, sample_rate_hz: f64) -> Result<Self> {
        let labels = default_labels(channels.len());
        Self::new(channels, sample_rate_hz, labels)
    }

    /// Builds a series from row-major samples (one row per time point).
    pub fn from_rows(rows: &[Vec<f64>], sample_rate_hz: f64, labels: Vec<String>) -> Result<Self> {
        let p = labels.len();
        let mut channels = vec![Vec::with_capacity(rows.len()); p];
        for (t, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::InvalidInput(format!(
                    "row {t} has {} values, expected {p}",
                    row.len()
                )));
            }
            for (c, v) in channels.iter_mut().zip(row) {
                c.push(*v);
            }
        }
        Self::new(channels, sample_rate_hz, labels)
    }

    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of channels `P`.
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn channel(&self, p: usize) -> &[f64] {
        &self.channels[p]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn get(&self, t: usize, p: usize) -> f64 {
        self.channels[p][t]
    }

    /// Same sample rate and labels, new data.
    pub fn with_channels(&self, channels: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(channels, self.sample_rate_hz, self.labels.clone())
    }

    /// Keeps the listed channels, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let mut channels = Vec::with_capacity(idx.len());
        let mut labels = Vec::with_capacity(idx.len());
        for &p in idx {
            self.check_channel(p)?;
            channels.push(self.channels[p].clone());
            labels.push(self.labels[p].clone());
        }
        Self::new(channels, self.sample_rate_hz, labels)
    }

    /// Samples `start..start + len` of every channel.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() {
            return Err(Error::InvalidInput(format!(
                "window {start}..{} exceeds series length {}",
                start + len,
                self.len()
            )));
        }
        let channels = self
            .channels
            .iter()
            .map(|c| c[start..start + len].to_vec())
            .collect();
        Self::new(channels, self.sample_rate_hz, self.labels.clone())
    }

    /// Row `t` as a vector over channels.
    pub fn row(&self, t: usize) -> Vec<f64> {
        self.channels.iter().map(|c| c[t]).collect()
    }

    pub fn check_channel(&self, p: usize) -> Result<()> {
        if p >= self.n_channels() {
            return Err(Error::Config(format!(
                "channel index {p} out of range (series has {} channels)",
                self.n_channels()
            )));
        }
        Ok(())
    }

    /// Converts a frequency in Hertz to cycles per sample.
    pub fn hz_to_cycles(&self, hz: f64) -> f64 {
        hz / self.sample_rate_hz
    }
}

pub fn default_labels(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("X{i}")).collect()
}

/// A named frequency interval in Hertz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub name: String,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Band {
    pub fn new(name: impl Into<String>, low_hz: f64, high_hz: f64) -> Result<Self> {
        let name = name.into();
        if !(low_hz.is_finite() && high_hz.is_finite() && low_hz >= 0.0 && low_hz < high_hz) {
            return Err(Error::Config(format!(
                "band {name}: need 0 <= low < high, got ({low_hz}, {high_hz})"
            )));
        }
        Ok(Self {
            name,
            low_hz,
            high_hz,
        })
    }

    pub fn delta() -> Self {
        Self::fixed("delta", 0.5, 4.0)
    }
    pub fn theta() -> Self {
        Self::fixed("theta", 4.0, 8.0)
    }
    pub fn alpha() -> Self {
        Self::fixed("alpha", 8.0, 12.0)
    }
    pub fn beta() -> Self {
        Self::fixed("beta", 12.0, 30.0)
    }
    pub fn gamma() -> Self {
        Self::fixed("gamma", 30.0, 50.0)
    }

    fn fixed(name: &str, low_hz: f64, high_hz: f64) -> Self {
        Self {
            name: name.to_string(),
            low_hz,
            high_hz,
        }
    }

    /// Looks up one of the five standard rhythms by name.
    pub fn by_name(name: &str) -> Option<Self> {
        standard_bands()
            .into_iter()
            .find(|b| b.name.eq_ignore_ascii_case(name))
    }

    pub fn center_hz(&self) -> f64 {
        0.5 * (self.low_hz + self.high_hz)
    }

    pub fn width_hz(&self) -> f64 {
        self.high_hz - self.low_hz
    }

    pub fn contains_hz(&self, hz: f64) -> bool {
        hz >= self.low_hz && hz <= self.high_hz
    }

    /// Checks `0 <= low < high <= fs/2`.
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if self.low_hz < 0.0 || self.low_hz >= self.high_hz || self.high_hz > 0.5 * sample_rate_hz {
            return Err(Error::InvalidBand {
                name: self.name.clone(),
                low_hz: self.low_hz,
                high_hz: self.high_hz,
                sample_rate_hz,
            });
        }
        Ok(())
    }
}

/// Delta, theta, alpha, beta and gamma, in that order.
pub fn standard_bands() -> Vec<Band> {
    vec![
        Band::delta(),
        Band::theta(),
        Band::alpha(),
        Band::beta(),
        Band::gamma(),
    ]
}

/// The Fourier grid `k/n`, `k = -(n/2 - 1) ..= n/2`, in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    n: usize,
}

impl FrequencyGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "frequency grid size must be even and positive, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer index `k` of position `i` in ascending order.
    pub fn k(&self, i: usize) -> isize {
        i as isize - (self.n as isize / 2 - 1)
    }

    /// Frequency (cycles/sample) at position `i`.
    pub fn freq(&self, i: usize) -> f64 {
        self.k(i) as f64 / self.n as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.freq(i)).collect()
    }

    /// Position of integer frequency index `k` (taken modulo `n`).
    pub fn position_of_k(&self, k: isize) -> usize {
        let n = self.n as isize;
        let mut k = k.rem_euclid(n);
        if k > n / 2 {
            k -= n;
        }
        (k + n / 2 - 1) as usize
    }

    /// Position of the grid point closest to `freq` (cycles/sample).
    pub fn nearest(&self, freq: f64) -> usize {
        let k = (freq * self.n as f64).round() as isize;
        self.position_of_k(k)
    }

    /// Positions whose frequency lies in `[lo, hi]` (cycles/sample).
    pub fn positions_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| {
                let f = self.freq(i);
                f >= lo && f <= hi
            })
            .collect()
    }
}

/// Subtracts each channel's sample mean.
pub fn demean(series: &MultiChannelSeries) -> MultiChannelSeries {
    let channels = series.channels().iter().map(|c| demean_slice(c)).collect();
    MultiChannelSeries {
        channels,
        sample_rate_hz: series.sample_rate_hz,
        labels: series.labels.clone(),
    }
}

pub fn demean_slice(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    x.iter().map(|v| v - m).collect()
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// `(1/T) * sum_t x(t + h) y(t)` over the valid range of `t`.
pub fn lagged_product(x: &[f64], y: &[f64], h: isize) -> f64 {
    let t = x.len().min(y.len());
    let s: f64 = if h >= 0 {
        let h = h as usize;
        if h >= t {
            return 0.0;
        }
        x[h..t].iter().zip(&y[..t - h]).map(|(a, b)| a * b).sum()
    } else {
        let h = (-h) as usize;
        if h >= t {
            return 0.0;
        }
        x[..t - h].iter().zip(&y[h..t]).map(|(a, b)| a * b).sum()
    };
    s / t as f64
}

/// Sample cross-covariance `sigma_pq(h)` with divisor `T` (biased), so that the
/// autocovariance sequence stays positive semi-definite. The series is assumed
/// demeaned.
pub fn cross_covariance(series: &MultiChannelSeries, p: usize, q: usize, h: isize) -> Result<f64> {
    series.check_channel(p)?;
    series.check_channel(q)?;
    let t = series.len();
    if h.unsigned_abs() >= t {
        return Err(Error::LagOutOfRange { lag: h, len: t });
    }
    Ok(lagged_product(series.channel(p), series.channel(q), h))
}

/// Lagged cross-correlation `sigma_pq(h) / sqrt(sigma_pp(0) sigma_qq(0))`.
pub fn cross_correlation(series: &MultiChannelSeries, p: usize, q: usize, h: isize) -> Result<f64> {
    let cov = cross_covariance(series, p, q, h)?;
    let vp = cross_covariance(series, p, p, 0)?;
    let vq = cross_covariance(series, q, q, 0)?;
    if vp <= 0.0 {
        return Err(Error::ZeroVariance(p));
    }
    if vq <= 0.0 {
        return Err(Error::ZeroVariance(q));
    }
    Ok(cov / (vp * vq).sqrt())
}

/// Maximum over `l in [-max_lag, max_lag]` of the squared normalized lagged
/// cross-correlation `r(l)^2`, with `r(l) = sum_t x(t+l) y(t) / sqrt(sum x^2 sum y^2)`,
/// and the maximizing lag. Ties go to the smallest `|l|`, then to the negative lag.
pub fn max_lag_sq_correlation(x: &[f64], y: &[f64], max_lag: usize) -> Result<(f64, isize)> {
    let t = x.len().min(y.len());
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if 2 * max_lag >= t {
        return Err(Error::LagOutOfRange {
            lag: max_lag as isize,
            len: t,
        });
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let scale = (sxx * syy).sqrt();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Degenerate(
            "zero-energy input to lagged correlation".into(),
        ));
    }
    let r2 = |l: isize| {
        let r = lagged_product(x, y, l) * t as f64 / scale;
        r * r
    };
    let mut best = (r2(0), 0isize);
    for m in 1..=max_lag as isize {
        for l in [-m, m] {
            let v = r2(l);
            if v > best.0 {
                best = (v, l);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn standard_band_table() {
        let b = standard_bands();
        let limits: Vec<(f64, f64)> = b.iter().map(|b| (b.low_hz, b.high_hz)).collect();
        assert_eq!(
            limits,
            vec![(0.5, 4.0), (4.0, 8.0), (8.0, 12.0), (12.0, 30.0), (30.0, 50.0)]
        );
        assert_eq!(Band::alpha().center_hz(), 10.0);
        for w in b.windows(2) {
            assert!(w[0].high_hz <= w[1].low_hz);
        }
    }

    #[test]
    fn band_validation() {
        assert!(Band::new("x", 5.0, 5.0).is_err());
        assert!(Band::gamma().validate(64.0).is_err());
        assert!(Band::gamma().validate(128.0).is_ok());
    }

    #[test]
    fn series_rejects_bad_input() {
        assert!(MultiChannelSeries::from_channels(vec![vec![1.0]], 1.0).is_err());
        assert!(MultiChannelSeries::from_channels(vec![vec![1.0, f64::NAN]], 1.0).is_err());
        assert!(MultiChannelSeries::new(
            vec![vec![1.0, 2.0], vec![1.0, 2.0]],
            1.0,
            vec!["a".into(), "a".into()]
        )
        .is_err());
    }

    #[test]
    fn demean_examples() {
        let s = MultiChannelSeries::from_channels(vec![vec![1.0, 2.0, 3.0], vec![4.0; 3]], 1.0)
            .unwrap();
        let d = demean(&s);
        assert_eq!(d.channel(0), &[-1.0, 0.0, 1.0]);
        assert_eq!(d.channel(1), &[0.0, 0.0, 0.0]);
        let dd = demean(&d);
        for (a, b) in d.channel(0).iter().zip(dd.channel(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_symmetry_and_variance() {
        let s = demean(
            &MultiChannelSeries::from_channels(vec![noise(500, 1), noise(500, 2)], 1.0).unwrap(),
        );
        for h in -5..=5 {
            assert_eq!(
                cross_covariance(&s, 0, 1, h).unwrap(),
                cross_covariance(&s, 1, 0, -h).unwrap()
            );
        }
        let x = s.channel(0);
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((cross_covariance(&s, 0, 0, 0).unwrap() - var).abs() < 1e-14);
        assert!(cross_covariance(&s, 0, 0, 500).is_err());
        assert!((cross_correlation(&s, 0, 0, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn white_noise_cross_covariance_is_small() {
        // 200 seeds; |sigma_pq(0)| < 5/sqrt(T) for ~99% of them.
        let t = 1 << 14;
        let mut hits = 0;
        for seed in 0..200u64 {
            let s = demean(
                &MultiChannelSeries::from_channels(
                    vec![noise(t, 2 * seed + 100), noise(t, 2 * seed + 101)],
                    1.0,
                )
                .unwrap(),
            );
            if cross_covariance(&s, 0, 1, 0).unwrap().abs() < 5.0 / (t as f64).sqrt() {
                hits += 1;
            }
        }
        assert!(hits >= 196, "{hits}/200");
    }

    #[test]
    fn zero_variance_channel_is_an_error() {
        let s = MultiChannelSeries::from_channels(vec![vec![0.0; 10], noise(10, 3)], 1.0).unwrap();
        assert!(matches!(
            cross_correlation(&s, 0, 1, 0),
            Err(Error::ZeroVariance(0))
        ));
    }

    #[test]
    fn correlation_finds_copy_delay() {
        let x = noise(2000, 5);
        let d = 7usize;
        let mut y = vec![0.0; 2000];
        y[d..].copy_from_slice(&x[..2000 - d]);
        let s = MultiChannelSeries::from_channels(vec![x.clone(), y.clone()], 1.0).unwrap();
        let best = (-20..=20)
            .max_by(|&a, &b| {
                cross_correlation(&s, 1, 0, a)
                    .unwrap()
                    .partial_cmp(&cross_correlation(&s, 1, 0, b).unwrap())
                    .unwrap()
            })
            .unwrap();
        assert_eq!(best, d as isize);

        let (v, l) = max_lag_sq_correlation(&x, &x, 10).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(l, 0);
        let (_, l) = max_lag_sq_correlation(&y, &x, 20).unwrap();
        assert_eq!(l, 7);
        let (_, l) = max_lag_sq_correlation(&x, &y, 20).unwrap();
        assert_eq!(l, -7);
    }

    #[test]
    fn tie_break_prefers_small_then_negative_lag() {
        // Period-4 signal: r(l) is identical at l = -4, 0, 4.
        let x: Vec<f64> = (0..400).map(|t| [1.0, 0.0, -1.0, 0.0][t % 4]).collect();
        let (_, l) = max_lag_sq_correlation(&x, &x, 8).unwrap();
        assert_eq!(l, 0);
        // Period-2 alternation: |r(-1)| == |r(1)| when the zero lag is removed by shifting.
        let y: Vec<f64> = (0..400).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let z: Vec<f64> = y.iter().map(|v| -v).collect();
        let (_, l) = max_lag_sq_correlation(&y, &z, 3).unwrap();
        assert_eq!(l, 0);
    }

    #[test]
    fn independent_noise_lagged_correlation_is_small() {
        let t = 1 << 14;
        let mut vals: Vec<f64> = (0..21u64)
            .map(|s| {
                max_lag_sq_correlation(&noise(t, 900 + s), &noise(t, 1900 + s), 50)
                    .unwrap()
                    .0
            })
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(vals[10] < 0.01, "median {}", vals[10]);
    }

    #[test]
    fn degenerate_lagged_input() {
        assert!(max_lag_sq_correlation(&[0.0; 10], &[1.0; 10], 2).is_err());
        assert!(max_lag_sq_correlation(&[1.0; 10], &[1.0; 10], 5).is_err());
    }

    #[test]
    fn grid_layout() {
        let g = FrequencyGrid::new(8).unwrap();
        assert_eq!(
            g.frequencies(),
            vec![-0.375, -0.25, -0.125, 0.0, 0.125, 0.25, 0.375, 0.5]
        );
        assert_eq!(g.position_of_k(0), 3);
        assert_eq!(g.position_of_k(4), 7);
        assert_eq!(g.position_of_k(-4), 7);
        assert_eq!(g.position_of_k(5), 0);
        assert_eq!(g.nearest(0.26), 5);
        assert!(FrequencyGrid::new(7).is_err());
    }

    #[test]
    fn rescaling_invariance_of_correlation() {
        let s = demean(
            &MultiChannelSeries::from_channels(vec![noise(300, 8), noise(300, 9)], 1.0).unwrap(),
        );
        let scaled = s
            .with_channels(vec![
                s.channel(0).iter().map(|v| v * 3.7).collect(),
                s.channel(1).iter().map(|v| v * 0.01).collect(),
            ])
            .unwrap();
        for h in -3..=3 {
            let a = cross_correlation(&s, 0, 1, h).unwrap();
            let b = cross_correlation(&scaled, 0, 1, h).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}
