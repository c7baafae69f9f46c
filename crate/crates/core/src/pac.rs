//! Phase-amplitude coupling through the modulation index.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{default_order, design_fir_bandpass};
use crate::series::{demean_slice, Band, MultiChannelSeries};

pub const DEFAULT_PHASE_BINS: usize = 18;
/// Minimum number of edge samples dropped before binning.
pub const MIN_EDGE_SAMPLES: usize = 64;

/// `y = x + i H[x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSignal {
    pub values: Vec<Complex64>,
    pub band: Option<Band>,
}

impl AnalyticSignal {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn amplitude(&self) -> Vec<f64> {
        self.values.iter().map(|y| y.norm()).collect()
    }

    /// Instantaneous phase in `[0, 2 pi)`.
    pub fn phase(&self) -> Vec<f64> {
        self.values.iter().map(|y| wrap_phase(y.arg())).collect()
    }
}

fn wrap_phase(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2 pi
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// FFT construction: zero negative frequencies, double strictly positive
/// ones, keep DC and (for even length) Nyquist.
pub fn analytic_signal(x: &[f64]) -> Result<AnalyticSignal> {
    let n = x.len();
    if n < 16 {
        return Err(Error::SeriesTooShort { len: n, needed: 15 });
    }
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let positive_end = n.div_ceil(2); // exclusive end of strictly positive bins
    for (k, b) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            continue;
        }
        if k < positive_end {
            *b *= 2.0;
        } else {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(AnalyticSignal {
        values: buf.into_iter().map(|v| v * scale).collect(),
        band: None,
    })
}

/// Normalized mean amplitude per phase bin `[2 pi (j-1)/N, 2 pi j/N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAmplitudeDistribution {
    pub n_bins: usize,
    pub probabilities: Vec<f64>,
}

impl PhaseAmplitudeDistribution {
    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=self.n_bins).map(|j| 2.0 * PI * j as f64 / self.n_bins as f64).collect()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        (0..self.n_bins)
            .map(|j| 2.0 * PI * (j as f64 + 0.5) / self.n_bins as f64)
            .collect()
    }

    /// `D_KL(P, U) / log N`.
    pub fn modulation_index(&self) -> Result<f64> {
        if self.n_bins < 2 {
            return Err(Error::Config("modulation index needs at least 2 bins".into()));
        }
        let u = vec![1.0 / self.n_bins as f64; self.n_bins];
        Ok((kl_divergence(&self.probabilities, &u)? / (self.n_bins as f64).ln()).clamp(0.0, 1.0))
    }
}

fn phase_bin(phase: f64, n_bins: usize) -> usize {
    ((wrap_phase(phase) / (2.0 * PI) * n_bins as f64) as usize).min(n_bins - 1)
}

/// Mean amplitude in each phase bin, normalized to sum to one.
pub fn phase_amplitude_distribution(phase: &[f64], amplitude: &[f64], n_bins: usize) -> Result<PhaseAmplitudeDistribution> {
    if phase.len() != amplitude.len() {
        return Err(Error::InvalidInput(format!(
            "phase has {} samples, amplitude {}",
            phase.len(),
            amplitude.len()
        )));
    }
    if n_bins == 0 {
        return Err(Error::Config("need at least one phase bin".into()));
    }
    let mut sum = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    for (ph, a) in phase.iter().zip(amplitude) {
        let j = phase_bin(*ph, n_bins);
        sum[j] += a;
        count[j] += 1;
    }
    if let Some(j) = count.iter().position(|c| *c == 0) {
        return Err(Error::EmptyBin(j + 1));
    }
    let means: Vec<f64> = sum.iter().zip(&count).map(|(s, c)| s / *c as f64).collect();
    let total: f64 = means.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("amplitude is zero in every phase bin".into()));
    }
    Ok(PhaseAmplitudeDistribution {
        n_bins,
        probabilities: means.iter().map(|m| m / total).collect(),
    })
}

/// `sum_j P(j) log(P(j) / Q(j))` with `0 log 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidInput(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    for (name, d) in [("P", p), ("Q", q)] {
        let s: f64 = d.iter().sum();
        if d.iter().any(|v| !(*v >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("{name} is not a probability vector")));
        }
    }
    let mut d = 0.0;
    for (j, (a, b)) in p.iter().zip(q).enumerate() {
        if *a == 0.0 {
            continue;
        }
        if *b == 0.0 {
            return Err(Error::InvalidInput(format!(
                "Q is zero at bin {} where P is positive",
                j + 1
            )));
        }
        d += a * (a / b).ln();
    }
    Ok(d.max(0.0))
}

/// Band phase of one channel and band amplitude of another, with the
/// filter and transform transients trimmed from both ends.
pub struct PhaseAmplitude {
    pub phase: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub trimmed: usize,
}

pub fn phase_and_amplitude(
    series: &MultiChannelSeries,
    p_low: usize,
    band_low: &Band,
    p_high: usize,
    band_high: &Band,
) -> Result<PhaseAmplitude> {
    series.check_channel(p_low)?;
    series.check_channel(p_high)?;
    let fs = series.sample_rate_hz();
    let (k_low, k_high) = (default_order(band_low, fs), default_order(band_high, fs));
    let low = design_fir_bandpass(band_low, k_low, fs)?.apply_slice(series.channel(p_low))?;
    let high = design_fir_bandpass(band_high, k_high, fs)?.apply_slice(series.channel(p_high))?;
    let mut y_low = analytic_signal(&demean_slice(&low))?;
    y_low.band = Some(band_low.clone());
    let mut y_high = analytic_signal(&demean_slice(&high))?;
    y_high.band = Some(band_high.clone());
    let edge = k_low.max(k_high).max(MIN_EDGE_SAMPLES);
    let n = series.len();
    if n <= 2 * edge {
        return Err(Error::SeriesTooShort { len: n, needed: 2 * edge });
    }
    let r = edge..n - edge;
    Ok(PhaseAmplitude {
        phase: y_low.phase()[r.clone()].to_vec(),
        amplitude: y_high.amplitude()[r].to_vec(),
        trimmed: edge,
    })
}

/// Modulation index of the `band_high` amplitude of channel `p_high` by the
/// `band_low` phase of channel `p_low`.
pub fn modulation_index(
    series: &MultiChannelSeries,
    p_low: usize,
    band_low: &Band,
    p_high: usize,
    band_high: &Band,
    n_bins: usize,
) -> Result<f64> {
    Ok(pac_distribution(series, p_low, band_low, p_high, band_high, n_bins)?.modulation_index()?)
}

pub fn pac_distribution(
    series: &MultiChannelSeries,
    p_low: usize,
    band_low: &Band,
    p_high: usize,
    band_high: &Band,
    n_bins: usize,
) -> Result<PhaseAmplitudeDistribution> {
    if n_bins < 4 {
        return Err(Error::Config(format!("need at least 4 phase bins, got {n_bins}")));
    }
    let pa = phase_and_amplitude(series, p_low, band_low, p_high, band_high)?;
    phase_amplitude_distribution(&pa.phase, &pa.amplitude, n_bins)
}

/// One cell of a PAC scan; channels 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacEntry {
    pub low_band: String,
    pub high_band: String,
    pub channel_low: usize,
    pub channel_high: usize,
    pub mi: f64,
    pub distribution: PhaseAmplitudeDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacScan {
    pub low_bands: Vec<Band>,
    pub high_bands: Vec<Band>,
    pub channel_pairs: Vec<(usize, usize)>,
    /// Ordered by channel pair, then low band, then high band.
    pub entries: Vec<PacEntry>,
}

impl PacScan {
    /// `MI[low][high]` for channel pair index `pair`.
    pub fn matrix(&self, pair: usize) -> Vec<Vec<f64>> {
        let (nl, nh) = (self.low_bands.len(), self.high_bands.len());
        let block = &self.entries[pair * nl * nh..(pair + 1) * nl * nh];
        block.chunks(nh).map(|row| row.iter().map(|e| e.mi).collect()).collect()
    }

    /// `low_band, high_band, channel_low, channel_high, MI`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["low_band", "high_band", "channel_low", "channel_high", "MI"])?;
        for e in &self.entries {
            w.write_record([
                e.low_band.clone(),
                e.high_band.clone(),
                e.channel_low.to_string(),
                e.channel_high.to_string(),
                format!("{:.17e}", e.mi),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Modulation index for every `(channel pair, low band, high band)`;
/// `channel_pairs` are zero-based `(phase channel, amplitude channel)`.
pub fn pac_scan(
    series: &MultiChannelSeries,
    low_bands: &[Band],
    high_bands: &[Band],
    channel_pairs: &[(usize, usize)],
    n_bins: usize,
) -> Result<PacScan> {
    let mut entries = Vec::with_capacity(channel_pairs.len() * low_bands.len() * high_bands.len());
    for &(pl, ph) in channel_pairs {
        for bl in low_bands {
            for bh in high_bands {
                let distribution = pac_distribution(series, pl, bl, ph, bh, n_bins)?;
                entries.push(PacEntry {
                    low_band: bl.name.clone(),
                    high_band: bh.name.clone(),
                    channel_low: pl + 1,
                    channel_high: ph + 1,
                    mi: distribution.modulation_index()?,
                    distribution,
                });
            }
        }
    }
    Ok(PacScan {
        low_bands: low_bands.to_vec(),
        high_bands: high_bands.to_vec(),
        channel_pairs: channel_pairs.iter().map(|(a, b)| (a + 1, b + 1)).collect(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{example, ExampleName};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    }

    fn tone(hz: f64, len: usize) -> Vec<f64> {
        (0..len).map(|t| (2.0 * PI * hz * t as f64 / 128.0).cos()).collect()
    }

    #[test]
    fn analytic_signal_of_cosine() {
        let x = tone(8.0, 1024);
        let y = analytic_signal(&x).unwrap();
        let amp = y.amplitude();
        let ph = y.values.iter().map(|v| v.arg()).collect::<Vec<_>>();
        let step = 2.0 * PI * 8.0 / 128.0;
        for t in 64..960 {
            assert!((amp[t] - 1.0).abs() < 1e-2);
            assert!((y.values[t].re - x[t]).abs() < 1e-8);
            let d = (ph[t + 1] - ph[t]).rem_euclid(2.0 * PI);
            assert!((d - step).abs() < 1e-3);
        }
    }

    #[test]
    fn amplitude_dominates_real_part() {
        let x = demean_slice(&noise(500, 3));
        let y = analytic_signal(&x).unwrap();
        for (a, v) in y.amplitude().iter().zip(&x) {
            assert!(*a >= v.abs() - 1e-8);
        }
        assert!(analytic_signal(&x[..15]).is_err());
    }

    #[test]
    fn constant_amplitude_is_uniform() {
        let ph: Vec<f64> = (0..3600).map(|i| 2.0 * PI * i as f64 / 3600.0).collect();
        let d = phase_amplitude_distribution(&ph, &vec![2.5; 3600], 18).unwrap();
        assert!(d.probabilities.iter().all(|p| (p - 1.0 / 18.0).abs() < 1e-12));
        assert!(d.modulation_index().unwrap() < 1e-12);
        let one = phase_amplitude_distribution(&ph, &vec![1.0; 3600], 1).unwrap();
        assert_eq!(one.probabilities, vec![1.0]);
    }

    #[test]
    fn empty_bin_and_length_errors() {
        let ph = vec![0.1, 0.2, 0.3, 4.0];
        assert!(matches!(
            phase_amplitude_distribution(&ph, &[1.0; 4], 4),
            Err(Error::EmptyBin(_))
        ));
        assert!(phase_amplitude_distribution(&ph, &[1.0; 3], 4).is_err());
    }

    fn cosine_bin_means(n: usize) -> Vec<f64> {
        let w = 2.0 * PI / n as f64;
        (0..n)
            .map(|j| {
                let (a, b) = (w * j as f64, w * (j + 1) as f64);
                1.0 + (b.sin() - a.sin()) / w
            })
            .collect()
    }

    #[test]
    fn cosine_locked_amplitude_matches_bin_means() {
        let n = 18;
        let m = 180_000;
        let ph: Vec<f64> = (0..m).map(|i| 2.0 * PI * (i as f64 + 0.5) / m as f64).collect();
        let amp: Vec<f64> = ph.iter().map(|p| 1.0 + p.cos()).collect();
        let d = phase_amplitude_distribution(&ph, &amp, n).unwrap();
        let oracle = cosine_bin_means(n);
        let total: f64 = oracle.iter().sum();
        for (p, o) in d.probabilities.iter().zip(&oracle) {
            assert!((p - o / total).abs() <= 0.05 * o / total);
        }
        let sum: f64 = d.probabilities.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kl_reference_values() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let n = 7;
        let mut delta = vec![0.0; n];
        delta[0] = 1.0;
        let u = vec![1.0 / n as f64; n];
        assert!((kl_divergence(&delta, &u).unwrap() - (n as f64).ln()).abs() < 1e-12);
        let expected = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((kl_divergence(&[0.5, 0.5], &[0.9, 0.1]).unwrap() - expected).abs() < 1e-15);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn white_noise_has_no_coupling() {
        let vals: Vec<f64> = (0..10)
            .map(|seed| {
                let s = MultiChannelSeries::from_channels(vec![noise(1 << 14, seed)], 128.0).unwrap();
                modulation_index(&s, 0, &Band::theta(), 0, &Band::gamma(), 18).unwrap()
            })
            .collect();
        assert!(median(vals) < 0.01);
    }

    #[test]
    fn locked_envelope_matches_analytic_divergence() {
        let len = 1 << 14;
        // slow phase keeps the +-2 Hz sidebands in the flat part of the short gamma filter
        let th = tone(2.0, len);
        let x: Vec<f64> = th
            .iter()
            .zip(tone(40.0, len))
            .map(|(a, g)| a + (1.0 + a) * g)
            .collect();
        let s = MultiChannelSeries::from_channels(vec![x], 128.0).unwrap();
        let mi = modulation_index(&s, 0, &Band::delta(), 0, &Band::gamma(), 18).unwrap();
        let oracle = cosine_bin_means(18);
        let total: f64 = oracle.iter().sum();
        let p: Vec<f64> = oracle.iter().map(|o| o / total).collect();
        let expected = kl_divergence(&p, &[1.0 / 18.0; 18]).unwrap() / 18f64.ln();
        assert!((mi - expected).abs() < 0.1 * expected, "{mi} vs {expected}");
    }

    #[test]
    fn index_ignores_amplitude_scale_and_phase_rotation() {
        let m = 36_000;
        let ph: Vec<f64> = (0..m).map(|i| 2.0 * PI * (i as f64 + 0.5) / m as f64).collect();
        let amp: Vec<f64> = ph.iter().map(|p| 1.5 + (2.0 * p).sin() + 0.3 * p.cos()).collect();
        let base = phase_amplitude_distribution(&ph, &amp, 18).unwrap().modulation_index().unwrap();
        let scaled: Vec<f64> = amp.iter().map(|a| a * 37.0).collect();
        let s = phase_amplitude_distribution(&ph, &scaled, 18).unwrap().modulation_index().unwrap();
        assert!((s - base).abs() < 1e-10);
        let shifted: Vec<f64> = ph.iter().map(|p| p + 2.0 * PI * 5.0 / 18.0).collect();
        let r = phase_amplitude_distribution(&shifted, &amp, 18).unwrap().modulation_index().unwrap();
        assert!((r - base).abs() < 1e-6);

        let (x, _) = example(ExampleName::Pac, 4096, 2).unwrap();
        let y = x
            .with_channels(x.channels().iter().map(|c| c.iter().map(|v| v * 9.0).collect()).collect())
            .unwrap();
        let a = modulation_index(&x, 0, &Band::theta(), 0, &Band::gamma(), 18).unwrap();
        let b = modulation_index(&y, 0, &Band::theta(), 0, &Band::gamma(), 18).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn scan_reduces_to_single_index_and_finds_theta_gamma() {
        let (x, _) = example(ExampleName::Pac, 8192, 5).unwrap();
        let low = [Band::delta(), Band::theta(), Band::alpha()];
        let high = [Band::beta(), Band::gamma()];
        let scan = pac_scan(&x, &low, &high, &[(0, 0), (1, 1)], 18).unwrap();
        let single = modulation_index(&x, 0, &Band::theta(), 0, &Band::gamma(), 18).unwrap();
        let m = scan.matrix(0);
        assert_eq!(m[1][1], single);
        assert!(m[1][1] > m[1][0]);
        assert!(scan.entries.iter().all(|e| (0.0..=1.0).contains(&e.mi)));
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 13);
        assert!(scan.to_json().unwrap().contains("probabilities"));
    }

    #[test]
    fn null_scan_is_flat() {
        let s = MultiChannelSeries::from_channels(vec![noise(1 << 14, 40), noise(1 << 14, 41)], 128.0).unwrap();
        let scan = pac_scan(&s, &[Band::theta(), Band::alpha()], &[Band::gamma()], &[(0, 0), (0, 1), (1, 0)], 18).unwrap();
        assert!(median(scan.entries.iter().map(|e| e.mi).collect()) < 0.01);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn distribution_is_a_probability_vector(
            pairs in proptest::collection::vec((-10f64..10.0, 0f64..5.0), 1..200),
            n_bins in 4usize..36,
        ) {
            let (mut phase, mut amp): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            // one sample per bin so none is empty
            for j in 0..n_bins {
                phase.push(2.0 * PI * (j as f64 + 0.5) / n_bins as f64);
                amp.push(0.5);
            }
            prop_assume!(amp.iter().any(|&a| a > 1e-6));
            let d = phase_amplitude_distribution(&phase, &amp, n_bins).unwrap();
            prop_assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let mi = d.modulation_index().unwrap();
            prop_assert!((0.0..=1.0).contains(&mi));
        }
    }
}
