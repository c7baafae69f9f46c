//! Evolutionary dual-frequency coherence.
//!
//! Times `t` are 1-based window centres; the window of length `N` around `t`
//! covers samples `t - (N/2 - 1) ..= t + N/2`. Fourier sums use the absolute
//! (1-based) sample index, so products across frequencies keep a common phase
//! reference from window to window and from trial to trial.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{default_order, design_fir_bandpass};
use crate::series::{demean_slice, Band, MultiChannelSeries};
use crate::spectrum::SmoothingKernel;

/// Zero-based range of the window centred at 1-based `t`.
fn window_range(len: usize, t: usize, n: usize) -> Result<std::ops::Range<usize>> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Config(format!("window length {n} must be even")));
    }
    let half = n / 2;
    if t < half || t + half > len {
        return Err(Error::Config(format!(
            "window of length {n} at t={t} does not fit in [1, {len}]"
        )));
    }
    // 1-based t - (N/2 - 1) is zero-based t - N/2
    Ok(t - half..t + half)
}

fn fourier_window(x: &[f64], first: usize, freq: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let s = (first + i + 1) as f64;
        acc += Complex64::from_polar(*v, -2.0 * PI * freq * s);
    }
    acc
}

/// `d(t, w) = N^-1/2 sum_s X(s) exp(-i 2 pi w s)` over the window at `t`.
pub fn local_fourier(series: &MultiChannelSeries, t: usize, n: usize, freq: f64) -> Result<DVector<Complex64>> {
    let r = window_range(series.len(), t, n)?;
    let norm = (n as f64).sqrt();
    Ok(DVector::from_iterator(
        series.n_channels(),
        series
            .channels()
            .iter()
            .map(|c| fourier_window(&c[r.clone()], r.start, freq) / norm),
    ))
}

/// `d(t, w_j) d(t, w_k)^*`, the conjugate making `w_j == w_k` the ordinary
/// local periodogram.
pub fn local_dualfreq_periodogram(
    series: &MultiChannelSeries,
    t: usize,
    n: usize,
    freq_j: f64,
    freq_k: f64,
) -> Result<DMatrix<Complex64>> {
    let dj = local_fourier(series, t, n, freq_j)?;
    let dk = local_fourier(series, t, n, freq_k)?;
    Ok(&dj * dk.adjoint())
}

/// How local dual-frequency periodograms are averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFreqSmoothing {
    /// Triangular weights over `2h + 1` window centres spaced `time_step` apart
    /// (single-series mode only). `h = 0` uses the window at `t` alone.
    pub time_half_width: usize,
    pub time_step: usize,
    /// Optional kernel over neighbouring Fourier frequencies, applied to both
    /// frequencies together (`w_j + m/N`, `w_k + m/N`).
    pub freq_kernel: Option<SmoothingKernel>,
}

impl DualFreqSmoothing {
    pub fn none() -> Self {
        DualFreqSmoothing {
            time_half_width: 0,
            time_step: 1,
            freq_kernel: None,
        }
    }

    /// Triangular time smoothing over `2h + 1` centres.
    pub fn time(half_width: usize, step: usize) -> Self {
        DualFreqSmoothing {
            time_half_width: half_width,
            time_step: step.max(1),
            freq_kernel: None,
        }
    }

    fn time_weights(&self) -> Vec<(isize, f64)> {
        let h = self.time_half_width as isize;
        let raw: Vec<(isize, f64)> = (-h..=h).map(|m| (m, (h + 1 - m.abs()) as f64)).collect();
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        raw.into_iter().map(|(m, w)| (m * self.time_step as isize, w / total)).collect()
    }
}

impl Default for DualFreqSmoothing {
    fn default() -> Self {
        Self::none()
    }
}

/// Data for [`dualfreq_coherence`]: time-locked trials (plain-averaged) or a
/// single series (smoothed over time).
#[derive(Debug, Clone, Copy)]
pub enum DualFreqInput<'a> {
    Trials(&'a [MultiChannelSeries]),
    Single(&'a MultiChannelSeries),
}

/// Accumulates `(f_jk, f_jj, f_kk)` for channel `p` at `w_j` and `q` at `w_k`.
struct Moments {
    cross: Complex64,
    pp: f64,
    qq: f64,
}

fn window_moments(
    series: &MultiChannelSeries,
    t: usize,
    n: usize,
    p: usize,
    freq_j: f64,
    q: usize,
    freq_k: f64,
    kernel: Option<&SmoothingKernel>,
    weight: f64,
    acc: &mut Moments,
) -> Result<()> {
    let r = window_range(series.len(), t, n)?;
    let xp = demean_slice(&series.channel(p)[r.clone()]);
    let xq = demean_slice(&series.channel(q)[r.clone()]);
    let shifts: Vec<(isize, f64)> = match kernel {
        Some(k) => {
            let b = k.half_width as isize;
            k.weights().into_iter().enumerate().map(|(i, w)| (i as isize - b, w)).collect()
        }
        None => vec![(0, 1.0)],
    };
    let norm = n as f64;
    for (m, w) in shifts {
        let shift = m as f64 / norm;
        let dp = fourier_window(&xp, r.start, freq_j + shift);
        let dq = fourier_window(&xq, r.start, freq_k + shift);
        let c = weight * w / norm;
        acc.cross += dp * dq.conj() * c;
        acc.pp += dp.norm_sqr() * c;
        acc.qq += dq.norm_sqr() * c;
    }
    Ok(())
}

/// `|f_(p,wj),(q,wk)|^2 / (f_(p,wj),(p,wj) f_(q,wk),(q,wk))` at centre `t`
/// from averaged local dual-frequency periodograms of demeaned windows.
#[allow(clippy::too_many_arguments)]
pub fn dualfreq_coherence(
    input: DualFreqInput<'_>,
    t: usize,
    n: usize,
    p: usize,
    freq_j: f64,
    q: usize,
    freq_k: f64,
    smoothing: &DualFreqSmoothing,
) -> Result<f64> {
    let mut acc = Moments {
        cross: Complex64::new(0.0, 0.0),
        pp: 0.0,
        qq: 0.0,
    };
    let kernel = smoothing.freq_kernel.as_ref();
    match input {
        DualFreqInput::Trials(trials) => {
            if trials.is_empty() {
                return Err(Error::InvalidInput("no trials".into()));
            }
            let w = 1.0 / trials.len() as f64;
            for s in trials {
                s.check_channel(p)?;
                s.check_channel(q)?;
                window_moments(s, t, n, p, freq_j, q, freq_k, kernel, w, &mut acc)?;
            }
        }
        DualFreqInput::Single(s) => {
            s.check_channel(p)?;
            s.check_channel(q)?;
            for (dt, w) in smoothing.time_weights() {
                let tc = t as isize + dt;
                if tc < 0 {
                    return Err(Error::Config(format!("time smoothing leaves the series at t={tc}")));
                }
                window_moments(s, tc as usize, n, p, freq_j, q, freq_k, kernel, w, &mut acc)?;
            }
        }
    }
    let scale = acc.pp.max(acc.qq);
    if !(acc.pp > 1e-300 && acc.qq > 1e-300) || !(acc.pp > 1e-14 * scale && acc.qq > 1e-14 * scale) {
        return Err(Error::Degenerate(format!(
            "no local power at channel {} frequency {:.6}",
            if acc.pp > 1e-14 * scale { q } else { p },
            if acc.pp > 1e-14 * scale { freq_k } else { freq_j }
        )));
    }
    if p == q && freq_j == freq_k {
        return Ok(1.0);
    }
    Ok((acc.cross.norm_sqr() / (acc.pp * acc.qq)).min(1.0))
}

/// Local cross-moment coherence of zero-phase band-filtered, demeaned channels:
/// `(sum X_p,b1 X_q,b2)^2 / (sum X_p,b1^2 sum X_q,b2^2)` over the window at `t`.
///
/// Filters use the default order of each band.
pub fn band_dualfreq_coherence(
    series: &MultiChannelSeries,
    p: usize,
    band_1: &Band,
    q: usize,
    band_2: &Band,
    t: usize,
    n: usize,
) -> Result<f64> {
    let (x1, x2) = filtered_pair(series, p, band_1, q, band_2)?;
    band_dualfreq_from_filtered(&x1, &x2, t, n, p == q && band_1 == band_2)
}

fn filtered_pair(
    series: &MultiChannelSeries,
    p: usize,
    band_1: &Band,
    q: usize,
    band_2: &Band,
) -> Result<(Vec<f64>, Vec<f64>)> {
    series.check_channel(p)?;
    series.check_channel(q)?;
    let fs = series.sample_rate_hz();
    let f1 = design_fir_bandpass(band_1, default_order(band_1, fs), fs)?;
    let f2 = design_fir_bandpass(band_2, default_order(band_2, fs), fs)?;
    Ok((
        demean_slice(&f1.apply_slice(series.channel(p))?),
        demean_slice(&f2.apply_slice(series.channel(q))?),
    ))
}

fn band_dualfreq_from_filtered(x1: &[f64], x2: &[f64], t: usize, n: usize, same: bool) -> Result<f64> {
    let r = window_range(x1.len(), t, n)?;
    let (a, b) = (&x1[r.clone()], &x2[r]);
    let f12: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>() / n as f64;
    let f11: f64 = a.iter().map(|u| u * u).sum::<f64>() / n as f64;
    let f22: f64 = b.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(f11 > 0.0 && f22 > 0.0) {
        return Err(Error::Degenerate(format!("zero windowed variance at t={t}")));
    }
    if same {
        return Ok(1.0);
    }
    Ok((f12 * f12 / (f11 * f22)).min(1.0))
}

/// One `(t, p, w_j, q, w_k)` value; channels 1-based, frequencies in the
/// units they were given in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFreqEntry {
    pub t: usize,
    pub p: usize,
    pub freq_j: f64,
    pub q: usize,
    pub freq_k: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DualFreqResult {
    pub centers: Vec<usize>,
    pub entries: Vec<DualFreqEntry>,
}

impl DualFreqResult {
    /// Long format `t, p, freq_j, q, freq_k, value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "p", "freq_j", "q", "freq_k", "value"])?;
        for e in &self.entries {
            w.write_record([
                e.t.to_string(),
                e.p.to_string(),
                format!("{:.17e}", e.freq_j),
                e.q.to_string(),
                format!("{:.17e}", e.freq_k),
                format!("{:.17e}", e.value),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Window centres `N/2, N/2 + step, ...` that fit in a series of length `len`.
pub fn centers(len: usize, n: usize, step: usize) -> Result<Vec<usize>> {
    if step == 0 {
        return Err(Error::Config("window step must be at least 1".into()));
    }
    window_range(len, n / 2, n)?;
    Ok((n / 2..=len - n / 2).step_by(step).collect())
}

/// Sliding single-series dual-frequency coherence for every pair of
/// `(channel, frequency)` in `points` (frequencies in cycles per sample).
pub fn evolutionary_dualfreq(
    series: &MultiChannelSeries,
    n: usize,
    step: usize,
    points: &[(usize, f64)],
    smoothing: &DualFreqSmoothing,
) -> Result<DualFreqResult> {
    let reach = smoothing.time_half_width * smoothing.time_step;
    let all = centers(series.len(), n, step)?;
    let centers: Vec<usize> = all
        .into_iter()
        .filter(|t| *t >= n / 2 + reach && t + n / 2 + reach <= series.len())
        .collect();
    let mut entries = Vec::new();
    for &t in &centers {
        for (i, &(p, fj)) in points.iter().enumerate() {
            for &(q, fk) in &points[i..] {
                let value = dualfreq_coherence(DualFreqInput::Single(series), t, n, p, fj, q, fk, smoothing)?;
                entries.push(DualFreqEntry {
                    t,
                    p: p + 1,
                    freq_j: fj,
                    q: q + 1,
                    freq_k: fk,
                    value,
                });
            }
        }
    }
    Ok(DualFreqResult { centers, entries })
}

/// Sliding band-level dual-frequency coherence between `(p, band_1)` and `(q, band_2)`.
pub fn evolutionary_band_dualfreq(
    series: &MultiChannelSeries,
    p: usize,
    band_1: &Band,
    q: usize,
    band_2: &Band,
    n: usize,
    step: usize,
) -> Result<DualFreqResult> {
    let (x1, x2) = filtered_pair(series, p, band_1, q, band_2)?;
    let centers = centers(series.len(), n, step)?;
    let same = p == q && band_1 == band_2;
    let entries = centers
        .iter()
        .map(|&t| {
            Ok(DualFreqEntry {
                t,
                p: p + 1,
                freq_j: band_1.center_hz(),
                q: q + 1,
                freq_k: band_2.center_hz(),
                value: band_dualfreq_from_filtered(&x1, &x2, t, n, same)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DualFreqResult { centers, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::tv_coherence;
    use crate::simulate::{example, gen_sources, ExampleName, SourceSpec};
    use crate::spectrum::Ar2Params;
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

    fn two_noise(len: usize, seed: u64) -> MultiChannelSeries {
        MultiChannelSeries::from_channels(vec![noise(len, seed), noise(len, seed + 1000)], 128.0).unwrap()
    }

    #[test]
    fn zero_input_gives_zero_coefficients() {
        let s = MultiChannelSeries::from_channels(vec![vec![0.0; 64]; 2], 1.0).unwrap();
        assert!(local_fourier(&s, 32, 16, 0.25).unwrap().iter().all(|d| d.norm() == 0.0));
        assert!(local_dualfreq_periodogram(&s, 32, 16, 0.25, 0.125)
            .unwrap()
            .iter()
            .all(|d| d.norm() == 0.0));
    }

    #[test]
    fn pure_tone_has_half_root_n_modulus() {
        let n = 32;
        let w = 4.0 / n as f64;
        let x: Vec<f64> = (1..=128).map(|s| (2.0 * PI * w * s as f64).cos()).collect();
        let s = MultiChannelSeries::from_channels(vec![x], 1.0).unwrap();
        let d = local_fourier(&s, 60, n, w).unwrap();
        assert!((d[0].norm() - (n as f64).sqrt() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn constant_offset_does_not_move_nonzero_frequencies() {
        let s = two_noise(256, 3);
        let shifted = s
            .with_channels(s.channels().iter().map(|c| c.iter().map(|v| v + 7.0).collect()).collect())
            .unwrap();
        let w = 5.0 / 64.0;
        let a = local_fourier(&s, 100, 64, w).unwrap();
        let b = local_fourier(&shifted, 100, 64, w).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-9);
    }

    #[test]
    fn window_must_fit() {
        let s = two_noise(100, 1);
        assert!(local_fourier(&s, 7, 16, 0.1).is_err());
        assert!(local_fourier(&s, 8, 16, 0.1).is_ok());
        assert!(local_fourier(&s, 92, 16, 0.1).is_ok());
        assert!(local_fourier(&s, 93, 16, 0.1).is_err());
        assert!(local_fourier(&s, 50, 15, 0.1).is_err());
    }

    #[test]
    fn equal_frequencies_give_the_local_periodogram() {
        let s = two_noise(256, 4);
        let w = 3.0 / 32.0;
        let m = local_dualfreq_periodogram(&s, 100, 32, w, w).unwrap();
        let d = local_fourier(&s, 100, 32, w).unwrap();
        assert!((m - &d * d.adjoint()).camax() < 1e-14);
    }

    #[test]
    fn stationary_off_frequency_entries_average_out() {
        let n = 64;
        let (wj, wk) = (6.0 / 64.0, 20.0 / 64.0);
        let mut off = DMatrix::<Complex64>::zeros(2, 2);
        let mut same = DMatrix::<Complex64>::zeros(2, 2);
        for trial in 0..200 {
            let s = two_noise(128, 10 + trial);
            off += local_dualfreq_periodogram(&s, 64, n, wj, wk).unwrap();
            same += local_dualfreq_periodogram(&s, 64, n, wj, wj).unwrap();
        }
        let off_mod = median(off.iter().map(|c| c.norm()).collect());
        let same_mod = median(vec![same[(0, 0)].norm(), same[(1, 1)].norm()]);
        assert!(off_mod < 0.2 * same_mod, "{off_mod} vs {same_mod}");
    }

    /// Channel 1 carries a 6 Hz and channel 2 a 30 Hz carrier, both scaled by
    /// one slowly varying random envelope that is redrawn per trial.
    fn comodulated_trial(len: usize, seed: u64) -> MultiChannelSeries {
        let env = gen_sources(
            &[SourceSpec::Ar2(Ar2Params::new(1.02, 0.0, 1.0).unwrap())],
            len,
            seed,
            128.0,
        )
        .unwrap();
        let e = noise(2 * len, seed + 77);
        let x1 = (0..len)
            .map(|t| env.get(t, 0) * (2.0 * PI * 6.0 * (t + 1) as f64 / 128.0).cos() + 0.3 * e[t])
            .collect();
        let x2 = (0..len)
            .map(|t| env.get(t, 0) * (2.0 * PI * 30.0 * (t + 1) as f64 / 128.0).cos() + 0.3 * e[len + t])
            .collect();
        MultiChannelSeries::from_channels(vec![x1, x2], 128.0).unwrap()
    }

    #[test]
    fn shared_envelope_gives_dual_frequency_coherence() {
        let (n, len) = (128, 512);
        let (wj, wk) = (6.0 / 128.0, 30.0 / 128.0);
        let vals: Vec<f64> = (0..100)
            .map(|rep| {
                let trials: Vec<_> = (0..20).map(|k| comodulated_trial(len, 1000 * rep + k)).collect();
                dualfreq_coherence(DualFreqInput::Trials(&trials), 256, n, 0, wj, 1, wk, &DualFreqSmoothing::none())
                    .unwrap()
            })
            .collect();
        assert!(median(vals) > 0.4);
    }

    #[test]
    fn independent_channels_have_low_dual_frequency_coherence() {
        let (n, len) = (128, 512);
        let (wj, wk) = (6.0 / 128.0, 30.0 / 128.0);
        let vals: Vec<f64> = (0..100)
            .map(|rep| {
                let trials: Vec<_> = (0..20).map(|k| two_noise(len, 5000 * rep + k)).collect();
                dualfreq_coherence(DualFreqInput::Trials(&trials), 256, n, 0, wj, 1, wk, &DualFreqSmoothing::none())
                    .unwrap()
            })
            .collect();
        assert!(median(vals) < 0.1);
    }

    #[test]
    fn dual_frequency_coherence_is_symmetric_and_bounded() {
        let s = two_noise(2048, 8);
        let sm = DualFreqSmoothing::time(3, 64);
        for (wj, wk) in [(0.05, 0.2), (0.1, 0.1), (0.3, 0.01)] {
            let a = dualfreq_coherence(DualFreqInput::Single(&s), 1024, 128, 0, wj, 1, wk, &sm).unwrap();
            let b = dualfreq_coherence(DualFreqInput::Single(&s), 1024, 128, 1, wk, 0, wj, &sm).unwrap();
            assert!((a - b).abs() < 1e-10);
            assert!((0.0..=1.0).contains(&a));
        }
        let one = dualfreq_coherence(DualFreqInput::Single(&s), 1024, 128, 1, 0.1, 1, 0.1, &sm).unwrap();
        assert_eq!(one, 1.0);
    }

    #[test]
    fn same_frequency_matches_time_varying_coherence() {
        let (s, _) = example(ExampleName::GammaNet, 2048, 3).unwrap();
        let (n, step) = (512, 256);
        let kernel = SmoothingKernel::daniell(6);
        let tv = tv_coherence(&s, n, step, &kernel).unwrap();
        let sm = DualFreqSmoothing {
            freq_kernel: Some(kernel),
            ..DualFreqSmoothing::none()
        };
        for (w, start) in tv.windows.iter().zip((0..).step_by(step)) {
            let t = start + n / 2;
            for i in [3, 100, 160, 255] {
                let f = w.grid.freq(i);
                let d = dualfreq_coherence(DualFreqInput::Single(&s), t, n, 0, f, 2, f, &sm).unwrap();
                assert!((d - w.values[i][(0, 2)]).abs() < 1e-8, "{d} vs {}", w.values[i][(0, 2)]);
            }
        }
    }

    #[test]
    fn band_level_identity_and_null() {
        let s = two_noise(4096, 2);
        let th = Band::theta();
        assert_eq!(band_dualfreq_coherence(&s, 0, &th, 0, &th, 2048, 256).unwrap(), 1.0);
        let ga = Band::gamma();
        let srcs = gen_sources(
            &[
                SourceSpec::Ar2(Ar2Params::from_hz(1.05, 6.0, 128.0).unwrap()),
                SourceSpec::Ar2(Ar2Params::from_hz(1.05, 40.0, 128.0).unwrap()),
            ],
            4096,
            9,
            128.0,
        )
        .unwrap();
        let r = evolutionary_band_dualfreq(&srcs, 0, &th, 1, &ga, 256, 128).unwrap();
        assert!(median(r.entries.iter().map(|e| e.value).collect()) < 0.1);
    }
}
