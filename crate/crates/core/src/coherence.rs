//! Coherency, coherence, band coherence, partial coherence and their
//! sliding-window versions. Channel indices are zero-based.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{default_order, design_fir_bandpass};
use crate::series::{demean_slice, max_lag_sq_correlation, Band, FrequencyGrid, MultiChannelSeries};
use crate::spectrum::{smoothed_spectrum, CrossSpectralMatrix, SmoothingKernel};

/// Default condition-number cap for inverting a spectral matrix.
pub const DEFAULT_CONDITION_CAP: f64 = 1e10;

/// Pairwise dependence on a frequency grid: one `P x P` matrix per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceResult {
    pub grid: FrequencyGrid,
    pub values: Vec<DMatrix<f64>>,
    pub coherency: Option<Vec<DMatrix<Complex64>>>,
}

impl CoherenceResult {
    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |m| m.nrows())
    }

    /// Values of the `(p, q)` entry across the grid.
    pub fn pair(&self, p: usize, q: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[(p, q)]).collect()
    }

    /// Mean of the `(p, q)` entry over grid points inside `[lo, hi]` cycles per sample.
    pub fn band_mean(&self, p: usize, q: usize, lo: f64, hi: f64) -> Result<f64> {
        let idx = self.grid.positions_in(lo, hi);
        if idx.is_empty() {
            return Err(Error::Config(format!("no grid frequency in [{lo}, {hi}]")));
        }
        Ok(idx.iter().map(|&i| self.values[i][(p, q)]).sum::<f64>() / idx.len() as f64)
    }

    /// Maximum of the `(p, q)` entry over grid points inside `[lo, hi]`.
    pub fn band_max(&self, p: usize, q: usize, lo: f64, hi: f64) -> Result<f64> {
        let idx = self.grid.positions_in(lo, hi);
        if idx.is_empty() {
            return Err(Error::Config(format!("no grid frequency in [{lo}, {hi}]")));
        }
        Ok(idx.iter().map(|&i| self.values[i][(p, q)]).fold(f64::MIN, f64::max))
    }

    /// Long format `freq, p, q, value` for `p < q`, channels 1-based.
    pub fn write_csv<W: Write>(&self, out: W, sample_rate_hz: Option<f64>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let unit = if sample_rate_hz.is_some() { "freq_hz" } else { "freq" };
        w.write_record([unit, "p", "q", "value"])?;
        let scale = sample_rate_hz.unwrap_or(1.0);
        for (i, m) in self.values.iter().enumerate() {
            let f = self.grid.freq(i) * scale;
            for p in 0..m.nrows() {
                for q in p + 1..m.ncols() {
                    w.write_record([
                        format!("{f:.17e}"),
                        (p + 1).to_string(),
                        (q + 1).to_string(),
                        format!("{:.17e}", m[(p, q)]),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Undirected band-level edge for adjacency plots, channels 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEdge {
    pub p: usize,
    pub q: usize,
    pub band: String,
    pub value: f64,
}

/// Band-averaged edges `p < q` of a coherence or partial coherence result.
pub fn band_edges(result: &CoherenceResult, band: &Band, sample_rate_hz: f64) -> Result<Vec<NetworkEdge>> {
    let (lo, hi) = (band.low_hz / sample_rate_hz, band.high_hz / sample_rate_hz);
    let d = result.dim();
    let mut out = Vec::new();
    for p in 0..d {
        for q in p + 1..d {
            out.push(NetworkEdge {
                p: p + 1,
                q: q + 1,
                band: band.name.clone(),
                value: result.band_mean(p, q, lo, hi)?,
            });
        }
    }
    Ok(out)
}

pub fn write_edges_csv<W: Write>(edges: &[NetworkEdge], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "q", "band", "value"])?;
    for e in edges {
        w.write_record([
            e.p.to_string(),
            e.q.to_string(),
            e.band.clone(),
            format!("{:.17e}", e.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn check_pair(f: &CrossSpectralMatrix, p: usize, q: usize) -> Result<()> {
    let d = f.dim();
    if p >= d || q >= d {
        return Err(Error::InvalidInput(format!(
            "channel pair ({p}, {q}) out of range for dimension {d}"
        )));
    }
    Ok(())
}

fn coherency_at(m: &DMatrix<Complex64>, p: usize, q: usize, freq: f64) -> Result<Complex64> {
    let (fpp, fqq) = (m[(p, p)].re, m[(q, q)].re);
    if !(fpp > 0.0 && fqq > 0.0) {
        return Err(Error::Degenerate(format!(
            "zero auto-spectrum at frequency {freq:.6} for channel {}",
            if fpp > 0.0 { q } else { p }
        )));
    }
    if p == q {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(m[(p, q)] / (fpp * fqq).sqrt())
}

/// `tau_pq(w) = f_pq / sqrt(f_pp f_qq)` across the grid.
pub fn coherency(f: &CrossSpectralMatrix, p: usize, q: usize) -> Result<Vec<Complex64>> {
    check_pair(f, p, q)?;
    let grid = f.grid();
    f.values()
        .iter()
        .enumerate()
        .map(|(i, m)| coherency_at(m, p, q, grid.freq(i)))
        .collect()
}

/// `|tau_pq(w)|^2` across the grid.
pub fn coherence(f: &CrossSpectralMatrix, p: usize, q: usize) -> Result<Vec<f64>> {
    Ok(coherency(f, p, q)?.iter().map(|t| t.norm_sqr().min(1.0)).collect())
}

/// Coherence and coherency for all pairs.
pub fn coherence_matrix(f: &CrossSpectralMatrix) -> Result<CoherenceResult> {
    let d = f.dim();
    let grid = f.grid();
    let mut values = Vec::with_capacity(f.len());
    let mut taus = Vec::with_capacity(f.len());
    for (i, m) in f.values().iter().enumerate() {
        let mut tau = DMatrix::<Complex64>::zeros(d, d);
        for p in 0..d {
            for q in 0..d {
                tau[(p, q)] = coherency_at(m, p, q, grid.freq(i))?;
            }
        }
        values.push(tau.map(|t| t.norm_sqr().min(1.0)));
        taus.push(tau);
    }
    Ok(CoherenceResult {
        grid,
        values,
        coherency: Some(taus),
    })
}

/// Largest over smallest eigenvalue of a Hermitian PSD matrix.
fn hermitian_condition(m: &DMatrix<Complex64>) -> f64 {
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Partial coherence `|(-h g h)_pq|^2` with `g = f^-1` and `h = diag(g_rr^-1/2)`.
///
/// Fails with `IllConditioned` when any `f(w)` has condition number above
/// `condition_cap` (default [`DEFAULT_CONDITION_CAP`]).
pub fn partial_coherence(f: &CrossSpectralMatrix, condition_cap: Option<f64>) -> Result<CoherenceResult> {
    let cap = condition_cap.unwrap_or(DEFAULT_CONDITION_CAP);
    let d = f.dim();
    let grid = f.grid();
    let mut values = Vec::with_capacity(f.len());
    for (i, m) in f.values().iter().enumerate() {
        let cond = hermitian_condition(m);
        if !(cond <= cap) {
            return Err(Error::IllConditioned {
                freq: grid.freq(i),
                cond,
            });
        }
        let g = m.clone().try_inverse().ok_or(Error::IllConditioned {
            freq: grid.freq(i),
            cond,
        })?;
        let h: Vec<f64> = (0..d).map(|r| g[(r, r)].re.max(f64::MIN_POSITIVE).sqrt().recip()).collect();
        let pc = DMatrix::from_fn(d, d, |p, q| {
            if p == q {
                1.0
            } else {
                // symmetrize so PC_pq == PC_qp exactly
                let a = (g[(p, q)] * h[p] * h[q]).norm_sqr();
                let b = (g[(q, p)] * h[p] * h[q]).norm_sqr();
                (0.5 * (a + b)).min(1.0)
            }
        });
        values.push(pc);
    }
    Ok(CoherenceResult {
        grid,
        values,
        coherency: None,
    })
}

fn filtered_channel(series: &MultiChannelSeries, p: usize, band: &Band, order: usize) -> Result<Vec<f64>> {
    series.check_channel(p)?;
    let filt = design_fir_bandpass(band, order, series.sample_rate_hz())?;
    Ok(demean_slice(&filt.apply_slice(series.channel(p))?))
}

/// One cycle of the band centre, in samples.
pub fn default_max_lag(band: &Band, sample_rate_hz: f64) -> usize {
    (sample_rate_hz / band.center_hz()).round().max(1.0) as usize
}

/// Band coherence `max_l r(l)^2` of the zero-phase filtered, demeaned channels,
/// where `r(l)` is the fully normalized lagged cross-correlation, and the
/// maximizing lag (`X_p` at `t + l` against `X_q` at `t`).
///
/// `filter_order` and `max_lag` default to the band's default order and one
/// cycle of the band centre.
pub fn band_coherence(
    series: &MultiChannelSeries,
    p: usize,
    q: usize,
    band: &Band,
    filter_order: Option<usize>,
    max_lag: Option<usize>,
) -> Result<(f64, isize)> {
    let fs = series.sample_rate_hz();
    let order = filter_order.unwrap_or_else(|| default_order(band, fs));
    let xp = filtered_channel(series, p, band, order)?;
    if p == q {
        if xp.iter().all(|v| *v == 0.0) {
            return Err(Error::Degenerate(format!("channel {p} is zero in band {}", band.name)));
        }
        return Ok((1.0, 0));
    }
    let xq = filtered_channel(series, q, band, order)?;
    let lag = max_lag.unwrap_or_else(|| default_max_lag(band, fs));
    let (v, l) = max_lag_sq_correlation(&xp, &xq, lag).map_err(|e| match e {
        Error::Degenerate(_) => Error::Degenerate(format!(
            "filtered signal has no energy in band {}",
            band.name
        )),
        other => other,
    })?;
    Ok((v.min(1.0), l))
}

/// Residual of a lag-0 least-squares regression of `y` on `x` with intercept.
/// Both inputs are already demeaned, so the intercept is zero.
fn residual(y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("conditioning channel has zero variance in band".into()));
    }
    let beta = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    Ok(y.iter().zip(x).map(|(b, a)| b - beta * a).collect())
}

/// Squared correlation of the residuals of `X_p` and `X_q` after a lag-0
/// regression on `X_c`, all band-filtered.
///
/// A residual with (numerically) no energy gives 0.
pub fn partial_coherence_residual(
    series: &MultiChannelSeries,
    p: usize,
    q: usize,
    c: usize,
    band: &Band,
    filter_order: Option<usize>,
) -> Result<f64> {
    if c == p || c == q {
        return Err(Error::Config(format!(
            "conditioning channel {c} must differ from {p} and {q}"
        )));
    }
    let order = filter_order.unwrap_or_else(|| default_order(band, series.sample_rate_hz()));
    let xc = filtered_channel(series, c, band, order)?;
    let rp = residual(&filtered_channel(series, p, band, order)?, &xc)?;
    if p == q {
        return Ok(1.0);
    }
    let rq = residual(&filtered_channel(series, q, band, order)?, &xc)?;
    let epp: f64 = rp.iter().map(|v| v * v).sum();
    let eqq: f64 = rq.iter().map(|v| v * v).sum();
    let sc: f64 = xc.iter().map(|v| v * v).sum();
    let tiny = 1e-20 * sc;
    if epp <= tiny || eqq <= tiny {
        return Ok(0.0);
    }
    let cross: f64 = rp.iter().zip(&rq).map(|(a, b)| a * b).sum();
    Ok((cross * cross / (epp * eqq)).min(1.0))
}

/// Sliding-window estimates indexed by rescaled time `u = t / T`, where the
/// window with 1-based centre `t` covers `[t - (N/2 - 1), t + N/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingResult {
    pub centers: Vec<f64>,
    pub windows: Vec<CoherenceResult>,
    pub window_len: usize,
    pub step: usize,
}

impl TimeVaryingResult {
    /// `(p, q)` entry at the grid point nearest `freq`, one value per window.
    pub fn track(&self, p: usize, q: usize, freq: f64) -> Vec<f64> {
        self.windows
            .iter()
            .map(|w| w.values[w.grid.nearest(freq)][(p, q)])
            .collect()
    }

    /// Long format `u, freq, p, q, value` for `p < q`, channels 1-based.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "freq", "p", "q", "value"])?;
        for (u, r) in self.centers.iter().zip(&self.windows) {
            for (i, m) in r.values.iter().enumerate() {
                for p in 0..m.nrows() {
                    for q in p + 1..m.ncols() {
                        w.write_record([
                            format!("{u:.17e}"),
                            format!("{:.17e}", r.grid.freq(i)),
                            (p + 1).to_string(),
                            (q + 1).to_string(),
                            format!("{:.17e}", m[(p, q)]),
                        ])?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Zero-based start of each window of length `n` moved by `step`.
pub fn window_starts(len: usize, n: usize, step: usize) -> Result<Vec<usize>> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Config(format!("window length {n} must be even and at least 4")));
    }
    if n > len {
        return Err(Error::SeriesTooShort { len, needed: n });
    }
    if step == 0 {
        return Err(Error::Config("window step must be at least 1".into()));
    }
    Ok((0..=len - n).step_by(step).collect())
}

/// Rescaled time of the window starting at zero-based `start`.
pub fn window_center(start: usize, n: usize, len: usize) -> f64 {
    (start + n / 2) as f64 / len as f64
}

fn sliding<F>(series: &MultiChannelSeries, n: usize, step: usize, kernel: &SmoothingKernel, each: F) -> Result<TimeVaryingResult>
where
    F: Fn(&CrossSpectralMatrix) -> Result<CoherenceResult>,
{
    let starts = window_starts(series.len(), n, step)?;
    let mut centers = Vec::with_capacity(starts.len());
    let mut windows = Vec::with_capacity(starts.len());
    for s in starts {
        let f = smoothed_spectrum(&series.window(s, n)?, kernel)?;
        windows.push(each(&f)?);
        centers.push(window_center(s, n, series.len()));
    }
    Ok(TimeVaryingResult {
        centers,
        windows,
        window_len: n,
        step,
    })
}

/// Coherence from a smoothed local periodogram in each window.
pub fn tv_coherence(series: &MultiChannelSeries, n: usize, step: usize, kernel: &SmoothingKernel) -> Result<TimeVaryingResult> {
    sliding(series, n, step, kernel, coherence_matrix)
}

/// Partial coherence from a smoothed local periodogram in each window.
pub fn tv_partial_coherence(
    series: &MultiChannelSeries,
    n: usize,
    step: usize,
    kernel: &SmoothingKernel,
    condition_cap: Option<f64>,
) -> Result<TimeVaryingResult> {
    sliding(series, n, step, kernel, |f| partial_coherence(f, condition_cap))
}
