//! Principal components: classical PCA on the lag-0 covariance and spectral
//! PCA from per-frequency eigendecompositions turned into lag-domain filters.
//!
//! The spectral encoder is a two-sided (non-causal) filter. It summarizes;
//! it is not suitable where one-sided filtering matters, e.g. before a
//! causality analysis.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{demean, Band, FrequencyGrid, MultiChannelSeries};
use crate::spectrum::CrossSpectralMatrix;

/// Encode/decode pair shared by PCA and spectral PCA.
pub trait Reducer {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn encode(&self, series: &MultiChannelSeries) -> Result<MultiChannelSeries>;
    fn decode(&self, encoded: &MultiChannelSeries) -> Result<MultiChannelSeries>;
    /// Samples at each end affected by filter start-up after encode + decode.
    fn transient(&self) -> usize;
}

fn check_dim(series: &MultiChannelSeries, expected: usize, what: &str) -> Result<()> {
    if series.n_channels() != expected {
        return Err(Error::InvalidInput(format!(
            "{what} expects {expected} channels, got {}",
            series.n_channels()
        )));
    }
    Ok(())
}

fn check_q(q: usize, p: usize) -> Result<()> {
    if q == 0 || q > p {
        return Err(Error::Config(format!("target dimension {q} must be in 1..={p}")));
    }
    Ok(())
}

fn component_labels(q: usize) -> Vec<String> {
    (1..=q).map(|i| format!("Y{i}")).collect()
}

/// Index of the largest-magnitude entry; ties go to the lowest index.
fn argmax_abs<I: Iterator<Item = f64>>(it: I) -> usize {
    let mut best = (0, f64::MIN);
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaSolution {
    /// `P x Q`, orthonormal columns.
    pub loadings: DMatrix<f64>,
    /// All `P` eigenvalues of the covariance, nonincreasing.
    pub eigenvalues: Vec<f64>,
    pub mean: Vec<f64>,
}

impl PcaSolution {
    pub fn q(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn to_json(&self) -> PcaJson {
        PcaJson {
            loadings: (0..self.loadings.nrows())
                .map(|r| self.loadings.row(r).iter().copied().collect())
                .collect(),
            eigenvalues: self.eigenvalues.clone(),
            mean: self.mean.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaJson {
    /// Row per channel, column per component.
    pub loadings: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub mean: Vec<f64>,
}

/// Sample covariance (divisor `T`) of the demeaned channels.
pub fn covariance(series: &MultiChannelSeries) -> DMatrix<f64> {
    let x = demean(series);
    let (p, t) = (x.n_channels(), x.len() as f64);
    DMatrix::from_fn(p, p, |i, j| {
        x.channel(i).iter().zip(x.channel(j)).map(|(a, b)| a * b).sum::<f64>() / t
    })
}

/// Top-`Q` eigenvectors of the lag-0 covariance, each signed so that its
/// largest-magnitude entry is positive.
pub fn pca_fit(series: &MultiChannelSeries, q: usize) -> Result<PcaSolution> {
    let p = series.n_channels();
    check_q(q, p)?;
    let cov = covariance(series);
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    let tie_key = |i: usize| argmax_abs(eig.eigenvectors.column(i).iter().map(|v| v.abs()));
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
            .then(tie_key(a).cmp(&tie_key(b)))
    });
    let top = eig.eigenvalues[order[0]].abs();
    if !(top > 0.0) || eig.eigenvalues[order[p - 1]] <= 1e-12 * top {
        return Err(Error::Singular("covariance is rank deficient".into()));
    }
    let mut loadings = DMatrix::zeros(p, q);
    for (c, &i) in order.iter().take(q).enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let m = argmax_abs(v.iter().map(|x| x.abs()));
        if v[m] < 0.0 {
            v = -v;
        }
        loadings.set_column(c, &v);
    }
    Ok(PcaSolution {
        loadings,
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        mean: series.channels().iter().map(|c| crate::series::mean(c)).collect(),
    })
}

/// `Y(t) = A' (X(t) - mean)`.
pub fn pca_encode(series: &MultiChannelSeries, sol: &PcaSolution) -> Result<MultiChannelSeries> {
    check_dim(series, sol.loadings.nrows(), "PCA encoder")?;
    let (p, q) = sol.loadings.shape();
    let mut out = vec![vec![0.0; series.len()]; q];
    for t in 0..series.len() {
        for (c, y) in out.iter_mut().enumerate() {
            y[t] = (0..p).map(|i| sol.loadings[(i, c)] * (series.get(t, i) - sol.mean[i])).sum();
        }
    }
    MultiChannelSeries::new(out, series.sample_rate_hz(), component_labels(q))
}

/// `X^(t) = A Y(t) + mean`.
pub fn pca_decode(encoded: &MultiChannelSeries, sol: &PcaSolution) -> Result<MultiChannelSeries> {
    check_dim(encoded, sol.q(), "PCA decoder")?;
    let (p, q) = sol.loadings.shape();
    let mut out = vec![vec![0.0; encoded.len()]; p];
    for t in 0..encoded.len() {
        for (i, x) in out.iter_mut().enumerate() {
            x[t] = sol.mean[i] + (0..q).map(|c| sol.loadings[(i, c)] * encoded.get(t, c)).sum::<f64>();
        }
    }
    MultiChannelSeries::new(out, encoded.sample_rate_hz(), crate::series::default_labels(p))
}

impl Reducer for PcaSolution {
    fn input_dim(&self) -> usize {
        self.loadings.nrows()
    }
    fn output_dim(&self) -> usize {
        self.q()
    }
    fn encode(&self, series: &MultiChannelSeries) -> Result<MultiChannelSeries> {
        pca_encode(series, self)
    }
    fn decode(&self, encoded: &MultiChannelSeries) -> Result<MultiChannelSeries> {
        pca_decode(encoded, self)
    }
    fn transient(&self) -> usize {
        0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpcaSolution {
    pub grid: FrequencyGrid,
    /// `A(w)`, `P x Q` per grid point, orthonormal columns.
    pub loadings: Vec<DMatrix<Complex64>>,
    /// Top-`Q` eigenvalues per grid point, nonincreasing.
    pub eigenvalues: Vec<Vec<f64>>,
    pub lag_truncation: usize,
    /// Decoder filters `A(l)` for `l = -L..=L`, `P x Q`.
    pub decoder: Vec<DMatrix<Complex64>>,
    /// Encoder filters `B(l) = A(-l)^*` for `l = -L..=L`, `Q x P`.
    pub encoder: Vec<DMatrix<Complex64>>,
    /// Share of the decoder filter energy beyond lag `L`.
    pub truncation_energy: f64,
    /// Grid indices where `lambda_Q` and `lambda_{Q+1}` nearly coincide.
    pub gap_collapse: Vec<usize>,
}

impl SpcaSolution {
    pub fn q(&self) -> usize {
        self.loadings.first().map_or(0, |a| a.ncols())
    }

    pub fn p(&self) -> usize {
        self.loadings.first().map_or(0, |a| a.nrows())
    }

    /// `A(l)`, `|l| <= L`.
    pub fn decoder_at(&self, lag: isize) -> &DMatrix<Complex64> {
        &self.decoder[(lag + self.lag_truncation as isize) as usize]
    }

    /// First `Q` eigenvalue curves, `[component][grid index]`.
    pub fn component_spectra(&self) -> Vec<Vec<f64>> {
        (0..self.q())
            .map(|c| self.eigenvalues.iter().map(|e| e[c]).collect())
            .collect()
    }

    /// Largest imaginary entry of any lag filter relative to the filter norm.
    pub fn filter_imaginary_ratio(&self) -> f64 {
        let norm: f64 = self.decoder.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        let im = self
            .decoder
            .iter()
            .flat_map(|m| m.iter().map(|c| c.im.abs()))
            .fold(0.0, f64::max);
        im / norm
    }

    pub fn to_json(&self) -> SpcaJson {
        let split = |m: &DMatrix<Complex64>| ComplexMatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            re: m.iter().map(|c| c.re).collect(),
            im: m.iter().map(|c| c.im).collect(),
        };
        SpcaJson {
            grid_size: self.grid.n(),
            frequencies: self.grid.frequencies(),
            q: self.q(),
            lag_truncation: self.lag_truncation,
            truncation_energy: self.truncation_energy,
            gap_collapse: self.gap_collapse.clone(),
            eigenvalues: self.eigenvalues.clone(),
            loadings: self.loadings.iter().map(split).collect(),
            decoder: self.decoder.iter().map(split).collect(),
        }
    }
}

/// Column-major complex matrix as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpcaJson {
    pub grid_size: usize,
    pub frequencies: Vec<f64>,
    pub q: usize,
    pub lag_truncation: usize,
    pub truncation_energy: f64,
    pub gap_collapse: Vec<usize>,
    pub eigenvalues: Vec<Vec<f64>>,
    pub loadings: Vec<ComplexMatrixJson>,
    pub decoder: Vec<ComplexMatrixJson>,
}

/// Sorted eigenpairs of a Hermitian matrix, largest first; ties by the
/// channel index of each vector's largest entry.
fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, Vec<DVector<Complex64>>) {
    // exact Hermitian part, so rounding in the estimate cannot leak into the eigensolver
    let h = (m + m.adjoint()).unscale(2.0);
    let eig = h.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let key = |i: usize| argmax_abs(eig.eigenvectors.column(i).iter().map(|v| v.norm()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
            .then(key(a).cmp(&key(b)))
    });
    (
        order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect(),
    )
}

/// Rotates `v` by a unit-modulus factor to make its largest entry real positive.
fn anchor_phase(v: &mut DVector<Complex64>) {
    let m = argmax_abs(v.iter().map(|c| c.norm()));
    let a = v[m];
    if a.norm() > 0.0 {
        *v *= a.conj() / a.norm();
    }
}

/// Rotates `v` by the unit-modulus factor bringing it closest to `prev`.
fn align_phase(v: &mut DVector<Complex64>, prev: &DVector<Complex64>) {
    let ip = prev.dotc(v);
    if ip.norm() > 1e-12 {
        *v *= ip.conj() / ip.norm();
    } else {
        anchor_phase(v);
    }
}

/// `f(-w) == conj f(w)` across the grid, as for any estimate from a real series.
fn conjugate_symmetric(f: &CrossSpectralMatrix) -> bool {
    let grid = f.grid();
    let n = grid.n() as isize;
    (0..f.len()).all(|i| {
        let k = grid.k(i);
        if k == 0 || 2 * k == n {
            return true;
        }
        let a = f.get(i);
        let b = f.get(grid.position_of_k(-k));
        (a - b.map(|c| c.conj())).camax() <= 1e-10 * a.camax().max(f64::MIN_POSITIVE)
    })
}

/// Spectral PCA of `spectrum` with `Q` components and lag filters truncated
/// at `L` (default `n / 8`).
///
/// Eigenvectors are phase-anchored at frequency zero and then aligned to
/// their neighbour in a sweep outward in both directions.
pub fn spca_fit(spectrum: &CrossSpectralMatrix, q: usize, lag_truncation: Option<usize>) -> Result<SpcaSolution> {
    let p = spectrum.dim();
    check_q(q, p)?;
    spectrum.check_invariants()?;
    let grid = spectrum.grid();
    let n = grid.n();
    let lmax = lag_truncation.unwrap_or(n / 8);
    if 2 * lmax + 1 > n {
        return Err(Error::Config(format!(
            "lag truncation {lmax} needs a grid of at least {}",
            2 * lmax + 1
        )));
    }
    let len = spectrum.len();
    let mut vecs: Vec<Vec<DVector<Complex64>>> = vec![Vec::new(); len];
    let mut vals: Vec<Vec<f64>> = vec![Vec::new(); len];
    let mut gap_collapse = Vec::new();
    for i in 0..len {
        let (ev, vs) = hermitian_eigen(spectrum.get(i));
        if q < p && ev[q - 1] - ev[q] <= 1e-6 * ev[q - 1].abs() {
            gap_collapse.push(i);
        }
        vals[i] = ev[..q].to_vec();
        vecs[i] = vs.into_iter().take(q).collect();
    }
    let zero = grid.position_of_k(0);
    for v in vecs[zero].iter_mut() {
        anchor_phase(v);
    }
    // sweep once around the circle: w = 0 up to Nyquist, then up from -1/2
    let order: Vec<usize> = (zero..len).chain(0..zero).collect();
    for w in order.windows(2) {
        let prev = vecs[w[0]].clone();
        for (v, u) in vecs[w[1]].iter_mut().zip(&prev) {
            align_phase(v, u);
        }
    }
    let nyquist = (n % 2 == 0).then(|| grid.position_of_k(n as isize / 2));
    match nyquist.filter(|_| conjugate_symmetric(spectrum)) {
        Some(ny) => {
            // f at Nyquist is real; a linear phase ramp over [0, 1/2] (a
            // fractional lag) makes that eigenvector real without a jump
            for c in 0..q {
                let v = &vecs[ny][c];
                let m = argmax_abs(v.iter().map(|z| z.norm()));
                let mut theta = v[m].arg();
                if theta > PI / 2.0 {
                    theta -= PI;
                } else if theta <= -PI / 2.0 {
                    theta += PI;
                }
                for i in zero..len {
                    let k = grid.k(i) as f64;
                    let rot = Complex64::from_polar(1.0, -theta * k / (n as f64 / 2.0));
                    vecs[i][c] *= rot;
                }
                let v = &mut vecs[ny][c];
                let real = v.map(|z| Complex64::new(z.re, 0.0));
                *v = real.unscale(real.norm());
            }
            // real input: A(-w) = conj A(w) makes the lag filters real
            for i in 0..zero {
                let j = grid.position_of_k(-grid.k(i));
                vecs[i] = vecs[j].iter().map(|v| v.map(|c| c.conj())).collect();
            }
        }
        None => {
            // spread the phase left over on closing the circle evenly along the sweep
            for c in 0..q {
                let gap = vecs[zero - 1][c].dotc(&vecs[zero][c]);
                if gap.norm() < 1e-12 {
                    continue;
                }
                let phi = gap.arg();
                for (step, &i) in order.iter().enumerate() {
                    vecs[i][c] *= Complex64::from_polar(1.0, phi * step as f64 / len as f64);
                }
            }
        }
    }
    let loadings: Vec<DMatrix<Complex64>> = vecs
        .iter()
        .map(|vs| DMatrix::from_columns(vs))
        .collect();

    // A(l) = n^-1 sum_k A(w_k) exp(i 2 pi l k / n), one inverse FFT per entry
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let mut full = vec![DMatrix::<Complex64>::zeros(p, q); n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for r in 0..p {
        for c in 0..q {
            for (i, a) in loadings.iter().enumerate() {
                buf[grid.k(i).rem_euclid(n as isize) as usize] = a[(r, c)];
            }
            ifft.process(&mut buf);
            for (l, v) in buf.iter().enumerate() {
                full[l][(r, c)] = v / n as f64;
            }
        }
    }
    let at = |l: isize| &full[l.rem_euclid(n as isize) as usize];
    let l = lmax as isize;
    let decoder: Vec<_> = (-l..=l).map(|j| at(j).clone()).collect();
    let encoder: Vec<_> = (-l..=l).map(|j| at(-j).adjoint()).collect();
    let kept: f64 = decoder.iter().map(|m| m.norm_squared()).sum();
    let total: f64 = full.iter().map(|m| m.norm_squared()).sum();
    Ok(SpcaSolution {
        grid,
        loadings,
        eigenvalues: vals,
        lag_truncation: lmax,
        decoder,
        encoder,
        truncation_energy: if total > 0.0 { (1.0 - kept / total).max(0.0) } else { 0.0 },
        gap_collapse,
    })
}

/// `y(t) = sum_{|l| <= L} h(l) x(t - l)` for a bank of filters, with zero
/// padding outside the series. `filters[l + L]` is `out x in`.
fn apply_filter_bank(x: &MultiChannelSeries, filters: &[DMatrix<Complex64>], lmax: usize) -> Result<Vec<Vec<Complex64>>> {
    let t = x.len();
    let (rows, cols) = filters[0].shape();
    let size = (t + 2 * lmax + 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let spectra: Vec<Vec<Complex64>> = (0..cols)
        .map(|c| {
            let mut b = vec![Complex64::new(0.0, 0.0); size];
            for (i, v) in x.channel(c).iter().enumerate() {
                b[i] = Complex64::new(*v, 0.0);
            }
            fwd.process(&mut b);
            b
        })
        .collect();
    let mut out = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut acc = vec![Complex64::new(0.0, 0.0); size];
        for (c, xs) in spectra.iter().enumerate() {
            let mut h = vec![Complex64::new(0.0, 0.0); size];
            for (j, f) in filters.iter().enumerate() {
                let lag = j as isize - lmax as isize;
                h[lag.rem_euclid(size as isize) as usize] = f[(r, c)];
            }
            fwd.process(&mut h);
            for (a, (hv, xv)) in acc.iter_mut().zip(h.iter().zip(xs)) {
                *a += hv * xv;
            }
        }
        inv.process(&mut acc);
        out.push(acc[..t].iter().map(|v| v / size as f64).collect());
    }
    Ok(out)
}

/// Real part of a filtered bank, failing if the imaginary residue exceeds
/// `1e-6` of the output RMS.
fn real_output(y: Vec<Vec<Complex64>>) -> Result<Vec<Vec<f64>>> {
    let n: usize = y.iter().map(|c| c.len()).sum();
    let rms = (y.iter().flatten().map(|v| v.re * v.re).sum::<f64>() / n.max(1) as f64).sqrt();
    let im = y.iter().flatten().map(|v| v.im.abs()).fold(0.0, f64::max);
    if im > 1e-6 * rms.max(f64::MIN_POSITIVE) && im > 1e-300 {
        return Err(Error::Degenerate(format!(
            "spectral PCA filters leave an imaginary residue {im:.3e} (output rms {rms:.3e})"
        )));
    }
    Ok(y.into_iter().map(|c| c.into_iter().map(|v| v.re).collect()).collect())
}

fn check_len(series: &MultiChannelSeries, lmax: usize) -> Result<()> {
    if series.len() <= 2 * lmax {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed: 2 * lmax,
        });
    }
    Ok(())
}

/// `Y(t) = sum_l B(l) X(t - l)`.
pub fn spca_encode(series: &MultiChannelSeries, sol: &SpcaSolution) -> Result<MultiChannelSeries> {
    check_dim(series, sol.p(), "spectral PCA encoder")?;
    check_len(series, sol.lag_truncation)?;
    let y = real_output(apply_filter_bank(series, &sol.encoder, sol.lag_truncation)?)?;
    MultiChannelSeries::new(y, series.sample_rate_hz(), component_labels(sol.q()))
}

/// `X^(t) = sum_l A(l) Y(t - l)`.
pub fn spca_decode(encoded: &MultiChannelSeries, sol: &SpcaSolution) -> Result<MultiChannelSeries> {
    check_dim(encoded, sol.q(), "spectral PCA decoder")?;
    check_len(encoded, sol.lag_truncation)?;
    let x = real_output(apply_filter_bank(encoded, &sol.decoder, sol.lag_truncation)?)?;
    MultiChannelSeries::new(x, encoded.sample_rate_hz(), crate::series::default_labels(sol.p()))
}

impl Reducer for SpcaSolution {
    fn input_dim(&self) -> usize {
        self.p()
    }
    fn output_dim(&self) -> usize {
        self.q()
    }
    fn encode(&self, series: &MultiChannelSeries) -> Result<MultiChannelSeries> {
        spca_encode(series, self)
    }
    fn decode(&self, encoded: &MultiChannelSeries) -> Result<MultiChannelSeries> {
        spca_decode(encoded, self)
    }
    fn transient(&self) -> usize {
        2 * self.lag_truncation
    }
}

/// Mean over interior samples of `||X(t) - X^(t)||^2` for the demeaned input.
pub fn reconstruction_error<R: Reducer>(series: &MultiChannelSeries, reducer: &R) -> Result<f64> {
    check_dim(series, reducer.input_dim(), "reconstruction")?;
    let x = demean(series);
    let xh = reducer.decode(&reducer.encode(&x)?)?;
    let trim = reducer.transient();
    if x.len() <= 2 * trim {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            needed: 2 * trim,
        });
    }
    let r = trim..x.len() - trim;
    let mut acc = 0.0;
    for p in 0..x.n_channels() {
        acc += x.channel(p)[r.clone()]
            .iter()
            .zip(&xh.channel(p)[r.clone()])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>();
    }
    Ok(acc / r.len() as f64)
}

/// Mean `|A(w)|` over grid frequencies in `band` (`P x Q`).
pub fn band_loadings(sol: &SpcaSolution, band: &Band, sample_rate_hz: f64) -> Result<DMatrix<f64>> {
    let idx = sol
        .grid
        .positions_in(band.low_hz / sample_rate_hz, band.high_hz / sample_rate_hz);
    if idx.is_empty() {
        return Err(Error::InvalidBand {
            name: band.name.clone(),
            low_hz: band.low_hz,
            high_hz: band.high_hz,
            sample_rate_hz,
        });
    }
    let mut out = DMatrix::zeros(sol.p(), sol.q());
    for &i in &idx {
        out += sol.loadings[i].map(|c| c.norm());
    }
    Ok(out / idx.len() as f64)
}
