//! Cross-spectral matrix estimation.
//!
//! Fourier coefficients follow `d(w_k) = sum_{t=1}^{T} X(t) exp(-i 2 pi w_k t)`
//! (unnormalized, time index starting at one) and the periodogram is
//! `I(w_k) = d d^* / T`. Smoothing is a circular kernel average across
//! neighbouring Fourier frequencies.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{FrequencyGrid, MultiChannelSeries};
use crate::var::{transfer_function, VarModel};

/// Complex `P x P` matrix at one frequency.
pub type SpectralMat = DMatrix<Complex64>;

/// Hermitian PSD matrices on a frequency grid, in ascending frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectralMatrix {
    grid: FrequencyGrid,
    values: Vec<SpectralMat>,
}

impl CrossSpectralMatrix {
    pub fn new(grid: FrequencyGrid, values: Vec<SpectralMat>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} matrices for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        let p = values[0].nrows();
        if values.iter().any(|m| m.nrows() != p || m.ncols() != p) {
            return Err(Error::InvalidInput("spectral matrices must be square and equal-sized".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Matrix at grid position `i`.
    pub fn get(&self, i: usize) -> &SpectralMat {
        &self.values[i]
    }

    pub fn values(&self) -> &[SpectralMat] {
        &self.values
    }

    /// Matrix at the grid point nearest `freq` (cycles/sample).
    pub fn at_freq(&self, freq: f64) -> &SpectralMat {
        &self.values[self.grid.nearest(freq)]
    }

    /// Entry `(p, q)` across the grid.
    pub fn entry(&self, p: usize, q: usize) -> Vec<Complex64> {
        self.values.iter().map(|m| m[(p, q)]).collect()
    }

    /// Real auto-spectrum of channel `p` across the grid.
    pub fn auto_spectrum(&self, p: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[(p, p)].re).collect()
    }

    /// Largest `|f - f^*|` entry relative to the largest entry, over the grid.
    pub fn hermitian_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in &self.values {
            let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            if scale == 0.0 {
                continue;
            }
            let d = (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            worst = worst.max(d / scale);
        }
        worst
    }

    /// Smallest eigenvalue divided by the trace, over the grid.
    pub fn min_relative_eigenvalue(&self) -> f64 {
        let mut worst = f64::INFINITY;
        for m in &self.values {
            let tr: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
            if tr <= 0.0 {
                continue;
            }
            let h = (m + m.adjoint()).unscale(2.0);
            let ev = h.symmetric_eigenvalues();
            let min = ev.iter().fold(f64::INFINITY, |a, &v| a.min(v));
            worst = worst.min(min / tr);
        }
        if worst.is_infinite() {
            0.0
        } else {
            worst
        }
    }

    /// Hermitian to 1e-10 and PSD to `-1e-8 * trace` at every frequency.
    pub fn check_invariants(&self) -> Result<()> {
        let h = self.hermitian_error();
        if h > 1e-10 {
            return Err(Error::Degenerate(format!("spectral matrix not Hermitian ({h:.3e})")));
        }
        let e = self.min_relative_eigenvalue();
        if e < -1e-8 {
            return Err(Error::Degenerate(format!(
                "spectral matrix not positive semi-definite ({e:.3e})"
            )));
        }
        Ok(())
    }

    /// Long-format CSV: `freq,p,q,re,im`, one row per entry.
    pub fn write_csv<W: Write>(&self, out: W, sample_rate_hz: Option<f64>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["freq", "p", "q", "re", "im"])?;
        let scale = sample_rate_hz.unwrap_or(1.0);
        for (i, m) in self.values.iter().enumerate() {
            let f = self.grid.freq(i) * scale;
            for p in 0..m.nrows() {
                for q in 0..m.ncols() {
                    let z = m[(p, q)];
                    w.write_record(&[
                        format!("{f:?}"),
                        (p + 1).to_string(),
                        (q + 1).to_string(),
                        format!("{:?}", z.re),
                        format!("{:?}", z.im),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> SpectralJson {
        SpectralJson {
            n: self.grid.n(),
            dim: self.dim(),
            frequencies: self.grid.frequencies(),
            values: self
                .values
                .iter()
                .map(|m| {
                    (0..m.nrows())
                        .map(|p| (0..m.ncols()).map(|q| [m[(p, q)].re, m[(p, q)].im]).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_json(j: &SpectralJson) -> Result<Self> {
        let grid = FrequencyGrid::new(j.n)?;
        let values = j
            .values
            .iter()
            .map(|rows| {
                DMatrix::from_fn(j.dim, j.dim, |p, q| {
                    let [re, im] = rows[p][q];
                    Complex64::new(re, im)
                })
            })
            .collect();
        Self::new(grid, values)
    }
}

/// Serialized form: `values[freq][p][q] = [re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralJson {
    pub n: usize,
    pub dim: usize,
    pub frequencies: Vec<f64>,
    pub values: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Fourier coefficients of every channel on the `n = T` grid.
/// `out[i][p]` is `d_p` at grid position `i`.
pub fn fourier_coefficients(series: &MultiChannelSeries) -> Result<(FrequencyGrid, Vec<Vec<Complex64>>)> {
    let t = series.len();
    if t % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "Fourier grid needs an even series length, got {t}"
        )));
    }
    let grid = FrequencyGrid::new(t)?;
    let fft = FftPlanner::new().plan_fft_forward(t);
    let mut per_channel = Vec::with_capacity(series.n_channels());
    for c in series.channels() {
        let mut buf: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        per_channel.push(buf);
    }
    let out = (0..grid.len())
        .map(|i| {
            let k = grid.k(i);
            let bin = k.rem_euclid(t as isize) as usize;
            // time index starts at 1
            let shift = Complex64::from_polar(1.0, -2.0 * PI * k as f64 / t as f64);
            per_channel.iter().map(|d| d[bin] * shift).collect()
        })
        .collect();
    Ok((grid, out))
}

/// Rank-one periodogram matrices `d d^* / T`.
pub fn periodogram(series: &MultiChannelSeries) -> Result<CrossSpectralMatrix> {
    let (grid, d) = fourier_coefficients(series)?;
    let t = series.len() as f64;
    let p = series.n_channels();
    let values = d
        .iter()
        .map(|v| {
            let mut m = DMatrix::from_fn(p, p, |a, b| v[a] * v[b].conj() / t);
            for a in 0..p {
                m[(a, a)].im = 0.0;
            }
            m
        })
        .collect();
    CrossSpectralMatrix::new(grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Daniell,
    Triangular,
}

/// Symmetric non-negative weights over `-b..=b` bins, summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothingKernel {
    pub kind: KernelKind,
    pub half_width: usize,
}

impl SmoothingKernel {
    pub fn daniell(half_width: usize) -> Self {
        Self {
            kind: KernelKind::Daniell,
            half_width,
        }
    }

    pub fn triangular(half_width: usize) -> Self {
        Self {
            kind: KernelKind::Triangular,
            half_width,
        }
    }

    /// Daniell with `b = ceil(T^0.6 / 8)`.
    pub fn default_for(len: usize) -> Self {
        Self::daniell(default_bandwidth(len))
    }

    /// Weights for offsets `-b..=b`.
    pub fn weights(&self) -> Vec<f64> {
        let b = self.half_width as isize;
        let raw: Vec<f64> = (-b..=b)
            .map(|l| match self.kind {
                KernelKind::Daniell => 1.0,
                KernelKind::Triangular => (b + 1 - l.abs()) as f64,
            })
            .collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / s).collect()
    }

    /// `sum_l Q_b(l)^2`.
    pub fn sum_sq_weights(&self) -> f64 {
        self.weights().iter().map(|w| w * w).sum()
    }
}

pub fn default_bandwidth(len: usize) -> usize {
    ((len as f64).powf(0.6) / 8.0).ceil().max(1.0) as usize
}

/// Circular kernel smoothing across the grid.
pub fn smooth_periodogram(pgram: &CrossSpectralMatrix, kernel: &SmoothingKernel) -> Result<CrossSpectralMatrix> {
    let n = pgram.len();
    if 4 * kernel.half_width >= n {
        return Err(Error::Config(format!(
            "kernel half-width {} too large for a grid of {n}",
            kernel.half_width
        )));
    }
    let w = kernel.weights();
    let b = kernel.half_width as isize;
    let p = pgram.dim();
    let values = (0..n)
        .map(|i| {
            let mut acc = DMatrix::<Complex64>::zeros(p, p);
            for (j, wj) in w.iter().enumerate() {
                let idx = (i as isize + j as isize - b).rem_euclid(n as isize) as usize;
                acc += pgram.get(idx) * Complex64::new(*wj, 0.0);
            }
            acc
        })
        .collect();
    CrossSpectralMatrix::new(pgram.grid(), values)
}

/// Demean, periodogram, smooth.
pub fn smoothed_spectrum(series: &MultiChannelSeries, kernel: &SmoothingKernel) -> Result<CrossSpectralMatrix> {
    smooth_periodogram(&periodogram(&crate::series::demean(series))?, kernel)
}

/// Second-order oscillator `Z(t) = phi1 Z(t-1) + phi2 Z(t-2) + W(t)` whose
/// characteristic roots have magnitude `M` and phase `2 pi psi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar2Params {
    pub root_magnitude: f64,
    /// Peak frequency in cycles per sample.
    pub peak_freq: f64,
    pub noise_var: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl Ar2Params {
    pub fn new(root_magnitude: f64, peak_freq: f64, noise_var: f64) -> Result<Self> {
        if !(root_magnitude.is_finite() && root_magnitude > 1.0) {
            return Err(Error::Config(format!(
                "root magnitude must exceed 1 for a causal oscillator, got {root_magnitude}"
            )));
        }
        if !(peak_freq.abs() < 0.5) {
            return Err(Error::Config(format!(
                "peak frequency must lie in (-0.5, 0.5) cycles/sample, got {peak_freq}"
            )));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::Config(format!("noise variance must be positive, got {noise_var}")));
        }
        Ok(Self {
            root_magnitude,
            peak_freq,
            noise_var,
            phi1: 2.0 / root_magnitude * (2.0 * PI * peak_freq).cos(),
            phi2: -1.0 / (root_magnitude * root_magnitude),
        })
    }

    /// Peak given in Hertz.
    pub fn from_hz(root_magnitude: f64, peak_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        Self::new(root_magnitude, peak_hz / sample_rate_hz, 1.0)
    }

    /// Recovers `(M, psi)` from complex-conjugate roots of `1 - phi1 u - phi2 u^2`.
    pub fn from_coefficients(phi1: f64, phi2: f64, noise_var: f64) -> Result<Self> {
        if phi2 >= 0.0 {
            return Err(Error::Config("phi2 must be negative for complex roots".into()));
        }
        let disc = phi1 * phi1 + 4.0 * phi2;
        if disc >= 0.0 {
            return Err(Error::Config("coefficients have real roots; no spectral peak".into()));
        }
        // roots u = (-phi1 +/- i sqrt(-disc)) / (2 phi2)
        let u = Complex64::new(-phi1, (-disc).sqrt()) / (2.0 * phi2);
        let m = u.norm();
        let psi = u.arg().abs() / (2.0 * PI);
        Self::new(m, psi, noise_var)
    }

    /// Both roots of `1 - phi1 u - phi2 u^2`.
    pub fn roots(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.phi1 * self.phi1 + 4.0 * self.phi2, 0.0).sqrt();
        let a = Complex64::new(2.0 * self.phi2, 0.0);
        [(-self.phi1 + disc) / a, (-self.phi1 - disc) / a]
    }

    /// Closed-form stationary variance.
    pub fn stationary_variance(&self) -> f64 {
        let (p1, p2) = (self.phi1, self.phi2);
        self.noise_var * (1.0 - p2) / ((1.0 + p2) * ((1.0 - p2).powi(2) - p1 * p1))
    }

    /// Spectral density at `freq` (cycles/sample).
    pub fn density(&self, freq: f64) -> f64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * freq);
        let z2 = z1 * z1;
        let den = Complex64::new(1.0, 0.0) - self.phi1 * z1 - self.phi2 * z2;
        self.noise_var / den.norm_sqr()
    }
}

pub fn ar2_from_peak(root_magnitude: f64, peak_freq: f64) -> Result<Ar2Params> {
    Ar2Params::new(root_magnitude, peak_freq, 1.0)
}

pub fn ar2_spectrum(params: &Ar2Params, grid: &FrequencyGrid) -> Vec<f64> {
    (0..grid.len()).map(|i| params.density(grid.freq(i))).collect()
}

/// `Phi(w)^{-1} Sigma_W Phi(w)^{-*}` on the grid.
pub fn var_spectrum(model: &VarModel, grid: &FrequencyGrid) -> Result<CrossSpectralMatrix> {
    let rho = model.spectral_radius();
    if rho >= 1.0 {
        return Err(Error::Unstable(rho));
    }
    let sigma = model.noise_cov().map(|v| Complex64::new(v, 0.0));
    let tf = transfer_function(model, grid);
    let values = tf
        .iter()
        .enumerate()
        .map(|(i, phi)| {
            let inv = phi.clone().try_inverse().ok_or_else(|| {
                Error::Singular(format!("transfer function at frequency {}", grid.freq(i)))
            })?;
            let m = &inv * &sigma * inv.adjoint();
            Ok((&m + m.adjoint()).unscale(2.0))
        })
        .collect::<Result<Vec<_>>>()?;
    CrossSpectralMatrix::new(*grid, values)
}

/// Shrinkage estimate and the weight placed on the nonparametric part.
#[derive(Debug, Clone)]
pub struct ShrinkageEstimate {
    pub spectrum: CrossSpectralMatrix,
    /// `W1(w)` per grid point; the parametric weight is `1 - W1`.
    pub nonparametric_weight: Vec<f64>,
}

/// Per-frequency convex combination `W1 f~ + (1 - W1) h~`.
///
/// `W1 = m_h / (m_h + m_I)`. `m_I = sum Q_b^2 * (tr f~)^2` estimates the
/// smoothed-periodogram MSE and `m_h = ||h~ - f~||_F^2 - m_I` (floored just
/// above zero) the parametric MSE.
pub fn shrink_spectral_estimate(
    smoothed: &CrossSpectralMatrix,
    parametric: &CrossSpectralMatrix,
    kernel: &SmoothingKernel,
) -> Result<ShrinkageEstimate> {
    if smoothed.grid() != parametric.grid() {
        return Err(Error::GridMismatch(format!(
            "smoothed grid n={} vs parametric grid n={}",
            smoothed.grid().n(),
            parametric.grid().n()
        )));
    }
    if smoothed.dim() != parametric.dim() {
        return Err(Error::GridMismatch(format!(
            "dimension {} vs {}",
            smoothed.dim(),
            parametric.dim()
        )));
    }
    let q2 = kernel.sum_sq_weights();
    let mut weights = Vec::with_capacity(smoothed.len());
    let values = smoothed
        .values()
        .iter()
        .zip(parametric.values())
        .map(|(f, h)| {
            // E|f~_pq - f_pq|^2 ~ sum Q^2 f_pp f_qq, summed over (p, q)
            let tr = f.trace().re;
            let m_i = q2 * tr * tr;
            // |h~ - f~|^2 carries the periodogram noise on top of the parametric error
            let m_h = ((h - f).norm_squared() - m_i).max(1e-12 * m_i);
            let w1 = if m_h + m_i > 0.0 { m_h / (m_h + m_i) } else { 0.5 };
            weights.push(w1);
            f * Complex64::new(w1, 0.0) + h * Complex64::new(1.0 - w1, 0.0)
        })
        .collect();
    Ok(ShrinkageEstimate {
        spectrum: CrossSpectralMatrix::new(smoothed.grid(), values)?,
        nonparametric_weight: weights,
    })
}
