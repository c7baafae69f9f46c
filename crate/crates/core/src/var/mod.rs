//! Vector autoregressions `X(t) = sum_l Phi_l X(t-l) + W(t)`: representation,
//! simulation, estimation, partial directed coherence and spectral-VAR
//! causality between band-limited oscillations.

mod fit;
mod pdc;
mod spectral_var;

pub use fit::{
    fit, fit_lassle, fit_lassle_per_equation, fit_lassle_bic, fit_lassle_weighted, fit_lasso, fit_lasso_detailed, fit_ols, lambda_max,
    select_order, universal_lambdas, Criterion, FitMethod, LassoFit,
};
pub use pdc::{granger_edges, pdc, tv_pdc, EdgeThreshold, PdcJson, PdcResult, TvPdc};
pub use spectral_var::{spectral_var, BandEdge, SpectralVarResult, SpectralVarSpec};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{default_labels, FrequencyGrid, MultiChannelSeries};

/// Order-`L` VAR with Gaussian innovation covariance `Sigma_W`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    coeffs: Vec<DMatrix<f64>>,
    noise_cov: DMatrix<f64>,
    /// Standard errors of each coefficient, when estimated by least squares.
    std_errors: Option<Vec<DMatrix<f64>>>,
}

impl VarModel {
    pub fn new(coeffs: Vec<DMatrix<f64>>, noise_cov: DMatrix<f64>) -> Result<Self> {
        let p = noise_cov.nrows();
        if p == 0 || noise_cov.ncols() != p {
            return Err(Error::InvalidInput("noise covariance must be square and non-empty".into()));
        }
        if coeffs.iter().any(|c| c.nrows() != p || c.ncols() != p) {
            return Err(Error::InvalidInput(format!(
                "every coefficient matrix must be {p} x {p}"
            )));
        }
        let scale = noise_cov.amax().max(1.0);
        if (&noise_cov - noise_cov.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidInput("noise covariance must be symmetric".into()));
        }
        let min_ev = noise_cov.clone().symmetric_eigenvalues().min();
        if min_ev < -1e-10 * scale {
            return Err(Error::InvalidInput(
                "noise covariance must be positive semi-definite".into(),
            ));
        }
        Ok(Self {
            coeffs,
            noise_cov,
            std_errors: None,
        })
    }

    pub(crate) fn with_std_errors(mut self, se: Vec<DMatrix<f64>>) -> Self {
        self.std_errors = Some(se);
        self
    }

    pub fn dim(&self) -> usize {
        self.noise_cov.nrows()
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// `Phi_l` for `l = 1..=L` (index `l - 1`).
    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn coeff(&self, lag: usize) -> &DMatrix<f64> {
        &self.coeffs[lag - 1]
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    pub fn std_errors(&self) -> Option<&[DMatrix<f64>]> {
        self.std_errors.as_deref()
    }

    /// Largest eigenvalue modulus of the companion matrix.
    pub fn spectral_radius(&self) -> f64 {
        let (p, l) = (self.dim(), self.order());
        if l == 0 {
            return 0.0;
        }
        let n = p * l;
        let mut c = DMatrix::<f64>::zeros(n, n);
        for (j, phi) in self.coeffs.iter().enumerate() {
            c.view_mut((0, j * p), (p, p)).copy_from(phi);
        }
        for i in p..n {
            c[(i, i - p)] = 1.0;
        }
        c.complex_eigenvalues()
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < 1.0
    }

    pub fn to_json(&self) -> VarModelJson {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
        };
        VarModelJson {
            dim: self.dim(),
            order: self.order(),
            coeffs: self.coeffs.iter().map(rows).collect(),
            noise_cov: rows(&self.noise_cov),
            std_errors: self.std_errors.as_ref().map(|v| v.iter().map(rows).collect()),
            spectral_radius: self.spectral_radius(),
        }
    }

    pub fn from_json(j: &VarModelJson) -> Result<Self> {
        let mat = |r: &Vec<Vec<f64>>| -> Result<DMatrix<f64>> {
            if r.len() != j.dim || r.iter().any(|row| row.len() != j.dim) {
                return Err(Error::Parse(format!("expected {0} x {0} matrix", j.dim)));
            }
            Ok(DMatrix::from_fn(j.dim, j.dim, |a, b| r[a][b]))
        };
        let coeffs = j.coeffs.iter().map(mat).collect::<Result<Vec<_>>>()?;
        let mut m = Self::new(coeffs, mat(&j.noise_cov)?)?;
        if let Some(se) = &j.std_errors {
            m.std_errors = Some(se.iter().map(mat).collect::<Result<Vec<_>>>()?);
        }
        Ok(m)
    }
}

/// Serialized VAR: row-major matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarModelJson {
    pub dim: usize,
    pub order: usize,
    pub coeffs: Vec<Vec<Vec<f64>>>,
    pub noise_cov: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub spectral_radius: f64,
}

/// Symmetric square root of a PSD matrix.
pub(crate) fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Gaussian realization of length `len`, sample rate 1 Hz.
///
/// Starts from zero and discards `burn_in` samples
/// (default `max(10 L P, 500)`).
pub fn simulate_var(model: &VarModel, len: usize, seed: u64, burn_in: Option<usize>) -> Result<MultiChannelSeries> {
    let rho = model.spectral_radius();
    if rho >= 1.0 {
        return Err(Error::Unstable(rho));
    }
    if len < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {len}")));
    }
    let (p, l) = (model.dim(), model.order());
    let burn = burn_in.unwrap_or((10 * l * p).max(500));
    let total = burn + len;
    let root = psd_sqrt(model.noise_cov());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut z = vec![0.0; p];
    for t in 0..total {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let mut row: Vec<f64> = (0..p)
            .map(|i| (0..p).map(|j| root[(i, j)] * z[j]).sum())
            .collect();
        for (lag, phi) in model.coeffs().iter().enumerate() {
            if t > lag {
                let prev = &x[t - lag - 1];
                for i in 0..p {
                    row[i] += (0..p).map(|j| phi[(i, j)] * prev[j]).sum::<f64>();
                }
            }
        }
        x.push(row);
    }
    let channels = (0..p).map(|i| x[burn..].iter().map(|r| r[i]).collect()).collect();
    MultiChannelSeries::new(channels, 1.0, default_labels(p))
}

/// `Phi(w) = I - sum_l Phi_l exp(-i 2 pi w l)` at one frequency.
pub fn transfer_at(model: &VarModel, freq: f64) -> DMatrix<Complex64> {
    let p = model.dim();
    let mut m = DMatrix::<Complex64>::identity(p, p);
    for (j, phi) in model.coeffs().iter().enumerate() {
        let e = Complex64::from_polar(1.0, -2.0 * PI * freq * (j + 1) as f64);
        m -= phi.map(|v| Complex64::new(v, 0.0) * e);
    }
    m
}

pub fn transfer_function(model: &VarModel, grid: &FrequencyGrid) -> Vec<DMatrix<Complex64>> {
    (0..grid.len()).map(|i| transfer_at(model, grid.freq(i))).collect()
}
