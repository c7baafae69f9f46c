//! Conditional least squares, LASSO and LASSLE estimation, and order selection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::VarModel;
use crate::error::{Error, Result};
use crate::series::{demean, MultiChannelSeries};

const LASSO_TOL: f64 = 1e-7;
const LASSO_MAX_SWEEPS: usize = 10_000;
const POLISH_EVERY: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum FitMethod {
    Ols,
    Lasso { lambda: f64 },
    Lassle { lambda: f64 },
    /// LASSLE with each equation's penalty chosen by BIC.
    LassleBic,
}

/// Dispatches on `method`.
pub fn fit(series: &MultiChannelSeries, order: usize, method: FitMethod) -> Result<VarModel> {
    match method {
        FitMethod::Ols => fit_ols(series, order),
        FitMethod::Lasso { lambda } => fit_lasso(series, order, lambda),
        FitMethod::Lassle { lambda } => fit_lassle(series, order, lambda),
        FitMethod::LassleBic => Ok(fit_lassle_bic(series, order)?.0),
    }
}

/// Lagged regression problem: row `t` of `z` is `[X(t-1)', ..., X(t-L)']`,
/// row `t` of `y` is `X(t)'`, for `t = start..T`.
struct Design {
    z: DMatrix<f64>,
    y: DMatrix<f64>,
    dim: usize,
    order: usize,
}

impl Design {
    fn new(series: &MultiChannelSeries, order: usize, start: usize) -> Result<Self> {
        let x = demean(series);
        let (t, p) = (x.len(), x.n_channels());
        let d = p * order;
        if t <= start || t - start <= d + p {
            return Err(Error::SeriesTooShort {
                len: t,
                needed: start + d + p,
            });
        }
        let n = t - start;
        let z = DMatrix::from_fn(n, d, |r, j| {
            let (lag, q) = (j / p + 1, j % p);
            x.get(start + r - lag, q)
        });
        let y = DMatrix::from_fn(n, p, |r, q| x.get(start + r, q));
        Ok(Self {
            z,
            y,
            dim: p,
            order,
        })
    }

    fn rows(&self) -> usize {
        self.y.nrows()
    }

    /// `Z'Z/n` for unit-RMS columns, and the RMS of each column.
    fn standardized_gram(&self) -> (DMatrix<f64>, DVector<f64>) {
        let d = self.z.ncols();
        let raw = self.z.transpose() * &self.z / self.rows() as f64;
        let scale = DVector::from_fn(d, |j, _| {
            let s = raw[(j, j)].sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        });
        let gram = DMatrix::from_fn(d, d, |i, j| raw[(i, j)] / (scale[i] * scale[j]));
        (gram, scale)
    }

    /// Coefficient matrices from a `d x P` block `b` (column `p` is equation `p`).
    fn unpack(&self, b: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let p = self.dim;
        (1..=self.order)
            .map(|lag| DMatrix::from_fn(p, p, |i, q| b[((lag - 1) * p + q, i)]))
            .collect()
    }

    fn residual_cov(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let e = if b.nrows() == 0 {
            self.y.clone()
        } else {
            &self.y - &self.z * b
        };
        let s = e.transpose() * &e / self.rows() as f64;
        0.5 * (&s + s.transpose())
    }
}

/// Least squares on the columns in `support` for equation `eq`.
/// Returns the full-length coefficient vector and standard errors.
fn ols_equation(design: &Design, eq: usize, support: &[usize]) -> Result<(DVector<f64>, DVector<f64>)> {
    let d = design.z.ncols();
    let mut beta = DVector::zeros(d);
    let mut se = DVector::zeros(d);
    if support.is_empty() {
        return Ok((beta, se));
    }
    let zs = design.z.select_columns(support);
    let y = design.y.column(eq);
    let gram = zs.transpose() * &zs;
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Singular(format!("regressor Gram matrix for equation {}", eq + 1))
    })?;
    let b = chol.solve(&(zs.transpose() * y));
    let resid = y - &zs * &b;
    let dof = design.rows().saturating_sub(support.len()).max(1);
    let s2 = resid.norm_squared() / dof as f64;
    let ginv = chol.inverse();
    for (k, &j) in support.iter().enumerate() {
        beta[j] = b[k];
        se[j] = (ginv[(k, k)] * s2).sqrt();
    }
    Ok((beta, se))
}

fn ols_on_design(design: &Design) -> Result<VarModel> {
    let (p, d) = (design.dim, design.z.ncols());
    let all: Vec<usize> = (0..d).collect();
    let mut b = DMatrix::zeros(d, p);
    let mut se = DMatrix::zeros(d, p);
    for eq in 0..p {
        let (beta, s) = ols_equation(design, eq, &all)?;
        b.set_column(eq, &beta);
        se.set_column(eq, &s);
    }
    let model = VarModel::new(design.unpack(&b), design.residual_cov(&b))?;
    Ok(model.with_std_errors(design.unpack(&se)))
}

/// Conditional least squares (the Gaussian conditional likelihood) on the
/// demeaned series. `Sigma_W` is the residual covariance; per-coefficient
/// standard errors are kept for Granger thresholds.
pub fn fit_ols(series: &MultiChannelSeries, order: usize) -> Result<VarModel> {
    ols_on_design(&Design::new(series, order, order)?)
}

/// LASSO fit with its per-equation diagnostics.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub model: VarModel,
    /// Penalty on each unit-RMS regressor (rows), per equation (columns).
    pub penalties: DMatrix<f64>,
    /// Objective after each sweep, per equation.
    pub objective_history: Vec<Vec<f64>>,
    pub sweeps: Vec<usize>,
    /// Largest KKT violation on the standardized scale, over all equations.
    pub kkt_residual: f64,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

struct EquationFit {
    beta: DVector<f64>,
    history: Vec<f64>,
    sweeps: usize,
    kkt: f64,
}

/// Cyclic coordinate descent for `(1/2n)||y - X b||^2 + sum_j pen_j |b_j|` with
/// unit-RMS columns, given `gram = X'X/n`, `xty = X'y/n`, `yty = y'y/n`.
/// Every few sweeps the current support is tried for an exact finish.
fn coordinate_descent(
    gram: &DMatrix<f64>,
    xty: &DVector<f64>,
    yty: f64,
    pen: &DVector<f64>,
    start: Option<&DVector<f64>>,
) -> std::result::Result<EquationFit, (usize, f64, DVector<f64>)> {
    let d = xty.len();
    let mut beta = start.cloned().unwrap_or_else(|| DVector::zeros(d));
    let mut gb = gram * &beta;
    let objective = |beta: &DVector<f64>, gb: &DVector<f64>| {
        0.5 * yty - xty.dot(beta) + 0.5 * beta.dot(gb) + pen.dot(&beta.abs())
    };
    let mut history = vec![objective(&beta, &gb)];
    let mut sweeps = 0;
    loop {
        let mut max_change = 0.0f64;
        for j in 0..d {
            let gjj = gram[(j, j)];
            if gjj <= 0.0 {
                continue;
            }
            let old = beta[j];
            let rho = xty[j] - gb[j] + gjj * old;
            let new = soft_threshold(rho, pen[j]) / gjj;
            let delta = new - old;
            if delta != 0.0 {
                beta[j] = new;
                gb.axpy(delta, &gram.column(j), 1.0);
                max_change = max_change.max(delta.abs());
            }
        }
        sweeps += 1;
        history.push(objective(&beta, &gb));
        if max_change < LASSO_TOL {
            break;
        }
        if sweeps % POLISH_EVERY == 0 {
            if let Some(exact) = feature_sign_finish(gram, xty, pen, &beta) {
                gb = gram * &exact;
                beta = exact;
                history.push(objective(&beta, &gb));
                break;
            }
        }
        if sweeps >= LASSO_MAX_SWEEPS {
            return Err((sweeps, max_change, beta));
        }
    }
    let mut kkt = 0.0f64;
    for j in 0..d {
        let g = xty[j] - gb[j];
        let v = if beta[j] == 0.0 {
            (g.abs() - pen[j]).max(0.0)
        } else {
            (g - pen[j] * beta[j].signum()).abs()
        };
        kkt = kkt.max(v);
    }
    Ok(EquationFit {
        beta,
        history,
        sweeps,
        kkt,
    })
}

/// Feature-sign active-set search started from `beta`. Each step solves the
/// stationarity equations on the active set with signs fixed, then moves to
/// the best point on the segment towards that solution, stopping at sign
/// changes. Returns the exact minimizer, or `None` on a singular active Gram
/// block or when the step budget runs out.
fn feature_sign_finish(gram: &DMatrix<f64>, xty: &DVector<f64>, pen: &DVector<f64>, beta: &DVector<f64>) -> Option<DVector<f64>> {
    let d = beta.len();
    let f = |x: &DVector<f64>| 0.5 * x.dot(&(gram * x)) - xty.dot(x) + pen.dot(&x.abs());
    let mut x = beta.clone();
    let mut sign: Vec<f64> = x.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect();
    // the starting point is not yet stationary on its support
    let mut on_ok = false;
    for _ in 0..(4 * d + 50) {
        let grad = gram * &x - xty;
        let violator = (0..d)
            .filter(|&j| sign[j] == 0.0 && grad[j].abs() > pen[j] * (1.0 + 1e-9) + 1e-12)
            .max_by(|&a, &b| (grad[a].abs() - pen[a]).total_cmp(&(grad[b].abs() - pen[b])));
        if on_ok {
            match violator {
                None => return Some(x),
                Some(k) => sign[k] = -grad[k].signum(),
            }
        }
        let active: Vec<usize> = (0..d).filter(|&j| sign[j] != 0.0).collect();
        if active.is_empty() {
            return Some(x);
        }
        let g_aa = DMatrix::from_fn(active.len(), active.len(), |a, b| gram[(active[a], active[b])]);
        let rhs = DVector::from_fn(active.len(), |a, _| xty[active[a]] - pen[active[a]] * sign[active[a]]);
        let target_a = g_aa.cholesky()?.solve(&rhs);
        let mut target = DVector::zeros(d);
        for (a, &j) in active.iter().enumerate() {
            target[j] = target_a[a];
        }
        // candidate stops: the full step and every zero crossing on the way
        let mut best = target.clone();
        let mut best_f = f(&target);
        on_ok = active.iter().all(|&j| target[j] != 0.0 && target[j].signum() == sign[j]);
        for &j in &active {
            let (from, to) = (x[j], target[j]);
            if from != 0.0 && from.signum() != to.signum() {
                let t = from / (from - to);
                let mut y = &x + (&target - &x) * t;
                y[j] = 0.0;
                let fy = f(&y);
                if fy < best_f {
                    best_f = fy;
                    best = y;
                    on_ok = false;
                }
            }
        }
        let fx = f(&x);
        if best_f > fx + 1e-12 * (1.0 + fx.abs()) {
            return None;
        }
        x = best;
        for j in 0..d {
            sign[j] = if x[j] == 0.0 { 0.0 } else { x[j].signum() };
        }
    }
    None
}

fn lasso_on_design(design: &Design, penalties: &DMatrix<f64>) -> Result<LassoFit> {
    if penalties.shape() != (design.z.ncols(), design.dim) {
        return Err(Error::Config(format!(
            "penalty matrix is {:?}, expected {} regressors x {} equations",
            penalties.shape(),
            design.z.ncols(),
            design.dim
        )));
    }
    if let Some(bad) = penalties.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::Config(format!("lambda must be non-negative, got {bad}")));
    }
    let (p, d, n) = (design.dim, design.z.ncols(), design.rows() as f64);
    let (gram, scale) = design.standardized_gram();
    let mut b = DMatrix::zeros(d, p);
    let mut histories = Vec::with_capacity(p);
    let mut sweeps = Vec::with_capacity(p);
    let mut kkt = 0.0f64;
    for eq in 0..p {
        let y = design.y.column(eq);
        let xty = (design.z.transpose() * y / n).component_div(&scale);
        let yty = y.norm_squared() / n;
        match coordinate_descent(&gram, &xty, yty, &penalties.column(eq).into_owned(), None) {
            Ok(fit) => {
                b.set_column(eq, &fit.beta.component_div(&scale));
                histories.push(fit.history);
                sweeps.push(fit.sweeps);
                kkt = kkt.max(fit.kkt);
            }
            Err((s, change, beta)) => {
                return Err(Error::NonConvergence {
                    sweeps: s,
                    max_change: change,
                    coefficients: beta.component_div(&scale).iter().copied().collect(),
                })
            }
        }
    }
    let model = VarModel::new(design.unpack(&b), design.residual_cov(&b))?;
    Ok(LassoFit {
        model,
        penalties: penalties.clone(),
        objective_history: histories,
        sweeps,
        kkt_residual: kkt,
    })
}

/// Per-equation L1-penalized least squares. Regressors are scaled to unit RMS
/// internally; coefficients are reported on the original scale.
pub fn fit_lasso(series: &MultiChannelSeries, order: usize, lambda: f64) -> Result<VarModel> {
    Ok(fit_lasso_detailed(series, order, lambda)?.model)
}

pub fn fit_lasso_detailed(series: &MultiChannelSeries, order: usize, lambda: f64) -> Result<LassoFit> {
    let design = Design::new(series, order, order)?;
    let pen = DMatrix::from_element(design.z.ncols(), design.dim, lambda);
    lasso_on_design(&design, &pen)
}

/// Smallest `lambda` giving an all-zero fit, per equation.
pub fn lambda_max(series: &MultiChannelSeries, order: usize) -> Result<Vec<f64>> {
    let design = Design::new(series, order, order)?;
    let n = design.rows() as f64;
    Ok((0..design.dim)
        .map(|eq| {
            let y = design.y.column(eq);
            (0..design.z.ncols())
                .map(|j| {
                    let col = design.z.column(j);
                    let s = (col.norm_squared() / n).sqrt();
                    if s > 0.0 {
                        (col.dot(&y) / n / s).abs()
                    } else {
                        0.0
                    }
                })
                .fold(0.0f64, f64::max)
        })
        .collect())
}

/// LASSO for the support, then least squares restricted to it. Zeros from the
/// first stage stay exactly zero.
pub fn fit_lassle(series: &MultiChannelSeries, order: usize, lambda: f64) -> Result<VarModel> {
    fit_lassle_per_equation(series, order, &vec![lambda; series.n_channels()])
}

/// LASSLE with a separate penalty for each equation.
pub fn fit_lassle_per_equation(series: &MultiChannelSeries, order: usize, lambdas: &[f64]) -> Result<VarModel> {
    let d = series.n_channels() * order;
    if lambdas.len() != series.n_channels() {
        return Err(Error::Config(format!(
            "{} penalties for {} equations",
            lambdas.len(),
            series.n_channels()
        )));
    }
    fit_lassle_weighted(series, order, &DMatrix::from_fn(d, lambdas.len(), |_, eq| lambdas[eq]))
}

/// LASSLE with a penalty for every coefficient: `penalties[(j, p)]` applies to
/// unit-RMS regressor `j` (lag `j / P + 1`, channel `j % P`) in equation `p`.
pub fn fit_lassle_weighted(series: &MultiChannelSeries, order: usize, penalties: &DMatrix<f64>) -> Result<VarModel> {
    let design = Design::new(series, order, order)?;
    let lasso = lasso_on_design(&design, penalties)?;
    let (p, d) = (design.dim, design.z.ncols());
    let mut b = DMatrix::zeros(d, p);
    let mut se = DMatrix::zeros(d, p);
    for eq in 0..p {
        let support: Vec<usize> = (0..d)
            .filter(|&j| {
                let (lag, q) = (j / p + 1, j % p);
                lasso.model.coeff(lag)[(eq, q)] != 0.0
            })
            .collect();
        let (beta, s) = ols_equation(&design, eq, &support)?;
        b.set_column(eq, &beta);
        se.set_column(eq, &s);
    }
    let model = VarModel::new(design.unpack(&b), design.residual_cov(&b))?;
    Ok(model.with_std_errors(design.unpack(&se)))
}

/// Penalties tried along the LASSLE path, geometric from `lambda_max` down to
/// `lambda_max * PATH_RATIO`.
const PATH_LEN: usize = 40;
const PATH_RATIO: f64 = 1e-4;

/// LASSLE with the penalty of each equation picked by BIC along a warm-started
/// LASSO path. Each distinct support is refitted by least squares and scored
/// with `n ln(RSS / n) + |support| ln n`. Returns the model and the chosen
/// penalties (unit-RMS scale).
pub fn fit_lassle_bic(series: &MultiChannelSeries, order: usize) -> Result<(VarModel, Vec<f64>)> {
    let design = Design::new(series, order, order)?;
    let (p, d, n) = (design.dim, design.z.ncols(), design.rows());
    let (gram, scale) = design.standardized_gram();
    let nf = n as f64;
    let mut b = DMatrix::zeros(d, p);
    let mut se = DMatrix::zeros(d, p);
    let mut chosen = Vec::with_capacity(p);
    for eq in 0..p {
        let y = design.y.column(eq);
        let xty = (design.z.transpose() * y / nf).component_div(&scale);
        let yty = y.norm_squared() / nf;
        let top = xty.amax();
        let score = |support: &[usize]| -> Result<(f64, DVector<f64>, DVector<f64>)> {
            let (beta, s) = ols_equation(&design, eq, support)?;
            let rss = (y - &design.z * &beta).norm_squared().max(f64::MIN_POSITIVE);
            Ok((nf * (rss / nf).ln() + support.len() as f64 * nf.ln(), beta, s))
        };
        let (mut best_bic, mut best_beta, mut best_se) = score(&[])?;
        let mut best_lambda = top;
        let mut seen: Vec<Vec<usize>> = vec![vec![]];
        let mut warm: Option<DVector<f64>> = None;
        for k in 1..PATH_LEN {
            let lambda = top * PATH_RATIO.powf(k as f64 / (PATH_LEN - 1) as f64);
            let pen = DVector::from_element(d, lambda);
            let beta = match coordinate_descent(&gram, &xty, yty, &pen, warm.as_ref()) {
                Ok(fit) => fit.beta,
                Err((_, _, beta)) => beta,
            };
            let support: Vec<usize> = (0..d).filter(|&j| beta[j] != 0.0).collect();
            warm = Some(beta);
            if seen.contains(&support) {
                continue;
            }
            let (bic, beta_s, se_s) = match score(&support) {
                Ok(v) => v,
                Err(Error::Singular(_)) => continue,
                Err(e) => return Err(e),
            };
            seen.push(support);
            if bic < best_bic {
                (best_bic, best_beta, best_se, best_lambda) = (bic, beta_s, se_s, lambda);
            }
        }
        b.set_column(eq, &best_beta);
        se.set_column(eq, &best_se);
        chosen.push(best_lambda);
    }
    let model = VarModel::new(design.unpack(&b), design.residual_cov(&b))?;
    Ok((model.with_std_errors(design.unpack(&se)), chosen))
}

/// Per-equation penalty `sigma_p * sqrt(2 ln d / n)`, with `sigma_p` the
/// least-squares residual scale and `d` the number of regressors: the level
/// above which pure-noise correlations with unit-RMS regressors rarely rise.
pub fn universal_lambdas(series: &MultiChannelSeries, order: usize) -> Result<Vec<f64>> {
    let design = Design::new(series, order, order)?;
    let ols = ols_on_design(&design)?;
    let (n, d) = (design.rows() as f64, design.z.ncols().max(2) as f64);
    let k = (2.0 * d.ln() / n).sqrt();
    Ok((0..design.dim).map(|p| ols.noise_cov()[(p, p)].sqrt() * k).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
}

/// Order in `1..=max_order` minimizing the criterion, every order fitted by
/// least squares on the same rows `max_order..T`.
pub fn select_order(series: &MultiChannelSeries, max_order: usize, criterion: Criterion) -> Result<usize> {
    if max_order == 0 {
        return Err(Error::Config("maximum order must be at least 1".into()));
    }
    let p = series.n_channels() as f64;
    let mut best = (f64::INFINITY, 1);
    for l in 1..=max_order {
        let design = Design::new(series, l, max_order)?;
        let n = design.rows() as f64;
        let model = ols_on_design(&design)?;
        let det = model.noise_cov().determinant();
        if !(det > 0.0) {
            return Err(Error::Singular("residual covariance in order selection".into()));
        }
        let k = p * p * l as f64;
        let penalty = match criterion {
            Criterion::Aic => 2.0 * k / n,
            Criterion::Bic => n.ln() * k / n,
        };
        let score = det.ln() + penalty;
        if score < best.0 {
            best = (score, l);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::var::simulate_var;

    fn var2() -> VarModel {
        VarModel::new(
            vec![
                DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, 0.0, 0.4, 0.0, 0.3, 0.0, 0.2]),
                DMatrix::from_row_slice(3, 3, &[-0.3, 0.0, 0.0, 0.1, -0.2, 0.0, 0.0, 0.0, -0.25]),
            ],
            DMatrix::identity(3, 3),
        )
        .unwrap()
    }

    fn white(p: usize, t: usize, seed: u64) -> MultiChannelSeries {
        simulate_var(&VarModel::new(vec![], DMatrix::identity(p, p)).unwrap(), t, seed, None).unwrap()
    }

    fn max_err(a: &VarModel, b: &VarModel) -> f64 {
        a.coeffs()
            .iter()
            .zip(b.coeffs())
            .map(|(x, y)| (x - y).amax())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ols_recovers_var2() {
        let x = simulate_var(&var2(), 1 << 14, 1, None).unwrap();
        let m = fit_ols(&x, 2).unwrap();
        assert!(max_err(&m, &var2()) < 0.05);
        assert!(m.std_errors().is_some());
        assert!((m.noise_cov() - DMatrix::<f64>::identity(3, 3)).amax() < 0.05);
    }

    #[test]
    fn ols_on_white_noise() {
        let m = fit_ols(&white(2, 1 << 14, 2), 1).unwrap();
        assert!(m.coeff(1).amax() < 0.05);
        let m0 = fit_ols(&white(2, 1000, 3), 0).unwrap();
        assert_eq!(m0.order(), 0);
        let x = demean(&white(2, 1000, 3));
        let c01 = crate::series::lagged_product(x.channel(0), x.channel(1), 0);
        assert!((m0.noise_cov()[(0, 1)] - c01).abs() < 1e-12);
    }

    #[test]
    fn ols_too_short() {
        assert!(matches!(fit_ols(&white(3, 8, 4), 2), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn ols_error_halves_with_more_data() {
        let mut small = Vec::new();
        let mut large = Vec::new();
        for seed in 0..15 {
            small.push(max_err(&fit_ols(&simulate_var(&var2(), 1 << 12, 10 + seed, None).unwrap(), 2).unwrap(), &var2()));
            large.push(max_err(&fit_ols(&simulate_var(&var2(), 1 << 14, 10 + seed, None).unwrap(), 2).unwrap(), &var2()));
        }
        small.sort_by(|a, b| a.partial_cmp(b).unwrap());
        large.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // sqrt(T) scaling predicts a ratio of 0.5
        assert!(large[7] < 0.6 * small[7], "{} vs {}", large[7], small[7]);
    }

    #[test]
    fn lasso_zero_lambda_is_ols() {
        let x = simulate_var(&var2(), 2000, 5, None).unwrap();
        let a = fit_lasso(&x, 2, 0.0).unwrap();
        let b = fit_ols(&x, 2).unwrap();
        assert!(max_err(&a, &b) < 1e-5);
        let c = fit_lassle(&x, 2, 0.0).unwrap();
        assert!(max_err(&c, &b) < 1e-10);
    }

    #[test]
    fn lasso_large_lambda_is_zero() {
        let x = simulate_var(&var2(), 2000, 6, None).unwrap();
        let lmax = lambda_max(&x, 2).unwrap().into_iter().fold(0.0, f64::max);
        let m = fit_lasso(&x, 2, lmax).unwrap();
        assert!(m.coeffs().iter().all(|c| c.iter().all(|v| *v == 0.0)));
        let m = fit_lasso(&x, 2, 0.99 * lmax).unwrap();
        assert!(m.coeffs().iter().any(|c| c.iter().any(|v| *v != 0.0)));
        assert!(fit_lasso(&x, 2, -1.0).is_err());
    }

    #[test]
    fn lasso_descent_and_kkt() {
        let x = simulate_var(&var2(), 4000, 7, None).unwrap();
        for lambda in [0.01, 0.05, 0.2] {
            let fit = fit_lasso_detailed(&x, 3, lambda).unwrap();
            for h in &fit.objective_history {
                for w in h.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
                }
            }
            assert!(fit.kkt_residual < 1e-5, "{}", fit.kkt_residual);
        }
    }

    #[test]
    fn lassle_keeps_lasso_zeros_and_reduces_bias() {
        let x = simulate_var(&var2(), 4000, 8, None).unwrap();
        let lasso = fit_lasso(&x, 2, 0.1).unwrap();
        let lassle = fit_lassle(&x, 2, 0.1).unwrap();
        for (a, b) in lasso.coeffs().iter().zip(lassle.coeffs()) {
            for (u, v) in a.iter().zip(b.iter()) {
                if *u == 0.0 {
                    assert_eq!(*v, 0.0);
                }
            }
        }
        // nonzero truth: LASSLE closer on average than the shrunken LASSO
        let truth = var2();
        let bias = |m: &VarModel| {
            let mut s = 0.0;
            for (t, e) in truth.coeffs().iter().zip(m.coeffs()) {
                for (u, v) in t.iter().zip(e.iter()) {
                    if *u != 0.0 {
                        s += (u - v).abs();
                    }
                }
            }
            s
        };
        assert!(bias(&lassle) < bias(&lasso));
    }

    #[test]
    fn bic_selects_true_order() {
        let hits = (0..10)
            .filter(|s| select_order(&simulate_var(&var2(), 1 << 14, 20 + s, None).unwrap(), 8, Criterion::Bic).unwrap() == 2)
            .count();
        assert!(hits >= 9, "{hits}/10");
    }

    #[test]
    fn bic_on_white_noise_is_one() {
        assert_eq!(select_order(&white(3, 1 << 12, 30), 6, Criterion::Bic).unwrap(), 1);
        assert!(select_order(&white(3, 100, 30), 0, Criterion::Bic).is_err());
    }

    #[test]
    fn aic_is_at_least_as_large() {
        let mut ge = 0;
        for s in 0..10 {
            let x = simulate_var(&var2(), 2000, 40 + s, None).unwrap();
            if select_order(&x, 8, Criterion::Aic).unwrap() >= select_order(&x, 8, Criterion::Bic).unwrap() {
                ge += 1;
            }
        }
        assert!(ge >= 5);
    }
}
