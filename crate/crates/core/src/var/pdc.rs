//! Partial directed coherence, its sliding-window version, and Granger edges.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{fit, transfer_function, FitMethod, VarModel};
use crate::error::{Error, Result};
use crate::series::{FrequencyGrid, MultiChannelSeries};

/// `pi_pq(w) = |Phi_pq(w)|^2 / sum_r |Phi_rq(w)|^2` on a grid. Entry `(p, q)`
/// is the flow from `q` into `p`; each column sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PdcResult {
    pub grid: FrequencyGrid,
    pub values: Vec<DMatrix<f64>>,
}

impl PdcResult {
    pub fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    /// `pi_pq` across the grid.
    pub fn entry(&self, p: usize, q: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[(p, q)]).collect()
    }

    /// Mean of `pi_pq` over grid points in `[lo, hi]` (cycles/sample).
    pub fn band_mean(&self, p: usize, q: usize, lo: f64, hi: f64) -> Result<f64> {
        let idx = self.grid.positions_in(lo, hi);
        if idx.is_empty() {
            return Err(Error::Config(format!("no grid frequencies in [{lo}, {hi}]")));
        }
        Ok(idx.iter().map(|&i| self.values[i][(p, q)]).sum::<f64>() / idx.len() as f64)
    }

    /// Largest deviation of a column sum from one.
    pub fn column_sum_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in &self.values {
            for q in 0..m.ncols() {
                worst = worst.max((m.column(q).sum() - 1.0).abs());
            }
        }
        worst
    }

    pub fn to_json(&self) -> PdcJson {
        PdcJson {
            n: self.grid.n(),
            frequencies: self.grid.frequencies(),
            values: self
                .values
                .iter()
                .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdcJson {
    pub n: usize,
    pub frequencies: Vec<f64>,
    /// `values[freq][p][q]`.
    pub values: Vec<Vec<Vec<f64>>>,
}

pub fn pdc(model: &VarModel, grid: &FrequencyGrid) -> Result<PdcResult> {
    let values = transfer_function(model, grid)
        .iter()
        .enumerate()
        .map(|(i, phi)| {
            let p = phi.nrows();
            let mag = phi.map(|z| z.norm_sqr());
            let mut out = DMatrix::zeros(p, p);
            for q in 0..p {
                let s: f64 = mag.column(q).sum();
                if !(s > 0.0) {
                    return Err(Error::Degenerate(format!(
                        "transfer function column {} vanishes at frequency {}",
                        q + 1,
                        grid.freq(i)
                    )));
                }
                for r in 0..p {
                    out[(r, q)] = mag[(r, q)] / s;
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PdcResult { grid: *grid, values })
}

/// Sliding-window PDC.
#[derive(Debug, Clone)]
pub struct TvPdc {
    /// Window centres in rescaled time `t / T`.
    pub centers: Vec<f64>,
    pub window: usize,
    pub step: usize,
    pub results: Vec<PdcResult>,
}

/// Fits a VAR of order `order` to each window of length `window` (advancing by
/// `step`) and evaluates PDC on an `n_freq` grid.
pub fn tv_pdc(
    series: &MultiChannelSeries,
    order: usize,
    window: usize,
    step: usize,
    method: FitMethod,
    n_freq: usize,
) -> Result<TvPdc> {
    let (t, p) = (series.len(), series.n_channels());
    if step == 0 {
        return Err(Error::Config("window step must be at least 1".into()));
    }
    if window > t {
        return Err(Error::Config(format!("window {window} longer than series {t}")));
    }
    if window <= p * order + p {
        return Err(Error::Config(format!(
            "window {window} too small for a {p}-channel VAR({order})"
        )));
    }
    let grid = FrequencyGrid::new(n_freq)?;
    let mut centers = Vec::new();
    let mut results = Vec::new();
    let mut start = 0;
    while start + window <= t {
        let w = series.window(start, window)?;
        let model = fit(&w, order, method)?;
        results.push(pdc(&model, &grid)?);
        centers.push((start as f64 + window as f64 / 2.0) / t as f64);
        start += step;
    }
    Ok(TvPdc {
        centers,
        window,
        step,
        results,
    })
}

/// Rule for declaring a coefficient nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeThreshold {
    /// `|Phi_pq,l| > value`. Zero gives the exact support.
    Absolute(f64),
    /// `|Phi_pq,l| > k * se(Phi_pq,l)`; needs fitted standard errors.
    StdErrors(f64),
}

/// `edges[(p, q)]` is true when `q` Granger-causes `p` at some lag.
/// Self-loops are reported on the diagonal.
pub fn granger_edges(model: &VarModel, threshold: EdgeThreshold) -> Result<DMatrix<bool>> {
    let p = model.dim();
    let mut out = DMatrix::from_element(p, p, false);
    for (lag, phi) in model.coeffs().iter().enumerate() {
        for i in 0..p {
            for j in 0..p {
                let v = phi[(i, j)].abs();
                let hit = match threshold {
                    EdgeThreshold::Absolute(t) => v > t,
                    EdgeThreshold::StdErrors(k) => {
                        let se = model.std_errors().ok_or_else(|| {
                            Error::Config("standard-error threshold needs a least-squares fit".into())
                        })?;
                        v != 0.0 && v > k * se[lag][(i, j)]
                    }
                };
                out[(i, j)] |= hit;
            }
        }
    }
    Ok(out)
}


#[cfg(test)]
mod props {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn model_strategy() -> impl Strategy<Value = VarModel> {
        (1usize..4, 1usize..3).prop_flat_map(|(p, order)| {
            proptest::collection::vec(proptest::collection::vec(-0.15f64..0.15, p * p), order).prop_map(move |cs| {
                let coeffs = cs.into_iter().map(|c| DMatrix::from_vec(p, p, c)).collect();
                VarModel::new(coeffs, DMatrix::identity(p, p)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn columns_have_unit_sum_of_squares(m in model_strategy(), half in 2usize..32) {
            let r = pdc(&m, &FrequencyGrid::new(2 * half).unwrap()).unwrap();
            prop_assert!(r.column_sum_error() <= 1e-10);
        }
    }
}
