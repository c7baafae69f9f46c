//! Band-to-band Granger causality: a VAR on the stacked one-sided
//! band-filtered oscillations `X_{p,band}(t)`.
//!
//! Only causal filters are accepted. A two-sided filter mixes future samples
//! into every output and destroys the lead-lag structure being tested.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    fit, fit_lassle_bic, granger_edges, select_order, Criterion,
    EdgeThreshold, FitMethod, VarModel,
};
use crate::error::{Error, Result};
use crate::filters::{default_order, design_fir_bandpass, FilterMode};
use crate::series::{standard_bands, Band, MultiChannelSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralVarSpec {
    /// Channel indices to include; empty means all.
    pub channels: Vec<usize>,
    pub bands: Vec<Band>,
    /// Filter order for every band; `None` uses the per-band default.
    pub filter_order: Option<usize>,
    pub mode: FilterMode,
    /// VAR order; `None` selects by BIC up to `max_order`.
    pub order: Option<usize>,
    pub max_order: usize,
    /// `None` is LASSLE with BIC-chosen penalties.
    pub method: Option<FitMethod>,
}

impl Default for SpectralVarSpec {
    fn default() -> Self {
        Self {
            channels: Vec::new(),
            bands: standard_bands(),
            filter_order: None,
            mode: FilterMode::Causal,
            order: None,
            max_order: 10,
            method: None,
        }
    }
}

/// One nonzero cross coefficient of the stacked model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEdge {
    pub from_channel: String,
    pub from_band: String,
    pub to_channel: String,
    pub to_band: String,
    pub lag: usize,
    pub coefficient: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralVarResult {
    pub model: VarModel,
    /// `(channel label, band name)` for each stacked component.
    pub components: Vec<(String, String)>,
    pub order: usize,
    /// Samples dropped from the start as filter transient.
    pub trimmed: usize,
    pub edges: Vec<BandEdge>,
}

impl SpectralVarResult {
    /// True when some lag links `(from_channel, from_band)` to `(to_channel, to_band)`.
    pub fn has_edge(&self, from_channel: &str, from_band: &str, to_channel: &str, to_band: &str) -> bool {
        self.edges.iter().any(|e| {
            e.from_channel == from_channel
                && e.from_band == from_band
                && e.to_channel == to_channel
                && e.to_band == to_band
        })
    }

    /// CSV: `from_channel,from_band,to_channel,to_band,lag,coefficient`.
    pub fn write_edges_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.edges {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn spectral_var(series: &MultiChannelSeries, spec: &SpectralVarSpec) -> Result<SpectralVarResult> {
    if spec.mode != FilterMode::Causal {
        return Err(Error::Config(
            "spectral-VAR causality needs one-sided (causal) filters".into(),
        ));
    }
    if spec.bands.is_empty() {
        return Err(Error::Config("at least one band is required".into()));
    }
    let fs = series.sample_rate_hz();
    let channels: Vec<usize> = if spec.channels.is_empty() {
        (0..series.n_channels()).collect()
    } else {
        spec.channels.clone()
    };
    let mut filtered = Vec::new();
    let mut components = Vec::new();
    let mut trimmed = 0;
    for band in &spec.bands {
        let k = spec.filter_order.unwrap_or_else(|| default_order(band, fs));
        let f = design_fir_bandpass(band, k, fs)?.with_mode(FilterMode::Causal)?;
        trimmed = trimmed.max(f.transient_len());
        for &c in &channels {
            series.check_channel(c)?;
            filtered.push(f.apply_slice(series.channel(c))?);
            components.push((series.labels()[c].clone(), band.name.clone()));
        }
    }
    // keep channel-major order: X1:delta, X1:theta, ..., X2:delta, ...
    let nb = spec.bands.len();
    let nc = channels.len();
    let mut stacked = Vec::with_capacity(nb * nc);
    let mut labels = Vec::with_capacity(nb * nc);
    let mut ordered = Vec::with_capacity(nb * nc);
    for ci in 0..nc {
        for bi in 0..nb {
            let idx = bi * nc + ci;
            stacked.push(filtered[idx][trimmed..].to_vec());
            labels.push(format!("{}:{}", components[idx].0, components[idx].1));
            ordered.push(components[idx].clone());
        }
    }
    let x = MultiChannelSeries::new(stacked, fs, labels)?;
    let dim = x.n_channels();
    let order = match spec.order {
        Some(l) => l,
        None => select_order(&x, spec.max_order, Criterion::Bic)?,
    };
    if order == 0 {
        return Err(Error::Config("spectral-VAR order must be at least 1".into()));
    }
    if x.len() <= 5 * dim * order {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            needed: 5 * dim * order,
        });
    }
    let (model, threshold) = match spec.method {
        None => (
            fit_lassle_bic(&x, order)?.0,
            EdgeThreshold::Absolute(0.0),
        ),
        Some(FitMethod::Ols) => (fit(&x, order, FitMethod::Ols)?, EdgeThreshold::StdErrors(2.0)),
        Some(m) => (fit(&x, order, m)?, EdgeThreshold::Absolute(0.0)),
    };
    let support = granger_edges(&model, threshold)?;
    let mut edges = Vec::new();
    for to in 0..dim {
        for from in 0..dim {
            if to == from || !support[(to, from)] {
                continue;
            }
            for (lag, phi) in model.coeffs().iter().enumerate() {
                let v = phi[(to, from)];
                let keep = match threshold {
                    EdgeThreshold::Absolute(t) => v.abs() > t,
                    EdgeThreshold::StdErrors(k) => {
                        v.abs() > k * model.std_errors().map_or(0.0, |s| s[lag][(to, from)])
                    }
                };
                if keep {
                    edges.push(BandEdge {
                        from_channel: ordered[from].0.clone(),
                        from_band: ordered[from].1.clone(),
                        to_channel: ordered[to].0.clone(),
                        to_band: ordered[to].1.clone(),
                        lag: lag + 1,
                        coefficient: v,
                    });
                }
            }
        }
    }
    Ok(SpectralVarResult {
        model,
        components: ordered,
        order,
        trimmed,
        edges,
    })
}
