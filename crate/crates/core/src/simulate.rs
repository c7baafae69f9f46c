//! Seeded generators: unit-variance AR(2) latent oscillators, linear lagged
//! mixtures of them, and the registered example systems with ground truth.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MultiChannelSeries;
use crate::spectrum::Ar2Params;
use crate::var::{simulate_var, VarModel};

/// Sample rate shared by every registered example.
pub const EXAMPLE_SAMPLE_RATE_HZ: f64 = 128.0;
/// Root magnitude of the latent oscillators unless overridden.
pub const DEFAULT_ROOT_MAGNITUDE: f64 = 1.05;
const BURN_IN: usize = 1000;
const NOISE_STREAM: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SourceSpec {
    Ar2(Ar2Params),
    White,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Independent latent sources, each scaled to unit stationary variance.
/// Source `k` draws from its own stream of the seeded generator.
pub fn gen_sources(sources: &[SourceSpec], len: usize, seed: u64, sample_rate_hz: f64) -> Result<MultiChannelSeries> {
    if sources.is_empty() {
        return Err(Error::Config("at least one source is required".into()));
    }
    let channels = sources
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            match s {
                SourceSpec::White => (0..len).map(|_| gaussian(&mut rng)).collect(),
                SourceSpec::Ar2(a) => {
                    let sd_w = a.noise_var.sqrt();
                    let scale = a.stationary_variance().sqrt();
                    let (mut z1, mut z2) = (0.0, 0.0);
                    let mut out = Vec::with_capacity(len);
                    for t in 0..BURN_IN + len {
                        let z = a.phi1 * z1 + a.phi2 * z2 + sd_w * gaussian(&mut rng);
                        z2 = z1;
                        z1 = z;
                        if t >= BURN_IN {
                            out.push(z / scale);
                        }
                    }
                    out
                }
            }
        })
        .collect();
    let labels = (1..=sources.len()).map(|k| format!("Z{k}")).collect();
    MultiChannelSeries::new(channels, sample_rate_hz, labels)
}

/// `X_p(t) = sum_k c_pk Z_k(t - h_pk) + e_p(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    /// `P x K` weights.
    pub mixing: DMatrix<f64>,
    /// `P x K` non-negative delays in samples.
    pub lags: DMatrix<usize>,
    /// Observation-noise standard deviation per output channel.
    pub noise_std: Vec<f64>,
}

impl MixtureSpec {
    pub fn instantaneous(mixing: DMatrix<f64>, noise_std: Vec<f64>) -> Self {
        let lags = DMatrix::zeros(mixing.nrows(), mixing.ncols());
        Self {
            mixing,
            lags,
            noise_std,
        }
    }

    pub fn max_lag(&self) -> usize {
        self.lags.iter().copied().max().unwrap_or(0)
    }
}

/// Mixes `sources` (length `T`) into `P` channels of length `T - max_lag`.
/// Output sample `t` sits at source time `t + max_lag`, so every delayed copy
/// is defined.
pub fn mix(sources: &MultiChannelSeries, spec: &MixtureSpec, seed: u64) -> Result<MultiChannelSeries> {
    let (p, k) = (spec.mixing.nrows(), spec.mixing.ncols());
    if k != sources.n_channels() || spec.lags.shape() != (p, k) || spec.noise_std.len() != p {
        return Err(Error::Config(format!(
            "mixture dimensions disagree: mixing {p}x{k}, lags {:?}, {} noise levels, {} sources",
            spec.lags.shape(),
            spec.noise_std.len(),
            sources.n_channels()
        )));
    }
    let h = spec.max_lag();
    if h + 2 > sources.len() {
        return Err(Error::Config(format!(
            "lag {h} leaves no samples from {} source samples",
            sources.len()
        )));
    }
    let len = sources.len() - h;
    let channels = (0..p)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(NOISE_STREAM + i as u64);
            (0..len)
                .map(|t| {
                    let mut v = 0.0;
                    for j in 0..k {
                        let c = spec.mixing[(i, j)];
                        if c != 0.0 {
                            v += c * sources.get(t + h - spec.lags[(i, j)], j);
                        }
                    }
                    v + spec.noise_std[i] * gaussian(&mut rng)
                })
                .collect()
        })
        .collect();
    MultiChannelSeries::from_channels(channels, sources.sample_rate_hz())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleName {
    Contemporaneous,
    Lagged,
    GammaNet,
    GammaAlphaNet,
    LeadLag,
    PdcNet,
    Pac,
    SpcaMix,
    Chirp,
}

impl ExampleName {
    pub const ALL: [ExampleName; 9] = [
        ExampleName::Contemporaneous,
        ExampleName::Lagged,
        ExampleName::GammaNet,
        ExampleName::GammaAlphaNet,
        ExampleName::LeadLag,
        ExampleName::PdcNet,
        ExampleName::Pac,
        ExampleName::SpcaMix,
        ExampleName::Chirp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExampleName::Contemporaneous => "contemporaneous",
            ExampleName::Lagged => "lagged",
            ExampleName::GammaNet => "gamma_net",
            ExampleName::GammaAlphaNet => "gamma_alpha_net",
            ExampleName::LeadLag => "lead_lag",
            ExampleName::PdcNet => "pdc_net",
            ExampleName::Pac => "pac",
            ExampleName::SpcaMix => "spca_mix",
            ExampleName::Chirp => "chirp",
        }
    }
}

impl fmt::Display for ExampleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownExample(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Coherence,
    PartialCoherence,
    Directed,
    PhaseAmplitude,
}

/// A true dependence, channels 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEdge {
    pub kind: EdgeKind,
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_band: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<isize>,
}

impl TruthEdge {
    fn new(kind: EdgeKind, from: usize, to: usize, band: &str) -> Self {
        Self {
            kind,
            from,
            to,
            band: (!band.is_empty()).then(|| band.to_string()),
            to_band: None,
            lag: None,
        }
    }

    fn with_lag(mut self, lag: isize) -> Self {
        self.lag = Some(lag);
        self
    }

    fn with_to_band(mut self, band: &str) -> Self {
        self.to_band = Some(band.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub name: String,
    pub peak_hz: f64,
    pub root_magnitude: f64,
}

/// Ground truth for a generated example; pure data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub example: ExampleName,
    pub sample_rate_hz: f64,
    pub seed: u64,
    pub len: usize,
    pub sources: Vec<SourceInfo>,
    /// Row per observed channel, column per source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<Vec<usize>>>,
    pub noise_std: Vec<f64>,
    /// `var_coeffs[l][p][q]` for VAR-defined systems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_coeffs: Option<Vec<Vec<Vec<f64>>>>,
    pub edges: Vec<TruthEdge>,
    pub notes: String,
}

/// Optional changes to an example's defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub noise_std: Option<Vec<f64>>,
    pub root_magnitude: Option<f64>,
}

pub fn example(name: ExampleName, len: usize, seed: u64) -> Result<(MultiChannelSeries, Truth)> {
    example_with(name, len, seed, &Overrides::default())
}

fn source(name: &str, hz: f64, m: f64) -> Result<(SourceSpec, SourceInfo)> {
    Ok((
        SourceSpec::Ar2(Ar2Params::from_hz(m, hz, EXAMPLE_SAMPLE_RATE_HZ)?),
        SourceInfo {
            name: name.to_string(),
            peak_hz: hz,
            root_magnitude: m,
        },
    ))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn noise_levels(o: &Overrides, default: Vec<f64>) -> Result<Vec<f64>> {
    match &o.noise_std {
        None => Ok(default),
        Some(v) if v.len() == 1 => Ok(vec![v[0]; default.len()]),
        Some(v) if v.len() == default.len() => Ok(v.clone()),
        Some(v) => Err(Error::Config(format!(
            "{} noise levels given for {} channels",
            v.len(),
            default.len()
        ))),
    }
}

/// Linear-mixture example: generate sources, mix, and record the truth.
#[allow(clippy::too_many_arguments)]
fn linear(
    name: ExampleName,
    len: usize,
    seed: u64,
    o: &Overrides,
    srcs: &[(&str, f64)],
    mixing: DMatrix<f64>,
    lags: DMatrix<usize>,
    noise: Vec<f64>,
    edges: Vec<TruthEdge>,
    notes: &str,
) -> Result<(MultiChannelSeries, Truth)> {
    let m = o.root_magnitude.unwrap_or(DEFAULT_ROOT_MAGNITUDE);
    let built = srcs
        .iter()
        .map(|(n, hz)| source(n, *hz, m))
        .collect::<Result<Vec<_>>>()?;
    let specs: Vec<SourceSpec> = built.iter().map(|b| b.0).collect();
    let spec = MixtureSpec {
        mixing,
        lags,
        noise_std: noise_levels(o, noise)?,
    };
    let z = gen_sources(&specs, len + spec.max_lag(), seed, EXAMPLE_SAMPLE_RATE_HZ)?;
    let x = mix(&z, &spec, seed)?;
    let truth = Truth {
        example: name,
        sample_rate_hz: EXAMPLE_SAMPLE_RATE_HZ,
        seed,
        len,
        sources: built.into_iter().map(|b| b.1).collect(),
        mixing: Some(rows(&spec.mixing)),
        lags: Some(
            (0..spec.lags.nrows())
                .map(|i| spec.lags.row(i).iter().copied().collect())
                .collect(),
        ),
        noise_std: spec.noise_std,
        var_coeffs: None,
        edges,
        notes: notes.to_string(),
    };
    Ok((x, truth))
}

/// The `pdc_net` VAR(2): two oscillators (delta, gamma) drive channel 2,
/// which drives channel 1, itself a beta oscillator.
pub fn pdc_net_model(root_magnitude: f64) -> Result<VarModel> {
    let fs = EXAMPLE_SAMPLE_RATE_HZ;
    let d = Ar2Params::from_hz(root_magnitude, 2.0, fs)?;
    let b = Ar2Params::from_hz(root_magnitude, 20.0, fs)?;
    let g = Ar2Params::from_hz(root_magnitude, 40.0, fs)?;
    #[rustfmt::skip]
    let lag1 = DMatrix::from_row_slice(4, 4, &[
        b.phi1, 0.5, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, d.phi1, 0.0,
        0.0, 0.0, 0.0, g.phi1,
    ]);
    #[rustfmt::skip]
    let lag2 = DMatrix::from_row_slice(4, 4, &[
        b.phi2, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, d.phi2, 0.0,
        0.0, 0.0, 0.0, g.phi2,
    ]);
    VarModel::new(vec![lag1, lag2], DMatrix::identity(4, 4))
}

pub fn example_with(name: ExampleName, len: usize, seed: u64, o: &Overrides) -> Result<(MultiChannelSeries, Truth)> {
    if len < 16 {
        return Err(Error::Config(format!("example length {len} is too short")));
    }
    use EdgeKind::*;
    let z2 = |r: usize, c: usize| DMatrix::<usize>::zeros(r, c);
    match name {
        ExampleName::Contemporaneous => linear(
            name,
            len,
            seed,
            o,
            &[("alpha", 10.0), ("gamma", 40.0)],
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            z2(2, 2),
            vec![0.5, 0.5],
            vec![TruthEdge::new(Coherence, 1, 2, "gamma")],
            "X1 = Z_alpha + Z_gamma + e1, X2 = Z_gamma + e2; only the gamma band is shared",
        ),
        ExampleName::Lagged => linear(
            name,
            len,
            seed,
            o,
            &[("alpha", 10.0), ("gamma", 40.0)],
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[0, 10, 0, 0]),
            vec![0.5, 0.5],
            vec![TruthEdge::new(Coherence, 1, 2, "gamma").with_lag(10)],
            "X1 = Z_alpha(t) + Z_gamma(t-10) + e1, X2 = Z_gamma(t) + e2",
        ),
        ExampleName::GammaNet => linear(
            name,
            len,
            seed,
            o,
            &[("delta", 2.0), ("alpha", 10.0), ("gamma", 40.0)],
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
            z2(3, 3),
            vec![0.5, 0.5, 0.0],
            vec![
                TruthEdge::new(Coherence, 1, 2, "gamma"),
                TruthEdge::new(Coherence, 1, 3, "gamma"),
                TruthEdge::new(Coherence, 2, 3, "gamma"),
                TruthEdge::new(PartialCoherence, 1, 3, "gamma"),
                TruthEdge::new(PartialCoherence, 2, 3, "gamma"),
            ],
            "X1 = Z_alpha + Z_gamma + e1, X2 = Z_delta + Z_gamma + e2, X3 = Z_gamma exactly",
        ),
        ExampleName::GammaAlphaNet => linear(
            name,
            len,
            seed,
            o,
            &[("delta", 2.0), ("alpha", 10.0), ("gamma", 40.0)],
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0]),
            z2(3, 3),
            vec![0.5, 0.5, 0.0],
            vec![
                TruthEdge::new(Coherence, 1, 2, "alpha"),
                TruthEdge::new(PartialCoherence, 1, 2, "alpha"),
                TruthEdge::new(Coherence, 1, 2, "gamma"),
                TruthEdge::new(Coherence, 1, 3, "gamma"),
                TruthEdge::new(Coherence, 2, 3, "gamma"),
                TruthEdge::new(PartialCoherence, 1, 3, "gamma"),
                TruthEdge::new(PartialCoherence, 2, 3, "gamma"),
            ],
            "X1 = Z_alpha + Z_gamma + e1, X2 = Z_delta + Z_alpha + Z_gamma + e2, X3 = Z_gamma exactly",
        ),
        ExampleName::LeadLag => linear(
            name,
            len,
            seed,
            o,
            &[("delta", 2.0), ("beta", 15.0), ("gamma", 30.0)],
            DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
            DMatrix::from_row_slice(2, 3, &[0, 0, 0, 10, 10, 10]),
            vec![0.5, 0.5],
            vec![TruthEdge::new(Directed, 1, 2, "delta").with_lag(10).with_to_band("delta")],
            "X1 = Z_delta(t) + e1/2, X2 = Z_delta(t-10) + Z_beta(t-10) + Z_gamma(t-10) + e2/2",
        ),
        ExampleName::PdcNet => {
            let m = o.root_magnitude.unwrap_or(1.049787);
            let model = pdc_net_model(m)?;
            let x = simulate_var(&model, len, seed, Some(BURN_IN))?;
            let x = MultiChannelSeries::new(x.into_channels(), EXAMPLE_SAMPLE_RATE_HZ, crate::series::default_labels(4))?;
            let info = |n: &str, hz: f64| SourceInfo {
                name: n.into(),
                peak_hz: hz,
                root_magnitude: m,
            };
            let truth = Truth {
                example: name,
                sample_rate_hz: EXAMPLE_SAMPLE_RATE_HZ,
                seed,
                len,
                sources: vec![info("beta", 20.0), info("delta", 2.0), info("gamma", 40.0)],
                mixing: None,
                lags: None,
                noise_std: vec![1.0; 4],
                var_coeffs: Some(model.coeffs().iter().map(rows).collect()),
                edges: vec![
                    TruthEdge::new(Directed, 3, 2, "").with_lag(1),
                    TruthEdge::new(Directed, 4, 2, "").with_lag(2),
                    TruthEdge::new(Directed, 2, 1, "").with_lag(1),
                ],
                notes: "sparse VAR(2) with identity innovation covariance".into(),
            };
            Ok((x, truth))
        }
        ExampleName::Pac => {
            let m = o.root_magnitude.unwrap_or(DEFAULT_ROOT_MAGNITUDE);
            let (th, th_info) = source("theta", 6.0, m)?;
            let (ga, ga_info) = source("gamma", 40.0, m)?;
            let z = gen_sources(&[th, ga], len, seed, EXAMPLE_SAMPLE_RATE_HZ)?;
            let noise = noise_levels(o, vec![0.1f64.sqrt(); 2])?;
            let e = gen_sources(&[SourceSpec::White, SourceSpec::White], len, seed ^ 0x5eed_0f_0ac, EXAMPLE_SAMPLE_RATE_HZ)?;
            let (zt, zg) = (z.channel(0), z.channel(1));
            let x1 = (0..len)
                .map(|t| (zg[t] + 1.0) * zt[t] + 2.0 * zg[t] + noise[0] * e.get(t, 0))
                .collect();
            let x2 = (0..len)
                .map(|t| 4.0 * zt[t] + zt[t] * zg[t] + noise[1] * e.get(t, 1))
                .collect();
            let x = MultiChannelSeries::from_channels(vec![x1, x2], EXAMPLE_SAMPLE_RATE_HZ)?;
            let truth = Truth {
                example: name,
                sample_rate_hz: EXAMPLE_SAMPLE_RATE_HZ,
                seed,
                len,
                sources: vec![th_info, ga_info],
                mixing: None,
                lags: None,
                noise_std: noise,
                var_coeffs: None,
                edges: vec![
                    TruthEdge::new(PhaseAmplitude, 1, 1, "theta").with_to_band("gamma"),
                    TruthEdge::new(PhaseAmplitude, 2, 2, "theta").with_to_band("gamma"),
                ],
                notes: "X1 = (Z_gamma + 1) Z_theta + 2 Z_gamma + e1, X2 = 4 Z_theta + Z_theta Z_gamma + e2, var(e) = 0.1".into(),
            };
            Ok((x, truth))
        }
        ExampleName::SpcaMix => {
            #[rustfmt::skip]
            let a = DMatrix::from_row_slice(5, 3, &[
                1.0, 0.0, 1.0,
                0.0, 0.0, 1.0,
                1.0, 0.0, 1.0,
                0.0, 1.0, 0.0,
                1.0, 1.0, 0.0,
            ]);
            linear(
                name,
                len,
                seed,
                o,
                &[("delta", 2.0), ("alpha", 10.0), ("gamma", 40.0)],
                a,
                z2(5, 3),
                vec![2.0; 5],
                vec![],
                "five channels mixing delta, alpha and gamma oscillators with binary weights",
            )
        }
        ExampleName::Chirp => {
            let (w0, dw) = (2.0, 0.4);
            let fs = EXAMPLE_SAMPLE_RATE_HZ;
            let noise = noise_levels(o, vec![1.0])?;
            let e = gen_sources(&[SourceSpec::White], len, seed, fs)?;
            let x = (0..len)
                .map(|t| {
                    let s = t as f64 / fs;
                    2.0 * (2.0 * std::f64::consts::PI * (w0 + dw * s) * s).sin() + noise[0] * e.get(t, 0)
                })
                .collect();
            let truth = Truth {
                example: name,
                sample_rate_hz: fs,
                seed,
                len,
                sources: vec![],
                mixing: None,
                lags: None,
                noise_std: noise,
                var_coeffs: None,
                edges: vec![],
                notes: format!("x(t) = 2 sin(2 pi ({w0} + {dw} t) t) + e(t), t in seconds"),
            };
            Ok((MultiChannelSeries::from_channels(vec![x], fs)?, truth))
        }
    }
}
