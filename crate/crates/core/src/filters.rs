//! FIR band-pass design and application.
//!
//! A filter is a finite tap sequence `c_0..c_K` with response
//! `C(w) = sum_k c_k exp(-i 2 pi w k)`. It can be run one-sided (causal, which
//! keeps lead-lag structure) or two-sided (zero-phase, taps centred so an
//! in-band sinusoid is not shifted).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{Band, MultiChannelSeries};

/// How taps are aligned against the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// `y(t) = sum_j c_j x(t - j)`; output lags the input by the group delay.
    Causal,
    /// `y(t) = sum_j c_j x(t - j + K/2)`; needs symmetric taps.
    ZeroPhase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    coeffs: Vec<f64>,
    mode: FilterMode,
    band: Option<Band>,
    sample_rate_hz: f64,
}

const SYMMETRY_TOL: f64 = 1e-9;

impl FirFilter {
    pub fn new(
        coeffs: Vec<f64>,
        mode: FilterMode,
        band: Option<Band>,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("filter needs at least one tap".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite filter tap".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        let f = Self {
            coeffs,
            mode,
            band,
            sample_rate_hz,
        };
        if mode == FilterMode::ZeroPhase {
            f.check_zero_phase()?;
        }
        Ok(f)
    }

    /// Identity filter (one unit tap).
    pub fn identity(sample_rate_hz: f64) -> Self {
        Self {
            coeffs: vec![1.0],
            mode: FilterMode::ZeroPhase,
            band: None,
            sample_rate_hz,
        }
    }

    fn check_zero_phase(&self) -> Result<()> {
        let n = self.coeffs.len();
        if n % 2 == 0 {
            return Err(Error::Config(format!(
                "zero-phase filtering needs an odd number of taps, got {n}"
            )));
        }
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
        for k in 0..n / 2 {
            if (self.coeffs[k] - self.coeffs[n - 1 - k]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Config(format!(
                    "zero-phase filtering needs symmetric taps (c_{k} != c_{})",
                    n - 1 - k
                )));
            }
        }
        Ok(())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mode(&self) -> FilterMode {
        self.mode
    }

    pub fn band(&self) -> Option<&Band> {
        self.band.as_ref()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Filter order `K` (taps minus one).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Number of samples at each edge affected by zero padding.
    pub fn transient_len(&self) -> usize {
        self.order()
    }

    /// Same taps, different alignment.
    pub fn with_mode(&self, mode: FilterMode) -> Result<Self> {
        Self::new(self.coeffs.clone(), mode, self.band.clone(), self.sample_rate_hz)
    }

    /// `C(w)` at `w` in cycles per sample.
    pub fn frequency_response(&self, freq: f64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * Complex64::from_polar(1.0, -2.0 * PI * freq * k as f64))
            .sum()
    }

    /// `C(w)` with `w` given in Hertz.
    pub fn frequency_response_hz(&self, hz: f64) -> Complex64 {
        self.frequency_response(hz / self.sample_rate_hz)
    }

    /// Filters one channel. Output has the input's length.
    pub fn apply_slice(&self, x: &[f64]) -> Result<Vec<f64>> {
        let taps = self.coeffs.len();
        if x.len() <= taps {
            return Err(Error::SeriesTooShort {
                len: x.len(),
                needed: taps,
            });
        }
        let shift = match self.mode {
            FilterMode::Causal => 0isize,
            FilterMode::ZeroPhase => (taps / 2) as isize,
        };
        let n = x.len() as isize;
        let y = (0..n)
            .map(|t| {
                let mut acc = 0.0;
                for (j, &c) in self.coeffs.iter().enumerate() {
                    let s = t - j as isize + shift;
                    if s >= 0 && s < n {
                        acc += c * x[s as usize];
                    }
                }
                acc
            })
            .collect();
        Ok(y)
    }

    pub fn apply(&self, series: &MultiChannelSeries) -> Result<MultiChannelSeries> {
        let channels = series
            .channels()
            .iter()
            .map(|c| self.apply_slice(c))
            .collect::<Result<Vec<_>>>()?;
        series.with_channels(channels)
    }

    /// Parses a coefficient list: one real per line, blank lines and `#`
    /// comments ignored.
    pub fn parse_coefficients(text: &str) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: '{line}' is not a number", i + 1)))?;
            out.push(v);
        }
        if out.is_empty() {
            return Err(Error::Parse("no filter coefficients found".into()));
        }
        Ok(out)
    }

    pub fn load(path: &Path, mode: FilterMode, sample_rate_hz: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::new(Self::parse_coefficients(&text)?, mode, None, sample_rate_hz)
    }

    /// One coefficient per line, shortest round-trip representation.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.coeffs {
            let _ = writeln!(s, "{c:?}");
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed sinc band-pass of order `K` (`K + 1` taps), scaled to
/// unit gain at the band centre. Returned in zero-phase mode.
pub fn design_fir_bandpass(band: &Band, order: usize, sample_rate_hz: f64) -> Result<FirFilter> {
    if order < 2 || order % 2 != 0 {
        return Err(Error::InvalidOrder(order));
    }
    band.validate(sample_rate_hz)?;
    let f1 = band.low_hz / sample_rate_hz;
    let f2 = band.high_hz / sample_rate_hz;
    let k = order as f64;
    let mut coeffs: Vec<f64> = (0..=order)
        .map(|n| {
            let m = n as f64 - k / 2.0;
            let w = 0.54 - 0.46 * (2.0 * PI * n as f64 / k).cos();
            w * (2.0 * f2 * sinc(2.0 * f2 * m) - 2.0 * f1 * sinc(2.0 * f1 * m))
        })
        .collect();
    // exact symmetry, so zero-phase checks never trip on rounding
    for n in 0..order / 2 {
        let avg = 0.5 * (coeffs[n] + coeffs[order - n]);
        coeffs[n] = avg;
        coeffs[order - n] = avg;
    }
    let mut f = FirFilter::new(coeffs, FilterMode::ZeroPhase, Some(band.clone()), sample_rate_hz)?;
    let gain = f.frequency_response_hz(band.center_hz()).norm();
    if !(gain > 0.0) {
        return Err(Error::Degenerate(format!("band {} has zero centre gain", band.name)));
    }
    for c in &mut f.coeffs {
        *c /= gain;
    }
    Ok(f)
}

/// `4 * ceil(fs / low)` rounded up to even, capped at 512.
pub fn default_order(band: &Band, sample_rate_hz: f64) -> usize {
    const CAP: usize = 512;
    if band.low_hz <= 0.0 {
        return CAP;
    }
    let k = 4 * (sample_rate_hz / band.low_hz).ceil() as usize;
    (k + k % 2).clamp(2, CAP)
}

/// One band of a rhythm decomposition.
#[derive(Debug, Clone)]
pub struct Rhythm {
    /// Band actually used (upper edge lowered below Nyquist when clipped).
    pub band: Band,
    pub filter: FirFilter,
    pub series: MultiChannelSeries,
    pub clipped: bool,
}

/// Filters every channel into the five standard rhythms (zero-phase).
///
/// `order` overrides the per-band default. Bands whose upper edge passes
/// Nyquist are clipped to 0.98 of Nyquist and flagged; bands lying entirely
/// above Nyquist are an error.
pub fn decompose_rhythms(series: &MultiChannelSeries, order: Option<usize>) -> Result<Vec<Rhythm>> {
    let fs = series.sample_rate_hz();
    let nyq = 0.5 * fs;
    let mut out = Vec::with_capacity(5);
    for band in crate::series::standard_bands() {
        let mut b = band.clone();
        let clipped = b.high_hz > nyq;
        if clipped {
            b.high_hz = 0.98 * nyq;
            if b.low_hz >= b.high_hz {
                return Err(Error::InvalidBand {
                    name: band.name,
                    low_hz: band.low_hz,
                    high_hz: band.high_hz,
                    sample_rate_hz: fs,
                });
            }
        }
        let k = order.unwrap_or_else(|| default_order(&b, fs));
        let filter = design_fir_bandpass(&b, k, fs)?;
        let filtered = filter.apply(series)?;
        out.push(Rhythm {
            band: b,
            filter,
            series: filtered,
            clipped,
        });
    }
    Ok(out)
}
