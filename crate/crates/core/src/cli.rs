//! Command-line front end. Every subcommand reads a CSV, calls one library
//! routine and writes what it returns; no numerics live here.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::coherence::{
    band_coherence, band_edges, coherence_matrix, partial_coherence, tv_coherence, tv_partial_coherence,
    write_edges_csv, CoherenceResult, NetworkEdge,
};
use crate::dualfreq::{evolutionary_band_dualfreq, evolutionary_dualfreq, DualFreqResult, DualFreqSmoothing};
use crate::error::{Error, Result};
use crate::filters::{default_order, design_fir_bandpass, FilterMode, FirFilter};
use crate::io::{fmt_f64, read_series_file, write_json, write_series};
use crate::pac::pac_scan;
use crate::series::{demean, standard_bands, Band, MultiChannelSeries};
use crate::simulate::{example, ExampleName};
use crate::spca::{pca_fit, spca_encode, spca_fit};
use crate::spectrum::{
    periodogram, shrink_spectral_estimate, smoothed_spectrum, var_spectrum, CrossSpectralMatrix, SmoothingKernel,
};
use crate::var::{
    fit, fit_ols, granger_edges, pdc, select_order, spectral_var, tv_pdc, Criterion, EdgeThreshold, FitMethod,
    PdcResult, SpectralVarSpec,
};

#[derive(Debug, Parser)]
#[command(
    name = "specdep",
    version,
    about = "Spectral dependence analysis of multichannel time series",
    after_help = "Flag grammar:\n  --band NAME | LOW:HIGH   named rhythm (delta, theta, alpha, beta, gamma) or edges in Hz\n  --window N:STEP          window length and step in samples\n  --sample-rate HZ         required for every CSV input; never inferred\n  --seed S                 RNG seed; identical seed and flags give identical output\n\nExit codes: 1 malformed input, 2 invalid configuration, 3 numerical failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a built-in example dataset plus a `.truth.json` sidecar.
    Simulate(SimulateArgs),
    /// Band-pass filter every channel.
    Filter(FilterArgs),
    /// Smoothed cross-spectral matrix.
    Spectrum(SpectrumArgs),
    /// Coherence on the frequency grid, or band-level edges.
    Coherence(CoherenceArgs),
    /// Partial coherence on the frequency grid, or band-level edges.
    Pcoh(CoherenceArgs),
    /// Time-varying (partial) coherence over sliding windows.
    Tvcoh(TvcohArgs),
    /// Evolutionary dual-frequency coherence.
    Dualfreq(DualfreqArgs),
    /// Phase-amplitude coupling modulation index table.
    Pac(PacArgs),
    /// Fit a VAR model.
    VarFit(VarFitArgs),
    /// Partial directed coherence and Granger edges of a fitted VAR.
    Pdc(PdcArgs),
    /// Sliding-window PDC.
    Tvpdc(TvpdcArgs),
    /// Band-level causality from a VAR on filtered components.
    Scau(ScauArgs),
    /// Spectral (or classical) principal components.
    Spca(SpcaArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV: header row of channel labels, one row per sample.
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    /// Sampling rate in Hz.
    #[arg(long, value_name = "HZ")]
    pub sample_rate: f64,
    /// Comma-separated 1-based channel subset.
    #[arg(long, value_delimiter = ',')]
    pub channels: Vec<usize>,
    /// Keep the channel means.
    #[arg(long)]
    pub no_demean: bool,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; `.json` selects JSON where both formats exist. Defaults to stdout.
    #[arg(short = 'o', long = "out", value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write tidy long-format CSV for external plotting.
    #[arg(long, value_name = "PATH")]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    /// Kernel half-width in frequency bins; default ceil(T^0.6 / 8).
    #[arg(long)]
    pub bandwidth: Option<usize>,
    #[arg(long, value_enum, default_value_t = KernelArg::Daniell)]
    pub kernel: KernelArg,
    /// Shrink toward the spectrum of a least-squares VAR of this order.
    #[arg(long, value_name = "L")]
    pub shrink_order: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Daniell,
    Triangular,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Causal,
    ZeroPhase,
}

impl From<ModeArg> for FilterMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Causal => FilterMode::Causal,
            ModeArg::ZeroPhase => FilterMode::ZeroPhase,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Ols,
    Lasso,
    Lassle,
    LassleBic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CriterionArg {
    Aic,
    Bic,
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Ols)]
    pub method: MethodArg,
    /// Penalty for lasso / lassle.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One of: contemporaneous, lagged, gamma_net, gamma_alpha_net, lead_lag, pdc_net, pac, spca_mix, chirp.
    #[arg(long)]
    pub example: String,
    /// Series length in samples.
    #[arg(long = "T", value_name = "T")]
    pub len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; the truth sidecar goes next to it.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Pass band for a designed filter.
    #[arg(long, value_parser = parse_band)]
    pub band: Option<Band>,
    /// Taps file (whitespace separated) used instead of a designed filter.
    #[arg(long, value_name = "PATH", conflicts_with = "band")]
    pub coeffs: Option<PathBuf>,
    /// Filter order K (K + 1 taps); default depends on the band.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::ZeroPhase)]
    pub mode: ModeArg,
    /// Save the taps used.
    #[arg(long, value_name = "PATH")]
    pub save_taps: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub smooth: SmoothArgs,
    /// Raw periodogram, no smoothing.
    #[arg(long, conflicts_with_all = ["bandwidth", "shrink_order"])]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct CoherenceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub smooth: SmoothArgs,
    /// Report band-averaged edges for these bands instead of the full grid.
    #[arg(long, value_parser = parse_band)]
    pub band: Vec<Band>,
    /// With --band: squared lagged correlation of band-filtered channels.
    #[arg(long, requires = "band")]
    pub filtered: bool,
    /// Largest lag searched by --filtered.
    #[arg(long, requires = "filtered")]
    pub max_lag: Option<usize>,
    /// Filter order used by --filtered.
    #[arg(long, requires = "filtered")]
    pub order: Option<usize>,
    /// Largest condition number accepted before inverting (partial coherence).
    #[arg(long)]
    pub cap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TvcohArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_parser = parse_window)]
    pub window: (usize, usize),
    /// Kernel half-width within each window; default ceil(N^0.6 / 8).
    #[arg(long)]
    pub bandwidth: Option<usize>,
    #[arg(long, value_enum, default_value_t = KernelArg::Daniell)]
    pub kernel: KernelArg,
    #[arg(long)]
    pub partial: bool,
    #[arg(long)]
    pub cap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DualfreqArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_parser = parse_window)]
    pub window: (usize, usize),
    /// Channel:Hz points, e.g. `1:6,1:40`; every pair of points is reported.
    #[arg(long, value_delimiter = ',', value_parser = parse_point, conflicts_with_all = ["band1", "band2"])]
    pub points: Vec<(usize, f64)>,
    /// Band-level mode: first (channel, band).
    #[arg(long, requires_all = ["band2", "p", "q"], value_parser = parse_band)]
    pub band1: Option<Band>,
    #[arg(long, requires = "band1", value_parser = parse_band)]
    pub band2: Option<Band>,
    /// 1-based channel for --band1.
    #[arg(long)]
    pub p: Option<usize>,
    /// 1-based channel for --band2.
    #[arg(long)]
    pub q: Option<usize>,
    /// Time smoothing half-width in windows.
    #[arg(long, default_value_t = 0)]
    pub smooth: usize,
    /// Time smoothing step in samples; default the window step.
    #[arg(long)]
    pub smooth_step: Option<usize>,
    /// Daniell half-width across frequency.
    #[arg(long)]
    pub freq_smooth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PacArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Phase bands (repeat or comma-separate).
    #[arg(long, value_delimiter = ',', value_parser = parse_band, required = true)]
    pub low: Vec<Band>,
    /// Amplitude bands.
    #[arg(long, value_delimiter = ',', value_parser = parse_band, required = true)]
    pub high: Vec<Band>,
    #[arg(long, default_value_t = crate::pac::DEFAULT_PHASE_BINS)]
    pub bins: usize,
    /// 1-based phase:amplitude channel pairs; default each channel with itself.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Args)]
pub struct VarFitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// VAR order; omit to select up to --max-order.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub max_order: usize,
    #[arg(long, value_enum, default_value_t = CriterionArg::Bic)]
    pub criterion: CriterionArg,
}

#[derive(Debug, Args)]
pub struct PdcArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub order: usize,
    /// Frequency grid size.
    #[arg(long, default_value_t = 128)]
    pub n_freq: usize,
    /// Coefficients at or below this magnitude are not edges.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct TvpdcArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub order: usize,
    #[arg(long, value_parser = parse_window)]
    pub window: (usize, usize),
    #[arg(long, default_value_t = 128)]
    pub n_freq: usize,
}

#[derive(Debug, Args)]
pub struct ScauArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Bands to stack; default the five standard rhythms.
    #[arg(long, value_delimiter = ',', value_parser = parse_band)]
    pub bands: Vec<Band>,
    /// Filter order for every band; default per band.
    #[arg(long)]
    pub filter_order: Option<usize>,
    /// VAR order; omit to select by BIC up to --max-order.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub max_order: usize,
    /// Fitting method; default LASSLE with BIC-chosen penalties.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SpcaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub smooth: SmoothArgs,
    /// Number of components.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Filter half-length; default n / 8.
    #[arg(long)]
    pub lag_truncation: Option<usize>,
    /// Classical PCA on the covariance matrix instead.
    #[arg(long)]
    pub pca: bool,
    /// Write the encoded components as CSV.
    #[arg(long, value_name = "PATH")]
    pub encode: Option<PathBuf>,
}

/// `NAME` for a standard rhythm or `LOW:HIGH` in Hz.
pub fn parse_band(s: &str) -> std::result::Result<Band, String> {
    if let Some((lo, hi)) = s.split_once(':') {
        let lo: f64 = lo.trim().parse().map_err(|_| format!("bad band low edge '{lo}'"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| format!("bad band high edge '{hi}'"))?;
        Band::new(format!("{lo}-{hi}Hz"), lo, hi).map_err(|e| e.to_string())
    } else {
        Band::by_name(s.trim()).ok_or_else(|| format!("unknown band '{s}' (use delta..gamma or LOW:HIGH)"))
    }
}

/// `N:STEP`.
pub fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (n, step) = s.split_once(':').ok_or_else(|| format!("window '{s}' is not N:STEP"))?;
    let n = n.trim().parse().map_err(|_| format!("bad window length '{n}'"))?;
    let step = step.trim().parse().map_err(|_| format!("bad window step '{step}'"))?;
    Ok((n, step))
}

fn parse_point(s: &str) -> std::result::Result<(usize, f64), String> {
    let (c, hz) = s.split_once(':').ok_or_else(|| format!("point '{s}' is not CHANNEL:HZ"))?;
    Ok((
        c.trim().parse().map_err(|_| format!("bad channel '{c}'"))?,
        hz.trim().parse().map_err(|_| format!("bad frequency '{hz}'"))?,
    ))
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("pair '{s}' is not A:B"))?;
    Ok((
        a.trim().parse().map_err(|_| format!("bad channel '{a}'"))?,
        b.trim().parse().map_err(|_| format!("bad channel '{b}'"))?,
    ))
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Filter(a) => filter(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Coherence(a) => coherence(a, false),
        Command::Pcoh(a) => coherence(a, true),
        Command::Tvcoh(a) => tvcoh(a),
        Command::Dualfreq(a) => dualfreq(a),
        Command::Pac(a) => pac(a),
        Command::VarFit(a) => var_fit(a),
        Command::Pdc(a) => pdc_cmd(a),
        Command::Tvpdc(a) => tvpdc(a),
        Command::Scau(a) => scau(a),
        Command::Spca(a) => spca(a),
    }
}

impl InputArgs {
    /// Reads, selects channels and demeans.
    pub fn load(&self) -> Result<MultiChannelSeries> {
        let mut x = read_series_file(&self.input, self.sample_rate)?;
        if !self.channels.is_empty() {
            let idx = to_zero_based(&self.channels, x.n_channels())?;
            x = x.select(&idx)?;
        }
        Ok(if self.no_demean { x } else { demean(&x) })
    }
}

fn to_zero_based(channels: &[usize], n: usize) -> Result<Vec<usize>> {
    channels
        .iter()
        .map(|&c| {
            if c == 0 || c > n {
                Err(Error::Config(format!("channel {c} out of range 1..={n}")))
            } else {
                Ok(c - 1)
            }
        })
        .collect()
}

impl OutputArgs {
    fn json(&self) -> bool {
        self.out
            .as_deref()
            .and_then(Path::extension)
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    }
}

fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    emit(path, |w| write_json(value, w))
}

/// Tidy CSV: one header, then rows of already formatted fields.
fn emit_plot(path: Option<&Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn kernel(arg: KernelArg, bandwidth: Option<usize>, len: usize) -> SmoothingKernel {
    let b = bandwidth.unwrap_or_else(|| crate::spectrum::default_bandwidth(len));
    match arg {
        KernelArg::Daniell => SmoothingKernel::daniell(b),
        KernelArg::Triangular => SmoothingKernel::triangular(b),
    }
}

/// Smoothed spectrum, optionally shrunk toward a VAR spectrum.
pub fn estimate_spectrum(x: &MultiChannelSeries, s: &SmoothArgs) -> Result<CrossSpectralMatrix> {
    let k = kernel(s.kernel, s.bandwidth, x.len());
    let f = smoothed_spectrum(x, &k)?;
    match s.shrink_order {
        None => Ok(f),
        Some(l) => {
            let h = var_spectrum(&fit_ols(x, l)?, &f.grid())?;
            Ok(shrink_spectral_estimate(&f, &h, &k)?.spectrum)
        }
    }
}

fn fit_method(m: MethodArg, lambda: Option<f64>) -> Result<FitMethod> {
    let need = |name: &str| {
        lambda.ok_or_else(|| Error::Config(format!("--method {name} needs --lambda")))
    };
    Ok(match m {
        MethodArg::Ols => FitMethod::Ols,
        MethodArg::Lasso => FitMethod::Lasso { lambda: need("lasso")? },
        MethodArg::Lassle => FitMethod::Lassle { lambda: need("lassle")? },
        MethodArg::LassleBic => FitMethod::LassleBic,
    })
}

/// Path of the ground-truth sidecar: `net.csv` -> `net.truth.json`.
pub fn truth_path(csv: &Path) -> PathBuf {
    csv.with_extension("truth.json")
}

fn series_plot_rows(x: &MultiChannelSeries) -> Vec<Vec<String>> {
    let fs = x.sample_rate_hz();
    let mut rows = Vec::with_capacity(x.len() * x.n_channels());
    for (p, label) in x.labels().iter().enumerate() {
        for (t, v) in x.channel(p).iter().enumerate() {
            rows.push(vec![fmt_f64(t as f64 / fs), label.clone(), fmt_f64(*v)]);
        }
    }
    rows
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let name: ExampleName = a.example.parse()?;
    let (x, truth) = example(name, a.len, a.seed)?;
    emit(Some(&a.out), |w| write_series(&x, w))?;
    crate::io::write_json_file(&truth, &truth_path(&a.out))?;
    emit_plot(a.plot_data.as_deref(), &["time_s", "channel", "value"], series_plot_rows(&x))
}

fn filter(a: FilterArgs) -> Result<()> {
    let x = a.input.load()?;
    let fs = x.sample_rate_hz();
    let f = match (&a.band, &a.coeffs) {
        (Some(b), None) => {
            let order = a.order.unwrap_or_else(|| default_order(b, fs));
            design_fir_bandpass(b, order, fs)?.with_mode(a.mode.into())?
        }
        (None, Some(p)) => FirFilter::load(p, a.mode.into(), fs)?,
        _ => return Err(Error::Config("give exactly one of --band or --coeffs".into())),
    };
    if let Some(p) = &a.save_taps {
        f.save(p)?;
    }
    let y = f.apply(&x)?;
    emit(a.output.out.as_deref(), |w| write_series(&y, w))?;
    let nyq = 0.5 * fs;
    let rows = (0..=512).map(|i| {
        let hz = nyq * i as f64 / 512.0;
        vec![fmt_f64(hz), fmt_f64(f.frequency_response_hz(hz).norm())]
    });
    emit_plot(a.output.plot_data.as_deref(), &["freq_hz", "gain"], rows)
}

fn spectrum(a: SpectrumArgs) -> Result<()> {
    let x = a.input.load()?;
    let f = if a.raw { periodogram(&x)? } else { estimate_spectrum(&x, &a.smooth)? };
    let fs = x.sample_rate_hz();
    if a.output.json() {
        emit_json(a.output.out.as_deref(), &f.to_json())?;
    } else {
        emit(a.output.out.as_deref(), |w| f.write_csv(w, Some(fs)))?;
    }
    let grid = f.grid();
    let rows = (0..x.n_channels()).flat_map(|p| {
        let s = f.auto_spectrum(p);
        let label = x.labels()[p].clone();
        (0..grid.len()).map(move |i| vec![fmt_f64(grid.freq(i) * fs), label.clone(), fmt_f64(s[i])])
    });
    emit_plot(a.output.plot_data.as_deref(), &["freq_hz", "channel", "spectrum"], rows.collect::<Vec<_>>())
}

/// Band-filtered lagged coherence for one pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilteredEdge {
    pub p: usize,
    pub q: usize,
    pub band: String,
    pub value: f64,
    pub lag: isize,
}

fn coherence(a: CoherenceArgs, partial: bool) -> Result<()> {
    let x = a.input.load()?;
    let fs = x.sample_rate_hz();
    if a.filtered {
        if partial {
            return Err(Error::Config("--filtered is only available for coherence".into()));
        }
        let mut edges = Vec::new();
        for b in &a.band {
            for p in 0..x.n_channels() {
                for q in p + 1..x.n_channels() {
                    let (value, lag) = band_coherence(&x, p, q, b, a.order, a.max_lag)?;
                    edges.push(FilteredEdge { p: p + 1, q: q + 1, band: b.name.clone(), value, lag });
                }
            }
        }
        emit_json(a.output.out.as_deref(), &edges)?;
        let rows = edges.iter().map(|e| {
            vec![e.band.clone(), e.p.to_string(), e.q.to_string(), fmt_f64(e.value), e.lag.to_string()]
        });
        return emit_plot(a.output.plot_data.as_deref(), &["band", "p", "q", "value", "lag"], rows);
    }
    let f = estimate_spectrum(&x, &a.smooth)?;
    let r = if partial { partial_coherence(&f, a.cap)? } else { coherence_matrix(&f)? };
    if a.band.is_empty() {
        if a.output.json() {
            return Err(Error::Config("gridded coherence is written as CSV; use --band for JSON edges".into()));
        }
        emit(a.output.out.as_deref(), |w| r.write_csv(w, Some(fs)))?;
        emit_plot(a.output.plot_data.as_deref(), &["freq_hz", "p", "q", "value"], grid_rows(&r, fs))
    } else {
        let mut edges: Vec<NetworkEdge> = Vec::new();
        for b in &a.band {
            edges.extend(band_edges(&r, b, fs)?);
        }
        if a.output.json() {
            emit_json(a.output.out.as_deref(), &edges)?;
        } else {
            emit(a.output.out.as_deref(), |w| write_edges_csv(&edges, w))?;
        }
        let rows = edges
            .iter()
            .map(|e| vec![e.band.clone(), e.p.to_string(), e.q.to_string(), fmt_f64(e.value)]);
        emit_plot(a.output.plot_data.as_deref(), &["band", "p", "q", "value"], rows)
    }
}

fn grid_rows(r: &CoherenceResult, fs: f64) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (i, m) in r.values.iter().enumerate() {
        for p in 0..m.nrows() {
            for q in p + 1..m.ncols() {
                rows.push(vec![fmt_f64(r.grid.freq(i) * fs), (p + 1).to_string(), (q + 1).to_string(), fmt_f64(m[(p, q)])]);
            }
        }
    }
    rows
}

fn tvcoh(a: TvcohArgs) -> Result<()> {
    let x = a.input.load()?;
    let (n, step) = a.window;
    let k = kernel(a.kernel, a.bandwidth, n);
    let r = if a.partial {
        tv_partial_coherence(&x, n, step, &k, a.cap)?
    } else {
        tv_coherence(&x, n, step, &k)?
    };
    emit(a.output.out.as_deref(), |w| r.write_csv(w))?;
    let fs = x.sample_rate_hz();
    let dur = x.len() as f64 / fs;
    let rows = r.centers.iter().zip(&r.windows).flat_map(|(u, c)| {
        grid_rows(c, fs).into_iter().map(move |mut row| {
            row.insert(0, fmt_f64(u * dur));
            row
        })
    });
    emit_plot(a.output.plot_data.as_deref(), &["time_s", "freq_hz", "p", "q", "value"], rows.collect::<Vec<_>>())
}

fn dualfreq(a: DualfreqArgs) -> Result<()> {
    let x = a.input.load()?;
    let (n, step) = a.window;
    let r: DualFreqResult = if let (Some(b1), Some(b2)) = (&a.band1, &a.band2) {
        let ch = to_zero_based(&[a.p.unwrap_or(0), a.q.unwrap_or(0)], x.n_channels())?;
        evolutionary_band_dualfreq(&x, ch[0], b1, ch[1], b2, n, step)?
    } else {
        if a.points.is_empty() {
            return Err(Error::Config("give --points or --band1/--band2".into()));
        }
        let points = a
            .points
            .iter()
            .map(|&(c, hz)| Ok((to_zero_based(&[c], x.n_channels())?[0], x.hz_to_cycles(hz))))
            .collect::<Result<Vec<_>>>()?;
        let smoothing = DualFreqSmoothing {
            time_half_width: a.smooth,
            time_step: a.smooth_step.unwrap_or(step),
            freq_kernel: a.freq_smooth.map(SmoothingKernel::daniell),
        };
        evolutionary_dualfreq(&x, n, step, &points, &smoothing)?
    };
    if a.output.json() {
        emit_json(a.output.out.as_deref(), &r)?;
    } else {
        emit(a.output.out.as_deref(), |w| r.write_csv(w))?;
    }
    let fs = x.sample_rate_hz();
    let rows = r.entries.iter().map(|e| {
        vec![
            fmt_f64(e.t as f64 / fs),
            e.p.to_string(),
            fmt_f64(e.freq_j),
            e.q.to_string(),
            fmt_f64(e.freq_k),
            fmt_f64(e.value),
        ]
    });
    emit_plot(a.output.plot_data.as_deref(), &["time_s", "p", "freq_j", "q", "freq_k", "value"], rows)
}

fn pac(a: PacArgs) -> Result<()> {
    let x = a.input.load()?;
    let pairs = if a.pairs.is_empty() {
        (0..x.n_channels()).map(|c| (c, c)).collect()
    } else {
        a.pairs
            .iter()
            .map(|&(l, h)| {
                let z = to_zero_based(&[l, h], x.n_channels())?;
                Ok((z[0], z[1]))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let scan = pac_scan(&x, &a.low, &a.high, &pairs, a.bins)?;
    if a.output.json() {
        let text = scan.to_json()?;
        emit(a.output.out.as_deref(), |w| Ok(writeln!(w, "{text}")?))?;
    } else {
        emit(a.output.out.as_deref(), |w| scan.write_csv(w))?;
    }
    let rows = scan.entries.iter().flat_map(|e| {
        e.distribution.bin_centers().into_iter().zip(e.distribution.probabilities.clone()).map(move |(c, pr)| {
            vec![
                e.low_band.clone(),
                e.high_band.clone(),
                e.channel_low.to_string(),
                e.channel_high.to_string(),
                fmt_f64(c),
                fmt_f64(pr),
            ]
        })
    });
    emit_plot(
        a.output.plot_data.as_deref(),
        &["low_band", "high_band", "channel_low", "channel_high", "phase", "probability"],
        rows.collect::<Vec<_>>(),
    )
}

fn var_fit(a: VarFitArgs) -> Result<()> {
    let x = a.input.load()?;
    let order = match a.order {
        Some(l) => l,
        None => {
            let c = match a.criterion {
                CriterionArg::Aic => Criterion::Aic,
                CriterionArg::Bic => Criterion::Bic,
            };
            select_order(&x, a.max_order, c)?
        }
    };
    let model = fit(&x, order, fit_method(a.method.method, a.method.lambda)?)?;
    emit_json(a.output.out.as_deref(), &model.to_json())?;
    let rows = model.coeffs().iter().enumerate().flat_map(|(l, phi)| {
        (0..phi.nrows()).flat_map(move |p| {
            (0..phi.ncols()).map(move |q| vec![(l + 1).to_string(), (p + 1).to_string(), (q + 1).to_string(), fmt_f64(phi[(p, q)])])
        })
    });
    emit_plot(a.output.plot_data.as_deref(), &["lag", "to", "from", "coefficient"], rows.collect::<Vec<_>>())
}

/// Directed edge `from -> to`, channels 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct DirectedEdge {
    pub from: usize,
    pub to: usize,
}

/// JSON written by `pdc`.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct PdcOutput {
    pub order: usize,
    pub method: FitMethod,
    pub pdc: crate::var::PdcJson,
    pub edges: Vec<DirectedEdge>,
}

fn pdc_plot_rows(r: &PdcResult) -> impl Iterator<Item = Vec<String>> + '_ {
    r.values.iter().enumerate().flat_map(move |(i, m)| {
        let f = r.grid.freq(i);
        (0..m.nrows()).flat_map(move |p| {
            (0..m.ncols()).map(move |q| vec![fmt_f64(f), (q + 1).to_string(), (p + 1).to_string(), fmt_f64(m[(p, q)])])
        })
    })
}

fn pdc_cmd(a: PdcArgs) -> Result<()> {
    let x = a.input.load()?;
    let method = fit_method(a.method.method, a.method.lambda)?;
    let model = fit(&x, a.order, method)?;
    let r = pdc(&model, &crate::series::FrequencyGrid::new(a.n_freq)?)?;
    let support = granger_edges(&model, EdgeThreshold::Absolute(a.threshold))?;
    let mut edges = Vec::new();
    for q in 0..support.ncols() {
        for p in 0..support.nrows() {
            if p != q && support[(p, q)] {
                edges.push(DirectedEdge { from: q + 1, to: p + 1 });
            }
        }
    }
    let out = PdcOutput { order: a.order, method, pdc: r.to_json(), edges };
    emit_json(a.output.out.as_deref(), &out)?;
    emit_plot(a.output.plot_data.as_deref(), &["freq", "from", "to", "pdc"], pdc_plot_rows(&r).collect::<Vec<_>>())
}

/// JSON written by `tvpdc`.
#[derive(Debug, Clone, Serialize)]
pub struct TvPdcOutput {
    pub centers: Vec<f64>,
    pub window: usize,
    pub step: usize,
    pub results: Vec<crate::var::PdcJson>,
}

fn tvpdc(a: TvpdcArgs) -> Result<()> {
    let x = a.input.load()?;
    let (n, step) = a.window;
    let r = tv_pdc(&x, a.order, n, step, fit_method(a.method.method, a.method.lambda)?, a.n_freq)?;
    let out = TvPdcOutput {
        centers: r.centers.clone(),
        window: r.window,
        step: r.step,
        results: r.results.iter().map(PdcResult::to_json).collect(),
    };
    emit_json(a.output.out.as_deref(), &out)?;
    let rows: Vec<Vec<String>> = r
        .centers
        .iter()
        .zip(&r.results)
        .flat_map(|(u, res)| {
            pdc_plot_rows(res).map(move |mut row| {
                row.insert(0, fmt_f64(*u));
                row
            })
        })
        .collect();
    emit_plot(a.output.plot_data.as_deref(), &["u", "freq", "from", "to", "pdc"], rows)
}

/// Builds the spectral-VAR configuration from `scau` flags.
/// Channel selection already happened when the input was loaded.
pub fn scau_spec(a: &ScauArgs) -> Result<SpectralVarSpec> {
    Ok(SpectralVarSpec {
        channels: Vec::new(),
        bands: if a.bands.is_empty() { standard_bands() } else { a.bands.clone() },
        filter_order: a.filter_order,
        mode: FilterMode::Causal,
        order: a.order,
        max_order: a.max_order,
        method: a.method.map(|m| fit_method(m, a.lambda)).transpose()?,
    })
}

fn scau(a: ScauArgs) -> Result<()> {
    let x = a.input.load()?;
    let spec = scau_spec(&a)?;
    let r = spectral_var(&x, &spec)?;
    if a.output.json() {
        emit_json(a.output.out.as_deref(), &r.edges)?;
    } else {
        emit(a.output.out.as_deref(), |w| r.write_edges_csv(w))?;
    }
    let rows = r.edges.iter().map(|e| {
        vec![
            format!("{}:{}", e.from_channel, e.from_band),
            format!("{}:{}", e.to_channel, e.to_band),
            e.lag.to_string(),
            fmt_f64(e.coefficient),
        ]
    });
    emit_plot(a.output.plot_data.as_deref(), &["from", "to", "lag", "coefficient"], rows)
}

fn spca(a: SpcaArgs) -> Result<()> {
    let x = a.input.load()?;
    if a.pca {
        let sol = pca_fit(&x, a.q)?;
        emit_json(a.output.out.as_deref(), &sol.to_json())?;
        if let Some(p) = &a.encode {
            emit(Some(p), |w| write_series(&crate::spca::pca_encode(&x, &sol)?, w))?;
        }
        let rows = sol.eigenvalues.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), fmt_f64(*v)]);
        return emit_plot(a.output.plot_data.as_deref(), &["component", "eigenvalue"], rows);
    }
    let f = estimate_spectrum(&x, &a.smooth)?;
    let sol = spca_fit(&f, a.q, a.lag_truncation)?;
    emit_json(a.output.out.as_deref(), &sol.to_json())?;
    if let Some(p) = &a.encode {
        emit(Some(p), |w| write_series(&spca_encode(&x, &sol)?, w))?;
    }
    let fs = x.sample_rate_hz();
    let rows = sol.component_spectra().into_iter().enumerate().flat_map(|(c, s)| {
        let grid = sol.grid;
        s.into_iter().enumerate().map(move |(i, v)| vec![(c + 1).to_string(), fmt_f64(grid.freq(i) * fs), fmt_f64(v)])
    });
    emit_plot(a.output.plot_data.as_deref(), &["component", "freq_hz", "eigenvalue"], rows.collect::<Vec<_>>())
}
