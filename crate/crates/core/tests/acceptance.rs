//! Acceptance suite. Each test writes one `PASS`/`FAIL` line to stderr
//! (bypassing libtest capture) and then asserts.
//!
//! Seeded Monte-Carlo throughout: seeds 0..50 unless stated.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use specdep::coherence::{band_coherence, coherence, coherence_matrix, partial_coherence};
use specdep::dualfreq::evolutionary_band_dualfreq;
use specdep::filters::{default_order, design_fir_bandpass, FilterMode, FirFilter};
use specdep::pac::{modulation_index, DEFAULT_PHASE_BINS};
use specdep::series::{demean, max_lag_sq_correlation, Band, FrequencyGrid, MultiChannelSeries};
use specdep::simulate::{example, gen_sources, ExampleName, SourceSpec, DEFAULT_ROOT_MAGNITUDE};
use specdep::spca::{pca_encode, pca_fit, reconstruction_error, spca_encode, spca_fit};
use specdep::spectrum::{
    periodogram, shrink_spectral_estimate, smoothed_spectrum, var_spectrum, Ar2Params, CrossSpectralMatrix,
    SmoothingKernel,
};
use specdep::var::{
    fit, fit_lasso_detailed, granger_edges, pdc, simulate_var, EdgeThreshold, FitMethod, VarModel,
};

const SEEDS: u64 = 50;
const FS: f64 = 128.0;

fn report(id: &str, pass: bool, detail: &str) {
    let line = format!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    let _ = writeln!(std::io::stderr().lock(), "{line}");
    assert!(pass, "{line}");
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn share(hits: usize, n: u64) -> f64 {
    hits as f64 / n as f64
}

fn default_spectrum(x: &MultiChannelSeries) -> CrossSpectralMatrix {
    smoothed_spectrum(x, &SmoothingKernel::default_for(x.len())).unwrap()
}

/// Value of `m[(p, q)]` at the grid point nearest `hz`.
fn at_hz(values: &[DMatrix<f64>], grid: &FrequencyGrid, p: usize, q: usize, hz: f64) -> f64 {
    values[grid.nearest(hz / FS)][(p, q)]
}

#[test]
fn c01_instantaneous_mixture_band_coherence() {
    let start = Instant::now();
    let (mut high, mut low) = (Vec::new(), Vec::new());
    for seed in 0..SEEDS {
        let (x, _) = example(ExampleName::Contemporaneous, 7680, seed).unwrap();
        high.push(band_coherence(&x, 0, 1, &Band::gamma(), None, None).unwrap().0);
        low.push(band_coherence(&x, 0, 1, &Band::alpha(), None, None).unwrap().0);
    }
    let secs = start.elapsed().as_secs_f64();
    let (h, l) = (median(high), median(low));
    report(
        "1",
        h > 0.7 && l < 0.15 && secs < 10.0,
        &format!("median gamma {h:.4} (> 0.7), median alpha {l:.4} (< 0.15), {secs:.2} s (< 10 s)"),
    );
}

#[test]
fn c02_lagged_mixture_recovers_lag() {
    let (mut high, mut low, mut hits) = (Vec::new(), Vec::new(), 0);
    for seed in 0..SEEDS {
        let (x, _) = example(ExampleName::Lagged, 7680, seed).unwrap();
        // the default search reaches one gamma cycle (3 lags), short of 10
        let (v, lag) = band_coherence(&x, 0, 1, &Band::gamma(), None, Some(20)).unwrap();
        high.push(v);
        hits += usize::from(lag.abs() == 10);
        low.push(band_coherence(&x, 0, 1, &Band::alpha(), None, Some(20)).unwrap().0);
    }
    let (h, l, s) = (median(high), median(low), share(hits, SEEDS));
    report(
        "2",
        s >= 0.9 && h > 0.6 && l < 0.1,
        &format!("|lag| = 10 in {:.0}% (>= 90%), median gamma {h:.4} (> 0.6), median alpha {l:.4} (< 0.1)", 100.0 * s),
    );
}

#[test]
fn c03_gamma_net_coherence_and_partial_coherence() {
    let mut hits = 0;
    let (mut worst_coh, mut pc12) = (Vec::new(), Vec::new());
    for seed in 0..SEEDS {
        let (x, _) = example(ExampleName::GammaNet, 7680, seed).unwrap();
        let coh = [(0, 1), (0, 2), (1, 2)]
            .map(|(p, q)| band_coherence(&x, p, q, &Band::gamma(), None, None).unwrap().0);
        let min_coh = coh.iter().copied().fold(f64::INFINITY, f64::min);
        let f = default_spectrum(&x);
        let pc = partial_coherence(&f, None).unwrap();
        let v = at_hz(&pc.values, &pc.grid, 0, 1, 40.0);
        hits += usize::from(min_coh > 0.6 && v < 0.1);
        worst_coh.push(min_coh);
        pc12.push(v);
    }
    let s = share(hits, SEEDS);
    report(
        "3",
        s >= 0.9,
        &format!(
            "all-pairs gamma COH > 0.6 and PC(1,2) < 0.1 at 40 Hz in {:.0}% (>= 90%); medians: min COH {:.3}, PC(1,2) {:.4}",
            100.0 * s,
            median(worst_coh),
            median(pc12)
        ),
    );
}

#[test]
fn c04_gamma_alpha_net_truth_table() {
    let mut counts = [0usize; 6];
    for seed in 0..SEEDS {
        let (x, _) = example(ExampleName::GammaAlphaNet, 7680, seed).unwrap();
        let f = default_spectrum(&x);
        let coh = coherence_matrix(&f).unwrap();
        let pc = partial_coherence(&f, None).unwrap();
        let c = |hz| at_hz(&coh.values, &coh.grid, 0, 1, hz);
        let p = |hz| at_hz(&pc.values, &pc.grid, 0, 1, hz);
        let checks = [
            c(2.0) < 0.1,
            p(2.0) < 0.1,
            c(10.0) > 0.3,
            p(10.0) > 0.3,
            c(40.0) > 0.3,
            p(40.0) < 0.1,
        ];
        for (n, ok) in counts.iter_mut().zip(checks) {
            *n += usize::from(ok);
        }
    }
    let names = [
        "delta COH < 0.1",
        "delta PCOH < 0.1",
        "alpha COH > 0.3",
        "alpha PCOH > 0.3",
        "gamma COH > 0.3",
        "gamma PCOH < 0.1",
    ];
    let detail: Vec<String> = names
        .iter()
        .zip(counts)
        .map(|(n, k)| format!("{n}: {:.0}%", 100.0 * share(k, SEEDS)))
        .collect();
    let pass = counts.iter().all(|&k| share(k, SEEDS) >= 0.85);
    report("4", pass, &format!("{} (each >= 85%)", detail.join(", ")));
}

fn off_diagonal_edges(model: &VarModel, threshold: EdgeThreshold) -> Vec<(usize, usize)> {
    let e = granger_edges(model, threshold).unwrap();
    let mut out = Vec::new();
    for to in 0..e.nrows() {
        for from in 0..e.ncols() {
            if to != from && e[(to, from)] {
                out.push((from + 1, to + 1));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn c05_pdc_network_support_recovery() {
    let truth = vec![(2, 1), (3, 2), (4, 2)];
    let grid = FrequencyGrid::new(128).unwrap();
    let (mut exact, mut worst_colsum) = (0, 0.0f64);
    let (mut fp_ols, mut fp_lassle) = (Vec::new(), Vec::new());
    for seed in 0..SEEDS {
        let (x, _) = example(ExampleName::PdcNet, 1 << 13, seed).unwrap();
        let x = demean(&x);
        let m2 = fit(&x, 2, FitMethod::Lassle { lambda: 0.05 }).unwrap();
        exact += usize::from(off_diagonal_edges(&m2, EdgeThreshold::Absolute(0.0)) == truth);
        worst_colsum = worst_colsum.max(pdc(&m2, &grid).unwrap().column_sum_error());

        let ols = fit(&x, 15, FitMethod::Ols).unwrap();
        let las = fit(&x, 15, FitMethod::Lassle { lambda: 0.05 }).unwrap();
        worst_colsum = worst_colsum.max(pdc(&ols, &grid).unwrap().column_sum_error());
        worst_colsum = worst_colsum.max(pdc(&las, &grid).unwrap().column_sum_error());
        let fp = |e: Vec<(usize, usize)>| e.iter().filter(|x| !truth.contains(x)).count() as f64;
        fp_ols.push(fp(off_diagonal_edges(&ols, EdgeThreshold::StdErrors(2.0))));
        fp_lassle.push(fp(off_diagonal_edges(&las, EdgeThreshold::Absolute(0.0))));
    }
    let s = share(exact, SEEDS);
    let (fo, fl) = (median(fp_ols), median(fp_lassle));
    report(
        "5",
        s >= 0.8 && worst_colsum <= 1e-10 && fo > fl,
        &format!(
            "LASSLE(2, lambda 0.05) exact support in {:.0}% (>= 80%); max PDC column-sum error {worst_colsum:.1e} (<= 1e-10); median false positives OLS(15) {fo} vs LASSLE(15) {fl} (OLS strictly more)",
            100.0 * s
        ),
    );
}

#[test]
fn c06_phase_amplitude_coupling_beats_sources() {
    let (th, ga) = (Band::theta(), Band::gamma());
    let len = 7680;
    let (mut mi1, mut mi2, mut null) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..SEEDS {
        let (x, _) = example(ExampleName::Pac, len, seed).unwrap();
        mi1.push(modulation_index(&x, 0, &th, 0, &ga, DEFAULT_PHASE_BINS).unwrap());
        mi2.push(modulation_index(&x, 1, &th, 1, &ga, DEFAULT_PHASE_BINS).unwrap());
        // the generator's latent sources (same seed), plus white noise of the
        // observation kind
        let m = DEFAULT_ROOT_MAGNITUDE;
        let z = gen_sources(
            &[
                SourceSpec::Ar2(Ar2Params::from_hz(m, 6.0, FS).unwrap()),
                SourceSpec::Ar2(Ar2Params::from_hz(m, 40.0, FS).unwrap()),
                SourceSpec::White,
            ],
            len,
            seed,
            FS,
        )
        .unwrap();
        let z = MultiChannelSeries::from_channels(
            vec![z.channel(0).to_vec(), z.channel(1).to_vec(), gen_sources(&[SourceSpec::White], len, seed + 777, FS).unwrap().channel(0).to_vec()],
            FS,
        )
        .unwrap();
        let best = (0..3)
            .map(|c| modulation_index(&z, c, &th, c, &ga, DEFAULT_PHASE_BINS).unwrap())
            .fold(0.0, f64::max);
        null.push(best);
    }
    let (a, b, n) = (median(mi1), median(mi2), median(null));
    report(
        "6",
        a > 3.0 * n && b > 3.0 * n,
        &format!("median MI(X1) {a:.5}, MI(X2) {b:.5}, 3 x median max source MI {:.5}", 3.0 * n),
    );
}

#[test]
fn c07_printed_alpha_taps() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/alpha_taps.txt");
    let f = FirFilter::load(&path, FilterMode::ZeroPhase, FS).unwrap();
    let gain = |hz: f64| f.frequency_response_hz(hz).norm();
    let (mut arg, mut best) = (0.0, 0.0);
    for i in 0..=6400 {
        let hz = i as f64 * 0.01;
        if gain(hz) > best {
            (arg, best) = (hz, gain(hz));
        }
    }
    let (g2, g10, g40) = (gain(2.0), gain(10.0), gain(40.0));
    report(
        "7",
        (8.0..=12.0).contains(&arg) && g10 > 4.0 * g2.max(g40),
        &format!(
            "{} taps, max |C| at {arg:.2} Hz (in [8, 12]); |C(10)| {g10:.4} vs 4 x max(|C(2)| {g2:.4}, |C(40)| {g40:.4})",
            f.coeffs().len()
        ),
    );
}

fn random_bivariate(seed: u64, len: usize) -> MultiChannelSeries {
    let z = gen_sources(
        &[
            SourceSpec::Ar2(Ar2Params::from_hz(1.05, 4.0 + (seed % 40) as f64, FS).unwrap()),
            SourceSpec::White,
            SourceSpec::White,
        ],
        len,
        seed,
        FS,
    )
    .unwrap();
    let w = 0.2 + (seed % 7) as f64 * 0.3;
    let x1: Vec<f64> = (0..len).map(|t| z.get(t, 0) + 0.5 * z.get(t, 1)).collect();
    let x2: Vec<f64> = (0..len).map(|t| w * z.get(t, 0) + z.get(t, 2)).collect();
    MultiChannelSeries::from_channels(vec![x1, x2], FS).unwrap()
}

#[test]
fn c08_bivariate_partial_coherence_equals_coherence() {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let x = random_bivariate(seed, 1024);
        let f = smoothed_spectrum(&x, &SmoothingKernel::daniell(1 + (seed % 9) as usize)).unwrap();
        let pc = partial_coherence(&f, None).unwrap();
        let c = coherence(&f, 0, 1).unwrap();
        for (m, v) in pc.values.iter().zip(c) {
            worst = worst.max((m[(0, 1)] - v).abs());
        }
    }
    report("8", worst <= 1e-10, &format!("max |PC - COH| over 100 spectra {worst:.2e} (<= 1e-10)"));
}

#[test]
fn c09_var1_coherence_matches_closed_form() {
    // damped 10 Hz rotation in channel 1 driving channel 2
    let a = Ar2Params::from_hz(1.25, 10.0, FS).unwrap();
    let phi = DMatrix::from_row_slice(3, 3, &[a.phi1, a.phi2, 0.0, 1.0, 0.0, 0.0, 0.6, 0.0, 0.3]);
    let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-6, 1.0]));
    let model = VarModel::new(vec![phi], cov).unwrap();
    let x = simulate_var(&model, 1 << 15, 9, None).unwrap();
    let x = MultiChannelSeries::from_channels(vec![x.channel(0).to_vec(), x.channel(2).to_vec()], FS).unwrap();
    let f = default_spectrum(&x);
    let grid = f.grid();
    let truth = var_spectrum(&model, &grid).unwrap();
    let peak = (0..grid.len())
        .max_by(|&i, &j| truth.get(i)[(0, 0)].re.total_cmp(&truth.get(j)[(0, 0)].re))
        .unwrap();
    let t = truth.get(peak);
    let expected = t[(0, 2)].norm_sqr() / (t[(0, 0)].re * t[(2, 2)].re);
    let estimated = coherence(&f, 0, 1).unwrap()[peak];
    report(
        "9",
        (estimated - expected).abs() <= 0.1,
        &format!(
            "peak {:.2} Hz: estimated {estimated:.4}, closed form {expected:.4} (within 0.1)",
            grid.freq(peak) * FS
        ),
    );
}

/// Delta-filter both channels and find the lag at which channel 2 best
/// matches channel 1 (positive when channel 1 leads), past the filter transient.
fn delta_lag(x: &MultiChannelSeries, mode: FilterMode) -> (f64, isize) {
    let band = Band::delta();
    let f = design_fir_bandpass(&band, default_order(&band, FS), FS).unwrap().with_mode(mode).unwrap();
    let trim = f.coeffs().len();
    let y1 = f.apply_slice(x.channel(0)).unwrap();
    let y2 = f.apply_slice(x.channel(1)).unwrap();
    let end = x.len() - trim;
    max_lag_sq_correlation(&y2[trim..end], &y1[trim..end], 40).unwrap()
}

#[test]
fn c10_one_sided_filters_keep_lead_lag() {
    let (mut one_sided_hits, mut coh_close, mut lag_differs) = (0, 0, 0);
    let mut lags = Vec::new();
    for seed in 0..SEEDS {
        let (x, _) = example(ExampleName::LeadLag, 7680, seed).unwrap();
        let (c1, l1) = delta_lag(&x, FilterMode::Causal);
        let (c0, l0) = delta_lag(&x, FilterMode::ZeroPhase);
        one_sided_hits += usize::from((l1 - 10).abs() <= 1);
        coh_close += usize::from((c1 - c0).abs() <= 0.1);
        lag_differs += usize::from(l0 != l1);
        lags.push((l1, l0));
    }
    let s = share(one_sided_hits, SEEDS);
    let pass = s >= 0.9 && coh_close == SEEDS as usize && lag_differs == SEEDS as usize;
    report(
        "10",
        pass,
        &format!(
            "one-sided lag within 10 +- 1 in {:.0}% (>= 90%); zero-phase coherence within 0.1 in {coh_close}/{SEEDS}; zero-phase lag differs in {lag_differs}/{SEEDS} (first seeds one-sided/zero-phase: {:?})",
            100.0 * s,
            &lags[..5]
        ),
    );
}

/// Peak-to-trough structure of a spectrum over the delta, alpha and gamma bands.
fn three_band_peaks(spec: &[f64], grid: &FrequencyGrid) -> bool {
    let idx = |lo: f64, hi: f64| grid.positions_in(lo / FS, hi / FS);
    let max_in = |lo, hi| idx(lo, hi).into_iter().map(|i| (spec[i], i)).fold((f64::MIN, 0), |a, b| if b.0 > a.0 { b } else { a });
    let min_in = |lo, hi| idx(lo, hi).into_iter().map(|i| spec[i]).fold(f64::INFINITY, f64::min);
    let local_max = |i: usize| i > 0 && i + 1 < spec.len() && spec[i] >= spec[i - 1] && spec[i] >= spec[i + 1];
    let (d, di) = max_in(0.5, 4.0);
    let (a, ai) = max_in(8.0, 12.0);
    let (g, gi) = max_in(30.0, 50.0);
    let (t1, t2) = (min_in(4.0, 8.0), min_in(12.0, 30.0));
    local_max(di) && local_max(ai) && local_max(gi) && d > 3.0 * t1 && a > 3.0 * t1.max(t2) && g > 3.0 * t2
}

#[test]
fn c11_spectral_pca_separates_rhythms() {
    let (mut hits, mut spca_ok, mut pca_ok) = (0, 0, 0);
    let mut coh_medians = Vec::new();
    for seed in 0..SEEDS {
        let (x, _) = example(ExampleName::SpcaMix, 1 << 13, seed).unwrap();
        let f = default_spectrum(&x);
        let s1 = spca_fit(&f, 1, None).unwrap();
        let spca_peaks = three_band_peaks(&s1.component_spectra()[0], &s1.grid);

        let pc1 = pca_encode(&x, &pca_fit(&x, 1).unwrap()).unwrap();
        let fp = default_spectrum(&pc1);
        let pca_peaks = three_band_peaks(&fp.auto_spectrum(0), &fp.grid());
        hits += usize::from(spca_peaks && !pca_peaks);
        spca_ok += usize::from(spca_peaks);
        pca_ok += usize::from(pca_peaks);

        let s3 = spca_fit(&f, 3, None).unwrap();
        let enc = spca_encode(&demean(&x), &s3).unwrap();
        let l = s3.lag_truncation;
        let enc = enc.window(2 * l, enc.len() - 4 * l).unwrap();
        let c = coherence_matrix(&default_spectrum(&enc)).unwrap();
        let mut all = Vec::new();
        for m in &c.values {
            all.extend([m[(0, 1)], m[(0, 2)], m[(1, 2)]]);
        }
        coh_medians.push(median(all));
    }
    let s = share(hits, SEEDS);
    let cm = median(coh_medians);
    report(
        "11",
        s >= 0.8 && cm < 0.05,
        &format!(
            "SPCA-1 three-band peaks and PCA-1 not in {:.0}% (>= 80%) [SPCA-1 {spca_ok}/{SEEDS}, PCA-1 {pca_ok}/{SEEDS}]; median encoded pairwise coherence {cm:.4} (< 0.05)",
            100.0 * s
        ),
    );
}

fn min_hermitian_eigen(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()).unscale(2.0);
    let p = h.nrows();
    // real symmetric embedding [[Re, -Im], [Im, Re]] shares the spectrum
    let r = DMatrix::from_fn(2 * p, 2 * p, |i, j| {
        let z = h[(i % p, j % p)];
        match (i < p, j < p) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    r.symmetric_eigen().eigenvalues.min()
}

#[test]
fn c12_numerical_invariants() {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, pass: bool, detail: String| {
        ok &= pass;
        notes.push(format!("{name} {} ({detail})", if pass { "ok" } else { "VIOLATED" }));
    };

    // PDC column-stochasticity across fitted and random models
    let grid = FrequencyGrid::new(64).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let (x, _) = example(ExampleName::PdcNet, 2048, seed).unwrap();
        for method in [FitMethod::Ols, FitMethod::Lassle { lambda: 0.1 }, FitMethod::Lasso { lambda: 0.1 }] {
            let m = fit(&demean(&x), 1 + (seed % 4) as usize, method).unwrap();
            worst = worst.max(pdc(&m, &grid).unwrap().column_sum_error());
        }
    }
    check("PDC column sums", worst <= 1e-10, format!("max error {worst:.1e}"));

    // Hermitian / PSD of every spectral estimate
    let (mut herm, mut min_rel) = (0.0f64, f64::INFINITY);
    for seed in 0..10 {
        let (x, _) = example(ExampleName::SpcaMix, 2048, seed).unwrap();
        let k = SmoothingKernel::default_for(x.len());
        let raw = periodogram(&x).unwrap();
        let sm = smoothed_spectrum(&x, &k).unwrap();
        let par = var_spectrum(&fit(&demean(&x), 4, FitMethod::Ols).unwrap(), &sm.grid()).unwrap();
        let sh = shrink_spectral_estimate(&sm, &par, &k).unwrap().spectrum;
        for f in [&raw, &sm, &par, &sh] {
            herm = herm.max(f.hermitian_error());
            for m in f.values().iter().step_by(16) {
                let scale = m.diagonal().iter().map(|z| z.re).sum::<f64>().max(1e-300);
                min_rel = min_rel.min(min_hermitian_eigen(m) / scale);
            }
        }
    }
    check("Hermitian", herm <= 1e-12, format!("max |f - f*| {herm:.1e}"));
    check("PSD", min_rel >= -1e-10, format!("min relative eigenvalue {min_rel:.1e}"));

    // MI in [0, 1]
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..20 {
        let (x, _) = example(ExampleName::Pac, 2048, seed).unwrap();
        for (pl, ph) in [(0, 0), (1, 1), (0, 1)] {
            for (bl, bh) in [(Band::delta(), Band::gamma()), (Band::theta(), Band::beta()), (Band::theta(), Band::gamma())] {
                let v = modulation_index(&x, pl, &bl, ph, &bh, 4 + (seed % 30) as usize).unwrap();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    check("MI range", lo >= 0.0 && hi <= 1.0, format!("[{lo:.2e}, {hi:.2e}]"));

    // LASSO KKT
    let mut kkt = 0.0f64;
    for seed in 0..10 {
        let (x, _) = example(ExampleName::PdcNet, 4096, seed).unwrap();
        for lambda in [0.01, 0.1, 1.0] {
            kkt = kkt.max(fit_lasso_detailed(&demean(&x), 3, lambda).unwrap().kkt_residual);
        }
    }
    check("LASSO KKT", kkt < 1e-5, format!("max residual {kkt:.1e}"));

    // PCA eigen-tail identity
    let mut worst_tail = 0.0f64;
    for seed in 0..5 {
        let (x, _) = example(ExampleName::SpcaMix, 1 << 14, seed).unwrap();
        for q in 1..5 {
            let sol = pca_fit(&x, q).unwrap();
            let tail: f64 = sol.eigenvalues[q..].iter().sum();
            let err = reconstruction_error(&x, &sol).unwrap();
            worst_tail = worst_tail.max((err - tail).abs() / tail);
        }
    }
    check("PCA tail", worst_tail <= 0.01, format!("max relative gap {worst_tail:.1e}"));

    // Parseval
    let mut worst_parseval = 0.0f64;
    for seed in 0..10 {
        let x = demean(&random_bivariate(seed, 1000 + 2 * seed as usize));
        let f = periodogram(&x).unwrap();
        for p in 0..2 {
            let energy: f64 = x.channel(p).iter().map(|v| v * v).sum();
            let total: f64 = f.auto_spectrum(p).iter().sum();
            worst_parseval = worst_parseval.max((total - energy).abs() / energy);
        }
    }
    check("Parseval", worst_parseval <= 1e-8, format!("max relative gap {worst_parseval:.1e}"));

    let secs = start.elapsed().as_secs_f64();
    check("runtime", secs < 300.0, format!("{secs:.1} s"));
    report("12", ok, &notes.join("; "));
}

#[test]
fn dualfreq_band_estimator_separates_coupled_from_uncoupled() {
    let (th, ga) = (Band::theta(), Band::gamma());
    let len = 4096;
    let mut ratios = Vec::new();
    for seed in 0..SEEDS {
        let (s, _) = example(ExampleName::Pac, len, seed).unwrap();
        // same construction with the gamma amplitude driven by an unrelated theta source
        let m = DEFAULT_ROOT_MAGNITUDE;
        let z = gen_sources(
            &[
                SourceSpec::Ar2(Ar2Params::from_hz(m, 6.0, FS).unwrap()),
                SourceSpec::Ar2(Ar2Params::from_hz(m, 6.0, FS).unwrap()),
                SourceSpec::Ar2(Ar2Params::from_hz(m, 40.0, FS).unwrap()),
                SourceSpec::White,
            ],
            len,
            seed + 10_000,
            FS,
        )
        .unwrap();
        let x2: Vec<f64> = (0..len)
            .map(|t| 4.0 * z.get(t, 0) + z.get(t, 1) * z.get(t, 2) + 0.1f64.sqrt() * z.get(t, 3))
            .collect();
        let null = MultiChannelSeries::from_channels(vec![x2], FS).unwrap();
        let a = evolutionary_band_dualfreq(&s, 1, &th, 1, &ga, 256, 128).unwrap();
        let b = evolutionary_band_dualfreq(&null, 0, &th, 0, &ga, 256, 128).unwrap();
        ratios.push(median(a.entries.iter().map(|e| e.value).collect()) / median(b.entries.iter().map(|e| e.value).collect()));
    }
    let r = median(ratios);
    report(
        "dualfreq-pac",
        r > 2.0,
        &format!("median ratio of theta-gamma band dual-frequency coherence, coupled / uncoupled {r:.3} (> 2)"),
    );
}
