//! Smoothed periodogram of an AR(2) oscillator against its closed-form
//! spectrum, and a shrinkage estimate toward a fitted VAR.

use specdep::series::MultiChannelSeries;
use specdep::simulate::{gen_sources, SourceSpec};
use specdep::spectrum::{ar2_spectrum, shrink_spectral_estimate, smoothed_spectrum, var_spectrum, Ar2Params, SmoothingKernel};
use specdep::var::fit_ols;

fn main() -> specdep::Result<()> {
    let fs = 128.0;
    let params = Ar2Params::from_hz(1.05, 10.0, fs)?;
    let z = gen_sources(&[SourceSpec::Ar2(params), SourceSpec::White], 8192, 3, fs)?;
    let x = MultiChannelSeries::from_channels(z.into_channels(), fs)?;

    let kernel = SmoothingKernel::default_for(x.len());
    let f = smoothed_spectrum(&x, &kernel)?;
    let grid = f.grid();
    let truth = ar2_spectrum(&params, &grid);
    // the generator standardizes sources to unit variance
    let scale = params.stationary_variance();
    let est = f.auto_spectrum(0);
    println!("kernel half-width {}", kernel.half_width);
    for hz in [2.0, 6.0, 10.0, 14.0, 30.0] {
        let i = grid.nearest(hz / fs);
        println!("{hz:5.1} Hz  estimate {:9.5}  closed form {:9.5}", est[i], truth[i] / scale);
    }

    let parametric = var_spectrum(&fit_ols(&x, 2)?, &grid)?;
    let shrunk = shrink_spectral_estimate(&f, &parametric, &kernel)?;
    let w: f64 = shrunk.nonparametric_weight.iter().sum::<f64>() / grid.len() as f64;
    println!("mean weight on the smoothed periodogram: {w:.3}");
    Ok(())
}
