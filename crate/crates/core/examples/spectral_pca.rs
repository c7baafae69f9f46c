//! First spectral principal component versus classical PCA on a five-channel
//! mixture of delta, alpha and gamma oscillators.

use specdep::spca::{pca_fit, reconstruction_error, spca_fit};
use specdep::simulate::{example, ExampleName};
use specdep::spectrum::{smoothed_spectrum, SmoothingKernel};

fn main() -> specdep::Result<()> {
    let (x, _) = example(ExampleName::SpcaMix, 8192, 11)?;
    let fs = x.sample_rate_hz();
    let f = smoothed_spectrum(&x, &SmoothingKernel::default_for(x.len()))?;
    let spca = spca_fit(&f, 1, None)?;
    let pca = pca_fit(&x, 1)?;
    let lambda = &spca.component_spectra()[0];
    for hz in [2.0, 6.0, 10.0, 25.0, 40.0] {
        println!("{hz:5.1} Hz  first SPCA eigenvalue {:8.4}", lambda[spca.grid.nearest(hz / fs)]);
    }
    println!("PCA loading: {:.3?}", pca.loadings.column(0).iter().collect::<Vec<_>>());
    println!(
        "mean squared reconstruction error  PCA {:.3}  SPCA {:.3}",
        reconstruction_error(&x, &pca)?,
        reconstruction_error(&x, &spca)?
    );
    Ok(())
}
