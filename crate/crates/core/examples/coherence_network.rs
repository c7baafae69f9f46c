//! Coherence versus partial coherence on a three-channel gamma network:
//! channels 1 and 2 share gamma only through channel 3.

use specdep::coherence::{band_edges, coherence_matrix, partial_coherence};
use specdep::series::Band;
use specdep::simulate::{example, ExampleName};
use specdep::spectrum::{smoothed_spectrum, SmoothingKernel};

fn main() -> specdep::Result<()> {
    let (x, truth) = example(ExampleName::GammaNet, 8192, 2)?;
    println!("{}", truth.notes);
    let f = smoothed_spectrum(&x, &SmoothingKernel::default_for(x.len()))?;
    let coh = coherence_matrix(&f)?;
    let pcoh = partial_coherence(&f, None)?;
    for band in [Band::delta(), Band::alpha(), Band::gamma()] {
        for (c, p) in band_edges(&coh, &band, 128.0)?.iter().zip(band_edges(&pcoh, &band, 128.0)?) {
            println!("{:>5}  X{}-X{}  COH {:.3}  PCOH {:.3}", band.name, c.p, c.q, c.value, p.value);
        }
    }
    Ok(())
}
