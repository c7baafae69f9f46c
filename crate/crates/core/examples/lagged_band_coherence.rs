//! Band coherence from filtered signals recovers a 10-sample delay.

use specdep::coherence::band_coherence;
use specdep::series::Band;
use specdep::simulate::{example, ExampleName};

fn main() -> specdep::Result<()> {
    let (x, truth) = example(ExampleName::Lagged, 7680, 4)?;
    println!("{}", truth.notes);
    for band in [Band::alpha(), Band::gamma()] {
        let (value, lag) = band_coherence(&x, 0, 1, &band, None, Some(20))?;
        println!("{:>5}: coherence {value:.3} at lag {lag}", band.name);
    }
    Ok(())
}
