//! Band-to-band causality from a VAR on causally filtered components:
//! channel 1's delta leads channel 2 by 10 samples.

use specdep::series::Band;
use specdep::simulate::{example, ExampleName};
use specdep::var::{spectral_var, SpectralVarSpec};

fn main() -> specdep::Result<()> {
    let (x, truth) = example(ExampleName::LeadLag, 8192, 10)?;
    println!("{}", truth.notes);
    let spec = SpectralVarSpec {
        bands: vec![Band::delta(), Band::beta(), Band::gamma()],
        ..SpectralVarSpec::default()
    };
    let r = spectral_var(&x, &spec)?;
    println!("order {}, {} samples trimmed", r.order, r.trimmed);
    r.write_edges_csv(std::io::stdout())?;
    Ok(())
}
