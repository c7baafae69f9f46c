//! Generate every built-in example, write it as CSV, and read it back.

use specdep::io::{read_series, write_series};
use specdep::simulate::{example, ExampleName};

fn main() -> specdep::Result<()> {
    for name in [
        ExampleName::Contemporaneous,
        ExampleName::Lagged,
        ExampleName::GammaNet,
        ExampleName::GammaAlphaNet,
        ExampleName::LeadLag,
        ExampleName::PdcNet,
        ExampleName::Pac,
        ExampleName::SpcaMix,
        ExampleName::Chirp,
    ] {
        let (x, truth) = example(name, 2048, 0)?;
        let mut csv = Vec::new();
        write_series(&x, &mut csv)?;
        let back = read_series(csv.as_slice(), truth.sample_rate_hz)?;
        println!(
            "{:>16}: {} channels, {} bytes, exact round trip {}",
            name.as_str(),
            x.n_channels(),
            csv.len(),
            back == x
        );
    }
    Ok(())
}
