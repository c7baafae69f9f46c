//! Modulation index table for theta phase against gamma amplitude.

use specdep::pac::{pac_scan, DEFAULT_PHASE_BINS};
use specdep::series::Band;
use specdep::simulate::{example, ExampleName};

fn main() -> specdep::Result<()> {
    let (x, truth) = example(ExampleName::Pac, 8192, 8)?;
    println!("{}", truth.notes);
    let scan = pac_scan(
        &x,
        &[Band::delta(), Band::theta()],
        &[Band::beta(), Band::gamma()],
        &[(0, 0), (1, 1)],
        DEFAULT_PHASE_BINS,
    )?;
    scan.write_csv(std::io::stdout())?;
    Ok(())
}
