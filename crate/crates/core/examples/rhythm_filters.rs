//! Split a simulated two-channel recording into the five standard rhythms and
//! report how much variance lands in each band.

use specdep::filters::decompose_rhythms;
use specdep::simulate::{example, ExampleName};

fn main() -> specdep::Result<()> {
    let (x, truth) = example(ExampleName::Contemporaneous, 4096, 1)?;
    println!("{}", truth.notes);
    for r in decompose_rhythms(&x, None)? {
        let var: Vec<String> = r
            .series
            .channels()
            .iter()
            .map(|c| format!("{:8.4}", c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64))
            .collect();
        println!(
            "{:>6} {:5.1}-{:5.1} Hz  taps {:3}  variance {}",
            r.band.name,
            r.band.low_hz,
            r.band.high_hz,
            r.filter.coeffs().len(),
            var.join(" ")
        );
    }
    Ok(())
}
