//! Evolutionary dual-frequency coherence between theta and gamma on the
//! phase-amplitude coupling generator (channel 2, whose theta carries the
//! gamma envelope).

use specdep::dualfreq::{evolutionary_dualfreq, DualFreqSmoothing};
use specdep::simulate::{example, ExampleName};

fn main() -> specdep::Result<()> {
    let (x, _) = example(ExampleName::Pac, 4096, 7)?;
    let fs = x.sample_rate_hz();
    let points = [(1, 6.0 / fs), (1, 40.0 / fs), (1, 46.0 / fs)];
    let r = evolutionary_dualfreq(&x, 256, 256, &points, &DualFreqSmoothing::time(2, 128))?;
    for e in r.entries.iter().filter(|e| e.freq_j != e.freq_k).take(12) {
        println!(
            "t {:5}  X{} {:5.1} Hz  X{} {:5.1} Hz  {:.3}",
            e.t,
            e.p,
            e.freq_j * fs,
            e.q,
            e.freq_k * fs,
            e.value
        );
    }
    Ok(())
}
