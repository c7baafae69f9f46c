//! Sliding-window coherence on a series whose coupling switches on halfway.

use specdep::coherence::tv_coherence;
use specdep::series::MultiChannelSeries;
use specdep::simulate::{example, ExampleName};
use specdep::spectrum::SmoothingKernel;

fn main() -> specdep::Result<()> {
    let (a, _) = example(ExampleName::Contemporaneous, 4096, 5)?;
    let (b, _) = example(ExampleName::Contemporaneous, 4096, 6)?;
    // first half: channel 2 from an independent draw; second half: coupled
    let x1: Vec<f64> = a.channel(0).iter().chain(a.channel(0)).copied().collect();
    let x2: Vec<f64> = b.channel(1).iter().chain(a.channel(1)).copied().collect();
    let x = MultiChannelSeries::from_channels(vec![x1, x2], 128.0)?;

    let r = tv_coherence(&x, 512, 512, &SmoothingKernel::daniell(8))?;
    for (u, v) in r.centers.iter().zip(r.track(0, 1, 40.0 / 128.0)) {
        println!("u = {u:.3}  gamma coherence {v:.3}");
    }
    Ok(())
}
