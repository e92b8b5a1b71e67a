//! LBPV histograms of an enhanced thrombus frame and an enhanced muscle
//! frame, printed side by side.

use laa_thrombus::enhance::{enhance_frame, EnhanceParams};
use laa_thrombus::synth::{synthesize, SynthParams};
use laa_thrombus::texture::{lbpv_histogram, LbpParams};

fn main() -> laa_thrombus::Result<()> {
    let dataset = synthesize(&SynthParams {
        n_thrombus: 1,
        n_muscle: 1,
        ..SynthParams::default()
    })?;
    let lbp = LbpParams::default();
    let hists = dataset
        .bags
        .iter()
        .map(|bag| {
            let frame = enhance_frame(&bag.frames[0], &EnhanceParams::default())?;
            lbpv_histogram(frame.image(), frame.mask(), &lbp)
        })
        .collect::<laa_thrombus::Result<Vec<_>>>()?;

    println!(
        "{:>4} {:>14} {:>14}",
        "bin", dataset.bags[0].id, dataset.bags[1].id
    );
    for k in 0..lbp.bins() {
        let label = if k == lbp.bins() - 1 {
            "nu".to_string()
        } else {
            k.to_string()
        };
        println!(
            "{label:>4} {:>14.1} {:>14.1}",
            hists[0].bins[k], hists[1].bins[k]
        );
    }
    println!(
        "{:>4} {:>14.1} {:>14.1}",
        "sum",
        hists[0].total(),
        hists[1].total()
    );
    Ok(())
}
