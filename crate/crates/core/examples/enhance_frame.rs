//! Low-pass filtering and nonlinear contrast gain on one synthetic frame.
//! Writes `raw.pgm`, `smoothed.pgm` and `enhanced.pgm` to the current
//! directory.

use laa_thrombus::dataset::save_pgm;
use laa_thrombus::enhance::{gaussian_lowpass, nonlinear_enhance, EnhanceParams};
use laa_thrombus::synth::{synthesize, SynthParams};
use laa_thrombus::texture::roi_stats;

fn main() -> laa_thrombus::Result<()> {
    let dataset = synthesize(&SynthParams {
        n_thrombus: 1,
        n_muscle: 1,
        ..SynthParams::default()
    })?;
    let params = EnhanceParams::default();
    for bag in &dataset.bags {
        let frame = &bag.frames[0];
        let smoothed = gaussian_lowpass(frame.image(), params.sigma)?;
        let enhanced = nonlinear_enhance(&smoothed, &params)?;
        for (name, img) in [
            ("raw", frame.image()),
            ("smoothed", &smoothed),
            ("enhanced", &enhanced),
        ] {
            let s = roi_stats(img, frame.mask())?;
            println!(
                "{:<14} {name:<9} mean {:>7.2}  std {:>6.2}  entropy {:.3}",
                bag.id, s.mean, s.std_dev, s.entropy
            );
            save_pgm(img, format!("{}_{name}.pgm", bag.id))?;
        }
    }
    Ok(())
}
