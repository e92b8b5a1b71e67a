//! Writes a synthetic corpus (PGM frames, masks, manifest) to a directory.
//!
//! ```text
//! cargo run --example generate_corpus -- /tmp/laa-corpus
//! ```

use laa_thrombus::dataset::load_manifest;
use laa_thrombus::synth::{generate, SynthParams};
use laa_thrombus::Label;

fn main() -> laa_thrombus::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "laa-corpus".into());
    let manifest = generate(&SynthParams::default(), &out)?;
    let dataset = load_manifest(&manifest)?;
    println!(
        "{}: {} thrombus and {} muscle bags of {} frames",
        manifest.display(),
        dataset.count_label(Label::Thrombus),
        dataset.count_label(Label::Muscle),
        dataset.frame_count
    );
    Ok(())
}
