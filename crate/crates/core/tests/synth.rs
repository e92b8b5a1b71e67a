use laa_thrombus::dataset::load_manifest;
use laa_thrombus::eval::{extract_features, ExperimentConfig, Variant};
use laa_thrombus::synth::{generate, synthesize, SynthParams};
use laa_thrombus::Label;
use statrs::distribution::{ContinuousCDF, Normal};

/// One-sided Mann-Whitney U test that `a` tends to exceed `b`, normal
/// approximation with tie correction.
fn mann_whitney_greater(a: &[f64], b: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = a
        .iter()
        .map(|v| (*v, true))
        .chain(b.iter().map(|v| (*v, false)))
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for r in &mut ranks[i..=j] {
            *r = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let r1: f64 = all
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| x.1)
        .map(|(_, r)| r)
        .sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n1 + n2 + 1.0) - tie_term / ((n1 + n2) * (n1 + n2 - 1.0)));
    1.0 - Normal::standard().cdf((u - mean) / var.sqrt())
}

#[test]
fn muscle_bags_vary_more_than_thrombus_bags() {
    let dataset = synthesize(&SynthParams::default()).unwrap();
    let config = ExperimentConfig::default();
    let features = extract_features(&dataset, &config.enhance, &config.lbp).unwrap();
    let half = features[0].statics[0].len();

    let magnitude = |label: Label| -> Vec<f64> {
        features
            .iter()
            .filter(|b| b.label == label)
            .map(|b| {
                let dynamic = Variant::LbpvdMil.instances(&b.statics).unwrap();
                dynamic
                    .iter()
                    .map(|v| v.values[half..].iter().map(|x| x * x).sum::<f64>().sqrt())
                    .sum::<f64>()
                    / dynamic.len() as f64
            })
            .collect()
    };
    let muscle = magnitude(Label::Muscle);
    let thrombus = magnitude(Label::Thrombus);
    assert_eq!((muscle.len(), thrombus.len()), (30, 30));
    let p = mann_whitney_greater(&muscle, &thrombus);
    assert!(p < 0.01, "p = {p}");
}

#[test]
fn generated_corpus_counts_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let params = SynthParams {
        width: 64,
        height: 64,
        ..SynthParams::default()
    };
    let manifest = generate(&params, a.path()).unwrap();
    generate(&params, b.path()).unwrap();

    let dataset = load_manifest(&manifest).unwrap();
    assert_eq!(dataset.len(), 60);
    assert_eq!(
        dataset.bags.iter().map(|b| b.frames.len()).sum::<usize>(),
        300
    );

    let mut frames = 0;
    let mut masks = 0;
    for entry in walk(a.path()) {
        let name = entry.file_name().unwrap().to_string_lossy().to_string();
        frames += usize::from(name.starts_with("frame_"));
        masks += usize::from(name.starts_with("mask_"));
        let twin = b.path().join(entry.strip_prefix(a.path()).unwrap());
        assert_eq!(
            std::fs::read(&entry).unwrap(),
            std::fs::read(&twin).unwrap(),
            "{}",
            entry.display()
        );
    }
    assert_eq!((frames, masks), (300, 300));
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}
