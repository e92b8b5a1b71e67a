//! Command-line front end: `gen`, `extract`, `train`, `eval` and `roc`.
//!
//! Settings are resolved in three layers: built-in defaults, then an
//! optional JSON file passed with `--config`, then explicit flags.
//! Exit codes: 0 on success, 1 on internal failure, 2 on invalid input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dataset::{load_manifest, save_pgm, Dataset};
use crate::enhance::{enhance_frame, EnhanceParams};
use crate::error::{Error, Result};
use crate::eval::{
    compare_auc_z, extract_features, roc_with_bootstrap, run_variant_on_features, train_final,
    BagFeatures, CvUnit, ExperimentConfig, ExperimentReport, MilTestRule, Variant, ZTest,
};
use crate::features::{feature_columns, feature_csv, FeatureKind, FeatureVector};
use crate::svm::GridSpec;
use crate::synth::{generate, SynthParams};
use crate::texture::LbpParams;

/// Run settings; the `--config` file uses these field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub enhance: EnhanceParams,
    pub lbp: LbpParams,
    pub frame_count: usize,
    pub variant: Option<String>,
    pub folds: usize,
    pub inner_folds: usize,
    pub grid: GridSpec,
    pub mil_test_rule: MilTestRule,
    pub cv_unit: CvUnit,
    pub bootstrap_iters: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let exp = ExperimentConfig::default();
        Self {
            manifest: None,
            enhance: exp.enhance,
            lbp: exp.lbp,
            frame_count: crate::dataset::DEFAULT_FRAME_COUNT,
            variant: None,
            folds: exp.folds,
            inner_folds: exp.inner_folds,
            grid: exp.grid,
            mil_test_rule: exp.mil_test_rule,
            cv_unit: exp.cv_unit,
            bootstrap_iters: exp.bootstrap_iters,
            seed: 7,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            enhance: self.enhance,
            lbp: self.lbp,
            folds: self.folds,
            inner_folds: self.inner_folds,
            grid: self.grid.clone(),
            mil_test_rule: self.mil_test_rule,
            cv_unit: self.cv_unit,
            bootstrap_iters: self.bootstrap_iters,
            ..ExperimentConfig::default()
        }
    }

    fn manifest(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("no manifest given (--manifest)".into()))
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn variants(&self) -> Result<Vec<Variant>> {
        match self.variant.as_deref() {
            None | Some("all") => Ok(Variant::ALL.to_vec()),
            Some(v) => Ok(vec![v.parse()?]),
        }
    }

    fn load_dataset(&self) -> Result<Dataset> {
        let dataset = load_manifest(self.manifest()?)?;
        if dataset.frame_count != self.frame_count {
            return Err(Error::InvalidParameter(format!(
                "manifest has {} frames per bag, configuration expects {}",
                dataset.frame_count, self.frame_count
            )));
        }
        Ok(dataset)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "thrombus",
    version,
    about = "Thrombus detection in TEE sequences"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus of PGM frames, masks and a manifest.
    Gen(GenArgs),
    /// Enhance frames and write per-frame static and dynamic feature CSVs.
    Extract(RunArgs),
    /// Train a model on every bag of a corpus.
    Train(RunArgs),
    /// Cross-validate one variant (or `all`) and write reports and ROC data.
    Eval(RunArgs),
    /// Recompute ROC points and bootstrap AUC statistics from a report.
    Roc(RocArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Number of thrombus bags.
    #[arg(long, default_value_t = 30)]
    thrombus: usize,
    /// Number of muscle bags.
    #[arg(long, default_value_t = 30)]
    muscle: usize,
    /// Frame width in pixels.
    #[arg(long, default_value_t = 128)]
    width: usize,
    /// Frame height in pixels.
    #[arg(long, default_value_t = 128)]
    height: usize,
    /// Frames per bag.
    #[arg(long, default_value_t = 5)]
    frames: usize,
    /// Multiplicative speckle amplitude.
    #[arg(long, default_value_t = 0.25)]
    speckle: f64,
    /// Horizontal semi-axis of the thrombus mass in pixels.
    #[arg(long, default_value_t = 16.0)]
    blob_a: f64,
    /// Vertical semi-axis of the thrombus mass in pixels.
    #[arg(long, default_value_t = 12.0)]
    blob_b: f64,
    /// Relative frame-to-frame variation.
    #[arg(long, default_value_t = 0.1)]
    jitter: f64,
    /// Share of thrombus bags whose mass shows in only one or two frames.
    #[arg(long, default_value_t = 0.25)]
    partial_fraction: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON file with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory [default: .].
    #[arg(long)]
    out: Option<PathBuf>,
    /// lbpv-vote, lbpvd-vote, lbpvd-mil or all [default: all for eval, lbpvd-mil for train].
    #[arg(long)]
    variant: Option<String>,
    /// Random seed for folds and bootstrap [default: 7].
    #[arg(long)]
    seed: Option<u64>,
    /// Gaussian low-pass width [default: 15].
    #[arg(long)]
    sigma: Option<f64>,
    /// Enhancement gain W [default: 1].
    #[arg(long)]
    w_gain: Option<f64>,
    /// Enhancement width B [default: 50].
    #[arg(long)]
    b_width: Option<f64>,
    /// LBP neighbors P [default: 16].
    #[arg(long)]
    p_neighbors: Option<usize>,
    /// LBP radius R [default: 2].
    #[arg(long)]
    radius: Option<f64>,
    /// Frames per bag M [default: 5].
    #[arg(long)]
    frame_count: Option<usize>,
    /// Outer cross-validation folds k [default: 10].
    #[arg(long)]
    folds: Option<usize>,
    /// Inner grid-search folds [default: 5].
    #[arg(long)]
    inner_folds: Option<usize>,
    /// MIL test rule: farthest or any-positive [default: farthest].
    #[arg(long)]
    mil_test_rule: Option<String>,
    /// Outer split unit: bag or image [default: bag].
    #[arg(long)]
    cv_unit: Option<String>,
    /// Bootstrap iterations for AUC statistics [default: 5000].
    #[arg(long)]
    bootstrap_iters: Option<usize>,
    /// Also write enhanced frames as PGM (extract only).
    #[arg(long)]
    dump_enhanced: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr => $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.manifest.clone().map(Some) => cfg.manifest);
        set!(self.out.clone().map(Some) => cfg.out_dir);
        set!(self.variant.clone().map(Some) => cfg.variant);
        set!(self.seed => cfg.seed);
        set!(self.sigma => cfg.enhance.sigma);
        set!(self.w_gain => cfg.enhance.w_gain);
        set!(self.b_width => cfg.enhance.b_width);
        set!(self.p_neighbors => cfg.lbp.p_neighbors);
        set!(self.radius => cfg.lbp.radius);
        set!(self.frame_count => cfg.frame_count);
        set!(self.folds => cfg.folds);
        set!(self.inner_folds => cfg.inner_folds);
        set!(self.bootstrap_iters => cfg.bootstrap_iters);
        if let Some(rule) = &self.mil_test_rule {
            cfg.mil_test_rule = parse_enum(rule, "mil_test_rule")?;
        }
        if let Some(unit) = &self.cv_unit {
            cfg.cv_unit = parse_enum(unit, "cv_unit")?;
        }
        cfg.experiment().validate()?;
        cfg.variants()?;
        Ok(cfg)
    }
}

fn parse_enum<T: for<'de> Deserialize<'de>>(s: &str, what: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::InvalidParameter(format!("unknown {what} {s:?}")))
}

#[derive(Debug, Args)]
struct RocArgs {
    /// Report JSON written by `eval`.
    #[arg(long)]
    report: PathBuf,
    /// Output CSV [default: roc_<variant>.csv next to the report].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bootstrap iterations.
    #[arg(long, default_value_t = 5000)]
    bootstrap_iters: usize,
    /// Bootstrap seed [default: the report's seed].
    #[arg(long)]
    seed: Option<u64>,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = cli.threads {
        // a pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Extract(a) => a.resolve().and_then(|c| cmd_extract(&c, a.dump_enhanced)),
        Command::Train(a) => a.resolve().and_then(|c| cmd_train(&c)),
        Command::Eval(a) => a.resolve().and_then(|c| cmd_eval(&c)),
        Command::Roc(a) => cmd_roc(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let params = SynthParams {
        n_thrombus: a.thrombus,
        n_muscle: a.muscle,
        width: a.width,
        height: a.height,
        frame_count: a.frames,
        speckle_strength: a.speckle,
        blob_axes: (a.blob_a, a.blob_b),
        temporal_jitter: a.jitter,
        partial_fraction: a.partial_fraction,
        seed: a.seed,
    };
    let path = generate(&params, &a.out)?;
    println!("{}", path.display());
    Ok(())
}

fn features_of(cfg: &RunConfig, dataset: &Dataset) -> Result<Vec<BagFeatures>> {
    extract_features(dataset, &cfg.enhance, &cfg.lbp)
}

fn cmd_extract(cfg: &RunConfig, dump_enhanced: bool) -> Result<()> {
    let dataset = cfg.load_dataset()?;
    let out = cfg.out_dir();
    create_dir(&out)?;
    let features = features_of(cfg, &dataset)?;

    let dynamics: Vec<Vec<FeatureVector>> = features
        .iter()
        .map(|b| Variant::LbpvdVote.instances(&b.statics))
        .collect::<Result<_>>()?;
    let statics: Vec<Vec<FeatureVector>> = features.iter().map(|b| b.statics.clone()).collect();
    for (name, kind, sets) in [
        ("static_features.csv", FeatureKind::Static, &statics),
        ("dynamic_features.csv", FeatureKind::Dynamic, &dynamics),
    ] {
        let csv = feature_csv(
            &feature_columns(kind, &cfg.lbp),
            features
                .iter()
                .zip(sets.iter())
                .flat_map(|(bag, vs)| vs.iter().enumerate().map(|(t, v)| (bag.id.as_str(), t, v))),
        );
        write(&out.join(name), csv)?;
    }

    if dump_enhanced {
        for bag in &dataset.bags {
            let dir = out.join("enhanced").join(&bag.id);
            create_dir(&dir)?;
            for (t, frame) in bag.frames.iter().enumerate() {
                let enhanced = enhance_frame(frame, &cfg.enhance)?;
                save_pgm(enhanced.image(), dir.join(format!("frame_{t}.pgm")))?;
            }
        }
    }
    let frames: usize = statics.iter().map(Vec::len).sum();
    println!(
        "{} bags, {} frames -> {}",
        dataset.len(),
        frames,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    variant: Variant,
    c: f64,
    gamma: f64,
    inner_cv_accuracy: f64,
    support_vectors: usize,
    bags: usize,
    config: &'a RunConfig,
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let variant = match cfg.variant.as_deref() {
        None => Variant::LbpvdMil,
        Some("all") => {
            return Err(Error::InvalidParameter(
                "train takes a single variant".into(),
            ));
        }
        Some(v) => v.parse()?,
    };
    let dataset = cfg.load_dataset()?;
    let out = cfg.out_dir();
    create_dir(&out)?;
    let features = features_of(cfg, &dataset)?;
    let trained = train_final(&features, variant, &cfg.experiment(), cfg.seed)?;

    trained
        .model
        .save(out.join(format!("model_{variant}.txt")))?;
    trained
        .normalizer
        .save(out.join(format!("normalizer_{variant}.csv")))?;
    if let Some(center) = &trained.muscle_center {
        write(
            &out.join(format!("muscle_center_{variant}.json")),
            serde_json::to_string_pretty(center)?,
        )?;
    }
    let summary = TrainSummary {
        variant,
        c: trained.c,
        gamma: trained.gamma,
        inner_cv_accuracy: trained.cv_accuracy,
        support_vectors: trained.model.support_vectors.len(),
        bags: dataset.len(),
        config: cfg,
    };
    write(
        &out.join(format!("train_{variant}.json")),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "{variant}: C = {}, gamma = {}, inner CV accuracy {:.2}%, {} support vectors",
        trained.c,
        trained.gamma,
        100.0 * trained.cv_accuracy,
        summary.support_vectors
    );
    Ok(())
}

#[derive(Serialize)]
struct Comparison {
    a: Variant,
    b: Variant,
    #[serde(flatten)]
    test: ZTest,
}

fn cmd_eval(cfg: &RunConfig) -> Result<()> {
    let dataset = cfg.load_dataset()?;
    let out = cfg.out_dir();
    create_dir(&out)?;
    let features = features_of(cfg, &dataset)?;
    let config = cfg.experiment();

    let mut reports = Vec::new();
    for variant in cfg.variants()? {
        let report = run_variant_on_features(&features, variant, &config, cfg.seed)?;
        write(
            &out.join(format!("report_{variant}.json")),
            serde_json::to_string_pretty(&report)?,
        )?;
        write(&out.join(format!("roc_{variant}.csv")), report.roc.to_csv())?;
        println!("{}", report.summary_line());
        reports.push(report);
    }

    if reports.len() > 1 {
        let labels = reports[0].labels();
        let mut table = Vec::new();
        println!(
            "{:<12} {:<12} {:>8} {:>8} {:>10}",
            "a", "b", "dAUC", "z", "p"
        );
        for i in 0..reports.len() {
            for j in i + 1..reports.len() {
                let (a, b) = (&reports[j], &reports[i]);
                let test = compare_auc_z(
                    &a.scores(),
                    &b.scores(),
                    &labels,
                    cfg.bootstrap_iters,
                    cfg.seed,
                )?;
                println!(
                    "{:<12} {:<12} {:>8.4} {:>8.3} {:>10.4}",
                    a.variant.as_str(),
                    b.variant.as_str(),
                    test.mean_diff,
                    test.z,
                    test.p_two_tailed
                );
                table.push(Comparison {
                    a: a.variant,
                    b: b.variant,
                    test,
                });
            }
        }
        write(
            &out.join("ztest.json"),
            serde_json::to_string_pretty(&table)?,
        )?;
    }
    Ok(())
}

fn cmd_roc(a: &RocArgs) -> Result<()> {
    let text = fs::read_to_string(&a.report).map_err(|e| Error::io(&a.report, e))?;
    let report: ExperimentReport = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: a.report.clone(),
        reason: e.to_string(),
    })?;
    let seed = a.seed.unwrap_or(report.seed);
    let roc = roc_with_bootstrap(&report.scores(), &report.labels(), a.bootstrap_iters, seed)?;
    let out = a.out.clone().unwrap_or_else(|| {
        a.report
            .with_file_name(format!("roc_{}.csv", report.variant))
    });
    write(&out, roc.to_csv())?;
    println!(
        "{}: AUC {:.4}, SE {:.4}, 95% CI {:.4}-{:.4} -> {}",
        report.variant,
        roc.auc,
        roc.bootstrap_se,
        roc.ci95.0,
        roc.ci95.1,
        out.display()
    );
    Ok(())
}
