use std::fmt::{self, Write as _};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use shapematch::bench::synth::{occlusion_pair, planted_pair, translation_pair, write_pairs, SynthPair};
use shapematch::bench::{
    discriminability_from_csvs, evaluate_dataset, load_manifest, pca_rgb, write_curve_svg, write_json,
    write_results_csv, EvalOptions, GRID_POINTS,
};
use shapematch::features::{FusionOptions, LayerSpec, DEFAULT_SIGMA_CENTER, DEFAULT_SIGMA_SURROUND};
use shapematch::matchers::{DimConfig, MatcherKind};
use shapematch::pipeline::{locate, FeatureConfig, PipelineConfig};
use shapematch::tensor::{decode_image, encode_image};
use shapematch::vgg::{forward, load_bundle, TapSite, WeightBundle};
use shapematch::BoundingBox;

const EXIT_ARGUMENT: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "shapematch", version, about = "Template matching in CNN feature spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate one template in a search image.
    Match(MatchArgs),
    /// Evaluate a pair manifest, or summarize result files with --report.
    Eval(EvalArgs),
    /// List a bundle's conv layers, or visualize one layer of an image.
    Inspect(InspectArgs),
    /// Write a seeded synthetic dataset with a manifest.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureMode {
    ColorDog,
    Deep,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "color-dog")]
    features: FeatureMode,
    /// Weight bundle directory (deep features).
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Comma-separated conv layers, e.g. conv1_2,conv4_1,conv4_4.
    #[arg(long, conflicts_with = "preset")]
    layers: Option<String>,
    /// bbs-best or ktm-best.
    #[arg(long)]
    preset: Option<String>,
    /// Read taps after the rectifier instead of before.
    #[arg(long)]
    post_relu: bool,
    /// Skip positive/negative splitting of fused deep features.
    #[arg(long)]
    no_split: bool,
    #[arg(long, default_value = "zncc")]
    matcher: String,
    #[arg(long)]
    dim_iters: Option<usize>,
    #[arg(long)]
    dim_eps1: Option<f64>,
    #[arg(long)]
    dim_eps2: Option<f64>,
    #[arg(long)]
    dim_extras: Option<usize>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Recorded in run metadata.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    template: PathBuf,
    /// Template box in the template image as x,y,w,h.
    #[arg(long = "box")]
    template_box: String,
    /// Search image; defaults to the template image.
    #[arg(long)]
    search: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Discriminability,
}

#[derive(Args)]
struct EvalArgs {
    /// A manifest, or with --report two or more results CSVs.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    report: Option<ReportKind>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Record per-pair wall time in the ms column.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Image whose layer activations are visualized.
    #[arg(long, requires = "layer")]
    image: Option<PathBuf>,
    #[arg(long, requires = "image")]
    layer: Option<String>,
    #[arg(long)]
    post_relu: bool,
    #[arg(long, default_value = "pca.png")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Planted,
    Translation,
    Occlusion,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "translation")]
    kind: SynthKind,
    #[arg(long, default_value_t = 10)]
    pairs: usize,
    #[arg(long, default_value_t = 96)]
    width: usize,
    #[arg(long, default_value_t = 80)]
    height: usize,
    #[arg(long, default_value_t = 16)]
    patch_width: usize,
    #[arg(long, default_value_t = 16)]
    patch_height: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Argument(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Argument(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<shapematch::Error> for CliError {
    fn from(e: shapematch::Error) -> Self {
        if e.is_argument() {
            CliError::Argument(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn arg_error(msg: impl Into<String>) -> CliError {
    CliError::Argument(msg.into())
}

fn parse_box(s: &str) -> CliResult<BoundingBox> {
    let parts: Vec<i64> = s
        .split(',')
        .map(|p| p.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| arg_error(format!("box '{s}' is not x,y,w,h")))?;
    let v: [i64; 4] = parts
        .try_into()
        .map_err(|_| arg_error(format!("box '{s}' is not x,y,w,h")))?;
    Ok(BoundingBox::from_xywh(v)?)
}

fn open_bundle(path: &Path) -> CliResult<WeightBundle> {
    if !path.exists() {
        return Err(arg_error(format!("bundle {} does not exist", path.display())));
    }
    Ok(load_bundle(path)?)
}

struct Resolved {
    config: PipelineConfig,
    bundle: Option<WeightBundle>,
}

impl RunArgs {
    fn resolve(&self) -> CliResult<Resolved> {
        let mut dim = DimConfig::default();
        if let Some(v) = self.dim_iters {
            dim.iterations = v;
        }
        if let Some(v) = self.dim_eps1 {
            dim.eps1 = v;
        }
        if let Some(v) = self.dim_eps2 {
            dim.eps2 = v;
        }
        if let Some(v) = self.dim_extras {
            dim.n_extra_templates = v;
        }
        dim.validate()?;
        let matcher: MatcherKind = self.matcher.parse()?;
        let (features, bundle) = match self.features {
            FeatureMode::ColorDog => {
                if self.layers.is_some() || self.preset.is_some() {
                    return Err(arg_error("--layers and --preset need --features deep"));
                }
                let features = FeatureConfig::ColorDog {
                    sigma_center: DEFAULT_SIGMA_CENTER,
                    sigma_surround: DEFAULT_SIGMA_SURROUND,
                };
                (features, None)
            }
            FeatureMode::Deep => {
                let path = self
                    .bundle
                    .as_deref()
                    .ok_or_else(|| arg_error("--features deep needs --bundle"))?;
                let layers = match (&self.layers, &self.preset) {
                    (Some(l), None) => l.parse::<LayerSpec>()?,
                    (None, Some(p)) => LayerSpec::preset(p)?,
                    (None, None) => LayerSpec::preset("bbs-best")?,
                    (Some(_), Some(_)) => return Err(arg_error("--layers and --preset are exclusive")),
                };
                let fusion = FusionOptions {
                    site: if self.post_relu { TapSite::PostRelu } else { TapSite::PreRelu },
                    split: !self.no_split,
                };
                let bundle = open_bundle(path)?;
                for name in layers.layers() {
                    bundle.layer_scale(name)?;
                }
                (FeatureConfig::Deep { layers, fusion }, Some(bundle))
            }
        };
        Ok(Resolved {
            config: PipelineConfig { features, matcher, dim },
            bundle,
        })
    }
}

fn run_metadata(command: &str, args: &RunArgs, r: &Resolved) -> serde_json::Map<String, Value> {
    let layers = match &r.config.features {
        FeatureConfig::Deep { layers, .. } => json!(layers.layers()),
        FeatureConfig::ColorDog { .. } => Value::Null,
    };
    let mut m = serde_json::Map::new();
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m.insert("config".into(), serde_json::to_value(&r.config).expect("config serializes"));
    m.insert("layers".into(), layers);
    m.insert("bundle".into(), json!(r.bundle.as_ref().map(|b| b.name())));
    m.insert("bundle_checksum".into(), json!(r.bundle.as_ref().map(|b| b.checksum())));
    m.insert("seed".into(), json!(args.seed));
    m.insert("workers".into(), json!(args.workers));
    m
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn cmd_match(a: &MatchArgs) -> CliResult<()> {
    let resolved = a.run.resolve()?;
    let template_box = parse_box(&a.template_box)?;
    let template = decode_image(&a.template)?;
    let search = match &a.search {
        Some(p) => decode_image(p)?,
        None => template.clone(),
    };
    let pool = rayon_pool(a.run.workers)?;
    let outcome = pool.install(|| {
        locate(&template, &search, template_box, &resolved.config, resolved.bundle.as_ref())
    })?;
    create_dir(&a.out)?;
    outcome.similarity.write_heatmap(a.out.join("heatmap.png"))?;
    let mut meta = run_metadata("match", &a.run, &resolved);
    meta.insert("template_box".into(), json!(template_box));
    meta.insert("predicted_box".into(), json!(outcome.predicted));
    write_json(a.out.join("run.json"), &meta)?;
    println!("box={}", outcome.predicted);
    Ok(())
}

fn rayon_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| arg_error(format!("cannot start {workers} workers: {e}")))
}

fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    if let Some(ReportKind::Discriminability) = a.report {
        return cmd_report(a);
    }
    let [manifest] = a.inputs.as_slice() else {
        return Err(arg_error("eval takes one manifest (use --report for result files)"));
    };
    let resolved = a.run.resolve()?;
    let pairs = load_manifest(manifest)?;
    let eval = evaluate_dataset(
        &pairs,
        &resolved.config,
        resolved.bundle.as_ref(),
        EvalOptions { workers: a.run.workers },
    )?;
    create_dir(&a.out)?;
    write_results_csv(a.out.join("results.csv"), &eval.records, a.timing)?;
    let label = resolved.config.matcher.to_string();
    write_curve_svg(a.out.join("curve.svg"), &eval.curve, &label)?;
    let failures: Vec<Value> = eval
        .failures()
        .map(|r| json!({"id": r.id, "error": r.error}))
        .collect();
    for f in &failures {
        eprintln!("pair {} failed: {}", f["id"].as_str().unwrap_or(""), f["error"].as_str().unwrap_or(""));
    }
    let mut meta = run_metadata("eval", &a.run, &resolved);
    meta.insert("manifest".into(), json!(manifest));
    meta.insert(
        "grid".into(),
        json!({"start": 0.0, "stop": 1.0, "step": 0.01, "points": GRID_POINTS, "success": "iou > threshold"}),
    );
    meta.insert("pairs".into(), json!(eval.records.len()));
    meta.insert("failures".into(), json!(failures));
    meta.insert("auc".into(), json!(eval.curve.auc));
    write_json(a.out.join("run.json"), &meta)?;
    println!("AUC={:.6}", eval.curve.auc);
    Ok(())
}

fn cmd_report(a: &EvalArgs) -> CliResult<()> {
    if a.inputs.len() < 2 {
        return Err(arg_error("--report discriminability needs at least 2 result files"));
    }
    for p in &a.inputs {
        if !p.is_file() {
            return Err(CliError::Io(format!("{}: no such results file", p.display())));
        }
    }
    let report = discriminability_from_csvs(&a.inputs)?;
    create_dir(&a.out)?;
    let path = a.out.join("discriminability.json");
    write_json(&path, &report)?;
    let c = report.counts;
    println!(
        "all-fail={} all-succeed={} similar={} discriminative={}",
        c.all_fail, c.all_succeed, c.similar, c.discriminative
    );
    Ok(())
}

fn cmd_inspect(a: &InspectArgs) -> CliResult<()> {
    let bundle = open_bundle(&a.bundle)?;
    let (Some(image), Some(layer)) = (&a.image, &a.layer) else {
        let mut table = format!("{} ({})\n{:<10} {:>8} {:>6}\n", bundle.name(), bundle.checksum(), "layer", "channels", "scale");
        for l in bundle.conv_layers() {
            let _ = writeln!(table, "{:<10} {:>8} {:>6}", l.def.name, l.def.out_channels, l.scale.to_string());
        }
        let _ = io::stdout().write_all(table.as_bytes());
        return Ok(());
    };
    bundle.layer_scale(layer)?;
    let img = decode_image(image)?;
    let tap = forward(&bundle, &img, &[layer.as_str()])?
        .pop()
        .ok_or_else(|| arg_error(format!("no tap for {layer}")))?;
    let features = if a.post_relu { &tap.post_relu } else { &tap.pre_relu };
    let rgb = pca_rgb(features)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    encode_image(&rgb, &a.out)?;
    println!("{} {}x{} scale {} -> {}", layer, rgb.width(), rgb.height(), tap.scale, a.out.display());
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let size = (a.width, a.height);
    let patch = (a.patch_width, a.patch_height);
    let pairs = (0..a.pairs)
        .map(|i| {
            let id = format!("pair{i:04}");
            match a.kind {
                SynthKind::Planted => planted_pair(&mut rng, id, size, patch),
                SynthKind::Translation => translation_pair(&mut rng, id, size, patch),
                SynthKind::Occlusion => occlusion_pair(&mut rng, id, size, patch),
            }
        })
        .collect::<Result<Vec<SynthPair>, _>>()?;
    if pairs.is_empty() {
        return Err(arg_error("--pairs must be at least 1"));
    }
    let manifest = write_pairs(&a.out, &pairs)?;
    println!("{}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Match(a) => cmd_match(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Argument(_) => EXIT_ARGUMENT,
                CliError::Io(_) => EXIT_IO,
            })
        }
    }
}
