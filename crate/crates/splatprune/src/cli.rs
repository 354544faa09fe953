//! Command-line interface: argument parsing, config merging, subcommands,
//! and the exit-code taxonomy (2 input parse, 3 configuration, 4 pipeline,
//! 5 I/O).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use splatprune_core::hsfh::Camera;
use splatprune_core::splat::SplatScene;

use crate::config::{Ablation, PipelineConfig, ScoreBasisArg, ScoreModeArg};
use crate::pipeline::{compute_scores, PipelineError, ScoredScene, StageTiming};
use crate::ply::{load_ply, save_ply, PlyError};
use crate::report::{build_report, render_report};
use crate::synth::{synth_scene, SynthSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse { path: String, source: PlyError },
    #[error("{0}")]
    BadInput(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::BadInput(_) => 2,
            CliError::Config(_) => 3,
            CliError::Pipeline(_) => 4,
            CliError::Io { .. } => 5,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "splatprune",
    version,
    about = "Camera-agnostic one-shot pruning of 3D Gaussian splat scenes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score a scene and remove low-confidence splats in a single pass.
    Prune(PruneArgs),
    /// Score once, then emit one pruned scene per requested ratio.
    Sweep(SweepArgs),
    /// Dump per-voxel descriptors, statistics, and evidence as JSON lines.
    Describe(DescribeArgs),
    /// Generate a labeled synthetic scene.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SharedArgs {
    /// JSON config file mirroring these flags; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Voxel edge as a fraction of the bounding box diagonal. [default: 0.015]
    #[arg(long)]
    pub voxel_frac: Option<f64>,
    /// Neighborhood size over voxel representatives. [default: 16]
    #[arg(long)]
    pub k_neighbors: Option<usize>,
    /// Voxel representatives blended per splat. [default: 4]
    #[arg(long)]
    pub interp_m: Option<usize>,
    /// Appearance histogram bins. [default: 16]
    #[arg(long)]
    pub appearance_bins: Option<usize>,
    /// Uncertainty reward of the optimistic score. [default: 0.25]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Confidence multiplier of the Gaussian lower bound. [default: 1.0]
    #[arg(long)]
    pub z: Option<f64>,
    /// Quantile of the exact lower bound. [default: 0.05]
    #[arg(long)]
    pub q: Option<f64>,
    /// Retention pseudo-count prior. [default: 1.0]
    #[arg(long)]
    pub prior_a: Option<f64>,
    /// Pruning pseudo-count prior. [default: 1.0]
    #[arg(long)]
    pub prior_b: Option<f64>,
    /// Scoring rule. [default: optimistic]
    #[arg(long, value_enum)]
    pub score_mode: Option<ScoreModeArg>,
    /// Whether scores rank retention confidence or pruning probability.
    /// [default: retention]
    #[arg(long, value_enum)]
    pub score_basis: Option<ScoreBasisArg>,
    /// Pipeline variant. [default: full]
    #[arg(long, value_enum)]
    pub ablation: Option<Ablation>,
    /// JSON array of cameras `{center: [x,y,z], forward: [x,y,z]}`;
    /// enables the view-aware descriptor block.
    #[arg(long)]
    pub cameras: Option<PathBuf>,
    /// Worker threads; SPLATPRUNE_THREADS is the fallback.
    /// [default: available cores]
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PruneArgs {
    /// Input splat scene (.ply, binary little-endian).
    #[arg(long)]
    pub input: PathBuf,
    /// Output path for the pruned scene.
    #[arg(long)]
    pub output: PathBuf,
    /// Fraction of splats to remove, in (0, 1). Mutually exclusive with
    /// --tau.
    #[arg(long, conflicts_with = "tau")]
    pub ratio: Option<f64>,
    /// Explicit score threshold. Mutually exclusive with --ratio.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Write a JSON run report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Report stage timings as zero for byte-reproducible reports.
    #[arg(long)]
    pub zero_timings: bool,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Input splat scene (.ply, binary little-endian).
    #[arg(long)]
    pub input: PathBuf,
    /// Output basename; each ratio writes `<stem>_rNN.ply` beside it.
    #[arg(long)]
    pub output: PathBuf,
    /// Removal ratios, comma separated (e.g. 0.1,0.3,0.5).
    #[arg(long, value_delimiter = ',', required = true)]
    pub ratios: Vec<f64>,
    /// Write one JSON report per ratio beside the outputs.
    #[arg(long)]
    pub report: bool,
    /// Report stage timings as zero for byte-reproducible reports.
    #[arg(long)]
    pub zero_timings: bool,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Args, Debug)]
pub struct DescribeArgs {
    /// Input splat scene (.ply, binary little-endian).
    #[arg(long)]
    pub input: PathBuf,
    /// Output path for the JSON lines; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output path for the generated scene.
    #[arg(long)]
    pub output: PathBuf,
    /// Splats tiling the redundant background square. [default: 8000]
    #[arg(long)]
    pub n_plane: Option<usize>,
    /// Splats along the fine-structure curve. [default: 500]
    #[arg(long)]
    pub n_rod: Option<usize>,
    /// Uniform position jitter amplitude. [default: 0.002]
    #[arg(long)]
    pub noise: Option<f64>,
    /// RNG seed. [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the REDUNDANT/FINE label sidecar here.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

/// Parse argv and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Prune(args) => cmd_prune(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Describe(args) => cmd_describe(&args),
        Command::Synth(args) => cmd_synth(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_threads(requested: Option<usize>) -> Result<(), CliError> {
    let n = match requested {
        Some(n) => Some(n),
        None => std::env::var("SPLATPRUNE_THREADS")
            .ok()
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| CliError::Config(format!("SPLATPRUNE_THREADS `{v}` is not a number")))
            })
            .transpose()?,
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // Ignore the error if a pool already exists (tests call run() twice).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Defaults, then the config file, then explicit flags.
fn merge_config(shared: &SharedArgs) -> Result<PipelineConfig, CliError> {
    let mut config = match &shared.config {
        Some(path) => {
            let text = read_file(path)?;
            serde_json::from_str::<PipelineConfig>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(v) = shared.voxel_frac {
        config.voxel_frac = v;
    }
    if let Some(v) = shared.k_neighbors {
        config.k_neighbors = v;
    }
    if let Some(v) = shared.interp_m {
        config.interp_m = v;
    }
    if let Some(v) = shared.appearance_bins {
        config.appearance_bins = v;
    }
    if let Some(v) = shared.gamma {
        config.gamma = v;
    }
    if let Some(v) = shared.z {
        config.z = v;
    }
    if let Some(v) = shared.q {
        config.q = v;
    }
    if let Some(v) = shared.prior_a {
        config.prior_a = v;
    }
    if let Some(v) = shared.prior_b {
        config.prior_b = v;
    }
    if let Some(v) = shared.score_mode {
        config.score_mode = v;
    }
    if let Some(v) = shared.score_basis {
        config.score_basis = v;
    }
    if let Some(v) = shared.ablation {
        config.ablation = v;
    }
    if shared.cameras.is_some() {
        config.with_view_features = true;
    }
    config.validate().map_err(CliError::Config)?;
    Ok(config)
}

#[derive(Debug, Deserialize)]
struct CameraJson {
    center: [f64; 3],
    forward: [f64; 3],
}

fn load_cameras(path: &Path) -> Result<Vec<Camera>, CliError> {
    let text = read_file(path)?;
    let raw: Vec<CameraJson> = serde_json::from_str(&text).map_err(|e| CliError::BadInput(
        format!("{}: {e}", path.display()),
    ))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, c)| {
            let n = (c.forward[0] * c.forward[0]
                + c.forward[1] * c.forward[1]
                + c.forward[2] * c.forward[2])
                .sqrt();
            if n == 0.0 {
                return Err(CliError::BadInput(format!(
                    "{}: camera {i} has a zero forward vector",
                    path.display()
                )));
            }
            Ok(Camera {
                center: c.center,
                forward: [c.forward[0] / n, c.forward[1] / n, c.forward[2] / n],
            })
        })
        .collect()
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_scene(path: &Path) -> Result<SplatScene, CliError> {
    let bytes = read_bytes(path)?;
    let scene = load_ply(&bytes).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    check_finite(&scene, path)?;
    Ok(scene)
}

/// Non-finite values in scored attributes would poison every statistic
/// downstream; reject them up front. Unrecognized extras may hold anything.
fn check_finite(scene: &SplatScene, path: &Path) -> Result<(), CliError> {
    for (i, s) in scene.splats.iter().enumerate() {
        let core_fields = s
            .position
            .iter()
            .chain(&s.scale_log)
            .chain(&s.rotation)
            .chain(std::iter::once(&s.opacity_logit))
            .chain(&s.sh_dc)
            .chain(&s.sh_rest);
        if core_fields.into_iter().any(|v| !v.is_finite()) {
            return Err(CliError::BadInput(format!(
                "{}: splat {i} has a non-finite attribute",
                path.display()
            )));
        }
    }
    Ok(())
}

fn save_scene(scene: &SplatScene, path: &Path) -> Result<(), CliError> {
    let bytes = save_ply(scene).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    write_bytes(path, &bytes)
}

fn zeroed(timings: &[StageTiming], zero: bool) -> Vec<StageTiming> {
    timings
        .iter()
        .map(|t| StageTiming {
            stage: t.stage,
            ms: if zero { 0.0 } else { t.ms },
        })
        .collect()
}

fn validate_threshold(ratio: Option<f64>, tau: Option<f64>) -> Result<(), CliError> {
    match (ratio, tau) {
        (None, None) => Err(CliError::Config(
            "exactly one of --ratio or --tau is required".into(),
        )),
        (Some(r), None) if !(r > 0.0 && r < 1.0) => Err(CliError::Config(format!(
            "--ratio {r} outside the open interval (0, 1)"
        ))),
        _ => Ok(()),
    }
}

fn cmd_prune(args: &PruneArgs) -> Result<(), CliError> {
    validate_threshold(args.ratio, args.tau)?;
    let config = merge_config(&args.shared)?;
    init_threads(args.shared.threads)?;
    let cameras = args
        .shared
        .cameras
        .as_deref()
        .map(load_cameras)
        .transpose()?;

    let scene = load_scene(&args.input)?;
    let (mut scored, result) = crate::pipeline::run_pipeline(
        &scene,
        &config,
        cameras.as_deref(),
        args.ratio,
        args.tau,
    )?;
    let pruned = scene.subset(&result.kept_ids);
    save_scene(&pruned, &args.output)?;

    if let Some(report_path) = &args.report {
        let timings = zeroed(&scored.timings, args.zero_timings);
        scored.timings = timings;
        let report = build_report(
            &result,
            &config,
            &scored.voxel_stats,
            &scene.positions_f64(),
            scored.timings.clone(),
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        write_bytes(report_path, render_report(&report).as_bytes())?;
    }
    Ok(())
}

fn with_suffix(path: &Path, ratio: f64, extension: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let pct = (ratio * 100.0).round() as u32;
    path.with_file_name(format!("{stem}_r{pct:02}.{extension}"))
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    if args.ratios.is_empty() {
        return Err(CliError::Config("--ratios needs at least one value".into()));
    }
    for &r in &args.ratios {
        if !(r > 0.0 && r < 1.0) {
            return Err(CliError::Config(format!(
                "sweep ratio {r} outside the open interval (0, 1)"
            )));
        }
    }
    let mut suffixes = std::collections::HashSet::new();
    for &r in &args.ratios {
        let pct = (r * 100.0).round() as u32;
        if !suffixes.insert(pct) {
            return Err(CliError::Config(format!(
                "sweep ratios collide on the output suffix _r{pct:02}"
            )));
        }
    }
    let config = merge_config(&args.shared)?;
    init_threads(args.shared.threads)?;
    let cameras = args
        .shared
        .cameras
        .as_deref()
        .map(load_cameras)
        .transpose()?;

    let scene = load_scene(&args.input)?;
    // One scoring pass shared by every threshold.
    let scored = compute_scores(&scene, &config, cameras.as_deref())?;
    let original = scene.positions_f64();
    for &ratio in &args.ratios {
        let result = scored.prune_by_ratio(&scene, ratio)?;
        let pruned = scene.subset(&result.kept_ids);
        save_scene(&pruned, &with_suffix(&args.output, ratio, "ply"))?;
        if args.report {
            let report = build_report(
                &result,
                &config,
                &scored.voxel_stats,
                &original,
                zeroed(&scored.timings, args.zero_timings),
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
            write_bytes(
                &with_suffix(&args.output, ratio, "json"),
                render_report(&report).as_bytes(),
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DescribeStats {
    s: f64,
    l: f64,
    o: f64,
    u: f64,
}

#[derive(Serialize)]
struct DescribeEvidence {
    a: f64,
    b: f64,
}

#[derive(Serialize)]
struct DescribeDescriptor<'a> {
    geometric: &'a [f64],
    power_spectrum: &'a [f64],
    appearance_hist: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    view: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct DescribeLine<'a> {
    voxel: usize,
    centroid: [f64; 3],
    member_count: usize,
    stats: DescribeStats,
    evidence: DescribeEvidence,
    descriptor: DescribeDescriptor<'a>,
}

/// Render the per-voxel JSON lines of a scored scene. Shared by the CLI
/// command and the equality tests.
pub fn describe_lines(scored: &ScoredScene) -> Vec<String> {
    let descriptors = scored
        .descriptors
        .as_ref()
        .expect("describe always computes descriptors");
    let evidence = scored
        .voxel_evidence
        .as_ref()
        .expect("describe always accumulates evidence");
    (0..scored.mapping.voxel_count())
        .map(|v| {
            let rec = &scored.mapping.representatives[v];
            let st = &scored.voxel_stats[v];
            let line = DescribeLine {
                voxel: v,
                centroid: rec.centroid,
                member_count: rec.member_count(),
                stats: DescribeStats {
                    s: st.s,
                    l: st.l,
                    o: st.o,
                    u: st.u,
                },
                evidence: DescribeEvidence {
                    a: evidence[v].a,
                    b: evidence[v].b,
                },
                descriptor: DescribeDescriptor {
                    geometric: &descriptors[v].geometric,
                    power_spectrum: &descriptors[v].power_spectrum,
                    appearance_hist: &descriptors[v].appearance_hist,
                    view: descriptors[v].view.as_ref().map(|v| &v[..]),
                },
            };
            serde_json::to_string(&line).expect("describe line serializes")
        })
        .collect()
}

fn cmd_describe(args: &DescribeArgs) -> Result<(), CliError> {
    let mut config = merge_config(&args.shared)?;
    // The debug surface always shows the full machinery.
    config.ablation = Ablation::Full;
    init_threads(args.shared.threads)?;
    let cameras = args
        .shared
        .cameras
        .as_deref()
        .map(load_cameras)
        .transpose()?;

    let scene = load_scene(&args.input)?;
    let scored = compute_scores(&scene, &config, cameras.as_deref())?;
    let lines = describe_lines(&scored);

    match &args.output {
        Some(path) => {
            let mut text = lines.join("\n");
            text.push('\n');
            write_bytes(path, text.as_bytes())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for line in lines {
                writeln!(lock, "{line}").map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })?;
            }
            Ok(())
        }
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = SynthSpec {
        n_plane: args.n_plane.unwrap_or(8000),
        n_rod: args.n_rod.unwrap_or(500),
        noise: args.noise.unwrap_or(0.002),
        seed: args.seed.unwrap_or(0),
    };
    let (scene, labels) = synth_scene(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    save_scene(&scene, &args.output)?;

    if let Some(labels_path) = &args.labels {
        #[derive(Serialize)]
        struct LabelEntry {
            index: usize,
            label: crate::synth::SplatLabel,
        }
        let entries: Vec<LabelEntry> = labels
            .iter()
            .enumerate()
            .map(|(index, &label)| LabelEntry { index, label })
            .collect();
        let text = serde_json::to_string_pretty(&entries).expect("labels serialize");
        write_bytes(labels_path, text.as_bytes())?;
    }
    Ok(())
}
