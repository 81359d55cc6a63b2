use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pbrgen_core::groundtruth::Backend;
use pbrgen_core::metrics::io as evalio;
use pbrgen_core::path::{integrator_benchmark, write_bench_csv, EnvironmentMap, LightingMode, PathConfig};
use pbrgen_core::pipeline::{read_camera_entries, verify_manifest, Manifest, Pipeline, PipelineConfig, Stage};
use pbrgen_core::scene::{load_scene, AccelScene};
use pbrgen_core::Vec3;

#[derive(Parser)]
#[command(name = "pbrgen", version, about = "Synthetic indoor dataset pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct StageArgs {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Restrict to these backends (repeatable).
    #[arg(long, value_parser = parse_backend)]
    backend: Vec<Backend>,
    /// Overwrite artifacts produced under a different config.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of predictions.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of ground truth with matching file names.
    #[arg(long)]
    gt: PathBuf,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Take tolerance / ignore labels from this pipeline config.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Thicken walls, fix windows, insert bulbs.
    Repair(StageArgs),
    /// Sample cameras per room.
    Cameras(StageArgs),
    /// Render color images for every camera and backend.
    Render(StageArgs),
    /// Write ground-truth bundles.
    Gt(StageArgs),
    /// Score bundles against the reference corpus.
    Select(StageArgs),
    /// Per-category pixel statistics over kept bundles.
    Stats(StageArgs),
    /// All stages in order.
    Run(StageArgs),
    /// Normal angular-error metrics.
    EvalNormals(EvalArgs),
    /// Mean IoU over label images.
    EvalSeg {
        #[command(flatten)]
        eval: EvalArgs,
        /// Ground-truth labels to ignore (comma separated).
        #[arg(long, value_delimiter = ',')]
        ignore: Option<Vec<u32>>,
    },
    /// Boundary ODS / OIS / AP / R50.
    EvalBoundary {
        #[command(flatten)]
        eval: EvalArgs,
        /// Match radius as a fraction of the image diagonal.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Summarize the manifest of a pipeline output.
    Manifest {
        #[arg(long)]
        config: PathBuf,
        /// Also re-read every kept bundle.
        #[arg(long)]
        check: bool,
    },
    /// Time and variance of the path tracer over several spp values for one camera.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Scene key (file stem).
        #[arg(long)]
        scene: String,
        #[arg(long, default_value_t = 0)]
        camera: u32,
        #[arg(long, value_delimiter = ',', default_value = "16,64,256")]
        spp: Vec<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_backend(s: &str) -> std::result::Result<Backend, String> {
    s.parse().map_err(|e: pbrgen_core::Error| e.to_string())
}

fn load_config(a: &StageArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if !a.backend.is_empty() {
        cfg.backends = a.backend.clone();
    }
    Ok(cfg)
}

fn run_stages(a: &StageArgs, stage: Option<Stage>) -> Result<ExitCode> {
    let pipeline = Pipeline::new(load_config(a)?, a.force)?;
    let reports = match stage {
        Some(s) => vec![pipeline.run_stage(s)?],
        None => pipeline.full_run()?,
    };
    let mut partial = false;
    for r in &reports {
        println!("{r}");
        partial |= r.is_partial();
    }
    Ok(if partial { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn emit(out: &Option<PathBuf>, csv: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn eval_config(p: &Option<PathBuf>) -> Result<Option<PipelineConfig>> {
    p.as_ref().map(|p| PipelineConfig::load(p).map_err(Into::into)).transpose()
}

fn bench(config: &Path, scene: &str, camera: u32, spp: &[u32], out: &Option<PathBuf>) -> Result<()> {
    let cfg = PipelineConfig::load(config)?;
    let repaired = cfg.output.join("repaired").join(format!("{scene}.json"));
    let cams = read_camera_entries(&cfg.output.join("cameras").join(format!("{scene}.json")))?;
    let Some(entry) = cams.iter().find(|c| c.id == camera) else {
        bail!("scene {scene} has no camera {camera}");
    };
    let mut cam = entry.camera()?;
    cam.width = cfg.render.width;
    cam.height = cfg.render.height;
    let accel = AccelScene::new(load_scene(&repaired)?.scene);
    let env = match &cfg.path.env_map {
        Some(p) => EnvironmentMap::load(p)?,
        None => EnvironmentMap::constant(Vec3::from(cfg.render.sky))?,
    };
    let base = PathConfig {
        mode: LightingMode::IndoorOutdoor,
        seed: cfg.seed,
        ..cfg.path.clone()
    };
    let rows = integrator_benchmark(&accel, &cam, &base, Some(&env), spp)?;
    match out {
        Some(p) => write_bench_csv(p, &rows)?,
        None => print!("{}", pbrgen_core::path::bench_to_csv(&rows)),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Repair(a) => run_stages(&a, Some(Stage::Repair)),
        Command::Cameras(a) => run_stages(&a, Some(Stage::Cameras)),
        Command::Render(a) => run_stages(&a, Some(Stage::Render)),
        Command::Gt(a) => run_stages(&a, Some(Stage::Gt)),
        Command::Select(a) => run_stages(&a, Some(Stage::Select)),
        Command::Stats(a) => run_stages(&a, Some(Stage::Stats)),
        Command::Run(a) => run_stages(&a, None),
        Command::EvalNormals(e) => {
            let r = evalio::evaluate_normals(&e.pred, &e.gt)?;
            let m = r.overall;
            eprintln!(
                "mean {:.3}°  median {:.3}°  <11.25° {:.2}%  <22.5° {:.2}%  <30° {:.2}%  ({} px)",
                m.mean, m.median, m.within[0], m.within[1], m.within[2], m.pixels
            );
            emit(&e.out, &evalio::normals_csv(&r))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::EvalSeg { eval: e, ignore } => {
            let ignore: BTreeSet<u32> = match (ignore, eval_config(&e.config)?) {
                (Some(v), _) => v.into_iter().collect(),
                (None, Some(c)) => c.metrics.ignore_labels.into_iter().collect(),
                (None, None) => BTreeSet::from([0]),
            };
            let m = evalio::evaluate_seg(&e.pred, &e.gt, &ignore)?;
            eprintln!("mean IoU {:.4} over {} classes", m.mean_iou, m.classes.values().filter(|c| c.in_gt).count());
            emit(&e.out, &evalio::seg_csv(&m))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::EvalBoundary { eval: e, tol } => {
            let tol = match (tol, eval_config(&e.config)?) {
                (Some(t), _) => t,
                (None, Some(c)) => c.metrics.boundary_tolerance,
                (None, None) => pbrgen_core::metrics::DEFAULT_TOLERANCE,
            };
            let m = evalio::evaluate_boundaries(&e.pred, &e.gt, tol)?;
            eprintln!(
                "ODS {:.4} (t = {:.2})  OIS {:.4}  AP {:.4}  R50 {:.4}",
                m.ods, m.ods_threshold, m.ois, m.ap, m.r50
            );
            emit(&e.out, &evalio::boundary_csv(&m))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Manifest { config, check } => {
            let cfg = PipelineConfig::load(&config)?;
            let m = Manifest::read(cfg.output.join("manifest.jsonl"))?;
            let frames: Vec<_> = m.frames().collect();
            let kept = frames.iter().filter(|e| e.kept == Some(true)).count();
            println!(
                "{} records, {} frames, {} kept, {} failed",
                m.line_count(),
                frames.len(),
                kept,
                m.failures().count()
            );
            for e in m.failures() {
                println!(
                    "  failed {} {:?} {:?} at {}: {}",
                    e.scene,
                    e.camera,
                    e.backend.map(|b| b.tag()),
                    e.stage,
                    e.error.as_deref().unwrap_or("")
                );
            }
            if check {
                let problems = verify_manifest(&cfg.output)?;
                for p in &problems {
                    println!("  bad bundle {p}");
                }
                if !problems.is_empty() {
                    return Ok(ExitCode::from(2));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            config,
            scene,
            camera,
            spp,
            out,
        } => {
            bench(&config, &scene, camera, &spp, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
