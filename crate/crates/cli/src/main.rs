use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use factor_graph::SolveOptions;
use perception::Intrinsics;
use quadric_core::QuadricClass;
use slam_pipeline::{
    export_map, export_reconstruction, export_trajectory, run_sequence, ColorMode, PipelineConfig,
};
use synth_bench::{run_batch, run_rendered, runtime_report, Metrics, SceneSpec};

#[derive(Parser)]
#[command(name = "quadric-slam", version, about = "Quadric landmark SLAM on RGB-D sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline over a TUM-style RGB-D sequence.
    Run {
        /// Sequence directory with `associations.txt` or `depth.txt`.
        #[arg(long)]
        dataset: PathBuf,
        /// Key-value configuration file; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        max_frames: Option<usize>,
        /// Write the promoted landmarks in the quadric text format.
        #[arg(long)]
        export_map: Option<PathBuf>,
        /// Write the trajectory as `t tx ty tz qx qy qz qw` lines.
        #[arg(long)]
        export_traj: Option<PathBuf>,
        /// Write the reconstructed surface points as a PLY file.
        #[arg(long)]
        export_cloud: Option<PathBuf>,
        /// Colour reconstructed points from the RGB images instead of one
        /// random colour per landmark.
        #[arg(long)]
        image_colors: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the synthetic benchmark and print its metrics.
    Synth {
        /// Scene description; the built-in scene is used when omitted.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds to run, starting at `--seed`.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Also render every frame and run the depth pipeline, reporting
        /// per-stage runtimes.
        #[arg(long)]
        rendered: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Lines,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command.execute() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

impl Command {
    fn execute(self) -> Result<()> {
        match self {
            Command::Run {
                dataset,
                config,
                max_frames,
                export_map: map_path,
                export_traj,
                export_cloud,
                image_colors,
                seed,
            } => {
                let mut cfg = match &config {
                    Some(path) => PipelineConfig::from_file(path)
                        .with_context(|| format!("reading config {}", path.display()))?,
                    None => PipelineConfig::default(),
                };
                if let Some(seed) = seed {
                    cfg.seed = seed;
                }
                let pipeline = run_sequence(&dataset, cfg.clone(), max_frames, |r| {
                    log::info!(
                        "frame {}: {} detections, {} promoted, {} solver iterations{}",
                        r.index,
                        r.associations.len(),
                        r.promoted.len(),
                        r.solve.iterations,
                        if r.dropped { ", odometry dropped" } else { "" }
                    );
                })
                .with_context(|| format!("processing {}", dataset.display()))?;

                let mut by_class: BTreeMap<&str, usize> = BTreeMap::new();
                for lm in pipeline.promoted_landmarks() {
                    *by_class.entry(lm.quadric.class().name()).or_default() += 1;
                }
                println!("frames {}", pipeline.frames().len());
                for class in QuadricClass::ALL {
                    println!("landmarks_{} {}", class.name(), by_class.get(class.name()).unwrap_or(&0));
                }
                print!("{}", runtime_report(pipeline.timings()).format_table());

                if let Some(path) = map_path {
                    export_map(&pipeline, &path).with_context(|| format!("writing {}", path.display()))?;
                }
                if let Some(path) = export_traj {
                    export_trajectory(&pipeline, &path)
                        .with_context(|| format!("writing {}", path.display()))?;
                }
                if let Some(path) = export_cloud {
                    let mode = if image_colors {
                        ColorMode::Image
                    } else {
                        ColorMode::Random { seed: cfg.seed }
                    };
                    export_reconstruction(&pipeline, &path, mode)
                        .with_context(|| format!("writing {}", path.display()))?;
                }
                Ok(())
            }
            Command::Synth {
                scene,
                seed,
                seeds,
                rendered,
                format,
            } => {
                if seeds == 0 {
                    bail!("--seeds must be at least 1");
                }
                let base = match &scene {
                    Some(path) => {
                        let text = std::fs::read_to_string(path)
                            .with_context(|| format!("reading {}", path.display()))?;
                        Some(SceneSpec::parse(&text).with_context(|| format!("parsing {}", path.display()))?)
                    }
                    None => None,
                };
                for s in seed..seed + seeds {
                    let spec = match &base {
                        Some(b) => SceneSpec { seed: s, ..b.clone() },
                        None => SceneSpec::default_scene(s),
                    };
                    let result = run_batch(&spec, &SolveOptions::default())?;
                    let mut metrics = Metrics::default();
                    metrics.push("seed", s as f64);
                    metrics.push("iterations", result.report.iterations as f64);
                    metrics.push("ate_dead_reckoning", result.ate_dead_reckoning);
                    metrics.push("ate_optimised", result.ate_optimised);
                    metrics.push("ate_ratio", result.ate_optimised / result.ate_dead_reckoning);
                    for (l, e) in result.quadric_errors.iter().enumerate() {
                        if let Some(e) = e {
                            metrics.push(format!("quadric_error_{l}"), *e);
                        }
                    }
                    match format {
                        Format::Table => println!("{}", metrics.format_table()),
                        Format::Lines => print!("{}", metrics.format_lines()),
                    }
                    if rendered {
                        let pipeline = run_rendered(&spec, PipelineConfig::default(), &Intrinsics::tum_freiburg2())?;
                        let report = runtime_report(pipeline.timings());
                        match format {
                            Format::Table => println!("{}", report.format_table()),
                            Format::Lines => print!("{}", report.format_lines()),
                        }
                    }
                }
                Ok(())
            }
        }
    }
}
