mod overlay;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use courtprior::court::{detect_court_detailed, CropMode, CropParams};
use courtprior::pipeline::{
    compute_stats, export_roi, project_back_predictions, read_json, run_pipeline, validate_file,
    write_json, AugmentConfig, DirSink, DirSource, RectTable, RunManifest,
};
use courtprior::{coco, Error, ImageBuffer};
use serde_json::json;

const EXIT_FINDINGS: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(
    name = "courtprior",
    version,
    about = "Court-aware cropping and copy-paste augmentation for COCO datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect the court rectangle in one image and print it as JSON.
    DetectCourt {
        image: PathBuf,
        #[arg(long, default_value = "as-written")]
        mode: CropMode,
        /// Optional config file for the `[crop]` settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the image with segments, hull box and crop drawn on it.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Crop every image to its court (no augmentation) and write a rect table.
    Crop(RunArgs),
    /// Full pipeline: detect, crop, duplicate and augment.
    Augment(RunArgs),
    /// Crop-area statistics from one or more run manifests.
    Stats {
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
        /// Group by this pattern over source file names (first capture group).
        #[arg(long)]
        group_regex: Option<String>,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Map predictions on cropped images back to original image coordinates.
    ProjectBack {
        #[arg(long)]
        rects: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Check a COCO file against every dataset invariant.
    Validate { dataset: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    img_dir: PathBuf,
    /// Defaults to `[run] output_dir` from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `[run] workers`.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_IO,
    }
}

fn load_config(path: Option<&Path>) -> courtprior::Result<AugmentConfig> {
    match path {
        Some(p) => AugmentConfig::load(p),
        None => Ok(AugmentConfig::default()),
    }
}

fn run(command: Command) -> courtprior::Result<u8> {
    match command {
        Command::DetectCourt {
            image,
            mode,
            config,
            overlay,
        } => {
            let params = CropParams {
                mode,
                ..load_config(config.as_deref())?.crop
            };
            let img = ImageBuffer::load_rgb(&image)?;
            let det = detect_court_detailed(&img, &params)?;
            if let Some(out) = overlay {
                overlay::draw(&img, &det)?.save_png(&out)?;
            }
            let report = json!({
                "image": image,
                "width": img.width(),
                "height": img.height(),
                "mode": mode,
                "rect": det.rect,
                "crop_area_ratio": det.rect.area() as f64 / (img.width() as f64 * img.height() as f64),
                "fallback": det.fallback,
                "static_bounds": det.bounds.rect(),
                "hull_bbox": det.hull_bbox,
                "segments": det.segments.len(),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        Command::Crop(args) => {
            let start = Instant::now();
            let (config, ds, out_dir) = prepare_run(&args)?;
            let sink = DirSink::new(out_dir.join("images"))?;
            let export = export_roi(&ds, &config, &DirSource::new(&args.img_dir), &sink)?;
            std::fs::write(
                out_dir.join("annotations.json"),
                coco::serialize_coco(&export.dataset)?,
            )
            .map_err(|e| io_error(&out_dir, e))?;
            write_json(&out_dir.join("rects.json"), &export.rects)?;
            if !export.skipped.is_empty() {
                write_json(&out_dir.join("skipped.json"), &export.skipped)?;
            }
            write_timing(&out_dir, start, export.rects.entries.len())?;
            eprintln!(
                "cropped {} images ({} skipped) into {}",
                export.rects.entries.len(),
                export.skipped.len(),
                out_dir.display()
            );
            Ok(0)
        }
        Command::Augment(args) => {
            let start = Instant::now();
            let (config, ds, out_dir) = prepare_run(&args)?;
            let sink = DirSink::new(out_dir.join("images"))?;
            let out = run_pipeline(&config, &ds, &DirSource::new(&args.img_dir), &sink)?;
            out.write(&out_dir)?;
            write_timing(&out_dir, start, out.manifest.records.len())?;
            eprintln!(
                "wrote {} images ({} sources skipped) into {}",
                out.manifest.records.len(),
                out.manifest.skipped.len(),
                out_dir.display()
            );
            Ok(0)
        }
        Command::Stats {
            manifests,
            group_regex,
            json,
        } => {
            let re = group_regex.map(|r| regex_arg(&r)).transpose()?;
            let loaded = manifests
                .iter()
                .map(|p| read_json::<RunManifest>(p))
                .collect::<courtprior::Result<Vec<_>>>()?;
            let report = compute_stats(&loaded, re.as_ref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
            Ok(0)
        }
        Command::ProjectBack {
            rects,
            input,
            output,
        } => {
            let table: RectTable = read_json(&rects)?;
            let preds: serde_json::Value = read_json(&input)?;
            write_json(&output, &project_back_predictions(preds, &table)?)?;
            Ok(0)
        }
        Command::Validate { dataset } => {
            let findings = validate_file(&dataset)?;
            for f in &findings {
                println!("{f}");
            }
            if findings.is_empty() {
                eprintln!("{}: ok", dataset.display());
                Ok(0)
            } else {
                eprintln!("{}: {} finding(s)", dataset.display(), findings.len());
                Ok(EXIT_FINDINGS)
            }
        }
    }
}

fn regex_arg(pattern: &str) -> courtprior::Result<regex::Regex> {
    regex::Regex::new(pattern)
        .map_err(|e| Error::Config(format!("bad --group-regex {pattern:?}: {e}")))
}

fn prepare_run(args: &RunArgs) -> courtprior::Result<(AugmentConfig, coco::CocoDataset, PathBuf)> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.run.workers = workers;
    }
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| config.run.output_dir.clone())
        .ok_or_else(|| {
            Error::Config("no output directory: pass --out-dir or set [run] output_dir".into())
        })?;
    let bytes = std::fs::read(&args.input).map_err(|e| io_error(&args.input, e))?;
    let ds = coco::parse_coco(&bytes)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| io_error(&out_dir, e))?;
    Ok((config, ds, out_dir))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Wall time lives outside the manifest so that reruns stay byte-identical.
fn write_timing(out_dir: &Path, start: Instant, outputs: usize) -> courtprior::Result<()> {
    write_json(
        &out_dir.join("timing.json"),
        &json!({
            "wall_time_s": start.elapsed().as_secs_f64(),
            "outputs": outputs,
        }),
    )
}
