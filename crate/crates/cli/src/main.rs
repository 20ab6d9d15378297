//! `wxrclean` — command-line driver for the radar artifact pipeline.
//!
//! Subcommands mirror the pipeline stages: `synth` writes a reproducible
//! synthetic scene, `texture-train`/`texture-loocv` build and validate a
//! texture library, `detect` fuses texture and geometric evidence into an
//! artifact mask, `shadow-sum`/`shadow-derive` produce shadow sectors from a
//! frame archive, `correct` fills masked pixels from satellite data,
//! `eval-regions` scores correction quality on carved regions, and `render`
//! draws frames and masks as portable pixmaps.
//!
//! Exit codes: 0 on success, 1 on domain/data errors, 2 on usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wxrclean_core::io::{
    read_frame, read_mask, read_msg, read_sum, write_frame, write_library_index, write_mask,
    write_msg, write_sectors, write_sum, LibraryIndexEntry,
};
use wxrclean_core::texture::loocv;
use wxrclean_core::{
    accumulate_sum, build_artifact_mask, build_gabor_bank, correct_frame, derive_shadow_sectors,
    simulate_region_eval, synth_scene, within_one, clean_frame_at, CorrectionConfig,
    DetectionConfig, Error, FrameHistory, RadarFrame, RadarStationConfig, ReflectivityScale,
    RegionSize, Result, SyntheticSceneConfig, TextureClass, TextureLibrary,
};

#[derive(Parser)]
#[command(name = "wxrclean", version, about = "Radar artifact detection and correction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a reproducible synthetic scene into a directory.
    Synth(SynthArgs),
    /// Build a texture library index from a directory of labelled patches.
    TextureTrain(TextureTrainArgs),
    /// Leave-one-out cross-validation of a texture library.
    TextureLoocv(TextureLoocvArgs),
    /// Detect artifact pixels in a frame, with optional predecessors.
    Detect(DetectArgs),
    /// Accumulate a directory of frames into a precipitation-sum image.
    ShadowSum(ShadowSumArgs),
    /// Derive shadow sectors from a precipitation sum.
    ShadowDerive(ShadowDeriveArgs),
    /// Fill masked pixels from co-registered satellite data.
    Correct(CorrectArgs),
    /// Score correction quality on carved regions of known truth.
    EvalRegions(EvalRegionsArgs),
    /// Render a frame or mask to a PGM/PPM image.
    Render(RenderArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scene configuration JSON; defaults apply where absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct TextureTrainArgs {
    /// Directory of `.wxr` patches named `artifact_*` or `precipitation_*`.
    patch_dir: PathBuf,
    /// Library index file to write.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct TextureLoocvArgs {
    /// Library index file.
    library: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// Current radar frame.
    current: PathBuf,
    /// Predecessor frames (up to two; order does not matter).
    #[arg(long = "prev")]
    prev: Vec<PathBuf>,
    /// Texture library index.
    #[arg(long)]
    library: PathBuf,
    /// Station list JSON.
    #[arg(long)]
    stations: PathBuf,
    /// Detection configuration JSON; defaults apply where absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured texture classification stride.
    #[arg(long)]
    stride: Option<usize>,
    /// Artifact mask to write.
    #[arg(short, long)]
    out: PathBuf,
    /// Optional JSON report of per-stage pixel counts.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ShadowSumArgs {
    /// Directory of `.wxr` frames.
    frame_dir: PathBuf,
    /// Sum image to write.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct ShadowDeriveArgs {
    /// Precipitation-sum image.
    sum: PathBuf,
    /// Station list JSON.
    stations: PathBuf,
    /// Relative-deficit threshold: a polar column is shadow-suspect when its
    /// mean accumulated value falls below tau times the station median.
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Sector file to write.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorrectArgs {
    /// Frame whose masked pixels are to be filled.
    frame: PathBuf,
    /// Correction mask.
    #[arg(long)]
    mask: PathBuf,
    /// Co-registered 12-channel satellite frame.
    #[arg(long)]
    msg: PathBuf,
    /// Correction configuration JSON; defaults apply where absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured neighbour count.
    #[arg(short)]
    k: Option<usize>,
    /// Overrides the configured initial border-dilation iteration count.
    #[arg(long)]
    dilation_iterations: Option<usize>,
    /// Corrected frame to write.
    #[arg(short, long)]
    out: PathBuf,
    /// Optional JSON report of per-region outcomes.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvalRegionsArgs {
    /// Ground-truth frame to carve regions from.
    frame: PathBuf,
    /// Co-registered 12-channel satellite frame.
    #[arg(long)]
    msg: PathBuf,
    /// Carved-region size class.
    #[arg(long, value_enum, default_value_t = SizeArg::Small)]
    size: SizeArg,
    /// Number of carved regions.
    #[arg(long, default_value_t = 30)]
    trials: usize,
    /// Carving seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Correction configuration JSON; defaults apply where absent.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum SizeArg {
    /// 100-pixel regions.
    Small,
    /// 1000-pixel regions.
    Medium,
    /// 10000-pixel regions.
    Large,
}

impl From<SizeArg> for RegionSize {
    fn from(s: SizeArg) -> RegionSize {
        match s {
            SizeArg::Small => RegionSize::Small,
            SizeArg::Medium => RegionSize::Medium,
            SizeArg::Large => RegionSize::Large,
        }
    }
}

#[derive(Args)]
struct RenderArgs {
    /// Input `.wxr` frame or `.msk` mask.
    input: PathBuf,
    /// Optional mask drawn over the frame in the overlay color.
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Output image; `.ppm` renders the color ramp, `.pgm` grayscale.
    #[arg(short, long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Loads a JSON-configured value, falling back to its default.
fn load_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::parse(format!("{}: {e}", p.display())))
        }
    }
}

/// Loads a JSON value that has no default and must be given in full.
fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(format!("{}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(format!("serializing {}: {e}", path.display())))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// `.wxr` files under `dir`, sorted by file name for reproducible order.
fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "wxr"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::state(format!("{}: no .wxr frames found", dir.display())));
    }
    Ok(paths)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => run_synth(args),
        Command::TextureTrain(args) => run_texture_train(args),
        Command::TextureLoocv(args) => run_texture_loocv(args),
        Command::Detect(args) => run_detect(args),
        Command::ShadowSum(args) => run_shadow_sum(args),
        Command::ShadowDerive(args) => run_shadow_derive(args),
        Command::Correct(args) => run_correct(args),
        Command::EvalRegions(args) => run_eval_regions(args),
        Command::Render(args) => run_render(args),
    }
}

/// Writes the scene plus two artifact-free predecessors (storms advected one
/// pixel per nominal 5-minute interval) so `detect` can be fed a history.
fn run_synth(args: SynthArgs) -> Result<()> {
    let mut config: SyntheticSceneConfig = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let scene = synth_scene(&config)?;
    let pred_5min = clean_frame_at(&config, (-1.0, 0.0), config.timestamp - 300)?;
    let pred_10min = clean_frame_at(&config, (-2.0, 0.0), config.timestamp - 600)?;
    fs::create_dir_all(&args.out)?;
    write_frame(&scene.clean, &args.out.join("clean.wxr"))?;
    write_frame(&scene.dirty, &args.out.join("dirty.wxr"))?;
    write_frame(&scene.observed, &args.out.join("observed.wxr"))?;
    write_frame(&pred_5min, &args.out.join("pred_5min.wxr"))?;
    write_frame(&pred_10min, &args.out.join("pred_10min.wxr"))?;
    write_msg(&scene.msg, &args.out.join("frame.msg"))?;
    write_mask(&scene.artifact_truth, &args.out.join("artifact_truth.msk"))?;
    write_mask(&scene.shadow_truth, &args.out.join("shadow_truth.msk"))?;
    write_sectors(&scene.sectors.pairs(), &args.out.join("sectors.ssv"))?;
    write_json(&config.stations, &args.out.join("stations.json"))?;
    println!(
        "wrote scene (seed {}, {}x{}) to {}",
        config.seed,
        config.spec.width,
        config.spec.height,
        args.out.display()
    );
    Ok(())
}

/// Patch class from its file name prefix.
fn class_from_name(path: &Path) -> Result<TextureClass> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::parse(format!("{}: non-UTF-8 file name", path.display())))?;
    if name.starts_with("artifact_") {
        Ok(TextureClass::Artifact)
    } else if name.starts_with("precipitation_") {
        Ok(TextureClass::Precipitation)
    } else {
        Err(Error::domain(format!(
            "{name}: patch names must start with artifact_ or precipitation_"
        )))
    }
}

fn run_texture_train(args: TextureTrainArgs) -> Result<()> {
    let paths = frame_paths(&args.patch_dir)?;
    let index_dir = args.out.parent().filter(|p| !p.as_os_str().is_empty());
    let mut entries = Vec::with_capacity(paths.len());
    for path in &paths {
        let class = class_from_name(path)?;
        // Store the bare file name when the patch sits next to the index so
        // the pair stays relocatable; otherwise fall back to the given path.
        let filename = match (path.parent(), index_dir) {
            (Some(pd), Some(id)) if pd == id => {
                path.file_name().unwrap().to_string_lossy().into_owned()
            }
            _ => path.to_string_lossy().into_owned(),
        };
        entries.push(LibraryIndexEntry { filename, class });
    }
    write_library_index(&entries, &args.out)?;
    // Loading back validates patch uniformity and both-classes coverage now
    // rather than at first detect.
    let scale = ReflectivityScale::default();
    let bank = build_gabor_bank(&Default::default())?;
    let library = TextureLibrary::load(&args.out, &scale, &bank)?;
    let (artifact, precipitation) = library.class_counts();
    println!(
        "indexed {} patches ({artifact} artifact, {precipitation} precipitation) in {}",
        entries.len(),
        args.out.display()
    );
    Ok(())
}

fn run_texture_loocv(args: TextureLoocvArgs) -> Result<()> {
    let scale = ReflectivityScale::default();
    let bank = build_gabor_bank(&Default::default())?;
    let library = TextureLibrary::load(&args.library, &scale, &bank)?;
    let accuracy = loocv(&library)?;
    let (artifact, precipitation) = library.class_counts();
    let report = serde_json::json!({
        "entries": library.entries.len(),
        "artifact_patches": artifact,
        "precipitation_patches": precipitation,
        "loocv_accuracy": accuracy,
    });
    println!("{report:#}");
    Ok(())
}

fn run_detect(args: DetectArgs) -> Result<()> {
    let mut config: DetectionConfig = load_config(args.config.as_deref())?;
    if let Some(stride) = args.stride {
        config.texture_stride = stride;
    }
    let current = read_frame(&args.current)?;
    let mut predecessors: Vec<RadarFrame> =
        args.prev.iter().map(|p| read_frame(p)).collect::<Result<_>>()?;
    // The history wants the most recent predecessor first.
    predecessors.sort_by_key(|f| std::cmp::Reverse(f.timestamp));
    let stations: RadarStationConfig = load_json(&args.stations)?;
    let scale = ReflectivityScale::default();
    let bank = build_gabor_bank(&config.gabor)?;
    let library = TextureLibrary::load(&args.library, &scale, &bank)?;
    let history = FrameHistory::new(current, predecessors)?;
    let (mask, report) = build_artifact_mask(&history, &scale, &library, &stations, &config)?;
    write_mask(&mask, &args.out)?;
    if let Some(report_path) = &args.report {
        write_json(&report, report_path)?;
    }
    println!(
        "flagged {} artifact pixels ({} texture, {} spoke, {} ring) -> {}",
        report.confirmed_pixels,
        report.texture_pixels,
        report.spoke_pixels,
        report.ring_pixels,
        args.out.display()
    );
    Ok(())
}

fn run_shadow_sum(args: ShadowSumArgs) -> Result<()> {
    let paths = frame_paths(&args.frame_dir)?;
    let frames: Vec<RadarFrame> = paths.iter().map(|p| read_frame(p)).collect::<Result<_>>()?;
    let scale = ReflectivityScale::default();
    let sum = accumulate_sum(frames.iter(), &scale)?;
    write_sum(&sum, &args.out)?;
    println!("accumulated {} frames -> {}", sum.frame_count, args.out.display());
    Ok(())
}

fn run_shadow_derive(args: ShadowDeriveArgs) -> Result<()> {
    let sum = read_sum(&args.sum)?;
    let stations: RadarStationConfig = load_json(&args.stations)?;
    let sectors = derive_shadow_sectors(&sum, &stations, args.tau)?;
    write_sectors(&sectors.pairs(), &args.out)?;
    println!("derived {} shadow sectors -> {}", sectors.total(), args.out.display());
    Ok(())
}

fn run_correct(args: CorrectArgs) -> Result<()> {
    let mut config: CorrectionConfig = load_config(args.config.as_deref())?;
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(iters) = args.dilation_iterations {
        config.dilation_iterations = iters;
    }
    let frame = read_frame(&args.frame)?;
    let mask = read_mask(&args.mask)?;
    let msg = read_msg(&args.msg)?;
    let (corrected, report) = correct_frame(&frame, &msg, &mask, &config)?;
    write_frame(&corrected, &args.out)?;
    if let Some(report_path) = &args.report {
        write_json(&report, report_path)?;
    }
    println!(
        "corrected {} pixels in {} regions ({} uncorrectable) -> {}",
        report.pixels_corrected,
        report.regions_corrected,
        report.regions_uncorrectable,
        args.out.display()
    );
    Ok(())
}

fn run_eval_regions(args: EvalRegionsArgs) -> Result<()> {
    let config: CorrectionConfig = load_config(args.config.as_deref())?;
    let frame = read_frame(&args.frame)?;
    let msg = read_msg(&args.msg)?;
    let matrix =
        simulate_region_eval(&frame, &msg, args.size.into(), args.trials, args.seed, &config)?;
    let total = matrix.total();
    let exact: u64 = (0..matrix.counts.len()).map(|t| matrix.counts[t][t]).sum();
    let report = serde_json::json!({
        "trials": args.trials,
        "pixels": total,
        "exact_fraction": if total > 0 { exact as f64 / total as f64 } else { 0.0 },
        "within_one_per_class": within_one(&matrix),
        "counts": matrix.counts,
    });
    println!("{report:#}");
    Ok(())
}

fn run_render(args: RenderArgs) -> Result<()> {
    let extension = args.input.extension().and_then(|x| x.to_str()).unwrap_or("");
    match extension {
        "wxr" => {
            let frame = read_frame(&args.input)?;
            let overlay = args.overlay.as_deref().map(read_mask).transpose()?;
            if args.out.extension().is_some_and(|x| x == "pgm") {
                if overlay.is_some() {
                    return Err(Error::domain("grayscale output does not support --overlay"));
                }
                wxrclean_core::write_pgm(&frame, &args.out)?;
            } else {
                wxrclean_core::write_ppm(&frame, overlay.as_ref(), &args.out)?;
            }
        }
        "msk" => {
            if args.overlay.is_some() {
                return Err(Error::domain("--overlay applies only to frame inputs"));
            }
            let mask = read_mask(&args.input)?;
            wxrclean_core::write_mask_pgm(&mask, &args.out)?;
        }
        other => {
            return Err(Error::domain(format!(
                "cannot render {other:?} files (expected .wxr or .msk)"
            )))
        }
    }
    println!("rendered {} -> {}", args.input.display(), args.out.display());
    Ok(())
}
