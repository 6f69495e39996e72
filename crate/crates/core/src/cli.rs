//! Command-line front end. Every command is deterministic for fixed inputs,
//! configuration and seed, and writes its outputs atomically.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use crate::ablation::{ablate, AblationPlan};
use crate::blur::{psnr, ssim, BlurOperator, IcbModel, PwbModel};
use crate::curves::{curves, write_curves_csv, CurveParams};
use crate::error::{Error, Result};
use crate::geometry::Trajectory;
use crate::io::{
    load_depth, load_fit_config, load_image, load_run_config, load_trajectory, save_depth, save_image, save_json,
    save_trajectory, write_atomic, BitDepth, RunConfig, REPORT_SCHEMA_VERSION,
};
use crate::kernels::{BlurKernel, ParallaxProfile};
use crate::neural::{fit, save_checkpoint, FitConfig};
use crate::raster::{Image, Raster};
use crate::scene::{generate, Layout, Preset, SceneSpec};

#[derive(Parser, Debug)]
#[command(
    name = "parallax-blur",
    version,
    about = "Depth-aware camera shake blur and deblurring"
)]
pub struct Cli {
    /// Camera and blur-model settings (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for scene generation, network initialization and fixtures.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize a blurred image from a sharp image, depth and trajectory.
    Blur(BlurArgs),
    /// Recover a sharp image from a blurred one with a coordinate network.
    Deblur(DeblurArgs),
    /// PSNR and SSIM of an image against a reference.
    Eval(EvalArgs),
    /// Write a procedural scene: sharp image, depth, trajectory, blurred image.
    GenScene(GenSceneArgs),
    /// Dump labels, mattes and band edges of the layer decomposition.
    Layers(LayersArgs),
    /// Sweep band step and mask smoothing against the per-pixel model.
    Ablate(AblateArgs),
    /// Blur variation curves as CSV.
    Fig3(Fig3Args),
    /// Write blur kernels as JSON.
    KernelDump(KernelDumpArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Layered compositing.
    #[default]
    Icb,
    /// Per-pixel kernels.
    Pwb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BitsArg {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

impl From<BitsArg> for BitDepth {
    fn from(b: BitsArg) -> Self {
        match b {
            BitsArg::Eight => BitDepth::Eight,
            BitsArg::Sixteen => BitDepth::Sixteen,
        }
    }
}

#[derive(Args, Debug)]
pub struct SceneInputs {
    #[arg(long)]
    pub depth: PathBuf,
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelKind::Icb)]
    pub model: ModelKind,
}

#[derive(Args, Debug)]
pub struct BlurArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[command(flatten)]
    pub scene: SceneInputs,
    #[arg(long)]
    pub out: PathBuf,
    /// Store every per-pixel kernel instead of computing them on the fly.
    #[arg(long)]
    pub materialize: bool,
    /// Also write the per-layer mattes into this directory.
    #[arg(long)]
    pub dump_layers: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "8")]
    pub bits: BitsArg,
}

#[derive(Args, Debug)]
pub struct DeblurArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[command(flatten)]
    pub scene: SceneInputs,
    /// Optimization settings (JSON); the built-in recipe when absent.
    #[arg(long)]
    pub fit_config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-iteration loss values (CSV).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Fitted network parameters.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "8")]
    pub bits: BitsArg,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenSceneArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long, value_enum, default_value_t = Layout::Objects)]
    pub layout: Layout,
    /// Side of a square scene.
    #[arg(long, default_value_t = 96)]
    pub size: usize,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub channels: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct LayersArgs {
    #[arg(long)]
    pub depth: PathBuf,
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Use only the first N of the six fixtures.
    #[arg(long)]
    pub fixtures: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Override the fixture size as WIDTHxHEIGHT.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<(usize, usize)>,
}

#[derive(Args, Debug)]
pub struct Fig3Args {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2.8)]
    pub focal_mm: f64,
    #[arg(long, default_value_t = 4.0)]
    pub pixel_pitch_um: f64,
    #[arg(long, default_value_t = 3.0)]
    pub shift_mm: f64,
    #[arg(long, default_value_t = 10.0)]
    pub target_px: f64,
    /// Near depths in meters.
    #[arg(long, value_delimiter = ',')]
    pub d_near: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct KernelDumpArgs {
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Dump one kernel per layer of this depth map.
    #[arg(long, conflicts_with = "at_depth")]
    pub depth: Option<PathBuf>,
    /// Dump the kernel of a single depth in meters.
    #[arg(long)]
    pub at_depth: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected WIDTHxHEIGHT")?;
    Ok((
        w.parse().map_err(|_| "bad width")?,
        h.parse().map_err(|_| "bad height")?,
    ))
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match cli.threads {
        Some(0) => Err(Error::Domain("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Contract(format!("cannot start {n} threads: {e}")))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => load_run_config(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Blur(a) => blur(a, &config),
        Command::Deblur(a) => deblur(a, &config, cli.seed),
        Command::Eval(a) => eval(a),
        Command::GenScene(a) => gen_scene(a, &config, seed),
        Command::Layers(a) => layers(a, &config),
        Command::Ablate(a) => ablate_cmd(a, &config, seed),
        Command::Fig3(a) => fig3(a),
        Command::KernelDump(a) => kernel_dump(a, &config),
    }
}

/// Loads depth and trajectory and builds the requested operator.
fn operator_for(
    scene: &SceneInputs,
    config: &RunConfig,
    materialize: bool,
    width: usize,
    height: usize,
) -> Result<(Box<dyn BlurOperator>, Option<IcbModel>)> {
    let depth = load_depth(&scene.depth)?;
    let trajectory = load_trajectory(&scene.trajectory)?;
    if depth.width() != width || depth.height() != height {
        return Err(Error::shape(
            format!("{width}x{height} depth"),
            format!("{}x{}", depth.width(), depth.height()),
        ));
    }
    let intrinsics = config.intrinsics(width, height)?;
    let blur_config = config.blur_config();
    Ok(match scene.model {
        ModelKind::Icb => {
            let model = IcbModel::build(&depth, &trajectory, &intrinsics, &blur_config)?;
            info!(
                "{} layers, {} kernel weights",
                model.layer_count(),
                model.kernel_storage()
            );
            (Box::new(model.operator()?), Some(model))
        }
        ModelKind::Pwb => {
            let model = PwbModel::build(&depth, &trajectory, &intrinsics, &blur_config)?;
            if materialize {
                (Box::new(model.operator()?), None)
            } else {
                (Box::new(LazyPwb(model)), None)
            }
        }
    })
}

/// Pixel-wise model evaluated without storing kernels.
struct LazyPwb(PwbModel);

impl BlurOperator for LazyPwb {
    fn apply(&self, x: &Image) -> Result<Image> {
        self.0.forward(x)
    }

    fn adjoint(&self, y: &Image) -> Result<Image> {
        self.0.operator()?.adjoint(y)
    }
}

fn blur(a: &BlurArgs, config: &RunConfig) -> Result<()> {
    let image = load_image(&a.image)?;
    let (op, icb) = operator_for(&a.scene, config, a.materialize, image.width(), image.height())?;
    let out = op.apply(&image)?;
    save_image(&out, &a.out, a.bits.into())?;
    if let Some(dir) = &a.dump_layers {
        let model = icb.ok_or_else(|| Error::Contract("--dump-layers needs --model icb".into()))?;
        write_layers(&model, dir)?;
    }
    Ok(())
}

fn deblur(a: &DeblurArgs, config: &RunConfig, seed: Option<u64>) -> Result<()> {
    let observed = load_image(&a.image)?;
    let mut fit_config = match &a.fit_config {
        Some(path) => load_fit_config(path)?,
        None => FitConfig::default(),
    };
    if let Some(s) = seed {
        fit_config.seed = s;
    }
    let (op, _) = operator_for(&a.scene, config, false, observed.width(), observed.height())?;
    let outcome = fit(&observed, op.as_ref(), &fit_config)?;
    let sharp = outcome.network.render(observed.width(), observed.height())?;
    save_image(&sharp, &a.out, a.bits.into())?;
    if let Some(path) = &a.trace {
        write_atomic(path, |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["schema_version", "iteration", "loss"])?;
            for (i, l) in outcome.losses.iter().enumerate() {
                csv.write_record([REPORT_SCHEMA_VERSION.to_string(), i.to_string(), l.to_string()])?;
            }
            csv.write_record([
                REPORT_SCHEMA_VERSION.to_string(),
                outcome.losses.len().to_string(),
                outcome.final_loss.to_string(),
            ])?;
            csv.flush()
        })?;
    }
    if let Some(path) = &a.checkpoint {
        save_checkpoint(&outcome.network, path)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    schema_version: u32,
    psnr_db: f64,
    ssim: f64,
}

fn eval(a: &EvalArgs) -> Result<()> {
    let reference = load_image(&a.reference)?;
    let image = load_image(&a.image)?;
    let report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        psnr_db: psnr(&image, &reference)?,
        ssim: ssim(&image, &reference)?,
    };
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    if let Some(path) = &a.out {
        save_json(&report, path)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SceneReport<'a> {
    schema_version: u32,
    spec: &'a SceneSpec,
    min_depth_m: f64,
    max_depth_m: f64,
    layers: usize,
}

fn gen_scene(a: &GenSceneArgs, config: &RunConfig, seed: u64) -> Result<()> {
    let spec = SceneSpec::new(a.preset, a.size, seed)
        .layout(a.layout)
        .dims(a.width.unwrap_or(a.size), a.height.unwrap_or(a.size))
        .channels(a.channels);
    let scene = generate(&spec)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let intrinsics = config.intrinsics(spec.width, spec.height)?;
    let model = IcbModel::build(&scene.depth, &scene.trajectory, &intrinsics, &config.blur_config())?;
    let blurred = model.forward(&scene.sharp)?;
    save_image(&scene.sharp, &a.out_dir.join("sharp.png"), BitDepth::Sixteen)?;
    save_image(&blurred, &a.out_dir.join("blurred.png"), BitDepth::Sixteen)?;
    save_depth(&scene.depth, &a.out_dir.join("depth.pfm"))?;
    save_trajectory(&scene.trajectory, &a.out_dir.join("trajectory.csv"))?;
    save_json(
        &SceneReport {
            schema_version: REPORT_SCHEMA_VERSION,
            spec: &spec,
            min_depth_m: scene.depth.min(),
            max_depth_m: scene.depth.max(),
            layers: model.layer_count(),
        },
        &a.out_dir.join("scene.json"),
    )
}

#[derive(Serialize)]
struct LayerReport {
    schema_version: u32,
    band_edges_m: Vec<f64>,
    optimal_depths_m: Vec<f64>,
    pixel_counts: Vec<usize>,
    kernel_supports: Vec<(usize, usize)>,
}

fn write_layers(model: &IcbModel, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let d = &model.decomposition;
    let count = model.layer_count();
    let labels = &d.labels;
    let scale = if count > 1 { (count - 1) as f64 } else { 1.0 };
    let label_img = Raster::from_fn(labels.width(), labels.height(), |x, y| labels.get(x, y) as f64 / scale);
    save_image(&Image::gray(label_img)?, &dir.join("labels.png"), BitDepth::Sixteen)?;
    for (l, matte) in d.mattes.iter().enumerate() {
        if !matte.is_zero() {
            save_image(
                &Image::gray(matte.clone())?,
                &dir.join(format!("matte_{l:03}.png")),
                BitDepth::Sixteen,
            )?;
        }
    }
    save_json(
        &LayerReport {
            schema_version: REPORT_SCHEMA_VERSION,
            band_edges_m: d.sequence.values().to_vec(),
            optimal_depths_m: d.optimal_depths.clone(),
            pixel_counts: (0..count).map(|l| labels.count(l)).collect(),
            kernel_supports: model.kernels.iter().map(BlurKernel::support).collect(),
        },
        &dir.join("layers.json"),
    )
}

fn layers(a: &LayersArgs, config: &RunConfig) -> Result<()> {
    let depth = load_depth(&a.depth)?;
    let trajectory = load_trajectory(&a.trajectory)?;
    let intrinsics = config.intrinsics(depth.width(), depth.height())?;
    let model = IcbModel::build(&depth, &trajectory, &intrinsics, &config.blur_config())?;
    write_layers(&model, &a.out_dir)
}

fn ablate_cmd(a: &AblateArgs, config: &RunConfig, seed: u64) -> Result<()> {
    let mut plan = AblationPlan::standard(seed);
    plan.repeats = a.repeats;
    plan.base = config.blur_config();
    if let Some(k) = a.fixtures {
        if k == 0 || k > plan.fixtures.len() {
            return Err(Error::Domain(format!(
                "--fixtures must lie in 1..={}",
                plan.fixtures.len()
            )));
        }
        plan.fixtures.truncate(k);
    }
    if let Some((w, h)) = a.dims {
        plan.fixtures = plan.fixtures.into_iter().map(|s| s.dims(w, h)).collect();
    }
    let report = ablate(&plan)?;
    write_atomic(&a.out, |w| report.write_csv(w))
}

fn fig3(a: &Fig3Args) -> Result<()> {
    let mut params = CurveParams {
        focal_length: a.focal_mm * 1e-3,
        pixel_pitch: a.pixel_pitch_um * 1e-6,
        shift: a.shift_mm * 1e-3,
        target_px: a.target_px,
        ..CurveParams::default()
    };
    if let Some(d) = &a.d_near {
        params.near_depths = d.clone();
    }
    let points = curves(&params)?;
    write_atomic(&a.out, |w| write_curves_csv(&points, w))
}

#[derive(Serialize)]
struct KernelReport {
    schema_version: u32,
    depths_m: Vec<f64>,
    kernels: Vec<BlurKernel>,
}

fn kernel_dump(a: &KernelDumpArgs, config: &RunConfig) -> Result<()> {
    let trajectory = load_trajectory(&a.trajectory)?;
    let report = match (&a.depth, a.at_depth) {
        (Some(path), _) => {
            let depth = load_depth(path)?;
            let intrinsics = config.intrinsics(depth.width(), depth.height())?;
            let model = IcbModel::build(&depth, &trajectory, &intrinsics, &config.blur_config())?;
            KernelReport {
                schema_version: REPORT_SCHEMA_VERSION,
                depths_m: model.decomposition.optimal_depths.clone(),
                kernels: model.kernels,
            }
        }
        (None, Some(d)) => {
            let intrinsics = config.intrinsics(config.width.unwrap_or(1), config.height.unwrap_or(1))?;
            let traj: Trajectory = config.blur_config().prepare_trajectory(&trajectory)?;
            let kernel = ParallaxProfile::new(&traj, &intrinsics).kernel(d)?;
            KernelReport {
                schema_version: REPORT_SCHEMA_VERSION,
                depths_m: vec![d],
                kernels: vec![kernel],
            }
        }
        (None, None) => return Err(Error::Contract("kernel-dump needs --depth or --at-depth".into())),
    };
    let text = serde_json::to_vec_pretty(&report).map_err(|e| Error::format(&a.out, e))?;
    write_atomic(&a.out, |w| w.write_all(&text))
}
