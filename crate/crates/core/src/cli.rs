//! The `sfvq` command line. Results go to stdout as `key=value` lines, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 usage error, 2 data, format or I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    arrangement_report, codeword_distortion, heatmap_matrix, segment_distortion, MetricParams,
};
use crate::datasets::{generate, Distribution};
use crate::directions::{
    angle_deg, extract_direction, pullback_codebook, sample_line, PairedSamples,
};
use crate::error::{Error, Result};
use crate::io::{
    curve_svg, encode_vectors, heatmap_pgm, read_codebook, read_vectors, write_codebook,
    write_direction, write_vectors,
};
use crate::ordering::{order_path, path_length, Heuristic, PathOrder};
use crate::quantizer::{
    quantize_nearest, quantize_segment, train, train_with_log, Growth, InitMode, LambdaSampling,
    QuantizerMode, TrainConfig,
};
use crate::vectors::VectorSet;

#[derive(Debug, Parser)]
#[command(
    name = "sfvq",
    version,
    about = "Space-filling vector quantization toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset
    Gen(GenArgs),
    /// Train an SFVQ or plain VQ codebook
    Train(TrainArgs),
    /// Quantize vectors with a trained codebook
    Quantize(QuantizeArgs),
    /// Arrangement and distortion metrics of a codebook against data
    Metrics(MetricsArgs),
    /// Reorder a codebook along a short path (TSP heuristics)
    Reorder(ReorderArgs),
    /// Extract the unit direction between codewords i and i+1
    Directions(DirectionsArgs),
    /// Sample evenly spaced, jittered points on one curve segment
    SampleLine(SampleLineArgs),
    /// Map a codebook back to a source space through paired samples
    Pullback(PullbackArgs),
    /// Plot a curve over data (SVG) or a codeword distance heatmap (PGM)
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    #[value(name = "pentagon2d")]
    Pentagon2d,
    #[value(name = "moons3d")]
    Moons3d,
    #[value(name = "circles3d")]
    Circles3d,
    #[value(name = "spiral3d")]
    Spiral3d,
    #[value(name = "gaussian")]
    Gaussian,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Number of samples
    #[arg(long)]
    n: usize,
    #[arg(long, env = "SFVQ_SEED", default_value_t = 0)]
    seed: u64,
    /// Jitter std for the 3D shapes
    #[arg(long, default_value_t = crate::datasets::DEFAULT_NOISE)]
    noise: f64,
    /// Dimension (gaussian only)
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Sfvq,
    Vq,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Init {
    NormSorted,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Lambda {
    PerSegment,
    PerSample,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GrowthArg {
    Recursive,
    Direct,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Target bitrate; the codebook ends with 2^bits codewords
    #[arg(long, default_value_t = 6)]
    bits: u32,
    #[arg(long, value_enum, default_value_t = Mode::Sfvq)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Init::NormSorted)]
    init: Init,
    #[arg(long, env = "SFVQ_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    batches_per_stage: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    /// Initial learning rate, halved at 60% and 80% of every stage
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Vectors used for norm-sorted initialization
    #[arg(long, default_value_t = 1000)]
    init_samples: usize,
    #[arg(long, value_enum, default_value_t = Lambda::PerSegment)]
    lambda: Lambda,
    /// `direct` trains all 2^bits codewords in one stage (ordinary VQ with --mode vq)
    #[arg(long, value_enum, default_value_t = GrowthArg::Recursive)]
    growth: GrowthArg,
    /// Progress log file (batch, loss, lr; tab separated)
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    log_interval: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Nearest,
    Segment,
}

#[derive(Debug, Args)]
struct QuantizeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Segment)]
    method: Method,
    /// Write reconstructions here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    /// Jump threshold as a multiple of the median consecutive distance
    #[arg(long, default_value_t = 3.0)]
    tau: f64,
    /// Coverage radius multiplier
    #[arg(long, default_value_t = 2.0)]
    factor: f64,
    /// Percentile of data nearest-neighbor distances for the coverage radius
    #[arg(long, default_value_t = 95.0)]
    percentile: f64,
    #[arg(long, default_value_t = 100)]
    samples_per_segment: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HeuristicArg {
    #[value(alias = "nearest_neighbor")]
    Nn,
    Greedy,
    #[value(alias = "christofides_like")]
    Christofides,
}

#[derive(Debug, Args)]
struct ReorderArgs {
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long, value_enum, default_value_t = HeuristicArg::Nn)]
    heuristic: HeuristicArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DirectionsArgs {
    #[arg(long)]
    codebook: PathBuf,
    /// Segment index i (zero-based); the direction runs from codeword i to i+1
    #[arg(long)]
    pair: usize,
    /// Also report the angle to the direction of this segment
    #[arg(long)]
    angle_with: Option<usize>,
    #[arg(long, default_value = "")]
    label: String,
    #[arg(long, default_value = "")]
    layer_mask: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SampleLineArgs {
    #[arg(long)]
    codebook: PathBuf,
    /// Segment index i (zero-based)
    #[arg(long)]
    pair: usize,
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Gaussian jitter std per coordinate
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, env = "SFVQ_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PullbackArgs {
    #[arg(long)]
    pairs_src: PathBuf,
    #[arg(long)]
    pairs_img: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long, requires = "codebook", conflicts_with = "heatmap")]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    codebook: Option<PathBuf>,
    /// Codebook whose distance heatmap to render as PGM
    #[arg(long, required_unless_present = "data")]
    heatmap: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Runs the CLI against the process streams and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::InvalidKind(_) => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Quantize(a) => quantize(a, out),
        Command::Metrics(a) => metrics(a, out),
        Command::Reorder(a) => reorder(a, out),
        Command::Directions(a) => directions(a, out),
        Command::SampleLine(a) => sample_line_cmd(a, out),
        Command::Pullback(a) => pullback(a, out),
        Command::Plot(a) => plot(a, out),
    }
}

fn gen(a: GenArgs, out: &mut dyn Write) -> Result<()> {
    let kind = match a.kind {
        Kind::Pentagon2d => Distribution::Pentagon2d,
        Kind::Moons3d => Distribution::moons3d().with_noise(a.noise),
        Kind::Circles3d => Distribution::circles3d().with_noise(a.noise),
        Kind::Spiral3d => Distribution::spiral3d().with_noise(a.noise),
        Kind::Gaussian => Distribution::Gaussian { dim: a.dim },
    };
    let vs = generate(kind, a.n, a.seed)?;
    write_vectors(&a.out, &vs)?;
    writeln!(out, "kind={kind}")?;
    writeln!(out, "count={}", vs.count())?;
    writeln!(out, "dim={}", vs.dim())?;
    Ok(())
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let data = read_vectors(&a.data)?;
    let config = TrainConfig {
        target_bits: a.bits,
        batch_size: a.batch_size,
        batches_per_stage: a.batches_per_stage,
        base_lr: a.lr,
        seed: a.seed,
        init_mode: match a.init {
            Init::NormSorted => InitMode::NormSorted,
            Init::Random => InitMode::RandomNormal,
        },
        mode: match a.mode {
            Mode::Sfvq => QuantizerMode::Sfvq,
            Mode::Vq => QuantizerMode::Vq,
        },
        init_sample_count: a.init_samples,
        lambda_sampling: match a.lambda {
            Lambda::PerSegment => LambdaSampling::PerSegment,
            Lambda::PerSample => LambdaSampling::PerSample,
        },
        growth: match a.growth {
            GrowthArg::Recursive => Growth::Recursive,
            GrowthArg::Direct => Growth::Direct,
        },
        log_interval: a.log_interval,
        ..TrainConfig::default()
    };
    config.validate()?;
    let mut log = Vec::new();
    let outcome = match &a.log {
        Some(_) => train_with_log(&config, &data, &mut log)?,
        None => train(&config, &data)?,
    };
    let bytes = encode_vectors(outcome.codebook.points())?;
    std::fs::write(&a.out, bytes)?;
    if let Some(path) = &a.log {
        std::fs::write(path, log)?;
    }
    writeln!(out, "codewords={}", outcome.codebook.len())?;
    writeln!(out, "stages={}", outcome.history.len())?;
    for (s, r) in outcome.history.iter().enumerate() {
        writeln!(out, "stage{s}_final_loss={}", r.final_loss)?;
    }
    Ok(())
}

fn quantize(a: QuantizeArgs, out: &mut dyn Write) -> Result<()> {
    let data = read_vectors(&a.data)?;
    let codebook = read_codebook(&a.codebook)?;
    data.ensure_dim(codebook.dim())?;
    let mut recon = Vec::with_capacity(data.as_slice().len());
    let mut total = 0.0;
    for x in data.rows() {
        let (r, e) = match a.method {
            Method::Nearest => {
                let q = quantize_nearest(x, &codebook)?;
                (q.reconstruction, q.squared_error)
            }
            Method::Segment => {
                let q = quantize_segment(x, &codebook)?;
                (q.reconstruction, q.squared_error)
            }
        };
        recon.extend(r);
        total += e;
    }
    if let Some(path) = &a.out {
        write_vectors(path, &VectorSet::new(data.dim(), recon)?)?;
    }
    writeln!(out, "count={}", data.count())?;
    let mean = if data.is_empty() {
        0.0
    } else {
        total / data.count() as f64
    };
    writeln!(out, "distortion={mean}")?;
    Ok(())
}

fn metrics(a: MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let data = read_vectors(&a.data)?;
    let codebook = read_codebook(&a.codebook)?;
    data.ensure_dim(codebook.dim())?;
    let params = MetricParams {
        tau: a.tau,
        factor: a.factor,
        percentile: a.percentile,
        samples_per_segment: a.samples_per_segment,
    };
    let report = arrangement_report(
        &codebook,
        &PathOrder::identity(codebook.len()),
        &data,
        &params,
    )?;
    write!(out, "{}", report.to_kv())?;
    writeln!(
        out,
        "codeword_distortion={}",
        codeword_distortion(&codebook, &data)?
    )?;
    writeln!(
        out,
        "segment_distortion={}",
        segment_distortion(&codebook, &data)?
    )?;
    Ok(())
}

fn reorder(a: ReorderArgs, out: &mut dyn Write) -> Result<()> {
    let codebook = read_codebook(&a.codebook)?;
    let heuristic = match a.heuristic {
        HeuristicArg::Nn => Heuristic::NearestNeighbor,
        HeuristicArg::Greedy => Heuristic::Greedy,
        HeuristicArg::Christofides => Heuristic::ChristofidesLike,
    };
    let order = order_path(&codebook, heuristic)?;
    let before = path_length(&codebook, &PathOrder::identity(codebook.len()))?;
    let after = path_length(&codebook, &order)?;
    write_codebook(&a.out, &codebook.reordered(order.permutation())?)?;
    writeln!(out, "heuristic={heuristic}")?;
    writeln!(out, "original_path_length={before}")?;
    writeln!(out, "path_length={after}")?;
    Ok(())
}

fn directions(a: DirectionsArgs, out: &mut dyn Write) -> Result<()> {
    let codebook = read_codebook(&a.codebook)?;
    let d = extract_direction(&codebook, a.pair)?
        .with_label(a.label)
        .with_layer_mask(a.layer_mask);
    let angle = a
        .angle_with
        .map(|j| extract_direction(&codebook, j).and_then(|other| angle_deg(&d, &other)))
        .transpose()?;
    write_direction(&a.out, &d)?;
    writeln!(out, "pair={},{}", d.source_pair.0, d.source_pair.1)?;
    writeln!(out, "raw_norm={}", d.raw_norm)?;
    if let (Some(j), Some(angle)) = (a.angle_with, angle) {
        writeln!(out, "angle_deg_with_{j}={angle}")?;
    }
    Ok(())
}

fn sample_line_cmd(a: SampleLineArgs, out: &mut dyn Write) -> Result<()> {
    let codebook = read_codebook(&a.codebook)?;
    let pts = sample_line(&codebook, a.pair, a.k, a.noise, a.seed)?;
    write_vectors(&a.out, &pts)?;
    writeln!(out, "count={}", pts.count())?;
    writeln!(out, "dim={}", pts.dim())?;
    Ok(())
}

fn pullback(a: PullbackArgs, out: &mut dyn Write) -> Result<()> {
    let pairs = PairedSamples::new(read_vectors(&a.pairs_src)?, read_vectors(&a.pairs_img)?)?;
    let codebook = read_codebook(&a.codebook)?;
    let p = pullback_codebook(&pairs, &codebook)?;
    write_codebook(&a.out, &p.codebook)?;
    let filled: Vec<String> = (0..p.filled.len())
        .filter(|&i| p.filled[i])
        .map(|i| i.to_string())
        .collect();
    writeln!(out, "codewords={}", p.codebook.len())?;
    writeln!(out, "filled_count={}", filled.len())?;
    writeln!(out, "filled_indices={}", filled.join(","))?;
    Ok(())
}

fn plot(a: PlotArgs, out: &mut dyn Write) -> Result<()> {
    if let Some(path) = &a.heatmap {
        let codebook = read_codebook(path)?;
        let bytes = heatmap_pgm(&heatmap_matrix(codebook.points()))?;
        std::fs::write(&a.out, bytes)?;
        writeln!(out, "format=pgm")?;
        writeln!(out, "size={}", codebook.len())?;
        return Ok(());
    }
    let (Some(data), Some(cb)) = (&a.data, &a.codebook) else {
        return Err(Error::InvalidConfig(
            "plot needs --heatmap or both --data and --codebook".into(),
        ));
    };
    let data = read_vectors(data)?;
    let codebook = read_codebook(cb)?;
    let svg = curve_svg(&data, &codebook)?;
    std::fs::write(&a.out, svg)?;
    writeln!(out, "format=svg")?;
    writeln!(out, "codewords={}", codebook.len())?;
    Ok(())
}
