//! The `atypical` command line.
//!
//! Exit codes: `0` on success, `2` for usage errors (bad flags or
//! contradictory settings) and `3` for data errors (unreadable, malformed or
//! too short input, unwritable output).

pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::binarize::{
    consecutive_comparison, fasta_to_bits, parse_bit_text, parse_numeric_lines, randu_bits, word_lengths,
    write_bit_text, DnaMap, InvalidBase,
};
use crate::bits::BitSequence;
use crate::ctw::atypical_codelength;
use crate::error::Error;
use crate::frozen::{train_with_codelength, FrozenModel};
use crate::iid::{iid_atypicality_test, IidTypicalModel};
use crate::montecarlo::{
    freezing_demo, phase_transition, simulate_ctw_intrinsic, simulate_miss, simulate_pa, write_grid_csv, BoundSpec,
    FreezingSpec, GridPoint, MarkovSpec, PhaseSpec,
};
use crate::scanner::{flag_segments, random_walk, scan_against, write_flags_csv, ScanConfig, ScanProfile, TypicalCoder};
use svg::{Panel, Series};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {source}")]
    Data { context: String, source: Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Data { .. } => EXIT_DATA,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn data(context: impl std::fmt::Display, source: Error) -> CliError {
    CliError::Data { context: context.to_string(), source }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Detect atypical segments in binary data by comparing a model of typical
/// data against a universal context-tree coder.
#[derive(Debug, Parser)]
#[command(name = "atypical", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads [default: available parallelism]. Results do not
    /// depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Directory receiving all outputs and `manifest.json`.
    #[arg(long, global = true, default_value = "atypical-out")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a frozen context-tree model of typical data.
    Train(TrainArgs),
    /// Score every position of a sequence and report atypical segments.
    Scan(ScanArgs),
    /// Test one whole sequence for atypicality.
    Test(TestArgs),
    /// Run a Monte-Carlo experiment.
    Simulate(SimulateArgs),
    /// Convert measurements, DNA or generator output into bit text.
    Binarize(BinarizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// `0`/`1` characters, whitespace ignored.
    Bits,
    /// FASTA, bases mapped to two bits each.
    Fasta,
    /// One number per line, encoded by consecutive comparison.
    Numbers,
    /// Text, word lengths encoded by consecutive comparison.
    Words,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputOptions {
    /// Format of the input files.
    #[arg(long, value_enum, default_value_t = InputFormat::Bits)]
    pub format: InputFormat,
    /// Two-bit code of each base for FASTA input.
    #[arg(long, default_value = "A=00,C=01,G=10,T=11")]
    pub dna_map: String,
    /// Skip characters other than A, C, G, T instead of failing.
    #[arg(long)]
    pub skip_invalid: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanOptions {
    /// Shortest window tested.
    #[arg(long, default_value_t = 16)]
    pub l_min: usize,
    /// Longest window tested.
    #[arg(long, default_value_t = 512)]
    pub l_max: usize,
    /// Depth cap of the atypical coder.
    #[arg(long, default_value_t = 16)]
    pub max_depth: usize,
    /// Flag windows with score below `-tau` bits. Without it the full
    /// profile is ranked instead.
    #[arg(long)]
    pub tau: Option<f64>,
}

impl ScanOptions {
    fn config(&self) -> CliResult<ScanConfig> {
        ScanConfig::new(self.l_min, self.l_max, self.max_depth, self.tau).map_err(usage)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Training files; every file is one training sequence.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Context depth of the model.
    #[arg(long, default_value_t = 16)]
    pub depth: usize,
    /// Model file [default: <output-dir>/model.atyp].
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputOptions,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TypicalOptions {
    /// Frozen model written by `train`.
    #[arg(long, conflicts_with = "iid_p")]
    pub model: Option<PathBuf>,
    /// Use the iid model with this probability of a 1.
    #[arg(long)]
    pub iid_p: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub typical: TypicalOptions,
    #[command(flatten)]
    pub scan: ScanOptions,
    /// Also write `scan.svg` with the random walk and the score trace.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub input_options: InputOptions,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TestArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub typical: TypicalOptions,
    /// Header cost of the atypical description in bits.
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    /// Depth cap of the atypical coder.
    #[arg(long, default_value_t = 16)]
    pub max_depth: usize,
    #[command(flatten)]
    pub input_options: InputOptions,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(subcommand)]
    pub which: Simulation,
}

#[derive(Debug, Subcommand)]
pub enum Simulation {
    /// Frequency of intrinsically atypical iid sequences against its bound.
    Pa(BoundArgs),
    /// Frequency of missed alternative sequences against its bound.
    Miss(BoundArgs),
    /// Covered fraction of a fair-coin stream as a function of alpha.
    Phase(PhaseArgs),
    /// Frozen versus adaptive typical coding on three-state Markov sources.
    Freezing(FreezingArgs),
    /// Frequency with which the context-tree coder compresses fair coins.
    Ctw(CtwArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Alternative probability of a 1 (miss only).
    #[arg(long, default_value_t = 0.3)]
    pub p_a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Comma-separated window lengths.
    #[arg(long, default_value = "64,128,256,512,1024", value_parser = parse_usize_list)]
    pub lengths: UsizeList,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhaseArgs {
    /// Exponents as a list `a,b,c` or a range `start:stop:step`.
    #[arg(long, default_value = "0.5:3:0.5", value_parser = parse_f64_grid)]
    pub alphas: F64List,
    #[arg(long, default_value_t = 12.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 1 << 16)]
    pub stream_len: usize,
    #[arg(long, default_value_t = 1024)]
    pub l_max: usize,
    /// Independent streams per exponent.
    #[arg(long, default_value_t = 20)]
    pub runs: u64,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FreezingArgs {
    /// Row-stochastic transitions shared by both sources, rows split by `;`.
    #[arg(long, default_value = ".05 .95 0; 0 .05 .95; .95 0 .05")]
    pub transition: String,
    /// Bit emitted on each transition of the typical source, `x` where impossible.
    #[arg(long, default_value = "0 1 x; x 1 0; 1 x 0")]
    pub typical_emission: String,
    /// Bit emitted on each transition inside the planted segment.
    #[arg(long, default_value = "0 1 x; x 1 0; 0 x 1")]
    pub anomalous_emission: String,
    #[arg(long, default_value_t = 100_000)]
    pub train_len: usize,
    #[arg(long, default_value_t = 10_000)]
    pub test_len: usize,
    #[arg(long, default_value_t = 4_000)]
    pub segment_start: usize,
    #[arg(long, default_value_t = 2_000)]
    pub segment_len: usize,
    /// Context depth of the typical coders.
    #[arg(long, default_value_t = 8)]
    pub model_depth: usize,
    #[command(flatten)]
    pub scan: ScanOptions,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CtwArgs {
    #[arg(long, default_value = "8,16,32,64,128,256", value_parser = parse_usize_list)]
    pub lengths: UsizeList,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 4)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BinarizeMode {
    /// Direction of change between consecutive values.
    Compare,
    /// FASTA or bare bases, two bits per base.
    Dna,
    /// Bits from the RANDU generator; the seed must be odd.
    Randu,
    /// Normalise bit text.
    Bits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueSource {
    Numbers,
    Words,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BinarizeArgs {
    #[arg(value_enum)]
    pub mode: BinarizeMode,
    /// Input file; not used by `randu`.
    pub input: Option<PathBuf>,
    /// What `compare` reads from the input.
    #[arg(long, value_enum, default_value_t = ValueSource::Numbers)]
    pub values: ValueSource,
    /// Number of bits for `randu`.
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    #[arg(long, default_value = "A=00,C=01,G=10,T=11")]
    pub dna_map: String,
    #[arg(long)]
    pub skip_invalid: bool,
    /// Bits per output line.
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    /// Output file [default: <output-dir>/bits.txt].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsizeList(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F64List(pub Vec<f64>);

fn parse_usize_list(s: &str) -> std::result::Result<UsizeList, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(UsizeList)
}

/// `a,b,c` or `start:stop:step` with `stop` included when hit.
fn parse_f64_grid(s: &str) -> std::result::Result<F64List, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(format!("bad range {s:?}"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok(F64List((0..=n).map(|k| start + k as f64 * step).collect()))
        }
        [_] => s.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>().map(F64List),
        _ => Err(format!("expected a list or start:stop:step, got {s:?}")),
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub command_line: Vec<String>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub parameters: serde_json::Value,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub bits: usize,
    pub ones: usize,
}

struct Run<'a> {
    global: &'a GlobalArgs,
    command_line: Vec<String>,
    inputs: Vec<InputRecord>,
    outputs: Vec<PathBuf>,
}

impl Run<'_> {
    fn out_path(&self, name: &str) -> PathBuf {
        self.global.output_dir.join(name)
    }

    fn create(&mut self, path: PathBuf) -> CliResult<BufWriter<fs::File>> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        self.outputs.push(path);
        Ok(BufWriter::new(file))
    }

    /// Writes through `f` into a new output file.
    fn write_file(
        &mut self,
        path: PathBuf,
        f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
    ) -> CliResult<()> {
        let mut out = self.create(path.clone())?;
        f(&mut out).and_then(|_| out.flush()).map_err(io_err(&path))
    }

    fn read_bits(&mut self, path: &Path, opts: &InputOptions) -> CliResult<BitSequence> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let ctx = || path.display().to_string();
        let bits = match opts.format {
            InputFormat::Bits => parse_bit_text(&text).map_err(|e| data(ctx(), e))?,
            InputFormat::Fasta => {
                let map = DnaMap::parse(&opts.dna_map).map_err(usage)?;
                let invalid = if opts.skip_invalid { InvalidBase::Skip } else { InvalidBase::Reject };
                fasta_to_bits(&text, &map, invalid).map_err(|e| data(ctx(), e))?
            }
            InputFormat::Numbers => {
                let values = parse_numeric_lines(&text).map_err(|e| data(ctx(), e))?;
                consecutive_comparison(&values, self.global.seed).map_err(|e| data(ctx(), e))?
            }
            InputFormat::Words => {
                let values: Vec<f64> = word_lengths(&text).into_iter().map(|n| n as f64).collect();
                consecutive_comparison(&values, self.global.seed).map_err(|e| data(ctx(), e))?
            }
        };
        self.inputs.push(InputRecord { path: path.to_path_buf(), bits: bits.len(), ones: bits.ones() });
        Ok(bits)
    }

    fn finish(mut self, subcommand: &str, parameters: impl Serialize) -> CliResult<()> {
        let path = self.out_path("manifest.json");
        let manifest = RunManifest {
            tool: "atypical",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            command_line: std::mem::take(&mut self.command_line),
            seed: self.global.seed,
            workers: self.global.workers,
            parameters: serde_json::to_value(parameters).expect("parameters serialize"),
            inputs: std::mem::take(&mut self.inputs),
            outputs: self.outputs.clone(),
        };
        let mut out = self.create(path.clone())?;
        serde_json::to_writer_pretty(&mut out, &manifest)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(out))
            .and_then(|_| out.flush())
            .map_err(io_err(&path))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let command_line = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(&cli, command_line) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    run_from(std::env::args_os())
}

/// Runs a parsed command on a pool of `--workers` threads.
pub fn run(cli: &Cli, command_line: Vec<String>) -> CliResult<()> {
    let run = Run { global: &cli.global, command_line, inputs: Vec::new(), outputs: Vec::new() };
    match cli.global.workers {
        Some(0) => Err(usage("--workers must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(usage)?;
            pool.install(|| dispatch(&cli.command, run))
        }
        None => dispatch(&cli.command, run),
    }
}

fn dispatch(command: &Command, run: Run<'_>) -> CliResult<()> {
    match command {
        Command::Train(args) => cmd_train(args, run),
        Command::Scan(args) => cmd_scan(args, run),
        Command::Test(args) => cmd_test(args, run),
        Command::Simulate(args) => cmd_simulate(args, run),
        Command::Binarize(args) => cmd_binarize(args, run),
    }
}

fn cmd_train(args: &TrainArgs, mut run: Run<'_>) -> CliResult<()> {
    let mut sequences = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        sequences.push(run.read_bits(path, &args.input)?);
    }
    let slices: Vec<&[u8]> = sequences.iter().map(|s| s.as_slice()).collect();
    let (model, bits) = train_with_codelength(&slices, args.depth).map_err(|e| match e {
        Error::DepthTooLarge { .. } => usage(e),
        e => data("training data", e),
    })?;
    let path = args.model_out.clone().unwrap_or_else(|| run.out_path("model.atyp"));
    run.write_file(path.clone(), |out| model.write_to(out))?;
    println!("model: {}", path.display());
    println!("nodes: {}", model.node_count());
    println!("training code length: {bits:.3} bits");
    run.finish("train", args)
}

enum Typical {
    Iid(IidTypicalModel),
    Frozen(FrozenModel),
}

impl Typical {
    fn load(opts: &TypicalOptions) -> CliResult<Self> {
        match (&opts.model, opts.iid_p) {
            (Some(path), _) => {
                let file = fs::File::open(path).map_err(io_err(path))?;
                let model = FrozenModel::read_from(std::io::BufReader::new(file))
                    .map_err(|e| data(path.display(), e))?;
                Ok(Typical::Frozen(model))
            }
            (None, Some(p)) => IidTypicalModel::new(p).map(Typical::Iid).map_err(usage),
            (None, None) => Err(usage("a typical model is required: pass --model or --iid-p")),
        }
    }

    fn coder(&self) -> &dyn TypicalCoder {
        match self {
            Typical::Iid(m) => m,
            Typical::Frozen(m) => m,
        }
    }
}

fn cmd_scan(args: &ScanArgs, mut run: Run<'_>) -> CliResult<()> {
    let cfg = args.scan.config()?;
    let typical = Typical::load(&args.typical)?;
    let x = run.read_bits(&args.input, &args.input_options)?;
    let profile = scan_against(&x, &[typical.coder()], &cfg)
        .map_err(|e| data(args.input.display(), e))?
        .pop()
        .expect("one profile");

    run.write_file(run.out_path("profile.csv"), |out| profile.write_csv(out))?;
    match cfg.tau {
        Some(tau) => {
            let flags = flag_segments(&profile, tau);
            run.write_file(run.out_path("flags.csv"), |out| write_flags_csv(&profile, &flags, out))?;
            println!("flagged segments: {}", flags.len());
            for f in flags.iter().take(10) {
                println!("  {}..{} score {:.2} (best window {}+{}, depth {})", f.span_start, f.span_end, f.score, f.start, f.length, f.depth);
            }
        }
        None => {
            run.write_file(run.out_path("ranking.csv"), |out| write_ranking_csv(&profile, out))?;
        }
    }
    if let Some((n, w)) = profile.argmin() {
        println!("most atypical window: start {n}, length {}, depth {}, score {:.3} bits", w.length, w.depth, w.score);
    }
    if args.svg {
        let doc = scan_figure(&x, &profile, cfg.tau);
        run.write_file(run.out_path("scan.svg"), |out| out.write_all(doc.as_bytes()))?;
    }
    run.finish("scan", args)
}

/// The profile sorted by score, most atypical first.
fn write_ranking_csv<W: Write>(profile: &ScanProfile, mut out: W) -> std::io::Result<()> {
    let mut order: Vec<usize> = (0..profile.len()).collect();
    order.sort_by(|&a, &b| profile.witnesses[a].score.total_cmp(&profile.witnesses[b].score).then(a.cmp(&b)));
    writeln!(out, "{}", profile.header_comment())?;
    writeln!(out, "rank,n,delta_l,best_l,best_d")?;
    for (rank, n) in order.into_iter().enumerate() {
        let w = profile.witnesses[n];
        writeln!(out, "{},{n},{},{},{}", rank + 1, w.score, w.length, w.depth)?;
    }
    Ok(())
}

fn scan_figure(x: &[u8], profile: &ScanProfile, tau: Option<f64>) -> String {
    let walk = Panel::new(
        "random walk",
        "S[n]",
        vec![Series::indexed("S", random_walk(x).into_iter().map(|s| s as f64))],
    );
    let mut delta = Panel::new("code length difference", "delta L(n) [bits]", vec![Series::indexed("delta L", profile.scores())]);
    if let Some(tau) = tau {
        delta = delta.with_reference(-tau, format!("-tau = {}", -tau));
    }
    svg::render(&format!("scan against {}", profile.typical), &[walk, delta])
}

#[derive(Serialize)]
struct TestReport {
    bits: usize,
    tau: f64,
    typical_bits: f64,
    atypical_bits: f64,
    atypical_depth: usize,
    delta: f64,
    is_atypical: bool,
    /// Closed-form iid verdict, for iid models only.
    iid_delta: Option<f64>,
    iid_is_atypical: Option<bool>,
}

fn cmd_test(args: &TestArgs, mut run: Run<'_>) -> CliResult<()> {
    if !(args.tau.is_finite() && args.tau >= 0.0) {
        return Err(usage(Error::InvalidTau(args.tau)));
    }
    if args.max_depth > 63 {
        return Err(usage(Error::DepthTooLarge { got: args.max_depth, max: 63 }));
    }
    let typical = Typical::load(&args.typical)?;
    let x = run.read_bits(&args.input, &args.input_options)?;
    let ctx = || args.input.display().to_string();
    let atypical = atypical_codelength(&x, args.max_depth).map_err(|e| data(ctx(), e))?;
    let typical_bits: f64 = typical.coder().symbol_costs(&x).iter().sum();
    let delta = atypical.total_bits + args.tau - typical_bits;
    let iid = match &typical {
        Typical::Iid(m) => Some(iid_atypicality_test(&x, m, args.tau).map_err(|e| data(ctx(), e))?),
        Typical::Frozen(_) => None,
    };
    let report = TestReport {
        bits: x.len(),
        tau: args.tau,
        typical_bits,
        atypical_bits: atypical.total_bits,
        atypical_depth: atypical.best_depth,
        delta,
        is_atypical: delta < 0.0,
        iid_delta: iid.map(|v| v.delta),
        iid_is_atypical: iid.map(|v| v.is_atypical),
    };
    println!("typical {typical_bits:.3} bits, atypical {:.3} bits (depth {}), tau {}", atypical.total_bits, atypical.best_depth, args.tau);
    println!("{}", if report.is_atypical { "atypical" } else { "typical" });
    run.write_file(run.out_path("test.json"), |out| {
        serde_json::to_writer_pretty(&mut *out, &report).map_err(std::io::Error::from)?;
        writeln!(out)
    })?;
    run.finish("test", args)
}

fn grid_panel(title: &str, y_label: &str, points: &[GridPoint], log: bool) -> Panel {
    let mut series = vec![Series::new("estimate", points.iter().map(|p| (p.x, p.estimate)).collect())];
    if points.iter().any(|p| p.bound.is_some()) {
        series.push(Series::new("bound", points.iter().filter_map(|p| p.bound.map(|b| (p.x, b))).collect()));
    }
    series.push(Series::new("estimate + half width", points.iter().map(|p| (p.x, p.estimate + p.half_width)).collect()));
    let panel = Panel::new(title, y_label, series);
    if log {
        panel.log_scale()
    } else {
        panel
    }
}

fn report_grid(points: &[GridPoint]) {
    for p in points {
        let bound = p.bound.map_or("-".to_string(), |b| format!("{b:.3e}"));
        let mark = if p.within_bound() { "" } else { "  above bound" };
        println!("  {:>8} estimate {:.3e} +- {:.1e} bound {bound}{mark}", p.x, p.estimate, p.half_width);
    }
}

fn cmd_simulate(args: &SimulateArgs, mut run: Run<'_>) -> CliResult<()> {
    let seed = run.global.seed;
    match &args.which {
        Simulation::Pa(a) | Simulation::Miss(a) => {
            let is_pa = matches!(args.which, Simulation::Pa(_));
            let spec = BoundSpec {
                p: a.p,
                p_a: a.p_a,
                tau: a.tau,
                lengths: a.lengths.0.clone(),
                alpha: a.alpha,
                trials: a.trials,
                seed,
            };
            let (name, points) = if is_pa {
                ("pa", simulate_pa(&spec).map_err(usage)?)
            } else {
                ("miss", simulate_miss(&spec).map_err(usage)?)
            };
            let comment = format!(
                "simulate={name} p={} p_a={} tau={} alpha={} trials={} seed={seed}",
                spec.p, spec.p_a, spec.tau, spec.alpha, spec.trials
            );
            run.write_file(run.out_path(&format!("{name}.csv")), |out| write_grid_csv(out, &comment, "l", &points))?;
            report_grid(&points);
            if a.svg {
                let doc = svg::render(&comment, &[grid_panel(name, "probability", &points, true)]);
                run.write_file(run.out_path(&format!("{name}.svg")), |out| out.write_all(doc.as_bytes()))?;
            }
            run.finish(&format!("simulate {name}"), (a, &spec))
        }
        Simulation::Phase(a) => {
            let spec = PhaseSpec {
                alphas: a.alphas.0.clone(),
                tau: a.tau,
                stream_len: a.stream_len,
                l_max: a.l_max,
                runs: a.runs,
                seed,
            };
            let points: Vec<GridPoint> = phase_transition(&spec).map_err(usage)?.iter().map(|p| p.as_grid_point()).collect();
            let comment = format!(
                "simulate=phase tau={} stream_len={} l_max={} runs={} seed={seed}",
                spec.tau, spec.stream_len, spec.l_max, spec.runs
            );
            run.write_file(run.out_path("phase.csv"), |out| write_grid_csv(out, &comment, "alpha", &points))?;
            report_grid(&points);
            if a.svg {
                let doc = svg::render(&comment, &[grid_panel("covered fraction", "fraction", &points, false)]);
                run.write_file(run.out_path("phase.svg"), |out| out.write_all(doc.as_bytes()))?;
            }
            run.finish("simulate phase", (a, &spec))
        }
        Simulation::Ctw(a) => {
            let points = simulate_ctw_intrinsic(&a.lengths.0, a.tau, a.max_depth, a.trials, seed).map_err(usage)?;
            let comment = format!("simulate=ctw tau={} max_depth={} trials={} seed={seed}", a.tau, a.max_depth, a.trials);
            run.write_file(run.out_path("ctw.csv"), |out| write_grid_csv(out, &comment, "l", &points))?;
            report_grid(&points);
            if a.svg {
                let doc = svg::render(&comment, &[grid_panel("compressible fair-coin sequences", "probability", &points, true)]);
                run.write_file(run.out_path("ctw.svg"), |out| out.write_all(doc.as_bytes()))?;
            }
            run.finish("simulate ctw", a)
        }
        Simulation::Freezing(a) => {
            let typical = MarkovSpec::parse(&a.transition, &a.typical_emission).map_err(usage)?;
            let anomalous = MarkovSpec::parse(&a.transition, &a.anomalous_emission).map_err(usage)?;
            let spec = FreezingSpec {
                typical,
                anomalous,
                train_len: a.train_len,
                test_len: a.test_len,
                segment_start: a.segment_start,
                segment_len: a.segment_len,
                model_depth: a.model_depth,
                scan: a.scan.config()?,
                seed,
            };
            let outcome = freezing_demo(&spec).map_err(usage)?;
            run.write_file(run.out_path("freezing_frozen.csv"), |out| outcome.frozen.write_csv(out))?;
            run.write_file(run.out_path("freezing_adaptive.csv"), |out| outcome.adaptive.write_csv(out))?;
            run.write_file(run.out_path("freezing_test.txt"), |out| write_bit_text(out, &outcome.test, 64))?;
            println!("segment {}..{}", outcome.segment.start, outcome.segment.end);
            for (name, profile) in [("frozen", &outcome.frozen), ("adaptive", &outcome.adaptive)] {
                if let Some((n, w)) = profile.argmin() {
                    println!("  {name:>8}: minimum {:.2} bits at {n} (length {})", w.score, w.length);
                }
            }
            if a.svg {
                let walk = Panel::new(
                    "random walk of the test stream",
                    "S[n]",
                    vec![Series::indexed("S", random_walk(&outcome.test).into_iter().map(|s| s as f64))],
                );
                let mut delta = Panel::new(
                    "code length difference",
                    "delta L(n) [bits]",
                    vec![
                        Series::indexed("frozen", outcome.frozen.scores()),
                        Series::indexed("adaptive", outcome.adaptive.scores()),
                    ],
                );
                if let Some(tau) = spec.scan.tau {
                    delta = delta.with_reference(-tau, format!("-tau = {}", -tau));
                }
                let doc = svg::render("frozen versus adaptive typical coding", &[walk, delta]);
                run.write_file(run.out_path("freezing.svg"), |out| out.write_all(doc.as_bytes()))?;
            }
            run.finish("simulate freezing", a)
        }
    }
}

fn cmd_binarize(args: &BinarizeArgs, mut run: Run<'_>) -> CliResult<()> {
    let input = || args.input.as_deref().ok_or_else(|| usage(format!("{:?} mode needs an input file", args.mode)));
    let read = |path: &Path| fs::read_to_string(path).map_err(io_err(path));
    let bits = match args.mode {
        BinarizeMode::Randu => {
            let seed = u32::try_from(run.global.seed).map_err(|_| usage("RANDU seed must fit in 32 bits"))?;
            randu_bits(args.count, seed).map_err(usage)?
        }
        mode => {
            let path = input()?;
            let text = read(path)?;
            let ctx = || path.display().to_string();
            let bits = match mode {
                BinarizeMode::Compare => {
                    let values: Vec<f64> = match args.values {
                        ValueSource::Numbers => parse_numeric_lines(&text).map_err(|e| data(ctx(), e))?,
                        ValueSource::Words => word_lengths(&text).into_iter().map(|n| n as f64).collect(),
                    };
                    consecutive_comparison(&values, run.global.seed).map_err(|e| data(ctx(), e))?
                }
                BinarizeMode::Dna => {
                    let map = DnaMap::parse(&args.dna_map).map_err(usage)?;
                    let invalid = if args.skip_invalid { InvalidBase::Skip } else { InvalidBase::Reject };
                    fasta_to_bits(&text, &map, invalid).map_err(|e| data(ctx(), e))?
                }
                BinarizeMode::Bits => parse_bit_text(&text).map_err(|e| data(ctx(), e))?,
                BinarizeMode::Randu => unreachable!("handled above"),
            };
            run.inputs.push(InputRecord { path: path.to_path_buf(), bits: bits.len(), ones: bits.ones() });
            bits
        }
    };
    let path = args.output.clone().unwrap_or_else(|| run.out_path("bits.txt"));
    run.write_file(path.clone(), |out| write_bit_text(out, &bits, args.width))?;
    println!("{} bits ({} ones) -> {}", bits.len(), bits.ones(), path.display());
    run.finish("binarize", args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_f64_grid("0.5:3:0.5").unwrap().0, vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        assert_eq!(parse_f64_grid("1,2.5").unwrap().0, vec![1.0, 2.5]);
        assert!(parse_f64_grid("1:0:1").is_err());
        assert!(parse_f64_grid("1:2").is_err());
        assert_eq!(parse_usize_list("64, 128").unwrap().0, vec![64, 128]);
        assert!(parse_usize_list("64,x").is_err());
    }

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(usage("x").exit_code(), EXIT_USAGE);
        assert_eq!(data("f", Error::TooFewValues { min: 2, got: 0 }).exit_code(), EXIT_DATA);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["atypical", "--seed", "7", "scan", "x.txt", "--iid-p", "0.5", "--tau", "16"]).unwrap();
        assert_eq!(cli.global.seed, 7);
        let Command::Scan(args) = cli.command else { panic!("scan expected") };
        assert_eq!(args.scan.config().unwrap(), ScanConfig { tau: Some(16.0), ..ScanConfig::default() });
        assert!(Cli::try_parse_from(["atypical", "scan", "x", "--model", "m", "--iid-p", "0.5"]).is_err());
        assert!(Cli::try_parse_from(["atypical", "train"]).is_err());
    }
}
