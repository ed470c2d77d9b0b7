mod table;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use basket_core::bench::{dictionary_sweep, qualitative_checks, CellStatus, SWEEP_SIZES};
use basket_core::codec::DEFAULT_DICTIONARY_SIZE;
use basket_core::column::DEFAULT_BASKET_BYTES;
use basket_core::container::{self, ContainerError};
use basket_core::synthgen::template_baskets;
use basket_core::{
    basketize, emit_report, generate, run_matrix, train_dictionary, BenchConfig, CodecId,
    CompressionSettings, DatasetProfile, Dictionary, Level, MatrixCell, PreconditionerKind,
    ReportFormat, Tree,
};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
    #[error("verification failed")]
    Verify,
    /// The reader of standard output went away; not an error for a filter.
    #[error("broken pipe")]
    BrokenPipe,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::BrokenPipe => 0,
            CliError::Failed(_) | CliError::Verify => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ContainerError> for CliError {
    fn from(e: ContainerError) -> Self {
        match e {
            ContainerError::Io(e) => CliError::Io(e.to_string()),
            ContainerError::SchemaMismatch(_) | ContainerError::DuplicateDictionary(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Columnar basket container tool.
#[derive(Parser)]
#[command(name = "basket", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it as a container file.
    Gen(GenArgs),
    /// Measure ratio and throughput over a codec/level/preconditioner matrix.
    Bench(BenchArgs),
    /// Check every record of a container file; exit code 1 on any failure.
    Verify {
        file: PathBuf,
        /// Only print failures and the summary line.
        #[arg(short, long)]
        quiet: bool,
    },
    /// Print a container file as CSV, or a per-branch summary.
    Read(ReadArgs),
    /// Build a container file from CSV (the format `read` prints).
    Write(WriteArgs),
    /// Train a dictionary from sample files or from a container's baskets.
    TrainDict(TrainArgs),
    /// Compare compressed totals for several trained dictionary sizes.
    DictSweep(SweepArgs),
}

#[derive(Args)]
struct CompressionArgs {
    /// store, deflate, lz4, lz4hc or zstd.
    #[arg(long, default_value = "zstd")]
    codec: CodecId,
    /// 0 (no compression) to 9.
    #[arg(long, default_value_t = 6)]
    level: u8,
    /// none, shuffle or bitshuffle; the stride is the element width.
    #[arg(long, default_value = "none")]
    precond: PreconditionerKind,
    /// Dictionary blob written by `train-dict`.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Target uncompressed data bytes per basket.
    #[arg(long, default_value_t = DEFAULT_BASKET_BYTES)]
    basket_bytes: usize,
}

impl CompressionArgs {
    fn settings(&self) -> Result<CompressionSettings, CliError> {
        let level = Level::new(self.level).map_err(|e| CliError::Usage(e.to_string()))?;
        let s =
            CompressionSettings::new(self.codec, level).with_preconditioner_kind(self.precond, 1);
        match &self.dict {
            None => Ok(s),
            Some(path) => {
                let dict = load_dictionary(path)?;
                s.with_dictionary(Arc::new(dict))
                    .map_err(|e| CliError::Usage(e.to_string()))
            }
        }
    }

    fn write(&self, tree: &Tree, out: &Path) -> Result<(), CliError> {
        if self.basket_bytes == 0 {
            return Err(CliError::Usage("--basket-bytes must be positive".into()));
        }
        let per_branch = vec![self.settings()?; tree.schema().len()];
        let summary = container::write_file(out, tree, &per_branch, self.basket_bytes)?;
        let (unc, comp) = (summary.uncompressed_bytes(), summary.compressed_bytes());
        eprintln!(
            "wrote {}: {} entries, {} branches, {} bytes (payload {unc} -> {comp}, ratio {:.3})",
            out.display(),
            tree.n_entries(),
            tree.schema().len(),
            summary.bytes_written,
            unc as f64 / comp.max(1) as f64
        );
        Ok(())
    }
}

#[derive(Args)]
struct ProfileArgs {
    /// Built-in profile (`flat`, `jagged`) or a key=value profile file.
    #[arg(long, default_value = "flat")]
    profile: String,
    /// Override one profile key, e.g. `--set events=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ProfileArgs {
    fn resolve(&self) -> Result<DatasetProfile, CliError> {
        let mut text = match DatasetProfile::preset(&self.profile) {
            Some(p) => p.to_config(),
            None => {
                let path = Path::new(&self.profile);
                if !path.exists() {
                    return Err(CliError::Usage(format!(
                        "`{}` is neither a built-in profile (flat, jagged) nor a file",
                        self.profile
                    )));
                }
                fs::read_to_string(path).map_err(io_err(path))?
            }
        };
        for o in &self.overrides {
            text.push('\n');
            text.push_str(o);
        }
        DatasetProfile::from_config(&text).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    compression: CompressionArgs,
    #[arg(short, long)]
    out: PathBuf,
}

fn split_list<T: std::str::FromStr<Err = String>>(s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| p.trim().parse::<T>().map_err(CliError::Usage))
        .collect()
}

#[derive(Args)]
struct BenchArgs {
    /// Container file to benchmark instead of a generated profile.
    #[arg(long, conflicts_with_all = ["profile", "overrides"])]
    file: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, default_value = "store,deflate,lz4,lz4hc,zstd")]
    codecs: String,
    #[arg(long, default_value = "1,6,9")]
    levels: String,
    #[arg(long, default_value = "none,shuffle,bitshuffle")]
    precond: String,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    #[arg(long, default_value_t = DEFAULT_BASKET_BYTES)]
    basket_bytes: usize,
    /// csv or markdown.
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// Report file; standard output when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReadArgs {
    file: PathBuf,
    /// Print one line per branch instead of the values.
    #[arg(long)]
    summary: bool,
    /// Restrict output to these branches (repeatable).
    #[arg(long)]
    branch: Vec<String>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WriteArgs {
    /// CSV input with typed headers such as `px:u32` or `hits:[u16]`.
    input: PathBuf,
    #[command(flatten)]
    compression: CompressionArgs,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of sample files, a container file, or any file to be cut
    /// into chunks.
    samples: PathBuf,
    /// Dictionary size in bytes.
    #[arg(long, default_value_t = DEFAULT_DICTIONARY_SIZE)]
    size: usize,
    /// Codec the dictionary is meant for (deflate, lz4 or zstd).
    #[arg(long, default_value = "zstd")]
    codec: CodecId,
    /// Basket size used when sampling a container, and chunk size for
    /// other files.
    #[arg(long, default_value_t = 512)]
    chunk: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sample source as for `train-dict`; synthetic template baskets when
    /// omitted.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Comma-separated dictionary sizes in bytes.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long, default_value = "zstd")]
    codec: CodecId,
    #[arg(long, default_value_t = 6)]
    level: u8,
    #[arg(long, default_value_t = 512)]
    chunk: usize,
    /// Number of synthetic baskets in each of the train and test sets.
    #[arg(long, default_value_t = 4000)]
    baskets: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn load_dictionary(path: &Path) -> Result<Dictionary, CliError> {
    let blob = fs::read(path).map_err(io_err(path))?;
    Dictionary::from_blob(&blob).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).map_err(io_err(p))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn stdout_err(e: io::Error) -> CliError {
    if e.kind() == io::ErrorKind::BrokenPipe {
        return CliError::BrokenPipe;
    }
    CliError::Io(format!("output: {e}"))
}

fn csv_err(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => stdout_err(e),
        other => CliError::Failed(format!("csv: {other:?}")),
    }
}

fn gen(args: GenArgs) -> Result<(), CliError> {
    let profile = args.profile.resolve()?;
    let tree = generate(&profile).map_err(|e| CliError::Usage(e.to_string()))?;
    eprintln!("profile {profile}");
    args.compression.write(&tree, &args.out)
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let (dataset, tree) = match &args.file {
        Some(path) => {
            let name = path
                .file_name()
                .map_or_else(|| "file".into(), |n| n.to_string_lossy().into_owned());
            (name, container::read_file(path)?)
        }
        None => {
            let profile = args.profile.resolve()?;
            (
                profile.id(),
                generate(&profile).map_err(|e| CliError::Usage(e.to_string()))?,
            )
        }
    };
    let codecs: Vec<CodecId> = split_list(&args.codecs)?;
    let levels = args
        .levels
        .split(',')
        .map(|l| {
            l.trim()
                .parse::<u8>()
                .map_err(|e| e.to_string())
                .and_then(|l| Level::new(l).map_err(|e| e.to_string()))
                .map_err(|e| CliError::Usage(format!("--levels: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let preconds: Vec<PreconditionerKind> = split_list(&args.precond)?;
    let matrix = MatrixCell::product(&codecs, &levels, &preconds);
    let config = BenchConfig {
        reps: args.reps,
        warmup: args.warmup,
        target_basket_bytes: args.basket_bytes,
    };
    let records = run_matrix(&dataset, &tree, &matrix, &config)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut report =
        emit_report(&records, args.format).map_err(|e| CliError::Failed(e.to_string()))?;
    let checks = qualitative_checks(&records);
    if args.format == ReportFormat::Markdown {
        report.extend_from_slice(b"\nShape checks (informational):\n\n");
        for c in &checks {
            report.extend_from_slice(format!("- {c}\n").as_bytes());
        }
    } else {
        for c in &checks {
            eprintln!("{c}");
        }
    }
    let mut out = output(args.out.as_deref())?;
    out.write_all(&report)
        .and_then(|_| out.flush())
        .map_err(stdout_err)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} matrix cells failed")));
    }
    Ok(())
}

fn verify(file: &Path, quiet: bool) -> Result<(), CliError> {
    let report = container::verify_file(file);
    if let Some(ContainerError::Io(e)) = &report.fatal {
        return Err(CliError::Io(format!("{}: {e}", file.display())));
    }
    let text = report.to_string();
    let mut stdout = io::stdout().lock();
    for line in text.lines() {
        if !quiet || !line.starts_with("ok ") {
            writeln!(stdout, "{line}").map_err(stdout_err)?;
        }
    }
    if report.is_clean() {
        Ok(())
    } else {
        Err(CliError::Verify)
    }
}

fn read(args: ReadArgs) -> Result<(), CliError> {
    let tree = container::read_file(&args.file)?;
    let schema = tree.schema();
    let selected: Vec<usize> = if args.branch.is_empty() {
        (0..schema.len()).collect()
    } else {
        args.branch
            .iter()
            .map(|n| {
                schema
                    .index_of(n)
                    .ok_or_else(|| CliError::Usage(format!("no branch named `{n}`")))
            })
            .collect::<Result<_, _>>()?
    };
    let mut out = output(args.out.as_deref())?;
    if args.summary {
        writeln!(out, "{} entries", tree.n_entries()).map_err(stdout_err)?;
        for &b in &selected {
            writeln!(out, "{}", table::header(&schema.branches()[b])).map_err(stdout_err)?;
        }
        return out.flush().map_err(stdout_err);
    }
    table::write_tree(&tree, out, &selected).map_err(csv_err)
}

fn write(args: WriteArgs) -> Result<(), CliError> {
    let file = fs::File::open(&args.input).map_err(io_err(&args.input))?;
    let tree = table::read_tree(io::BufReader::new(file))
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.input.display())))?;
    args.compression.write(&tree, &args.out)
}

fn gather_samples(path: &Path, chunk: usize) -> Result<Vec<Vec<u8>>, CliError> {
    if chunk == 0 {
        return Err(CliError::Usage("--chunk must be positive".into()));
    }
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io_err(path))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io_err(path))?;
        entries.sort();
        return entries
            .iter()
            .filter(|p| p.is_file())
            .map(|p| fs::read(p).map_err(io_err(p)))
            .collect();
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    if let Ok(tree) = container::decode(&bytes) {
        let mut samples = Vec::new();
        for (branch, column) in tree.schema().branches().iter().zip(tree.columns()) {
            let baskets =
                basketize(column, branch, chunk).map_err(|e| CliError::Failed(e.to_string()))?;
            for basket in baskets {
                samples.push(basket.data);
                samples.extend(basket.offsets);
            }
        }
        return Ok(samples);
    }
    Ok(bytes.chunks(chunk).map(<[u8]>::to_vec).collect())
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let samples = gather_samples(&args.samples, args.chunk)?;
    let dict = train_dictionary(&samples, args.size, args.codec)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    fs::write(&args.out, dict.to_blob()).map_err(io_err(&args.out))?;
    eprintln!(
        "trained {} bytes (id {:#010x}) from {} samples -> {}",
        dict.bytes().len(),
        dict.id(),
        samples.len(),
        args.out.display()
    );
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let (train_set, test_set) = match &args.samples {
        Some(path) => {
            let all = gather_samples(path, args.chunk)?;
            // every fifth sample is held out
            let (test, train): (Vec<_>, Vec<_>) =
                all.into_iter().enumerate().partition(|(i, _)| i % 5 == 4);
            (
                train.into_iter().map(|(_, s)| s).collect::<Vec<_>>(),
                test.into_iter().map(|(_, s)| s).collect::<Vec<_>>(),
            )
        }
        None => (
            template_baskets(
                args.baskets,
                args.chunk,
                args.seed,
                args.seed.wrapping_mul(2),
            ),
            template_baskets(
                args.baskets / 4,
                args.chunk,
                args.seed,
                args.seed.wrapping_mul(2) + 1,
            ),
        ),
    };
    let sizes = match &args.sizes {
        None => SWEEP_SIZES.to_vec(),
        Some(s) => s
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| CliError::Usage(format!("--sizes: {e}")))
            })
            .collect::<Result<_, _>>()?,
    };
    let level = Level::new(args.level).map_err(|e| CliError::Usage(e.to_string()))?;
    let points = dictionary_sweep(&train_set, &test_set, &sizes, args.codec, level)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record([
        "target_size",
        "dict_bytes",
        "test_samples",
        "total_without",
        "total_with",
        "total_with_dict",
        "status",
    ])
    .map_err(csv_err)?;
    for p in &points {
        let status = match &p.status {
            CellStatus::Ok => "ok".to_string(),
            CellStatus::Error(m) => format!("error: {m}"),
        };
        w.write_record([
            p.target_size.to_string(),
            p.dict_bytes.to_string(),
            test_set.len().to_string(),
            p.total_without.to_string(),
            p.total_with.to_string(),
            p.total_with_dictionary_cost().to_string(),
            status,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(stdout_err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a),
        Command::Verify { file, quiet } => verify(&file, quiet),
        Command::Read(a) => read(a),
        Command::Write(a) => write(a),
        Command::TrainDict(a) => train(a),
        Command::DictSweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Verify) => ExitCode::from(1),
        Err(CliError::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("basket: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
