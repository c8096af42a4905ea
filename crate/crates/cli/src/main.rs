use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use softqec::analysis::{footprint, Footprint, Target};
use softqec::experiment::{
    cells, chunk_seed, lambda_table, preset, read_csv, run_bb, run_memory_sweep, run_tau_sweep, write_csv, ExperimentConfig,
    ExperimentError, LambdaSummary, PreparedCell, ResultRow, PRESETS,
};
use softqec::pauli_sim::ShotBatch;

#[derive(Parser)]
#[command(name = "softqec", version, about = "Soft-information QEC memory experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Config file, or the name of a built-in preset
    #[arg(long, global = true)]
    config: Option<String>,
    /// Overrides the seed of the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; results go to stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one cell of the config and write the shots in binary form
    Sample {
        /// Index of the cell in the sweep grid
        #[arg(long, default_value_t = 0)]
        cell: usize,
        /// Number of shots (defaults to the config's shots)
        #[arg(long)]
        shots: Option<usize>,
    },
    /// Decode a binary shot file against one cell of the config
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        cell: usize,
    },
    /// Surface-code memory sweep
    Memory,
    /// Sweep of the measurement time, followed by a Λ table
    TauSweep,
    /// Bivariate bicycle code sweep
    Bb,
    /// Fit Λ to a result CSV
    LambdaFit {
        #[arg(long)]
        input: PathBuf,
        /// Keep distance 3 in the fit
        #[arg(long)]
        include_d3: bool,
    },
    /// Smallest surface-code patch reaching a target logical error rate
    Footprint {
        #[arg(long, required_unless_present = "input")]
        lambda: Option<f64>,
        #[arg(long, required_unless_present = "input")]
        p0: Option<f64>,
        /// Fit Λ from a result CSV instead
        #[arg(long, conflicts_with_all = ["lambda", "p0"])]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TargetArg::Mega)]
        target: TargetArg,
    },
    /// List the built-in presets, or print one
    Presets { name: Option<String> },
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    /// 10^-3
    Kilo,
    /// 10^-6
    Mega,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn load_config(g: &Global) -> Result<ExperimentConfig, CliError> {
    let Some(src) = &g.config else {
        return Err(CliError::Config("--config is required for this command".into()));
    };
    let text = if Path::new(src).is_file() {
        std::fs::read_to_string(src).map_err(|e| CliError::Config(format!("{src}: {e}")))?
    } else if let Some(text) = preset(src) {
        text.to_string()
    } else {
        return Err(CliError::Config(format!("'{src}' is neither a file nor a preset")));
    };
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| CliError::Config(format!("{src}: {e}")))?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &g.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_lambda(w: &mut dyn Write, table: &[LambdaSummary]) -> io::Result<()> {
    for s in table {
        writeln!(w, "[{} {} p={} tau_m={} {}]", s.platform, s.code, s.p, s.tau_m, s.decoder)?;
        for fit in &s.fits {
            writeln!(w, "{fit}")?;
        }
        if let Some((l, e)) = s.lambda {
            writeln!(w, "lambda_avg={l}")?;
            writeln!(w, "lambda_avg_err={e}")?;
        }
        for warn in &s.warnings {
            writeln!(w, "warning={warn}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn pick_cell(cfg: &ExperimentConfig, index: usize) -> Result<PreparedCell, CliError> {
    let grid = cells(cfg);
    let cell =
        *grid.get(index).ok_or_else(|| CliError::Config(format!("cell {index} out of range, the sweep has {} cells", grid.len())))?;
    Ok(PreparedCell::new(cfg, cell)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.global.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Memory | Command::TauSweep | Command::Bb => {
            let cfg = load_config(g)?;
            let rows: Vec<ResultRow> = match cli.command {
                Command::Memory => run_memory_sweep(&cfg)?,
                Command::TauSweep => run_tau_sweep(&cfg)?,
                _ => run_bb(&cfg)?,
            };
            write_csv(&rows, output(cfg.output.as_deref())?)?;
            if matches!(cli.command, Command::TauSweep) {
                let table = lambda_table(&rows, cfg.include_d3);
                // keep stdout clean when it carries the CSV
                if cfg.output.is_some() {
                    print_lambda(&mut io::stdout().lock(), &table)?;
                } else {
                    print_lambda(&mut io::stderr().lock(), &table)?;
                }
            }
        }
        Command::Sample { cell, shots } => {
            let cfg = load_config(g)?;
            let prep = pick_cell(&cfg, cell)?;
            let n = shots.unwrap_or(cfg.shots as usize);
            let batch = prep.sample(n, chunk_seed(prep.cell.seed(cfg.platform, cfg.seed), 0));
            let Some(path) = &cfg.output else {
                return Err(CliError::Config("sample writes binary data and needs --out".into()));
            };
            batch.write_to(output(Some(path))?).map_err(|e| CliError::Runtime(e.to_string()))?;
            eprintln!("wrote {n} shots, stream_hash={:016x}", batch.stream_hash());
        }
        Command::Decode { input, cell } => {
            let cfg = load_config(g)?;
            let prep = pick_cell(&cfg, cell)?;
            let file = File::open(&input).map_err(|e| CliError::Runtime(format!("{}: {e}", input.display())))?;
            let batch = ShotBatch::read_from(BufReader::new(file)).map_err(|e| CliError::Runtime(e.to_string()))?;
            if batch.n_det() != prep.dem.n_det {
                return Err(CliError::Runtime(format!("shot file has {} detectors, the cell has {}", batch.n_det(), prep.dem.n_det)));
            }
            let mut w = output(cfg.output.as_deref())?;
            writeln!(w, "decoder,shots,failures")?;
            for &dec in &cfg.decoders {
                let f = prep.failures(dec, &batch)?;
                writeln!(w, "{dec},{},{f}", batch.shots())?;
            }
        }
        Command::LambdaFit { input, include_d3 } => {
            let rows = read_results(&input)?;
            print_lambda(&mut output(g.out.as_deref())?, &lambda_table(&rows, include_d3))?;
        }
        Command::Footprint { lambda, p0, input, target } => {
            let target = match target {
                TargetArg::Kilo => Target::KiloQuop,
                TargetArg::Mega => Target::MegaQuop,
            };
            let mut w = output(g.out.as_deref())?;
            let mut report = |label: &str, lambda: f64, p0: f64| -> Result<(), CliError> {
                let res = footprint(lambda, p0, target).map_err(|e| CliError::Runtime(format!("{label}{e}")))?;
                match res {
                    Footprint::Found { d_min, n_qubits } => writeln!(w, "{label}d_min={d_min} n_qubits={n_qubits}")?,
                    Footprint::Overflow => writeln!(w, "{label}overflow: no odd distance up to 499 reaches the target")?,
                }
                Ok(())
            };
            match input {
                Some(path) => {
                    for s in lambda_table(&read_results(&path)?, false) {
                        let label = format!("{} {} p={} tau_m={} {}: ", s.platform, s.code, s.p, s.tau_m, s.decoder);
                        match (s.lambda, s.fits.first()) {
                            (Some((l, _)), Some(_)) => {
                                // average p0 in log space, matching the averaged Λ
                                let ln_p0 = s.fits.iter().map(|f| f.p0.ln()).sum::<f64>() / s.fits.len() as f64;
                                report(&label, l, ln_p0.exp())?;
                            }
                            _ => eprintln!("{label}no fit"),
                        }
                    }
                }
                None => report("", lambda.unwrap_or_default(), p0.unwrap_or_default())?,
            }
        }
        Command::Presets { name } => match name {
            Some(n) => print!("{}", preset(&n).ok_or_else(|| CliError::Config(format!("unknown preset '{n}'")))?),
            None => {
                for (n, _) in PRESETS {
                    println!("{n}");
                }
            }
        },
    }
    Ok(())
}

fn read_results(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(read_csv(BufReader::new(file))?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
