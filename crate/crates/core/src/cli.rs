//! Command-line front end. Every subcommand is a pure function of its
//! flags and input files.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cachesim::{self, MissCurve, Policy};
use crate::error::{Error, Result};
use crate::locality::{self, WindowMode};
use crate::output;
use crate::searchcost::{self, CostModel, SearchTimeCurve};
use crate::synth::{self, GeneratorSpec, Model};
use crate::trace::{self, Trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const DEFAULT_WINDOWS: &str = "5,10,20,50,100,200";
const REPORT_QUANTILES: [f64; 2] = [0.5, 0.9];

#[derive(Debug, Parser)]
#[command(
    name = "addrloc",
    version,
    about = "Destination-address locality analysis and cache replacement simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print frame, address and destination counts and the trace duration.
    Summarize { trace: PathBuf },
    /// Generate a synthetic trace.
    Gen(GenArgs),
    /// Split a trace into frames whose protocol tag matches and the rest.
    Split {
        trace: PathBuf,
        /// Protocol tag to match exactly (frames without a tag never match).
        #[arg(long)]
        proto: String,
        #[arg(long)]
        matching: PathBuf,
        #[arg(long)]
        rest: PathBuf,
    },
    /// Concentration curve. CSV: dest_fraction,frame_fraction
    Concentration {
        trace: PathBuf,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Average working-set size per window. CSV: window,mode,avg
    Wss {
        trace: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = DEFAULT_WINDOWS)]
        windows: Vec<usize>,
        #[arg(long, default_value = "disjoint")]
        mode: WindowMode,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// LRU stack-distance histogram. CSV: distance,count,pdf,cdf (last row `inf` = first references)
    Stackdist {
        trace: PathBuf,
        /// Use the quadratic move-to-top stack instead of the tree.
        #[arg(long)]
        naive: bool,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Run lengths of identical consecutive destinations. CSV: length,count,frequency
    Runs {
        trace: PathBuf,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Replacement sweep. Writes miss_ratio.csv and interfault.csv (capacity,<policy>...)
    Simulate {
        trace: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Normalized search time per policy. CSV: capacity,<policy>...
    Searchtime {
        trace: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        cost: CostArgs,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Run every analysis and write one CSV per table plus summary.txt.
    Report {
        trace: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        cost: CostArgs,
        #[arg(long, value_delimiter = ',', default_value = DEFAULT_WINDOWS)]
        windows: Vec<usize>,
        #[arg(long, default_value = "disjoint")]
        mode: WindowMode,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Cyclic model with this cycle length.
    #[arg(long, group = "model")]
    cyclic: Option<usize>,
    /// Uniform independent references over this many addresses.
    #[arg(long, group = "model")]
    uniform: Option<usize>,
    /// Independent references with this comma-separated pmf.
    #[arg(long, group = "model", value_delimiter = ',')]
    irm: Option<Vec<f64>>,
    /// LRU stack model with this comma-separated pmf over depths 1, 2, ...
    #[arg(long, group = "model", value_delimiter = ',')]
    lsm: Option<Vec<f64>>,
    /// Initial stack size for --lsm (addresses d0..), default: pmf length.
    #[arg(long, requires = "lsm")]
    stack_size: Option<usize>,
    /// JSON generator spec; --length and --seed override its values when given.
    #[arg(long, group = "model")]
    spec: Option<PathBuf>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "MIN,LRU,FIFO,RAND")]
    policies: Vec<String>,
    /// Default: powers of two below the destination count, then the count itself.
    #[arg(long, value_delimiter = ',')]
    capacities: Option<Vec<usize>>,
    /// Seed for RAND.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct CostArgs {
    /// binary | linear | constant:<value>
    #[arg(long, default_value = "binary")]
    cost: CostModel,
    /// Full table size; default: distinct destinations.
    #[arg(long)]
    database_size: Option<usize>,
}

/// Parses `argv` (program name first) and runs the subcommand, returning
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Summarize { trace } => {
            let t = load(&trace)?;
            let summary = t.summarize()?;
            let mut out = io::stdout().lock();
            writeln!(out, "{summary}")?;
            Ok(())
        }
        Command::Gen(args) => gen(args),
        Command::Split {
            trace,
            proto,
            matching,
            rest,
        } => {
            let t = load(&trace)?;
            let (hit, other) = trace::split_by_protocol(&t, |p| p == proto);
            trace::write_trace(&hit, create(&matching)?).map_err(|e| context(e, &matching))?;
            trace::write_trace(&other, create(&rest)?).map_err(|e| context(e, &rest))?;
            Ok(())
        }
        Command::Concentration { trace, out } => {
            let curve = locality::concentration_curve(&load(&trace)?.destinations())?;
            output::write_concentration(sink(&out)?, &curve)
        }
        Command::Wss {
            trace,
            windows,
            mode,
            out,
        } => {
            let dst = load(&trace)?.destinations();
            let reports = windows
                .iter()
                .map(|&w| locality::working_set(&dst, w, mode))
                .collect::<Result<Vec<_>>>()?;
            output::write_wss(sink(&out)?, &reports)
        }
        Command::Stackdist { trace, naive, out } => {
            let dst = load(&trace)?.destinations();
            let (_, hist) = if naive {
                locality::stack_distances_naive(&dst)
            } else {
                locality::stack_distances(&dst)
            };
            output::write_stackdist(sink(&out)?, &hist)
        }
        Command::Runs { trace, out } => {
            let runs = locality::run_lengths(&load(&trace)?.destinations());
            output::write_runs(sink(&out)?, &runs)
        }
        Command::Simulate { trace, sweep, out_dir } => {
            let t = load(&trace)?;
            let curves = sweep_all(&t, &sweep)?;
            fs::create_dir_all(&out_dir)?;
            output::write_miss_ratio_table(create(&out_dir.join("miss_ratio.csv"))?, &curves)?;
            output::write_interfault_table(create(&out_dir.join("interfault.csv"))?, &curves)
        }
        Command::Searchtime { trace, sweep, cost, out } => {
            let t = load(&trace)?;
            let curves = sweep_all(&t, &sweep)?;
            let n = database_size(&t, &cost)?;
            let times = search_times(&curves, n, &cost.cost)?;
            output::write_search_time_table(sink(&out)?, &times)
        }
        Command::Report {
            trace,
            sweep,
            cost,
            windows,
            mode,
            out_dir,
        } => report(&trace, &sweep, &cost, &windows, mode, &out_dir),
    }
}

fn gen(args: GenArgs) -> Result<()> {
    let model = if let Some(period) = args.cyclic {
        Some(Model::Cyclic { period })
    } else if let Some(addresses) = args.uniform {
        Some(Model::UniformIrm { addresses })
    } else if let Some(pmf) = args.irm {
        Some(Model::Irm { pmf })
    } else if let Some(distance_pmf) = args.lsm {
        let size = args.stack_size.unwrap_or(distance_pmf.len());
        Some(Model::LruStack {
            distance_pmf,
            initial_stack: (0..size).map(|i| format!("d{i}")).collect(),
        })
    } else {
        None
    };
    let spec = match (model, &args.spec) {
        (Some(model), _) => GeneratorSpec::new(
            model,
            args.length
                .ok_or_else(|| Error::param("--length is required unless --spec is given"))?,
            args.seed.unwrap_or(0),
        ),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| context(e, path))?;
            let mut spec: GeneratorSpec = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))?;
            if let Some(length) = args.length {
                spec.length = length;
            }
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            spec
        }
        (None, None) => {
            return Err(Error::param(
                "choose a model: --cyclic, --uniform, --irm, --lsm or --spec",
            ))
        }
    };
    let t = synth::generate(&spec)?;
    trace::write_trace(&t, sink(&args.out)?).map_err(|e| context(e, &args.out))?;
    Ok(())
}

fn report(
    path: &Path,
    sweep: &SweepArgs,
    cost: &CostArgs,
    windows: &[usize],
    mode: WindowMode,
    out_dir: &Path,
) -> Result<()> {
    let t = load(path)?;
    let summary = t.summarize()?;
    let dst = t.destinations();
    fs::create_dir_all(out_dir)?;
    let file = |name: &str| create(&out_dir.join(name));

    let concentration = locality::concentration_curve(&dst)?;
    output::write_concentration(file("concentration.csv")?, &concentration)?;
    output::write_concentration_quantiles(file("concentration_quantiles.csv")?, &concentration, &REPORT_QUANTILES)?;

    let runs = locality::run_lengths(&dst);
    output::write_runs(file("runs.csv")?, &runs)?;

    let wss = windows
        .iter()
        .filter(|&&w| w <= dst.len())
        .map(|&w| locality::working_set(&dst, w, mode))
        .collect::<Result<Vec<_>>>()?;
    output::write_wss(file("wss.csv")?, &wss)?;

    let (_, hist) = locality::stack_distances(&dst);
    output::write_stackdist(file("stackdist.csv")?, &hist)?;
    output::write_stack_levels(file("stack_levels.csv")?, &hist, &output::STACK_LEVELS)?;

    let curves = sweep_all(&t, sweep)?;
    output::write_miss_ratio_table(file("miss_ratio.csv")?, &curves)?;
    output::write_interfault_table(file("interfault.csv")?, &curves)?;

    let n = database_size(&t, cost)?;
    let times = search_times(&curves, n, &cost.cost)?;
    output::write_search_time_table(file("searchtime.csv")?, &times)?;

    let mut text = BufWriter::new(file("summary.txt")?);
    writeln!(text, "trace: {}", path.display())?;
    writeln!(text, "{summary}")?;
    for q in REPORT_QUANTILES {
        let x = concentration.quantile(q).expect("quantile in range");
        writeln!(text, "{:.0}% of frames go to {:.4} of destinations", q * 100.0, x)?;
    }
    writeln!(
        text,
        "run length 1 frequency {:.4}, longest run {}",
        runs.frequency(1),
        runs.longest()
    )?;
    for r in &wss {
        writeln!(text, "working set W={} ({}) average {:.4}", r.window, r.mode, r.average_wss)?;
    }
    writeln!(
        text,
        "stack: top-of-stack frequency {:.4}, first references {}",
        hist.pdf(1),
        hist.infinite_count
    )?;
    writeln!(text, "search time: database size {n}, cost model {}", cost.cost)?;
    for (name, curve) in &times {
        let (c, best) = searchcost::optimal_cache_size(curve)?;
        writeln!(text, "{name}: optimal cache size {c}, normalized search time {best:.4}")?;
    }
    text.flush()?;
    Ok(())
}

fn load(path: &Path) -> Result<Trace> {
    let parsed = if path == Path::new("-") {
        trace::parse_trace(io::stdin().lock())
    } else {
        let f = File::open(path).map_err(|e| context(e, path))?;
        trace::parse_trace(BufReader::new(f))
    };
    parsed.map_err(|e| match e {
        Error::Parse { line, reason } => Error::Parse {
            line,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    })
}

fn context(e: io::Error, path: &Path) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| context(e, path))?))
}

fn sink(path: &Path) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        Ok(Box::new(create(path)?))
    }
}

/// Powers of two below `distinct`, then `distinct` itself.
pub fn default_capacities(distinct: usize) -> Vec<usize> {
    let mut caps: Vec<usize> = std::iter::successors(Some(1usize), |c| c.checked_mul(2))
        .take_while(|&c| c < distinct)
        .collect();
    caps.push(distinct.max(1));
    caps
}

fn sweep_all(t: &Trace, args: &SweepArgs) -> Result<Vec<MissCurve>> {
    let summary = t.summarize()?;
    let capacities = args
        .capacities
        .clone()
        .unwrap_or_else(|| default_capacities(summary.distinct_destinations));
    let dst = t.destinations();
    args.policies
        .iter()
        .map(|name| {
            let policy = Policy::parse_with_seed(name, args.seed)?;
            cachesim::sweep(&dst, policy, &capacities)
        })
        .collect()
}

fn database_size(t: &Trace, cost: &CostArgs) -> Result<usize> {
    match cost.database_size {
        Some(0) => Err(Error::param("database size must be at least 1")),
        Some(n) => Ok(n),
        None => Ok(t.summarize()?.distinct_destinations),
    }
}

fn search_times(curves: &[MissCurve], n: usize, model: &CostModel) -> Result<Vec<(String, SearchTimeCurve)>> {
    curves
        .iter()
        .map(|c| Ok((c.policy.to_string(), searchcost::search_time_curve(c, n, model)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_capacity_list() {
        assert_eq!(default_capacities(296), [1, 2, 4, 8, 16, 32, 64, 128, 256, 296]);
        assert_eq!(default_capacities(8), [1, 2, 4, 8]);
        assert_eq!(default_capacities(1), [1]);
        assert_eq!(default_capacities(0), [1]);
    }

    #[test]
    fn usage_errors_have_their_own_exit_code() {
        assert_eq!(run(["addrloc", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["addrloc", "runs"]), EXIT_USAGE);
        assert_eq!(run(["addrloc", "wss", "x.tsv", "--mode", "diagonal"]), EXIT_USAGE);
        assert_eq!(run(["addrloc", "gen", "--cyclic", "3", "--uniform", "4"]), EXIT_USAGE);
        assert_eq!(run(["addrloc", "--help"]), EXIT_OK);
    }

    #[test]
    fn runtime_errors_exit_one() {
        assert_eq!(run(["addrloc", "runs", "/nonexistent/trace.tsv"]), EXIT_FAILURE);
    }
}
