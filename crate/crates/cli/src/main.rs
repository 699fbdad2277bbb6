use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use netcount::count::{count_trace, CountError, CountOptions};
use netcount::explore::{reachability_set, ExploreLimits};
use netcount::parser::{parse_trace, read_net, serialize_net, serialize_trace, ParseError};
use netcount::reduce::{reduce, replay, CandidateOrder, ReductionLimits, ReductionTrace, Strategy};
use netcount::verify::{check_abstraction, check_trace_steps, AbstractionTriple, VerifyError};
use netcount::Net;

const EXIT_FAILS: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_PARSE: u8 = 65;

/// Count the reachable markings of Petri nets through structural reductions.
#[derive(Parser, Debug)]
#[command(name = "netcount", version)]
struct Cli {
    /// Worker threads for counting (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduce a net, writing `<model>.reduced.net` and `<model>.trace`.
    Reduce {
        model: PathBuf,
        #[command(flatten)]
        reduction: ReductionArgs,
        /// Where to write the trace (default `<model>.trace`).
        #[arg(long, value_name = "PATH")]
        emit_trace: Option<PathBuf>,
    },
    /// Count reachable markings.
    Count {
        model: PathBuf,
        #[command(flatten)]
        reduction: ReductionArgs,
        #[arg(long, default_value_t = 1_000_000)]
        max_markings: usize,
        /// Also write the reduction trace here.
        #[arg(long, value_name = "PATH")]
        emit_trace: Option<PathBuf>,
        /// Print the closed-form count when one exists.
        #[arg(long)]
        emit_polynomial: bool,
    },
    /// Build the reachability set explicitly.
    Explore {
        model: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        max_markings: usize,
        /// Write every marking, one per line.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
    /// Check that a reduction preserves the reachable markings, by
    /// enumeration. Exit 0 if it does, 1 if not, 2 if undecided.
    Verify {
        model: PathBuf,
        #[command(flatten)]
        reduction: ReductionArgs,
        /// Check this trace instead of reducing the net.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        /// Residual net the trace is claimed to lead to.
        #[arg(long, value_name = "PATH", requires = "trace")]
        residual: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        max_markings: usize,
    },
}

#[derive(Args, Debug)]
struct ReductionArgs {
    #[arg(long, default_value = "compact")]
    strategy: Strategy,
    /// Longest firing sequence tried when looking for redundant transitions.
    #[arg(long, default_value_t = 2)]
    max_seq_len: usize,
    /// Largest coefficient tried in redundant-place equations.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..=64))]
    coeff_bound: u64,
    /// Skip the general redundant-place search on nets with more places.
    #[arg(long, default_value_t = 50)]
    ilp_place_limit: usize,
    /// Longest place cycle merged by loop agglomeration.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(2..=64))]
    max_loop: u64,
    /// Shuffle the order in which rule candidates are tried.
    #[arg(long)]
    seed: Option<u64>,
}

impl ReductionArgs {
    fn limits(&self) -> ReductionLimits {
        ReductionLimits {
            max_seq_len: self.max_seq_len,
            coeff_bound: self.coeff_bound,
            ilp_place_limit: self.ilp_place_limit,
            max_loop: self.max_loop as usize,
            order: self.seed.map_or(CandidateOrder::Declaration, CandidateOrder::Shuffled),
        }
    }

    fn reduce(&self, net: &Net) -> ReductionTrace {
        reduce(net, self.strategy, &self.limits())
    }
}

/// An error carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: EXIT_FAILS, error }
    }
}

fn load(path: &Path) -> Result<Net, Failure> {
    read_net(path).map_err(|e| {
        let code = match e {
            ParseError::Io { .. } => EXIT_USAGE,
            _ => EXIT_PARSE,
        };
        Failure::new(code, e)
    })
}

fn sibling(model: &Path, suffix: &str) -> PathBuf {
    let stem = model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    model.with_file_name(format!("{stem}{suffix}"))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::from)
}

fn print_ratio(trace: &ReductionTrace) {
    let (a, b) = (&trace.initial_net, &trace.residual_net);
    println!("places: {} -> {}", a.num_places(), b.num_places());
    println!("transitions: {} -> {}", a.num_transitions(), b.num_transitions());
    println!("steps: {}", trace.steps.len());
}

fn cmd_reduce(model: &Path, args: &ReductionArgs, emit_trace: Option<&Path>) -> Result<u8, Failure> {
    let net = load(model)?;
    let trace = args.reduce(&net);
    write(&sibling(model, ".reduced.net"), &serialize_net(&trace.residual_net))?;
    let trace_path = emit_trace.map_or_else(|| sibling(model, ".trace"), Path::to_path_buf);
    write(&trace_path, &serialize_trace(&trace))?;
    print_ratio(&trace);
    Ok(0)
}

fn cmd_count(
    model: &Path,
    args: &ReductionArgs,
    max_markings: usize,
    emit_trace: Option<&Path>,
    emit_polynomial: bool,
) -> Result<u8, Failure> {
    let start = Instant::now();
    let net = load(model)?;
    let trace = args.reduce(&net);
    if let Some(p) = emit_trace {
        write(p, &serialize_trace(&trace))?;
    }
    let options = CountOptions {
        explore: ExploreLimits::with_max_markings(max_markings),
        ..CountOptions::default()
    };
    let report = match count_trace(trace, &options) {
        Ok(r) => r,
        Err(e @ CountError::Exploration { .. }) => {
            eprintln!("partial: {e}");
            return Err(Failure::new(EXIT_INCONCLUSIVE, e));
        }
        Err(e) => return Err(Failure::new(EXIT_FAILS, e)),
    };
    println!("{}", report.count);
    println!("approx: {}", report.scientific());
    if emit_polynomial {
        match &report.polynomial {
            Some(p) => println!("polynomial: {p}"),
            None => println!("polynomial: none ({})", report.term.display()),
        }
        for p in &report.term.params {
            println!("  {} = {} (initial bound of {})", p.name, p.value, p.place);
        }
    }
    println!(
        "residual: {} places, {} transitions, {} markings",
        report.residual_places(),
        report.trace.residual_net.num_transitions(),
        report.residual_markings
    );
    if report.fire_once_count > 0u32.into() {
        println!("note: {} markings counted before fire-once steps", report.fire_once_count);
    }
    println!(
        "steps: {}, places: {}, transitions: {}, time: {:.3}s",
        report.trace_len(),
        report.places(),
        report.transitions(),
        start.elapsed().as_secs_f64()
    );
    Ok(0)
}

fn cmd_explore(model: &Path, max_markings: usize, dump: Option<&Path>) -> Result<u8, Failure> {
    let net = load(model)?;
    let rs = reachability_set(&net, &ExploreLimits::with_max_markings(max_markings));
    if let Some(p) = dump {
        write(p, &rs.dump(&net))?;
    }
    if rs.complete {
        println!("{}", rs.len());
        Ok(0)
    } else {
        eprintln!(
            "partial: {} markings explored ({})",
            rs.len(),
            rs.stop_reason.expect("incomplete sets record a reason")
        );
        Ok(EXIT_INCONCLUSIVE)
    }
}

fn verdict(r: Result<bool, VerifyError>) -> Result<bool, Failure> {
    r.map_err(|e| match e {
        VerifyError::Incomplete { .. } | VerifyError::Linear(_) => Failure::new(EXIT_INCONCLUSIVE, e),
        _ => Failure::new(EXIT_FAILS, e),
    })
}

fn cmd_verify(
    model: &Path,
    args: &ReductionArgs,
    trace_path: Option<&Path>,
    residual: Option<&Path>,
    max_markings: usize,
) -> Result<u8, Failure> {
    let net = load(model)?;
    let trace = match trace_path {
        None => args.reduce(&net),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read {}", p.display()))
                .map_err(|e| Failure::new(EXIT_USAGE, e))?;
            let steps = parse_trace(&text).map_err(|e| Failure::new(EXIT_PARSE, e))?;
            let nets = match replay(&net, &steps) {
                Ok(n) => n,
                Err(e) => {
                    println!("fails: {e}");
                    return Ok(EXIT_FAILS);
                }
            };
            let residual_net = nets.last().expect("replay returns the final net").clone();
            if let Some(r) = residual {
                if load(r)? != residual_net {
                    println!("fails: trace does not lead to {}", r.display());
                    return Ok(EXIT_FAILS);
                }
            }
            ReductionTrace {
                initial_net: net,
                steps,
                residual_net,
            }
        }
    };
    let limits = ExploreLimits::with_max_markings(max_markings);
    let failing = check_trace_steps(&trace, &limits).map_err(|e| match e {
        VerifyError::Incomplete { .. } => Failure::new(EXIT_INCONCLUSIVE, e),
        e => Failure::new(EXIT_FAILS, e),
    })?;
    if let Some(i) = failing {
        println!("fails: step {} ({})", i + 1, trace.steps[i]);
        return Ok(EXIT_FAILS);
    }
    let triple = AbstractionTriple::from_trace(&trace).map_err(|e| Failure::new(EXIT_FAILS, e))?;
    if verdict(check_abstraction(&triple, &limits))? {
        println!("holds: {} steps", trace.steps.len());
        Ok(0)
    } else {
        println!("fails: reachable markings differ");
        Ok(EXIT_FAILS)
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .context("cannot configure worker threads")?;
    }
    match &cli.command {
        Command::Reduce {
            model,
            reduction,
            emit_trace,
        } => cmd_reduce(model, reduction, emit_trace.as_deref()),
        Command::Count {
            model,
            reduction,
            max_markings,
            emit_trace,
            emit_polynomial,
        } => cmd_count(model, reduction, *max_markings, emit_trace.as_deref(), *emit_polynomial),
        Command::Explore {
            model,
            max_markings,
            dump,
        } => cmd_explore(model, *max_markings, dump.as_deref()),
        Command::Verify {
            model,
            reduction,
            trace,
            residual,
            max_markings,
        } => cmd_verify(model, reduction, trace.as_deref(), residual.as_deref(), *max_markings),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if f.code == EXIT_INCONCLUSIVE {
                eprintln!("inconclusive: {:#}", f.error);
            } else {
                eprintln!("error: {:#}", f.error);
            }
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn sibling_replaces_extension() {
        assert_eq!(sibling(Path::new("dir/house.net"), ".trace"), PathBuf::from("dir/house.trace"));
        assert_eq!(sibling(Path::new("ring"), ".reduced.net"), PathBuf::from("ring.reduced.net"));
    }

    #[test]
    fn reduction_flags() {
        let cli = Cli::try_parse_from(["netcount", "count", "m.net", "--strategy", "clean", "--seed", "3"]).unwrap();
        let Command::Count { reduction, .. } = cli.command else { panic!() };
        assert_eq!(reduction.strategy, Strategy::Clean);
        assert_eq!(reduction.limits().order, CandidateOrder::Shuffled(3));
        assert!(Cli::try_parse_from(["netcount", "count", "m.net", "--strategy", "fast"]).is_err());
        assert!(Cli::try_parse_from(["netcount", "verify", "m.net", "--residual", "r.net"]).is_err());
    }
}
