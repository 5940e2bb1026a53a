//! `deliberate`: run, validate and plot bounded-conditioning decision cases.
//!
//! Exit codes: 0 success, 1 an invalid network under `validate`, 2 unreadable
//! input, parse or usage errors, 3 errors raised while running a case.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use deliberate_core::io::{
    parse_bif_with_warnings, parse_network_unchecked, ClockConfig, TraceHeader,
};
use deliberate_core::{
    customized_problem, emit_plot_data, parse_decision_problem, plot_tables, read_trace,
    run_case, write_trace, BeliefNetwork, CostSchedule, Error, Policy, RunConfig, TraceFile,
    TraceFormat,
};

#[derive(Debug, Parser)]
#[command(name = "deliberate", version, about = "Anytime inference with metareasoned stopping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NetworkFormat {
    /// `.bif` files are read as BIF, anything else as native TOML.
    Auto,
    Native,
    Bif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TraceFormatArg {
    Csv,
    Json,
}

impl From<TraceFormatArg> for TraceFormat {
    fn from(f: TraceFormatArg) -> Self {
        match f {
            TraceFormatArg::Csv => TraceFormat::Csv,
            TraceFormatArg::Json => TraceFormat::Json,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one decision case and report the recommendation.
    Run {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        network_format: NetworkFormat,
        #[arg(long)]
        problem: PathBuf,
        /// myopic, dominance-only or lookahead:k with k >= 2.
        #[arg(long, default_value = "myopic", value_parser = parse_policy)]
        policy: Policy,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        trace_format: TraceFormatArg,
        /// Write the three plot tables here.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Overrides the problem's uniform cost per instantiation.
        #[arg(long, value_parser = non_negative)]
        cost_per_instantiation: Option<f64>,
        #[arg(long, value_parser = non_negative)]
        meta_cost: Option<f64>,
        #[arg(long, value_parser = non_negative)]
        setup_factor: Option<f64>,
        #[arg(long, default_value_t = deliberate_core::conditioning::DEFAULT_INSTANTIATION_CAP)]
        instantiation_cap: usize,
        /// Recorded in the trace header; runs are deterministic regardless.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse a network and report structural problems.
    Validate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        network_format: NetworkFormat,
    },
    /// Rebuild plot tables from a saved trace.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        /// Defaults to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn non_negative(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("must be finite and non-negative, got {s}"))
    }
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(path: &Path, err: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: format!("{}: {err}", path.display()),
        }
    }
}

/// Errors found in the inputs map to 2; everything raised mid-run maps to 3.
fn run_failure(err: Error) -> Failure {
    let code = match err {
        Error::Parse(_)
        | Error::NotADag(_)
        | Error::InvalidNetwork(_)
        | Error::InvalidEvidence(_)
        | Error::Fit(_) => 2,
        _ => 3,
    };
    Failure {
        code,
        message: err.to_string(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn is_bif(path: &Path, format: NetworkFormat) -> bool {
    match format {
        NetworkFormat::Bif => true,
        NetworkFormat::Native => false,
        NetworkFormat::Auto => path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("bif")),
    }
}

/// Parses without the structural check so `validate` can list every issue.
fn load_unchecked(path: &Path, format: NetworkFormat) -> Result<BeliefNetwork<f64>, Failure> {
    let text = read(path)?;
    let parsed = if is_bif(path, format) {
        parse_bif_with_warnings(&text).map(|(net, warnings)| {
            for w in warnings {
                eprintln!("{}: {w}", path.display());
            }
            net
        })
    } else {
        parse_network_unchecked(&text)
    };
    parsed.map_err(|e| Failure::input(path, e))
}

fn load_network(path: &Path, format: NetworkFormat) -> Result<BeliefNetwork<f64>, Failure> {
    load_unchecked(path, format)?
        .into_checked()
        .map_err(|e| Failure::input(path, e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            network,
            network_format,
            problem,
            policy,
            trace,
            trace_format,
            plot,
            cost_per_instantiation,
            meta_cost,
            setup_factor,
            instantiation_cap,
            seed,
        } => {
            let net = load_network(&network, network_format)?;
            let spec = parse_decision_problem(&read(&problem)?)
                .map_err(|e| Failure::input(&problem, e))?;
            spec.bind(&net).map_err(|e| Failure::input(&problem, e))?;
            let mut clock: ClockConfig = spec.clock.clone();
            if let Some(c) = cost_per_instantiation {
                clock.cost_per_instantiation = CostSchedule::Uniform(c);
            }
            if let Some(m) = meta_cost {
                clock.meta_cost = m;
            }
            if let Some(s) = setup_factor {
                clock.setup_factor = s;
            }
            let config = RunConfig {
                policy,
                instantiation_cap,
                clock: Some(clock),
            };
            let result = run_case(&net, &spec, &config).map_err(run_failure)?;

            println!("recommendation: {}", result.recommendation);
            println!("halt reason: {}", result.halt_reason);
            println!("halt step: {} of {}", result.halt_step, result.schedule_len);
            println!("halt vtime: {:.6}", result.halt_vtime);
            println!(
                "final bounds: [{:.9}, {:.9}]",
                result.final_bounds.lb, result.final_bounds.ub
            );
            if let Some(p) = result.exact_posterior {
                println!("exact posterior: {p:.9}");
            }
            for (rule, outcome) in spec
                .criticality_rules
                .iter()
                .zip(&result.customization.outcomes)
            {
                println!("rule {} {:?}: {outcome:?}", rule.vital, rule.comparator);
            }

            if let Some(path) = trace {
                let file = TraceFile {
                    header: TraceHeader {
                        network_id: stem(&network),
                        problem_id: spec.id.clone().unwrap_or_else(|| stem(&problem)),
                        policy: policy.to_string(),
                        seed,
                    },
                    records: result.trace.clone(),
                };
                write(&path, &write_trace(&file, trace_format.into()))?;
            }
            if let Some(path) = plot {
                write(&path, &emit_plot_data(&result))?;
            }
            Ok(())
        }
        Command::Validate {
            network,
            network_format,
        } => {
            let net = load_unchecked(&network, network_format)?;
            let report = net.validate();
            for issue in &report.issues {
                println!("{issue}");
            }
            println!("{} variables", net.len());
            if report.ok {
                println!("ok");
                Ok(())
            } else {
                println!("invalid");
                Err(Failure {
                    code: 1,
                    message: format!("{}: network is invalid", network.display()),
                })
            }
        }
        Command::Plot {
            trace,
            problem,
            output,
        } => {
            let file = read_trace(&read(&trace)?).map_err(|e| Failure::input(&trace, e))?;
            file.validate().map_err(|e| Failure::input(&trace, e))?;
            let spec = parse_decision_problem(&read(&problem)?)
                .map_err(|e| Failure::input(&problem, e))?;
            let (dp, _) = customized_problem(&spec).map_err(|e| Failure::input(&problem, e))?;
            if let Some(name) = file
                .records
                .iter()
                .map(|r| &r.candidate_action)
                .find(|a| !dp.actions().iter().any(|x| &x.name == *a))
            {
                return Err(Failure::input(
                    &trace,
                    format!("action {name:?} is not in the problem"),
                ));
            }
            let tables = plot_tables(&file.records, &dp);
            match output {
                Some(path) => write(&path, &tables),
                None => {
                    print!("{tables}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
