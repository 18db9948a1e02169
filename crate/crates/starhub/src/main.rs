use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use starhub::corpus::{generate_corpus, read_corpus, write_corpus, CorpusConfig};
use starhub::experiment::{run_experiment, CheckPlan, ExperimentConfig};
use starhub::io::read_instance_file;
use starhub_core::exact::{solve_exact, DEFAULT_LIMIT};
use starhub_core::lp::{build_lrp, solve_lrp, write_lp_format};
use starhub_core::ratio::{minimize_ratio, ratio_curve};
use starhub_core::rounding::{run_pipeline, RoundingOptions};
use starhub_core::DEFAULT_R;

#[derive(Parser)]
#[command(name = "starhub", version, about = "Star-star hub-and-spoke assignment: LP rounding, exact search and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(clap::Args)]
struct Rounding {
    /// Base of the geometric hub classes.
    #[arg(long, default_value_t = DEFAULT_R)]
    r: f64,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Draw within-class thresholds from [0, 1) instead of [0, max remaining fraction).
    #[arg(long)]
    no_truncate_u: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded corpus of random instances, one JSON file each.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = CorpusConfig::default().seed)]
        seed: u64,
    },
    /// Solve the linear relaxation and print the fractional assignment.
    SolveLp {
        instance: PathBuf,
        /// Also write the relaxation in CPLEX LP format.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Round the relaxation and keep the cheapest of several trials.
    Round {
        instance: PathBuf,
        #[command(flatten)]
        rounding: Rounding,
        #[command(flatten)]
        output: Output,
    },
    /// Enumerate all assignments for the optimum.
    Exact {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Run LP, rounding, exact search and the invariant suites on a corpus.
    Experiment {
        /// Directory of instance files; the default corpus when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Seed of the default corpus.
        #[arg(long, default_value_t = CorpusConfig::default().seed)]
        corpus_seed: u64,
        #[command(flatten)]
        rounding: Rounding,
        /// Skip the invariant suites.
        #[arg(long)]
        no_checks: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Tabulate the approximation-ratio curve and its minimizer.
    RatioCurve {
        #[arg(long, default_value_t = 1.1)]
        from: f64,
        #[arg(long, default_value_t = 4.0)]
        to: f64,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[command(flatten)]
        output: Output,
    },
}

fn emit(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_of<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn load(path: &Path) -> Result<starhub_core::Instance> {
    read_instance_file(path).with_context(|| format!("reading {}", path.display()))
}

#[derive(Serialize)]
struct LpReport {
    objective: f64,
    x: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct LpCell {
    nonhub: usize,
    hub: usize,
    x: f64,
}

#[derive(Serialize)]
struct RoundReport {
    lp_value: f64,
    best_cost: f64,
    best_trial: usize,
    mean_cost: f64,
    /// Hub of each non-hub, as external hub labels.
    assignment: Vec<usize>,
    costs: Vec<f64>,
}

#[derive(Serialize)]
struct ExactReport {
    value: f64,
    assignment: Vec<usize>,
    leaves: u64,
}

#[derive(Serialize)]
struct CurvePoint {
    r: f64,
    f: f64,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen { out, count, seed } => {
            let cfg = CorpusConfig {
                count,
                seed,
                ..Default::default()
            };
            write_corpus(&out, &generate_corpus(&cfg))?;
            eprintln!("wrote {count} instances to {}", out.display());
        }
        Command::SolveLp {
            instance,
            dump_lp,
            output,
        } => {
            let inst = load(&instance)?;
            if let Some(path) = dump_lp {
                let mut text = String::new();
                write_lp_format(&build_lrp(&inst), &mut text)?;
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            let lp = solve_lrp(&inst)?;
            let text = match output.format {
                Format::Json => json(&LpReport {
                    objective: lp.objective_value,
                    x: lp.x.clone(),
                })?,
                Format::Csv => {
                    let cells: Vec<LpCell> = lp
                        .x
                        .iter()
                        .enumerate()
                        .flat_map(|(p, row)| {
                            let inst = &inst;
                            row.iter().enumerate().map(move |(i, &x)| LpCell {
                                nonhub: p,
                                hub: inst.hub_id(i),
                                x,
                            })
                        })
                        .collect();
                    csv_of(&cells)?
                }
            };
            emit(&output, &text)?;
        }
        Command::Round {
            instance,
            rounding,
            output,
        } => {
            let inst = load(&instance)?;
            let opts = RoundingOptions {
                truncate_u: !rounding.no_truncate_u,
                ..Default::default()
            };
            let out = run_pipeline(&inst, rounding.r, rounding.trials, rounding.seed, &opts)?;
            let report = RoundReport {
                lp_value: out.lp.objective_value,
                best_cost: out.best_cost,
                best_trial: out.best_trial,
                mean_cost: out.mean_cost(),
                assignment: out.best.as_slice().iter().map(|&i| inst.hub_id(i)).collect(),
                costs: out.costs.clone(),
            };
            let text = match output.format {
                Format::Json => json(&report)?,
                Format::Csv => {
                    let rows: Vec<_> = out.costs.iter().enumerate().map(|(t, &c)| (t, c)).collect();
                    "trial,cost\n".to_string() + &csv_of(&rows)?
                }
            };
            emit(&output, &text)?;
        }
        Command::Exact {
            instance,
            limit,
            output,
        } => {
            let inst = load(&instance)?;
            let sol = solve_exact(&inst, limit)?;
            let report = ExactReport {
                value: sol.value,
                assignment: sol.assignment.as_slice().iter().map(|&i| inst.hub_id(i)).collect(),
                leaves: sol.leaves,
            };
            let text = match output.format {
                Format::Json => json(&report)?,
                Format::Csv => format!(
                    "value,assignment,leaves\n{},{},{}\n",
                    report.value,
                    report.assignment.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                    report.leaves
                ),
            };
            emit(&output, &text)?;
        }
        Command::Experiment {
            corpus,
            corpus_seed,
            rounding,
            no_checks,
            output,
        } => {
            let entries = match corpus {
                Some(dir) => read_corpus(&dir)?,
                None => generate_corpus(&CorpusConfig {
                    seed: corpus_seed,
                    ..Default::default()
                }),
            };
            let cfg = ExperimentConfig {
                r: rounding.r,
                trials: rounding.trials,
                seed: rounding.seed,
                truncate_u: !rounding.no_truncate_u,
                checks: (!no_checks).then(CheckPlan::default),
                ..Default::default()
            };
            let report = run_experiment(&entries, &cfg);
            let text = match output.format {
                Format::Json => report.to_json() + "\n",
                Format::Csv => report.to_csv(),
            };
            emit(&output, &text)?;
            for c in &report.checks {
                eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if !report.all_passed() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::RatioCurve { from, to, steps, output } => {
            if steps == 0 {
                bail!("--steps must be positive");
            }
            let grid: Vec<f64> = (0..=steps)
                .map(|k| from + (to - from) * k as f64 / steps as f64)
                .collect();
            let points: Vec<CurvePoint> = ratio_curve(&grid)?.into_iter().map(|(r, f)| CurvePoint { r, f }).collect();
            let (r_star, f_star) = minimize_ratio();
            let text = match output.format {
                Format::Json => json(&serde_json::json!({
                    "curve": points,
                    "minimizer": { "r": r_star, "f": f_star },
                }))?,
                Format::Csv => csv_of(&points)?,
            };
            emit(&output, &text)?;
            eprintln!("minimum f({r_star:.6}) = {f_star:.6}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
