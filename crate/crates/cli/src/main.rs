//! `osp`: decide obvious strategy-proofness of finite choice rules,
//! construct and verify mechanisms and non-existence certificates, and run
//! the oracle-equivalence sweep and scaling benchmark.
//!
//! Machine-readable JSON goes to stdout, human-readable summaries to
//! stderr. Exit codes: 0 = yes/valid, 3 = no/invalid, 1 = usage error,
//! 2 = input error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use osp_core::bench::{run_bench, BenchFamily};
use osp_core::certify;
use osp_core::decide::{decide_parallel, decide_with, DecideOptions, SelectionPolicy};
use osp_core::mechanism::{verify_osp, verify_wellformed, MechanismTree};
use osp_core::oracle::{Oracle, OracleMode, DEFAULT_MAX_VERTICES};
use osp_core::sweep::{run_sweep, SweepConfig};
use osp_core::{check_sp, gen_dictatorship, gen_random, gen_sat, BooleanFormula, ChoiceInstance};

const EXIT_YES: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_INPUT: i32 = 2;
const EXIT_NO: i32 = 3;

#[derive(Parser)]
#[command(name = "osp", version, about = "Obvious strategy-proofness toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check strategy-proofness; exit 0 iff strategy-proof.
    #[command(name = "check-sp")]
    CheckSp { instance: PathBuf },

    /// Decide OSP-implementability; exit 0 with a mechanism, exit 3 with a
    /// certificate.
    Decide {
        instance: PathBuf,
        /// Agent-selection policy: lowest | roundrobin
        #[arg(long, default_value = "lowest")]
        policy: SelectionPolicy,
        /// Emit a leaf as soon as the rule is constant on a vertex.
        #[arg(long)]
        stop_when_constant: bool,
        /// Decide sibling branches on the rayon thread pool.
        #[arg(long)]
        parallel: bool,
        /// Write the mechanism JSON here on a positive verdict.
        #[arg(long)]
        mechanism: Option<PathBuf>,
        /// Write the non-existence certificate JSON here on a negative
        /// verdict.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },

    /// Verify a mechanism file against an instance; exit 0 iff well-formed
    /// and obviously strategy-proof.
    #[command(name = "verify-mechanism")]
    VerifyMechanism {
        instance: PathBuf,
        mechanism: PathBuf,
    },

    /// Verify a non-existence certificate; exit 0 iff valid.
    #[command(name = "verify-certificate")]
    VerifyCertificate {
        instance: PathBuf,
        certificate: PathBuf,
    },

    /// Exponential-time ground truth on desk-scale instances.
    #[command(subcommand)]
    Oracle(OracleCommand),

    /// Instance generators.
    #[command(subcommand)]
    Gen(GenCommand),

    /// Time the decision procedure across a size grid and fit the log-log
    /// slope against table size.
    Bench {
        /// constant | dictatorship | random
        #[arg(long)]
        family: BenchFamily,
        /// Per-agent type-set sizes of the two-agent benchmark instances.
        #[arg(long, required = true, value_delimiter = ',')]
        sizes: Vec<u32>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },

    /// Run the full oracle-equivalence suite and print a pass/fail tally;
    /// exit 0 iff everything agrees.
    Sweep {
        #[arg(long, default_value_t = 3)]
        max_agents: usize,
        #[arg(long, default_value_t = 3)]
        max_types: u32,
        #[arg(long, default_value_t = 3)]
        max_outcomes: u32,
        /// Number of seeded random instances.
        #[arg(long, default_value_t = 1000)]
        random: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Skip the exhaustive 2-agent 2x2-type 2-outcome block.
        #[arg(long)]
        no_exhaustive: bool,
        /// Utility assignments per exhaustive choice table.
        #[arg(long, default_value_t = 20)]
        assignments: usize,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Decide by explicit O-dag search; exit 0 iff OSP-implementable.
    Decide {
        instance: PathBuf,
        /// reach | childless
        #[arg(long, default_value = "reach")]
        mode: OracleMode,
        #[arg(long, default_value_t = DEFAULT_MAX_VERTICES)]
        max_vertices: u64,
    },
    /// Emit the full vertex/edge listing of the O-dag as JSON.
    #[command(name = "dump-odag")]
    DumpOdag {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_VERTICES)]
        max_vertices: u64,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// SAT-reduction instance of a prefix-notation formula, e.g.
    /// "(and (or x0 (not x1)) x2)".
    Sat {
        #[arg(long)]
        formula: String,
        /// Pad the variable count beyond the largest index mentioned.
        #[arg(long)]
        vars: Option<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Dictatorship: agent 0's report picks the outcome.
    Dict {
        #[arg(long, required = true, value_delimiter = ',')]
        sizes: Vec<u32>,
        /// Outcome per type of agent 0; defaults to the identity map.
        #[arg(long, value_delimiter = ',')]
        map: Option<Vec<u32>>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Seeded uniform-random instance.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, required = true, value_delimiter = ',')]
        sizes: Vec<u32>,
        #[arg(long, default_value_t = 2)]
        outcomes: u32,
        #[arg(long, default_value_t = 0)]
        payoff_min: i64,
        #[arg(long, default_value_t = 3)]
        payoff_max: i64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args)]
struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let usage_ok = matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if usage_ok { EXIT_YES } else { EXIT_USAGE };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_INPUT
        }
    }
}

fn run(command: Command) -> Result<i32, String> {
    match command {
        Command::CheckSp { instance } => {
            let instance = load_instance(&instance)?;
            let report = check_sp(&instance);
            if report.sp {
                eprintln!("strategy-proof ({} comparisons)", report.comparisons);
                Ok(EXIT_YES)
            } else {
                let violation = report.violation.expect("violation on a negative verdict");
                println!("{}", pretty(&violation)?);
                eprintln!(
                    "not strategy-proof: agent {} of type {} gains {} -> {} by reporting {}",
                    violation.agent,
                    violation.true_type,
                    violation.truthful_payoff,
                    violation.deviant_payoff,
                    violation.deviation
                );
                Ok(EXIT_NO)
            }
        }

        Command::Decide {
            instance,
            policy,
            stop_when_constant,
            parallel,
            mechanism,
            certificate,
        } => {
            let instance = load_instance(&instance)?;
            let options = DecideOptions {
                policy,
                stop_when_constant,
            };
            let result = if parallel {
                decide_parallel(&instance, options)
            } else {
                decide_with(&instance, options)
            };
            eprintln!(
                "visited {} vertices, recursion depth {}",
                result.vertices_visited, result.max_depth
            );
            if result.implementable {
                let tree = result.mechanism.expect("mechanism on a positive verdict");
                let json = tree.to_json();
                if let Some(path) = mechanism {
                    fs::write(&path, &json).map_err(|e| format!("writing {path:?}: {e}"))?;
                }
                println!("{json}");
                eprintln!(
                    "OSP-implementable: mechanism with {} leaves, depth {}",
                    tree.num_leaves(),
                    tree.depth()
                );
                Ok(EXIT_YES)
            } else {
                let vertex = result.failing_vertex.expect("vertex on a negative verdict");
                let cert = certify::extract(&instance, &vertex).map_err(display)?;
                let json = cert.to_json();
                if let Some(path) = certificate {
                    fs::write(&path, &json).map_err(|e| format!("writing {path:?}: {e}"))?;
                }
                println!("{json}");
                eprintln!(
                    "not OSP-implementable: childless vertex {:?}",
                    vertex.sets()
                );
                Ok(EXIT_NO)
            }
        }

        Command::VerifyMechanism {
            instance,
            mechanism,
        } => {
            let instance = load_instance(&instance)?;
            let bytes = read(&mechanism)?;
            let tree = MechanismTree::load(&bytes).map_err(display)?;
            let violations = verify_wellformed(&instance, &tree);
            if !violations.is_empty() {
                println!("{}", pretty(&violations)?);
                eprintln!(
                    "mechanism is not well-formed ({} violations)",
                    violations.len()
                );
                return Ok(EXIT_NO);
            }
            let report = verify_osp(&instance, &tree).map_err(display)?;
            println!("{}", pretty(&report)?);
            if report.osp {
                eprintln!("mechanism is well-formed and obviously strategy-proof");
                Ok(EXIT_YES)
            } else {
                eprintln!("mechanism is well-formed but not obviously strategy-proof");
                Ok(EXIT_NO)
            }
        }

        Command::VerifyCertificate {
            instance,
            certificate,
        } => {
            let instance = load_instance(&instance)?;
            let bytes = read(&certificate)?;
            let cert = osp_core::NonOspCertificate::load(&bytes).map_err(display)?;
            let valid = certify::verify(&instance, &cert).map_err(display)?;
            println!("{}", pretty(&serde_json::json!({ "valid": valid }))?);
            if valid {
                eprintln!("certificate verifies: the choice rule is not OSP-implementable");
                Ok(EXIT_YES)
            } else {
                eprintln!("certificate does not verify");
                Ok(EXIT_NO)
            }
        }

        Command::Oracle(OracleCommand::Decide {
            instance,
            mode,
            max_vertices,
        }) => {
            let instance = load_instance(&instance)?;
            let oracle = Oracle::new(&instance).with_max_vertices(max_vertices);
            let implementable = oracle.decide_explicit(mode).map_err(display)?;
            println!(
                "{}",
                pretty(&serde_json::json!({ "implementable": implementable, "mode": mode }))?
            );
            eprintln!(
                "oracle: {}",
                if implementable {
                    "OSP-implementable"
                } else {
                    "not OSP-implementable"
                }
            );
            Ok(if implementable { EXIT_YES } else { EXIT_NO })
        }

        Command::Oracle(OracleCommand::DumpOdag {
            instance,
            max_vertices,
        }) => {
            let instance = load_instance(&instance)?;
            let dag = Oracle::new(&instance)
                .with_max_vertices(max_vertices)
                .build()
                .map_err(display)?;
            let dump = dag.dump();
            println!("{}", dump.to_json());
            eprintln!(
                "O-dag: {} vertices, {} edges",
                dump.vertices.len(),
                dump.edges.len()
            );
            Ok(EXIT_YES)
        }

        Command::Gen(command) => {
            let (mut instance, labels, out) = match command {
                GenCommand::Sat { formula, vars, out } => {
                    let formula = BooleanFormula::parse(&formula, vars).map_err(display)?;
                    let labels = serde_json::json!({
                        "generator": "sat",
                        "formula": formula.expr().to_string(),
                        "vars": formula.num_vars(),
                    });
                    (gen_sat(&formula).map_err(display)?, labels, out)
                }
                GenCommand::Dict { sizes, map, out } => {
                    if sizes.is_empty() {
                        return Err("--sizes must name at least one agent".into());
                    }
                    let map = map.unwrap_or_else(|| (0..sizes[0]).collect());
                    let labels = serde_json::json!({
                        "generator": "dictatorship",
                        "sizes": sizes,
                        "map": map,
                    });
                    (gen_dictatorship(&sizes, &map).map_err(display)?, labels, out)
                }
                GenCommand::Random {
                    seed,
                    sizes,
                    outcomes,
                    payoff_min,
                    payoff_max,
                    out,
                } => {
                    let labels = serde_json::json!({
                        "generator": "random",
                        "seed": seed,
                        "payoff_range": [payoff_min, payoff_max],
                    });
                    (
                        gen_random(seed, &sizes, outcomes, payoff_min, payoff_max)
                            .map_err(display)?,
                        labels,
                        out,
                    )
                }
            };
            instance.set_labels(Some(labels));
            let json = instance.to_json();
            match out.output {
                Some(path) => {
                    fs::write(&path, &json).map_err(|e| format!("writing {path:?}: {e}"))?;
                    eprintln!("wrote {}", path.display());
                }
                None => println!("{json}"),
            }
            Ok(EXIT_YES)
        }

        Command::Bench {
            family,
            sizes,
            reps,
            seed,
        } => {
            if sizes.is_empty() {
                return Err("--sizes must name at least one size".into());
            }
            let report = run_bench(family, &sizes, reps, seed).map_err(display)?;
            println!("{}", report.to_json());
            for point in &report.points {
                eprintln!(
                    "|c| = {:>10}  median {:>12} ns",
                    point.table_size, point.median_ns
                );
            }
            match report.slope {
                Some(slope) => eprintln!("log-log slope: {slope:.3}"),
                None => eprintln!("log-log slope: not fitted (need at least 3 points)"),
            }
            Ok(EXIT_YES)
        }

        Command::Sweep {
            max_agents,
            max_types,
            max_outcomes,
            random,
            seed,
            no_exhaustive,
            assignments,
        } => {
            let config = SweepConfig {
                exhaustive_2x2: !no_exhaustive,
                utility_assignments: assignments,
                random_instances: random,
                max_agents,
                max_types,
                max_outcomes,
                seed,
                ..SweepConfig::default()
            };
            let report = run_sweep(&config);
            println!("{}", report.to_json());
            eprintln!(
                "{} instances ({} implementable, {} not)",
                report.instances, report.implementable, report.not_implementable
            );
            let tally = &report.tally;
            for (name, count) in [
                ("oracle equivalence", tally.oracle_equivalence),
                ("oracle modes agree", tally.oracle_modes_agree),
                ("policy independence", tally.policy_independence),
                ("mechanism verified", tally.mechanism_verified),
                ("certificate verified", tally.certificate_verified),
                ("OSP implies SP", tally.osp_implies_sp),
            ] {
                eprintln!(
                    "{name:<22} {:>6} passed {:>4} failed",
                    count.passed, count.failed
                );
            }
            eprintln!("sweep: {}", if report.all_passed { "PASS" } else { "FAIL" });
            Ok(if report.all_passed { EXIT_YES } else { EXIT_NO })
        }
    }
}

fn load_instance(path: &Path) -> Result<ChoiceInstance, String> {
    ChoiceInstance::load(&read(path)?).map_err(display)
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    fs::read(path).map_err(|e| format!("reading {path:?}: {e}"))
}

fn pretty<T: serde::Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string_pretty(value).map_err(display)
}

fn display(err: impl std::fmt::Display) -> String {
    err.to_string()
}
