use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use treeplan::experiment;
use treeplan::pipeline::{self, format_cost, PipelineError};
use treeplan::service::{self, AppState};
use treeplan::settings::{load_tree, load_units, read};
use treeplan::store::Store;
use treeplan::{gateway_for, Settings};
use treeplan_core::interchange::tree_to_json_pretty;
use treeplan_core::{retrieve_optimal, ObjectNode, RetrievalQuery, TransitionTable, UnifiedNetwork};
use treeplan_llm::{Backend, FixtureBackend, GenerationRequest, LiveBackend, LiveConfig, DEFAULT_N_TREES};
use treeplan_pddl::{check_plan, parse_domain, parse_problem, solve};

#[derive(Parser)]
#[command(name = "treeplan", version, about = "Merge, retrieve, correct and compile cooking task trees")]
struct Cli {
    #[command(flatten)]
    engine: EngineArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct EngineArgs {
    /// Motion cost file (JSON) instead of the bundled one.
    #[arg(long, global = true)]
    costs: Option<PathBuf>,
    /// Transition table instead of the bundled one.
    #[arg(long, global = true)]
    transitions: Option<PathBuf>,
    /// Skill catalog (PDDL actions plus macro expansions).
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Knowledge network units (file or directory) merged into every network.
    #[arg(long, global = true)]
    foon: Option<PathBuf>,
}

#[derive(Args)]
struct BackendArgs {
    /// Directory of recorded model replies.
    #[arg(long, conflicts_with = "endpoint")]
    fixtures: Option<PathBuf>,
    /// Chat-completions endpoint of a live model.
    #[arg(long, requires = "model")]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "TREEPLAN_API_KEY")]
    api_key_var: String,
    /// Record live replies in fixture layout under this directory.
    #[arg(long)]
    archive: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate trees for a demand and run the whole pipeline.
    Plan {
        demand: String,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value_t = DEFAULT_N_TREES)]
        n_trees: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the pipeline on trees already on disk.
    Run {
        #[arg(required = true)]
        trees: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Merge trees into a network and print it.
    Merge {
        #[arg(required = true)]
        trees: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the rejection log here.
        #[arg(long)]
        rejections: Option<PathBuf>,
    },
    /// Retrieve the cheapest tree for a goal from a stored network.
    Retrieve {
        network: PathBuf,
        /// Goal object as JSON, e.g. '{"label":"milk","states":["in glass"]}'.
        #[arg(long)]
        goal: String,
        /// JSON array of available objects; defaults to every leaf of the network.
        #[arg(long)]
        available: Option<String>,
    },
    /// Compile a tree to PDDL, solve every step and print the plan.
    Compile {
        tree: PathBuf,
        /// Write pddl/step_NN/{domain,problem}.pddl here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a PDDL problem with the embedded planner.
    Solve { domain: PathBuf, problem: PathBuf },
    /// Measure how often merging more trees improves the optimum.
    Experiment {
        corpus: PathBuf,
        #[arg(long, default_value_t = DEFAULT_N_TREES)]
        k_max: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Persist plans here; in memory otherwise.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Harvest a transition table from knowledge network units.
    ExtractTransitions {
        foon: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn settings(args: &EngineArgs) -> Result<Settings, PipelineError> {
    let mut s = Settings::builtin();
    if let Some(p) = &args.costs {
        s = s.with_costs_file(p)?;
    }
    if let Some(p) = &args.transitions {
        s = s.with_transitions_file(p)?;
    }
    if let Some(p) = &args.catalog {
        s = s.with_catalog_file(p)?;
    }
    if let Some(p) = &args.foon {
        s = s.with_foon(p)?;
    }
    Ok(s)
}

fn backend(args: &BackendArgs) -> Result<Option<Box<dyn Backend>>, PipelineError> {
    if let Some(dir) = &args.fixtures {
        return Ok(Some(Box::new(FixtureBackend::new(dir))));
    }
    let Some(endpoint) = &args.endpoint else { return Ok(None) };
    let mut config = LiveConfig::new(endpoint, args.model.as_deref().unwrap_or_default());
    config.api_key_var = args.api_key_var.clone();
    config.archive = args.archive.clone();
    Ok(Some(Box::new(LiveBackend::new(config)?)))
}

fn output(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| PipelineError::Output(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| PipelineError::Output(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), PipelineError> {
    match out {
        Some(path) => output(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_run(planned: &pipeline::Planned, steps: &[treeplan_pddl::CompiledStep], out: &Path) {
    println!("cost {}", format_cost(&planned.cost));
    println!("units {} ({} rejected while merging)", planned.tree.units.len(), planned.rejections.len());
    for line in &planned.lines.lines {
        let steps: Vec<&str> = line.entries.iter().map(|e| e.description.as_str()).collect();
        println!("  {}: {}", line.object, steps.join(" -> "));
    }
    println!("actions {}", steps.iter().map(|s| s.plan.len()).sum::<usize>());
    println!("artifacts {}", out.display());
}

fn json_arg<T: serde::de::DeserializeOwned>(name: &str, text: &str) -> Result<T, PipelineError> {
    serde_json::from_str(text).map_err(|e| PipelineError::Input(format!("--{name}: {e}")))
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let settings = settings(&cli.engine)?;
    match cli.command {
        Command::Plan { demand, backend: args, n_trees, out } => {
            let backend = backend(&args)?
                .ok_or_else(|| PipelineError::Input("give --fixtures or --endpoint to generate trees".into()))?;
            let gateway = gateway_for(backend, &settings);
            let trees = pipeline::generate(&gateway, &GenerationRequest::new(&demand).with_trees(n_trees))?;
            let (planned, steps) = pipeline::run(&trees, &settings, &out)?;
            report_run(&planned, &steps, &out);
        }
        Command::Run { trees, out } => {
            let trees = trees.iter().map(|p| load_tree(p)).collect::<Result<Vec<_>, _>>()?;
            let (planned, steps) = pipeline::run(&trees, &settings, &out)?;
            report_run(&planned, &steps, &out);
        }
        Command::Merge { trees, out, rejections } => {
            let trees = trees.iter().map(|p| load_tree(p)).collect::<Result<Vec<_>, _>>()?;
            let (network, log) = pipeline::build_network(&trees, &settings);
            emit(out.as_deref(), &(network.to_json_pretty() + "\n"))?;
            if let Some(path) = rejections {
                output(&path, &(log.to_json_pretty() + "\n"))?;
            }
            eprintln!("{} units, {} rejected", network.len(), log.len());
        }
        Command::Retrieve { network, goal, available } => {
            let network = UnifiedNetwork::from_json(&read(&network)?, Some(&settings.table))
                .map_err(|e| PipelineError::Input(format!("{}: {e}", network.display())))?;
            let goal: ObjectNode = json_arg("goal", &goal)?;
            let available: Vec<ObjectNode> = match available {
                Some(text) => json_arg("available", &text)?,
                None => leaves(&network),
            };
            let (tree, cost) = retrieve_optimal(&network, &RetrievalQuery::new(goal, available), &settings.costs)?;
            eprintln!("cost {}", format_cost(&cost));
            print!("{}", tree_to_json_pretty(&tree) + "\n");
        }
        Command::Compile { tree, out } => {
            let tree = load_tree(&tree)?;
            let steps = pipeline::compile(&tree, &settings)?;
            for step in &steps {
                println!("; unit {} ({})", step.unit_index, tree.units[step.unit_index].motion().label());
                for action in &step.plan.steps {
                    println!("{action}");
                }
            }
            if let Some(dir) = out {
                for (n, step) in steps.iter().enumerate() {
                    treeplan_pddl::export_external(&step.domain, &step.problem, dir.join(format!("step_{:02}", n + 1)))
                        .map_err(|e| PipelineError::Output(format!("{}: {e}", dir.display())))?;
                }
            }
        }
        Command::Solve { domain, problem } => {
            let parse_err = |p: &Path, e: &dyn std::fmt::Display| PipelineError::Input(format!("{}: {e}", p.display()));
            let d = parse_domain(&read(&domain)?).map_err(|e| parse_err(&domain, &e))?;
            let p = parse_problem(&read(&problem)?).map_err(|e| parse_err(&problem, &e))?;
            let plan = solve(&d, &p, settings.limits).map_err(|e| PipelineError::Compile(
                treeplan_pddl::TreeCompileError::Solve { unit_index: 0, source: e },
            ))?;
            check_plan(&d, &p, &plan).map_err(|e| PipelineError::Compile(
                treeplan_pddl::TreeCompileError::Replay { unit_index: 0, source: e },
            ))?;
            for step in &plan.steps {
                println!("{step}");
            }
            eprintln!("{} actions", plan.len());
        }
        Command::Experiment { corpus, k_max, out } => {
            let report = experiment::run(&corpus, k_max, &settings)?;
            experiment::write(&report, &out)?;
            println!("k,tasks,improved,fraction");
            for row in &report.rows {
                println!("{},{},{},{:.4}", row.k, row.tasks, row.improved, row.fraction);
            }
        }
        Command::Serve { backend: args, host, port, data_dir } => {
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| PipelineError::Input(format!("{host}:{port}: {e}")))?;
            let store = match data_dir {
                Some(dir) => Store::open(dir, &settings.table).map_err(|e| PipelineError::Input(e.to_string()))?,
                None => Store::in_memory(),
            };
            let gateway = backend(&args)?.map(|b| gateway_for(b, &settings));
            let state = AppState::new(settings, gateway, store);
            let runtime = tokio::runtime::Runtime::new().map_err(|e| PipelineError::Output(e.to_string()))?;
            runtime
                .block_on(service::serve(state, addr))
                .map_err(|e| PipelineError::Output(format!("{addr}: {e}")))?;
        }
        Command::ExtractTransitions { foon, out } => {
            let units = load_units(&foon)?;
            let table = TransitionTable::extract(&units);
            let header = format!(
                "Harvested from {} units of the knowledge network.\nRegenerate: treeplan extract-transitions fixtures/foon --out data/transitions.txt",
                units.len()
            );
            emit(out.as_deref(), &table.to_file_string(Some(&header)))?;
            eprintln!("{} transitions from {} units", table.len(), units.len());
        }
    }
    Ok(())
}

/// Objects no unit of the network produces.
fn leaves(network: &UnifiedNetwork) -> Vec<ObjectNode> {
    let produced: std::collections::BTreeSet<_> = network.units().flat_map(|u| u.outputs().iter().cloned()).collect();
    let mut leaves: Vec<ObjectNode> = network
        .units()
        .flat_map(|u| u.inputs().iter().cloned())
        .filter(|o| !produced.contains(o))
        .collect();
    leaves.sort();
    leaves.dedup();
    leaves
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
