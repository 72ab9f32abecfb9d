use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cube_gnn::bench::{self, BenchConfig, HeuristicKind};
use cube_gnn::cube::{format_moves, parse_scramble};
use cube_gnn::gnn::{self, TrainConfig, DEFAULT_HIDDEN};
use cube_gnn::oracle::{bfs_distances, MAX_ORACLE_DEPTH};
use cube_gnn::search::{
    gnn_search, HeuristicConfig, SearchConfig, DEFAULT_LAMBDA, DEFAULT_NODE_BUDGET,
};
use cube_gnn::walk::{run_walks, TrainGraph, WalkConfig};
use cube_gnn::CubeState;

#[derive(Parser)]
#[command(
    name = "cube-gnn",
    version,
    about = "Learned-heuristic A* for the Rubik's Cube"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a uniformly random quarter-turn scramble.
    Scramble {
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample a training graph with random walks from the solved state.
    Walk {
        #[arg(long, default_value_t = 7500)]
        walks: usize,
        #[arg(long, default_value_t = 7)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the classifier on a dataset file.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        init_scale: f64,
        #[arg(long, default_value_t = DEFAULT_HIDDEN)]
        hidden: usize,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss CSV; defaults to `<out>.loss.csv`.
        #[arg(long)]
        loss_out: Option<PathBuf>,
    },
    /// Solve one scramble with the learned heuristic.
    Solve {
        /// Quarter-turn scramble, e.g. "U R' F".
        #[arg(long, allow_hyphen_values = true)]
        scramble: String,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
    },
    /// Run the benchmark and write a CSV report.
    Bench {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 5)]
        scramble_min: usize,
        #[arg(long, default_value_t = 7)]
        scramble_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// gnn, zero or oracle-capped.
        #[arg(long, default_value = "gnn")]
        heuristic: HeuristicKind,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
        /// BFS depth cap for optimality flags; 0 disables the oracle.
        #[arg(long, default_value_t = MAX_ORACLE_DEPTH)]
        oracle_depth: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Breadth-first distance counts from the solved state.
    Oracle {
        #[arg(long, default_value_t = 5)]
        depth: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Scramble { length, seed } => {
            println!("{}", format_moves(&bench::random_scramble(length, seed)?));
        }
        Command::Walk {
            walks,
            length,
            seed,
            out,
        } => {
            let graph = run_walks(&WalkConfig::new(walks, length, seed)?)?;
            graph
                .save(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("nodes {} edges {}", graph.len(), graph.edges().len());
        }
        Command::Train {
            dataset,
            epochs,
            learning_rate,
            seed,
            init_scale,
            hidden,
            out,
            loss_out,
        } => {
            let data = TrainGraph::load(&dataset)?;
            let cfg = TrainConfig {
                learning_rate,
                epochs,
                rng_seed: seed,
                weight_init_scale: init_scale,
            };
            cfg.validate()?;
            let graph = data.node_graph();
            let labels = data.class_labels();
            let outcome = gnn::train(cfg.init_model(hidden), &graph, &labels, &cfg)?;
            gnn::save_model(&outcome.model, &out)?;
            let loss_path = loss_out.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".loss.csv");
                p.into()
            });
            bench::write_loss_trace(&loss_path, &outcome.losses)?;
            let acc = gnn::accuracy(&outcome.model, &graph, &labels)?;
            println!(
                "final loss {:.6} accuracy {:.4} (majority baseline {:.4})",
                outcome.losses.last().copied().unwrap_or(f64::NAN),
                acc,
                data.majority_baseline()
            );
        }
        Command::Solve {
            scramble,
            model,
            lambda,
            budget,
        } => {
            let moves = parse_scramble(&scramble)?;
            let model = gnn::load_model(&model)?;
            let start = CubeState::solved().apply_moves(&moves);
            let hcfg = HeuristicConfig {
                lambda,
                cache_capacity: 0,
            };
            let result = gnn_search(
                &start,
                &model,
                &hcfg,
                &SearchConfig {
                    node_budget: budget,
                },
            )?;
            if !result.solved {
                println!(
                    "unsolved: node budget exhausted after {} expansions ({:.3} s)",
                    result.expanded_nodes, result.wall_time
                );
                return Ok(ExitCode::from(2));
            }
            if result.path.is_empty() {
                println!("already solved");
            }
            println!("solution: {}", format_moves(&result.path));
            println!("length: {}", result.path.len());
            println!("expanded nodes: {}", result.expanded_nodes);
            println!("time: {:.6} s", result.wall_time);
        }
        Command::Bench {
            model,
            instances,
            scramble_min,
            scramble_max,
            seed,
            heuristic,
            lambda,
            budget,
            oracle_depth,
            out,
        } => {
            let cfg = BenchConfig {
                num_instances: instances,
                scramble_min,
                scramble_max,
                rng_seed: seed,
                heuristic,
                lambda,
                node_budget: budget,
            };
            cfg.validate()?;
            let model = model.map(gnn::load_model).transpose()?;
            let oracle = if oracle_depth > 0 || heuristic == HeuristicKind::OracleCapped {
                Some(bfs_distances(oracle_depth)?)
            } else {
                None
            };
            let report = bench::run_bench(&cfg, model.as_ref(), oracle.as_ref())?;
            report.write_csv(&out)?;
            let s = report.summary();
            println!(
                "solved {}/{}  mean length {:.4}  mean expanded {:.1}  mean time {:.4} s  optimal {}/{}",
                s.solved,
                report.rows.len(),
                s.mean_solution_length,
                s.mean_expanded_nodes,
                s.mean_wall_time,
                s.optimal.1,
                s.optimal.0
            );
            if !report.all_solved() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Oracle { depth, out } => {
            let clock = Instant::now();
            let table = bfs_distances(depth)?;
            match out {
                Some(path) => table.write_counts(std::fs::File::create(&path)?)?,
                None => table.write_counts(std::io::stdout().lock())?,
            }
            eprintln!(
                "{} states in {:.2} s",
                table.len(),
                clock.elapsed().as_secs_f64()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}
