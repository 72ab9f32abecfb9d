//! Benchmark harness and end-to-end pipeline: scrambled test instances,
//! per-instance search statistics and a CSV report.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::cube::{format_moves, parse_scramble, random_moves, CubeState, Move, DIAMETER};
use crate::error::{Error, Result};
use crate::gnn::{self, GnnModel, Predictor, TrainConfig};
use crate::oracle::DistanceTable;
use crate::search::{
    astar, GnnHeuristic, HeuristicConfig, OracleHeuristic, SearchConfig, SearchResult,
    ZeroHeuristic, DEFAULT_LAMBDA, DEFAULT_NODE_BUDGET,
};
use crate::walk::{run_walks, TrainGraph, WalkConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeuristicKind {
    Gnn,
    Zero,
    OracleCapped,
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeuristicKind::Gnn => "gnn",
            HeuristicKind::Zero => "zero",
            HeuristicKind::OracleCapped => "oracle-capped",
        })
    }
}

impl FromStr for HeuristicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gnn" => Ok(HeuristicKind::Gnn),
            "zero" => Ok(HeuristicKind::Zero),
            "oracle-capped" => Ok(HeuristicKind::OracleCapped),
            _ => Err(Error::Config(format!(
                "unknown heuristic {s:?} (expected gnn, zero or oracle-capped)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchConfig {
    pub num_instances: usize,
    pub scramble_min: usize,
    pub scramble_max: usize,
    pub rng_seed: u64,
    pub heuristic: HeuristicKind,
    pub lambda: f64,
    pub node_budget: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            num_instances: 100,
            scramble_min: 5,
            scramble_max: 7,
            rng_seed: 0,
            heuristic: HeuristicKind::Gnn,
            lambda: DEFAULT_LAMBDA,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_instances == 0 {
            return Err(Error::Config("need at least one instance".into()));
        }
        if !(1 <= self.scramble_min
            && self.scramble_min <= self.scramble_max
            && self.scramble_max <= DIAMETER)
        {
            return Err(Error::Config(format!(
                "scramble range {}..={} must satisfy 1 <= min <= max <= {DIAMETER}",
                self.scramble_min, self.scramble_max
            )));
        }
        HeuristicConfig {
            lambda: self.lambda,
            cache_capacity: 0,
        }
        .validate()
    }

    fn echo(&self) -> String {
        format!(
            "heuristic={} instances={} scramble={}..{} seed={} lambda={} budget={}",
            self.heuristic,
            self.num_instances,
            self.scramble_min,
            self.scramble_max,
            self.rng_seed,
            self.lambda,
            self.node_budget
        )
    }

    /// First 16 hex digits of the SHA-256 of the config echo.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// A uniformly random scramble of exactly `length` quarter turns.
pub fn random_scramble(length: usize, seed: u64) -> Result<Vec<Move>> {
    if !(1..=DIAMETER).contains(&length) {
        return Err(Error::Config(format!(
            "scramble length must be in 1..={DIAMETER}, got {length}"
        )));
    }
    Ok(random_moves(length, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Test scrambles: lengths uniform in `scramble_min..=scramble_max`,
/// moves uniform over the 12 quarter turns. Depends only on the range,
/// count and seed, so different heuristics see identical instances.
pub fn generate_instances(cfg: &BenchConfig) -> Vec<Vec<Move>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    (0..cfg.num_instances)
        .map(|_| {
            let len = rng.gen_range(cfg.scramble_min..=cfg.scramble_max);
            random_moves(len, &mut rng)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub index: usize,
    pub scramble: Vec<Move>,
    pub solution: Vec<Move>,
    pub solved: bool,
    pub expanded_nodes: u64,
    pub wall_time: f64,
    pub oracle_distance: Option<u8>,
}

impl BenchRow {
    pub fn solution_length(&self) -> Option<usize> {
        self.solved.then_some(self.solution.len())
    }

    /// Whether the solution is as short as the oracle distance; `None`
    /// without an oracle value or a solution.
    pub fn optimal(&self) -> Option<bool> {
        match (self.oracle_distance, self.solution_length()) {
            (Some(d), Some(len)) => Some(len == d as usize),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSummary {
    /// Mean over solved rows.
    pub mean_solution_length: f64,
    pub mean_expanded_nodes: f64,
    pub mean_wall_time: f64,
    pub solved: usize,
    /// Rows with an optimality verdict, and how many were optimal.
    pub optimal: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
}

pub const CSV_HEADER: &str =
    "index,scramble,solution,solution_length,expanded_nodes,wall_time_s,oracle_distance,optimal,solved";

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

impl BenchReport {
    pub fn summary(&self) -> BenchSummary {
        BenchSummary {
            mean_solution_length: mean(
                self.rows
                    .iter()
                    .filter_map(|r| r.solution_length().map(|l| l as f64)),
            ),
            mean_expanded_nodes: mean(self.rows.iter().map(|r| r.expanded_nodes as f64)),
            mean_wall_time: mean(self.rows.iter().map(|r| r.wall_time)),
            solved: self.rows.iter().filter(|r| r.solved).count(),
            optimal: (
                self.rows.iter().filter(|r| r.optimal().is_some()).count(),
                self.rows
                    .iter()
                    .filter(|r| r.optimal() == Some(true))
                    .count(),
            ),
        }
    }

    pub fn all_solved(&self) -> bool {
        self.rows.iter().all(|r| r.solved)
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut out = format!(
            "# cube-gnn bench {} config={}\n{CSV_HEADER}\n",
            self.config.echo(),
            self.config.config_hash()
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6},{},{},{}\n",
                r.index,
                format_moves(&r.scramble),
                format_moves(&r.solution),
                opt(r.solution_length().map(|l| l.to_string())),
                r.expanded_nodes,
                r.wall_time,
                opt(r.oracle_distance.map(|d| d.to_string())),
                opt(r.optimal().map(|o| o.to_string())),
                r.solved
            ));
        }
        let s = self.summary();
        out.push_str(&format!(
            "# mean solution_length={:.4} expanded_nodes={:.1} wall_time_s={:.6} solved={}/{} optimal={}/{}\n",
            s.mean_solution_length,
            s.mean_expanded_nodes,
            s.mean_wall_time,
            s.solved,
            self.rows.len(),
            s.optimal.1,
            s.optimal.0
        ));
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Parses the data rows of a report written by [`BenchReport::to_csv`].
pub fn parse_report_rows(text: &str) -> Result<Vec<BenchRow>> {
    let bad = |n: usize, msg: String| Error::Dataset {
        path: PathBuf::from("<report>"),
        line: n,
        message: msg,
    };
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if line.starts_with('#') || line == CSV_HEADER || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad(n, format!("expected 9 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|e| bad(n, format!("{s:?}: {e}")));
        rows.push(BenchRow {
            index: num(f[0])? as usize,
            scramble: parse_scramble(f[1])?,
            solution: parse_scramble(f[2])?,
            expanded_nodes: num(f[4])?,
            wall_time: f[5]
                .parse()
                .map_err(|e| bad(n, format!("{:?}: {e}", f[5])))?,
            oracle_distance: if f[6].is_empty() {
                None
            } else {
                Some(num(f[6])? as u8)
            },
            solved: f[8] == "true",
        });
    }
    Ok(rows)
}

fn solve_instance(
    index: usize,
    scramble: &[Move],
    cfg: &BenchConfig,
    predictor: Option<&Arc<Predictor>>,
    oracle: Option<&DistanceTable>,
) -> Result<BenchRow> {
    let start = CubeState::solved().apply_moves(scramble);
    let search = SearchConfig {
        node_budget: cfg.node_budget,
    };
    let result: SearchResult = match cfg.heuristic {
        HeuristicKind::Zero => astar(&start, &mut ZeroHeuristic, &search),
        HeuristicKind::Gnn => {
            let predictor = predictor.expect("checked by run_bench").clone();
            let hcfg = HeuristicConfig {
                lambda: cfg.lambda,
                cache_capacity: 0,
            };
            astar(
                &start,
                &mut GnnHeuristic::from_predictor(predictor, &hcfg)?,
                &search,
            )
        }
        HeuristicKind::OracleCapped => {
            let table = oracle.expect("checked by run_bench");
            astar(&start, &mut OracleHeuristic::new(table), &search)
        }
    };
    // replay independently of the searcher
    if result.solved && !start.apply_moves(&result.path).is_solved() {
        return Err(Error::InvalidSolution {
            index,
            scramble: format_moves(scramble),
        });
    }
    Ok(BenchRow {
        index,
        scramble: scramble.to_vec(),
        solution: result.path,
        solved: result.solved,
        expanded_nodes: result.expanded_nodes,
        wall_time: result.wall_time,
        oracle_distance: oracle.and_then(|t| t.lookup(&start)),
    })
}

/// Solves every generated instance with the configured heuristic. The
/// model is required for `gnn`, the oracle for `oracle-capped`; when an
/// oracle is given, rows carry the exact distance of their start state.
pub fn run_bench(
    cfg: &BenchConfig,
    model: Option<&GnnModel>,
    oracle: Option<&DistanceTable>,
) -> Result<BenchReport> {
    cfg.validate()?;
    let predictor = match (cfg.heuristic, model) {
        (HeuristicKind::Gnn, None) => {
            return Err(Error::Config("the gnn heuristic needs a model".into()))
        }
        (HeuristicKind::Gnn, Some(m)) => Some(Arc::new(Predictor::new(m))),
        _ => None,
    };
    if cfg.heuristic == HeuristicKind::OracleCapped && oracle.is_none() {
        return Err(Error::Config(
            "the oracle-capped heuristic needs an oracle table".into(),
        ));
    }
    let instances = generate_instances(cfg);
    let rows = instances
        .par_iter()
        .enumerate()
        .map(|(i, s)| solve_instance(i, s, cfg, predictor.as_ref(), oracle))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport { config: *cfg, rows })
}

/// Writes `epoch,loss` lines.
pub fn write_loss_trace(path: impl AsRef<Path>, losses: &[f64]) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "epoch,loss")?;
    for (e, l) in losses.iter().enumerate() {
        writeln!(out, "{e},{l}")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub walk: WalkConfig,
    pub hidden: usize,
    pub train: TrainConfig,
    pub bench: BenchConfig,
}

#[derive(Clone, Debug)]
pub struct StageTimes {
    pub walks: f64,
    pub training: f64,
    pub bench: f64,
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub graph: TrainGraph,
    pub losses: Vec<f64>,
    pub train_accuracy: f64,
    pub model: GnnModel,
    pub model_path: PathBuf,
    pub report: BenchReport,
    pub report_path: PathBuf,
    pub times: StageTimes,
}

/// walks -> dataset file -> training -> checkpoint -> bench, with every
/// intermediate artefact written to and re-read from `dir`.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    dir: &Path,
    oracle: Option<&DistanceTable>,
) -> Result<PipelineRun> {
    let clock = Instant::now();
    let dataset_path = dir.join("dataset.txt");
    run_walks(&cfg.walk)?.save(&dataset_path)?;
    let graph = TrainGraph::load(&dataset_path)?;
    let walks = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let node_graph = graph.node_graph();
    let labels = graph.class_labels();
    let outcome = gnn::train(
        cfg.train.init_model(cfg.hidden),
        &node_graph,
        &labels,
        &cfg.train,
    )?;
    let train_accuracy = gnn::accuracy(&outcome.model, &node_graph, &labels)?;
    let model_path = dir.join("model.txt");
    gnn::save_model(&outcome.model, &model_path)?;
    write_loss_trace(dir.join("loss.csv"), &outcome.losses)?;
    let training = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let model = gnn::load_model(&model_path)?;
    let report = run_bench(&cfg.bench, Some(&model), oracle)?;
    let report_path = dir.join("report.csv");
    report.write_csv(&report_path)?;
    let bench = clock.elapsed().as_secs_f64();

    Ok(PipelineRun {
        graph,
        losses: outcome.losses,
        train_accuracy,
        model,
        model_path,
        report,
        report_path,
        times: StageTimes {
            walks,
            training,
            bench,
        },
    })
}
