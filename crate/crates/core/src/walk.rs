//! Training data: uniform random walks from the solved state, collected
//! into an induced subgraph with walk-depth labels.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cube::{CubeState, Move, StateKey, DIAMETER, NUM_FACELETS, NUM_MOVES};
use crate::error::{Error, Result};
use crate::gnn::NodeGraph;

/// Length of the one-hot state encoding: 54 facelets x 6 colours.
pub const FEATURE_DIM: usize = NUM_FACELETS * 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WalkConfig {
    pub num_walks: usize,
    pub walk_length: usize,
    pub rng_seed: u64,
}

impl WalkConfig {
    pub fn new(num_walks: usize, walk_length: usize, rng_seed: u64) -> Result<WalkConfig> {
        let cfg = WalkConfig {
            num_walks,
            walk_length,
            rng_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_walks == 0 {
            return Err(Error::Config("number of walks must be at least 1".into()));
        }
        if !(1..=DIAMETER).contains(&self.walk_length) {
            return Err(Error::Config(format!(
                "walk length must be in 1..={DIAMETER}, got {}",
                self.walk_length
            )));
        }
        Ok(())
    }
}

/// Sampled subgraph of the Cayley graph. Node 0 is the solved state with
/// label 0; every other label is the earliest walk step that reached the
/// node, an upper bound on its true distance.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainGraph {
    states: Vec<CubeState>,
    labels: Vec<u8>,
    /// `(i, j, m)` with `i < j` and `states[j] = states[i].apply_move(m)`.
    edges: Vec<(usize, usize, Move)>,
    header: Option<WalkConfig>,
}

/// One-hot encoding of a state: block `i` (6 entries, colour order
/// U R F D L B) marks the colour of facelet `i`.
#[derive(Clone, PartialEq)]
pub struct FeatureVector(Box<[f64; FEATURE_DIM]>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0[..]
    }
}

impl std::ops::Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0[..]
    }
}

pub fn featurize(g: &CubeState) -> FeatureVector {
    let mut x = Box::new([0.0; FEATURE_DIM]);
    for (i, &c) in g.codes().iter().enumerate() {
        x[6 * i + c as usize] = 1.0;
    }
    FeatureVector(x)
}

/// One-hot over the canonical move order U U' D D' L L' R R' F F' B B'.
pub fn edge_feature(m: Move) -> [f64; NUM_MOVES] {
    let mut e = [0.0; NUM_MOVES];
    e[m.index()] = 1.0;
    e
}

fn walk_rng(seed: u64, walk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walk as u64);
    rng
}

pub fn run_walks(cfg: &WalkConfig) -> Result<TrainGraph> {
    cfg.validate()?;
    let walks: Vec<Vec<CubeState>> = (0..cfg.num_walks)
        .into_par_iter()
        .map(|w| {
            let mut rng = walk_rng(cfg.rng_seed, w);
            let mut state = CubeState::solved();
            (0..cfg.walk_length)
                .map(|_| {
                    state = state.apply_move(Move::ALL[rng.gen_range(0..NUM_MOVES)]);
                    state
                })
                .collect()
        })
        .collect();

    let mut index: HashMap<StateKey, usize> = HashMap::new();
    let mut states = vec![CubeState::solved()];
    let mut labels = vec![0u8];
    index.insert(CubeState::solved().key(), 0);
    for walk in &walks {
        for (step, state) in walk.iter().enumerate() {
            let label = (step + 1) as u8;
            match index.get(&state.key()) {
                Some(&i) => labels[i] = labels[i].min(label),
                None => {
                    index.insert(state.key(), states.len());
                    states.push(*state);
                    labels.push(label);
                }
            }
        }
    }
    let edges = induced_edges(&states, &index);
    Ok(TrainGraph {
        states,
        labels,
        edges,
        header: Some(*cfg),
    })
}

fn induced_edges(
    states: &[CubeState],
    index: &HashMap<StateKey, usize>,
) -> Vec<(usize, usize, Move)> {
    let mut edges = Vec::new();
    for (i, s) in states.iter().enumerate() {
        for (m, n) in s.neighbors() {
            if let Some(&j) = index.get(&n.key()) {
                if i < j {
                    edges.push((i, j, m));
                }
            }
        }
    }
    edges
}

impl TrainGraph {
    /// Builds a graph from explicit nodes, recomputing the induced edges.
    pub fn from_nodes(nodes: Vec<(CubeState, u8)>) -> Result<TrainGraph> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, (s, _)) in nodes.iter().enumerate() {
            if index.insert(s.key(), i).is_some() {
                return Err(Error::Config(format!("duplicate state at node {i}: {s}")));
            }
        }
        match nodes.first() {
            Some((s, 0)) if s.is_solved() => {}
            Some(_) => {
                return Err(Error::Config(
                    "node 0 must be the solved state with label 0".into(),
                ))
            }
            None => return Err(Error::Config("graph has no nodes".into())),
        }
        if let Some(i) = nodes.iter().skip(1).position(|(_, l)| *l == 0) {
            return Err(Error::Config(format!(
                "node {} has label 0 but is not solved",
                i + 1
            )));
        }
        let (states, labels): (Vec<_>, Vec<_>) = nodes.into_iter().unzip();
        let edges = induced_edges(&states, &index);
        Ok(TrainGraph {
            states,
            labels,
            edges,
            header: None,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[CubeState] {
        &self.states
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn edges(&self) -> &[(usize, usize, Move)] {
        &self.edges
    }

    pub fn config(&self) -> Option<&WalkConfig> {
        self.header.as_ref()
    }

    pub fn features(&self, node: usize) -> FeatureVector {
        featurize(&self.states[node])
    }

    pub fn class_labels(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l as usize).collect()
    }

    /// Node count per label.
    pub fn label_histogram(&self) -> Vec<usize> {
        let max = self.labels.iter().copied().max().unwrap_or(0) as usize;
        let mut hist = vec![0; max + 1];
        for &l in &self.labels {
            hist[l as usize] += 1;
        }
        hist
    }

    /// Accuracy of always predicting the most frequent label.
    pub fn majority_baseline(&self) -> f64 {
        let top = self.label_histogram().into_iter().max().unwrap_or(0);
        top as f64 / self.len().max(1) as f64
    }

    pub fn node_graph(&self) -> NodeGraph {
        NodeGraph::from_edges(self.states.clone(), &self.edges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        if let Some(c) = self.header {
            writeln!(
                out,
                "walks {} {} {}",
                c.num_walks, c.walk_length, c.rng_seed
            )?;
        }
        for (s, label) in self.states.iter().zip(&self.labels) {
            writeln!(out, "{s} {label}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrainGraph> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let err = |line: usize, message: String| Error::Dataset {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
        let mut header = None;
        if let Some(&(n, first)) = lines.peek() {
            let fields: Vec<&str> = first.split_whitespace().collect();
            if fields.first() == Some(&"walks") {
                let [_, k, l, seed] = fields.as_slice() else {
                    return Err(err(
                        n,
                        format!("expected header `walks <K> <l> <seed>`, got {first:?}"),
                    ));
                };
                let parse = |s: &str| {
                    s.parse::<u64>()
                        .map_err(|e| err(n, format!("bad header field {s:?}: {e}")))
                };
                let (k, l, seed) = (parse(k)?, parse(l)?, parse(seed)?);
                header = Some(
                    WalkConfig::new(k as usize, l as usize, seed)
                        .map_err(|e| err(n, e.to_string()))?,
                );
                lines.next();
            }
        }

        let mut nodes = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (facelets, label) = line
                .split_once(' ')
                .ok_or_else(|| err(n, "expected `<facelets> <label>`".into()))?;
            let state: CubeState = facelets.parse().map_err(|e: Error| err(n, e.to_string()))?;
            let label: u8 = label
                .parse()
                .map_err(|e| err(n, format!("bad label {label:?}: {e}")))?;
            if label as usize > DIAMETER {
                return Err(err(n, format!("label {label} exceeds {DIAMETER}")));
            }
            nodes.push((state, label));
        }
        if nodes.is_empty() {
            return Err(Error::NoNodes {
                path: path.to_path_buf(),
            });
        }
        let mut graph = TrainGraph::from_nodes(nodes).map_err(|e| err(0, e.to_string()))?;
        graph.header = header;
        Ok(graph)
    }
}

pub fn save_graph(graph: &TrainGraph, path: impl AsRef<Path>) -> Result<()> {
    graph.save(path)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<TrainGraph> {
    TrainGraph::load(path)
}
