//! A* over the implicit Cayley graph with unit edge costs, and the
//! heuristics it is run with.
//!
//! The learned heuristic is `h(g) = lambda * predicted_class(g)` (0 at the
//! solved state). Any class prediction lies in `0..=26`, so for
//! `lambda <= 1/26` neighbouring values differ by at most 1 and the
//! heuristic is consistent whatever the model outputs.
//!
//! Heuristic values are computed lazily: a generated node enters the
//! frontier keyed by its depth (a lower bound on `f`) and is re-inserted
//! with its exact `f` the first time it reaches the top. This pops nodes
//! for expansion in exactly the order an eager implementation would while
//! evaluating the heuristic only for nodes that come close to expansion.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use hashbrown::HashTable;

use crate::cube::{CubeState, Move, StateKey, DIAMETER};
use crate::error::{Error, Result};
use crate::gnn::{GnnModel, Predictor};
use crate::oracle::DistanceTable;

pub const DEFAULT_LAMBDA: f64 = 1.0 / DIAMETER as f64;
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

pub trait Heuristic {
    /// Estimated cost to the solved state; must be non-negative.
    fn estimate(&mut self, g: &CubeState) -> f64;
}

/// `h = 0`: A* degenerates to uniform-cost search.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroHeuristic;

impl Heuristic for ZeroHeuristic {
    fn estimate(&mut self, _: &CubeState) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeuristicConfig {
    pub lambda: f64,
    /// Maximum memoised states; 0 means unbounded.
    pub cache_capacity: usize,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            lambda: DEFAULT_LAMBDA,
            cache_capacity: 0,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= DEFAULT_LAMBDA) {
            return Err(Error::Config(format!(
                "lambda must lie in (0, 1/{DIAMETER}], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Learned heuristic `lambda * predicted_class(g)`, memoised by state key.
#[derive(Clone, Debug)]
pub struct GnnHeuristic {
    predictor: Arc<Predictor>,
    lambda: f64,
    capacity: usize,
    cache: HashMap<StateKey, u8>,
    hits: u64,
    misses: u64,
}

impl GnnHeuristic {
    pub fn new(model: &GnnModel, cfg: &HeuristicConfig) -> Result<GnnHeuristic> {
        GnnHeuristic::from_predictor(Arc::new(Predictor::new(model)), cfg)
    }

    pub fn from_predictor(
        predictor: Arc<Predictor>,
        cfg: &HeuristicConfig,
    ) -> Result<GnnHeuristic> {
        cfg.validate()?;
        Ok(GnnHeuristic {
            predictor,
            lambda: cfg.lambda,
            capacity: cfg.cache_capacity,
            cache: HashMap::new(),
            hits: 0,
            misses: 0,
        })
    }

    /// Predicted distance class of `g` (0 for the solved state).
    pub fn predicted_class(&mut self, g: &CubeState) -> usize {
        if g.is_solved() {
            return 0;
        }
        let key = g.key();
        if let Some(&c) = self.cache.get(&key) {
            self.hits += 1;
            return c as usize;
        }
        self.misses += 1;
        let class = self.predictor.predict(g);
        if self.capacity != 0 && self.cache.len() >= self.capacity {
            self.cache.clear();
        }
        self.cache.insert(key, class as u8);
        class
    }

    pub fn value(&mut self, g: &CubeState) -> f64 {
        self.lambda * self.predicted_class(g) as f64
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    /// `(hits, misses)` of the memo table.
    pub fn cache_stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }
}

impl Heuristic for GnnHeuristic {
    fn estimate(&mut self, g: &CubeState) -> f64 {
        self.value(g)
    }
}

/// Exact distance inside the oracle's cap, `cap + 1` beyond it. Consistent,
/// and an upper reference point for how informed a heuristic can be.
#[derive(Clone, Copy, Debug)]
pub struct OracleHeuristic<'a> {
    table: &'a DistanceTable,
}

impl<'a> OracleHeuristic<'a> {
    pub fn new(table: &'a DistanceTable) -> Self {
        OracleHeuristic { table }
    }
}

impl Heuristic for OracleHeuristic<'_> {
    fn estimate(&mut self, g: &CubeState) -> f64 {
        self.table.lookup(g).unwrap_or(self.table.depth_cap() + 1) as f64
    }
}

/// `h(g)` for the learned heuristic: 0 at the solved state, otherwise
/// `lambda` times the model's predicted class.
pub fn heuristic(g: &CubeState, model: &GnnModel, cfg: &HeuristicConfig) -> Result<f64> {
    Ok(GnnHeuristic::new(model, cfg)?.value(g))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Maximum number of expansions before giving up.
    pub node_budget: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub path: Vec<Move>,
    /// Nodes popped from the frontier and expanded (the goal included).
    pub expanded_nodes: u64,
    /// Distinct states inserted into the search tree.
    pub generated_nodes: u64,
    pub heuristic_evaluations: u64,
    /// Closed nodes reopened because a shorter path was found; always 0
    /// with a consistent heuristic.
    pub reexpansions: u64,
    /// Seconds spent in the search.
    pub wall_time: f64,
    /// `false` when the node budget ran out first.
    pub solved: bool,
}

#[derive(Clone, Copy)]
struct Node {
    key: [u64; 2],
    parent: u32,
    depth: u8,
    mv: u8,
    closed: bool,
}

impl Node {
    fn key(&self) -> StateKey {
        StateKey(((self.key[0] as u128) << 64) | self.key[1] as u128)
    }
}

fn split(key: StateKey) -> [u64; 2] {
    [(key.0 >> 64) as u64, key.0 as u64]
}

fn mix(key: [u64; 2]) -> u64 {
    let mut h = key[0].wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ key[1];
    h ^= h >> 32;
    h = h.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    h ^= h >> 32;
    h = h.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    h ^ (h >> 32)
}

#[derive(Clone, Copy)]
struct Entry {
    f: f64,
    seq: u32,
    node: u32,
    depth: u8,
    /// `f` is only the lower bound `depth`; `h` not evaluated yet.
    lazy: bool,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // max-heap: smaller f, then deeper, then earlier insertion wins
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Best-first search from `start` to the solved state with `f = depth + h`.
pub fn astar<H: Heuristic + ?Sized>(
    start: &CubeState,
    heuristic: &mut H,
    cfg: &SearchConfig,
) -> SearchResult {
    let clock = Instant::now();
    let mut nodes: Vec<Node> = Vec::new();
    let mut table: HashTable<u32> = HashTable::new();
    let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
    let mut seq: u32 = 0;
    let mut result = SearchResult {
        path: Vec::new(),
        expanded_nodes: 0,
        generated_nodes: 1,
        heuristic_evaluations: 0,
        reexpansions: 0,
        wall_time: 0.0,
        solved: false,
    };

    let start_key = split(start.key());
    nodes.push(Node {
        key: start_key,
        parent: u32::MAX,
        depth: 0,
        mv: 0,
        closed: false,
    });
    table.insert_unique(mix(start_key), 0, |&i| mix(nodes[i as usize].key));
    heap.push(Entry {
        f: 0.0,
        seq,
        node: 0,
        depth: 0,
        lazy: true,
    });

    while let Some(entry) = heap.pop() {
        let node = nodes[entry.node as usize];
        if node.closed || node.depth != entry.depth {
            continue;
        }
        let state = node.key().state();
        if entry.lazy {
            let h = heuristic.estimate(&state);
            debug_assert!(h >= 0.0);
            result.heuristic_evaluations += 1;
            heap.push(Entry {
                f: entry.depth as f64 + h,
                lazy: false,
                ..entry
            });
            continue;
        }
        if result.expanded_nodes as usize >= cfg.node_budget {
            break;
        }
        result.expanded_nodes += 1;
        nodes[entry.node as usize].closed = true;

        if state.is_solved() {
            let mut path = Vec::with_capacity(node.depth as usize);
            let mut cur = entry.node as usize;
            while nodes[cur].parent != u32::MAX {
                path.push(Move::ALL[nodes[cur].mv as usize]);
                cur = nodes[cur].parent as usize;
            }
            path.reverse();
            result.path = path;
            result.solved = true;
            break;
        }

        let depth = node.depth + 1;
        for (i, (_, child)) in state.neighbors().into_iter().enumerate() {
            let key = split(child.key());
            let hash = mix(key);
            let idx = match table.find(hash, |&j| nodes[j as usize].key == key) {
                Some(&j) => {
                    let existing = &mut nodes[j as usize];
                    if existing.depth <= depth {
                        continue;
                    }
                    if existing.closed {
                        existing.closed = false;
                        result.reexpansions += 1;
                    }
                    existing.depth = depth;
                    existing.parent = entry.node;
                    existing.mv = i as u8;
                    j
                }
                None => {
                    let j = nodes.len() as u32;
                    nodes.push(Node {
                        key,
                        parent: entry.node,
                        depth,
                        mv: i as u8,
                        closed: false,
                    });
                    table.insert_unique(hash, j, |&k| mix(nodes[k as usize].key));
                    result.generated_nodes += 1;
                    j
                }
            };
            seq += 1;
            heap.push(Entry {
                f: depth as f64,
                seq,
                node: idx,
                depth,
                lazy: true,
            });
        }
    }
    result.wall_time = clock.elapsed().as_secs_f64();
    result
}

/// Uniform-cost baseline: A* with `h = 0`.
pub fn zero_heuristic_search(start: &CubeState, cfg: &SearchConfig) -> SearchResult {
    astar(start, &mut ZeroHeuristic, cfg)
}

/// A* guided by the learned heuristic of `model`.
pub fn gnn_search(
    start: &CubeState,
    model: &GnnModel,
    heuristic_cfg: &HeuristicConfig,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    let mut h = GnnHeuristic::new(model, heuristic_cfg)?;
    Ok(astar(start, &mut h, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{parse_scramble, Face};

    #[test]
    fn lambda_bounds() {
        let ok = HeuristicConfig::default();
        assert!(ok.validate().is_ok());
        for lambda in [0.0, -0.1, 0.04, f64::NAN] {
            assert!(HeuristicConfig { lambda, ..ok }.validate().is_err());
        }
    }

    #[test]
    fn solved_start_expands_once() {
        let r = zero_heuristic_search(&CubeState::solved(), &SearchConfig::default());
        assert!(r.solved);
        assert!(r.path.is_empty());
        assert_eq!(r.expanded_nodes, 1);
    }

    #[test]
    fn single_move_scramble() {
        let start = CubeState::solved().apply_move(Move::cw(Face::U));
        let r = zero_heuristic_search(&start, &SearchConfig::default());
        assert_eq!(r.path, vec![Move::ccw(Face::U)]);
    }

    #[test]
    fn budget_exhaustion_reports_unsolved() {
        let start = CubeState::solved().apply_moves(&parse_scramble("U R F D").unwrap());
        let r = zero_heuristic_search(&start, &SearchConfig { node_budget: 10 });
        assert!(!r.solved);
        assert_eq!(r.expanded_nodes, 10);
        assert!(r.path.is_empty());
    }

    #[test]
    fn gnn_heuristic_values() {
        let model = GnnModel::zeros(4);
        let mut h = GnnHeuristic::new(&model, &HeuristicConfig::default()).unwrap();
        assert_eq!(h.value(&CubeState::solved()), 0.0);
        let g = CubeState::solved().apply_move(Move::ALL[5]);
        // zero model: uniform logits, argmax ties resolve to class 0
        assert_eq!(h.value(&g), 0.0);
        h.value(&g);
        assert_eq!(h.cache_stats(), (1, 1));
    }

    #[test]
    fn bounded_cache_is_cleared_when_full() {
        let model = GnnModel::init(4, 1, 1.0);
        let cfg = HeuristicConfig {
            cache_capacity: 2,
            ..Default::default()
        };
        let mut h = GnnHeuristic::new(&model, &cfg).unwrap();
        let mut unbounded = GnnHeuristic::new(&model, &HeuristicConfig::default()).unwrap();
        for m in Move::ALL {
            let g = CubeState::solved().apply_move(m);
            assert_eq!(h.value(&g), unbounded.value(&g));
            assert!(h.cache_len() <= 2);
        }
    }
}
