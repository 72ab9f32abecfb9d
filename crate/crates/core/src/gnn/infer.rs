//! Inference on the implicit, full 12-regular Cayley graph.

use std::collections::HashMap;

use ndarray::Array2;

use super::{argmax, forward_model, GnnModel, NodeGraph, INPUT_DIM, NUM_CLASSES, NUM_LAYERS};
use crate::cube::{CubeState, Move, CENTERS, NUM_FACELETS, NUM_MOVES};

impl NodeGraph {
    /// Subgraph induced by every state within `hops` moves of `center`.
    /// Node 0 is `center`; nodes follow breadth-first discovery order.
    pub fn ego_network(center: &CubeState, hops: usize) -> NodeGraph {
        let mut index = HashMap::new();
        let mut states = vec![*center];
        index.insert(center.key(), 0usize);
        let mut frontier = 0..1;
        for _ in 0..hops {
            let start = states.len();
            for v in frontier.clone() {
                for (_, n) in states[v].neighbors() {
                    if let std::collections::hash_map::Entry::Vacant(e) = index.entry(n.key()) {
                        e.insert(states.len());
                        states.push(n);
                    }
                }
            }
            frontier = start..states.len();
        }
        let adjacency = states
            .iter()
            .map(|s| {
                s.neighbors()
                    .iter()
                    .filter_map(|(m, n)| index.get(&n.key()).map(|&u| (u, *m)))
                    .collect()
            })
            .collect();
        NodeGraph { states, adjacency }
    }
}

/// Predicted distance class of `g`: runs the model on the 2-hop ego
/// network of `g` and takes the argmax (ties to the smaller class).
pub fn predict_class(model: &GnnModel, g: &CubeState) -> usize {
    let graph = NodeGraph::ego_network(g, NUM_LAYERS);
    let probs = forward_model(model, &graph).expect("model shapes are consistent");
    probs[0].argmax()
}

/// Fast evaluator for the same function as [`predict_class`].
///
/// On the full graph every node has all 12 neighbours, so the first layer
/// collapses to one matrix acting on the node's own one-hot features:
/// the neighbour features are facelet permutations of it and the edge
/// term averages to a constant. That matrix is stored as one table per
/// cubie position, indexed by the colour pattern on the cubie. A quarter
/// turn moves 8 cubies, so a neighbour's pre-activation is the node's with
/// 8 table rows swapped.
#[derive(Clone, Debug)]
pub struct Predictor {
    hidden: usize,
    cubies: Vec<Cubie>,
    /// Pattern rows for every cubie position, `hidden` wide.
    tables: Vec<f64>,
    /// Per move: each displaced position with the facelets its new colours
    /// come from. Both turns of a face displace the same positions.
    moved: Vec<Vec<(usize, Vec<usize>)>>,
    bias1: Vec<f64>,
    /// `(hidden, hidden)` column-major.
    w_self2: Vec<f64>,
    w_neigh2: Vec<f64>,
    bias2: Vec<f64>,
    /// Columns of the classifier weights, zero-padded to `CLASS_STRIDE`.
    classifier_w: Vec<f64>,
    classifier_b: Vec<f64>,
    avx2: bool,
}

const CLASS_STRIDE: usize = 32;

#[derive(Clone, Debug)]
struct Cubie {
    facelets: Vec<usize>,
    /// First row of this position in `tables`.
    row: usize,
}

impl Cubie {
    fn code(&self, codes: &[u8; NUM_FACELETS]) -> usize {
        self.facelets
            .iter()
            .fold(0, |acc, &i| 6 * acc + codes[i] as usize)
    }

    fn patterns(&self) -> usize {
        6usize.pow(self.facelets.len() as u32)
    }
}

/// Non-centre facelets grouped by cubie: two facelets share a cubie
/// exactly when the same set of faces moves them.
fn cubie_positions() -> Vec<Vec<usize>> {
    let mut groups: Vec<(u8, Vec<usize>)> = Vec::new();
    for i in (0..NUM_FACELETS).filter(|i| !CENTERS.contains(i)) {
        let mask = Move::ALL
            .iter()
            .filter(|m| m.permutation()[i] as usize != i)
            .fold(0u8, |acc, m| acc | 1 << m.face.index());
        match groups.iter_mut().find(|(g, _)| *g == mask) {
            Some((_, v)) => v.push(i),
            None => groups.push((mask, vec![i])),
        }
    }
    groups.into_iter().map(|(_, v)| v).collect()
}

fn column_major(w: &Array2<f64>) -> Vec<f64> {
    w.t().iter().copied().collect()
}

fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, x) in out.iter_mut().zip(x) {
        *o += a * x;
    }
}

fn add(out: &mut [f64], x: &[f64]) {
    for (o, x) in out.iter_mut().zip(x) {
        *o += x;
    }
}

impl Predictor {
    pub fn new(model: &GnnModel) -> Predictor {
        let hidden = model.hidden_dim();
        let [l1, l2] = &model.layers;
        let inv = 1.0 / NUM_MOVES as f64;

        let mut layer1 = vec![0.0; INPUT_DIM * hidden];
        for i in 0..NUM_FACELETS {
            for c in 0..6 {
                let row = &mut layer1[(6 * i + c) * hidden..][..hidden];
                for (k, r) in row.iter_mut().enumerate() {
                    // the neighbour reached by m shows colour c at facelet
                    // m^-1(i) whenever this node shows c at facelet i
                    let mut acc = 0.0;
                    for m in Move::ALL {
                        let src = m.inverse().permutation()[i] as usize;
                        acc += l1.w_neigh[[k, 6 * src + c]];
                    }
                    *r = l1.w_self[[k, 6 * i + c]] + acc * inv;
                }
            }
        }
        let column = |i: usize, c: usize| &layer1[(6 * i + c) * hidden..][..hidden];

        // centre colours are fixed, so their rows fold into the bias
        let edge_mean = |w: &Array2<f64>, k: usize| w.row(k).sum() * inv;
        let mut bias1: Vec<f64> = (0..hidden)
            .map(|k| l1.bias[k] + edge_mean(&l1.w_edge, k))
            .collect();
        let solved = CubeState::solved();
        for &i in &CENTERS {
            add(&mut bias1, column(i, solved.codes()[i] as usize));
        }

        let mut cubies = Vec::new();
        let mut rows = 0;
        for facelets in cubie_positions() {
            let cubie = Cubie {
                facelets,
                row: rows,
            };
            rows += cubie.patterns();
            cubies.push(cubie);
        }
        let mut tables = vec![0.0; rows * hidden];
        for cubie in &cubies {
            let k = cubie.facelets.len();
            for code in 0..cubie.patterns() {
                let out = &mut tables[(cubie.row + code) * hidden..][..hidden];
                for (pos, &i) in cubie.facelets.iter().enumerate() {
                    add(out, column(i, code / 6usize.pow((k - 1 - pos) as u32) % 6));
                }
            }
        }

        let position_of = |i: usize| cubies.iter().position(|c| c.facelets.contains(&i));
        let moved = Move::ALL
            .iter()
            .map(|m| {
                let perm = m.permutation();
                cubies
                    .iter()
                    .enumerate()
                    .filter(|(q, c)| position_of(perm[c.facelets[0]] as usize) != Some(*q))
                    .map(|(q, c)| (q, c.facelets.iter().map(|&i| perm[i] as usize).collect()))
                    .collect()
            })
            .collect();

        let mut classifier_w = vec![0.0; hidden * CLASS_STRIDE];
        for ((c, j), &w) in model.classifier_w.indexed_iter() {
            classifier_w[j * CLASS_STRIDE + c] = w;
        }

        let bias2 = (0..hidden)
            .map(|k| l2.bias[k] + edge_mean(&l2.w_edge, k))
            .collect();

        Predictor {
            hidden,
            cubies,
            tables,
            moved,
            bias1,
            w_self2: column_major(&l2.w_self),
            w_neigh2: column_major(&l2.w_neigh),
            bias2,
            classifier_w,
            classifier_b: model.classifier_b.to_vec(),
            #[cfg(target_arch = "x86_64")]
            avx2: std::arch::is_x86_feature_detected!("avx2"),
            #[cfg(not(target_arch = "x86_64"))]
            avx2: false,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    /// Classifier logits of `g`.
    pub fn logits(&self, g: &CubeState) -> [f64; NUM_CLASSES] {
        #[cfg(target_arch = "x86_64")]
        if self.avx2 {
            // SAFETY: the feature was detected at construction
            return unsafe { self.logits_avx2(g) };
        }
        self.logits_generic(g)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn logits_avx2(&self, g: &CubeState) -> [f64; NUM_CLASSES] {
        self.logits_generic(g)
    }

    #[inline(always)]
    fn logits_generic(&self, g: &CubeState) -> [f64; NUM_CLASSES] {
        let h = self.hidden;
        let codes = g.codes();
        let mut patterns = [0usize; 20];
        let mut pre = self.bias1.clone();
        for (q, cubie) in self.cubies.iter().enumerate() {
            patterns[q] = cubie.code(codes);
            add(&mut pre, &self.tables[(cubie.row + patterns[q]) * h..][..h]);
        }

        let mut sum = vec![0.0; h];
        let mut rest = vec![0.0; h];
        let mut tmp = vec![0.0; h];
        for (m, moved) in self.moved.iter().enumerate() {
            if m % 2 == 0 {
                rest.copy_from_slice(&pre);
                for &(q, _) in moved {
                    let row = &self.tables[(self.cubies[q].row + patterns[q]) * h..][..h];
                    for (r, x) in rest.iter_mut().zip(row) {
                        *r -= x;
                    }
                }
            }
            tmp.copy_from_slice(&rest);
            for (q, sources) in moved {
                let code = sources
                    .iter()
                    .fold(0, |acc, &i| 6 * acc + codes[i] as usize);
                add(
                    &mut tmp,
                    &self.tables[(self.cubies[*q].row + code) * h..][..h],
                );
            }
            for (s, t) in sum.iter_mut().zip(&tmp) {
                *s += t.max(0.0);
            }
        }

        let mut z = self.bias2.clone();
        for j in 0..h {
            axpy(&mut z, pre[j].max(0.0), &self.w_self2[j * h..][..h]);
            axpy(
                &mut z,
                sum[j] / NUM_MOVES as f64,
                &self.w_neigh2[j * h..][..h],
            );
        }

        let mut out = [0.0; CLASS_STRIDE];
        out[..NUM_CLASSES].copy_from_slice(&self.classifier_b);
        for (j, &zj) in z.iter().enumerate() {
            axpy(
                &mut out,
                zj.max(0.0),
                &self.classifier_w[j * CLASS_STRIDE..][..CLASS_STRIDE],
            );
        }
        let mut logits = [0.0; NUM_CLASSES];
        logits.copy_from_slice(&out[..NUM_CLASSES]);
        logits
    }

    pub fn predict(&self, g: &CubeState) -> usize {
        argmax(&self.logits(g))
    }
}
