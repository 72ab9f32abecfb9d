//! Two-layer message-passing node classifier over cube states.
//!
//! Layer `t` updates every node `v` as
//!
//! ```text
//! h_v' = ReLU(W_s h_v + mean_{(u, m) in N(v)} (W_n h_u + W_e e_m) + b)
//! ```
//!
//! where `e_m` is the one-hot of the move taking `v` to `u` (the mean is the
//! zero vector for isolated nodes). The second layer's output feeds a
//! softmax classifier over the 27 distance classes `0..=26`.
//!
//! Everything runs in `f64` with a fixed summation order so training is
//! bit-for-bit reproducible.

mod checkpoint;
mod infer;

use ndarray::{Array1, Array2, ArrayView2, ArrayViewMut2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cube::{CubeState, Move, DIAMETER, NUM_MOVES};
use crate::error::{Error, Result};
use crate::walk::FEATURE_DIM;

pub use checkpoint::{load_model, save_model, CHECKPOINT_VERSION};
pub use infer::{predict_class, Predictor};

pub const INPUT_DIM: usize = FEATURE_DIM;
pub const EDGE_DIM: usize = NUM_MOVES;
pub const NUM_CLASSES: usize = DIAMETER + 1;
pub const DEFAULT_HIDDEN: usize = 128;
pub const NUM_LAYERS: usize = 2;

/// Nodes (cube states) plus adjacency lists. `adjacency[v]` holds
/// `(u, m)` with `states[u] = states[v].apply_move(m)`.
#[derive(Clone, Debug)]
pub struct NodeGraph {
    states: Vec<CubeState>,
    adjacency: Vec<Vec<(usize, Move)>>,
}

impl NodeGraph {
    /// Builds symmetric adjacency from undirected edges `(i, j, m)` where
    /// `states[j] = states[i].apply_move(m)`.
    pub fn from_edges(states: Vec<CubeState>, edges: &[(usize, usize, Move)]) -> NodeGraph {
        let mut adjacency = vec![Vec::new(); states.len()];
        for &(i, j, m) in edges {
            adjacency[i].push((j, m));
            adjacency[j].push((i, m.inverse()));
        }
        NodeGraph { states, adjacency }
    }

    pub fn from_adjacency(
        states: Vec<CubeState>,
        adjacency: Vec<Vec<(usize, Move)>>,
    ) -> Result<NodeGraph> {
        if adjacency.len() != states.len() {
            return Err(Error::Shape {
                context: "adjacency".into(),
                expected: format!("{} lists", states.len()),
                actual: format!("{} lists", adjacency.len()),
            });
        }
        if let Some(&(u, _)) = adjacency.iter().flatten().find(|(u, _)| *u >= states.len()) {
            return Err(Error::Config(format!("neighbour index {u} out of range")));
        }
        Ok(NodeGraph { states, adjacency })
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

    pub fn neighbors(&self, v: usize) -> &[(usize, Move)] {
        &self.adjacency[v]
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Per-node input to a layer: one-hot cube features for the first layer,
/// dense hidden vectors afterwards.
#[derive(Clone, Copy, Debug)]
pub enum LayerInput<'a> {
    OneHot(&'a [CubeState]),
    Dense(ArrayView2<'a, f64>),
}

impl LayerInput<'_> {
    pub fn rows(&self) -> usize {
        match self {
            LayerInput::OneHot(s) => s.len(),
            LayerInput::Dense(h) => h.nrows(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LayerInput::OneHot(_) => INPUT_DIM,
            LayerInput::Dense(h) => h.ncols(),
        }
    }

    /// `X W^T` for `w` of shape `out x dim`.
    fn project(&self, w: &Array2<f64>) -> Array2<f64> {
        match self {
            LayerInput::Dense(h) => h.dot(&w.t()),
            LayerInput::OneHot(states) => {
                let out_dim = w.nrows();
                let wt = w.t().as_standard_layout().into_owned();
                let wt = wt.as_slice().expect("standard layout");
                let mut out = Array2::zeros((states.len(), out_dim));
                for (s, mut row) in states.iter().zip(out.rows_mut()) {
                    let row = row.as_slice_mut().expect("standard layout");
                    for (i, &c) in s.codes().iter().enumerate() {
                        let col = &wt[(6 * i + c as usize) * out_dim..][..out_dim];
                        for (r, w) in row.iter_mut().zip(col) {
                            *r += w;
                        }
                    }
                }
                out
            }
        }
    }

    /// `G^T X` for per-node gradients `G` of shape `rows x out`.
    fn accumulate(&self, grad: &Array2<f64>) -> Array2<f64> {
        match self {
            LayerInput::Dense(h) => grad.t().dot(h),
            LayerInput::OneHot(states) => {
                let out_dim = grad.ncols();
                let mut acc = vec![0.0; INPUT_DIM * out_dim];
                for (s, g) in states.iter().zip(grad.rows()) {
                    for (i, &c) in s.codes().iter().enumerate() {
                        let slot = &mut acc[(6 * i + c as usize) * out_dim..][..out_dim];
                        for (a, x) in slot.iter_mut().zip(g.iter()) {
                            *a += x;
                        }
                    }
                }
                Array2::from_shape_vec((INPUT_DIM, out_dim), acc)
                    .expect("shape")
                    .reversed_axes()
                    .as_standard_layout()
                    .into_owned()
            }
        }
    }
}

/// Parameters of one message-passing layer.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageLayer {
    pub w_self: Array2<f64>,
    pub w_neigh: Array2<f64>,
    pub w_edge: Array2<f64>,
    pub bias: Array1<f64>,
}

impl MessageLayer {
    fn zeros(input: usize, output: usize) -> MessageLayer {
        MessageLayer {
            w_self: Array2::zeros((output, input)),
            w_neigh: Array2::zeros((output, input)),
            w_edge: Array2::zeros((output, EDGE_DIM)),
            bias: Array1::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_self.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w_self.nrows()
    }

    /// Pre-activation `W_s h_v + mean(W_n h_u + W_e e) + b` for every node.
    fn pre_activation(
        &self,
        t: usize,
        input: LayerInput<'_>,
        graph: &NodeGraph,
    ) -> Result<Array2<f64>> {
        if input.dim() != self.input_dim() {
            return Err(Error::Shape {
                context: format!("layer {t} input"),
                expected: format!("{} features", self.input_dim()),
                actual: format!("{} features", input.dim()),
            });
        }
        if input.rows() != graph.len() {
            return Err(Error::Shape {
                context: format!("layer {t} input"),
                expected: format!("{} nodes", graph.len()),
                actual: format!("{} nodes", input.rows()),
            });
        }
        let mut pre = input.project(&self.w_self);
        let messages = input.project(&self.w_neigh);
        let edge_cols = self.w_edge.t().as_standard_layout().into_owned();
        let mut acc = Array1::<f64>::zeros(self.output_dim());
        for (v, mut row) in pre.rows_mut().into_iter().enumerate() {
            let nbrs = graph.neighbors(v);
            if !nbrs.is_empty() {
                acc.fill(0.0);
                for &(u, m) in nbrs {
                    acc += &messages.row(u);
                    acc += &edge_cols.row(m.index());
                }
                acc /= nbrs.len() as f64;
                row += &acc;
            }
            row += &self.bias;
        }
        Ok(pre)
    }

    /// Gradients of this layer's parameters given `d_pre`, plus the
    /// gradient with respect to its (dense) input when requested.
    fn backward(
        &self,
        input: LayerInput<'_>,
        graph: &NodeGraph,
        d_pre: &Array2<f64>,
        want_input_grad: bool,
    ) -> (MessageLayer, Option<Array2<f64>>) {
        let out = self.output_dim();
        // scatter of d_pre onto the message senders: G = A^T d_pre
        let mut to_senders = Array2::<f64>::zeros((graph.len(), out));
        let mut w_edge = Array2::<f64>::zeros((EDGE_DIM, out));
        for (v, d) in d_pre.rows().into_iter().enumerate() {
            let nbrs = graph.neighbors(v);
            if nbrs.is_empty() {
                continue;
            }
            let scaled = &d / nbrs.len() as f64;
            for &(u, m) in nbrs {
                let mut s = to_senders.row_mut(u);
                s += &scaled;
                let mut e = w_edge.row_mut(m.index());
                e += &scaled;
            }
        }
        let grads = MessageLayer {
            w_self: input.accumulate(d_pre),
            w_neigh: input.accumulate(&to_senders),
            w_edge: w_edge.reversed_axes().as_standard_layout().into_owned(),
            bias: d_pre.sum_axis(Axis(0)),
        };
        let d_input =
            want_input_grad.then(|| d_pre.dot(&self.w_self) + to_senders.dot(&self.w_neigh));
        (grads, d_input)
    }
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

/// The full classifier: two message-passing layers and a softmax head.
#[derive(Clone, Debug, PartialEq)]
pub struct GnnModel {
    pub layers: [MessageLayer; NUM_LAYERS],
    pub classifier_w: Array2<f64>,
    pub classifier_b: Array1<f64>,
}

/// Checkpoint block names, in file order.
pub const BLOCK_NAMES: [&str; 10] = [
    "layer1.w_self",
    "layer1.w_neigh",
    "layer1.w_edge",
    "layer1.bias",
    "layer2.w_self",
    "layer2.w_neigh",
    "layer2.w_edge",
    "layer2.bias",
    "classifier.weight",
    "classifier.bias",
];

impl GnnModel {
    pub fn zeros(hidden: usize) -> GnnModel {
        GnnModel {
            layers: [
                MessageLayer::zeros(INPUT_DIM, hidden),
                MessageLayer::zeros(hidden, hidden),
            ],
            classifier_w: Array2::zeros((NUM_CLASSES, hidden)),
            classifier_b: Array1::zeros(NUM_CLASSES),
        }
    }

    /// Weights uniform in `[-s, s]` with `s = scale / sqrt(fan_in)`, biases zero.
    pub fn init(hidden: usize, rng_seed: u64, scale: f64) -> GnnModel {
        let mut model = GnnModel::zeros(hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for (name, mut block) in model.blocks_mut() {
            if name.ends_with("bias") {
                continue;
            }
            let s = scale / (block.ncols() as f64).sqrt();
            block.map_inplace(|w| *w = rng.gen_range(-s..=s));
        }
        model
    }

    pub fn hidden_dim(&self) -> usize {
        self.classifier_w.ncols()
    }

    /// Expected `(rows, cols)` of each block for a given hidden size.
    pub fn block_shapes(hidden: usize) -> [(usize, usize); 10] {
        [
            (hidden, INPUT_DIM),
            (hidden, INPUT_DIM),
            (hidden, EDGE_DIM),
            (hidden, 1),
            (hidden, hidden),
            (hidden, hidden),
            (hidden, EDGE_DIM),
            (hidden, 1),
            (NUM_CLASSES, hidden),
            (NUM_CLASSES, 1),
        ]
    }

    /// All parameter blocks as 2-D views (biases as column vectors).
    pub fn blocks(&self) -> Vec<(&'static str, ArrayView2<'_, f64>)> {
        let [l1, l2] = &self.layers;
        let views = [
            l1.w_self.view(),
            l1.w_neigh.view(),
            l1.w_edge.view(),
            l1.bias.view().insert_axis(Axis(1)),
            l2.w_self.view(),
            l2.w_neigh.view(),
            l2.w_edge.view(),
            l2.bias.view().insert_axis(Axis(1)),
            self.classifier_w.view(),
            self.classifier_b.view().insert_axis(Axis(1)),
        ];
        BLOCK_NAMES.into_iter().zip(views).collect()
    }

    pub fn blocks_mut(&mut self) -> Vec<(&'static str, ArrayViewMut2<'_, f64>)> {
        let [l1, l2] = &mut self.layers;
        let views = [
            l1.w_self.view_mut(),
            l1.w_neigh.view_mut(),
            l1.w_edge.view_mut(),
            l1.bias.view_mut().insert_axis(Axis(1)),
            l2.w_self.view_mut(),
            l2.w_neigh.view_mut(),
            l2.w_edge.view_mut(),
            l2.bias.view_mut().insert_axis(Axis(1)),
            self.classifier_w.view_mut(),
            self.classifier_b.view_mut().insert_axis(Axis(1)),
        ];
        BLOCK_NAMES.into_iter().zip(views).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks()
            .iter()
            .all(|(_, b)| b.iter().all(|w| w.is_finite()))
    }

    /// `self += alpha * other`, block by block.
    pub fn scaled_add(&mut self, alpha: f64, other: &GnnModel) {
        for ((_, mut a), (_, b)) in self.blocks_mut().into_iter().zip(other.blocks()) {
            a.scaled_add(alpha, &b);
        }
    }
}

/// A probability vector over the 27 distance classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistribution(Vec<f64>);

impl ClassDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Most probable class; ties go to the smaller index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Applies layer `t` (1-based) and returns the post-ReLU node vectors.
pub fn forward_layer(
    model: &GnnModel,
    t: usize,
    input: LayerInput<'_>,
    graph: &NodeGraph,
) -> Result<Array2<f64>> {
    let layer = t
        .checked_sub(1)
        .and_then(|i| model.layers.get(i))
        .ok_or_else(|| Error::Config(format!("layer index {t} outside 1..={NUM_LAYERS}")))?;
    Ok(relu(&layer.pre_activation(t, input, graph)?))
}

struct Forward {
    pre: [Array2<f64>; NUM_LAYERS],
    hidden: [Array2<f64>; NUM_LAYERS],
    probs: Array2<f64>,
    /// `-log p[label]` per node, when labels were supplied.
    nll: Option<Vec<f64>>,
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|z| (z - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

fn check_labels(graph: &NodeGraph, labels: &[usize]) -> Result<()> {
    if labels.len() != graph.len() {
        return Err(Error::Shape {
            context: "labels".into(),
            expected: format!("{} labels", graph.len()),
            actual: format!("{} labels", labels.len()),
        });
    }
    if graph.is_empty() {
        return Err(Error::Config("graph has no nodes".into()));
    }
    if let Some((node, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= NUM_CLASSES) {
        return Err(Error::LabelOutOfRange {
            node,
            label,
            num_classes: NUM_CLASSES,
        });
    }
    Ok(())
}

fn forward(model: &GnnModel, graph: &NodeGraph, labels: Option<&[usize]>) -> Result<Forward> {
    let pre1 = model.layers[0].pre_activation(1, LayerInput::OneHot(graph.states()), graph)?;
    let h1 = relu(&pre1);
    let pre2 = model.layers[1].pre_activation(2, LayerInput::Dense(h1.view()), graph)?;
    let h2 = relu(&pre2);
    let mut logits = h2.dot(&model.classifier_w.t());
    logits += &model.classifier_b;
    let nll = labels.map(|labels| {
        logits
            .rows()
            .into_iter()
            .zip(labels)
            .map(|(row, &y)| {
                let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
                lse - row[y]
            })
            .collect()
    });
    softmax_rows(&mut logits);
    Ok(Forward {
        pre: [pre1, pre2],
        hidden: [h1, h2],
        probs: logits,
        nll,
    })
}

/// Class distribution for every node of `graph`.
pub fn forward_model(model: &GnnModel, graph: &NodeGraph) -> Result<Vec<ClassDistribution>> {
    let f = forward(model, graph, None)?;
    Ok(f.probs
        .rows()
        .into_iter()
        .map(|r| ClassDistribution(r.to_vec()))
        .collect())
}

/// Mean cross-entropy `-log p(v)[label(v)]` over all nodes.
pub fn loss(model: &GnnModel, graph: &NodeGraph, labels: &[usize]) -> Result<f64> {
    check_labels(graph, labels)?;
    let f = forward(model, graph, Some(labels))?;
    let nll = f.nll.expect("labels supplied");
    Ok(nll.iter().sum::<f64>() / nll.len() as f64)
}

/// Fraction of nodes whose argmax prediction equals the label.
pub fn accuracy(model: &GnnModel, graph: &NodeGraph, labels: &[usize]) -> Result<f64> {
    check_labels(graph, labels)?;
    let f = forward(model, graph, None)?;
    let hits = f
        .probs
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &y)| argmax(row.as_slice().expect("standard layout")) == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Clone, Debug)]
pub struct LossAndGrad {
    pub loss: f64,
    /// Same shapes as the model.
    pub grad: GnnModel,
}

/// Loss and its exact gradient with respect to every parameter.
pub fn backward(model: &GnnModel, graph: &NodeGraph, labels: &[usize]) -> Result<LossAndGrad> {
    check_labels(graph, labels)?;
    let f = forward(model, graph, Some(labels))?;
    let n = graph.len() as f64;
    let nll = f.nll.as_ref().expect("labels supplied");
    let loss = nll.iter().sum::<f64>() / n;

    let mut d_logits = f.probs.clone();
    for (mut row, &y) in d_logits.rows_mut().into_iter().zip(labels) {
        row[y] -= 1.0;
    }
    d_logits /= n;

    let [h1, h2] = &f.hidden;
    let [pre1, pre2] = &f.pre;
    let classifier_w = d_logits.t().dot(h2);
    let classifier_b = d_logits.sum_axis(Axis(0));
    let mut d_pre2 = d_logits.dot(&model.classifier_w);
    d_pre2.zip_mut_with(pre2, |d, &p| {
        if p <= 0.0 {
            *d = 0.0
        }
    });
    let (g2, d_h1) = model.layers[1].backward(LayerInput::Dense(h1.view()), graph, &d_pre2, true);
    let mut d_pre1 = d_h1.expect("requested");
    d_pre1.zip_mut_with(pre1, |d, &p| {
        if p <= 0.0 {
            *d = 0.0
        }
    });
    let (g1, _) =
        model.layers[0].backward(LayerInput::OneHot(graph.states()), graph, &d_pre1, false);

    Ok(LossAndGrad {
        loss,
        grad: GnnModel {
            layers: [g1, g2],
            classifier_w,
            classifier_b,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    /// Multiplier on the `1 / sqrt(fan_in)` initialisation bound.
    pub weight_init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 300,
            rng_seed: 0,
            weight_init_scale: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.weight_init_scale > 0.0 && self.weight_init_scale.is_finite()) {
            return Err(Error::Config(format!(
                "weight init scale must be positive, got {}",
                self.weight_init_scale
            )));
        }
        Ok(())
    }

    /// Fresh model initialised from this config's seed and scale.
    pub fn init_model(&self, hidden: usize) -> GnnModel {
        GnnModel::init(hidden, self.rng_seed, self.weight_init_scale)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: GnnModel,
    /// Loss before each update, one entry per epoch.
    pub losses: Vec<f64>,
}

/// Full-batch gradient descent for `cfg.epochs` steps.
pub fn train(
    mut model: GnnModel,
    graph: &NodeGraph,
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_labels(graph, labels)?;
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let LossAndGrad { loss, grad } = backward(&model, graph, labels)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss });
        }
        losses.push(loss);
        model.scaled_add(-cfg.learning_rate, &grad);
    }
    Ok(TrainOutcome { model, losses })
}
