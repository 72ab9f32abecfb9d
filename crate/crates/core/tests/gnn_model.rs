use cube_gnn::cube::Move;
use cube_gnn::gnn::{
    accuracy, backward, forward_model, load_model, loss, save_model, train, GnnModel, NodeGraph,
    Predictor, TrainConfig, NUM_CLASSES,
};
use cube_gnn::walk::{run_walks, WalkConfig};
use cube_gnn::CubeState;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// First `n` walk nodes with the edges among them and random labels.
fn random_graph(n: usize, seed: u64) -> (NodeGraph, Vec<usize>) {
    let g = run_walks(&WalkConfig::new(4 * n, 6, seed).unwrap()).unwrap();
    let states = g.states()[..n].to_vec();
    let edges: Vec<_> = g
        .edges()
        .iter()
        .copied()
        .filter(|&(i, j, _)| i < n && j < n)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..n).map(|_| rng.gen_range(0..NUM_CLASSES)).collect();
    (NodeGraph::from_edges(states, &edges), labels)
}

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-8)
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let (graph, labels) = random_graph(20, 7);
    assert!(graph.num_edges() > 0);
    let model = GnnModel::init(8, 3, 1.0);
    let analytic = backward(&model, &graph, &labels).unwrap().grad;
    let step = 1e-5;

    let mut worst = (0.0f64, String::new());
    let names: Vec<&str> = model.blocks().iter().map(|(n, _)| *n).collect();
    for (b, name) in names.iter().enumerate() {
        let shape = model.blocks()[b].1.dim();
        for r in 0..shape.0 {
            for c in 0..shape.1 {
                let mut plus = model.clone();
                plus.blocks_mut()[b].1[[r, c]] += step;
                let mut minus = model.clone();
                minus.blocks_mut()[b].1[[r, c]] -= step;
                let numeric = (loss(&plus, &graph, &labels).unwrap()
                    - loss(&minus, &graph, &labels).unwrap())
                    / (2.0 * step);
                let a = analytic.blocks()[b].1[[r, c]];
                let e = relative_error(a, numeric);
                if e > worst.0 {
                    worst = (
                        e,
                        format!("{name}[{r},{c}] analytic {a:e} numeric {numeric:e}"),
                    );
                }
            }
        }
    }
    println!("max relative gradient error {:e} at {}", worst.0, worst.1);
    assert!(worst.0 < 1e-5, "{}", worst.1);
}

#[test]
fn softmax_rows_sum_to_one() {
    let (graph, _) = random_graph(60, 2);
    let model = GnnModel::init(16, 5, 2.0);
    for p in forward_model(&model, &graph).unwrap() {
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.probs().iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn zero_model_has_uniform_loss() {
    let (graph, labels) = random_graph(30, 4);
    let l = loss(&GnnModel::zeros(8), &graph, &labels).unwrap();
    assert!((l - (NUM_CLASSES as f64).ln()).abs() < 1e-12);
}

#[test]
fn output_is_invariant_to_neighbour_order_and_node_numbering() {
    let (graph, _) = random_graph(40, 9);
    let model = GnnModel::init(16, 1, 1.5);
    let base = forward_model(&model, &graph).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    // shuffle every adjacency list
    let adjacency: Vec<Vec<(usize, Move)>> = (0..graph.len())
        .map(|v| {
            let mut a = graph.neighbors(v).to_vec();
            a.shuffle(&mut rng);
            a
        })
        .collect();
    let shuffled = NodeGraph::from_adjacency(graph.states().to_vec(), adjacency).unwrap();
    for (p, q) in base.iter().zip(forward_model(&model, &shuffled).unwrap()) {
        for (a, b) in p.probs().iter().zip(q.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    // renumber the nodes
    let mut perm: Vec<usize> = (0..graph.len()).collect();
    perm.shuffle(&mut rng);
    let mut states = vec![CubeState::solved(); graph.len()];
    let mut adjacency = vec![Vec::new(); graph.len()];
    for v in 0..graph.len() {
        states[perm[v]] = graph.states()[v];
        adjacency[perm[v]] = graph
            .neighbors(v)
            .iter()
            .map(|&(u, m)| (perm[u], m))
            .collect();
    }
    let renumbered = NodeGraph::from_adjacency(states, adjacency).unwrap();
    let out = forward_model(&model, &renumbered).unwrap();
    for v in 0..graph.len() {
        for (a, b) in base[v].probs().iter().zip(out[perm[v]].probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

fn walk_data(walks: usize, len: usize, seed: u64) -> (NodeGraph, Vec<usize>, f64) {
    let g = run_walks(&WalkConfig::new(walks, len, seed).unwrap()).unwrap();
    (g.node_graph(), g.class_labels(), g.majority_baseline())
}

#[test]
fn loss_decreases_over_first_epochs() {
    let (graph, labels, _) = walk_data(300, 6, 1);
    let cfg = TrainConfig {
        epochs: 10,
        ..Default::default()
    };
    let out = train(cfg.init_model(32), &graph, &labels, &cfg).unwrap();
    assert_eq!(out.losses.len(), 10);
    for w in out.losses.windows(2) {
        assert!(w[1] < w[0], "{:?}", out.losses);
    }
}

#[test]
fn small_graph_beats_majority_class() {
    let (graph, labels, majority) = walk_data(40, 4, 2);
    assert!((90..=161).contains(&graph.len()), "{}", graph.len());
    let cfg = TrainConfig {
        epochs: 300,
        ..Default::default()
    };
    let out = train(cfg.init_model(32), &graph, &labels, &cfg).unwrap();
    let acc = accuracy(&out.model, &graph, &labels).unwrap();
    println!(
        "toy graph: {} nodes, accuracy {acc:.3}, majority {majority:.3}",
        graph.len()
    );
    assert!(acc > majority);
}

#[test]
fn training_is_bit_reproducible() {
    let (graph, labels, _) = walk_data(200, 5, 3);
    let cfg = TrainConfig {
        epochs: 15,
        rng_seed: 4,
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for run in 0..2 {
        let out = train(cfg.init_model(16), &graph, &labels, &cfg).unwrap();
        let path = dir.path().join(format!("m{run}.txt"));
        save_model(&out.model, &path).unwrap();
        texts.push(std::fs::read(&path).unwrap());
        let back = load_model(&path).unwrap();
        assert_eq!(back, out.model);
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn fast_predictor_agrees_with_ego_network_inference() {
    let model = GnnModel::init(32, 8, 4.0);
    let predictor = Predictor::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let len = rng.gen_range(0..15);
        let g = CubeState::solved().apply_moves(&cube_gnn::cube::random_moves(len, &mut rng));
        assert_eq!(
            predictor.predict(&g),
            cube_gnn::gnn::predict_class(&model, &g)
        );
    }
}
