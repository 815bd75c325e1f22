use super::*;
use crate::error::CfnError;
use crate::gradcheck::check_network;
use crate::loss::LossKind;
use crate::math::{Matrix, Rng};
use crate::nodes::{FunctionNode, Linear, NodeSpec, Polynomial, Sigmoid, Sinusoidal};

fn boxed(node: impl FunctionNode + 'static) -> Box<dyn FunctionNode> {
    Box::new(node)
}

fn init(spec: NodeSpec, rng: &mut Rng) -> Box<dyn FunctionNode> {
    spec.init(rng).unwrap()
}

/// Fixed-value scalar node for gating tests: f(x) = value for every row.
fn constant(input_dim: usize, value: f64) -> Box<dyn FunctionNode> {
    let mut w = Matrix::zeros(1, input_dim);
    w.as_mut_slice().fill(0.0);
    let mut node = Linear::new(w, vec![value]).unwrap();
    node.set_trainable(false);
    boxed(node)
}

#[test]
fn single_expert_conditional_passes_expert_through() {
    let mut rng = Rng::new(1);
    let expert = init(NodeSpec::linear(3, 2), &mut rng);
    let layer: Layer = ConditionalLayer::new(vec![constant(3, 0.4)], vec![expert.clone()])
        .unwrap()
        .into();
    let x = rng.normal_matrix(5, 3);
    let (y, _) = layer.forward(&x).unwrap();
    let g = expert.forward(&x).unwrap();
    for (a, b) in y.as_slice().iter().zip(g.as_slice()) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
    }
}

#[test]
fn two_expert_gate_arithmetic() {
    let e1 = boxed(Linear::new(Matrix::zeros(1, 1), vec![1.0]).unwrap());
    let e2 = boxed(Linear::new(Matrix::zeros(1, 1), vec![5.0]).unwrap());
    let layer = ConditionalLayer::new(vec![constant(1, 0.2), constant(1, 0.6)], vec![e1, e2]).unwrap();
    let x = Matrix::column(&[0.0, 1.0]);
    let w = layer.gate_weights(&x).unwrap();
    assert!((w.get(0, 0) - 0.25).abs() < 1e-9);
    assert!((w.get(0, 1) - 0.75).abs() < 1e-9);
    let (y, _) = Layer::from(layer).forward(&x).unwrap();
    assert!((y.get(1, 0) - (0.25 + 0.75 * 5.0)).abs() < 1e-9);
}

#[test]
fn equal_conditions_average_experts() {
    let mut rng = Rng::new(2);
    let experts: Vec<_> = (0..3).map(|_| init(NodeSpec::sinusoidal(2), &mut rng)).collect();
    let conds = (0..3).map(|_| constant(2, 0.3)).collect();
    let layer: Layer = ConditionalLayer::new(conds, experts.clone()).unwrap().into();
    let x = rng.normal_matrix(6, 2);
    let (y, _) = layer.forward(&x).unwrap();
    for r in 0..6 {
        let mean: f64 = experts.iter().map(|e| e.forward(&x).unwrap().get(r, 0)).sum::<f64>() / 3.0;
        assert!((y.get(r, 0) - mean).abs() < 1e-9);
    }
}

#[test]
fn gate_weights_form_a_partition() {
    let mut rng = Rng::new(3);
    let conds = (0..4).map(|_| init(NodeSpec::step(2), &mut rng)).collect();
    let experts = (0..4).map(|_| init(NodeSpec::gaussian(2), &mut rng)).collect();
    let layer = ConditionalLayer::new(conds, experts).unwrap();
    let x = rng.normal_matrix(200, 2).scale(3.0);
    let w = layer.gate_weights(&x).unwrap();
    for r in 0..w.rows() {
        assert!(w.row(r).iter().all(|&v| v >= 0.0));
        assert!((w.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn parallel_sum_of_identical_nodes_doubles() {
    let mut rng = Rng::new(4);
    let node = init(NodeSpec::linear(3, 2), &mut rng);
    let layer: Layer = ParallelLayer::new(vec![node.clone(), node.clone()], Combine::Sum)
        .unwrap()
        .into();
    let x = rng.normal_matrix(4, 3);
    let (y, _) = layer.forward(&x).unwrap();
    assert_eq!(y, node.forward(&x).unwrap().scale(2.0));
}

#[test]
fn parallel_concat_orders_columns() {
    let mut rng = Rng::new(5);
    let a = init(NodeSpec::linear(2, 3), &mut rng);
    let b = init(NodeSpec::linear(2, 2), &mut rng);
    let layer: Layer = ParallelLayer::new(vec![a.clone(), b.clone()], Combine::Concat)
        .unwrap()
        .into();
    assert_eq!(layer.output_dim(), 5);
    let x = rng.normal_matrix(3, 2);
    let (y, _) = layer.forward(&x).unwrap();
    assert_eq!(y.col_block(0, 3), a.forward(&x).unwrap());
    assert_eq!(y.col_block(3, 2), b.forward(&x).unwrap());
}

#[test]
fn product_with_zero_factor_blocks_gradient() {
    let mut rng = Rng::new(6);
    let live = init(NodeSpec::sigmoid(2), &mut rng);
    let layer: Layer = ParallelLayer::new(vec![live, constant(2, 0.0)], Combine::Product)
        .unwrap()
        .into();
    let x = rng.normal_matrix(4, 2);
    let (_, cache) = layer.forward(&x).unwrap();
    let g = layer.backward(&cache, &Matrix::filled(4, 1, 1.0)).unwrap();
    assert_eq!(g.params, vec![0.0; 4]);
}

#[test]
fn sequential_of_one_node_matches_node_backward() {
    let mut rng = Rng::new(7);
    let node = init(NodeSpec::polynomial(3, 2), &mut rng);
    let layer: Layer = SequentialLayer::new(vec![node.clone()]).unwrap().into();
    let x = rng.normal_matrix(5, 3);
    let u = rng.normal_matrix(5, 1);
    let (_, cache) = layer.forward(&x).unwrap();
    let lg = layer.backward(&cache, &u).unwrap();
    let ng = node.backward(&x, &u).unwrap();
    assert_eq!(lg.params, ng.params);
    assert_eq!(lg.input, ng.input);
}

#[test]
fn construction_rejects_bad_wiring() {
    let mut rng = Rng::new(8);
    let err = SequentialLayer::new(vec![
        init(NodeSpec::linear(3, 2), &mut rng),
        init(NodeSpec::gaussian(3), &mut rng),
    ])
    .unwrap_err();
    assert!(matches!(err, CfnError::Shape(_)));
    // Sum of mismatched output dims is rejected, not broadcast.
    assert!(ParallelLayer::new(
        vec![init(NodeSpec::linear(2, 3), &mut rng), init(NodeSpec::gaussian(2), &mut rng)],
        Combine::Sum
    )
    .is_err());
    assert!(ParallelLayer::new(
        vec![init(NodeSpec::gaussian(2), &mut rng), init(NodeSpec::gaussian(3), &mut rng)],
        Combine::Concat
    )
    .is_err());
    assert!(ConditionalLayer::new(
        vec![init(NodeSpec::linear(2, 2), &mut rng)],
        vec![init(NodeSpec::gaussian(2), &mut rng)]
    )
    .is_err());
    assert!(ConditionalLayer::new(vec![], vec![]).is_err());
    let l1: Layer = SequentialLayer::new(vec![init(NodeSpec::linear(2, 4), &mut rng)]).unwrap().into();
    let l2: Layer = SequentialLayer::new(vec![init(NodeSpec::linear(3, 1), &mut rng)]).unwrap().into();
    assert!(matches!(Network::new(vec![l1, l2]), Err(CfnError::Shape(_))));
    assert!(Network::new(vec![]).is_err());
}

#[test]
fn mismatched_cache_is_a_usage_error() {
    let mut rng = Rng::new(9);
    let seq: Layer = SequentialLayer::new(vec![init(NodeSpec::linear(2, 1), &mut rng)]).unwrap().into();
    let par: Layer = ParallelLayer::new(vec![init(NodeSpec::gaussian(2), &mut rng)], Combine::Sum)
        .unwrap()
        .into();
    let x = rng.normal_matrix(3, 2);
    let (_, cache) = par.forward(&x).unwrap();
    assert!(matches!(
        seq.backward(&cache, &Matrix::zeros(3, 1)),
        Err(CfnError::Usage(_))
    ));
}

#[test]
fn negative_condition_is_a_numeric_error() {
    let e = boxed(Linear::new(Matrix::zeros(1, 1), vec![1.0]).unwrap());
    let layer: Layer = ConditionalLayer::new(vec![constant(1, -0.5)], vec![e]).unwrap().into();
    let err = layer.forward(&Matrix::column(&[1.0])).unwrap_err();
    assert!(matches!(err, CfnError::Numeric { .. }), "{err}");
}

#[test]
fn numeric_errors_name_layer_and_node() {
    let poly = boxed(Polynomial::new(vec![1.0], vec![0.0, 0.0, 0.0, 1.0]).unwrap());
    let net = Network::new(vec![
        SequentialLayer::new(vec![boxed(Linear::new(Matrix::identity(1), vec![0.0]).unwrap())])
            .unwrap()
            .into(),
        SequentialLayer::new(vec![poly]).unwrap().into(),
    ])
    .unwrap();
    let msg = net.forward(&Matrix::column(&[1e120])).unwrap_err().to_string();
    assert!(msg.contains("layer 1") && msg.contains("node 0") && msg.contains("Polynomial"), "{msg}");
}

#[test]
fn sin_plus_poly_network_adds_components() {
    let sin = Sinusoidal::new(1.0, 1.0, 0.0, vec![1.0]);
    let poly = Polynomial::new(vec![1.0], vec![0.0, 0.0, 1.0]).unwrap();
    let net = Network::new(vec![ParallelLayer::new(
        vec![boxed(sin), boxed(poly)],
        Combine::Sum,
    )
    .unwrap()
    .into()])
    .unwrap();
    let xs = [-2.0, -0.5, 0.0, 1.3, 2.0];
    let y = net.forward(&Matrix::column(&xs)).unwrap();
    for (i, x) in xs.iter().enumerate() {
        assert!((y.get(i, 0) - (x.sin() + x * x)).abs() < 1e-12);
    }
}

#[test]
fn single_layer_network_equals_layer_forward() {
    let mut rng = Rng::new(10);
    let layer: Layer = ParallelLayer::new(
        vec![init(NodeSpec::gaussian(2), &mut rng), init(NodeSpec::sigmoid(2), &mut rng)],
        Combine::WeightedSum,
    )
    .unwrap()
    .into();
    let net = Network::new(vec![layer.clone()]).unwrap();
    let x = rng.normal_matrix(7, 2);
    assert_eq!(net.forward(&x).unwrap(), layer.forward(&x).unwrap().0);
}

fn first_layer(kind: usize, rng: &mut Rng) -> Layer {
    match kind {
        0 => SequentialLayer::new(vec![
            init(NodeSpec::linear(3, 4), rng),
            init(NodeSpec::relu(4), rng),
            init(NodeSpec::linear(4, 2), rng),
        ])
        .unwrap()
        .into(),
        1 => ParallelLayer::new(
            vec![
                init(NodeSpec::gaussian(3), rng),
                init(NodeSpec::sinusoidal(3), rng),
                init(NodeSpec::polynomial(3, 2), rng),
            ],
            Combine::Sum,
        )
        .unwrap()
        .into(),
        2 => ParallelLayer::new(
            vec![init(NodeSpec::sigmoid(3), rng), init(NodeSpec::gaussian(3), rng)],
            Combine::Product,
        )
        .unwrap()
        .into(),
        3 => ParallelLayer::new(
            vec![
                init(NodeSpec::linear(3, 2), rng),
                init(NodeSpec::exponential(3), rng),
                init(NodeSpec::step(3), rng),
            ],
            Combine::Concat,
        )
        .unwrap()
        .into(),
        4 => ParallelLayer::with_weights(
            vec![init(NodeSpec::sinusoidal(3), rng), init(NodeSpec::sigmoid(3), rng)],
            Combine::WeightedSum,
            vec![rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)],
        )
        .unwrap()
        .into(),
        _ => ConditionalLayer::new(
            vec![init(NodeSpec::step(3), rng), init(NodeSpec::sigmoid(3), rng), init(NodeSpec::gaussian(3), rng)],
            vec![
                init(NodeSpec::linear(3, 2), rng),
                init(NodeSpec::linear(3, 2), rng),
                init(NodeSpec::linear(3, 2), rng),
            ],
        )
        .unwrap()
        .into(),
    }
}

#[test]
fn random_two_layer_networks_match_finite_differences() {
    let mut rng = Rng::new(2025);
    for kind in 0..6 {
        for trial in 0..20 {
            let l1 = first_layer(kind, &mut rng);
            let mid = l1.output_dim();
            let l2: Layer = if trial % 2 == 0 {
                SequentialLayer::new(vec![init(NodeSpec::linear(mid, 1), &mut rng)]).unwrap().into()
            } else {
                ConditionalLayer::new(
                    vec![init(NodeSpec::step(mid), &mut rng), init(NodeSpec::step(mid), &mut rng)],
                    vec![init(NodeSpec::sinusoidal(mid), &mut rng), init(NodeSpec::polynomial(mid, 2), &mut rng)],
                )
                .unwrap()
                .into()
            };
            let net = Network::new(vec![l1, l2]).unwrap();
            let x = rng.normal_matrix(6, 3);
            let y = rng.normal_matrix(6, 1);
            let check = check_network(&net, &x, &y, LossKind::Mse, 1e-6, 1e-5, 1e-8).unwrap();
            assert!(check.passed(), "layer kind {kind} trial {trial}: ratio {}", check.worst_ratio);
        }
    }
}

#[test]
fn forward_is_bit_deterministic() {
    let mut rng = Rng::new(11);
    let net = Network::new(vec![first_layer(5, &mut rng)]).unwrap();
    let x = rng.normal_matrix(10, 3);
    let a = net.forward(&x).unwrap();
    let b = net.forward(&x).unwrap();
    assert!(a.as_slice().iter().zip(b.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits()));
}

#[test]
fn params_round_trip_through_network() {
    let mut rng = Rng::new(12);
    let head: Layer = SequentialLayer::new(vec![init(NodeSpec::linear(1, 1), &mut rng)]).unwrap().into();
    let net = Network::new(vec![first_layer(4, &mut rng), head]).unwrap();
    let theta = net.param_vector();
    assert_eq!(theta.len(), net.param_count());
    let mut other = net.clone();
    let shifted: Vec<f64> = theta.iter().map(|v| v + 1.0).collect();
    other.set_params(&shifted).unwrap();
    assert_eq!(other.param_vector(), shifted);
    assert!(other.set_params(&theta[1..]).is_err());
}

#[test]
fn describe_reports_semantic_parameters() {
    let mut rng = Rng::new(13);
    let net = Network::new(vec![ParallelLayer::new(
        vec![
            init(NodeSpec::gaussian(2), &mut rng),
            boxed(Sinusoidal::new(2.0, 1.5, 0.5, vec![1.0, 0.0])),
            boxed(Sigmoid::new(vec![0.0, 1.0], 0.1, 2.0)),
        ],
        Combine::Concat,
    )
    .unwrap()
    .into()])
    .unwrap();
    let record = net.describe();
    let text = render_text(&record);
    assert!(text.contains("width: 1.000000"), "{text}");
    assert!(text.contains("amplitude: 2.000000"));
    assert!(text.contains("frequency: 1.500000"));
    assert!(text.contains("phase: 0.500000"));

    // Raw entries of the record concatenate back to the parameter vector.
    let mut flat = Vec::new();
    for layer in &net.layers()[..] {
        for node in layer.nodes() {
            if node.is_trainable() {
                flat.extend(node.record().raw_from_layout(node.raw_layout()));
            }
        }
    }
    assert_eq!(flat, net.param_vector());

    let json = serde_json::to_string(&record).unwrap();
    let back: NetworkRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(back, record);
}
