use std::f64::consts::PI;

use super::*;
use crate::math::{fd_gradient, gradient_mismatch, DEFAULT_STEP};

const REL: f64 = 1e-5;
const ABS: f64 = 1e-8;

fn all_specs(input_dim: usize) -> Vec<NodeSpec> {
    vec![
        NodeSpec::linear(input_dim, 3),
        NodeSpec::gaussian(input_dim),
        NodeSpec::sigmoid(input_dim),
        NodeSpec::polynomial(input_dim, 3),
        NodeSpec::sinusoidal(input_dim),
        NodeSpec::relu(input_dim),
        NodeSpec::exponential(input_dim),
        NodeSpec::step(input_dim),
        NodeSpec::radius(input_dim),
        NodeSpec::angle().with_input(input_dim.max(2)),
    ]
}

impl NodeSpec {
    fn with_input(mut self, d: usize) -> Self {
        self.input_dim = d;
        self
    }
}

/// Node with its default init perturbed so every parameter is exercised.
fn random_node(spec: &NodeSpec, rng: &mut Rng) -> Box<dyn FunctionNode> {
    let mut node = spec.init(rng).unwrap();
    let raw: Vec<f64> = node
        .raw_params()
        .into_iter()
        .map(|v| v + 0.3 * rng.standard_normal())
        .collect();
    node.set_raw_params(&raw).unwrap();
    node
}

fn weighted_output(node: &dyn FunctionNode, x: &Matrix, upstream: &Matrix) -> f64 {
    node.forward(x).unwrap().hadamard(upstream).unwrap().sum()
}

#[test]
fn gradients_match_finite_differences_for_every_kind() {
    let mut rng = Rng::new(20240611);
    for spec in all_specs(3) {
        for trial in 0..20 {
            let node = random_node(&spec, &mut rng);
            let batch = 1 + trial % 5;
            let x = rng.normal_matrix(batch, node.input_dim());
            let upstream = rng.normal_matrix(batch, node.output_dim());
            let grad = node.backward(&x, &upstream).unwrap();

            let theta = node.param_vector();
            let numeric = fd_gradient(
                |t| {
                    let mut probe = node.clone_box();
                    probe.set_params(t).unwrap();
                    weighted_output(probe.as_ref(), &x, &upstream)
                },
                &theta,
                DEFAULT_STEP,
            )
            .unwrap();
            let worst = gradient_mismatch(&grad.params, &numeric, REL, ABS);
            assert!(worst <= 1.0, "{} params trial {trial}: mismatch ratio {worst}", spec.kind);

            let numeric_x = fd_gradient(
                |v| {
                    let xp = Matrix::from_vec(x.rows(), x.cols(), v.to_vec()).unwrap();
                    weighted_output(node.as_ref(), &xp, &upstream)
                },
                x.as_slice(),
                DEFAULT_STEP,
            )
            .unwrap();
            let worst = gradient_mismatch(grad.input.as_slice(), &numeric_x, REL, ABS);
            assert!(worst <= 1.0, "{} input trial {trial}: mismatch ratio {worst}", spec.kind);
        }
    }
}

#[test]
fn shape_law_holds_for_all_batches() {
    let mut rng = Rng::new(1);
    for spec in all_specs(4) {
        let node = spec.init(&mut rng).unwrap();
        for batch in [1, 7, 64] {
            let x = rng.normal_matrix(batch, node.input_dim());
            let y = node.forward(&x).unwrap();
            assert_eq!(y.shape(), (batch, spec.output_dim), "{}", spec.kind);
        }
    }
}

#[test]
fn range_laws() {
    let mut rng = Rng::new(2);
    for _ in 0..20 {
        let x = rng.normal_matrix(16, 3);
        let g = random_node(&NodeSpec::gaussian(3), &mut rng).forward(&x).unwrap();
        assert!(g.as_slice().iter().all(|&v| v > 0.0 && v <= 1.0));
        for spec in [NodeSpec::sigmoid(3), NodeSpec::step(3)] {
            let s = random_node(&spec, &mut rng).forward(&x).unwrap();
            assert!(s.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
        }
        let e = random_node(&NodeSpec::exponential(3), &mut rng).forward(&x).unwrap();
        assert!(e.as_slice().iter().all(|&v| v > 0.0));
    }
}

#[test]
fn permuting_rows_permutes_outputs() {
    let mut rng = Rng::new(3);
    let perm = [4, 0, 3, 1, 2];
    for spec in all_specs(2) {
        let node = random_node(&spec, &mut rng);
        let x = rng.normal_matrix(5, node.input_dim());
        let y = node.forward(&x).unwrap();
        let yp = node.forward(&x.select_rows(&perm)).unwrap();
        assert_eq!(yp, y.select_rows(&perm), "{}", spec.kind);
    }
}

#[test]
fn reparameterized_scales_stay_positive() {
    let mut rng = Rng::new(4);
    for spec in [NodeSpec::gaussian(2), NodeSpec::step(2)] {
        let mut node = spec.init(&mut rng).unwrap();
        for _ in 0..50 {
            let raw: Vec<f64> = node
                .raw_params()
                .iter()
                .map(|v| v + 10.0 * rng.standard_normal())
                .collect();
            node.set_params(&raw).unwrap();
            let p = node.params();
            let key = if spec.kind == NodeKind::Gaussian { "width" } else { "sharpness" };
            assert!(p[key][0] > 0.0);
        }
    }
}

#[test]
fn linear_identity_passes_input_through() {
    let mut rng = Rng::new(5);
    let node = Linear::new(Matrix::identity(3), vec![0.0; 3]).unwrap();
    let x = rng.normal_matrix(6, 3);
    assert_eq!(node.forward(&x).unwrap(), x);
}

#[test]
fn gaussian_peaks_at_center() {
    let node = Gaussian::new(vec![0.3, -1.2], 0.7).unwrap();
    let x = Matrix::from_rows(&[[0.3, -1.2]]).unwrap();
    assert_eq!(node.forward(&x).unwrap().get(0, 0), 1.0);
    let grad = node.backward(&x, &Matrix::filled(1, 1, 1.0)).unwrap();
    assert_eq!(&grad.params[..2], &[0.0, 0.0]);
}

#[test]
fn sinusoid_with_harmonic_oscillator_parameters() {
    let node = Sinusoidal::new(2.0, 1.5, PI / 4.0, vec![1.0]);
    let y = node.forward(&Matrix::column(&[0.0])).unwrap();
    assert!((y.get(0, 0) - 1.414_213_6).abs() < 1e-7);
    assert!((y.get(0, 0) - 2.0 * (PI / 4.0).sin()).abs() < 1e-12);
}

#[test]
fn polynomial_square_along_first_axis() {
    let node = Polynomial::new(vec![1.0, 0.0], vec![0.0, 0.0, 1.0]).unwrap();
    let x = Matrix::from_rows(&[[3.0, -8.5]]).unwrap();
    assert_eq!(node.forward(&x).unwrap().get(0, 0), 9.0);
}

#[test]
fn relu_passes_gradient_on_positive_side() {
    let node = Relu::new(1);
    let grad = node
        .backward(&Matrix::column(&[2.0]), &Matrix::column(&[0.37]))
        .unwrap();
    assert_eq!(grad.input.get(0, 0), 0.37);
    let grad = node
        .backward(&Matrix::column(&[-2.0]), &Matrix::column(&[0.37]))
        .unwrap();
    assert_eq!(grad.input.get(0, 0), 0.0);
}

#[test]
fn exponential_clamps_large_exponents() {
    let node = Exponential::new(vec![1.0], 0.0);
    let y = node.forward(&Matrix::column(&[1000.0])).unwrap();
    assert_eq!(y.get(0, 0), 20f64.exp());
    let g = node
        .backward(&Matrix::column(&[1000.0]), &Matrix::column(&[1.0]))
        .unwrap();
    assert_eq!(g.params, vec![0.0, 0.0]);
}

#[test]
fn polynomial_blowup_is_a_numeric_error() {
    let node = Polynomial::new(vec![1.0], vec![0.0, 0.0, 0.0, 1.0]).unwrap();
    let err = node.forward(&Matrix::column(&[1e200])).unwrap_err();
    assert!(err.to_string().contains("Polynomial"), "{err}");
}

#[test]
fn wrong_input_width_is_a_shape_error() {
    let mut rng = Rng::new(6);
    let node = NodeSpec::gaussian(3).init(&mut rng).unwrap();
    assert!(matches!(
        node.forward(&Matrix::zeros(2, 4)),
        Err(CfnError::Shape(_))
    ));
    assert!(matches!(
        node.backward(&Matrix::zeros(2, 3), &Matrix::zeros(2, 2)),
        Err(CfnError::Shape(_))
    ));
}

#[test]
fn init_defaults() {
    let mut rng = Rng::new(7);
    let lin = NodeSpec::linear(4, 2).init(&mut rng).unwrap();
    assert_eq!(lin.params()["bias"], vec![0.0, 0.0]);
    let g = NodeSpec::gaussian(3).init(&mut rng).unwrap();
    assert_eq!(g.params()["width"], vec![1.0]);
    for _ in 0..10_000 {
        let s = Sinusoidal::init(2, &mut rng);
        assert!((0.5..=2.0).contains(&s.frequency()));
        assert!((-PI..=PI).contains(&s.phase()));
        assert_eq!(s.amplitude(), 1.0);
    }
    let e = NodeSpec::exponential(5).init(&mut rng).unwrap();
    let d = &e.params()["direction"];
    assert!((crate::math::l2_norm(d) - 0.1).abs() < 1e-12);
    let st = NodeSpec::step(2).init(&mut rng).unwrap().params();
    assert_eq!((st["offset"][0], st["sharpness"][0]), (0.0, 1.0));
}

#[test]
fn invalid_specs_are_rejected() {
    let mut rng = Rng::new(8);
    let mut bad = NodeSpec::relu(3);
    bad.output_dim = 2;
    assert!(bad.init(&mut rng).is_err());
    let mut bad = NodeSpec::gaussian(3);
    bad.output_dim = 2;
    assert!(bad.init(&mut rng).is_err());
    assert!(NodeSpec::polynomial(2, 0).init(&mut rng).is_err());
    assert!(NodeSpec::linear(0, 2).init(&mut rng).is_err());
}

#[test]
fn param_round_trip_preserves_behavior() {
    let mut rng = Rng::new(9);
    for spec in all_specs(3) {
        let node = random_node(&spec, &mut rng);
        let mut fresh = spec.init(&mut rng).unwrap();
        fresh.set_params(&node.param_vector()).unwrap();
        let x = rng.normal_matrix(8, node.input_dim());
        assert_eq!(fresh.forward(&x).unwrap(), node.forward(&x).unwrap(), "{}", spec.kind);
    }
}

#[test]
fn parameter_counts() {
    let mut rng = Rng::new(10);
    assert_eq!(NodeSpec::linear(3, 2).init(&mut rng).unwrap().param_count(), 8);
    let frozen = NodeSpec::linear(3, 2).frozen().init(&mut rng).unwrap();
    assert!(frozen.param_vector().is_empty());
    assert_eq!(frozen.param_count(), 0);
    assert!(matches!(frozen.clone_box().set_params(&[1.0]), Err(CfnError::Shape(_))));
    let mut g = NodeSpec::gaussian(2).init(&mut rng).unwrap();
    assert!(matches!(g.set_params(&[1.0, 2.0]), Err(CfnError::Shape(_))));
}

#[test]
fn frozen_node_still_propagates_input_gradient() {
    let node = Linear::passthrough(2);
    let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
    let u = Matrix::from_rows(&[[0.5, -1.0]]).unwrap();
    let g = node.backward(&x, &u).unwrap();
    assert!(g.params.is_empty());
    assert_eq!(g.input, u);
}

#[test]
fn raw_layout_concatenates_to_param_vector() {
    let mut rng = Rng::new(11);
    for spec in all_specs(3) {
        let node = random_node(&spec, &mut rng);
        assert_eq!(node.record().raw_from_layout(node.raw_layout()), node.raw_params());
    }
}

#[test]
fn polar_features() {
    let x = Matrix::from_rows(&[[3.0, 4.0], [0.0, -2.0]]).unwrap();
    let r = Radius::new(2).forward(&x).unwrap();
    assert_eq!(r.as_slice(), &[5.0, 2.0]);
    let a = Angle::new(2).forward(&x).unwrap();
    assert!((a.get(0, 0) - (4f64).atan2(3.0)).abs() < 1e-15);
    assert!((a.get(1, 0) + PI / 2.0).abs() < 1e-15);
}

#[test]
fn canonical_sinusoid_preserves_the_curve() {
    let mut rng = Rng::new(404);
    for _ in 0..200 {
        let (a, w, p) = (rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0), rng.uniform(-9.0, 9.0));
        let (ca, cw, cp) = canonical_sinusoid(a, w, p);
        assert!(ca >= 0.0 && cw >= 0.0 && cp > -PI && cp <= PI);
        for t in [-1.0, 0.0, 0.7, 3.0] {
            assert!((a * (w * t + p).sin() - ca * (cw * t + cp).sin()).abs() < 1e-9);
        }
    }
    let node = Sinusoidal::new(-2.0, 1.5, 0.3, vec![-1.0]);
    let (a, w, _) = node.canonical_1d().unwrap();
    assert_eq!((a, w), (2.0, 1.5));
    assert!(Sinusoidal::new(1.0, 1.0, 0.0, vec![1.0, 0.0]).canonical_1d().is_none());
}
