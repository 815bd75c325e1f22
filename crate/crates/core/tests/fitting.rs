use std::f64::consts::PI;

use cfn_core::composition::{Combine, Network, ParallelLayer, SequentialLayer};
use cfn_core::data::{gen_shm, ShmParams};
use cfn_core::loss::LossKind;
use cfn_core::math::{Matrix, Rng};
use cfn_core::nodes::{NodeSpec, Polynomial, Sinusoidal};
use cfn_core::train::{evaluate_loss, train, Samples, TrainConfig};

fn synthetic_config(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.05,
        epochs: 3000,
        patience: 400,
        lr_decay_every: 1000,
        lr_decay_factor: 0.3,
        l2_lambda: 0.0,
        seed,
        ..TrainConfig::default()
    }
}

// Gradient descent on a sinusoid can settle on a low-frequency fit, so this is a
// statement about most starting points rather than every one.
#[test]
fn noiseless_harmonic_motion_is_fit_exactly() {
    let data = gen_shm(&ShmParams {
        n: 300,
        noise_sd: 0.0,
        seed: 3,
        ..ShmParams::default()
    })
    .unwrap();
    let all = Samples::new(&data.x, &data.y);
    let mut exact = 0;
    for seed in 0..6 {
        let node = NodeSpec::sinusoidal(1).init(&mut Rng::new(seed)).unwrap();
        let mut net = Network::new(vec![SequentialLayer::new(vec![node]).unwrap().into()]).unwrap();
        train(&mut net, all, all, LossKind::Mse, &synthetic_config(1)).unwrap();
        let mse = evaluate_loss(&net, all, LossKind::Mse).unwrap();
        if mse < 1e-6 {
            exact += 1;
            let layer = &net.layers()[0];
            let rec = layer.nodes().next().unwrap().record();
            let sin = Sinusoidal::from_record(&rec).unwrap();
            let (a, w, p) = sin.canonical_1d().unwrap();
            assert!((a - 2.0).abs() < 1e-3 && (w - 1.5).abs() < 1e-3 && (p - PI / 4.0).abs() < 1e-3);
        }
    }
    assert!(exact >= 5, "{exact} of 6 starts fit exactly");
}

fn sin_plus_square(n: usize, seed: u64) -> (Matrix, Matrix) {
    let mut rng = Rng::new(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| v.sin() + v * v).collect();
    (Matrix::column(&x), Matrix::column(&y))
}

#[test]
fn sinusoid_plus_quadratic_decomposes() {
    let (x, y) = sin_plus_square(400, 5);
    let (xt, yt) = sin_plus_square(200, 6);
    for seed in 0..4 {
        let mut rng = Rng::new(seed);
        let sum = ParallelLayer::new(
            vec![
                Box::new(Sinusoidal::new(1.0, rng.uniform(0.5, 2.0), rng.uniform(-PI, PI), vec![1.0])),
                Box::new(Polynomial::new(vec![1.0], vec![0.0, 0.0, 0.1]).unwrap()),
            ],
            Combine::Sum,
        )
        .unwrap();
        let mut net = Network::new(vec![sum.into()]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.02,
            ..synthetic_config(2)
        };
        train(&mut net, Samples::new(&x, &y), Samples::new(&xt, &yt), LossKind::Mse, &cfg).unwrap();
        let mse = evaluate_loss(&net, Samples::new(&xt, &yt), LossKind::Mse).unwrap();
        assert!(mse < 1e-3, "seed {seed}: test mse {mse}");
    }
}
