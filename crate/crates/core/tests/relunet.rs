use proptest::prelude::*;
use spectral_core::numeric::{spectral_norm_exact, Matrix};
use spectral_core::relunet::{
    adam_step, train_full_batch, AdamConfig, AdamState, Gradients, InitScheme, Layer, Loss,
    ReluNet, TrainConfig,
};

fn batch(n: usize, d: usize, salt: f64) -> Matrix<f64> {
    Matrix::from_fn(n, d, |i, j| ((i * 7 + j * 3) as f64 * 0.37 + salt).sin())
}

fn same_patterns(a: &ReluNet<f64>, b: &ReluNet<f64>, x: &Matrix<f64>) -> bool {
    (0..x.rows()).all(|i| {
        a.activation_pattern(x.row(i)).unwrap() == b.activation_pattern(x.row(i)).unwrap()
    })
}

fn check_finite_differences(loss: Loss) {
    let net = ReluNet::<f64>::init(&[2, 6, 5, 1], 11, InitScheme::UniformFanIn).unwrap();
    let x = batch(9, 2, 0.3);
    let y: Vec<f64> = (0..9)
        .map(|i| match loss {
            Loss::Mse => (i as f64 * 0.9).cos(),
            Loss::BceWithLogits => (i % 2) as f64,
        })
        .collect();
    let grads = net.backward(&x, &y, loss).unwrap().flat();
    let theta = net.flat_params();
    let h = 1e-5;
    let mut checked = 0;
    for j in 0..theta.len() {
        let mut plus = theta.clone();
        let mut minus = theta.clone();
        plus[j] += h;
        minus[j] -= h;
        let np = net.with_flat_params(&plus).unwrap();
        let nm = net.with_flat_params(&minus).unwrap();
        if !same_patterns(&np, &nm, &x) {
            continue; // a kink lies within h
        }
        let lp = loss.value(&np.forward_batch(&x).unwrap(), &y);
        let lm = loss.value(&nm.forward_batch(&x).unwrap(), &y);
        let fd = (lp - lm) / (2.0 * h);
        let g = grads[j];
        assert!(
            (fd - g).abs() <= 1e-5 * fd.abs().max(g.abs()) + 1e-9,
            "param {j}: fd {fd} vs backprop {g}"
        );
        checked += 1;
    }
    assert!(checked > theta.len() / 2);
}

#[test]
fn backward_matches_finite_differences_mse() {
    check_finite_differences(Loss::Mse);
}

#[test]
fn backward_matches_finite_differences_bce() {
    check_finite_differences(Loss::BceWithLogits);
}

#[test]
fn output_bias_gradient_conventions() {
    let mut net = ReluNet::<f64>::init(&[1, 3, 1], 0, InitScheme::UniformFanIn).unwrap();
    let last = net.layers_mut().last_mut().unwrap();
    last.weight = Matrix::zeros(1, 3);
    last.bias = vec![0.0];
    let x = batch(4, 1, 0.0);
    let g = net.backward(&x, &[0.0; 4], Loss::Mse).unwrap();
    assert_eq!(*g.layers.last().unwrap().bias.first().unwrap(), 0.0);

    let mut shifted = net.clone();
    shifted.layers_mut().last_mut().unwrap().bias = vec![0.25];
    let g = shifted.backward(&x, &[0.0; 4], Loss::Mse).unwrap();
    assert!((g.layers.last().unwrap().bias[0] - 0.5).abs() < 1e-15);

    // logit 0 against label 1: sigmoid(0) − 1 = −0.5 per sample, averaged
    let g = net.backward(&x, &[1.0; 4], Loss::BceWithLogits).unwrap();
    assert!((g.layers.last().unwrap().bias[0] + 0.5).abs() < 1e-15);
    assert!((g.loss - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn loss_names() {
    assert_eq!("mse".parse::<Loss>().unwrap(), Loss::Mse);
    assert_eq!("BCE".parse::<Loss>().unwrap(), Loss::BceWithLogits);
    assert!("hinge".parse::<Loss>().is_err());
    let big = [800.0f64, -800.0];
    assert!(Loss::BceWithLogits.value(&big, &[1.0, 0.0]).is_finite());
}

#[test]
fn output_param_gradient_matches_perturbation() {
    let net = ReluNet::<f64>::init(&[1, 8, 8, 1], 3, InitScheme::UniformFanIn).unwrap();
    let x = batch(12, 1, 0.1);
    let theta = net.flat_params();
    let h = 1e-6;
    for j in [0, 5, 8, 20, 80, 95, theta.len() - 1] {
        let g = net.output_param_gradient(&x, j).unwrap();
        let mut p = theta.clone();
        p[j] += h;
        let mut m = theta.clone();
        m[j] -= h;
        let np = net.with_flat_params(&p).unwrap();
        let nm = net.with_flat_params(&m).unwrap();
        if !same_patterns(&np, &nm, &x) {
            continue;
        }
        let fp = np.forward_batch(&x).unwrap();
        let fm = nm.forward_batch(&x).unwrap();
        for i in 0..12 {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7, "param {j} sample {i}");
        }
    }
    assert!(net.output_param_gradient(&x, theta.len()).is_err());
}

fn scalar_net(w: f64) -> ReluNet<f64> {
    ReluNet::from_layers(vec![Layer::new(Matrix::new(1, 1, vec![w]).unwrap(), vec![0.0]).unwrap()])
        .unwrap()
}

fn scalar_grads(gw: f64) -> Gradients<f64> {
    Gradients {
        layers: vec![Layer::new(Matrix::new(1, 1, vec![gw]).unwrap(), vec![0.0]).unwrap()],
        loss: 0.0,
        predictions: vec![],
    }
}

#[test]
fn adam_zero_gradient_is_noop() {
    let mut net = scalar_net(0.7);
    let mut st = AdamState::for_net(AdamConfig::with_lr(0.1), &net).unwrap();
    adam_step(&mut net, &scalar_grads(0.0), &mut st).unwrap();
    assert_eq!(net.flat_params()[0], 0.7);
    assert_eq!(st.t, 1);
}

#[test]
fn adam_first_step_moves_by_lr() {
    let mut net = scalar_net(1.0);
    let mut st = AdamState::for_net(AdamConfig::with_lr(0.1), &net).unwrap();
    adam_step(&mut net, &scalar_grads(2.0), &mut st).unwrap();
    let step = 1.0 - net.flat_params()[0];
    assert!((step - 0.1 * 2.0 / (2.0 + 1e-8)).abs() < 1e-15);
}

#[test]
fn adam_matches_scalar_reference_on_square() {
    // minimize w², gradient 2w
    let (lr, b1, b2, eps) = (0.1, 0.9, 0.999, 1e-8);
    let (mut w, mut m, mut v) = (1.0f64, 0.0, 0.0);
    let mut reference = vec![];
    for t in 1..=2 {
        let g = 2.0 * w;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mh = m / (1.0 - b1.powi(t));
        let vh = v / (1.0 - b2.powi(t));
        w -= lr * mh / (vh.sqrt() + eps);
        reference.push(w);
    }
    let mut net = scalar_net(1.0);
    let mut st = AdamState::for_net(AdamConfig::with_lr(lr), &net).unwrap();
    for r in reference {
        let w_now = net.flat_params()[0];
        adam_step(&mut net, &scalar_grads(2.0 * w_now), &mut st).unwrap();
        assert!((net.flat_params()[0] - r).abs() < 1e-15);
    }
}

#[test]
fn adam_rejects_shape_mismatch() {
    let mut net = ReluNet::<f64>::init(&[1, 2, 1], 0, InitScheme::UniformFanIn).unwrap();
    let mut st = AdamState::for_net(AdamConfig::default(), &net).unwrap();
    assert!(adam_step(&mut net, &scalar_grads(1.0), &mut st).is_err());
}

#[test]
fn affine_net_fits_linear_data() {
    let net = ReluNet::<f64>::init(&[1, 1], 0, InitScheme::UniformFanIn).unwrap();
    let x = Matrix::from_fn(50, 1, |i, _| i as f64 / 50.0);
    let y: Vec<f64> = (0..50).map(|i| 0.7 * i as f64 / 50.0 - 0.2).collect();
    let mut cfg = TrainConfig::new(2000, 100, Loss::Mse);
    cfg.adam = AdamConfig::with_lr(1e-2);
    let out = train_full_batch(net, &x, &y, &cfg, |_| Ok(())).unwrap();
    assert!(*out.losses.last().unwrap() < 1e-6, "{:?}", out.losses.last());
    assert_eq!(out.losses.len(), 2001);
}

#[test]
fn training_is_deterministic_and_calls_back() {
    let run = || {
        let net = ReluNet::<f64>::init(&[1, 16, 16, 1], 4, InitScheme::UniformFanIn).unwrap();
        let x = Matrix::from_fn(40, 1, |i, _| i as f64 / 40.0);
        let y: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let cfg = TrainConfig::new(250, 100, Loss::Mse);
        let mut steps = vec![];
        let out = train_full_batch(net, &x, &y, &cfg, |e| {
            assert_eq!(e.predictions.len(), 40);
            steps.push(e.step);
            Ok(())
        })
        .unwrap();
        (out.losses, steps, out.net)
    };
    let (a, sa, na) = run();
    let (b, _, nb) = run();
    assert_eq!(a, b);
    assert_eq!(na, nb);
    assert_eq!(sa, vec![0, 100, 200, 250]);
}

#[test]
fn training_rejects_bad_input() {
    let net = ReluNet::<f64>::init(&[1, 4, 1], 0, InitScheme::UniformFanIn).unwrap();
    let cfg = TrainConfig::new(10, 1, Loss::Mse);
    let empty = Matrix::zeros(0, 1);
    assert!(train_full_batch(net.clone(), &empty, &[], &cfg, |_| Ok(())).is_err());
    let x = Matrix::zeros(3, 1);
    let zero_steps = TrainConfig::new(0, 1, Loss::Mse);
    assert!(train_full_batch(net.clone(), &x, &[0.0; 3], &zero_steps, |_| Ok(())).is_err());
    let mut bad_lr = cfg;
    bad_lr.adam.lr = f64::NAN;
    assert!(train_full_batch(net, &x, &[0.0; 3], &bad_lr, |_| Ok(())).is_err());
}

#[test]
fn clipping_holds_throughout_training() {
    let net = ReluNet::<f64>::init(&[1, 8, 1], 1, InitScheme::FixedScale(0.5)).unwrap();
    let x = Matrix::from_fn(30, 1, |i, _| i as f64 / 30.0);
    let y: Vec<f64> = (0..30).map(|i| 5.0 * (i as f64 * 0.5).sin()).collect();
    let mut cfg = TrainConfig::new(100, 1, Loss::Mse);
    cfg.adam = AdamConfig::with_lr(0.05);
    cfg.weight_clip = Some(0.3);
    train_full_batch(net, &x, &y, &cfg, |e| {
        if e.step > 0 {
            assert!(e.net.max_abs_param() <= 0.3);
        }
        Ok(())
    })
    .unwrap();
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let net = ReluNet::<f64>::init(&[3, 7, 5, 1], 42, InitScheme::UniformFanIn).unwrap();
    let back = ReluNet::<f64>::from_json(&net.to_json()).unwrap();
    assert_eq!(net, back);
    let bits = |n: &ReluNet<f64>| n.flat_params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&net), bits(&back));

    let small = ReluNet::<f32>::init(&[2, 4, 1], 7, InitScheme::UniformFanIn).unwrap();
    assert_eq!(ReluNet::<f32>::from_json(&small.to_json()).unwrap(), small);
}

#[test]
fn checkpoint_rejects_garbage() {
    let net = ReluNet::<f64>::init(&[1, 2, 1], 0, InitScheme::UniformFanIn).unwrap();
    let text = net.to_json().replace("\"relunet\"", "\"other\"");
    assert!(ReluNet::<f64>::from_json(&text).is_err());
    assert!(ReluNet::<f64>::from_json("{}").is_err());
    let mut ck = net.to_checkpoint();
    ck.layers[0].weights.pop();
    assert!(ReluNet::<f64>::from_checkpoint(&ck).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_is_lipschitz(seed in 0u64..10_000, depth in 1usize..4, width in 1usize..12,
                            x0 in -2.0f64..2.0, x1 in -2.0f64..2.0, h0 in -0.5f64..0.5, h1 in -0.5f64..0.5) {
        let mut widths = vec![2];
        widths.extend(std::iter::repeat(width).take(depth));
        widths.push(1);
        let net = ReluNet::<f64>::init(&widths, seed, InitScheme::UniformFanIn).unwrap();
        let lip: f64 = net.layers().iter().map(|l| spectral_norm_exact(&l.weight).unwrap()).product();
        let a = net.forward(&[x0, x1]).unwrap();
        let b = net.forward(&[x0 + h0, x1 + h1]).unwrap();
        prop_assert!((a - b).abs() <= lip * (h0 * h0 + h1 * h1).sqrt() + 1e-9);
    }

    #[test]
    fn flat_params_round_trip(seed in 0u64..1000) {
        let net = ReluNet::<f64>::init(&[2, 5, 3, 1], seed, InitScheme::UniformFanIn).unwrap();
        prop_assert_eq!(net.with_flat_params(&net.flat_params()).unwrap(), net);
    }
}
