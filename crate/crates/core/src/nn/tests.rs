use super::*;
use ndarray::{array, Array1};
use proptest::prelude::*;

fn param_mut(net: &mut Mlp, mut k: usize) -> &mut f64 {
    let n_layers = net.n_layers();
    for l in 0..n_layers {
        let len = net.weights[l].len();
        if k < len {
            return net.weights[l].iter_mut().nth(k).unwrap();
        }
        k -= len;
    }
    for l in 0..n_layers {
        let len = net.biases[l].len();
        if k < len {
            return net.biases[l].iter_mut().nth(k).unwrap();
        }
        k -= len;
    }
    panic!("parameter index out of range")
}

fn random_net(widths: &[usize], seed: u64) -> Mlp {
    let mut rng = RngStream::new(seed, 0);
    let mut net = Mlp::init(widths, 1.0 / widths[0] as f64, 0.0, &mut rng).unwrap();
    for b in net.biases_mut() {
        b.mapv_inplace(|_| 0.3 * rng.standard_normal());
    }
    net
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a.abs().max(b.abs()) < 1e-9 {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

#[test]
fn zero_network_outputs_zero() {
    let net = Mlp::zeros(&[3, 4, 2]).unwrap();
    let t = net.forward(&[1.0, -2.0, 3.0]).unwrap();
    assert_eq!(t.output().row(0).to_vec(), vec![0.0, 0.0]);
}

#[test]
fn output_bias_passes_through() {
    let mut net = Mlp::zeros(&[3, 5, 5, 2]).unwrap();
    net.biases_mut()[2] = array![4.0, -1.5];
    let t = net.forward(&[0.3, 0.2, 0.1]).unwrap();
    assert_eq!(t.output().row(0).to_vec(), vec![4.0, -1.5]);
}

#[test]
fn hand_computed_two_by_two() {
    // z1 = W1 x + b1 = [1*1 + 2*(-1) + 0.5, 0*1 + (-1)*(-1) - 0.5] = [-0.5, 0.5]
    // a1 = [0, 0.5]; out = W2 a1 + b2 = [3*0 + 4*0.5 + 1] = [3]
    let net = Mlp::from_parts(
        vec![array![[1.0, 2.0], [0.0, -1.0]], array![[3.0, 4.0]]],
        vec![array![0.5, -0.5], array![1.0]],
    )
    .unwrap();
    let t = net.forward(&[1.0, -1.0]).unwrap();
    assert_eq!(t.output()[[0, 0]], 3.0);
    assert_eq!(t.masks()[0].row(0).to_vec(), vec![0.0, 1.0]);
    // ∇_x f = W1ᵀ D1 W2ᵀ = [[1,0],[2,-1]] · [0, 4] = [0, -4]
    let g = net.grad_input(&t).unwrap();
    assert_eq!(g.row(0).to_vec(), vec![0.0, -4.0]);
}

#[test]
fn shape_errors() {
    let net = Mlp::zeros(&[3, 2]).unwrap();
    assert!(net.forward(&[1.0, 2.0]).is_err());
    let t = net.forward(&[1.0, 2.0, 3.0]).unwrap();
    assert!(net.grad_input(&t).is_err());
    assert!(net.backward_params(&t, Array2::ones((1, 3)).view()).is_err());
    assert!(Mlp::zeros(&[3]).is_err());
}

#[test]
fn linear_net_weight_gradient_is_input() {
    let net = random_net(&[3, 2], 1);
    let x = [0.7, -1.2, 2.5];
    let t = net.forward(&x).unwrap();
    for i in 0..2 {
        let mut up = Array2::zeros((1, 2));
        up[[0, i]] = 1.0;
        let g = net.backward_params(&t, up.view()).unwrap();
        for j in 0..3 {
            assert_eq!(g.weights[0][[i, j]], x[j]);
            assert_eq!(g.weights[0][[1 - i, j]], 0.0);
        }
        assert_eq!(g.biases[0][i], 1.0);
    }
}

#[test]
fn zero_upstream_gives_zero_gradient() {
    let net = random_net(&[4, 6, 6, 3], 2);
    let t = net.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    let g = net.backward_params(&t, Array2::zeros((1, 3)).view()).unwrap();
    assert!(g.iter().all(|v| v == 0.0));
}

#[test]
fn dead_network_has_zero_input_gradient() {
    let mut net = random_net(&[3, 5, 5, 1], 3);
    net.biases_mut()[0].fill(-1e6);
    let t = net.forward(&[0.1, 0.2, 0.3]).unwrap();
    assert!(net.grad_input(&t).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn single_layer_input_gradient_is_weight() {
    let net = Mlp::from_parts(vec![array![[0.5, -2.0, 1.5]]], vec![array![0.25]]).unwrap();
    let t = net.forward(&[9.0, 9.0, 9.0]).unwrap();
    assert_eq!(net.grad_input(&t).unwrap().row(0).to_vec(), vec![0.5, -2.0, 1.5]);
}

#[test]
fn penalty_linear_closed_forms() {
    // ‖w‖ = 1: zero penalty and zero gradient
    let net = Mlp::from_parts(vec![array![[0.6, 0.8]]], vec![array![0.0]]).unwrap();
    let (v, g, degenerate) = net.grad_penalty_params(&[1.0, 1.0], 0.5).unwrap();
    assert!(v.abs() < 1e-15);
    assert!(g.iter().all(|x| x.abs() < 1e-15));
    assert!(!degenerate);

    // ‖w‖ = 2, ζ = 0.5: penalty 0.5, gradient w/2
    let w = array![[1.2, 1.6]];
    let net = Mlp::from_parts(vec![w.clone()], vec![array![0.0]]).unwrap();
    let (v, g, _) = net.grad_penalty_params(&[3.0, -1.0], 0.5).unwrap();
    assert!((v - 0.5).abs() < 1e-12);
    for j in 0..2 {
        assert!((g.weights[0][[0, j]] - w[[0, j]] / 2.0).abs() < 1e-12);
    }
    assert_eq!(g.biases[0][0], 0.0);
}

#[test]
fn penalty_degenerate_gradient_flagged() {
    let mut net = random_net(&[3, 4, 1], 4);
    net.biases_mut()[0].fill(-1e6);
    let (v, g, degenerate) = net.grad_penalty_params(&[0.0, 0.0, 0.0], 2.0).unwrap();
    assert!(degenerate);
    assert_eq!(v, 2.0);
    assert!(g.iter().all(|x| x == 0.0));
}

fn masks_equal(a: &ForwardTrace, b: &ForwardTrace) -> bool {
    a.masks() == b.masks()
}

/// Central differences over every parameter, skipping points whose masks
/// change under the perturbation.
fn fd_param_check<F>(net: &Mlp, x: &[f64], h: f64, value: F, analytic: &MlpGrads) -> Option<f64>
where
    F: Fn(&Mlp) -> f64,
{
    let base = net.forward(x).unwrap();
    let mut worst: f64 = 0.0;
    let analytic: Vec<f64> = analytic.iter().collect();
    for k in 0..net.n_params() {
        let mut plus = net.clone();
        *param_mut(&mut plus, k) += h;
        let mut minus = net.clone();
        *param_mut(&mut minus, k) -= h;
        if !masks_equal(&base, &plus.forward(x).unwrap()) || !masks_equal(&base, &minus.forward(x).unwrap()) {
            return None;
        }
        let fd = (value(&plus) - value(&minus)) / (2.0 * h);
        worst = worst.max(rel_err(fd, analytic[k]));
    }
    Some(worst)
}

#[test]
fn parameter_gradients_match_finite_differences() {
    let mut checked = 0;
    for seed in 0..10 {
        let net = random_net(&[4, 7, 6, 3], 100 + seed);
        let mut rng = RngStream::new(seed, 1);
        let x: Vec<f64> = (0..4).map(|_| rng.standard_normal()).collect();
        let up: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
        let up_m = Array2::from_shape_vec((1, 3), up.clone()).unwrap();
        let t = net.forward(&x).unwrap();
        let g = net.backward_params(&t, up_m.view()).unwrap();
        let value = |n: &Mlp| {
            let o = n.forward(&x).unwrap();
            o.output().row(0).iter().zip(&up).map(|(a, b)| a * b).sum::<f64>()
        };
        if let Some(err) = fd_param_check(&net, &x, 1e-5, value, &g) {
            assert!(err < 1e-4, "seed {seed}: rel err {err}");
            checked += 1;
        }
    }
    assert!(checked >= 5);
}

#[test]
fn penalty_gradients_match_finite_differences() {
    let mut checked = 0;
    for seed in 0..10 {
        let net = random_net(&[4, 8, 8, 1], 200 + seed);
        let mut rng = RngStream::new(seed, 2);
        let x: Vec<f64> = (0..4).map(|_| rng.standard_normal()).collect();
        let zeta = 0.5;
        let (_, g, _) = net.grad_penalty_params(&x, zeta).unwrap();
        let value = |n: &Mlp| n.grad_penalty_params(&x, zeta).unwrap().0;
        if let Some(err) = fd_param_check(&net, &x, 1e-5, value, &g) {
            assert!(err < 1e-3, "seed {seed}: rel err {err}");
            checked += 1;
        }
    }
    assert!(checked >= 5);
}

#[test]
fn batched_penalty_equals_sum_of_single() {
    let net = random_net(&[3, 5, 4, 1], 9);
    let xs = array![[0.1, 0.5, -0.3], [1.0, -2.0, 0.7], [0.0, 0.2, 0.9]];
    let batch = net.grad_penalty_batch(xs.view(), 1.5).unwrap();
    let mut total = 0.0;
    let mut acc = net.zero_grads();
    for row in xs.outer_iter() {
        let (v, g, _) = net.grad_penalty_params(row.as_slice().unwrap(), 1.5).unwrap();
        total += v;
        acc.add_assign(&g);
    }
    assert!((batch.total - total).abs() < 1e-12);
    for (a, b) in batch.grads.iter().zip(acc.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn serde_round_trip() {
    let net = random_net(&[3, 4, 2], 5);
    let s = serde_json::to_string(&net).unwrap();
    let back: Mlp = serde_json::from_str(&s).unwrap();
    assert_eq!(net, back);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hidden_stack_is_positively_homogeneous(seed in 0u64..1000, c in 0.01f64..50.0) {
        let mut net = random_net(&[3, 6, 5, 2], seed);
        for b in net.biases_mut() { b.fill(0.0); }
        let mut rng = RngStream::new(seed, 7);
        let x: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let a = net.forward(&x).unwrap().output().to_owned();
        let b = net.forward(&cx).unwrap().output().to_owned();
        for (u, v) in a.iter().zip(b.iter()) {
            prop_assert!((c * u - v).abs() <= 1e-10 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn directional_derivative_matches_input_gradient(seed in 0u64..1000) {
        let net = random_net(&[5, 8, 8, 1], seed);
        let mut rng = RngStream::new(seed, 8);
        let x: Array1<f64> = (0..5).map(|_| rng.standard_normal()).collect();
        let v: Array1<f64> = (0..5).map(|_| rng.standard_normal()).collect();
        let h = 1e-5;
        let xp = &x + &(&v * h);
        let xm = &x - &(&v * h);
        let t = net.forward(x.as_slice().unwrap()).unwrap();
        let tp = net.forward(xp.as_slice().unwrap()).unwrap();
        let tm = net.forward(xm.as_slice().unwrap()).unwrap();
        prop_assume!(t.masks() == tp.masks() && t.masks() == tm.masks());
        let fd = (tp.output()[[0, 0]] - tm.output()[[0, 0]]) / (2.0 * h);
        let g = net.grad_input(&t).unwrap();
        let an = g.row(0).dot(&v);
        prop_assert!(rel_err(fd, an) < 1e-4 || (fd - an).abs() < 1e-9);
    }

    #[test]
    fn penalty_is_nonnegative(seed in 0u64..1000, zeta in 0.0f64..10.0) {
        let net = random_net(&[4, 6, 1], seed);
        let mut rng = RngStream::new(seed, 9);
        let x: Vec<f64> = (0..4).map(|_| 3.0 * rng.standard_normal()).collect();
        let (v, _, _) = net.grad_penalty_params(&x, zeta).unwrap();
        prop_assert!(v >= 0.0);
    }
}
