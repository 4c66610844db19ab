//! Forward pass, loss gradient, GAE and Adam against independent oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactile_nav::policy::{ActorCritic, NetShape, PolicyWeights, ACTION_SCALE};
use tactile_nav::sensors::OBSERVATION_LEN;
use tactile_nav::train::{compute_gae, ppo_loss, Adam, LossSample};

/// Reads tensors in storage order and evaluates the network with plain loops.
fn naive_forward(shape: &NetShape, params: &[f64], obs: &[f64]) -> ([f64; 3], [f64; 3], f64) {
    let mut at = 0;
    let mut take = |n: usize| {
        let s = &params[at..at + n];
        at += n;
        s.to_vec()
    };
    let mut x = obs.to_vec();
    let mut fan_in = shape.input;
    for &w in &shape.hidden {
        let wt = take(w * fan_in);
        let b = take(w);
        x = (0..w)
            .map(|r| {
                let mut acc = b[r];
                for c in 0..fan_in {
                    acc += wt[r * fan_in + c] * x[c];
                }
                acc.max(0.0)
            })
            .collect();
        fan_in = w;
    }
    let pw = take(3 * fan_in);
    let pb = take(3);
    let log_std = take(3);
    let vw = take(fan_in);
    let vb = take(1);
    let mut mean = [0.0; 3];
    for r in 0..3 {
        let mut acc = pb[r];
        for c in 0..fan_in {
            acc += pw[r * fan_in + c] * x[c];
        }
        mean[r] = ACTION_SCALE[r] * acc.tanh();
    }
    let mut v = vb[0];
    for c in 0..fan_in {
        v += vw[c] * x[c];
    }
    ([mean[0], mean[1], mean[2]], [log_std[0], log_std[1], log_std[2]], v)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

#[test]
fn forward_matches_naive_oracle() {
    check_forward_matches_naive_oracle();
}

pub fn check_forward_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = NetShape::standard();
    let n = shape.param_count();
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let net: ActorCritic<f64> = ActorCritic::from_params(shape.clone(), (0..n).map(|_| rng.random_range(-0.3..0.3)).collect()).unwrap();
        let obs: Vec<f64> = (0..OBSERVATION_LEN).map(|_| rng.random_range(-1.0..1.0)).collect();
        let out = net.forward(&obs).unwrap();
        let (mean, log_std, value) = naive_forward(&shape, &net.params, &obs);
        for i in 0..3 {
            worst = worst.max(rel(out.mean[i], mean[i]));
            assert_eq!(out.log_std[i], log_std[i]);
        }
        worst = worst.max(rel(out.value, value));

        // f32 storage: rounding only, against the oracle on the same weights
        let w32 = PolicyWeights::init(shape.clone(), trial);
        let obs32: Vec<f32> = obs.iter().map(|&v| v as f32).collect();
        let out32 = w32.forward(&obs32).unwrap();
        let p64: Vec<f64> = w32.params.iter().map(|&v| f64::from(v)).collect();
        let o64: Vec<f64> = obs32.iter().map(|&v| f64::from(v)).collect();
        let (mean, _, value) = naive_forward(&shape, &p64, &o64);
        for i in 0..3 {
            assert!((f64::from(out32.mean[i]) - mean[i]).abs() <= 1e-6 + 1e-5 * mean[i].abs());
        }
        assert!((f64::from(out32.value) - value).abs() <= 1e-6 + 1e-5 * value.abs());
    }
    assert!(worst < 1e-6, "worst relative error {worst}");
}

fn toy_batch(rng: &mut ChaCha8Rng, net: &ActorCritic<f64>) -> Vec<LossSample> {
    (0..24)
        .map(|k| {
            let obs: [f64; OBSERVATION_LEN] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let out = net.forward(&obs).unwrap();
            let action: [f64; 3] = std::array::from_fn(|i| out.mean[i] + rng.random_range(-0.4..0.4));
            let logp = tactile_nav::policy::gaussian_log_prob(&out.mean, &out.log_std, &action);
            // a third of the samples sit far into the clipped region
            let shift = if k % 3 == 0 { rng.random_range(0.5..1.0) * if k % 2 == 0 { 1.0 } else { -1.0 } } else { rng.random_range(-0.08..0.08) };
            LossSample {
                obs,
                action,
                old_log_prob: logp + shift,
                advantage: rng.random_range(-2.0..2.0),
                ret: rng.random_range(-3.0..3.0),
            }
        })
        .collect()
}

#[test]
fn loss_gradient_matches_finite_differences() {
    check_loss_gradient_matches_finite_differences();
}

pub fn check_loss_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shape = NetShape { input: OBSERVATION_LEN, hidden: vec![4] };
    let mut net: ActorCritic<f64> = ActorCritic::init(shape, 9);
    // move off the symmetric initialization so every head has signal
    for p in net.params.iter_mut() {
        *p += rng.random_range(-0.2..0.2);
    }
    let batch = toy_batch(&mut rng, &net);
    let (clip, ent, vc) = (0.2, 0.01, 0.5);
    let mut grad = vec![0.0; net.params.len()];
    ppo_loss(&net, &batch, clip, ent, vc, Some(&mut grad)).unwrap();

    let h = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..net.params.len() {
        let mut plus = net.clone();
        plus.params[i] += h;
        let mut minus = net.clone();
        minus.params[i] -= h;
        let fp = ppo_loss(&plus, &batch, clip, ent, vc, None).unwrap().total;
        let fm = ppo_loss(&minus, &batch, clip, ent, vc, None).unwrap().total;
        let fd = (fp - fm) / (2.0 * h);
        let err = (grad[i] - fd).abs() / (grad[i].abs() + fd.abs()).max(1e-6);
        worst = worst.max(err);
    }
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn gae_matches_hand_unrolled_recursion() {
    check_gae_matches_hand_unrolled_recursion();
}

pub fn check_gae_matches_hand_unrolled_recursion() {
    let (g, l) = (0.99, 0.95);
    let r = [0.5, -0.2, 1.0];
    let v = [0.1, 0.3, -0.4];
    let boot = 0.7;
    let (adv, ret) = compute_gae(&r, &v, &[false, false, false], boot, g, l).unwrap();
    let d2 = r[2] + g * boot - v[2];
    let d1 = r[1] + g * v[2] - v[1];
    let d0 = r[0] + g * v[1] - v[0];
    let a2 = d2;
    let a1 = d1 + g * l * a2;
    let a0 = d0 + g * l * a1;
    for (got, want) in adv.iter().zip([a0, a1, a2]) {
        assert!((got - want).abs() < 1e-7);
    }
    for i in 0..3 {
        assert!((ret[i] - (adv[i] + v[i])).abs() < 1e-7);
    }

    // a terminal in the middle cuts both bootstrap and trace
    let (adv, _) = compute_gae(&r, &v, &[false, true, false], boot, g, l).unwrap();
    let d1 = r[1] - v[1];
    let a1 = d1;
    let a0 = d0 + g * l * a1;
    assert!((adv[1] - a1).abs() < 1e-7);
    assert!((adv[0] - a0).abs() < 1e-7);
    assert!((adv[2] - a2).abs() < 1e-7);
}

#[test]
fn adam_matches_closed_form_iteration() {
    check_adam_matches_closed_form_iteration();
}

pub fn check_adam_matches_closed_form_iteration() {
    // f(x) = ½·a·(x − b)², so the gradient is a·(x − b)
    let (a, b) = (3.0, 1.5);
    let (lr, b1, b2, eps) = (0.05, 0.9, 0.999, 1e-8);
    let mut adam: Adam<f64> = Adam::new(1, lr, [b1, b2], eps);
    let mut x = [-2.0];
    let mut xs = vec![x[0]];
    let mut grads = Vec::new();
    for t in 1..=10 {
        let g = a * (xs[t - 1] - b);
        grads.push(g);
        adam.step(&mut x, &[g]);
        // moment estimates as explicit weighted sums of past gradients
        let m: f64 = (1..=t).map(|k| (1.0 - b1) * b1.powi((t - k) as i32) * grads[k - 1]).sum();
        let v: f64 = (1..=t).map(|k| (1.0 - b2) * b2.powi((t - k) as i32) * grads[k - 1].powi(2)).sum();
        let m_hat = m / (1.0 - b1.powi(t as i32));
        let v_hat = v / (1.0 - b2.powi(t as i32));
        let expect = xs[t - 1] - lr * m_hat / (v_hat.sqrt() + eps);
        assert!((x[0] - expect).abs() < 1e-6, "step {t}: {} vs {expect}", x[0]);
        xs.push(expect);
    }
}
