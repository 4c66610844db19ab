//! Actor-critic MLP over a flat parameter vector, generic over the float
//! type so gradients can be checked in f64 while training runs in f32.

use super::{PolicyError, ACTION_DIM, ACTION_SCALE};
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Exploration standard deviation at initialization, per action axis.
pub const INITIAL_STD: [f64; ACTION_DIM] = [0.5 * ACTION_SCALE[0], 0.5 * ACTION_SCALE[1], 0.5 * ACTION_SCALE[2]];

/// Widths of a ReLU trunk feeding a tanh-squashed mean head, a state
/// independent log-std vector and a scalar value head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub input: usize,
    pub hidden: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
}

impl Tensor {
    fn new(name: impl Into<String>, dims: &[usize]) -> Self {
        Tensor {
            name: name.into(),
            dims: dims.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl NetShape {
    /// 32 inputs, four hidden layers of 64.
    pub fn standard() -> Self {
        NetShape {
            input: crate::sensors::OBSERVATION_LEN,
            hidden: vec![64; 4],
        }
    }

    /// Parameter tensors in storage order.
    pub fn tensors(&self) -> Vec<Tensor> {
        let mut t = Vec::new();
        let mut fan_in = self.input;
        for (i, &w) in self.hidden.iter().enumerate() {
            t.push(Tensor::new(format!("trunk.{i}.weight"), &[w, fan_in]));
            t.push(Tensor::new(format!("trunk.{i}.bias"), &[w]));
            fan_in = w;
        }
        t.push(Tensor::new("policy.weight", &[ACTION_DIM, fan_in]));
        t.push(Tensor::new("policy.bias", &[ACTION_DIM]));
        t.push(Tensor::new("log_std", &[ACTION_DIM]));
        t.push(Tensor::new("value.weight", &[1, fan_in]));
        t.push(Tensor::new("value.bias", &[1]));
        t
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(Tensor::len).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: usize,
    b: usize,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone)]
struct Offsets {
    trunk: Vec<Dense>,
    policy: Dense,
    log_std: usize,
    value: Dense,
}

fn offsets(shape: &NetShape) -> Offsets {
    let mut at = 0;
    let mut dense = |rows: usize, cols: usize| {
        let d = Dense { w: at, b: at + rows * cols, rows, cols };
        at += rows * cols + rows;
        d
    };
    let mut fan_in = shape.input;
    let trunk = shape
        .hidden
        .iter()
        .map(|&w| {
            let d = dense(w, fan_in);
            fan_in = w;
            d
        })
        .collect();
    let policy = dense(ACTION_DIM, fan_in);
    let log_std = at;
    at += ACTION_DIM;
    let value = Dense { w: at, b: at + fan_in, rows: 1, cols: fan_in };
    Offsets { trunk, policy, log_std, value }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOutput<T> {
    pub mean: [T; ACTION_DIM],
    pub log_std: [T; ACTION_DIM],
    pub value: T,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// `acts[0]` is the input; `acts[i + 1]` the ReLU output of trunk layer `i`.
    acts: Vec<Vec<T>>,
    tanh: [T; ACTION_DIM],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic<T> {
    pub shape: NetShape,
    pub params: Vec<T>,
}

/// Production network: single-precision parameters.
pub type PolicyWeights = ActorCritic<f32>;

pub(crate) fn cast<T: Float>(x: f64) -> T {
    T::from(x).expect("representable constant")
}

fn dense_forward<T: Float>(p: &[T], d: Dense, x: &[T], out: &mut Vec<T>) {
    out.clear();
    for r in 0..d.rows {
        let row = &p[d.w + r * d.cols..d.w + (r + 1) * d.cols];
        let mut s = p[d.b + r];
        for (&w, &v) in row.iter().zip(x) {
            s = s + w * v;
        }
        out.push(s);
    }
}

/// Accumulates weight/bias gradients for `delta` and, when asked, returns
/// the gradient with respect to the layer input.
fn dense_backward<T: Float>(p: &[T], d: Dense, x: &[T], delta: &[T], grad: &mut [T], want_input: bool) -> Vec<T> {
    let mut dx = if want_input { vec![T::zero(); d.cols] } else { Vec::new() };
    for r in 0..d.rows {
        let g = delta[r];
        if g == T::zero() {
            continue;
        }
        grad[d.b + r] = grad[d.b + r] + g;
        let off = d.w + r * d.cols;
        for c in 0..d.cols {
            grad[off + c] = grad[off + c] + g * x[c];
        }
        if want_input {
            for c in 0..d.cols {
                dx[c] = dx[c] + g * p[off + c];
            }
        }
    }
    dx
}

/// Rows×cols matrix with orthonormal rows (or columns, whichever are
/// fewer), scaled by `gain`. Gram-Schmidt over Gaussian draws.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n, m) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let v = if rows <= cols { basis[r][c] } else { basis[c][r] };
            out[r * cols + c] = gain * v;
        }
    }
    out
}

impl<T: Float> ActorCritic<T> {
    pub fn zeros(shape: NetShape) -> Self {
        let n = shape.param_count();
        ActorCritic {
            shape,
            params: vec![T::zero(); n],
        }
    }

    /// Orthogonal weights (trunk gain √2, policy head 0.01, value head 1),
    /// zero biases, and a standard deviation of half each axis's limit.
    pub fn init(shape: NetShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::zeros(shape);
        let o = offsets(&net.shape);
        let mut fill = |p: &mut [T], d: Dense, gain: f64| {
            for (dst, v) in p[d.w..d.w + d.rows * d.cols]
                .iter_mut()
                .zip(orthogonal(d.rows, d.cols, gain, &mut rng))
            {
                *dst = cast(v);
            }
        };
        for &d in &o.trunk {
            fill(&mut net.params, d, std::f64::consts::SQRT_2);
        }
        fill(&mut net.params, o.policy, 0.01);
        fill(&mut net.params, o.value, 1.0);
        for (i, s) in INITIAL_STD.iter().enumerate() {
            net.params[o.log_std + i] = cast(s.ln());
        }
        net
    }

    pub fn from_params(shape: NetShape, params: Vec<T>) -> Result<Self, PolicyError> {
        let expected = shape.param_count();
        if params.len() != expected {
            return Err(PolicyError::ShapeMismatch {
                expected,
                got: params.len(),
            });
        }
        Ok(ActorCritic { shape, params })
    }

    pub fn log_std(&self) -> [T; ACTION_DIM] {
        let at = offsets(&self.shape).log_std;
        std::array::from_fn(|i| self.params[at + i])
    }

    pub fn forward(&self, obs: &[T]) -> Result<PolicyOutput<T>, PolicyError> {
        self.forward_cached(obs).map(|(o, _)| o)
    }

    pub fn forward_cached(&self, obs: &[T]) -> Result<(PolicyOutput<T>, ForwardCache<T>), PolicyError> {
        if obs.len() != self.shape.input {
            return Err(PolicyError::ShapeMismatch {
                expected: self.shape.input,
                got: obs.len(),
            });
        }
        let o = offsets(&self.shape);
        let p = &self.params;
        let mut acts = Vec::with_capacity(o.trunk.len() + 1);
        acts.push(obs.to_vec());
        for &d in &o.trunk {
            let mut h = Vec::with_capacity(d.rows);
            dense_forward(p, d, acts.last().expect("input present"), &mut h);
            for v in &mut h {
                *v = v.max(T::zero());
            }
            acts.push(h);
        }
        let feat = acts.last().expect("input present");
        let mut raw = Vec::with_capacity(ACTION_DIM);
        dense_forward(p, o.policy, feat, &mut raw);
        let mut value = Vec::with_capacity(1);
        dense_forward(p, o.value, feat, &mut value);
        let tanh: [T; ACTION_DIM] = std::array::from_fn(|i| raw[i].tanh());
        let out = PolicyOutput {
            mean: std::array::from_fn(|i| cast::<T>(ACTION_SCALE[i]) * tanh[i]),
            log_std: std::array::from_fn(|i| p[o.log_std + i]),
            value: value[0],
        };
        Ok((out, ForwardCache { acts, tanh }))
    }

    /// Accumulates into `grad` the parameter gradient of a scalar loss given
    /// its partial derivatives with respect to the three outputs.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        d_mean: &[T; ACTION_DIM],
        d_log_std: &[T; ACTION_DIM],
        d_value: T,
        grad: &mut [T],
    ) {
        let o = offsets(&self.shape);
        let p = &self.params;
        for i in 0..ACTION_DIM {
            grad[o.log_std + i] = grad[o.log_std + i] + d_log_std[i];
        }
        let d_raw: [T; ACTION_DIM] = std::array::from_fn(|i| {
            let t = cache.tanh[i];
            d_mean[i] * cast(ACTION_SCALE[i]) * (T::one() - t * t)
        });
        let feat = cache.acts.last().expect("input present");
        let want = !o.trunk.is_empty();
        let mut delta = dense_backward(p, o.policy, feat, &d_raw, grad, want);
        let dv = dense_backward(p, o.value, feat, &[d_value], grad, want);
        for (a, b) in delta.iter_mut().zip(dv) {
            *a = *a + b;
        }
        for (li, &d) in o.trunk.iter().enumerate().rev() {
            let out = &cache.acts[li + 1];
            for (g, &h) in delta.iter_mut().zip(out) {
                if h <= T::zero() {
                    *g = T::zero();
                }
            }
            delta = dense_backward(p, d, &cache.acts[li], &delta, grad, li > 0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Float>(&self) -> ActorCritic<U> {
        ActorCritic {
            shape: self.shape.clone(),
            params: self
                .params
                .iter()
                .map(|&v| U::from(v).expect("finite parameter"))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_shape_table() {
        let s = NetShape::standard();
        let t = s.tensors();
        assert_eq!(t[0].dims, vec![64, 32]);
        assert_eq!(t.len(), 4 * 2 + 5);
        assert_eq!(s.param_count(), (32 * 64 + 64) + 3 * (64 * 64 + 64) + (3 * 64 + 3) + 3 + 65);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = ActorCritic::<f64>::zeros(NetShape::standard());
        let out = net.forward(&[0.3; 32]).unwrap();
        assert_eq!(out.mean, [0.0; 3]);
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn wrong_observation_length() {
        let net = ActorCritic::<f32>::zeros(NetShape::standard());
        assert!(matches!(net.forward(&[0.0; 31]), Err(PolicyError::ShapeMismatch { expected: 32, got: 31 })));
    }

    #[test]
    fn init_rows_are_orthogonal() {
        let net = ActorCritic::<f64>::init(NetShape::standard(), 3);
        // second trunk layer is square: W Wᵀ = 2 I
        let o = offsets(&net.shape);
        let d = o.trunk[1];
        let w = &net.params[d.w..d.w + 64 * 64];
        for a in 0..64 {
            for b in 0..64 {
                let dot: f64 = (0..64).map(|k| w[a * 64 + k] * w[b * 64 + k]).sum();
                let want = if a == b { 2.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
        assert_eq!(net.log_std(), INITIAL_STD.map(f64::ln));
    }

    #[test]
    fn forward_is_pure() {
        let net = ActorCritic::<f32>::init(NetShape::standard(), 9);
        let obs: Vec<f32> = (0..32).map(|i| (i as f32 * 0.37).sin()).collect();
        assert_eq!(net.forward(&obs).unwrap(), net.forward(&obs).unwrap());
    }
}
