use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Float> Adam<T> {
    pub fn new(n: usize, lr: f64, betas: [f64; 2], eps: f64) -> Self {
        Adam {
            lr,
            beta1: betas[0],
            beta2: betas[1],
            eps,
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One descent step on `params` along `grad`.
    pub fn step(&mut self, params: &mut [T], grad: &[T]) {
        self.t += 1;
        let c = |x: f64| T::from(x).expect("representable");
        let (b1, b2) = (c(self.beta1), c(self.beta2));
        let bc1 = c(1.0 - self.beta1.powi(self.t));
        let bc2 = c(1.0 - self.beta2.powi(self.t));
        let (lr, eps) = (c(self.lr), c(self.eps));
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
