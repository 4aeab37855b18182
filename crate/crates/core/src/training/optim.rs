use crate::error::{Error, Result};
use crate::nn::Parameter;

/// Adam with bias correction. Moment buffers are allocated on the first step
/// and must then see the same parameter list, in the same order, every step.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            beta1,
            beta2,
            eps,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Steps taken so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update with learning rate `lr` and zeroes the gradients.
    /// A non-finite gradient aborts before any parameter changes.
    pub fn step(&mut self, params: &mut [&mut Parameter], lr: f64) -> Result<()> {
        if let Some(p) = params.iter().find(|p| !p.grad.is_finite()) {
            return Err(Error::NonFiniteGradient { param: p.name.clone() });
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() || self.m.iter().zip(params.iter()).any(|(m, p)| m.len() != p.len()) {
            return Err(Error::shape("adam_step", "parameter list changed between steps"));
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powf(self.t as f64);
        let c2 = 1.0 - self.beta2.powf(self.t as f64);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let Parameter { value, grad, .. } = &mut **p;
            for (((w, &g), m), v) in value.data_mut().iter_mut().zip(grad.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
            }
            grad.fill(0.0);
        }
        Ok(())
    }
}

/// Cosine decay from `lr_max` at step 0 to `lr_min` at `total_steps`.
pub fn cosine_lr(step: usize, total_steps: usize, lr_max: f64, lr_min: f64) -> Result<f64> {
    if total_steps == 0 {
        return Err(Error::Config("cosine schedule needs at least one step".into()));
    }
    let frac = step.min(total_steps) as f64 / total_steps as f64;
    Ok(lr_min + 0.5 * (lr_max - lr_min) * (1.0 + (std::f64::consts::PI * frac).cos()))
}

/// Index of the best value: the first value, replaced whenever a later one
/// is lower by at least `min_delta` (and by more than nothing).
pub fn best_index(history: &[f64], min_delta: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in history.iter().enumerate() {
        match best {
            Some(b) if history[b] - v < min_delta || history[b] <= v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// True once `patience` epochs have passed since the last improvement of at
/// least `min_delta`.
pub fn early_stop_check(history: &[f64], patience: usize, min_delta: f64) -> bool {
    match best_index(history, min_delta) {
        Some(best) => history.len() - 1 - best >= patience,
        None => false,
    }
}
