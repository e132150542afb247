use serde::{Deserialize, Serialize};

/// Adam with weight decay added to the gradient (not decoupled).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64, weight_decay: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// One update at learning rate `lr` (the schedule's value for this step).
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let g = g + self.weight_decay * *p;
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// `base_lr (1 + cos(pi step / total)) / 2`.
pub fn cosine_lr(step: usize, total_steps: usize, base_lr: f64) -> f64 {
    if total_steps == 0 {
        return base_lr;
    }
    let frac = step.min(total_steps) as f64 / total_steps as f64;
    base_lr * (1.0 + (std::f64::consts::PI * frac).cos()) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut a = Adam::new(2, 5e-4, 0.0);
        let mut p = [1.0, -2.0];
        a.step(&mut p, &[0.0, 0.0], 5e-4);
        assert_eq!(p, [1.0, -2.0]);
    }

    #[test]
    fn first_step_by_hand() {
        let mut a = Adam::new(1, 5e-4, 0.0);
        let mut p = [1.0];
        a.step(&mut p, &[1.0], 5e-4);
        // m_hat = 1, v_hat = 1, step = lr / (1 + eps)
        assert!((p[0] - (1.0 - 5e-4 / (1.0 + 1e-8))).abs() < 1e-15);
        assert!((p[0] - 0.9995).abs() < 1e-10);
    }

    #[test]
    fn two_steps_follow_the_recurrence() {
        let (lr, g) = (1e-3, 0.5);
        let mut a = Adam::new(1, lr, 0.0);
        let mut p = [0.0];
        a.step(&mut p, &[g], lr);
        a.step(&mut p, &[g], lr);
        let m2 = 0.1 * g * 0.9 + 0.1 * g;
        let v2 = 0.001 * g * g * 0.999 + 0.001 * g * g;
        let m_hat = m2 / (1.0 - 0.9f64.powi(2));
        let v_hat = v2 / (1.0 - 0.999f64.powi(2));
        let second = lr * m_hat / (v_hat.sqrt() + 1e-8);
        let first = lr * g / (g + 1e-8);
        assert!((p[0] + first + second).abs() < 1e-15);
        assert!((a.m[0] - m2).abs() < 1e-15 && (a.v[0] - v2).abs() < 1e-15);
    }

    #[test]
    fn decay_enters_through_the_gradient() {
        let mut a = Adam::new(1, 5e-4, 1e-8);
        let mut p = [2.0];
        a.step(&mut p, &[0.0], 5e-4);
        // g = wd * p, normalised by Adam: the step is lr * g / (|g| + eps)
        let g = 2e-8;
        assert!((p[0] - (2.0 - 5e-4 * g / (g + 1e-8))).abs() < 1e-15);
    }

    #[test]
    fn cosine_schedule() {
        assert_eq!(cosine_lr(0, 100, 0.1), 0.1);
        assert!(cosine_lr(100, 100, 0.1).abs() < 1e-17);
        assert!((cosine_lr(50, 100, 0.1) - 0.05).abs() < 1e-15);
    }
}
