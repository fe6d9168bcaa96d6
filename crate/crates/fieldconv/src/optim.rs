//! ADAM optimizer with bias correction. One instance owns the moment
//! buffers for a whole [`ParamStore`]; updates walk parameters in
//! registration order, so training trajectories are deterministic.

use crate::autodiff::ParamStore;

/// Default training hyperparameters.
pub const DEFAULT_LR: f64 = 0.01;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

/// Outcome of one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    /// A non-finite gradient was seen; parameters and moments untouched.
    SkippedNonFinite { param: usize },
}

impl Adam {
    pub fn new(store: &ParamStore, lr: f64) -> Self {
        let m = store.iter().map(|(_, p)| vec![0.0; p.data.len()]).collect();
        let v = store.iter().map(|(_, p)| vec![0.0; p.data.len()]).collect();
        Adam {
            lr,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            eps: DEFAULT_EPS,
            step_count: 0,
            m,
            v,
        }
    }

    /// Applies one update from dense per-parameter gradients (registration
    /// order, as produced by `Gradients::dense`).
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Vec<f64>]) -> StepOutcome {
        assert_eq!(grads.len(), store.len());
        for (idx, g) in grads.iter().enumerate() {
            if g.iter().any(|x| !x.is_finite()) {
                return StepOutcome::SkippedNonFinite { param: idx };
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for idx in 0..grads.len() {
            let data = store.data_mut(crate::autodiff::ParamId(idx));
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for ((x, g), (mi, vi)) in data
                .iter_mut()
                .zip(grads[idx].iter())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *x -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        StepOutcome::Applied
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::ParamStore;

    fn store_with(data: Vec<f64>) -> ParamStore {
        let mut s = ParamStore::new();
        s.register("p", data);
        s
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut store = store_with(vec![1.0, -2.0]);
        let mut adam = Adam::new(&store, 0.01);
        let outcome = adam.step(&mut store, &[vec![0.0, 0.0]]);
        assert_eq!(outcome, StepOutcome::Applied);
        assert_eq!(adam.step_count, 1);
        assert_eq!(store.data(crate::autodiff::ParamId(0)), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_magnitude_is_learning_rate() {
        // With bias correction, the first update is lr * g / (|g| + eps).
        let mut store = store_with(vec![0.0, 0.0, 0.0]);
        let mut adam = Adam::new(&store, 0.01);
        adam.step(&mut store, &[vec![3.0, -0.5, 100.0]]);
        for (x, g) in store
            .data(crate::autodiff::ParamId(0))
            .iter()
            .zip([3.0f64, -0.5, 100.0])
        {
            assert!((x.abs() - 0.01).abs() < 1e-6);
            assert!(x.signum() == -g.signum());
        }
    }

    #[test]
    fn identical_runs_produce_identical_trajectories() {
        let run = || {
            let mut store = store_with(vec![0.3, 0.7]);
            let mut adam = Adam::new(&store, 0.05);
            for k in 0..10 {
                let g = vec![(k as f64).sin(), (k as f64).cos()];
                adam.step(&mut store, &[g]);
            }
            store.data(crate::autodiff::ParamId(0)).to_vec()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_gradient_skips_step() {
        let mut store = store_with(vec![1.0]);
        let mut adam = Adam::new(&store, 0.01);
        let outcome = adam.step(&mut store, &[vec![f64::NAN]]);
        assert_eq!(outcome, StepOutcome::SkippedNonFinite { param: 0 });
        assert_eq!(adam.step_count, 0);
        assert_eq!(store.data(crate::autodiff::ParamId(0)), &[1.0]);
    }
}
