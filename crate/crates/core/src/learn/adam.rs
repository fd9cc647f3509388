use crate::error::{Error, Result};

/// Parameters and moment estimates of the Adam optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub params: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Zero moments with `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`.
    pub fn new(params: Vec<f64>, lr: f64) -> Self {
        let n = params.len();
        Self {
            params,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Number of updates applied so far.
    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// One bias-corrected Adam update in place.
    pub fn update(&mut self, grad: &[f64]) -> Result<()> {
        if grad.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "gradient has {} entries, optimizer has {} parameters",
                grad.len(),
                self.params.len()
            )));
        }
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Optimizer {
                epoch: self.step + 1,
                index,
                what: format!("non-finite gradient {}", grad[index]),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, m), v), &g) in self
            .params
            .iter_mut()
            .zip(&mut self.m)
            .zip(&mut self.v)
            .zip(grad)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::update`].
pub fn adam_step(state: &AdamState, grad: &[f64]) -> Result<AdamState> {
    let mut next = state.clone();
    next.update(grad)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let s = AdamState::new(vec![1.5, -2.0], 0.01);
        let t = adam_step(&s, &[0.0, 0.0]).unwrap();
        assert_eq!(t.params, s.params);
        assert_eq!(t.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let s = AdamState::new(vec![0.0], 0.1);
        let t = adam_step(&s, &[1.0]).unwrap();
        // m̂ = 1, v̂ = 1 → Δ = 0.1 / (1 + 1e-8)
        assert!((t.params[0] + 0.1).abs() < 1e-8);
    }

    #[test]
    fn constant_gradient_step_tends_to_lr() {
        let mut s = AdamState::new(vec![0.0], 0.01);
        let mut prev = 0.0;
        for _ in 0..2000 {
            s.update(&[-3.0]).unwrap();
            let step = s.params[0] - prev;
            prev = s.params[0];
            assert!(step > 0.0);
        }
        let mut last = s.clone();
        last.update(&[-3.0]).unwrap();
        assert!(((last.params[0] - s.params[0]) - 0.01).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_reports_index() {
        let mut s = AdamState::new(vec![0.0, 0.0, 0.0], 0.01);
        s.update(&[0.1, 0.1, 0.1]).unwrap();
        match s.update(&[0.0, f64::NAN, 0.0]) {
            Err(Error::Optimizer { epoch, index, .. }) => assert_eq!((epoch, index), (2, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(s.update(&[0.0]), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn second_moment_stays_nonnegative(grads in proptest::collection::vec(-1e3f64..1e3, 1..50)) {
            let mut s = AdamState::new(vec![0.0], 0.01);
            for g in grads {
                s.update(&[g]).unwrap();
                prop_assert!(s.second_moment()[0] >= 0.0);
                prop_assert_eq!(s.first_moment().len(), s.params.len());
            }
        }
    }
}
