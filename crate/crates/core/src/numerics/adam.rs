use alloc::vec;
use alloc::vec::Vec;

use super::{NumericsError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam with one moment pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zero moments sized to `params`.
    pub fn new<'t>(config: AdamConfig, params: impl IntoIterator<Item = &'t Tensor>) -> Self {
        let sizes: Vec<usize> = params.into_iter().map(Tensor::numel).collect();
        Self {
            config,
            step: 0,
            first_moment: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Rebuilds a saved state; moment buffers must pair up.
    pub fn from_parts(
        config: AdamConfig,
        step: u64,
        first_moment: Vec<Vec<f64>>,
        second_moment: Vec<Vec<f64>>,
    ) -> Result<Self, NumericsError> {
        if first_moment.len() != second_moment.len()
            || first_moment
                .iter()
                .zip(&second_moment)
                .any(|(m, v)| m.len() != v.len())
        {
            return Err(NumericsError::Config(
                "adam first/second moment buffers do not pair up".into(),
            ));
        }
        Ok(Self {
            config,
            step,
            first_moment,
            second_moment,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }

    /// One update using each parameter's gradient slot. Every parameter must
    /// carry a gradient; the state is left untouched on error.
    pub fn step<'t>(
        &mut self,
        params: impl IntoIterator<Item = &'t mut Tensor>,
    ) -> Result<(), NumericsError> {
        let mut params: Vec<&mut Tensor> = params.into_iter().collect();
        if params.len() != self.first_moment.len() {
            return Err(NumericsError::Config(alloc::format!(
                "optimizer tracks {} parameters, got {}",
                self.first_moment.len(),
                params.len()
            )));
        }
        for (index, p) in params.iter().enumerate() {
            match p.grad() {
                None => return Err(NumericsError::MissingGradient { index }),
                Some(g) if g.len() != self.first_moment[index].len() => {
                    return Err(NumericsError::DataLength {
                        shape: p.shape().to_vec(),
                        len: self.first_moment[index].len(),
                    })
                }
                Some(_) => {}
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - libm::pow(beta1, t as f64);
        let bc2 = 1.0 - libm::pow(beta2, t as f64);
        for (i, p) in params.iter_mut().enumerate() {
            let grad = p.grad().unwrap().to_vec();
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            for (((w, g), m), v) in p.data_mut().iter_mut().zip(&grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *w -= learning_rate * m_hat / (libm::sqrt(v_hat) + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent scalar reference.
    fn scalar_adam(w0: f64, grads: &[f64], lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f64);
        let (mut w, mut m, mut v) = (w0, 0.0, 0.0);
        for (t, &g) in grads.iter().enumerate() {
            let t = (t + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            w -= lr * mh / (vh.sqrt() + eps);
        }
        w
    }

    fn param(v: f64) -> Tensor {
        Tensor::scalar(v).with_requires_grad(true)
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = param(0.7);
        let mut st = AdamState::new(AdamConfig::default(), [&p]);
        p.set_grad(vec![0.0]).unwrap();
        st.step([&mut p]).unwrap();
        assert_eq!(p.data(), &[0.7]);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn first_step_matches_scalar_reference() {
        let mut p = param(1.0);
        let mut st = AdamState::new(AdamConfig::default(), [&p]);
        p.set_grad(vec![1.0]).unwrap();
        st.step([&mut p]).unwrap();
        let expected = scalar_adam(1.0, &[1.0], 1e-4);
        assert_eq!(p.data()[0], expected);
        // bias-corrected first step moves by lr·1/(1+eps)
        assert!((1.0 - p.data()[0] - 1e-4).abs() < 1e-11);
    }

    #[test]
    fn quadratic_descent_is_monotone() {
        let mut p = param(1.0);
        let mut st = AdamState::new(AdamConfig::with_learning_rate(1e-2), [&p]);
        let mut prev = 1.0;
        let mut grads = Vec::new();
        for _ in 0..100 {
            let w = p.data()[0];
            grads.push(2.0 * w);
            p.set_grad(vec![2.0 * w]).unwrap();
            st.step([&mut p]).unwrap();
            let f = p.data()[0] * p.data()[0];
            assert!(f < prev, "f rose from {prev} to {f}");
            prev = f;
        }
        let reference = scalar_adam(1.0, &grads, 1e-2);
        assert!((p.data()[0] - reference).abs() <= 1e-12 * reference.abs().max(1e-3));
    }

    #[test]
    fn missing_gradient_is_an_error() {
        let mut a = param(1.0);
        let mut b = param(2.0);
        let mut st = AdamState::new(AdamConfig::default(), [&a, &b]);
        a.set_grad(vec![1.0]).unwrap();
        assert_eq!(
            st.step([&mut a, &mut b]),
            Err(NumericsError::MissingGradient { index: 1 })
        );
        assert_eq!(st.step_count(), 0);
        assert_eq!(a.data(), &[1.0]);
    }

    #[test]
    fn deterministic_bitwise() {
        let run = || {
            let mut p = Tensor::vector(vec![0.3, -0.2, 1.5]).with_requires_grad(true);
            let mut st = AdamState::new(AdamConfig::with_learning_rate(3e-3), [&p]);
            for k in 0..10 {
                let g: Vec<f64> = p.data().iter().map(|w| w.sin() + k as f64 * 0.01).collect();
                p.set_grad(g).unwrap();
                st.step([&mut p]).unwrap();
            }
            (p, st)
        };
        let (a, sa) = run();
        let (b, sb) = run();
        assert_eq!(
            a.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(sa, sb);
    }
}
