use std::sync::Arc;

use crate::scalar::{lit, Scalar};

use super::network::{Gradients, Network};
use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> Default for AdamConfig<T> {
    fn default() -> Self {
        Self { lr: lit(1e-3), beta1: lit(0.9), beta2: lit(0.999), epsilon: lit(1e-8) }
    }
}

impl<T: Scalar> AdamConfig<T> {
    pub fn with_lr(lr: T) -> Self {
        Self { lr, ..Self::default() }
    }

    fn validate(&self) -> Result<(), NetError> {
        let ok = self.lr > T::zero()
            && self.beta1 >= T::zero()
            && self.beta1 < T::one()
            && self.beta2 >= T::zero()
            && self.beta2 < T::one()
            && self.epsilon > T::zero();
        if ok {
            Ok(())
        } else {
            Err(NetError::InvalidArgument(format!("bad adam hyperparameters {self:?}")))
        }
    }
}

/// First and second moment estimates for one parameter slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub first: Vec<T>,
    pub second: Vec<T>,
}

impl<T: Scalar> Moments<T> {
    pub fn zeros(len: usize) -> Self {
        Self { first: vec![T::zero(); len], second: vec![T::zero(); len] }
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    /// One bias-corrected Adam update at step `t` (1-based).
    ///
    /// Entries whose gradient is exactly zero are skipped: neither their
    /// moments nor their parameter move.
    pub fn update(&mut self, params: &mut [T], grads: &[T], t: u64, cfg: &AdamConfig<T>) {
        debug_assert_eq!(params.len(), grads.len());
        debug_assert_eq!(params.len(), self.first.len());
        let (c1, c2) = bias_corrections(t, cfg);
        for i in 0..params.len() {
            let g = grads[i];
            if g == T::zero() {
                continue;
            }
            let m = cfg.beta1 * self.first[i] + (T::one() - cfg.beta1) * g;
            let v = cfg.beta2 * self.second[i] + (T::one() - cfg.beta2) * g * g;
            self.first[i] = m;
            self.second[i] = v;
            params[i] = params[i] - cfg.lr * (m / c1) / ((v / c2).sqrt() + cfg.epsilon);
        }
    }
}

fn bias_corrections<T: Scalar>(t: u64, cfg: &AdamConfig<T>) -> (T, T) {
    let t = t.min(i32::MAX as u64) as i32;
    (T::one() - cfg.beta1.powi(t), T::one() - cfg.beta2.powi(t))
}

/// Optimizer state for a whole [`Network`].
///
/// Dense-row moments are allocated the first time a row receives a non-zero
/// gradient and are shared copy-on-write between clones, like the rows
/// themselves.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    step: u64,
    config: AdamConfig<T>,
    conv_weights: Vec<Moments<T>>,
    conv_biases: Vec<Moments<T>>,
    dense_rows: Vec<Option<Arc<Moments<T>>>>,
    dense_bias: Moments<T>,
}

impl<T: Scalar> PartialEq for AdamState<T> {
    fn eq(&self, other: &Self) -> bool {
        self.step == other.step
            && self.config == other.config
            && self.conv_weights == other.conv_weights
            && self.conv_biases == other.conv_biases
            && self.dense_bias == other.dense_bias
            && self.dense_rows.len() == other.dense_rows.len()
            && self.dense_rows.iter().zip(&other.dense_rows).all(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Arc::ptr_eq(a, b) || a == b,
                (None, None) => true,
                _ => false,
            })
    }
}

impl<T: Scalar> AdamState<T> {
    pub fn new(net: &Network<T>, config: AdamConfig<T>) -> Result<Self, NetError> {
        config.validate()?;
        Ok(Self {
            step: 0,
            config,
            conv_weights: net.conv_layers().iter().map(|c| Moments::zeros(c.weights().len())).collect(),
            conv_biases: net.conv_layers().iter().map(|c| Moments::zeros(c.filters())).collect(),
            dense_rows: vec![None; net.dense().out_dim()],
            dense_bias: Moments::zeros(net.dense().out_dim()),
        })
    }

    pub(crate) fn from_parts(
        step: u64,
        config: AdamConfig<T>,
        conv_weights: Vec<Moments<T>>,
        conv_biases: Vec<Moments<T>>,
        dense_rows: Vec<Option<Arc<Moments<T>>>>,
        dense_bias: Moments<T>,
    ) -> Self {
        Self { step, config, conv_weights, conv_biases, dense_rows, dense_bias }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig<T> {
        &self.config
    }

    pub fn set_lr(&mut self, lr: T) {
        self.config.lr = lr;
    }

    pub(crate) fn conv_moments(&self) -> (&[Moments<T>], &[Moments<T>]) {
        (&self.conv_weights, &self.conv_biases)
    }

    pub(crate) fn dense_row_moments(&self) -> &[Option<Arc<Moments<T>>>] {
        &self.dense_rows
    }

    pub(crate) fn dense_bias_moments(&self) -> &Moments<T> {
        &self.dense_bias
    }

    pub fn compatible_with(&self, net: &Network<T>) -> bool {
        self.conv_weights.len() == net.conv_layers().len()
            && self
                .conv_weights
                .iter()
                .zip(&self.conv_biases)
                .zip(net.conv_layers())
                .all(|((w, b), c)| w.len() == c.weights().len() && b.len() == c.filters())
            && self.dense_rows.len() == net.dense().out_dim()
            && self.dense_rows.iter().flatten().all(|m| m.len() == net.dense().in_dim())
            && self.dense_bias.len() == net.dense().out_dim()
    }

    /// Applies one Adam step and increments the step counter.
    pub fn step(&mut self, net: &mut Network<T>, grads: &Gradients<T>) -> Result<(), NetError> {
        if !self.compatible_with(net) || grads.conv.len() != net.conv_layers().len() {
            return Err(NetError::ShapeMismatch {
                expected: "optimizer state matching the network".into(),
                got: "incompatible shapes".into(),
            });
        }
        for (g, layer) in grads.conv.iter().zip(net.conv_layers()) {
            if g.weights.len() != layer.weights().len() || g.biases.len() != layer.filters() {
                return Err(NetError::ShapeMismatch {
                    expected: "conv gradient matching layer".into(),
                    got: format!("{} weights", g.weights.len()),
                });
            }
        }
        let in_dim = net.dense().in_dim();
        if grads.dense_rows.iter().any(|(&r, g)| r >= self.dense_rows.len() || g.len() != in_dim)
            || grads.dense_bias.keys().any(|&r| r >= self.dense_rows.len())
        {
            return Err(NetError::ShapeMismatch { expected: "dense gradient rows".into(), got: "out of range".into() });
        }

        self.step += 1;
        let t = self.step;
        let cfg = self.config;
        for (l, g) in grads.conv.iter().enumerate() {
            let layer = &mut net.conv_layers_mut()[l];
            self.conv_weights[l].update(layer.weights_mut(), &g.weights, t, &cfg);
            self.conv_biases[l].update(layer.biases_mut(), &g.biases, t, &cfg);
        }
        for (&r, g) in &grads.dense_rows {
            if g.iter().all(|&v| v == T::zero()) {
                continue;
            }
            let moments = self.dense_rows[r].get_or_insert_with(|| Arc::new(Moments::zeros(in_dim)));
            Arc::make_mut(moments).update(net.dense_mut().row_mut(r), g, t, &cfg);
        }
        if !grads.dense_bias.is_empty() {
            let out = net.dense().out_dim();
            let mut bias_grad = vec![T::zero(); out];
            for (&r, &g) in &grads.dense_bias {
                bias_grad[r] = g;
            }
            self.dense_bias.update(net.dense_mut().biases_mut(), &bias_grad, t, &cfg);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Architecture, Volume};

    #[test]
    fn zero_gradient_first_step_is_a_no_op() {
        let mut m = Moments::<f64>::zeros(3);
        let mut p = vec![1.0, -2.0, 0.5];
        m.update(&mut p, &[0.0; 3], 1, &AdamConfig::default());
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(m, Moments::zeros(3));
    }

    #[test]
    fn first_step_magnitude_is_lr() {
        // At t = 1, m_hat = g and v_hat = g^2, so the step is lr * g / (|g| + eps).
        let cfg = AdamConfig::<f64>::default();
        for g in [1e-3, 0.5, -7.0] {
            let mut m = Moments::zeros(1);
            let mut p = vec![0.0];
            m.update(&mut p, &[g], 1, &cfg);
            let expected = -cfg.lr * g / (g.abs() + cfg.epsilon);
            assert!((p[0] - expected).abs() < 1e-15, "g={g}: {} vs {expected}", p[0]);
            assert!((p[0].abs() - cfg.lr).abs() < 1e-6);
        }
    }

    /// Independent scalar Adam recurrence.
    fn scalar_adam(mut w: f64, steps: u64, lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=steps {
            let g = 2.0 * (w - 3.0);
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            w -= lr * mh / (vh.sqrt() + eps);
        }
        w
    }

    #[test]
    fn quadratic_descent() {
        let oracle = scalar_adam(0.0, 100, 0.1);
        assert!((oracle - 3.0).abs() < 0.5, "oracle ended at {oracle}");

        let cfg = AdamConfig::with_lr(0.1);
        let mut m = Moments::zeros(1);
        let mut w = vec![0.0f64];
        for t in 1..=100 {
            let g = [2.0 * (w[0] - 3.0)];
            m.update(&mut w, &g, t, &cfg);
        }
        assert!((w[0] - 3.0).abs() < 0.5);
        assert!((w[0] - oracle).abs() < 1e-12);
    }

    #[test]
    fn zero_gradients_never_move_parameters() {
        let mut net = Network::<f64>::new(Architecture::scaled_down(), 4);
        let mut adam = AdamState::new(&net, AdamConfig::default()).unwrap();
        let input = Volume::filled(8, 6, 4, 0.3);
        let (_, g) = net.backward_sparse(&input, &[(5, 1.0), (40, -1.0)]).unwrap();
        adam.step(&mut net, &g).unwrap();
        adam.step(&mut net, &g).unwrap();

        let before = net.clone();
        let moments_before = adam.clone();
        let zero = Gradients::zeros_for(&net);
        adam.step(&mut net, &zero).unwrap();
        assert_eq!(net, before);
        assert_eq!(adam.step_count(), 3);
        assert_eq!(adam.conv_moments(), moments_before.conv_moments());
    }

    #[test]
    fn rejects_bad_config() {
        let net = Network::<f64>::new(Architecture::scaled_down(), 4);
        assert!(AdamState::new(&net, AdamConfig::with_lr(0.0)).is_err());
    }
}
