//! Adam parameter updates and early-stopping control.

use crate::error::{Error, Result};
use crate::layers::{Network, NetworkGrads};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter first and second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub t: u64,
}

impl AdamState {
    pub fn new(net: &Network, hyper: AdamHyper) -> Self {
        let zeros: Vec<Tensor> = net
            .params()
            .iter()
            .map(|p| Tensor::zeros(p.shape().to_vec()))
            .collect();
        AdamState {
            hyper,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One Adam step over every parameter tensor of the network.
///
/// m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2; with bias correction
/// m_hat = m/(1-b1^t), v_hat = v/(1-b2^t);
/// p <- p - lr * m_hat / (sqrt(v_hat) + eps).
pub fn adam_step(net: &mut Network, grads: &NetworkGrads, state: &mut AdamState) -> Result<()> {
    let names = net.param_names();
    let params = net.params_mut();
    if params.len() != grads.tensors.len() {
        return Err(Error::Shape(format!(
            "adam: {} parameter tensors, {} gradient tensors",
            params.len(),
            grads.tensors.len()
        )));
    }
    for ((i, p), g) in params.iter().enumerate().zip(&grads.tensors) {
        if p.shape() != g.shape() {
            return Err(Error::Shape(format!(
                "adam: gradient shape {:?} for parameter {} of shape {:?}",
                g.shape(),
                names[i],
                p.shape()
            )));
        }
        if !g.all_finite() {
            return Err(Error::Numeric(format!(
                "non-finite gradient in parameter {}",
                names[i]
            )));
        }
    }
    state.t += 1;
    let h = state.hyper;
    let bc1 = 1.0 - h.beta1.powi(state.t as i32);
    let bc2 = 1.0 - h.beta2.powi(state.t as i32);
    for (i, p) in params.into_iter().enumerate() {
        let g = grads.tensors[i].data();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        for (j, pv) in p.data_mut().iter_mut().enumerate() {
            let gj = g[j];
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * gj;
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * gj * gj;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            *pv -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
        }
    }
    Ok(())
}

/// When to stop training: validation-loss plateau, target accuracy or loss
/// attained, or the epoch cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopPolicy {
    pub patience: usize,
    pub min_delta: f64,
    pub target_accuracy: Option<f64>,
    pub target_loss: Option<f64>,
    pub max_epochs: usize,
}

impl Default for EarlyStopPolicy {
    fn default() -> Self {
        EarlyStopPolicy {
            patience: 3,
            min_delta: 1e-4,
            target_accuracy: Some(0.97),
            target_loss: None,
            max_epochs: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Plateau,
    TargetAccuracy,
    TargetLoss,
    MaxEpochs,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::Plateau => "plateau",
            StopReason::TargetAccuracy => "target_accuracy",
            StopReason::TargetLoss => "target_loss",
            StopReason::MaxEpochs => "max_epochs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop(StopReason),
}

/// Check a (val_loss, val_accuracy) history against the policy. Triggers are
/// disjunctive; the first that fires names the reason.
pub fn early_stop_check(policy: &EarlyStopPolicy, history: &[(f64, f64)]) -> Decision {
    if history.is_empty() {
        return Decision::Continue;
    }
    let (last_loss, last_acc) = *history.last().unwrap();
    if let Some(target) = policy.target_accuracy {
        if last_acc >= target {
            return Decision::Stop(StopReason::TargetAccuracy);
        }
    }
    if let Some(target) = policy.target_loss {
        if last_loss < target {
            return Decision::Stop(StopReason::TargetLoss);
        }
    }
    if history.len() > policy.patience {
        // plateau: the last `patience` epochs each failed to improve on the
        // best loss seen before them by more than min_delta
        let mut best = f64::INFINITY;
        for &(loss, _) in &history[..history.len() - policy.patience] {
            best = best.min(loss);
        }
        let plateau = history[history.len() - policy.patience..]
            .iter()
            .all(|&(loss, _)| {
                let improved = loss < best - policy.min_delta;
                best = best.min(loss);
                !improved
            });
        if plateau {
            return Decision::Stop(StopReason::Plateau);
        }
    }
    if history.len() >= policy.max_epochs {
        return Decision::Stop(StopReason::MaxEpochs);
    }
    Decision::Continue
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::ModelConfig;

    fn tiny_net(seed: u64) -> Network {
        Network::init(ModelConfig::with_scale_divisor(128), seed).unwrap()
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut net = tiny_net(1);
        let before: Vec<Vec<f64>> = net.params().iter().map(|p| p.data().to_vec()).collect();
        let grads = NetworkGrads::zeros_like(&net);
        let mut state = AdamState::new(&net, AdamHyper::default());
        for _ in 0..3 {
            adam_step(&mut net, &grads, &mut state).unwrap();
        }
        let after: Vec<Vec<f64>> = net.params().iter().map(|p| p.data().to_vec()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn first_step_magnitude_is_lr() {
        // with bias correction, m_hat = g and v_hat = g^2 at t = 1, so the
        // update is lr * g / (|g| + eps') ~ lr in magnitude, opposite in sign
        let mut net = tiny_net(2);
        let mut grads = NetworkGrads::zeros_like(&net);
        grads.tensors[0].data_mut()[0] = 0.5;
        let before = net.params()[0].data()[0];
        let hyper = AdamHyper::default();
        let mut state = AdamState::new(&net, hyper);
        adam_step(&mut net, &grads, &mut state).unwrap();
        let after = net.params()[0].data()[0];
        let delta = after - before;
        assert!(delta < 0.0);
        assert!((delta.abs() - hyper.lr).abs() < 1e-6);
    }

    #[test]
    fn two_step_scalar_trace() {
        // hand-rolled two-iteration trace of the update equations on a scalar
        let g = 0.3f64;
        let h = AdamHyper::default();
        let mut m = 0.0;
        let mut v = 0.0;
        let mut p_expected = 1.0f64;
        for t in 1..=2u32 {
            m = h.beta1 * m + (1.0 - h.beta1) * g;
            v = h.beta2 * v + (1.0 - h.beta2) * g * g;
            let m_hat = m / (1.0 - h.beta1.powi(t as i32));
            let v_hat = v / (1.0 - h.beta2.powi(t as i32));
            p_expected -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
        }

        let mut net = tiny_net(3);
        net.params_mut()[0].data_mut()[0] = 1.0;
        let mut grads = NetworkGrads::zeros_like(&net);
        grads.tensors[0].data_mut()[0] = g;
        let mut state = AdamState::new(&net, h);
        adam_step(&mut net, &grads, &mut state).unwrap();
        adam_step(&mut net, &grads, &mut state).unwrap();
        let p_actual = net.params()[0].data()[0];
        assert!((p_actual - p_expected).abs() < 1e-15, "{p_actual} vs {p_expected}");
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut net = tiny_net(4);
        let mut grads = NetworkGrads::zeros_like(&net);
        grads.tensors[2].data_mut()[0] = f64::NAN;
        let mut state = AdamState::new(&net, AdamHyper::default());
        let err = adam_step(&mut net, &grads, &mut state).unwrap_err();
        assert!(err.to_string().contains("conv2.weights"), "{err}");
    }

    #[test]
    fn moments_stay_finite_and_nonnegative() {
        let mut net = tiny_net(5);
        let mut grads = NetworkGrads::zeros_like(&net);
        for t in &mut grads.tensors {
            for (i, v) in t.data_mut().iter_mut().enumerate() {
                *v = ((i as f64) * 0.37).sin();
            }
        }
        let mut state = AdamState::new(&net, AdamHyper::default());
        for _ in 0..5 {
            adam_step(&mut net, &grads, &mut state).unwrap();
        }
        for t in net.params() {
            assert!(t.all_finite());
        }
        for t in &state.v {
            assert!(t.iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
        for t in &state.m {
            assert!(t.all_finite());
        }
    }

    #[test]
    fn early_stop_plateau() {
        let policy = EarlyStopPolicy {
            patience: 2,
            min_delta: 1e-4,
            target_accuracy: None,
            target_loss: None,
            max_epochs: 100,
        };
        let history = [(1.0, 0.5), (0.99995, 0.5), (0.9999, 0.5)];
        assert_eq!(
            early_stop_check(&policy, &history),
            Decision::Stop(StopReason::Plateau)
        );
        // monotone: any non-improving extension still stops
        let extended = [(1.0, 0.5), (0.99995, 0.5), (0.9999, 0.5), (0.9999, 0.5)];
        assert_eq!(
            early_stop_check(&policy, &extended),
            Decision::Stop(StopReason::Plateau)
        );
    }

    #[test]
    fn early_stop_target_accuracy() {
        let policy = EarlyStopPolicy::default();
        assert_eq!(
            early_stop_check(&policy, &[(0.5, 0.98)]),
            Decision::Stop(StopReason::TargetAccuracy)
        );
    }

    #[test]
    fn early_stop_continues_while_improving() {
        let policy = EarlyStopPolicy {
            target_accuracy: None,
            ..Default::default()
        };
        let history = [(1.0, 0.4), (0.8, 0.5), (0.6, 0.6)];
        assert_eq!(early_stop_check(&policy, &history), Decision::Continue);
        assert_eq!(early_stop_check(&policy, &[]), Decision::Continue);
    }

    #[test]
    fn early_stop_max_epochs() {
        let policy = EarlyStopPolicy {
            patience: 100,
            target_accuracy: None,
            ..Default::default()
        };
        let history: Vec<(f64, f64)> = (0..12).map(|i| (1.0 / (i + 1) as f64, 0.5)).collect();
        assert_eq!(
            early_stop_check(&policy, &history),
            Decision::Stop(StopReason::MaxEpochs)
        );
    }
}
