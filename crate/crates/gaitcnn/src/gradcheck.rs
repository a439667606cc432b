//! Central finite-difference verification of every analytic backward pass.
//!
//! Each check builds a scalar loss (a fixed random linear functional of the
//! layer output, or the cross-entropy itself), computes analytic gradients
//! through the backward pass, and compares against (f(x+e) - f(x-e)) / 2e
//! component by component.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::layers::{
    softmax_xent_forward, ConvLayer, DenseLayer, ModelConfig, Network,
};
use crate::tensor::{maxpool2d, Tensor};

pub const FD_EPSILON: f64 = 1e-6;
pub const LAYER_TOLERANCE: f64 = 1e-4;
pub const NETWORK_TOLERANCE: f64 = 1e-3;

/// Relative error with a floor so near-zero pairs compare cleanly.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs());
    if denom < 1e-10 {
        0.0
    } else {
        (a - b).abs() / denom
    }
}

fn central_diff(mut f: impl FnMut(&[f64]) -> f64, x: &mut [f64]) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_EPSILON;
        let plus = f(x);
        x[i] = orig - FD_EPSILON;
        let minus = f(x);
        x[i] = orig;
        grad[i] = (plus - minus) / (2.0 * FD_EPSILON);
    }
    grad
}

fn max_rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(fd)
        .map(|(&a, &b)| relative_error(a, b))
        .fold(0.0, f64::max)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Conv layer: loss = sum(L . conv(x)), gradients w.r.t. x, weights, bias.
pub fn check_conv(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w, c_in, c_out) = (6, 5, 2, 3);
    let layer = ConvLayer {
        weights: Tensor::new(vec![3, 3, c_in, c_out], random_vec(&mut rng, 9 * c_in * c_out))?,
        bias: Tensor::new(vec![c_out], random_vec(&mut rng, c_out))?,
        padding: 1,
        stride: 1,
    };
    let x = Tensor::new(vec![h, w, c_in], random_vec(&mut rng, h * w * c_in))?;
    let functional = random_vec(&mut rng, h * w * c_out);

    let out = layer.forward(&x)?;
    let grad_out = Tensor::new(out.shape().to_vec(), functional.clone())?;
    let (gx, gw, gb) = layer.backward(&grad_out, &x)?;

    let loss_for = |layer: &ConvLayer, x: &Tensor| -> f64 {
        layer
            .forward(x)
            .unwrap()
            .iter()
            .zip(&functional)
            .map(|(o, l)| o * l)
            .sum()
    };

    let mut worst: f64 = 0.0;
    let mut xm = x.clone();
    let fd = central_diff(
        |data| {
            let probe = Tensor::new(vec![h, w, c_in], data.to_vec()).unwrap();
            loss_for(&layer, &probe)
        },
        xm.data_mut(),
    );
    worst = worst.max(max_rel_err(gx.data(), &fd));

    let lw = layer.clone();
    let shape = lw.weights.shape().to_vec();
    let fd = central_diff(
        |data| {
            let mut probe = lw.clone();
            probe.weights = Tensor::new(shape.clone(), data.to_vec()).unwrap();
            loss_for(&probe, &x)
        },
        lw.weights.clone().data_mut(),
    );
    worst = worst.max(max_rel_err(gw.data(), &fd));

    let fd = central_diff(
        |data| {
            let mut probe = layer.clone();
            probe.bias = Tensor::new(vec![c_out], data.to_vec()).unwrap();
            loss_for(&probe, &x)
        },
        layer.bias.clone().data_mut(),
    );
    worst = worst.max(max_rel_err(gb.data(), &fd));
    Ok(worst)
}

/// Dense layer: loss = sum(L . (xW + b)).
pub fn check_dense(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_in, n_out) = (11, 7);
    let layer = DenseLayer {
        weights: Tensor::new(vec![n_in, n_out], random_vec(&mut rng, n_in * n_out))?,
        bias: Tensor::new(vec![n_out], random_vec(&mut rng, n_out))?,
    };
    let x = random_vec(&mut rng, n_in);
    let functional = random_vec(&mut rng, n_out);

    let grad_out: Vec<f64> = functional.clone();
    let (gx, gw, gb) = layer.backward(&grad_out, &x)?;

    let loss_for = |layer: &DenseLayer, x: &[f64]| -> f64 {
        layer
            .forward(x)
            .unwrap()
            .iter()
            .zip(&functional)
            .map(|(o, l)| o * l)
            .sum()
    };

    let mut worst: f64 = 0.0;
    let mut xm = x.clone();
    let fd = central_diff(|data| loss_for(&layer, data), &mut xm);
    worst = worst.max(max_rel_err(&gx, &fd));

    let mut wdata = layer.weights.data().to_vec();
    let fd = central_diff(
        |data| {
            let mut probe = layer.clone();
            probe.weights = Tensor::new(vec![n_in, n_out], data.to_vec()).unwrap();
            loss_for(&probe, &x)
        },
        &mut wdata,
    );
    worst = worst.max(max_rel_err(gw.data(), &fd));

    let mut bdata = layer.bias.data().to_vec();
    let fd = central_diff(
        |data| {
            let mut probe = layer.clone();
            probe.bias = Tensor::new(vec![n_out], data.to_vec()).unwrap();
            loss_for(&probe, &x)
        },
        &mut bdata,
    );
    worst = worst.max(max_rel_err(gb.data(), &fd));
    Ok(worst)
}

/// ReLU: inputs kept away from the kink at 0.
pub fn check_relu(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 24;
    let data: Vec<f64> = (0..n)
        .map(|_| {
            let v: f64 = rng.gen_range(0.1..1.0);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    let x = Tensor::new(vec![n], data)?;
    let functional = random_vec(&mut rng, n);
    let grad_out = Tensor::new(vec![n], functional.clone())?;
    let analytic = crate::layers::relu_backward(&grad_out, &x)?;

    let mut xm = x.clone();
    let fd = central_diff(
        |data| {
            data.iter()
                .zip(&functional)
                .map(|(&v, l)| v.max(0.0) * l)
                .sum()
        },
        xm.data_mut(),
    );
    Ok(max_rel_err(analytic.data(), &fd))
}

/// Max pool: window values spaced apart so the argmax is FD-stable.
pub fn check_maxpool(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w, c) = (6, 4, 2);
    let mut values: Vec<f64> = (0..h * w * c).map(|i| i as f64 * 0.05).collect();
    {
        use rand::seq::SliceRandom;
        values.shuffle(&mut rng);
    }
    let x = Tensor::new(vec![h, w, c], values)?;
    let (y, argmax) = maxpool2d(&x, 2, 2)?;
    let functional = random_vec(&mut rng, y.len());
    let grad_out = Tensor::new(y.shape().to_vec(), functional.clone())?;
    let analytic = crate::layers::maxpool_backward(&grad_out, &argmax, x.shape())?;

    let mut xm = x.clone();
    let fd = central_diff(
        |data| {
            let probe = Tensor::new(vec![h, w, c], data.to_vec()).unwrap();
            let (py, _) = maxpool2d(&probe, 2, 2).unwrap();
            py.iter().zip(&functional).map(|(o, l)| o * l).sum()
        },
        xm.data_mut(),
    );
    Ok(max_rel_err(analytic.data(), &fd))
}

/// Softmax + cross-entropy: FD of the loss w.r.t. the logits.
pub fn check_softmax(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut logits = random_vec(&mut rng, 4);
    let class = rng.gen_range(0..4usize);
    let mut one_hot = [0.0; 4];
    one_hot[class] = 1.0;

    let (probs, _) = softmax_xent_forward(&logits, &one_hot)?;
    let analytic = crate::layers::softmax_xent_backward(&probs, &one_hot);

    let fd = central_diff(
        |data| softmax_xent_forward(data, &one_hot).unwrap().1,
        &mut logits,
    );
    Ok(max_rel_err(&analytic, &fd))
}

/// Full-network FD check on a small input, sampling a handful of
/// components per parameter tensor.
pub fn check_network(scale_divisor: usize, seed: u64) -> Result<f64> {
    let config = ModelConfig {
        input_shape: (20, 18, 1),
        scale_divisor,
        ..Default::default()
    };
    let mut net = Network::init(config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37));
    let x = Tensor::new(vec![20, 18, 1], random_vec(&mut rng, 20 * 18))?;
    let one_hot = [0.0, 1.0, 0.0, 0.0];

    net.forward(&x)?;
    let grads = net.backward(&one_hot)?;

    let mut worst: f64 = 0.0;
    let n_tensors = net.params().len();
    for ti in 0..n_tensors {
        let len = net.params()[ti].len();
        let n_probe = len.min(4);
        for p in 0..n_probe {
            let j = if n_probe == len { p } else { rng.gen_range(0..len) };
            let orig = net.params()[ti].data()[j];
            net.params_mut()[ti].data_mut()[j] = orig + FD_EPSILON;
            net.forward(&x)?;
            let plus = net.loss(&one_hot)?;
            net.params_mut()[ti].data_mut()[j] = orig - FD_EPSILON;
            net.forward(&x)?;
            let minus = net.loss(&one_hot)?;
            net.params_mut()[ti].data_mut()[j] = orig;
            let fd = (plus - minus) / (2.0 * FD_EPSILON);
            worst = worst.max(relative_error(grads.tensors[ti].data()[j], fd));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub layer: &'static str,
    pub trials: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Run every per-layer check over `trials` seeds plus one full-network
/// check at the given scale divisor.
pub fn run_all(trials: usize, scale_divisor: usize) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = Vec::new();
    let checks: [(&'static str, fn(u64) -> Result<f64>); 5] = [
        ("conv", check_conv),
        ("dense", check_dense),
        ("relu", check_relu),
        ("maxpool", check_maxpool),
        ("softmax_xent", check_softmax),
    ];
    for (name, check) in checks {
        let mut worst: f64 = 0.0;
        for seed in 0..trials as u64 {
            worst = worst.max(check(seed)?);
        }
        outcomes.push(CheckOutcome {
            layer: name,
            trials,
            max_rel_err: worst,
            tolerance: LAYER_TOLERANCE,
            pass: worst <= LAYER_TOLERANCE,
        });
    }
    let worst = check_network(scale_divisor, 0)?;
    outcomes.push(CheckOutcome {
        layer: "network",
        trials: 1,
        max_rel_err: worst,
        tolerance: NETWORK_TOLERANCE,
        pass: worst <= NETWORK_TOLERANCE,
    });
    Ok(outcomes)
}
