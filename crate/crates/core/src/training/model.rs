use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Architecture, Dataset, ModelSpec, ShardRange, TrainingError};

const INIT_STD: f64 = 0.1;

/// Seeded `N(0, 0.1^2)` initial parameters.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    (0..spec.parameter_count()).map(|_| normal.sample(&mut rng)).collect()
}

fn check_params(spec: &ModelSpec, params: &[f64]) -> Result<(), TrainingError> {
    let expected = spec.parameter_count();
    if params.len() != expected {
        return Err(TrainingError::ParameterCount { expected, actual: params.len() });
    }
    Ok(())
}

/// Hidden activations for the two-layer model.
fn hidden_activations(d: usize, h: usize, params: &[f64], x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let (w1, rest) = params.split_at(d * h);
    let b1 = &rest[..h];
    for j in 0..h {
        let row = &w1[j * d..(j + 1) * d];
        let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b1[j];
        out.push(z.tanh());
    }
}

fn predict_with(spec: &ModelSpec, params: &[f64], x: &[f64], hidden: &mut Vec<f64>) -> f64 {
    let d = spec.input_dim;
    match spec.architecture {
        Architecture::Linear => params[..d].iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + params[d],
        Architecture::TwoLayer { hidden: h } => {
            hidden_activations(d, h, params, x, hidden);
            let w2 = &params[d * h + h..d * h + 2 * h];
            w2.iter().zip(hidden.iter()).map(|(w, a)| w * a).sum::<f64>() + params[d * h + 2 * h]
        }
    }
}

pub fn predict(spec: &ModelSpec, params: &[f64], x: &[f64]) -> f64 {
    predict_with(spec, params, x, &mut Vec::new())
}

/// Mean squared error over `data`.
pub fn evaluate_loss(spec: &ModelSpec, params: &[f64], data: &Dataset) -> Result<f64, TrainingError> {
    check_params(spec, params)?;
    if data.is_empty() {
        return Err(TrainingError::MalformedDataset("empty dataset".into()));
    }
    let mut hidden = Vec::new();
    let sum: f64 = data
        .rows()
        .map(|(x, y)| {
            let r = predict_with(spec, params, x, &mut hidden) - y;
            r * r
        })
        .sum();
    let loss = sum / data.len() as f64;
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(TrainingError::NonFiniteLoss)
    }
}

/// Partial derivatives of the batch MSE with respect to the coordinates in
/// `active`; everything outside it is held constant.
pub fn gradient(
    spec: &ModelSpec,
    params: &[f64],
    batch: &Dataset,
    active: ShardRange,
) -> Result<Vec<f64>, TrainingError> {
    check_params(spec, params)?;
    active.check_within(params.len())?;
    let mut grad = vec![0.0; active.len()];
    if batch.is_empty() {
        return Ok(grad);
    }
    let d = spec.input_dim;
    let mut hidden = Vec::new();
    let mut delta = Vec::new();
    for (x, y) in batch.rows() {
        let residual = predict_with(spec, params, x, &mut hidden) - y;
        match spec.architecture {
            Architecture::Linear => {
                for (g, idx) in grad.iter_mut().zip(active.start..active.end) {
                    let dpred = if idx < d { x[idx] } else { 1.0 };
                    *g += residual * dpred;
                }
            }
            Architecture::TwoLayer { hidden: h } => {
                let w2 = &params[d * h + h..d * h + 2 * h];
                delta.clear();
                delta.extend(w2.iter().zip(&hidden).map(|(w, a)| w * (1.0 - a * a)));
                for (g, idx) in grad.iter_mut().zip(active.start..active.end) {
                    let dpred = if idx < d * h {
                        delta[idx / d] * x[idx % d]
                    } else if idx < d * h + h {
                        delta[idx - d * h]
                    } else if idx < d * h + 2 * h {
                        hidden[idx - d * h - h]
                    } else {
                        1.0
                    };
                    *g += residual * dpred;
                }
            }
        }
    }
    let scale = 2.0 / batch.len() as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok(grad)
}
