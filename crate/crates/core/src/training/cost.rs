//! Multiply-add counts for the training and evaluation paths.
//!
//! One unit is one floating-point multiply-accumulate (or a comparable
//! scalar op such as a bias add, a `tanh`, or a residual square).
//!
//! * forward pass, linear: `d + 1`; two-layer: `h*d + 3h + 1`
//! * loss per example: forward + 1
//! * gradient per example: forward + 1 (residual) + `2h` (two-layer hidden
//!   deltas) + one per active coordinate; plus one per active coordinate
//!   for the final `2/n` scaling
//! * update: one per active coordinate

use super::{Architecture, ModelSpec};

pub fn forward_flops(spec: &ModelSpec) -> u64 {
    let d = spec.input_dim as u64;
    match spec.architecture {
        Architecture::Linear => d + 1,
        Architecture::TwoLayer { hidden } => {
            let h = hidden as u64;
            h * d + 3 * h + 1
        }
    }
}

fn backprop_overhead(spec: &ModelSpec) -> u64 {
    match spec.architecture {
        Architecture::Linear => 0,
        Architecture::TwoLayer { hidden } => 2 * hidden as u64,
    }
}

/// Loss over `n` examples.
pub fn eval_flops(spec: &ModelSpec, n: usize) -> u64 {
    n as u64 * (forward_flops(spec) + 1)
}

/// One gradient over a batch of `batch` rows restricted to `active` coordinates.
pub fn gradient_flops(spec: &ModelSpec, batch: usize, active: usize) -> u64 {
    let a = active as u64;
    batch as u64 * (forward_flops(spec) + 1 + backprop_overhead(spec) + a) + a
}

pub fn update_flops(active: usize) -> u64 {
    active as u64
}

pub fn sgd_flops(spec: &ModelSpec, batch: usize, active: usize, steps: u64) -> u64 {
    steps * (gradient_flops(spec, batch, active) + update_flops(active))
}
