use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cost::sgd_flops;
use super::{gradient, Dataset, ModelSpec, ParameterShard, ShardRange, TrainingError};

/// Splits `total` items into `k` contiguous ranges whose sizes differ by at
/// most one; the first `total % k` ranges get the extra item.
pub fn partition_even(total: usize, k: usize) -> Vec<ShardRange> {
    assert!(k >= 1 && k <= total, "cannot split {total} items into {k} parts");
    let base = total / k;
    let extra = total % k;
    let mut start = 0;
    (0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let range = ShardRange::new(start, start + len);
            start += len;
            range
        })
        .collect()
}

/// Assigns each of `k` miners a contiguous shard of the parameter vector.
pub fn partition_model(spec: &ModelSpec, k: usize) -> Result<Vec<ShardRange>, TrainingError> {
    let params = spec.parameter_count();
    if k == 0 {
        return Err(TrainingError::InvalidArgument("at least one miner required".into()));
    }
    if k > params {
        return Err(TrainingError::TooManyMiners { miners: k, params });
    }
    Ok(partition_even(params, k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdOutcome {
    pub shard: ParameterShard,
    pub steps_used: u64,
    /// Multiply-adds spent, per the crate's cost model.
    pub flops: u64,
}

/// Minibatch SGD on the coordinates in `shard_range` only.
///
/// When `batch_size` covers the partition every step is full-batch and no
/// sampling happens; otherwise each step draws `batch_size` distinct rows
/// from a ChaCha8 stream seeded with `seed`.
#[allow(clippy::too_many_arguments)]
pub fn sgd_train(
    spec: &ModelSpec,
    full_params: &[f64],
    shard_range: ShardRange,
    train: &Dataset,
    steps: u64,
    learning_rate: f64,
    batch_size: usize,
    seed: u64,
) -> Result<SgdOutcome, TrainingError> {
    shard_range.check_within(full_params.len())?;
    if full_params.len() != spec.parameter_count() {
        return Err(TrainingError::ParameterCount { expected: spec.parameter_count(), actual: full_params.len() });
    }
    if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
        return Err(TrainingError::InvalidArgument("learning rate must be finite and non-negative".into()));
    }
    if batch_size == 0 {
        return Err(TrainingError::InvalidArgument("batch size must be at least 1".into()));
    }
    if train.is_empty() && steps > 0 {
        return Err(TrainingError::MalformedDataset("empty training partition".into()));
    }

    let mut params = full_params.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full_batch = batch_size >= train.len();
    let effective_batch = batch_size.min(train.len());
    let mut steps_used = 0;
    for _ in 0..steps {
        let grad = if full_batch {
            gradient(spec, &params, train, shard_range)?
        } else {
            let rows = index::sample(&mut rng, train.len(), batch_size).into_vec();
            gradient(spec, &params, &train.select(&rows), shard_range)?
        };
        steps_used += 1;
        for (p, g) in params[shard_range.start..shard_range.end].iter_mut().zip(&grad) {
            *p -= learning_rate * g;
        }
        if !params[shard_range.start..shard_range.end].iter().all(|v| v.is_finite()) {
            return Err(TrainingError::DivergenceDetected { steps_used });
        }
    }
    Ok(SgdOutcome {
        shard: ParameterShard::extract(&params, shard_range),
        steps_used,
        flops: sgd_flops(spec, effective_batch, shard_range.len(), steps_used),
    })
}

/// Writes each shard's values into a copy of `base`.
pub fn assemble_model(base: &[f64], shards: &[ParameterShard]) -> Result<Vec<f64>, TrainingError> {
    let mut ordered: Vec<&ParameterShard> = shards.iter().collect();
    ordered.sort_by_key(|s| s.range);
    for pair in ordered.windows(2) {
        if pair[1].range.start < pair[0].range.end {
            return Err(TrainingError::OverlappingShards { index: pair[1].range.start });
        }
    }
    let mut out = base.to_vec();
    for shard in ordered {
        shard.range.check_within(base.len())?;
        if shard.values.len() != shard.range.len() {
            return Err(TrainingError::ParameterCount { expected: shard.range.len(), actual: shard.values.len() });
        }
        out[shard.range.start..shard.range.end].copy_from_slice(&shard.values);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::{evaluate_loss, init_params, make_synthetic_dataset};

    #[test]
    fn partition_examples() {
        let spec = ModelSpec::linear(9);
        assert_eq!(partition_model(&spec, 1).unwrap(), vec![ShardRange::new(0, 10)]);
        let sizes: Vec<usize> = partition_model(&spec, 3).unwrap().iter().map(ShardRange::len).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        assert_eq!(partition_model(&spec, 11), Err(TrainingError::TooManyMiners { miners: 11, params: 10 }));
    }

    #[test]
    fn zero_steps_or_zero_rate_is_noop() {
        let task = make_synthetic_dataset(1, 40, 3, 0.1).unwrap();
        let spec = ModelSpec::linear(3);
        let params = init_params(&spec, 2);
        let range = ShardRange::new(1, 3);
        for (steps, lr) in [(0, 0.1), (25, 0.0)] {
            let out = sgd_train(&spec, &params, range, &task.train, steps, lr, 8, 4).unwrap();
            assert_eq!(out.shard.values, params[1..3].to_vec());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let task = make_synthetic_dataset(1, 60, 3, 0.1).unwrap();
        let spec = ModelSpec::two_layer(3, 4);
        let params = init_params(&spec, 2);
        let range = ShardRange::new(0, spec.parameter_count());
        let a = sgd_train(&spec, &params, range, &task.train, 30, 0.05, 8, 11).unwrap();
        let b = sgd_train(&spec, &params, range, &task.train, 30, 0.05, 8, 11).unwrap();
        assert_eq!(a, b);
        let c = sgd_train(&spec, &params, range, &task.train, 30, 0.05, 8, 12).unwrap();
        assert_ne!(a.shard.values, c.shard.values);
    }

    #[test]
    fn divergence_is_reported() {
        let task = make_synthetic_dataset(1, 40, 3, 0.1).unwrap();
        let spec = ModelSpec::linear(3);
        let err = sgd_train(&spec, &[0.0; 4], ShardRange::new(0, 4), &task.train, 5000, 1e6, 32, 0).unwrap_err();
        assert!(matches!(err, TrainingError::DivergenceDetected { steps_used } if steps_used < 5000));
    }

    #[test]
    fn noiseless_linear_converges() {
        let task = make_synthetic_dataset(21, 100, 4, 0.0).unwrap();
        let spec = ModelSpec::linear(4);
        let range = ShardRange::new(0, 5);
        let out = sgd_train(&spec, &[0.0; 5], range, &task.train, 500, 0.01, task.train.len(), 0).unwrap();
        let loss = evaluate_loss(&spec, &out.shard.values, &task.validation).unwrap();
        assert!(loss < 1e-3, "validation loss {loss}");
    }

    #[test]
    fn assemble_cases() {
        let base = vec![1.0; 6];
        assert_eq!(assemble_model(&base, &[]).unwrap(), base);
        let all = [
            ParameterShard { range: ShardRange::new(0, 4), values: vec![2.0; 4] },
            ParameterShard { range: ShardRange::new(4, 6), values: vec![3.0; 2] },
        ];
        let other_base = vec![-7.0; 6];
        assert_eq!(assemble_model(&base, &all).unwrap(), assemble_model(&other_base, &all).unwrap());
        let overlapping = [
            ParameterShard { range: ShardRange::new(0, 3), values: vec![0.0; 3] },
            ParameterShard { range: ShardRange::new(2, 5), values: vec![0.0; 3] },
        ];
        assert_eq!(assemble_model(&base, &overlapping), Err(TrainingError::OverlappingShards { index: 2 }));
    }
}
