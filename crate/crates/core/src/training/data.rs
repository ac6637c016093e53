use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::TrainingError;

/// Row-major feature matrix with one regression target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, features: Vec<f64>, targets: Vec<f64>) -> Result<Self, TrainingError> {
        if dim == 0 {
            return Err(TrainingError::MalformedDataset("zero input dimension".into()));
        }
        if features.len() != targets.len() * dim {
            return Err(TrainingError::MalformedDataset(format!(
                "{} feature values for {} rows of width {dim}",
                features.len(),
                targets.len()
            )));
        }
        if !features.iter().chain(&targets).all(|v| v.is_finite()) {
            return Err(TrainingError::MalformedDataset("non-finite entry".into()));
        }
        Ok(Dataset { dim, features, targets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.features.chunks_exact(self.dim).zip(self.targets.iter().copied())
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Dataset { dim: self.dim, features, targets }
    }

    /// Contiguous rows `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            dim: self.dim,
            features: self.features[start * self.dim..end * self.dim].to_vec(),
            targets: self.targets[start..end].to_vec(),
        }
    }

    /// Canonical bytes: dim, row count, then features and targets as f64.
    pub fn digest_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * (self.features.len() + self.targets.len()));
        out.extend_from_slice(&(self.dim as u64).to_be_bytes());
        out.extend_from_slice(&(self.len() as u64).to_be_bytes());
        for v in self.features.iter().chain(&self.targets) {
            out.extend_from_slice(&v.to_bits().to_be_bytes());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub train: Dataset,
    pub validation: Dataset,
    /// Hidden linear truth in `Linear` parameter layout: `[w*, b*]`.
    pub ground_truth: Vec<f64>,
}

/// Seeded linear regression task: `y = w* . x + b* + noise`, standard
/// normal features and truth, shuffled 80/20 into train and validation.
pub fn make_synthetic_dataset(
    seed: u64,
    n_examples: usize,
    dim: usize,
    noise_std: f64,
) -> Result<SyntheticTask, TrainingError> {
    if n_examples < 2 {
        return Err(TrainingError::InvalidArgument("need at least 2 examples".into()));
    }
    if dim == 0 {
        return Err(TrainingError::InvalidArgument("input dimension must be positive".into()));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(TrainingError::InvalidArgument("noise_std must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let ground_truth: Vec<f64> = (0..=dim).map(|_| normal()).collect();
    let (weights, bias) = ground_truth.split_at(dim);
    let mut features = Vec::with_capacity(n_examples * dim);
    let mut targets = Vec::with_capacity(n_examples);
    for _ in 0..n_examples {
        let x: Vec<f64> = (0..dim).map(|_| normal()).collect();
        let clean: f64 = weights.iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>() + bias[0];
        let noise = normal();
        targets.push(clean + noise_std * noise);
        features.extend(x);
    }
    let all = Dataset::new(dim, features, targets)?;

    let mut order: Vec<usize> = (0..n_examples).collect();
    order.shuffle(&mut rng);
    let n_train = (n_examples * 4 / 5).clamp(1, n_examples - 1);
    let train = all.select(&order[..n_train]);
    let validation = all.select(&order[n_train..]);
    Ok(SyntheticTask { train, validation, ground_truth })
}
