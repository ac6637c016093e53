use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::Behavior;
use crate::consensus::{
    assemble_certified_block, BlockAssignment, Miner, MinerId, Registration, Submission, TrainingTask,
};
use crate::crypto::{KeyPair, PublicKey};
use crate::hash::Hash256;
use crate::ledger::{validate_block, Block, ValidationContext};
use crate::training::{assemble_model, evaluate_loss, sgd_train, ParameterShard, TrainingReport};

/// A simulated miner. Behavior and budget are fixed for the whole run.
#[derive(Debug, Clone)]
pub struct MinerAgent {
    pub id: MinerId,
    pub key: KeyPair,
    pub behavior: Behavior,
    pub compute_budget: f64,
}

impl MinerAgent {
    pub fn new(id: MinerId, key: KeyPair, behavior: Behavior, compute_budget: f64) -> Self {
        MinerAgent { id, key, behavior, compute_budget }
    }

    fn responsive(&self) -> bool {
        self.behavior != Behavior::Offline
    }

    fn honest_train(&self, task: &TrainingTask) -> Option<Submission> {
        let out = sgd_train(
            &task.model,
            &task.base_params,
            task.shard,
            &task.partition,
            task.steps,
            task.learning_rate,
            task.batch_size,
            task.seed,
        )
        .ok()?;
        let before = evaluate_loss(&task.model, &task.base_params, &task.partition).unwrap_or(f64::NAN);
        let trained = assemble_model(&task.base_params, std::slice::from_ref(&out.shard)).ok()?;
        let after = evaluate_loss(&task.model, &trained, &task.partition).unwrap_or(f64::NAN);
        Some(Submission {
            report: TrainingReport {
                miner_id: self.id,
                params_trained: out.shard.values.len() as u64,
                shard: out.shard,
                loss_before: before,
                loss_after: after,
                steps_used: out.steps_used,
            },
            work_flops: out.flops,
        })
    }

    fn fabricated(&self, task: &TrainingTask, values: Vec<f64>) -> Submission {
        Submission {
            report: TrainingReport {
                miner_id: self.id,
                shard: ParameterShard { range: task.shard, values },
                params_trained: task.shard.len() as u64,
                loss_before: 1.0,
                loss_after: 0.0,
                steps_used: task.steps,
            },
            work_flops: 0,
        }
    }
}

impl Miner for MinerAgent {
    fn id(&self) -> MinerId {
        self.id
    }

    fn public_key(&self) -> &PublicKey {
        self.key.public_key()
    }

    fn registration(&self) -> Option<Registration> {
        Some(Registration {
            miner_id: self.id,
            public_key: self.key.public_key().clone(),
            compute_budget: self.compute_budget,
        })
    }

    fn train(&self, task: &TrainingTask) -> Option<Submission> {
        match self.behavior {
            Behavior::Honest => self.honest_train(task),
            // Hands back the issued shard and claims a perfect result.
            Behavior::Lazy => Some(self.fabricated(task, task.base_params[task.shard.start..task.shard.end].to_vec())),
            Behavior::Falsifier => {
                let mut rng = ChaCha8Rng::seed_from_u64(task.seed ^ 0xfa15_1f1e);
                let values = (0..task.shard.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                Some(self.fabricated(task, values))
            }
            Behavior::Offline => None,
        }
    }

    fn assemble_block(&self, assignment: &BlockAssignment) -> Option<Block> {
        if !self.responsive() {
            return None;
        }
        assemble_certified_block(assignment).ok()
    }

    fn validate_block(&self, height: u64, prev_hash: &Hash256, block: &Block, ctx: &ValidationContext) -> Option<bool> {
        self.responsive().then(|| validate_block(height, prev_hash, block, ctx).is_ok())
    }
}
