use proptest::prelude::*;
use trainchain_core::certificate::{issue_certificate, Certificate, CERTIFICATE_LEN};
use trainchain_core::consensus::{score_contribution, weighted_lottery, ContributionMetrics, WEIGHT_SUM_TOLERANCE};
use trainchain_core::crypto::generate_keypair;
use trainchain_core::ledger::{merkle_root, BlockHeader, HEADER_LEN};
use trainchain_core::training::{partition_model, ModelSpec, ParameterShard, ShardRange, TrainingReport};
use trainchain_core::{ContributionMeasures, Hash256, ProofKind};

fn hash() -> impl Strategy<Value = Hash256> {
    any::<[u8; 32]>().prop_map(Hash256)
}

fn header() -> impl Strategy<Value = BlockHeader> {
    (any::<u32>(), hash(), hash(), any::<u64>(), any::<bool>(), any::<u64>(), hash()).prop_map(
        |(version, prev_hash, merkle_root, timestamp, pow, nonce, certificate_hash)| BlockHeader {
            version,
            prev_hash,
            merkle_root,
            timestamp,
            proof_kind: if pow { ProofKind::PowNonce } else { ProofKind::TrainingCertificate },
            nonce,
            certificate_hash,
        },
    )
}

fn metrics() -> impl Strategy<Value = Vec<ContributionMetrics>> {
    prop::collection::vec((0u64..10_000, 0.0f64..5.0), 1..12).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (p, d))| ContributionMetrics { miner_id: i as u32, param_volume: p as f64, loss_delta: d })
            .collect()
    })
}

proptest! {
    #[test]
    fn header_roundtrips(h in header()) {
        let bytes = h.to_bytes();
        prop_assert_eq!(bytes.len(), HEADER_LEN);
        prop_assert_eq!(BlockHeader::from_bytes(&bytes).unwrap(), h);
    }

    #[test]
    fn merkle_root_sees_every_swap(
        txs in prop::collection::btree_set(prop::collection::vec(any::<u8>(), 1..40), 2..10),
        pick in any::<(prop::sample::Index, prop::sample::Index)>(),
    ) {
        let txs: Vec<Vec<u8>> = txs.into_iter().collect();
        let (i, j) = (pick.0.index(txs.len()), pick.1.index(txs.len()));
        prop_assume!(i != j);
        let mut swapped = txs.clone();
        swapped.swap(i, j);
        prop_assert_ne!(merkle_root(&txs).unwrap(), merkle_root(&swapped).unwrap());
    }

    #[test]
    fn partition_tiles_the_parameters(d in 1usize..40, hidden in 0usize..6, k_seed in any::<prop::sample::Index>()) {
        let spec = if hidden == 0 { ModelSpec::linear(d) } else { ModelSpec::two_layer(d, hidden) };
        let p = spec.parameter_count();
        let k = k_seed.index(p) + 1;
        let ranges = partition_model(&spec, k).unwrap();
        prop_assert_eq!(ranges.len(), k);
        prop_assert_eq!(ranges[0].start, 0);
        prop_assert_eq!(ranges[k - 1].end, p);
        for w in ranges.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
            prop_assert!(w[0].len() >= w[1].len());
        }
        prop_assert!(ranges[0].len() - ranges[k - 1].len() <= 1);
    }

    #[test]
    fn weights_are_a_distribution(m in metrics(), alpha in 0.0f64..=1.0) {
        let table = score_contribution(&m, alpha);
        let weights = table.weights();
        prop_assert!(weights.iter().all(|w| (0.0..=1.0).contains(w)));
        prop_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOLERANCE);
    }

    #[test]
    fn scores_ignore_units(m in metrics(), alpha in 0.0f64..=1.0, scale in prop::sample::select(vec![0.5, 2.0, 8.0, 1024.0])) {
        let scaled: Vec<ContributionMetrics> = m
            .iter()
            .map(|c| ContributionMetrics { param_volume: c.param_volume * scale, loss_delta: c.loss_delta * scale, ..*c })
            .collect();
        let a = score_contribution(&m, alpha).weights();
        let b = score_contribution(&scaled, alpha).weights();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12, "{} vs {}", x, y);
        }
    }

    #[test]
    fn lottery_is_a_pure_function(weights in prop::collection::vec(0.0f64..1.0, 1..10), seed in hash()) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 0.0);
        let norm: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let first = weighted_lottery(&norm, &seed).unwrap();
        prop_assert_eq!(weighted_lottery(&norm, &seed).unwrap(), first);
        prop_assert!(norm[first] > 0.0);
    }

    #[test]
    fn report_roundtrips(
        miner_id in any::<u32>(),
        start in 0usize..1000,
        values in prop::collection::vec(any::<f64>(), 1..30),
        rest in any::<(u64, f64, f64, u64)>(),
    ) {
        let report = TrainingReport {
            miner_id,
            shard: ParameterShard { range: ShardRange::new(start, start + values.len()), values },
            params_trained: rest.0,
            loss_before: rest.1,
            loss_after: rest.2,
            steps_used: rest.3,
        };
        let back = TrainingReport::from_bytes(&report.to_bytes()).unwrap();
        // Bitwise, so NaN payloads count too.
        prop_assert_eq!(back.to_bytes(), report.to_bytes());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certificate_roundtrips(
        seeds in any::<([u8; 32], [u8; 32])>(),
        params_trained in any::<u64>(),
        losses in (0.0f64..10.0, 0.0f64..10.0),
        cycle_id in any::<u64>(),
        nonce in any::<[u8; 16]>(),
    ) {
        let server = generate_keypair(&seeds.0);
        let miner = generate_keypair(&seeds.1);
        let measures = ContributionMeasures { params_trained, loss_before: losses.0, loss_after: losses.1 };
        let cert = issue_certificate(&server, miner.public_key(), &measures, cycle_id, cycle_id, nonce).unwrap();
        let bytes = cert.to_bytes();
        prop_assert_eq!(bytes.len(), CERTIFICATE_LEN);
        let back = Certificate::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.hash(), cert.hash());
        prop_assert!(trainchain_core::verify_certificate(server.public_key(), &back));
    }
}
