//! Randomized invariant checks for the cache, labeling, features, and
//! metrics layers.

use hsvmlru::cache::NodeCache;
use hsvmlru::features::{apply_scaler, fit_scaler, split_dataset, Dataset, FeatureVector, Schema};
use hsvmlru::svm::{kernel_eval, ConfusionReport, KernelSpec};
use hsvmlru::workload::{attach_oracle_labels, fig2_trace, generate_trace, BlockId, NodeId};
use hsvmlru::workload::{AppSpec, CacheAffinity, Interleave, WorkloadSpec};
use hsvmlru::Label;
use proptest::prelude::*;

fn small_spec(n_blocks: usize, reuse_factor: f64) -> WorkloadSpec {
    WorkloadSpec {
        name: "prop".into(),
        apps: vec![AppSpec {
            name: "app".into(),
            affinity: CacheAffinity::Medium,
            n_blocks,
            reuse_factor,
            sharing_group: None,
        }],
        block_size_mb: 64,
        interleave: Interleave::RoundRobin,
        n_datanodes: 2,
        replication: 1,
        jobs_per_app: 3,
    }
}

proptest! {
    /// Every oracle label equals a brute-force scan for a later occurrence.
    #[test]
    fn oracle_labels_are_future_occurrence(seed in 0u64..400, n_blocks in 2usize..12, reuse in 0.0f64..3.0) {
        let trace = attach_oracle_labels(&generate_trace(&small_spec(n_blocks, reuse), seed).unwrap());
        for (i, r) in trace.requests.iter().enumerate() {
            let later = trace.requests[i + 1..].iter().any(|q| q.block == r.block);
            prop_assert_eq!(r.oracle_label == Some(Label::Reused), later);
        }
    }

    /// The classified cache never exceeds capacity, never duplicates, and
    /// keeps the unused region equal to the blocks last classed NotReused.
    #[test]
    fn node_cache_invariants(ops in proptest::collection::vec((0u8..12, 0u8..2), 1..300), capacity in 1usize..9) {
        let mut cache = NodeCache::new(NodeId::new("dn-1"), capacity);
        let mut last_class = std::collections::HashMap::new();
        for (block, class_bit) in ops {
            let block = BlockId::new(format!("b{block}"));
            let class = Label::from_bit(class_bit).unwrap();
            if cache.contains(&block) {
                cache.hsvmlru_get(&block, class).unwrap();
            } else {
                cache.hsvmlru_put(block.clone(), class).unwrap();
            }
            last_class.insert(block, class);
            cache.check_invariants().unwrap();
            prop_assert!(cache.len() <= capacity);
            let region = &cache.order()[..cache.unused_len()];
            for b in cache.order() {
                prop_assert_eq!(region.contains(b), last_class[b] == Label::NotReused);
            }
        }
    }

    /// Constant-class traffic makes the classified cache replay plain LRU
    /// exactly, for both classes.
    #[test]
    fn constant_class_reduces_to_lru(
        accesses in proptest::collection::vec(0u8..10, 1..250),
        capacity in 1usize..8,
        class_bit in 0u8..2,
    ) {
        let class = Label::from_bit(class_bit).unwrap();
        let mut lru = NodeCache::new(NodeId::new("dn-1"), capacity);
        let mut classified = NodeCache::new(NodeId::new("dn-1"), capacity);
        for a in accesses {
            let block = BlockId::new(format!("b{a}"));
            prop_assert_eq!(lru.contains(&block), classified.contains(&block));
            if lru.contains(&block) {
                lru.lru_get(&block).unwrap();
                classified.hsvmlru_get(&block, class).unwrap();
            } else {
                let v1 = lru.lru_put(block.clone()).unwrap();
                let v2 = classified.hsvmlru_put(block, class).unwrap();
                prop_assert_eq!(v1, v2);
            }
            prop_assert_eq!(lru.order(), classified.order());
        }
    }

    /// After fitting and applying a scaler on the same data, non-constant
    /// columns span exactly [0,1] and constant columns collapse to 0.
    #[test]
    fn scaler_unit_range_on_train(rows in proptest::collection::vec(
        proptest::collection::vec(-1e6f64..1e6, 6), 1..50))
    {
        let mut data = Dataset::new(Schema::Online);
        for values in &rows {
            data.push(FeatureVector::new(Schema::Online, values.clone()).unwrap(), Label::NotReused).unwrap();
        }
        let scaler = fit_scaler(&data).unwrap();
        let scaled = apply_scaler(&scaler, &data).unwrap();
        for c in 0..6 {
            let col: Vec<f64> = scaled.rows.iter().map(|(fv, _)| fv.values[c]).collect();
            let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let raw: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            let constant = raw.iter().all(|&v| v == raw[0]);
            if constant {
                prop_assert!(col.iter().all(|&v| v == 0.0));
            } else {
                prop_assert!((min - 0.0).abs() < 1e-12);
                prop_assert!((max - 1.0).abs() < 1e-12);
            }
        }
    }

    /// Train/test splits partition the input: disjoint by row index, union
    /// equal to the whole, with the rounded train size.
    #[test]
    fn split_partitions_dataset(n in 2usize..120, fraction in 0.05f64..0.95, seed in 0u64..50) {
        let mut data = Dataset::new(Schema::Online);
        for i in 0..n {
            let mut values = vec![0.0; 6];
            values[4] = i as f64;
            data.push(FeatureVector::new(Schema::Online, values).unwrap(), Label::Reused).unwrap();
        }
        let (train, test) = split_dataset(&data, fraction, seed).unwrap();
        let expected = (((n as f64) * fraction).round() as usize).clamp(1, n - 1);
        prop_assert_eq!(train.len(), expected);
        prop_assert_eq!(train.len() + test.len(), n);
        let mut ids: Vec<usize> = train.rows.iter().chain(test.rows.iter())
            .map(|(fv, _)| fv.values[4] as usize).collect();
        ids.sort_unstable();
        prop_assert_eq!(ids, (0..n).collect::<Vec<_>>());
    }

    /// Confusion metrics equal their closed forms on arbitrary counts.
    #[test]
    fn confusion_matches_counts(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
        prop_assume!(tp + fp + tn + fn_ > 0);
        let r = ConfusionReport::from_counts(tp, fp, tn, fn_);
        let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        prop_assert_eq!(r.precision, div(tp, tp + fp));
        prop_assert_eq!(r.recall, div(tp, tp + fn_));
        prop_assert_eq!(r.accuracy, div(tp + tn, tp + fp + tn + fn_));
        prop_assert_eq!(r.total(), tp + fp + tn + fn_);
    }

    /// RBF kernel values sit in [0, 1] (zero only by underflow) and are
    /// symmetric.
    #[test]
    fn rbf_kernel_range_and_symmetry(
        x in proptest::collection::vec(-10.0f64..10.0, 4),
        y in proptest::collection::vec(-10.0f64..10.0, 4),
        gamma in 0.01f64..5.0,
    ) {
        let spec = KernelSpec::rbf(gamma);
        let kxy = kernel_eval(&spec, &x, &y).unwrap();
        let kyx = kernel_eval(&spec, &y, &x).unwrap();
        prop_assert!((0.0..=1.0).contains(&kxy));
        prop_assert_eq!(kxy, kyx);
        prop_assert_eq!(kernel_eval(&spec, &x, &x).unwrap(), 1.0);
    }

    /// Generated traces survive the jsonl round trip byte for byte.
    #[test]
    fn trace_files_round_trip(seed in 0u64..100, n_blocks in 2usize..10) {
        use hsvmlru::workload::{parse_catalog, parse_trace, write_catalog, write_trace};
        let trace = attach_oracle_labels(&generate_trace(&small_spec(n_blocks, 1.5), seed).unwrap());
        let mut blocks = Vec::new();
        let mut body = Vec::new();
        write_catalog(&trace.catalog, &mut blocks).unwrap();
        write_trace(&trace, &mut body).unwrap();
        let parsed = parse_trace(body.as_slice(), parse_catalog(blocks.as_slice()).unwrap()).unwrap();
        let mut blocks2 = Vec::new();
        let mut body2 = Vec::new();
        write_catalog(&parsed.catalog, &mut blocks2).unwrap();
        write_trace(&parsed, &mut body2).unwrap();
        prop_assert_eq!(blocks, blocks2);
        prop_assert_eq!(body, body2);
    }
}

#[test]
fn fig2_is_stable_fixture() {
    // guard against accidental edits to the canned example
    let a = fig2_trace();
    let b = fig2_trace();
    assert_eq!(a, b);
    assert_eq!(a.len(), 10);
    assert_eq!(a.catalog.len(), 8);
}
