//! Bounded recency-ordered per-node caches and the two replacement policies
//! that drive them.
//!
//! Index 0 ("top") of a cache is the next eviction victim; the last index
//! ("bottom") is the most protected slot. The classified policy keeps a
//! contiguous *unused region* of blocks most recently classed `NotReused`
//! at the top, so they are evicted first:
//!
//! * hit, class `Reused`  — block moves to the bottom (and leaves the
//!   unused region if it was parked there);
//! * hit, class `NotReused` — a block from the protected region moves to
//!   the absolute top and the unused region grows to include it; a block
//!   already inside the region renews at the region's end, which keeps the
//!   policy exactly LRU when every block carries the same class;
//! * miss insert, class `Reused` — bottom;
//! * miss insert, class `NotReused` — end of the unused region (the top
//!   when the region is empty);
//! * eviction always takes the top, chosen before the incoming block is
//!   classified.

use crate::error::{Error, Result};
use crate::features::{extract_online_features, AccessStats};
use crate::svm::{predict, SvmModel};
use crate::workload::{BlockId, NodeId, Request, Trace};
use crate::Label;
use std::collections::HashMap;

/// Where a class-`NotReused` hit from the protected region is re-inserted.
/// `Top` makes the block the immediate next victim; `RegionEnd` parks it
/// behind the rest of the unused region instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnusedHitPlacement {
    #[default]
    Top,
    RegionEnd,
}

/// A bounded recency-ordered cache for one DataNode.
#[derive(Debug, Clone)]
pub struct NodeCache {
    node: NodeId,
    capacity_blocks: usize,
    order: Vec<BlockId>,
    index: HashMap<BlockId, usize>,
    unused_len: usize,
    hit_placement: UnusedHitPlacement,
}

impl NodeCache {
    pub fn new(node: NodeId, capacity_blocks: usize) -> Self {
        assert!(capacity_blocks > 0, "cache capacity must be positive");
        NodeCache {
            node,
            capacity_blocks,
            order: Vec::with_capacity(capacity_blocks),
            index: HashMap::new(),
            unused_len: 0,
            hit_placement: UnusedHitPlacement::default(),
        }
    }

    pub fn with_hit_placement(mut self, placement: UnusedHitPlacement) -> Self {
        self.hit_placement = placement;
        self
    }

    pub fn node(&self) -> &NodeId {
        &self.node
    }

    pub fn capacity_blocks(&self) -> usize {
        self.capacity_blocks
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.order.len() >= self.capacity_blocks
    }

    pub fn unused_len(&self) -> usize {
        self.unused_len
    }

    pub fn contains(&self, block: &BlockId) -> bool {
        self.index.contains_key(block)
    }

    /// Residency order, top (next victim) first.
    pub fn order(&self) -> &[BlockId] {
        &self.order
    }

    fn reindex_from(&mut self, start: usize) {
        for pos in start..self.order.len() {
            self.index.insert(self.order[pos].clone(), pos);
        }
    }

    fn remove_at(&mut self, pos: usize) -> BlockId {
        let block = self.order.remove(pos);
        self.index.remove(&block);
        self.reindex_from(pos);
        block
    }

    fn insert_at(&mut self, pos: usize, block: BlockId) {
        self.order.insert(pos, block);
        self.reindex_from(pos);
    }

    fn position(&self, block: &BlockId) -> Result<usize> {
        self.index
            .get(block)
            .copied()
            .ok_or_else(|| Error::NotResident(block.to_string()))
    }

    /// Plain LRU hit: renew the block at the bottom.
    pub fn lru_get(&mut self, block: &BlockId) -> Result<()> {
        let pos = self.position(block)?;
        if pos < self.unused_len {
            self.unused_len -= 1;
        }
        let block = self.remove_at(pos);
        self.insert_at(self.order.len(), block);
        Ok(())
    }

    /// Plain LRU insert: evict the top when full, insert at the bottom.
    pub fn lru_put(&mut self, block: BlockId) -> Result<Option<BlockId>> {
        if self.contains(&block) {
            return Err(Error::DuplicateInsert(block.to_string()));
        }
        let victim = self.evict_if_full();
        self.insert_at(self.order.len(), block);
        Ok(victim)
    }

    fn evict_if_full(&mut self) -> Option<BlockId> {
        if self.is_full() {
            let victim = self.remove_at(0);
            self.unused_len = self.unused_len.saturating_sub(1);
            Some(victim)
        } else {
            None
        }
    }

    /// Classified hit.
    pub fn hsvmlru_get(&mut self, block: &BlockId, class: Label) -> Result<()> {
        let pos = self.position(block)?;
        let was_unused = pos < self.unused_len;
        match class {
            Label::Reused => {
                if was_unused {
                    self.unused_len -= 1;
                }
                let block = self.remove_at(pos);
                self.insert_at(self.order.len(), block);
            }
            Label::NotReused => {
                if was_unused {
                    // Renew within the unused region; region size unchanged.
                    let block = self.remove_at(pos);
                    let end = self.unused_len - 1;
                    self.insert_at(end, block);
                } else {
                    let block = self.remove_at(pos);
                    match self.hit_placement {
                        UnusedHitPlacement::Top => self.insert_at(0, block),
                        UnusedHitPlacement::RegionEnd => {
                            let end = self.unused_len;
                            self.insert_at(end, block);
                        }
                    }
                    self.unused_len += 1;
                }
            }
        }
        Ok(())
    }

    /// Classified insert; the victim (when full) is taken from the top
    /// before the new block's class is applied.
    pub fn hsvmlru_put(&mut self, block: BlockId, class: Label) -> Result<Option<BlockId>> {
        if self.contains(&block) {
            return Err(Error::DuplicateInsert(block.to_string()));
        }
        let victim = self.evict_if_full();
        match class {
            Label::Reused => {
                self.insert_at(self.order.len(), block);
            }
            Label::NotReused => {
                let end = self.unused_len;
                self.insert_at(end, block);
                self.unused_len += 1;
            }
        }
        Ok(victim)
    }

    /// Structural consistency: bounded size, bijective index, region bound.
    pub fn check_invariants(&self) -> Result<()> {
        if self.order.len() > self.capacity_blocks {
            return Err(Error::InconsistentMetadata(format!(
                "cache {} over capacity",
                self.node
            )));
        }
        if self.unused_len > self.order.len() {
            return Err(Error::InconsistentMetadata(format!(
                "cache {} unused region exceeds contents",
                self.node
            )));
        }
        if self.index.len() != self.order.len() {
            return Err(Error::InconsistentMetadata(format!(
                "cache {} index size mismatch",
                self.node
            )));
        }
        for (pos, block) in self.order.iter().enumerate() {
            if self.index.get(block) != Some(&pos) {
                return Err(Error::InconsistentMetadata(format!(
                    "cache {} index out of sync at {pos}",
                    self.node
                )));
            }
        }
        Ok(())
    }
}

/// An eviction and the request that triggered it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvictionEvent {
    pub victim: BlockId,
    pub node: NodeId,
    pub seq: u64,
}

/// Source of reuse classes for the classified policy.
pub enum Classifier {
    /// A trained online-schema model fed live request features.
    Model(SvmModel),
    /// Ground truth read from the trace's oracle labels.
    Oracle,
    /// A fixed class for every request.
    Constant(Label),
}

impl Classifier {
    pub fn name(&self) -> String {
        match self {
            Classifier::Model(_) => "model".into(),
            Classifier::Oracle => "oracle".into(),
            Classifier::Constant(l) => format!("const:{}", l.as_bit()),
        }
    }
}

/// Produces the reuse class for a request. Statistics must reflect accesses
/// strictly before the request.
pub fn classify(
    classifier: &Classifier,
    request: &Request,
    trace: &Trace,
    stats: &AccessStats,
) -> Result<Label> {
    match classifier {
        Classifier::Constant(label) => Ok(*label),
        Classifier::Oracle => request
            .oracle_label
            .ok_or(Error::UnlabeledRequest(request.seq)),
        Classifier::Model(model) => {
            if model.schema != crate::features::Schema::Online {
                return Err(Error::SchemaMismatch {
                    expected: "online".into(),
                    got: model.schema.as_str().into(),
                });
            }
            let fv = extract_online_features(request, trace, stats)?;
            predict(model, &fv.values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::fig2_trace;

    fn bid(s: &str) -> BlockId {
        BlockId::new(s)
    }

    fn cache(capacity: usize) -> NodeCache {
        NodeCache::new(NodeId::new("dn-1"), capacity)
    }

    fn order_of(c: &NodeCache) -> Vec<&str> {
        c.order().iter().map(|b| b.as_str()).collect()
    }

    #[test]
    fn lru_get_moves_to_bottom() {
        let mut c = cache(5);
        for b in ["A", "B", "C"] {
            c.lru_put(bid(b)).unwrap();
        }
        c.lru_get(&bid("B")).unwrap();
        assert_eq!(order_of(&c), ["A", "C", "B"]);
        // bottom element is a fixed point
        c.lru_get(&bid("B")).unwrap();
        assert_eq!(order_of(&c), ["A", "C", "B"]);
        assert!(matches!(c.lru_get(&bid("D")), Err(Error::NotResident(_))));
    }

    #[test]
    fn lru_put_evicts_top_when_full() {
        let mut c = cache(2);
        assert_eq!(c.lru_put(bid("A")).unwrap(), None);
        assert_eq!(c.lru_put(bid("B")).unwrap(), None);
        let victim = c.lru_put(bid("C")).unwrap();
        assert_eq!(victim, Some(bid("A")));
        assert_eq!(order_of(&c), ["B", "C"]);
        assert!(matches!(
            c.lru_put(bid("C")),
            Err(Error::DuplicateInsert(_))
        ));
    }

    #[test]
    fn fig2_replay_under_plain_lru_misses_everything() {
        let trace = fig2_trace();
        let mut c = cache(5);
        let mut hits = 0;
        let mut missed_blocks = Vec::new();
        for req in &trace.requests {
            if c.contains(&req.block) {
                hits += 1;
                c.lru_get(&req.block).unwrap();
            } else {
                missed_blocks.push(req.block.clone());
                c.lru_put(req.block.clone()).unwrap();
            }
            c.check_invariants().unwrap();
        }
        assert_eq!(hits, 0);
        // the re-requests of DB2 and DB3 were both misses
        assert_eq!(missed_blocks.len(), 10);
        assert_eq!(missed_blocks[7], bid("DB2"));
        assert_eq!(missed_blocks[9], bid("DB3"));
    }

    #[test]
    fn classified_put_builds_fig2_prefix_state() {
        let mut c = cache(5);
        for (b, class) in [("DB1", 0u8), ("DB2", 1), ("DB3", 1), ("DB4", 1), ("DB5", 0)] {
            c.hsvmlru_put(bid(b), Label::from_bit(class).unwrap())
                .unwrap();
            c.check_invariants().unwrap();
        }
        assert_eq!(order_of(&c), ["DB1", "DB5", "DB2", "DB3", "DB4"]);
        assert_eq!(c.unused_len(), 2);
    }

    #[test]
    fn classified_hit_from_protected_region_moves_to_top() {
        // fig2 state just before the DB2 re-request
        let mut c = cache(5);
        c.hsvmlru_put(bid("DB6"), Label::NotReused).unwrap();
        c.hsvmlru_put(bid("DB7"), Label::NotReused).unwrap();
        c.hsvmlru_put(bid("DB2"), Label::Reused).unwrap();
        c.hsvmlru_put(bid("DB3"), Label::Reused).unwrap();
        c.hsvmlru_put(bid("DB4"), Label::Reused).unwrap();
        assert_eq!(order_of(&c), ["DB6", "DB7", "DB2", "DB3", "DB4"]);
        assert_eq!(c.unused_len(), 2);

        c.hsvmlru_get(&bid("DB2"), Label::NotReused).unwrap();
        assert_eq!(order_of(&c), ["DB2", "DB6", "DB7", "DB3", "DB4"]);
        assert_eq!(c.unused_len(), 3);

        // fig2 step 9: the class-1 insert evicts the parked DB2
        let victim = c.hsvmlru_put(bid("DB8"), Label::Reused).unwrap();
        assert_eq!(victim, Some(bid("DB2")));
        assert_eq!(order_of(&c), ["DB6", "DB7", "DB3", "DB4", "DB8"]);
        assert_eq!(c.unused_len(), 2);
    }

    #[test]
    fn reused_hit_leaves_unused_region() {
        let mut c = cache(4);
        c.hsvmlru_put(bid("X"), Label::NotReused).unwrap();
        c.hsvmlru_put(bid("Y"), Label::NotReused).unwrap();
        c.hsvmlru_put(bid("Z"), Label::Reused).unwrap();
        assert_eq!(c.unused_len(), 2);
        c.hsvmlru_get(&bid("X"), Label::Reused).unwrap();
        assert_eq!(order_of(&c), ["Y", "Z", "X"]);
        assert_eq!(c.unused_len(), 1);
        assert!(matches!(
            c.hsvmlru_get(&bid("Q"), Label::Reused),
            Err(Error::NotResident(_))
        ));
    }

    #[test]
    fn class1_insert_into_nonfull_cache_lands_at_bottom() {
        let mut c = cache(3);
        c.hsvmlru_put(bid("A"), Label::NotReused).unwrap();
        let victim = c.hsvmlru_put(bid("B"), Label::Reused).unwrap();
        assert_eq!(victim, None);
        assert_eq!(order_of(&c), ["A", "B"]);
    }

    #[test]
    fn class0_inserts_append_to_region_end() {
        let mut c = cache(4);
        c.hsvmlru_put(bid("A"), Label::NotReused).unwrap();
        c.hsvmlru_put(bid("B"), Label::Reused).unwrap();
        c.hsvmlru_put(bid("C"), Label::NotReused).unwrap();
        assert_eq!(order_of(&c), ["A", "C", "B"]);
        assert_eq!(c.unused_len(), 2);
    }

    #[test]
    fn fig2_full_replay_with_oracle_classes_hits_twice() {
        let trace = fig2_trace();
        let mut c = cache(5);
        let mut hit_seqs = Vec::new();
        for req in &trace.requests {
            let class = req.oracle_label.unwrap();
            if c.contains(&req.block) {
                hit_seqs.push(req.seq);
                c.hsvmlru_get(&req.block, class).unwrap();
            } else {
                c.hsvmlru_put(req.block.clone(), class).unwrap();
            }
            c.check_invariants().unwrap();
        }
        assert_eq!(hit_seqs, vec![7, 9]);
        assert_eq!(order_of(&c), ["DB6", "DB7", "DB4", "DB8", "DB3"]);
    }

    #[test]
    fn constant_reused_is_exactly_lru() {
        // randomized access sequences over a small block universe
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let capacity = rng.gen_range(1..6);
            let mut lru = cache(capacity);
            let mut classified = cache(capacity);
            for _ in 0..60 {
                let b = bid(&format!("b{}", rng.gen_range(0..8)));
                let lru_hit = lru.contains(&b);
                let cls_hit = classified.contains(&b);
                assert_eq!(lru_hit, cls_hit);
                if lru_hit {
                    lru.lru_get(&b).unwrap();
                    classified.hsvmlru_get(&b, Label::Reused).unwrap();
                } else {
                    let v1 = lru.lru_put(b.clone()).unwrap();
                    let v2 = classified.hsvmlru_put(b, Label::Reused).unwrap();
                    assert_eq!(v1, v2);
                }
                assert_eq!(lru.order(), classified.order());
            }
        }
    }

    #[test]
    fn constant_not_reused_is_exactly_lru() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(34);
        for _ in 0..200 {
            let capacity = rng.gen_range(1..6);
            let mut lru = cache(capacity);
            let mut classified = cache(capacity);
            for _ in 0..60 {
                let b = bid(&format!("b{}", rng.gen_range(0..8)));
                let lru_hit = lru.contains(&b);
                assert_eq!(lru_hit, classified.contains(&b));
                if lru_hit {
                    lru.lru_get(&b).unwrap();
                    classified.hsvmlru_get(&b, Label::NotReused).unwrap();
                } else {
                    let v1 = lru.lru_put(b.clone()).unwrap();
                    let v2 = classified.hsvmlru_put(b, Label::NotReused).unwrap();
                    assert_eq!(v1, v2);
                }
                assert_eq!(lru.order(), classified.order());
                assert_eq!(classified.unused_len(), classified.len());
            }
        }
    }

    #[test]
    fn unused_region_tracks_last_classification() {
        use rand::{Rng, SeedableRng};
        use std::collections::HashMap;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(56);
        let mut c = cache(6);
        let mut last_class: HashMap<BlockId, Label> = HashMap::new();
        for _ in 0..500 {
            let b = bid(&format!("b{}", rng.gen_range(0..10)));
            let class = Label::from_bit(rng.gen_range(0..2)).unwrap();
            if c.contains(&b) {
                c.hsvmlru_get(&b, class).unwrap();
            } else {
                c.hsvmlru_put(b.clone(), class).unwrap();
            }
            last_class.insert(b, class);
            c.check_invariants().unwrap();
            let region: Vec<_> = c.order()[..c.unused_len()].to_vec();
            for block in c.order() {
                let in_region = region.contains(block);
                assert_eq!(
                    in_region,
                    last_class[block] == Label::NotReused,
                    "block {block} region membership"
                );
            }
        }
    }

    #[test]
    fn region_end_placement_flag() {
        let mut c = cache(5).with_hit_placement(UnusedHitPlacement::RegionEnd);
        c.hsvmlru_put(bid("U1"), Label::NotReused).unwrap();
        c.hsvmlru_put(bid("U2"), Label::NotReused).unwrap();
        c.hsvmlru_put(bid("P1"), Label::Reused).unwrap();
        c.hsvmlru_get(&bid("P1"), Label::NotReused).unwrap();
        // the demoted block lands behind the existing region, not on top
        assert_eq!(order_of(&c), ["U1", "U2", "P1"]);
        assert_eq!(c.unused_len(), 3);
    }

    #[test]
    fn classify_variants() {
        let trace = fig2_trace();
        let stats = AccessStats::new();
        let req = &trace.requests[7]; // (DB2, 0)
        assert_eq!(
            classify(&Classifier::Constant(Label::Reused), req, &trace, &stats).unwrap(),
            Label::Reused
        );
        assert_eq!(
            classify(&Classifier::Oracle, req, &trace, &stats).unwrap(),
            Label::NotReused
        );
        let mut unlabeled = req.clone();
        unlabeled.oracle_label = None;
        assert!(matches!(
            classify(&Classifier::Oracle, &unlabeled, &trace, &stats),
            Err(Error::UnlabeledRequest(7))
        ));
    }

    #[test]
    fn classify_with_trained_model_reproduces_training_labels() {
        use crate::features::build_online_dataset;
        use crate::svm::{train_pipeline, TrainConfig};
        let trace = crate::workload::attach_oracle_labels(&fig2_trace());
        let data = build_online_dataset(&trace).unwrap();
        let cfg = TrainConfig {
            c: 50.0,
            kernel: crate::svm::KernelSpec::rbf(5.0),
            ..TrainConfig::default()
        };
        let model = train_pipeline(&data, &cfg).unwrap();
        let report = crate::svm::evaluate(&model, &data).unwrap();
        if report.accuracy == 1.0 {
            // on a fully-fit model, classify() agrees with the oracle
            let mut stats = AccessStats::new();
            let classifier = Classifier::Model(model);
            for req in &trace.requests {
                let got = classify(&classifier, req, &trace, &stats).unwrap();
                assert_eq!(got, req.oracle_label.unwrap());
                stats.record(&req.block, req.time_ms);
            }
        }
    }
}
