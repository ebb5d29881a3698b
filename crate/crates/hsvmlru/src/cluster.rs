//! Centralized cache-management flow: coordinator metadata (block and cache
//! locations), per-node caches, first-replica placement, and cache-report
//! reconciliation.
//!
//! Block metadata maps a block to its ordered replica list; cache metadata
//! maps a block to the single node caching it. A miss places the block on
//! its first replica (the home node). Reports are reconciled synchronously,
//! so metadata and cache contents agree after every request.

use crate::cache::{classify, Classifier, NodeCache, UnusedHitPlacement};
use crate::error::{Error, Result};
use crate::features::AccessStats;
use crate::workload::{BlockId, DataBlock, NodeId, Request};
use crate::Label;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

fn default_cluster_block_size() -> u64 {
    64
}

/// Cluster shape: uniform per-node cache capacity and replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub n_datanodes: usize,
    pub cache_capacity_blocks: usize,
    pub replication: usize,
    #[serde(default = "default_cluster_block_size")]
    pub block_size_mb: u64,
}

impl ClusterConfig {
    pub fn new(n_datanodes: usize, cache_capacity_blocks: usize, replication: usize) -> Self {
        ClusterConfig {
            n_datanodes,
            cache_capacity_blocks,
            replication,
            block_size_mb: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_datanodes == 0 || self.cache_capacity_blocks == 0 {
            return Err(Error::InvalidArgument(
                "n_datanodes and cache_capacity_blocks must be positive".into(),
            ));
        }
        if self.replication == 0 || self.replication > self.n_datanodes {
            return Err(Error::InvalidArgument(format!(
                "replication {} must be in 1..={}",
                self.replication, self.n_datanodes
            )));
        }
        if self.block_size_mb != 64 && self.block_size_mb != 128 {
            return Err(Error::InvalidBlockSize(self.block_size_mb));
        }
        Ok(())
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        (1..=self.n_datanodes)
            .map(|i| NodeId::new(format!("dn-{i}")))
            .collect()
    }
}

/// Replacement policy applied by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    NoCache,
    Lru,
    HsvmLru,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::NoCache => "nocache",
            Policy::Lru => "lru",
            Policy::HsvmLru => "hsvmlru",
        }
    }

    pub fn parse(s: &str) -> Result<Policy> {
        match s {
            "nocache" => Ok(Policy::NoCache),
            "lru" => Ok(Policy::Lru),
            "hsvmlru" => Ok(Policy::HsvmLru),
            other => Err(Error::InvalidArgument(format!("unknown policy {other}"))),
        }
    }
}

/// Result of routing one request through the cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessOutcome {
    pub seq: u64,
    pub block: BlockId,
    pub hit: bool,
    /// Node serving the hit, or receiving the placement on a miss.
    pub node: NodeId,
    pub evicted: Option<BlockId>,
    pub class_used: Option<Label>,
}

/// Coordinator view plus the per-node caches it coordinates.
///
/// `cache_metadata` tracks cache contents synchronously. When
/// `report_delay` is nonzero the coordinator instead resolves against
/// `reported_metadata`, a view refreshed only when cache reports arrive,
/// so lookups can be stale in between.
#[derive(Debug, Clone)]
pub struct ClusterState {
    pub config: ClusterConfig,
    pub block_metadata: BTreeMap<BlockId, Vec<NodeId>>,
    pub cache_metadata: BTreeMap<BlockId, NodeId>,
    pub node_caches: BTreeMap<NodeId, NodeCache>,
    pub report_delay: usize,
    pub reported_metadata: BTreeMap<BlockId, NodeId>,
}

/// Builds an empty-cached cluster over a block catalog. The seed is part of
/// the construction contract for reproducibility but nothing here draws
/// randomness today.
pub fn build_cluster(
    config: &ClusterConfig,
    catalog: &BTreeMap<BlockId, DataBlock>,
    _seed: u64,
) -> Result<ClusterState> {
    config.validate()?;
    let nodes: BTreeSet<NodeId> = config.node_ids().into_iter().collect();
    let mut block_metadata = BTreeMap::new();
    for block in catalog.values() {
        if block.replicas.len() != config.replication {
            return Err(Error::ReplicationMismatch {
                block: block.id.to_string(),
                got: block.replicas.len(),
                expected: config.replication,
            });
        }
        for replica in &block.replicas {
            if !nodes.contains(replica) {
                return Err(Error::UnknownReplicaNode {
                    block: block.id.to_string(),
                    node: replica.to_string(),
                });
            }
        }
        block_metadata.insert(block.id.clone(), block.replicas.clone());
    }
    let node_caches = nodes
        .into_iter()
        .map(|n| {
            let cache = NodeCache::new(n.clone(), config.cache_capacity_blocks);
            (n, cache)
        })
        .collect();
    Ok(ClusterState {
        config: config.clone(),
        block_metadata,
        cache_metadata: BTreeMap::new(),
        node_caches,
        report_delay: 0,
        reported_metadata: BTreeMap::new(),
    })
}

impl ClusterState {
    /// Applies a hit-placement policy option to every node cache; only
    /// meaningful before any requests are processed.
    pub fn with_hit_placement(mut self, placement: UnusedHitPlacement) -> Self {
        let nodes: Vec<NodeId> = self.node_caches.keys().cloned().collect();
        for node in nodes {
            let capacity = self.config.cache_capacity_blocks;
            self.node_caches.insert(
                node.clone(),
                NodeCache::new(node, capacity).with_hit_placement(placement),
            );
        }
        self
    }

    /// Requests per cache report; 0 keeps the coordinator view synchronous.
    pub fn with_report_delay(mut self, delay: usize) -> Self {
        self.report_delay = delay;
        self
    }

    /// Looks up a block's cached location (if any) and its home node (first
    /// replica). The cached side comes from the coordinator's current view,
    /// which lags reality when a report delay is configured.
    pub fn resolve(&self, block: &BlockId) -> Result<(Option<NodeId>, NodeId)> {
        let replicas = self
            .block_metadata
            .get(block)
            .ok_or_else(|| Error::UnknownBlock(block.to_string()))?;
        let home = replicas
            .first()
            .cloned()
            .ok_or_else(|| Error::UnknownBlock(block.to_string()))?;
        let view = if self.report_delay == 0 {
            &self.cache_metadata
        } else {
            &self.reported_metadata
        };
        Ok((view.get(block).cloned(), home))
    }

    /// Refreshes the reported view from every node's true cache contents,
    /// as if all heartbeat reports arrived at once.
    pub fn refresh_reports(&mut self) {
        self.reported_metadata.clear();
        for (node, cache) in &self.node_caches {
            for block in cache.order() {
                self.reported_metadata.insert(block.clone(), node.clone());
            }
        }
    }

    /// Reconciles one node's declared resident set into the cache metadata,
    /// returning the number of corrected entries. Idempotent.
    pub fn apply_cache_report(
        &mut self,
        node: &NodeId,
        resident: &BTreeSet<BlockId>,
    ) -> Result<usize> {
        if !self.node_caches.contains_key(node) {
            return Err(Error::UnknownNode(node.to_string()));
        }
        let mut discrepancies = 0;
        let stale: Vec<BlockId> = self
            .cache_metadata
            .iter()
            .filter(|(block, n)| *n == node && !resident.contains(*block))
            .map(|(block, _)| block.clone())
            .collect();
        for block in stale {
            self.cache_metadata.remove(&block);
            discrepancies += 1;
        }
        for block in resident {
            match self.cache_metadata.get(block) {
                Some(n) if n == node => {}
                _ => {
                    self.cache_metadata.insert(block.clone(), node.clone());
                    discrepancies += 1;
                }
            }
        }
        Ok(discrepancies)
    }

    /// Verifies metadata/cache coherence; simulator bug if it fails.
    pub fn check_coherence(&self) -> Result<()> {
        for (block, node) in &self.cache_metadata {
            let cache = self
                .node_caches
                .get(node)
                .ok_or_else(|| Error::InconsistentMetadata(format!("no cache for {node}")))?;
            if !cache.contains(block) {
                return Err(Error::InconsistentMetadata(format!(
                    "metadata claims {block} on {node} but the cache disagrees"
                )));
            }
        }
        for (node, cache) in &self.node_caches {
            for block in cache.order() {
                if self.cache_metadata.get(block) != Some(node) {
                    return Err(Error::InconsistentMetadata(format!(
                        "{node} holds {block} without a metadata entry"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Routes one request: a hit renews the block on its caching node, a miss
/// places it on its home node (evicting there if needed). Cache metadata is
/// updated synchronously. `stats` must reflect accesses strictly before the
/// request; the classifier is consulted only under [`Policy::HsvmLru`].
pub fn process_request(
    state: &mut ClusterState,
    request: &Request,
    policy: Policy,
    classifier: Option<&Classifier>,
    trace: &crate::workload::Trace,
    stats: &AccessStats,
) -> Result<AccessOutcome> {
    let (cached, home) = state.resolve(&request.block)?;

    if policy == Policy::NoCache {
        return Ok(AccessOutcome {
            seq: request.seq,
            block: request.block.clone(),
            hit: false,
            node: home,
            evicted: None,
            class_used: None,
        });
    }

    let class = match policy {
        Policy::HsvmLru => {
            let classifier = classifier.ok_or(Error::MissingClassifier)?;
            Some(classify(classifier, request, trace, stats)?)
        }
        _ => None,
    };

    if let Some(node) = cached {
        let cache = state
            .node_caches
            .get_mut(&node)
            .ok_or_else(|| Error::InconsistentMetadata(format!("no cache for {node}")))?;
        if cache.contains(&request.block) {
            match policy {
                Policy::Lru => cache.lru_get(&request.block)?,
                Policy::HsvmLru => {
                    cache.hsvmlru_get(&request.block, class.expect("classified above"))?
                }
                Policy::NoCache => unreachable!(),
            }
            return Ok(AccessOutcome {
                seq: request.seq,
                block: request.block.clone(),
                hit: true,
                node,
                evicted: None,
                class_used: class,
            });
        }
        if state.report_delay == 0 {
            return Err(Error::InconsistentMetadata(format!(
                "metadata claims {} on {node} but the cache disagrees",
                request.block
            )));
        }
        // Stale report: the block was evicted after the last heartbeat.
        // The request falls through to the miss path.
    }

    let cache = state
        .node_caches
        .get_mut(&home)
        .ok_or_else(|| Error::InconsistentMetadata(format!("no cache for {home}")))?;
    if cache.contains(&request.block) {
        // Only reachable with delayed reports: the block is resident but
        // the coordinator does not know yet, so the read goes to disk and
        // nothing moves in the cache.
        return Ok(AccessOutcome {
            seq: request.seq,
            block: request.block.clone(),
            hit: false,
            node: home,
            evicted: None,
            class_used: class,
        });
    }
    let victim = match policy {
        Policy::Lru => cache.lru_put(request.block.clone())?,
        Policy::HsvmLru => {
            cache.hsvmlru_put(request.block.clone(), class.expect("classified above"))?
        }
        Policy::NoCache => unreachable!(),
    };
    if let Some(victim) = &victim {
        state.cache_metadata.remove(victim);
    }
    state
        .cache_metadata
        .insert(request.block.clone(), home.clone());
    Ok(AccessOutcome {
        seq: request.seq,
        block: request.block.clone(),
        hit: false,
        node: home,
        evicted: victim,
        class_used: class,
    })
}

/// Reads `cluster.json`.
pub fn parse_cluster_config(text: &str) -> Result<ClusterConfig> {
    let config: ClusterConfig = serde_json::from_str(text)?;
    config.validate()?;
    Ok(config)
}

pub fn write_cluster_config(config: &ClusterConfig) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string_pretty(config)?))
}
