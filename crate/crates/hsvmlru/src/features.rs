//! Feature extraction, normalization, and dataset handling.
//!
//! Two fixed-order schemas exist: `Online` encodes a live request (block
//! type one-hot, size, recency, frequency) and `History` encodes a labeled
//! job-history row. All vectors of a dataset share one schema and length.

use crate::error::{Error, Result};
use crate::labeling::JobStatus;
use crate::labeling::{JobRecord, LabelTarget, LabeledRow, TaskKind, TaskRecord, TaskStatus};
use crate::workload::{BlockId, CacheAffinity, DataType, Request, Trace};
use crate::Label;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, Write};

/// Number of hash buckets used to encode job names.
pub const JOB_NAME_BUCKETS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    Online,
    History,
}

impl Schema {
    /// Number of features in a vector of this schema.
    pub fn width(self) -> usize {
        match self {
            Schema::Online => 6,
            Schema::History => JOB_NAME_BUCKETS + 30,
        }
    }

    /// Column names, in vector order.
    pub fn feature_names(self) -> Vec<String> {
        match self {
            Schema::Online => vec![
                "type_map_input".into(),
                "type_intermediate".into(),
                "type_reduce_output".into(),
                "size_mb".into(),
                "recency_ms".into(),
                "frequency".into(),
            ],
            Schema::History => {
                let mut names: Vec<String> = (0..JOB_NAME_BUCKETS)
                    .map(|i| format!("job_name_bucket_{i}"))
                    .collect();
                names.extend(
                    [
                        "maps_total",
                        "maps_completed",
                        "reduces_total",
                        "reduces_completed",
                        "job_status_new",
                        "job_status_initiated",
                        "job_status_running",
                        "job_status_succeeded",
                        "job_status_failed",
                        "job_status_killed",
                        "job_status_error",
                        "cache_affinity_low",
                        "cache_affinity_medium",
                        "cache_affinity_high",
                        "start_time_ms",
                        "finish_time_ms",
                        "task_type_map",
                        "task_type_reduce",
                        "task_status_new",
                        "task_status_scheduled",
                        "task_status_running",
                        "task_status_succeeded",
                        "task_status_failed",
                        "task_status_killed",
                        "task_status_waiting",
                        "avg_map_time_ms",
                        "avg_reduce_time_ms",
                        "progress_pct",
                        "target_map_input",
                        "target_reduce_input",
                    ]
                    .iter()
                    .map(|s| s.to_string()),
                );
                names
            }
        }
    }

    /// Indices of free-range numeric columns (outlier elimination applies
    /// only to these; one-hot columns are exempt).
    pub fn numeric_columns(self) -> Vec<usize> {
        match self {
            Schema::Online => vec![3, 4, 5],
            Schema::History => {
                let b = JOB_NAME_BUCKETS;
                vec![
                    b,
                    b + 1,
                    b + 2,
                    b + 3,
                    b + 14,
                    b + 15,
                    b + 25,
                    b + 26,
                    b + 27,
                ]
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Schema::Online => "online",
            Schema::History => "history",
        }
    }
}

/// A fixed-order numeric feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub schema: Schema,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(schema: Schema, values: Vec<f64>) -> Result<Self> {
        if values.len() != schema.width() {
            return Err(Error::DimensionMismatch {
                got: values.len(),
                expected: schema.width(),
            });
        }
        Ok(FeatureVector { schema, values })
    }
}

/// Feature rows with labels, all sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub rows: Vec<(FeatureVector, Label)>,
}

impl Dataset {
    pub fn new(schema: Schema) -> Self {
        Dataset {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, vector: FeatureVector, label: Label) -> Result<()> {
        if vector.schema != self.schema {
            return Err(Error::SchemaMismatch {
                expected: self.schema.as_str().into(),
                got: vector.schema.as_str().into(),
            });
        }
        self.rows.push((vector, label));
        Ok(())
    }

    pub fn has_both_classes(&self) -> bool {
        let mut seen = [false; 2];
        for (_, label) in &self.rows {
            seen[label.as_bit() as usize] = true;
        }
        seen[0] && seen[1]
    }
}

/// Min-max normalization parameters, fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    /// A no-op scaler for data that is already in model units.
    pub fn identity(n_features: usize) -> Self {
        Scaler {
            min: vec![0.0; n_features],
            max: vec![1.0; n_features],
        }
    }

    pub fn transform(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.min.len() {
            return Err(Error::DimensionMismatch {
                got: values.len(),
                expected: self.min.len(),
            });
        }
        Ok(values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let span = self.max[i] - self.min[i];
                if span == 0.0 {
                    0.0
                } else {
                    (v - self.min[i]) / span
                }
            })
            .collect())
    }
}

/// Fits a min-max scaler on a training set.
pub fn fit_scaler(train: &Dataset) -> Result<Scaler> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = train.schema.width();
    let mut min = vec![f64::INFINITY; n];
    let mut max = vec![f64::NEG_INFINITY; n];
    for (row_idx, (fv, _)) in train.rows.iter().enumerate() {
        for (i, &v) in fv.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature(row_idx));
            }
            min[i] = min[i].min(v);
            max[i] = max[i].max(v);
        }
    }
    Ok(Scaler { min, max })
}

/// Applies a scaler; values outside the fitted range map outside [0,1] and
/// are intentionally not clipped.
pub fn apply_scaler(scaler: &Scaler, data: &Dataset) -> Result<Dataset> {
    let mut out = Dataset::new(data.schema);
    for (fv, label) in &data.rows {
        let values = scaler.transform(&fv.values)?;
        out.push(FeatureVector::new(data.schema, values)?, *label)?;
    }
    Ok(out)
}

/// Splits a dataset into train/test by a seeded shuffle. The train side
/// gets `round(n * train_fraction)` rows.
pub fn split_dataset(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::FractionOutOfRange(train_fraction));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x73706c69);
    indices.shuffle(&mut rng);
    let n_train = ((data.len() as f64) * train_fraction).round() as usize;
    let n_train = n_train.clamp(1, data.len() - 1);
    let mut train = Dataset::new(data.schema);
    let mut test = Dataset::new(data.schema);
    for (k, &i) in indices.iter().enumerate() {
        let (fv, label) = data.rows[i].clone();
        if k < n_train {
            train.push(fv, label)?;
        } else {
            test.push(fv, label)?;
        }
    }
    Ok((train, test))
}

/// Drops rows holding a numeric feature farther than `5 * IQR` from the
/// column median. Returns the surviving dataset and the dropped-row count.
pub fn remove_outliers(data: &Dataset) -> (Dataset, usize) {
    let cols = data.schema.numeric_columns();
    if data.len() < 4 || cols.is_empty() {
        return (data.clone(), 0);
    }
    let mut bounds = Vec::with_capacity(cols.len());
    for &c in &cols {
        let mut vals: Vec<f64> = data.rows.iter().map(|(fv, _)| fv.values[c]).collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        let q = |p: f64| vals[((vals.len() - 1) as f64 * p).round() as usize];
        let median = q(0.5);
        let iqr = q(0.75) - q(0.25);
        // a zero spread gives no scale to judge outliers by
        if iqr > 0.0 {
            bounds.push((c, median - 5.0 * iqr, median + 5.0 * iqr));
        }
    }
    let mut kept = Dataset::new(data.schema);
    let mut dropped = 0usize;
    for (fv, label) in &data.rows {
        let ok = bounds
            .iter()
            .all(|&(c, lo, hi)| fv.values[c] >= lo && fv.values[c] <= hi);
        if ok {
            kept.push(fv.clone(), *label).expect("same schema");
        } else {
            dropped += 1;
        }
    }
    (kept, dropped)
}

// --- online features ---------------------------------------------------------

/// Running per-block access statistics, reflecting accesses strictly before
/// the request being featurized.
#[derive(Debug, Clone, Default)]
pub struct AccessStats {
    per_block: HashMap<BlockId, (u64, u64)>, // (last access ms, count)
}

impl AccessStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_access_ms(&self, block: &BlockId) -> Option<u64> {
        self.per_block.get(block).map(|&(t, _)| t)
    }

    pub fn frequency(&self, block: &BlockId) -> u64 {
        self.per_block.get(block).map(|&(_, c)| c).unwrap_or(0)
    }

    /// Records an access; call after featurizing/classifying the request.
    pub fn record(&mut self, block: &BlockId, time_ms: u64) {
        let entry = self.per_block.entry(block.clone()).or_insert((0, 0));
        entry.0 = time_ms;
        entry.1 += 1;
    }
}

/// Builds the online vector `[type one-hot; size_mb; recency_ms; frequency]`.
/// A first access uses the time since trace start as its recency.
pub fn extract_online_features(
    request: &Request,
    trace: &Trace,
    stats: &AccessStats,
) -> Result<FeatureVector> {
    let block = trace
        .catalog
        .get(&request.block)
        .ok_or_else(|| Error::UnknownBlock(request.block.to_string()))?;
    let mut values = vec![0.0; 6];
    let type_slot = match block.data_type {
        DataType::MapInput => 0,
        DataType::Intermediate => 1,
        DataType::ReduceOutput => 2,
    };
    values[type_slot] = 1.0;
    values[3] = block.size_mb as f64;
    values[4] = match stats.last_access_ms(&request.block) {
        Some(last) => (request.time_ms - last) as f64,
        None => request.time_ms as f64,
    };
    values[5] = stats.frequency(&request.block) as f64;
    FeatureVector::new(Schema::Online, values)
}

/// Replays a labeled trace into an online-schema training set: one row per
/// request, features from the access history so far, label from the oracle.
pub fn build_online_dataset(trace: &Trace) -> Result<Dataset> {
    let mut stats = AccessStats::new();
    let mut data = Dataset::new(Schema::Online);
    for request in &trace.requests {
        let label = request
            .oracle_label
            .ok_or(Error::UnlabeledRequest(request.seq))?;
        let fv = extract_online_features(request, trace, &stats)?;
        data.push(fv, label)?;
        stats.record(&request.block, request.time_ms);
    }
    Ok(data)
}

// --- history features --------------------------------------------------------

fn fnv1a(s: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Stable hash bucket for a job name.
pub fn job_name_bucket(name: &str) -> usize {
    (fnv1a(name) % JOB_NAME_BUCKETS as u64) as usize
}

/// Encodes one (job, task, target) row in Table-3 field order. Size and
/// recency are deliberately absent from this schema.
pub fn extract_history_features(
    job: &JobRecord,
    task: &TaskRecord,
    target: LabelTarget,
) -> FeatureVector {
    let mut values = vec![0.0; Schema::History.width()];
    values[job_name_bucket(&job.job_name)] = 1.0;
    let b = JOB_NAME_BUCKETS;
    values[b] = job.maps_total as f64;
    values[b + 1] = job.maps_completed as f64;
    values[b + 2] = job.reduces_total as f64;
    values[b + 3] = job.reduces_completed as f64;
    let job_status_slot = match job.job_status {
        JobStatus::New => 0,
        JobStatus::Initiated => 1,
        JobStatus::Running => 2,
        JobStatus::Succeeded => 3,
        JobStatus::Failed => 4,
        JobStatus::Killed => 5,
        JobStatus::Error => 6,
    };
    values[b + 4 + job_status_slot] = 1.0;
    let affinity_slot = match job.cache_affinity {
        CacheAffinity::Low => 0,
        CacheAffinity::Medium => 1,
        CacheAffinity::High => 2,
    };
    values[b + 11 + affinity_slot] = 1.0;
    values[b + 14] = job.start_time_ms as f64;
    values[b + 15] = job.finish_time_ms as f64;
    let task_type_slot = match task.task_type {
        TaskKind::Map => 0,
        TaskKind::Reduce => 1,
    };
    values[b + 16 + task_type_slot] = 1.0;
    let task_status_slot = match task.task_status {
        TaskStatus::New => 0,
        TaskStatus::Scheduled => 1,
        TaskStatus::Running => 2,
        TaskStatus::Succeeded => 3,
        TaskStatus::Failed => 4,
        TaskStatus::Killed => 5,
        TaskStatus::Waiting => 6,
    };
    values[b + 18 + task_status_slot] = 1.0;
    values[b + 25] = task.avg_map_time_ms as f64;
    values[b + 26] = task.avg_reduce_time_ms as f64;
    values[b + 27] = task.progress_pct;
    let target_slot = match target {
        LabelTarget::MapInput => 0,
        LabelTarget::ReduceInput => 1,
    };
    values[b + 28 + target_slot] = 1.0;
    FeatureVector {
        schema: Schema::History,
        values,
    }
}

/// Featurizes labeled history rows into a history-schema dataset.
pub fn build_history_dataset(rows: &[LabeledRow]) -> Dataset {
    let mut data = Dataset::new(Schema::History);
    for row in rows {
        let fv = extract_history_features(&row.job, &row.task, row.target);
        data.push(fv, row.label).expect("history schema");
    }
    data
}

// --- dataset.csv -------------------------------------------------------------

/// Writes `dataset.csv`: feature-name header plus a final `label` column.
/// Floats use shortest round-trip form, so write-parse-write is stable.
pub fn write_dataset_csv<W: Write>(data: &Dataset, mut w: W) -> Result<()> {
    let werr = |e| Error::io("<dataset.csv>", e);
    let mut header = data.schema.feature_names().join(",");
    header.push_str(",label");
    writeln!(w, "{header}").map_err(werr)?;
    for (fv, label) in &data.rows {
        let mut line = String::new();
        for v in &fv.values {
            line.push_str(&format!("{v}"));
            line.push(',');
        }
        line.push_str(&label.as_bit().to_string());
        writeln!(w, "{line}").map_err(werr)?;
    }
    Ok(())
}

/// Parses `dataset.csv`, inferring the schema from the header.
pub fn parse_dataset_csv<R: BufRead>(r: R) -> Result<Dataset> {
    let mut lines = r.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io("<dataset.csv>", e))?,
        None => return Err(Error::EmptyDataset),
    };
    let schema = if header.trim() == format!("{},label", Schema::Online.feature_names().join(",")) {
        Schema::Online
    } else if header.trim() == format!("{},label", Schema::History.feature_names().join(",")) {
        Schema::History
    } else {
        return Err(Error::MalformedLine {
            line: 1,
            msg: "header does not match a known feature schema".into(),
        });
    };
    let mut data = Dataset::new(schema);
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<dataset.csv>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != schema.width() + 1 {
            return Err(Error::MalformedLine {
                line: lineno,
                msg: format!(
                    "expected {} fields, got {}",
                    schema.width() + 1,
                    cells.len()
                ),
            });
        }
        let mut values = Vec::with_capacity(schema.width());
        for cell in &cells[..schema.width()] {
            values.push(cell.parse::<f64>().map_err(|_| Error::MalformedLine {
                line: lineno,
                msg: format!("bad number {cell}"),
            })?);
        }
        let bit: u8 = cells[schema.width()]
            .parse()
            .map_err(|_| Error::MalformedLine {
                line: lineno,
                msg: format!("bad label {}", cells[schema.width()]),
            })?;
        let label = Label::from_bit(bit).ok_or_else(|| Error::MalformedLine {
            line: lineno,
            msg: format!("label must be 0 or 1, got {bit}"),
        })?;
        data.push(FeatureVector::new(schema, values)?, label)?;
    }
    Ok(data)
}
