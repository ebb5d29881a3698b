//! Soft-margin binary kernel SVM trained with a simplified SMO solver.
//!
//! The solver keeps a cached decision value per training point and updates
//! it incrementally on every alpha step, so sweeps that change nothing cost
//! O(n). Pair selection draws the second index from a seeded generator,
//! which makes training bitwise reproducible for a fixed seed.

use crate::error::{Error, Result};
use crate::features::{Dataset, Scaler, Schema};
use crate::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Full kernel matrices are cached up to this many rows; larger datasets
/// fall back to on-the-fly evaluation to bound memory.
pub const KERNEL_CACHE_MAX_ROWS: usize = 4096;

/// Minimum alpha step treated as progress.
const MIN_ALPHA_STEP: f64 = 1e-9;

/// Upper bound on SMO sweeps regardless of convergence.
const HARD_SWEEP_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
    Sigmoid,
}

/// Kernel function with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub degree: u32,
    pub coef0: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            gamma: 1.0,
            degree: 1,
            coef0: 0.0,
        }
    }

    pub fn rbf(gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            gamma,
            degree: 1,
            coef0: 0.0,
        }
    }

    pub fn polynomial(gamma: f64, degree: u32, coef0: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            gamma,
            degree,
            coef0,
        }
    }

    pub fn sigmoid(gamma: f64, coef0: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Sigmoid,
            gamma,
            degree: 1,
            coef0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != KernelKind::Linear && self.gamma <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive for {:?}, got {}",
                self.kind, self.gamma
            )));
        }
        if self.degree == 0 {
            return Err(Error::InvalidArgument("degree must be >= 1".into()));
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        }
    }
}

/// Evaluates the kernel on two equal-length vectors.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            got: y.len(),
            expected: x.len(),
        });
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    Ok(match spec.kind {
        KernelKind::Linear => dot(x, y),
        KernelKind::Polynomial => (spec.gamma * dot(x, y) + spec.coef0).powi(spec.degree as i32),
        KernelKind::Rbf => {
            let sq: f64 = x
                .iter()
                .zip(y)
                .map(|(u, v)| {
                    let d = u - v;
                    d * d
                })
                .sum();
            (-spec.gamma * sq).exp()
        }
        KernelKind::Sigmoid => (spec.gamma * dot(x, y) + spec.coef0).tanh(),
    })
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Soft-margin penalty.
    pub c: f64,
    /// KKT tolerance.
    pub tol: f64,
    /// Consecutive clean sweeps required before stopping.
    pub max_passes: usize,
    pub kernel: KernelSpec,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            tol: 1e-3,
            max_passes: 50,
            kernel: KernelSpec::rbf(1.0),
            seed: 0,
        }
    }
}

/// The `scale` heuristic: `1 / (n_features * var(X))` over all entries,
/// falling back to `1 / n_features` for constant data.
pub fn resolve_gamma(data: &Dataset) -> f64 {
    let n_features = data.schema.width() as f64;
    let mut count = 0.0;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (fv, _) in &data.rows {
        for &v in &fv.values {
            count += 1.0;
            let d = v - mean;
            mean += d / count;
            m2 += d * (v - mean);
        }
    }
    let var = if count > 1.0 { m2 / count } else { 0.0 };
    if var > 0.0 {
        1.0 / (n_features * var)
    } else {
        1.0 / n_features
    }
}

/// A trained classifier: support vectors, signed dual coefficients, bias,
/// kernel, and the scaler applied to raw inputs before evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` with y in {-1, +1}.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub scaler: Scaler,
    pub schema: Schema,
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.scaler.min.len()
    }
}

/// Per-point solver state exposed for diagnostics and KKT checks. Alphas
/// align with the training rows passed to [`train_detailed`].
#[derive(Debug, Clone)]
pub struct TrainDiagnostics {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub sweeps: usize,
    pub converged: bool,
}

enum KernelTable<'a> {
    Dense {
        n: usize,
        values: Vec<f64>,
    },
    Lazy {
        spec: KernelSpec,
        rows: &'a [Vec<f64>],
    },
}

impl<'a> KernelTable<'a> {
    fn build(spec: KernelSpec, rows: &'a [Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n <= KERNEL_CACHE_MAX_ROWS {
            let mut values = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let k = kernel_eval(&spec, &rows[i], &rows[j])?;
                    values[i * n + j] = k;
                    values[j * n + i] = k;
                }
            }
            Ok(KernelTable::Dense { n, values })
        } else {
            Ok(KernelTable::Lazy { spec, rows })
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            KernelTable::Dense { n, values } => values[i * n + j],
            KernelTable::Lazy { spec, rows } => {
                kernel_eval(spec, &rows[i], &rows[j]).expect("equal dims")
            }
        }
    }
}

/// Trains on an already-scaled dataset; the returned model carries an
/// identity scaler (see [`train_pipeline`] for the fit-scale-train flow).
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<SvmModel> {
    train_detailed(data, cfg).map(|(model, _)| model)
}

pub fn train_detailed(data: &Dataset, cfg: &TrainConfig) -> Result<(SvmModel, TrainDiagnostics)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !data.has_both_classes() {
        return Err(Error::SingleClass);
    }
    if cfg.c <= 0.0 || cfg.tol <= 0.0 || cfg.max_passes == 0 {
        return Err(Error::InvalidArgument(
            "c, tol, and max_passes must be positive".into(),
        ));
    }
    cfg.kernel.validate()?;
    let n = data.len();
    let rows: Vec<Vec<f64>> = data.rows.iter().map(|(fv, _)| fv.values.clone()).collect();
    for (i, row) in rows.iter().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(i));
        }
    }
    let y: Vec<f64> = data.rows.iter().map(|(_, l)| l.as_sign()).collect();
    let kernel = KernelTable::build(cfg.kernel, &rows)?;

    let mut alphas = vec![0.0f64; n];
    let mut bias = 0.0f64;
    // Cached decision value per training point; valid while alphas/bias only
    // change through the update below.
    let mut fcache = vec![0.0f64; n];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut clean_passes = 0usize;
    let mut sweeps = 0usize;

    while clean_passes < cfg.max_passes && sweeps < HARD_SWEEP_CAP {
        sweeps += 1;
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = fcache[i] - y[i];
            let margin = y[i] * e_i; // y*f(x) - 1
            let violates =
                (margin < -cfg.tol && alphas[i] < cfg.c) || (margin > cfg.tol && alphas[i] > 0.0);
            if !violates {
                continue;
            }
            let j = {
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                j
            };
            let e_j = fcache[j] - y[j];
            let (alpha_i_old, alpha_j_old) = (alphas[i], alphas[j]);
            let (lo, hi) = if (y[i] - y[j]).abs() > f64::EPSILON {
                (
                    (alpha_j_old - alpha_i_old).max(0.0),
                    (cfg.c + alpha_j_old - alpha_i_old).min(cfg.c),
                )
            } else {
                (
                    (alpha_i_old + alpha_j_old - cfg.c).max(0.0),
                    (alpha_i_old + alpha_j_old).min(cfg.c),
                )
            };
            if lo >= hi {
                continue;
            }
            let k_ii = kernel.get(i, i);
            let k_jj = kernel.get(j, j);
            let k_ij = kernel.get(i, j);
            let eta = 2.0 * k_ij - k_ii - k_jj;
            if eta >= 0.0 {
                continue;
            }
            let alpha_j_new = (alpha_j_old - y[j] * (e_i - e_j) / eta).clamp(lo, hi);
            let delta_j = alpha_j_new - alpha_j_old;
            if delta_j.abs() < MIN_ALPHA_STEP {
                continue;
            }
            let delta_i = -y[i] * y[j] * delta_j;
            let alpha_i_new = alpha_i_old + delta_i;

            let b1 = bias - e_i - y[i] * delta_i * k_ii - y[j] * delta_j * k_ij;
            let b2 = bias - e_j - y[i] * delta_i * k_ij - y[j] * delta_j * k_jj;
            let bias_new = if alpha_i_new > 0.0 && alpha_i_new < cfg.c {
                b1
            } else if alpha_j_new > 0.0 && alpha_j_new < cfg.c {
                b2
            } else {
                0.5 * (b1 + b2)
            };
            let delta_b = bias_new - bias;

            alphas[i] = alpha_i_new;
            alphas[j] = alpha_j_new;
            bias = bias_new;
            for (k, f) in fcache.iter_mut().enumerate() {
                *f +=
                    y[i] * delta_i * kernel.get(i, k) + y[j] * delta_j * kernel.get(j, k) + delta_b;
            }
            changed += 1;
        }
        if changed == 0 {
            clean_passes += 1;
        } else {
            clean_passes = 0;
        }
    }

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        if alphas[i] > 0.0 {
            support_vectors.push(rows[i].clone());
            dual_coef.push(alphas[i] * y[i]);
        }
    }
    let model = SvmModel {
        kernel: cfg.kernel,
        support_vectors,
        dual_coef,
        bias,
        scaler: Scaler::identity(data.schema.width()),
        schema: data.schema,
    };
    let diagnostics = TrainDiagnostics {
        alphas,
        bias,
        sweeps,
        converged: clean_passes >= cfg.max_passes,
    };
    Ok((model, diagnostics))
}

/// The `scale` heuristic evaluated on the min-max-scaled view of a raw
/// dataset, which is what the training pipeline actually feeds the kernel.
pub fn auto_gamma(raw: &Dataset) -> Result<f64> {
    let scaler = crate::features::fit_scaler(raw)?;
    let scaled = crate::features::apply_scaler(&scaler, raw)?;
    Ok(resolve_gamma(&scaled))
}

/// Fits a scaler on raw training data, trains on the scaled rows, and
/// embeds the scaler in the returned model.
pub fn train_pipeline(raw_train: &Dataset, cfg: &TrainConfig) -> Result<SvmModel> {
    let scaler = crate::features::fit_scaler(raw_train)?;
    let scaled = crate::features::apply_scaler(&scaler, raw_train)?;
    let mut model = train(&scaled, cfg)?;
    model.scaler = scaler;
    Ok(model)
}

/// Decision function on a raw input; the model's scaler is applied first.
pub fn decision_value(model: &SvmModel, raw: &[f64]) -> Result<f64> {
    let x = model.scaler.transform(raw)?;
    let mut sum = model.bias;
    for (sv, coef) in model.support_vectors.iter().zip(&model.dual_coef) {
        sum += coef * kernel_eval(&model.kernel, sv, &x)?;
    }
    Ok(sum)
}

/// `Reused` iff the decision value is strictly positive; ties fall to
/// `NotReused` so ambiguous blocks cannot pollute the cache.
pub fn predict(model: &SvmModel, raw: &[f64]) -> Result<Label> {
    Ok(if decision_value(model, raw)? > 0.0 {
        Label::Reused
    } else {
        Label::NotReused
    })
}

/// Per-class precision/recall/F1 with the given class treated as positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Confusion counts (class 1 = positive) and derived scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Positive-class (Reused) scores.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub per_class: [ClassMetrics; 2],
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_of(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl ConfusionReport {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        // Class 0 metrics: swap positive/negative roles.
        let precision0 = ratio(tn, tn + fn_);
        let recall0 = ratio(tn, tn + fp);
        ConfusionReport {
            tp,
            fp,
            tn,
            fn_,
            precision,
            recall,
            f1: f1_of(precision, recall),
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
            per_class: [
                ClassMetrics {
                    class: 0,
                    precision: precision0,
                    recall: recall0,
                    f1: f1_of(precision0, recall0),
                },
                ClassMetrics {
                    class: 1,
                    precision,
                    recall,
                    f1: f1_of(precision, recall),
                },
            ],
        }
    }

    /// Tallies predicted-vs-true label pairs.
    pub fn from_predictions(pairs: &[(Label, Label)]) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
        for &(predicted, actual) in pairs {
            match (predicted, actual) {
                (Label::Reused, Label::Reused) => tp += 1,
                (Label::Reused, Label::NotReused) => fp += 1,
                (Label::NotReused, Label::NotReused) => tn += 1,
                (Label::NotReused, Label::Reused) => fn_ += 1,
            }
        }
        Self::from_counts(tp, fp, tn, fn_)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl std::fmt::Display for ConfusionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "class  precision  recall  f1-score")?;
        for m in &self.per_class {
            writeln!(
                f,
                "{:<5}  {:>9.4}  {:>6.4}  {:>8.4}",
                m.class, m.precision, m.recall, m.f1
            )?;
        }
        writeln!(
            f,
            "counts tp={} fp={} tn={} fn={}",
            self.tp, self.fp, self.tn, self.fn_
        )?;
        write!(f, "accuracy {:.4} over {}", self.accuracy, self.total())
    }
}

/// Evaluates a model on raw (unscaled) test rows.
pub fn evaluate(model: &SvmModel, test: &Dataset) -> Result<ConfusionReport> {
    let mut pairs = Vec::with_capacity(test.len());
    for (fv, label) in &test.rows {
        pairs.push((predict(model, &fv.values)?, *label));
    }
    Ok(ConfusionReport::from_predictions(&pairs))
}

/// Outcome of one candidate in a kernel search.
#[derive(Debug, Clone)]
pub struct KernelCandidateReport {
    pub spec: KernelSpec,
    pub report: Option<ConfusionReport>,
    pub error: Option<String>,
}

/// Trains and evaluates every candidate kernel on one fixed 75/25 split of
/// the raw data; the winner maximizes accuracy, ties broken by positive-class
/// F1 and then candidate order. Individual training failures are recorded,
/// not fatal, unless every candidate fails.
pub fn select_kernel(
    data: &Dataset,
    candidates: &[KernelSpec],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(KernelSpec, Vec<KernelCandidateReport>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no kernel candidates".into()));
    }
    let (train_raw, test_raw) = crate::features::split_dataset(data, 0.75, seed)?;
    let mut reports = Vec::new();
    let mut best: Option<(usize, f64, f64)> = None;
    for (idx, candidate) in candidates.iter().enumerate() {
        let mut run_cfg = cfg.clone();
        run_cfg.kernel = *candidate;
        match train_pipeline(&train_raw, &run_cfg).and_then(|m| evaluate(&m, &test_raw)) {
            Ok(report) => {
                let key = (report.accuracy, report.f1);
                let better = match best {
                    None => true,
                    Some((_, acc, f1)) => {
                        report.accuracy > acc || (report.accuracy == acc && report.f1 > f1)
                    }
                };
                if better {
                    best = Some((idx, key.0, key.1));
                }
                reports.push(KernelCandidateReport {
                    spec: *candidate,
                    report: Some(report),
                    error: None,
                });
            }
            Err(e) => reports.push(KernelCandidateReport {
                spec: *candidate,
                report: None,
                error: Some(e.to_string()),
            }),
        }
    }
    match best {
        Some((idx, _, _)) => Ok((candidates[idx], reports)),
        None => Err(Error::AllCandidatesFailed(
            reports
                .iter()
                .filter_map(|r| r.error.clone())
                .collect::<Vec<_>>()
                .join("; "),
        )),
    }
}

/// Writes `model.json` (pretty-printed, stable field order).
pub fn write_model<W: Write>(model: &SvmModel, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, model)?;
    w.write_all(b"\n").map_err(|e| Error::io("<model>", e))?;
    Ok(())
}

pub fn parse_model<R: BufRead>(mut r: R) -> Result<SvmModel> {
    let mut text = String::new();
    r.read_to_string(&mut text)
        .map_err(|e| Error::io("<model>", e))?;
    let model: SvmModel = serde_json::from_str(&text)?;
    if model.support_vectors.len() != model.dual_coef.len() {
        return Err(Error::InvalidArgument(
            "support_vectors and dual_coef lengths differ".into(),
        ));
    }
    Ok(model)
}

/// Counts KKT violations of a trained state at the given tolerance, using
/// decision values recomputed from the model.
pub fn kkt_violations(
    model: &SvmModel,
    data: &Dataset,
    alphas: &[f64],
    c: f64,
    tol: f64,
) -> Result<usize> {
    let mut violations = 0;
    for ((fv, label), &alpha) in data.rows.iter().zip(alphas) {
        let f = decision_value(model, &fv.values)?;
        let yf = label.as_sign() * f;
        let ok = if alpha <= 0.0 {
            yf >= 1.0 - tol
        } else if alpha >= c {
            yf <= 1.0 + tol
        } else {
            (yf - 1.0).abs() <= tol
        };
        if !ok {
            violations += 1;
        }
    }
    Ok(violations)
}
