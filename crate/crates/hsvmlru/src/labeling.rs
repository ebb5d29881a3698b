//! Synthetic MapReduce job histories and reuse labels derived from job and
//! task status.
//!
//! The label guidelines map a (job status, map-task status, reduce-task
//! status) triple to a reuse class for the Map-input and Reduce-input of the
//! job. Triples outside the guideline table default to `NotReused` and are
//! flagged as defaulted; failed, killed, and errored jobs dominate their
//! task statuses.

use crate::error::{Error, Result};
use crate::workload::{CacheAffinity, WorkloadSpec};
use crate::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    New,
    Initiated,
    Running,
    Succeeded,
    Failed,
    Killed,
    Error,
}

impl JobStatus {
    pub const ALL: [JobStatus; 7] = [
        JobStatus::New,
        JobStatus::Initiated,
        JobStatus::Running,
        JobStatus::Succeeded,
        JobStatus::Failed,
        JobStatus::Killed,
        JobStatus::Error,
    ];

    /// Terminal-failure statuses dominate task statuses when labeling.
    pub fn is_failure(self) -> bool {
        matches!(
            self,
            JobStatus::Failed | JobStatus::Killed | JobStatus::Error
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    New,
    Scheduled,
    Running,
    Succeeded,
    Failed,
    Killed,
    Waiting,
}

impl TaskStatus {
    pub const ALL: [TaskStatus; 7] = [
        TaskStatus::New,
        TaskStatus::Scheduled,
        TaskStatus::Running,
        TaskStatus::Succeeded,
        TaskStatus::Failed,
        TaskStatus::Killed,
        TaskStatus::Waiting,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Map,
    Reduce,
}

/// Which input of the job a label refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelTarget {
    MapInput,
    ReduceInput,
}

impl LabelTarget {
    pub const ALL: [LabelTarget; 2] = [LabelTarget::MapInput, LabelTarget::ReduceInput];
}

/// One job-level history record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_name: String,
    pub maps_total: u64,
    pub maps_completed: u64,
    pub reduces_total: u64,
    pub reduces_completed: u64,
    pub job_status: JobStatus,
    pub cache_affinity: CacheAffinity,
    pub start_time_ms: u64,
    pub finish_time_ms: u64,
}

/// One task-level history record, keyed to its job by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub job_name: String,
    pub task_type: TaskKind,
    pub task_status: TaskStatus,
    pub avg_map_time_ms: u64,
    pub avg_reduce_time_ms: u64,
    pub progress_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JobHistory {
    pub jobs: Vec<JobRecord>,
    pub tasks: Vec<TaskRecord>,
}

/// Outcome of a labeling decision. `defaulted` marks status triples absent
/// from the guideline table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelDecision {
    pub label: Label,
    pub defaulted: bool,
}

/// A guideline row: (job, map, reduce) statuses mapped to the (map-input,
/// reduce-input) label bits.
pub type GuidelineRow = ((JobStatus, TaskStatus, TaskStatus), (u8, u8));

/// The explicit guideline rows. The Failed row stands for any
/// failure-class job status with arbitrary task statuses.
pub const GUIDELINE_ROWS: [GuidelineRow; 10] = [
    ((JobStatus::New, TaskStatus::New, TaskStatus::New), (0, 0)),
    (
        (
            JobStatus::Initiated,
            TaskStatus::Scheduled,
            TaskStatus::Waiting,
        ),
        (1, 0),
    ),
    (
        (JobStatus::Running, TaskStatus::Running, TaskStatus::Waiting),
        (1, 0),
    ),
    (
        (
            JobStatus::Running,
            TaskStatus::Succeeded,
            TaskStatus::Scheduled,
        ),
        (0, 1),
    ),
    (
        (
            JobStatus::Running,
            TaskStatus::Succeeded,
            TaskStatus::Running,
        ),
        (0, 1),
    ),
    (
        (JobStatus::Running, TaskStatus::Failed, TaskStatus::Waiting),
        (0, 0),
    ),
    (
        (
            JobStatus::Running,
            TaskStatus::Succeeded,
            TaskStatus::Failed,
        ),
        (0, 0),
    ),
    // Killed tasks may re-execute speculatively on another node.
    (
        (JobStatus::Running, TaskStatus::Killed, TaskStatus::Waiting),
        (1, 0),
    ),
    (
        (
            JobStatus::Running,
            TaskStatus::Succeeded,
            TaskStatus::Killed,
        ),
        (0, 1),
    ),
    (
        (
            JobStatus::Succeeded,
            TaskStatus::Succeeded,
            TaskStatus::Succeeded,
        ),
        (0, 0),
    ),
];

/// Labels one input of a job from its status triple.
///
/// Total over all status combinations: failure-class job statuses always
/// yield `NotReused` for both targets, explicit guideline rows yield their
/// table entry, and anything else yields `NotReused` with `defaulted` set.
pub fn label_request(
    job_status: JobStatus,
    map_status: TaskStatus,
    reduce_status: TaskStatus,
    target: LabelTarget,
) -> LabelDecision {
    if job_status.is_failure() {
        return LabelDecision {
            label: Label::NotReused,
            defaulted: false,
        };
    }
    for ((js, ms, rs), (map_label, reduce_label)) in GUIDELINE_ROWS {
        if js == job_status && ms == map_status && rs == reduce_status {
            let bit = match target {
                LabelTarget::MapInput => map_label,
                LabelTarget::ReduceInput => reduce_label,
            };
            return LabelDecision {
                label: Label::from_bit(bit).expect("guideline bits are 0/1"),
                defaulted: false,
            };
        }
    }
    LabelDecision {
        label: Label::NotReused,
        defaulted: true,
    }
}

/// The status triples the synthesizer cycles through: every guideline row,
/// a representative of each failure-class job status, and two off-table
/// triples that exercise the defaulting path.
fn synthesis_triples() -> Vec<(JobStatus, TaskStatus, TaskStatus)> {
    let mut triples: Vec<(JobStatus, TaskStatus, TaskStatus)> =
        GUIDELINE_ROWS.iter().map(|(t, _)| *t).collect();
    triples.push((
        JobStatus::Failed,
        TaskStatus::Succeeded,
        TaskStatus::Running,
    ));
    triples.push((JobStatus::Killed, TaskStatus::Running, TaskStatus::Waiting));
    triples.push((JobStatus::Error, TaskStatus::New, TaskStatus::New));
    triples.push((JobStatus::Running, TaskStatus::Running, TaskStatus::Running));
    triples.push((JobStatus::Initiated, TaskStatus::New, TaskStatus::New));
    triples
}

fn progress_for(status: TaskStatus, rng: &mut ChaCha8Rng) -> f64 {
    match status {
        TaskStatus::Succeeded => 100.0,
        TaskStatus::Running => rng.gen_range(5..95) as f64,
        TaskStatus::Failed | TaskStatus::Killed => rng.gen_range(0..90) as f64,
        _ => 0.0,
    }
}

/// Synthesizes a deterministic job history for a workload spec.
///
/// Jobs per app come from `spec.jobs_per_app`. The first jobs walk the full
/// triple list in order so any history with at least one full cycle covers
/// every guideline row; later jobs sample triples uniformly.
pub fn synthesize_history(spec: &WorkloadSpec, seed: u64) -> Result<JobHistory> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a6f6273);
    let triples = synthesis_triples();
    let mut history = JobHistory::default();
    let mut job_counter = 0usize;

    for app in &spec.apps {
        for _ in 0..spec.jobs_per_app {
            let triple_idx = if job_counter < triples.len() {
                job_counter
            } else {
                rng.gen_range(0..triples.len())
            };
            let (job_status, map_status, reduce_status) = triples[triple_idx];
            let job_name = format!("{}-{:04}", app.name, job_counter);
            job_counter += 1;

            let maps_total = app.n_blocks.max(1) as u64;
            let reduces_total = (maps_total / 4).max(1);
            let maps_completed = match map_status {
                TaskStatus::Succeeded => maps_total,
                TaskStatus::Running => rng.gen_range(0..maps_total),
                TaskStatus::Failed | TaskStatus::Killed => rng.gen_range(0..maps_total),
                _ => 0,
            };
            let reduces_completed = match reduce_status {
                TaskStatus::Succeeded => reduces_total,
                TaskStatus::Running => rng.gen_range(0..reduces_total),
                _ => 0,
            };
            let start_time_ms = rng.gen_range(0..1_000_000u64);
            let duration = rng.gen_range(10_000..600_000u64);
            let finish_time_ms = match job_status {
                JobStatus::Succeeded | JobStatus::Failed | JobStatus::Killed => {
                    start_time_ms + duration
                }
                _ => 0,
            };
            let avg_map_time_ms = rng.gen_range(500..60_000u64);
            let avg_reduce_time_ms = rng.gen_range(1_000..120_000u64);

            history.jobs.push(JobRecord {
                job_name: job_name.clone(),
                maps_total,
                maps_completed,
                reduces_total,
                reduces_completed,
                job_status,
                cache_affinity: app.affinity,
                start_time_ms,
                finish_time_ms,
            });
            history.tasks.push(TaskRecord {
                job_name: job_name.clone(),
                task_type: TaskKind::Map,
                task_status: map_status,
                avg_map_time_ms,
                avg_reduce_time_ms,
                progress_pct: progress_for(map_status, &mut rng),
            });
            history.tasks.push(TaskRecord {
                job_name,
                task_type: TaskKind::Reduce,
                task_status: reduce_status,
                avg_map_time_ms,
                avg_reduce_time_ms,
                progress_pct: progress_for(reduce_status, &mut rng),
            });
        }
    }
    Ok(history)
}

/// One row of the labeled training set.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub job: JobRecord,
    pub task: TaskRecord,
    pub target: LabelTarget,
    pub label: Label,
}

/// Expands a history into one labeled row per (task, target) pair.
///
/// The status triple for a job is taken from its Map-type and Reduce-type
/// task records; a missing side counts as `New`.
pub fn label_history(history: &JobHistory) -> Result<Vec<LabeledRow>> {
    let job_names: BTreeSet<&str> = history.jobs.iter().map(|j| j.job_name.as_str()).collect();
    for task in &history.tasks {
        if !job_names.contains(task.job_name.as_str()) {
            return Err(Error::UnknownJob(task.job_name.clone()));
        }
    }
    let mut rows = Vec::new();
    for job in &history.jobs {
        let status_of = |kind: TaskKind| {
            history
                .tasks
                .iter()
                .find(|t| t.job_name == job.job_name && t.task_type == kind)
                .map(|t| t.task_status)
                .unwrap_or(TaskStatus::New)
        };
        let map_status = status_of(TaskKind::Map);
        let reduce_status = status_of(TaskKind::Reduce);
        for task in history.tasks.iter().filter(|t| t.job_name == job.job_name) {
            for target in LabelTarget::ALL {
                let decision = label_request(job.job_status, map_status, reduce_status, target);
                rows.push(LabeledRow {
                    job: job.clone(),
                    task: task.clone(),
                    target,
                    label: decision.label,
                });
            }
        }
    }
    Ok(rows)
}

// --- history.jsonl ---------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct JobLine {
    job_name: String,
    maps_total: u64,
    maps_completed: u64,
    reduces_total: u64,
    reduces_completed: u64,
    job_status: JobStatus,
    cache_affinity: CacheAffinity,
    start_time_ms: u64,
    finish_time_ms: u64,
    tasks: Vec<TaskLine>,
}

#[derive(Serialize, Deserialize)]
struct TaskLine {
    task_type: TaskKind,
    task_status: TaskStatus,
    avg_map_time_ms: u64,
    avg_reduce_time_ms: u64,
    progress_pct: f64,
}

/// Writes `history.jsonl`: one job per line with its nested task array.
pub fn write_history<W: Write>(history: &JobHistory, mut w: W) -> Result<()> {
    for job in &history.jobs {
        let tasks = history
            .tasks
            .iter()
            .filter(|t| t.job_name == job.job_name)
            .map(|t| TaskLine {
                task_type: t.task_type,
                task_status: t.task_status,
                avg_map_time_ms: t.avg_map_time_ms,
                avg_reduce_time_ms: t.avg_reduce_time_ms,
                progress_pct: t.progress_pct,
            })
            .collect();
        let line = JobLine {
            job_name: job.job_name.clone(),
            maps_total: job.maps_total,
            maps_completed: job.maps_completed,
            reduces_total: job.reduces_total,
            reduces_completed: job.reduces_completed,
            job_status: job.job_status,
            cache_affinity: job.cache_affinity,
            start_time_ms: job.start_time_ms,
            finish_time_ms: job.finish_time_ms,
            tasks,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n").map_err(|e| Error::io("<history>", e))?;
    }
    Ok(())
}

pub fn parse_history<R: BufRead>(r: R) -> Result<JobHistory> {
    let mut history = JobHistory::default();
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<history>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JobLine = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: lineno,
            msg: e.to_string(),
        })?;
        if parsed.maps_completed > parsed.maps_total
            || parsed.reduces_completed > parsed.reduces_total
        {
            return Err(Error::MalformedLine {
                line: lineno,
                msg: format!("job {}: completed exceeds total", parsed.job_name),
            });
        }
        for t in &parsed.tasks {
            history.tasks.push(TaskRecord {
                job_name: parsed.job_name.clone(),
                task_type: t.task_type,
                task_status: t.task_status,
                avg_map_time_ms: t.avg_map_time_ms,
                avg_reduce_time_ms: t.avg_reduce_time_ms,
                progress_pct: t.progress_pct,
            });
        }
        history.jobs.push(JobRecord {
            job_name: parsed.job_name,
            maps_total: parsed.maps_total,
            maps_completed: parsed.maps_completed,
            reduces_total: parsed.reduces_total,
            reduces_completed: parsed.reduces_completed,
            job_status: parsed.job_status,
            cache_affinity: parsed.cache_affinity,
            start_time_ms: parsed.start_time_ms,
            finish_time_ms: parsed.finish_time_ms,
        });
    }
    Ok(history)
}

// --- labeled.csv ------------------------------------------------------------

pub const LABELED_CSV_HEADER: &str = "job_name,maps_total,maps_completed,reduces_total,\
reduces_completed,job_status,cache_affinity,start_time_ms,finish_time_ms,task_type,\
task_status,avg_map_time_ms,avg_reduce_time_ms,progress_pct,target,label";

fn enum_token<T: Serialize>(v: &T) -> String {
    // Reuse the serde snake_case names for CSV cells.
    serde_json::to_string(v)
        .expect("enum serializes")
        .trim_matches('"')
        .to_string()
}

/// Writes `labeled.csv`: job fields, task fields, target, label.
pub fn write_labeled_csv<W: Write>(rows: &[LabeledRow], mut w: W) -> Result<()> {
    let werr = |e| Error::io("<labeled.csv>", e);
    writeln!(w, "{LABELED_CSV_HEADER}").map_err(werr)?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.job.job_name,
            row.job.maps_total,
            row.job.maps_completed,
            row.job.reduces_total,
            row.job.reduces_completed,
            enum_token(&row.job.job_status),
            enum_token(&row.job.cache_affinity),
            row.job.start_time_ms,
            row.job.finish_time_ms,
            enum_token(&row.task.task_type),
            enum_token(&row.task.task_status),
            row.task.avg_map_time_ms,
            row.task.avg_reduce_time_ms,
            row.task.progress_pct,
            enum_token(&row.target),
            row.label.as_bit(),
        )
        .map_err(werr)?;
    }
    Ok(())
}

fn parse_enum<T: for<'de> Deserialize<'de>>(cell: &str, lineno: usize) -> Result<T> {
    serde_json::from_str(&format!("\"{cell}\"")).map_err(|e| Error::MalformedLine {
        line: lineno,
        msg: format!("bad enum value {cell}: {e}"),
    })
}

pub fn parse_labeled_csv<R: BufRead>(r: R) -> Result<Vec<LabeledRow>> {
    let mut rows = Vec::new();
    let mut lines = r.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io("<labeled.csv>", e))?,
        None => return Err(Error::EmptyDataset),
    };
    if header.trim() != LABELED_CSV_HEADER {
        return Err(Error::MalformedLine {
            line: 1,
            msg: "unexpected labeled.csv header".into(),
        });
    }
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<labeled.csv>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 16 {
            return Err(Error::MalformedLine {
                line: lineno,
                msg: format!("expected 16 fields, got {}", cells.len()),
            });
        }
        let num = |idx: usize| -> Result<u64> {
            cells[idx].parse().map_err(|_| Error::MalformedLine {
                line: lineno,
                msg: format!("bad integer {}", cells[idx]),
            })
        };
        let label_bit: u8 = cells[15].parse().map_err(|_| Error::MalformedLine {
            line: lineno,
            msg: format!("bad label {}", cells[15]),
        })?;
        rows.push(LabeledRow {
            job: JobRecord {
                job_name: cells[0].to_string(),
                maps_total: num(1)?,
                maps_completed: num(2)?,
                reduces_total: num(3)?,
                reduces_completed: num(4)?,
                job_status: parse_enum(cells[5], lineno)?,
                cache_affinity: parse_enum(cells[6], lineno)?,
                start_time_ms: num(7)?,
                finish_time_ms: num(8)?,
            },
            task: TaskRecord {
                job_name: cells[0].to_string(),
                task_type: parse_enum(cells[9], lineno)?,
                task_status: parse_enum(cells[10], lineno)?,
                avg_map_time_ms: num(11)?,
                avg_reduce_time_ms: num(12)?,
                progress_pct: cells[13].parse().map_err(|_| Error::MalformedLine {
                    line: lineno,
                    msg: format!("bad progress {}", cells[13]),
                })?,
            },
            target: parse_enum(cells[14], lineno)?,
            label: Label::from_bit(label_bit).ok_or_else(|| Error::MalformedLine {
                line: lineno,
                msg: format!("label must be 0 or 1, got {label_bit}"),
            })?,
        });
    }
    Ok(rows)
}
