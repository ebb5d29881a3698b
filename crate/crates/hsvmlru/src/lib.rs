//! Trace-driven simulator and library for HDFS-style centralized cache
//! management, built around H-SVM-LRU: an LRU replacement policy whose
//! decisions are steered by a binary SVM predicting future block reuse.
//!
//! The crate is organized around the pipeline:
//!
//! * [`workload`] — synthetic MapReduce-style traces and block catalogs
//! * [`labeling`] — synthetic job histories and reuse labels from job/task status
//! * [`features`] — feature extraction, normalization, dataset splits
//! * [`svm`] — soft-margin kernel SVM trained with SMO, plus evaluation
//! * [`cache`] — per-node recency-ordered caches (LRU and H-SVM-LRU)
//! * [`cluster`] — coordinator metadata and the request-processing flow
//! * [`experiments`] — scenario suites, metrics, sweeps, and reports

pub mod cache;
pub mod cluster;
pub mod error;
pub mod experiments;
pub mod features;
pub mod labeling;
pub mod svm;
pub mod workload;

pub use error::{Error, ErrorKind, Result};

use serde::{Deserialize, Serialize};

/// Binary reuse class: will this block be requested again?
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Class 0: not requested again.
    NotReused,
    /// Class 1: requested again in the future.
    Reused,
}

impl Label {
    pub fn from_bit(bit: u8) -> Option<Label> {
        match bit {
            0 => Some(Label::NotReused),
            1 => Some(Label::Reused),
            _ => None,
        }
    }

    pub fn as_bit(self) -> u8 {
        match self {
            Label::NotReused => 0,
            Label::Reused => 1,
        }
    }

    /// Signed encoding used by the SVM: NotReused -> -1, Reused -> +1.
    pub fn as_sign(self) -> f64 {
        match self {
            Label::NotReused => -1.0,
            Label::Reused => 1.0,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_bit())
    }
}
