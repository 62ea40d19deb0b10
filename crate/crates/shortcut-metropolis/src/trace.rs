//! Trace records shared by the standard and short-cut runners.

use crate::targets::StateVector;

/// How a trace record came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Produced by an actual density evaluation.
    Computed,
    /// Bitwise duplicate of the record at the given earlier index.
    Copied(usize),
}

impl Provenance {
    pub fn is_copied(self) -> bool {
        matches!(self, Provenance::Copied(_))
    }
}

/// One post-update state.
///
/// Record 0 of any trace is the seed state and takes no part in evaluation
/// accounting or rejection statistics.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub state: StateVector,
    pub log_density: f64,
    pub rejected: bool,
    pub provenance: Provenance,
    /// Group index within the owning sequence (0 for standard runs).
    pub group: usize,
    /// Sequence index within the owning run (0 for standard runs).
    pub sequence: usize,
    /// Stepsize in force when this record was produced.
    pub w: f64,
}

/// A flat run: seed record followed by one record per update.
#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Density evaluations performed, not counting the seed state's.
    pub evals: u64,
}

impl Trace {
    pub fn final_state(&self) -> &StateVector {
        &self.records.last().expect("trace is never empty").state
    }

    pub fn updates(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}
