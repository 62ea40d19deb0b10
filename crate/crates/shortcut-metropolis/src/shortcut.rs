//! The short-cut Metropolis engine.
//!
//! A short-cut sequence performs K = M*L Metropolis updates in M groups of L.
//! After each computed group the rejection count is compared against the
//! bounds [l, h]; a group falling outside them restores its start state and
//! reverses the direction in which the auxiliary-variable index moves.  The
//! walk then revisits states that were already computed, so the engine copies
//! them instead of recomputing; after a second reversal every remaining group
//! is a copy, and at most 2L updates ever need computation no matter how
//! large K is.
//!
//! Three executors are provided:
//!
//! * [`shortcut_sequence`]: the optimized engine, which simulates groups only
//!   until the second reversal and fills the rest of the trace by copying.
//! * [`reference_sequence`]: a literal walk over the index/direction pair
//!   that applies the step kernel at every one of the K positions.  It is
//!   deliberately unoptimized and serves as the correctness oracle: on the
//!   auxiliaries the optimized engine consumed it must produce bit-identical
//!   states, rejection flags, and group-end states.
//! * [`final_state_replay`]: a memory-light variant that stores only a couple
//!   of states and re-simulates the final state from generator checkpoints,
//!   at the cost of at most doubling the evaluation count.

use crate::mh::{t_met_apply, AuxiliaryPair, SamplerError};
use crate::rng::RandomStream;
use crate::targets::{StateVector, Target};
use crate::trace::{Provenance, Trace, TraceRecord};
use serde::{Deserialize, Serialize};

/// Tuning of one short-cut sequence.
///
/// `min_rejections`/`max_rejections` are the bounds [l, h]: a group whose
/// rejection count falls outside them triggers a reversal.  The degenerate
/// choice l = 0, h = L never reverses and reproduces standard Metropolis
/// exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub w: f64,
    pub group_size: usize,
    pub group_count: usize,
    pub min_rejections: usize,
    pub max_rejections: usize,
}

impl SequenceSpec {
    pub fn new(
        w: f64,
        group_size: usize,
        group_count: usize,
        min_rejections: usize,
        max_rejections: usize,
    ) -> Result<Self, SamplerError> {
        let spec = SequenceSpec {
            w,
            group_size,
            group_count,
            min_rejections,
            max_rejections,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if !(self.w > 0.0) || !self.w.is_finite() {
            return Err(SamplerError::InvalidSpec(format!(
                "stepsize must be positive and finite, got {}",
                self.w
            )));
        }
        if self.group_size == 0 || self.group_count == 0 {
            return Err(SamplerError::InvalidSpec(
                "group size and group count must be positive".into(),
            ));
        }
        if self.min_rejections > self.max_rejections || self.max_rejections > self.group_size {
            return Err(SamplerError::InvalidSpec(format!(
                "rejection bounds must satisfy 0 <= l <= h <= L, got l={} h={} L={}",
                self.min_rejections, self.max_rejections, self.group_size
            )));
        }
        Ok(())
    }

    /// Total updates K = M*L in one sequence.
    pub fn updates(&self) -> usize {
        self.group_size * self.group_count
    }

    /// True when the bounds can never trigger a reversal (l = 0, h = L).
    pub fn never_reverses(&self) -> bool {
        self.min_rejections == 0 && self.max_rejections == self.group_size
    }

    fn outside_bounds(&self, rejections: usize) -> bool {
        rejections < self.min_rejections || rejections > self.max_rejections
    }
}

/// A direction reversal: after `group`, the index direction changed sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReversalEvent {
    pub group: usize,
    pub direction_before: i8,
    pub direction_after: i8,
}

/// The result of one short-cut sequence.
///
/// `records` holds K+1 entries, the initial state first.  `group_ends` holds
/// the M+1 states at group boundaries; for a reversal-triggering group the
/// recorded boundary state is the group-start state, so the last entry (not
/// the last trace record) is the sequence's final state.
#[derive(Debug, Clone)]
pub struct SequenceTrace {
    pub records: Vec<TraceRecord>,
    pub group_ends: Vec<StateVector>,
    /// For each group boundary, the index of a trace record whose state is
    /// bit-identical to the boundary state (0 refers to the initial state).
    pub group_end_anchors: Vec<usize>,
    pub reversals: Vec<ReversalEvent>,
    /// Density evaluations, always equal to the number of computed records.
    pub evals: u64,
    /// The fresh auxiliary pairs drawn for each of the K update slots, in
    /// slot order; `None` marks slots the walk never visited.
    pub consumed_aux: Vec<Option<AuxiliaryPair>>,
}

impl SequenceTrace {
    pub fn final_state(&self) -> &StateVector {
        self.group_ends.last().expect("group_ends is never empty")
    }

    pub fn final_log_density(&self) -> f64 {
        let anchor = *self
            .group_end_anchors
            .last()
            .expect("anchors are never empty");
        self.records[anchor].log_density
    }

    /// Updates (excluding the seed record) produced by copying.
    pub fn copied_records(&self) -> usize {
        self.records[1..]
            .iter()
            .filter(|r| r.provenance.is_copied())
            .count()
    }

    pub fn rejection_count(&self) -> usize {
        self.records[1..].iter().filter(|r| r.rejected).count()
    }

    /// The consumed auxiliaries with unvisited slots filled by inert
    /// placeholders, for feeding to [`reference_sequence`].  The reference
    /// walk never touches an unvisited slot, so the placeholders are
    /// irrelevant to its output.
    pub fn materialized_aux(&self, dimension: usize) -> Vec<AuxiliaryPair> {
        self.consumed_aux
            .iter()
            .map(|slot| {
                slot.clone()
                    .unwrap_or_else(|| AuxiliaryPair::new(vec![0.0; dimension], 1.0))
            })
            .collect()
    }
}

/// For a backward replay that undoes update `p`, finds the earlier record
/// whose state and rejection flag both match the replayed step's output.
///
/// Undoing a rejected update re-rejects and leaves the state alone, so the
/// source is record `p` itself.  Undoing an accepted update lands on the
/// state before `p`; walking over any rejected records in between reaches
/// the record where that state was actually produced, whose flag is false
/// like the replayed acceptance's.  The rejection chain is only valid inside
/// the computed segment that starts after `segment_start`: the record at the
/// segment start belongs to the previous segment, and the segment's actual
/// predecessor state is the initial state, record 0.
fn backward_source(records: &[TraceRecord], p: usize, segment_start: usize) -> usize {
    if records[p].rejected {
        return p;
    }
    let mut q = p - 1;
    while q > segment_start && records[q].rejected {
        q -= 1;
    }
    if q == segment_start && (segment_start != 0 || records[q].rejected) {
        0
    } else {
        q
    }
}

/// Like [`backward_source`] for a group-boundary state at record `n`: walks
/// to the record where that state was produced, so anchors always reference
/// non-rejected records.
fn settle_anchor(records: &[TraceRecord], n: usize, segment_start: usize) -> usize {
    let mut q = n;
    while q > segment_start && records[q].rejected {
        q -= 1;
    }
    if q == segment_start && segment_start != 0 {
        0
    } else {
        q
    }
}

fn push_copied(records: &mut Vec<TraceRecord>, src: usize, group: usize, w: f64) {
    let rec = TraceRecord {
        state: records[src].state.clone(),
        log_density: records[src].log_density,
        rejected: records[src].rejected,
        provenance: Provenance::Copied(src),
        group,
        sequence: 0,
        w,
    };
    records.push(rec);
}

/// Runs one short-cut Metropolis sequence, drawing auxiliaries lazily from
/// `stream` in first-use order.  Replayed updates consume no randomness.
pub fn shortcut_sequence(
    target: &dyn Target,
    x0: &[f64],
    spec: &SequenceSpec,
    stream: &mut RandomStream,
) -> Result<SequenceTrace, SamplerError> {
    spec.validate()?;
    let dim = target.dimension();
    let l_size = spec.group_size;
    let k_total = spec.updates();
    let w = spec.w;

    let logpi0 = target.log_density(x0);
    if !logpi0.is_finite() {
        return Err(SamplerError::ZeroDensityStart);
    }

    let mut records: Vec<TraceRecord> = Vec::with_capacity(k_total + 1);
    records.push(TraceRecord {
        state: x0.to_vec(),
        log_density: logpi0,
        rejected: false,
        provenance: Provenance::Computed,
        group: 0,
        sequence: 0,
        w,
    });
    let mut group_ends: Vec<StateVector> = vec![x0.to_vec()];
    let mut anchors: Vec<usize> = vec![0];
    let mut reversals: Vec<ReversalEvent> = Vec::new();
    let mut consumed: Vec<Option<AuxiliaryPair>> = vec![None; k_total];
    let mut evals: u64 = 0;

    let mut x = x0.to_vec();
    let mut lpr = logpi0;
    let mut n = 0usize; // updates emitted so far

    // Upper phase: simulate groups from the initial state until one falls
    // outside the bounds.  The aux slot of upper update t is t itself.
    let mut upper_break: Option<usize> = None;
    while n < k_total {
        let g = n / l_size;
        let mut rejections = 0usize;
        for m in 0..l_size {
            let slot = n + m;
            let aux = AuxiliaryPair::draw(dim, stream);
            consumed[slot] = Some(aux.clone());
            let out = t_met_apply(target, &x, lpr, w, &aux);
            evals += 1;
            if out.rejected {
                rejections += 1;
            }
            records.push(TraceRecord {
                state: out.state.clone(),
                log_density: out.log_density,
                rejected: out.rejected,
                provenance: Provenance::Computed,
                group: g,
                sequence: 0,
                w,
            });
            x = out.state;
            lpr = out.log_density;
        }
        n += l_size;
        if spec.outside_bounds(rejections) {
            reversals.push(ReversalEvent {
                group: g,
                direction_before: 1,
                direction_after: -1,
            });
            group_ends.push(group_ends[g].clone());
            anchors.push(anchors[g]);
            upper_break = Some(n);
            break;
        }
        group_ends.push(x.clone());
        let anchor = settle_anchor(&records, n, 0);
        anchors.push(anchor);
    }

    let finish = |records, group_ends, anchors, reversals, evals, consumed| SequenceTrace {
        records,
        group_ends,
        group_end_anchors: anchors,
        reversals,
        evals,
        consumed_aux: consumed,
    };

    let Some(u1) = upper_break else {
        return Ok(finish(records, group_ends, anchors, reversals, evals, consumed));
    };

    // Copy the upper groups backward, excluding the group that triggered.
    let mut j0 = u1 as isize - l_size as isize - 1;
    while n < k_total && j0 >= 0 {
        let g = n / l_size;
        for m in 0..l_size {
            let p = j0 as usize - m + 1;
            let src = backward_source(&records, p, 0);
            push_copied(&mut records, src, g, w);
        }
        let src_group = (j0 as usize + 1 - l_size) / l_size;
        group_ends.push(group_ends[src_group].clone());
        anchors.push(anchors[src_group]);
        n += l_size;
        j0 -= l_size as isize;
    }

    if n >= k_total {
        return Ok(finish(records, group_ends, anchors, reversals, evals, consumed));
    }

    // Lower phase: restore the initial state and simulate fresh groups.  The
    // walk is now moving downward through the slot indices, so lower update
    // number m (counting from the phase start) uses slot K-1-m.
    x = x0.to_vec();
    lpr = logpi0;
    let lower0 = n;
    let mut lower_break: Option<usize> = None;
    while n < k_total {
        let g = n / l_size;
        let mut rejections = 0usize;
        for m in 0..l_size {
            let slot = k_total - 1 - (n + m - lower0);
            let aux = AuxiliaryPair::draw(dim, stream);
            consumed[slot] = Some(aux.clone());
            let out = t_met_apply(target, &x, lpr, w, &aux);
            evals += 1;
            if out.rejected {
                rejections += 1;
            }
            records.push(TraceRecord {
                state: out.state.clone(),
                log_density: out.log_density,
                rejected: out.rejected,
                provenance: Provenance::Computed,
                group: g,
                sequence: 0,
                w,
            });
            x = out.state;
            lpr = out.log_density;
        }
        n += l_size;
        if spec.outside_bounds(rejections) {
            reversals.push(ReversalEvent {
                group: g,
                direction_before: -1,
                direction_after: 1,
            });
            group_ends.push(group_ends[g].clone());
            anchors.push(anchors[g]);
            lower_break = Some(n);
            break;
        }
        group_ends.push(x.clone());
        let anchor = settle_anchor(&records, n, lower0);
        anchors.push(anchor);
    }

    let Some(l1) = lower_break else {
        return Ok(finish(records, group_ends, anchors, reversals, evals, consumed));
    };

    // After the second reversal the walk bounces between the two computed
    // segments; everything that remains is a copy.
    loop {
        // Lower segment backward, excluding the triggering group.
        let mut j0 = l1 as isize - l_size as isize - 1;
        while n < k_total && j0 >= lower0 as isize {
            let g = n / l_size;
            for m in 0..l_size {
                let p = j0 as usize - m + 1;
                let src = backward_source(&records, p, lower0);
                push_copied(&mut records, src, g, w);
            }
            let src_group = (j0 as usize + 1 - l_size) / l_size;
            group_ends.push(group_ends[src_group].clone());
            anchors.push(anchors[src_group]);
            n += l_size;
            j0 -= l_size as isize;
        }
        if n >= k_total {
            break;
        }

        // Upper segment forward, including the triggering group.
        let mut j0 = 1usize;
        while n < k_total && j0 <= u1 {
            let g = n / l_size;
            for m in 0..l_size {
                push_copied(&mut records, j0 + m, g, w);
            }
            let src_group = (j0 + l_size - 1) / l_size;
            group_ends.push(group_ends[src_group].clone());
            anchors.push(anchors[src_group]);
            if j0 + l_size - 1 == u1 {
                reversals.push(ReversalEvent {
                    group: g,
                    direction_before: 1,
                    direction_after: -1,
                });
            }
            n += l_size;
            j0 += l_size;
        }
        if n >= k_total {
            break;
        }

        // Upper segment backward, excluding the triggering group.
        let mut j0 = u1 as isize - l_size as isize - 1;
        while n < k_total && j0 >= 0 {
            let g = n / l_size;
            for m in 0..l_size {
                let p = j0 as usize - m + 1;
                let src = backward_source(&records, p, 0);
                push_copied(&mut records, src, g, w);
            }
            let src_group = (j0 as usize + 1 - l_size) / l_size;
            group_ends.push(group_ends[src_group].clone());
            anchors.push(anchors[src_group]);
            n += l_size;
            j0 -= l_size as isize;
        }
        if n >= k_total {
            break;
        }

        // Lower segment forward, including the triggering group.
        let mut j0 = lower0 + 1;
        while n < k_total && j0 <= l1 {
            let g = n / l_size;
            for m in 0..l_size {
                push_copied(&mut records, j0 + m, g, w);
            }
            let src_group = (j0 + l_size - 1) / l_size;
            group_ends.push(group_ends[src_group].clone());
            anchors.push(anchors[src_group]);
            if j0 + l_size - 1 == l1 {
                reversals.push(ReversalEvent {
                    group: g,
                    direction_before: -1,
                    direction_after: 1,
                });
            }
            n += l_size;
            j0 += l_size;
        }
        if n >= k_total {
            break;
        }
    }

    Ok(finish(records, group_ends, anchors, reversals, evals, consumed))
}

/// One step of the literal reference walk.
pub(crate) struct GroupStep {
    pub state: StateVector,
    pub log_density: f64,
    pub rejected: bool,
}

/// Applies the self-inverse group transformation to the walk state
/// `(x, i, s)` and the auxiliary array: perform L kernel applications moving
/// the index by `s` each time, then either keep the results (advancing `i` by
/// (L-1)s and negating `s`) or, when the rejection count falls outside the
/// bounds, restore everything so the whole transformation is the identity.
///
/// Returns the per-update outcomes (pre-restore, even when triggered) and
/// whether the bounds were violated.
pub(crate) fn apply_group_transform(
    target: &dyn Target,
    spec: &SequenceSpec,
    x: &mut StateVector,
    lpr: &mut f64,
    i: &mut usize,
    s: &mut i8,
    aux: &mut [AuxiliaryPair],
) -> (Vec<GroupStep>, bool) {
    let k_total = spec.updates();
    let start_x = x.clone();
    let start_lpr = *lpr;
    let start_i = *i;
    let mut touched: Vec<(usize, AuxiliaryPair)> = Vec::with_capacity(spec.group_size);
    let mut steps = Vec::with_capacity(spec.group_size);
    let mut rejections = 0usize;
    for m in 0..spec.group_size {
        if m > 0 {
            *i = (*i as isize + *s as isize).rem_euclid(k_total as isize) as usize;
        }
        touched.push((*i, aux[*i].clone()));
        let out = t_met_apply(target, x, *lpr, spec.w, &aux[*i]);
        aux[*i] = out.aux;
        if out.rejected {
            rejections += 1;
        }
        steps.push(GroupStep {
            state: out.state.clone(),
            log_density: out.log_density,
            rejected: out.rejected,
        });
        *x = out.state;
        *lpr = out.log_density;
    }
    if spec.outside_bounds(rejections) {
        *x = start_x;
        *lpr = start_lpr;
        *i = start_i;
        for (slot, saved) in touched {
            aux[slot] = saved;
        }
        (steps, true)
    } else {
        *s = -*s;
        (steps, false)
    }
}

/// Executes the walk literally: every update applies the kernel, nothing is
/// copied, and the full auxiliary array is given up front.  This is the
/// ground-truth executor the optimized engine is checked against.
pub fn reference_sequence(
    target: &dyn Target,
    x0: &[f64],
    spec: &SequenceSpec,
    auxiliaries: Vec<AuxiliaryPair>,
) -> Result<SequenceTrace, SamplerError> {
    spec.validate()?;
    let k_total = spec.updates();
    assert_eq!(
        auxiliaries.len(),
        k_total,
        "reference walk needs exactly K auxiliary pairs"
    );
    let logpi0 = target.log_density(x0);
    if !logpi0.is_finite() {
        return Err(SamplerError::ZeroDensityStart);
    }
    let w = spec.w;
    let l_size = spec.group_size;

    let consumed: Vec<Option<AuxiliaryPair>> = auxiliaries.iter().cloned().map(Some).collect();
    let mut aux = auxiliaries;
    let mut records: Vec<TraceRecord> = Vec::with_capacity(k_total + 1);
    records.push(TraceRecord {
        state: x0.to_vec(),
        log_density: logpi0,
        rejected: false,
        provenance: Provenance::Computed,
        group: 0,
        sequence: 0,
        w,
    });
    let mut group_ends: Vec<StateVector> = vec![x0.to_vec()];
    let mut anchors: Vec<usize> = vec![0];
    let mut reversals: Vec<ReversalEvent> = Vec::new();

    let mut x = x0.to_vec();
    let mut lpr = logpi0;
    let mut i = 0usize;
    let mut s: i8 = 1;
    for g in 0..spec.group_count {
        let s_before = s;
        let (steps, triggered) =
            apply_group_transform(target, spec, &mut x, &mut lpr, &mut i, &mut s, &mut aux);
        for step in steps {
            records.push(TraceRecord {
                state: step.state,
                log_density: step.log_density,
                rejected: step.rejected,
                provenance: Provenance::Computed,
                group: g,
                sequence: 0,
                w,
            });
        }
        if triggered {
            reversals.push(ReversalEvent {
                group: g,
                direction_before: s_before,
                direction_after: -s_before,
            });
            group_ends.push(group_ends[g].clone());
            anchors.push(anchors[g]);
        } else {
            group_ends.push(x.clone());
            anchors.push((g + 1) * l_size);
        }
        // Undo the transformation's direction flip (or create one after a
        // trigger), then advance the index into the next group.
        s = -s;
        i = (i as isize + s as isize).rem_euclid(k_total as isize) as usize;
    }

    Ok(SequenceTrace {
        records,
        group_ends,
        group_end_anchors: anchors,
        reversals,
        evals: k_total as u64,
        consumed_aux: consumed,
    })
}

/// Per-stepsize accounting across a schedule run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepsizeSummary {
    pub w: f64,
    /// Updates attributed to this stepsize (computed and copied).
    pub states: u64,
    pub computed: u64,
    pub copied: u64,
    pub rejections: u64,
    pub evals: u64,
    pub reversals: u64,
}

impl StepsizeSummary {
    pub fn copy_fraction(&self) -> f64 {
        if self.states == 0 {
            0.0
        } else {
            self.copied as f64 / self.states as f64
        }
    }

    /// Rejection rate over all updates, counting replayed rejections that
    /// were never actually performed.
    pub fn rejection_rate(&self) -> f64 {
        if self.states == 0 {
            0.0
        } else {
            self.rejections as f64 / self.states as f64
        }
    }
}

/// A full schedule run: the seed record followed by every sequence's K
/// update records, with copy sources rewritten to global record indexes.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub evals: u64,
    pub summaries: Vec<StepsizeSummary>,
    pub final_state: StateVector,
}

fn accumulate_summary(summaries: &mut Vec<StepsizeSummary>, spec: &SequenceSpec, tr: &SequenceTrace) {
    let entry = match summaries.iter_mut().find(|s| s.w == spec.w) {
        Some(e) => e,
        None => {
            summaries.push(StepsizeSummary {
                w: spec.w,
                states: 0,
                computed: 0,
                copied: 0,
                rejections: 0,
                evals: 0,
                reversals: 0,
            });
            summaries.last_mut().unwrap()
        }
    };
    let copied = tr.copied_records() as u64;
    let states = tr.records.len() as u64 - 1;
    entry.states += states;
    entry.copied += copied;
    entry.computed += states - copied;
    entry.rejections += tr.rejection_count() as u64;
    entry.evals += tr.evals;
    entry.reversals += tr.reversals.len() as u64;
}

/// Runs `schedule` in order for `n_cycles` cycles, each sequence starting
/// from the previous one's final state, streaming every [`SequenceTrace`] to
/// `on_sequence` instead of retaining it.  Returns the final state, the total
/// evaluation count, and per-stepsize summaries.
pub fn run_schedule_with(
    target: &dyn Target,
    x0: &[f64],
    schedule: &[SequenceSpec],
    n_cycles: u64,
    stream: &mut RandomStream,
    mut on_sequence: impl FnMut(usize, &SequenceTrace),
) -> Result<(StateVector, u64, Vec<StepsizeSummary>), SamplerError> {
    if schedule.is_empty() {
        return Err(SamplerError::InvalidSpec("schedule must be nonempty".into()));
    }
    for spec in schedule {
        spec.validate()?;
    }
    let mut x = x0.to_vec();
    let mut evals = 0u64;
    let mut summaries = Vec::new();
    let mut seq_index = 0usize;
    for _ in 0..n_cycles {
        for spec in schedule {
            let tr = shortcut_sequence(target, &x, spec, stream)?;
            evals += tr.evals;
            accumulate_summary(&mut summaries, spec, &tr);
            x = tr.final_state().clone();
            on_sequence(seq_index, &tr);
            seq_index += 1;
        }
    }
    Ok((x, evals, summaries))
}

/// Trace-collecting form of [`run_schedule_with`].
///
/// Copy provenance is rewritten to global record indexes; a copy of a
/// sequence's own initial state points at the earlier record that state was
/// taken from.
pub fn run_schedule(
    target: &dyn Target,
    x0: &[f64],
    schedule: &[SequenceSpec],
    n_cycles: u64,
    stream: &mut RandomStream,
) -> Result<RunTrace, SamplerError> {
    let mut records: Vec<TraceRecord> = Vec::new();
    records.push(TraceRecord {
        state: x0.to_vec(),
        log_density: target.log_density(x0),
        rejected: false,
        provenance: Provenance::Computed,
        group: 0,
        sequence: 0,
        w: schedule.first().map(|s| s.w).unwrap_or(0.0),
    });
    let mut seed_global = 0usize;
    let (final_state, evals, summaries) =
        run_schedule_with(target, x0, schedule, n_cycles, stream, |seq, tr| {
            let base = records.len();
            for rec in &tr.records[1..] {
                let mut rec = rec.clone();
                rec.sequence = seq;
                if let Provenance::Copied(j) = rec.provenance {
                    rec.provenance = Provenance::Copied(if j == 0 {
                        seed_global
                    } else {
                        base + j - 1
                    });
                }
                records.push(rec);
            }
            let anchor = *tr.group_end_anchors.last().unwrap();
            if anchor != 0 {
                seed_global = base + anchor - 1;
            }
        })?;
    Ok(RunTrace {
        records,
        evals,
        summaries,
        final_state,
    })
}

/// Runs one short-cut sequence keeping only a constant number of states,
/// re-simulating the final state from generator checkpoints when it falls on
/// a replayed position.  Returns the final state and the evaluation count,
/// which is at most twice that of [`shortcut_sequence`]; the stream finishes
/// at the same position as a [`shortcut_sequence`] call would.
pub fn final_state_replay(
    target: &dyn Target,
    x0: &[f64],
    spec: &SequenceSpec,
    stream: &mut RandomStream,
) -> Result<(StateVector, u64), SamplerError> {
    spec.validate()?;
    let dim = target.dimension();
    let l_size = spec.group_size;
    let k_total = spec.updates();
    let w = spec.w;

    let logpi0 = target.log_density(x0);
    if !logpi0.is_finite() {
        return Err(SamplerError::ZeroDensityStart);
    }

    let cp_start = stream.checkpoint();
    let mut anchors: Vec<usize> = vec![0];
    let mut evals = 0u64;
    let mut x = x0.to_vec();
    let mut lpr = logpi0;
    let mut n = 0usize;
    // Rejection flags of computed updates, by trace position; needed to keep
    // the anchor bookkeeping identical to the full engine's.  Flags are a
    // bit per update, so this does not reintroduce per-state storage.
    let mut flags: Vec<bool> = Vec::new();

    // Upper phase.
    let mut upper_break: Option<usize> = None;
    while n < k_total {
        let g = n / l_size;
        let mut rejections = 0usize;
        for _ in 0..l_size {
            let aux = AuxiliaryPair::draw(dim, stream);
            let out = t_met_apply(target, &x, lpr, w, &aux);
            evals += 1;
            if out.rejected {
                rejections += 1;
            }
            flags.push(out.rejected);
            x = out.state;
            lpr = out.log_density;
        }
        n += l_size;
        if spec.outside_bounds(rejections) {
            anchors.push(anchors[g]);
            upper_break = Some(n);
            break;
        }
        let mut q = n;
        while q > 0 && flags[q - 1] {
            q -= 1;
        }
        anchors.push(q);
    }

    let Some(u1) = upper_break else {
        return Ok((x, evals));
    };

    // Upper backward copies, anchors only.
    let mut j0 = u1 as isize - l_size as isize - 1;
    while n < k_total && j0 >= 0 {
        let src_group = (j0 as usize + 1 - l_size) / l_size;
        anchors.push(anchors[src_group]);
        n += l_size;
        j0 -= l_size as isize;
    }
    if n >= k_total {
        let t = finish_replay(target, x0, logpi0, w, *anchors.last().unwrap(), u1, n, None, stream, &cp_start, &mut evals)?;
        return Ok((t, evals));
    }

    // Lower phase.
    x = x0.to_vec();
    lpr = logpi0;
    let lower0 = n;
    let cp_lower = stream.checkpoint();
    let mut lower_flags: Vec<bool> = Vec::new();
    let mut lower_break: Option<usize> = None;
    while n < k_total {
        let g = n / l_size;
        let mut rejections = 0usize;
        for _ in 0..l_size {
            let aux = AuxiliaryPair::draw(dim, stream);
            let out = t_met_apply(target, &x, lpr, w, &aux);
            evals += 1;
            if out.rejected {
                rejections += 1;
            }
            lower_flags.push(out.rejected);
            x = out.state;
            lpr = out.log_density;
        }
        n += l_size;
        if spec.outside_bounds(rejections) {
            anchors.push(anchors[g]);
            lower_break = Some(n);
            break;
        }
        let mut q = n;
        while q > lower0 && lower_flags[q - lower0 - 1] {
            q -= 1;
        }
        anchors.push(if q == lower0 { 0 } else { q });
    }

    let Some(l1) = lower_break else {
        return Ok((x, evals));
    };

    // Copy phases, anchors only.
    loop {
        let mut j0 = l1 as isize - l_size as isize - 1;
        while n < k_total && j0 >= lower0 as isize {
            anchors.push(anchors[(j0 as usize + 1 - l_size) / l_size]);
            n += l_size;
            j0 -= l_size as isize;
        }
        if n >= k_total {
            break;
        }
        let mut j0 = 1usize;
        while n < k_total && j0 <= u1 {
            anchors.push(anchors[(j0 + l_size - 1) / l_size]);
            n += l_size;
            j0 += l_size;
        }
        if n >= k_total {
            break;
        }
        let mut j0 = u1 as isize - l_size as isize - 1;
        while n < k_total && j0 >= 0 {
            anchors.push(anchors[(j0 as usize + 1 - l_size) / l_size]);
            n += l_size;
            j0 -= l_size as isize;
        }
        if n >= k_total {
            break;
        }
        let mut j0 = lower0 + 1;
        while n < k_total && j0 <= l1 {
            anchors.push(anchors[(j0 + l_size - 1) / l_size]);
            n += l_size;
            j0 += l_size;
        }
        if n >= k_total {
            break;
        }
    }

    let t = finish_replay(
        target,
        x0,
        logpi0,
        w,
        *anchors.last().unwrap(),
        u1,
        lower0,
        Some(&cp_lower),
        stream,
        &cp_start,
        &mut evals,
    )?;
    Ok((t, evals))
}

/// Re-simulates the state at trace position `anchor` from the appropriate
/// checkpoint and returns it, leaving the stream at its end-of-sequence
/// position.
#[allow(clippy::too_many_arguments)]
fn finish_replay(
    target: &dyn Target,
    x0: &[f64],
    logpi0: f64,
    w: f64,
    anchor: usize,
    u1: usize,
    lower0: usize,
    cp_lower: Option<&crate::rng::RngCheckpoint>,
    stream: &mut RandomStream,
    cp_start: &crate::rng::RngCheckpoint,
    evals: &mut u64,
) -> Result<StateVector, SamplerError> {
    if anchor == 0 {
        return Ok(x0.to_vec());
    }
    let cp_end = stream.checkpoint();
    let dim = target.dimension();
    let (cp, steps) = if anchor <= u1 {
        (cp_start, anchor)
    } else {
        debug_assert!(anchor > lower0);
        (
            cp_lower.expect("lower anchors require a lower-phase checkpoint"),
            anchor - lower0,
        )
    };
    stream
        .restore(cp)
        .expect("checkpoint was taken by this stream");
    let mut x = x0.to_vec();
    let mut lpr = logpi0;
    for _ in 0..steps {
        let aux = AuxiliaryPair::draw(dim, stream);
        let out = t_met_apply(target, &x, lpr, w, &aux);
        *evals += 1;
        x = out.state;
        lpr = out.log_density;
    }
    stream
        .restore(&cp_end)
        .expect("checkpoint was taken by this stream");
    Ok(x)
}

/// Converts a run over a single never-reversing spec into a flat trace, for
/// comparison against the standard runner.
pub fn sequence_as_trace(tr: &SequenceTrace) -> Trace {
    Trace {
        records: tr.records.clone(),
        evals: tr.evals,
    }
}
