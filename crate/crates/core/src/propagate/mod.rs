//! Bound propagation over detected records.
//!
//! Each family has a handler that shrinks a [`DomainBox`] without removing any
//! feasible point. [`run_fixpoint`] drives all handlers (and optionally plain
//! row tightening) round-robin until nothing changes.

mod block;
mod bottleneck;
mod cp;
mod disjunction;
mod onehot;

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detect::{Family, RecordParams, SemanticRecord};
use crate::model::{tighten_row, DomainBox, MipModel, Tolerances, VarId};
use crate::outcome::PropagationOutcome;

pub use block::{propagate_block_fixpoint, propagate_rows_fixpoint};
pub use bottleneck::propagate_bottleneck_exact_one;
pub use cp::{
    propagate_all_different, propagate_cardinality, propagate_channel, propagate_cumulative, propagate_nvalue,
    propagate_stretch,
};
pub use disjunction::propagate_disj_polyhedral;
pub use onehot::propagate_one_hot_resource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub max_fixpoint_rounds: usize,
    pub tolerances: Tolerances,
    /// Families whose handlers are skipped.
    pub disabled: BTreeSet<Family>,
    /// Also run plain row tightening over every model row inside
    /// [`run_fixpoint`].
    pub include_rows: bool,
    /// Coverage-based radius rule of the bottleneck handler.
    pub radius_rule: bool,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            max_fixpoint_rounds: 100,
            tolerances: Tolerances::default(),
            disabled: BTreeSet::new(),
            include_rows: true,
            radius_rule: false,
        }
    }
}

impl PropagatorConfig {
    pub fn is_enabled(&self, family: Family) -> bool {
        !self.disabled.contains(&family)
    }

    pub fn rounds(&self) -> usize {
        self.max_fixpoint_rounds.max(1)
    }
}

/// True when every listed variable exists in the box and is currently a
/// 0/1 integer variable. Handlers that rely on one-hot semantics bail out
/// otherwise.
pub(crate) fn all_binary(dom: &DomainBox, vars: impl IntoIterator<Item = VarId>) -> bool {
    vars.into_iter().all(|v| v < dom.len() && dom.is_binary(v))
}

pub(crate) fn all_present(dom: &DomainBox, vars: impl IntoIterator<Item = VarId>) -> bool {
    vars.into_iter().all(|v| v < dom.len())
}

/// Exact-one closure on one group: a fixed one zeroes the rest, a single
/// live option is fixed to one, no live option is a cutoff. Returns true
/// when something changed.
pub(crate) fn exact_one_closure(
    dom: &mut DomainBox,
    group: &[VarId],
    tol: &Tolerances,
    out: &mut PropagationOutcome,
) -> bool {
    let mut changed = false;
    let ones: Vec<VarId> = group.iter().copied().filter(|&v| dom.is_fixed_one(v)).collect();
    if ones.len() > 1 {
        dom.mark_empty();
        out.set_cutoff();
        return false;
    }
    if let Some(&one) = ones.first() {
        for &v in group {
            if v != one {
                changed |= dom.tighten_ub(v, 0.0, tol, out);
            }
        }
        return changed;
    }
    let live: Vec<VarId> = group.iter().copied().filter(|&v| dom.is_live(v)).collect();
    match live.len() {
        0 => {
            dom.mark_empty();
            out.set_cutoff();
        }
        1 => changed |= dom.tighten_lb(live[0], 1.0, tol, out),
        _ => {}
    }
    changed
}

/// Runs the handler of `record` once (each handler iterates its own rules to
/// a local fixpoint).
pub fn propagate_record(
    model: &MipModel,
    record: &SemanticRecord,
    dom: &mut DomainBox,
    config: &PropagatorConfig,
) -> PropagationOutcome {
    if !config.is_enabled(record.family()) || dom.is_empty() {
        return PropagationOutcome::default();
    }
    let start = Instant::now();
    let tol = &config.tolerances;
    let mut out = match &record.params {
        RecordParams::AllDifferent(p) => propagate_all_different(p, dom, tol),
        RecordParams::Cardinality(p) => propagate_cardinality(p, dom, tol),
        RecordParams::Channel(p) => propagate_channel(p, dom, tol),
        RecordParams::Cumulative(p) => propagate_cumulative(p, dom, tol),
        RecordParams::NValue(p) => propagate_nvalue(p, dom, tol),
        RecordParams::Stretch(p) => propagate_stretch(p, dom, tol),
        RecordParams::OneHotResource(p) => propagate_one_hot_resource(p, dom, tol),
        RecordParams::BottleneckExactOne(p) => propagate_bottleneck_exact_one(p, dom, config),
        RecordParams::RosteringWindow(_) | RecordParams::UnitCommitmentRamp(_) => {
            propagate_block_fixpoint(model, &record.evidence, dom, config)
        }
        RecordParams::DisjPolyhedral(p) => propagate_disj_polyhedral(p, dom, config),
    };
    out.prop_time = start.elapsed();
    out
}

/// Same as [`propagate_record`] for the six classic families, named after
/// the operation it implements.
pub fn propagate_cp_family(
    model: &MipModel,
    record: &SemanticRecord,
    dom: &mut DomainBox,
    config: &PropagatorConfig,
) -> PropagationOutcome {
    if !record.family().is_cp() {
        return PropagationOutcome::default();
    }
    propagate_record(model, record, dom, config)
}

/// Round-robin over the records (then, if enabled, every model row) until a
/// full round changes nothing or the round cap is reached.
pub fn run_fixpoint(
    model: &MipModel,
    records: &[SemanticRecord],
    dom: &mut DomainBox,
    config: &PropagatorConfig,
) -> PropagationOutcome {
    let mut total = PropagationOutcome::default();
    if dom.is_empty() {
        total.cutoff = true;
        return total;
    }
    let rounds = config.rounds();
    for round in 0..rounds {
        let mut changed = false;
        for record in records {
            let o = propagate_record(model, record, dom, config);
            changed |= o.changed();
            total.absorb(o);
            if dom.is_empty() {
                break;
            }
        }
        if config.include_rows && !dom.is_empty() {
            for row in &model.rows {
                let o = tighten_row(row, dom, &config.tolerances);
                changed |= o.changed();
                total.absorb_changes(o);
                if dom.is_empty() {
                    break;
                }
            }
        }
        if dom.is_empty() {
            total.cutoff = true;
            break;
        }
        if !changed {
            break;
        }
        if round + 1 == rounds {
            total.round_limit_hit = true;
            log::debug!("fixpoint stopped at the round cap ({rounds})");
        }
    }
    total
}
