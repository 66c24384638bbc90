//! Residual-activity tightening iterated over a block of rows.

use crate::model::{tighten_row, DomainBox, LinearRow, MipModel, RowId, Tolerances};
use crate::outcome::PropagationOutcome;

use super::PropagatorConfig;

/// Tightens over `rows` until a pass changes nothing or `rounds` passes ran.
/// Changes count as reductions of the calling handler.
pub fn propagate_rows_fixpoint<'a, I>(rows: I, dom: &mut DomainBox, tol: &Tolerances, rounds: usize) -> PropagationOutcome
where
    I: IntoIterator<Item = &'a LinearRow> + Clone,
{
    let mut out = PropagationOutcome::call();
    for round in 0..rounds.max(1) {
        let mut changed = false;
        for row in rows.clone() {
            let o = tighten_row(row, dom, tol);
            changed |= o.changed();
            out.absorb_step(o);
            if dom.is_empty() {
                out.set_cutoff();
                return out;
            }
        }
        if !changed {
            break;
        }
        if round + 1 == rounds.max(1) {
            out.round_limit_hit = true;
        }
    }
    out
}

/// Localised fixpoint over a block of model rows.
pub fn propagate_block_fixpoint(
    model: &MipModel,
    rows: &[RowId],
    dom: &mut DomainBox,
    config: &PropagatorConfig,
) -> PropagationOutcome {
    if rows.iter().any(|&r| r >= model.num_rows())
        || rows
            .iter()
            .any(|&r| model.rows[r].terms.iter().any(|&(v, _)| v >= dom.len()))
    {
        return PropagationOutcome::call();
    }
    propagate_rows_fixpoint(rows.iter().map(|&r| &model.rows[r]), dom, &config.tolerances, config.rounds())
}
