//! Result of one or more propagator invocations.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{MipModel, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    #[serde(rename = "lb")]
    Lower,
    #[serde(rename = "ub")]
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundChange {
    pub var: VarId,
    pub side: BoundSide,
    #[serde(with = "crate::ext_real")]
    pub old: f64,
    #[serde(with = "crate::ext_real")]
    pub new: f64,
}

/// Bound changes plus the activity counters reported per handler.
///
/// `calls`, `domain_reductions`, `cutoffs` and `prop_time` describe the
/// semantic handlers that contributed to this outcome; `bound_changes` lists
/// every change, including those found by plain row tightening inside a
/// fixpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropagationOutcome {
    pub calls: u64,
    pub domain_reductions: u64,
    pub cutoffs: u64,
    #[serde(rename = "prop_time_ms", with = "duration_ms")]
    pub prop_time: Duration,
    pub cutoff: bool,
    /// The fixpoint stopped at its round cap rather than at a fixpoint.
    #[serde(default)]
    pub round_limit_hit: bool,
    pub bound_changes: Vec<BoundChange>,
}

impl PropagationOutcome {
    /// A fresh outcome for a single call.
    pub fn call() -> Self {
        PropagationOutcome {
            calls: 1,
            ..Default::default()
        }
    }

    pub fn record(&mut self, change: BoundChange) {
        self.bound_changes.push(change);
        self.domain_reductions += 1;
    }

    pub fn set_cutoff(&mut self) {
        if !self.cutoff {
            self.cutoff = true;
            self.cutoffs += 1;
        }
    }

    pub fn changed(&self) -> bool {
        !self.bound_changes.is_empty()
    }

    /// Folds another outcome into this one, counters included.
    pub fn absorb(&mut self, other: PropagationOutcome) {
        self.calls += other.calls;
        self.domain_reductions += other.domain_reductions;
        self.cutoffs += other.cutoffs;
        self.prop_time += other.prop_time;
        self.cutoff |= other.cutoff;
        self.round_limit_hit |= other.round_limit_hit;
        self.bound_changes.extend(other.bound_changes);
    }

    /// Folds in the changes of a sub-step performed inside this handler call:
    /// they count as this handler's reductions, and a cutoff counts once.
    pub fn absorb_step(&mut self, other: PropagationOutcome) {
        self.domain_reductions += other.bound_changes.len() as u64;
        self.bound_changes.extend(other.bound_changes);
        if other.cutoff {
            self.set_cutoff();
        }
    }

    /// Folds in only the bound changes and the cutoff flag. Row-level work
    /// inside a fixpoint goes through here so it does not inflate the handler
    /// counters.
    pub fn absorb_changes(&mut self, other: PropagationOutcome) {
        self.cutoff |= other.cutoff;
        self.bound_changes.extend(other.bound_changes);
    }
}

impl PropagationOutcome {
    /// Listing document with variable names; `prop_time_ms` only when
    /// `timings` is set, so untimed documents repeat byte for byte.
    pub fn to_named_json(&self, model: &MipModel, records: usize, timings: bool) -> serde_json::Value {
        let changes: Vec<serde_json::Value> = self
            .bound_changes
            .iter()
            .map(|c| {
                serde_json::json!({
                    "var": model.variables.get(c.var).map_or("?", |v| v.name.as_str()),
                    "side": c.side,
                    "old": ext_json(c.old),
                    "new": ext_json(c.new),
                })
            })
            .collect();
        let mut doc = serde_json::json!({
            "schema": 1,
            "records": records,
            "cutoff": self.cutoff,
            "round_limit_hit": self.round_limit_hit,
            "calls": self.calls,
            "domain_reductions": self.domain_reductions,
            "cutoffs": self.cutoffs,
            "bound_changes": changes,
        });
        if timings {
            doc["prop_time_ms"] = serde_json::json!(self.prop_time.as_secs_f64() * 1e3);
        }
        doc
    }
}

fn ext_json(x: f64) -> serde_json::Value {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        x.into()
    }
}

pub(crate) mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1000.0)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let ms = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(ms.max(0.0) / 1000.0))
    }
}
