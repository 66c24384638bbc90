//! Family-specific payloads carried by a [`SemanticRecord`](super::SemanticRecord).
//!
//! Every payload is generic over the variable handle `V` and the row handle
//! `R` so the same types describe records keyed by dense ids and records keyed
//! by names (the JSON form). `map_ids` converts between the two; `canonicalize`
//! sorts every order-insensitive list so two records describing the same
//! structure compare equal.

use serde::{Deserialize, Serialize};

/// Converts the handles of one record into another handle space.
pub struct IdMapper<'a, V, R, V2, R2> {
    pub var: &'a dyn Fn(&V) -> Result<V2, String>,
    pub row: &'a dyn Fn(&R) -> Result<R2, String>,
}

impl<V, R, V2, R2> IdMapper<'_, V, R, V2, R2> {
    pub fn v(&self, v: &V) -> Result<V2, String> {
        (self.var)(v)
    }

    pub fn r(&self, r: &R) -> Result<R2, String> {
        (self.row)(r)
    }

    pub fn vs(&self, vs: &[V]) -> Result<Vec<V2>, String> {
        vs.iter().map(|v| self.v(v)).collect()
    }

    pub fn rs(&self, rs: &[R]) -> Result<Vec<R2>, String> {
        rs.iter().map(|r| self.r(r)).collect()
    }

    fn vss(&self, vss: &[Vec<V>]) -> Result<Vec<Vec<V2>>, String> {
        vss.iter().map(|vs| self.vs(vs)).collect()
    }

    fn opt(&self, v: &Option<V>) -> Result<Option<V2>, String> {
        v.as_ref().map(|v| self.v(v)).transpose()
    }
}

/// Sorts `keys` and applies the same reordering to `payload`.
fn sort_parallel<K: Ord + Clone, P: Clone>(keys: &mut [K], payload: &mut [P]) {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let k: Vec<K> = order.iter().map(|&i| keys[i].clone()).collect();
    let p: Vec<P> = order.iter().map(|&i| payload[i].clone()).collect();
    keys.clone_from_slice(&k);
    payload.clone_from_slice(&p);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllDifferentParams<V> {
    /// One list per item; each item takes exactly one value.
    pub items: Vec<Vec<V>>,
    /// One list per value; each value is used at most once.
    pub values: Vec<Vec<V>>,
    /// Every value column is an equality (a permutation grid).
    pub values_exact: bool,
}

impl<V: Clone> AllDifferentParams<V> {
    pub fn map_ids<R, V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<AllDifferentParams<V2>, String> {
        Ok(AllDifferentParams {
            items: m.vss(&self.items)?,
            values: m.vss(&self.values)?,
            values_exact: self.values_exact,
        })
    }
}

impl<V: Ord + Clone> AllDifferentParams<V> {
    pub fn canonicalize(&mut self) {
        for list in self.items.iter_mut().chain(self.values.iter_mut()) {
            list.sort();
        }
        self.items.sort();
        self.values.sort();
        // A square grid with equalities on both sides reads the same from
        // either side; pick the lexicographically smaller orientation.
        if self.values_exact && self.items.len() == self.values.len() && self.values < self.items {
            std::mem::swap(&mut self.items, &mut self.values);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardinalityParams<V> {
    pub vars: Vec<V>,
    pub lower: f64,
    pub upper: f64,
}

impl<V: Clone> CardinalityParams<V> {
    pub fn map_ids<R, V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<CardinalityParams<V2>, String> {
        Ok(CardinalityParams {
            vars: m.vs(&self.vars)?,
            lower: self.lower,
            upper: self.upper,
        })
    }
}

impl<V: Ord> CardinalityParams<V> {
    pub fn canonicalize(&mut self) {
        self.vars.sort();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelOption<V> {
    pub value: f64,
    pub indicator: V,
}

/// `x = sum(value * indicator)` with exactly one indicator set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<V> {
    pub x: V,
    pub options: Vec<ChannelOption<V>>,
}

impl<V: Clone> ChannelParams<V> {
    pub fn map_ids<R, V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<ChannelParams<V2>, String> {
        Ok(ChannelParams {
            x: m.v(&self.x)?,
            options: self
                .options
                .iter()
                .map(|o| {
                    Ok(ChannelOption {
                        value: o.value,
                        indicator: m.v(&o.indicator)?,
                    })
                })
                .collect::<Result<_, String>>()?,
        })
    }
}

impl<V> ChannelParams<V> {
    pub fn canonicalize(&mut self) {
        self.options.sort_by(|a, b| a.value.total_cmp(&b.value));
    }
}

/// One start choice of a task and the periods (capacity rows) it occupies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOption<V, R> {
    pub var: V,
    pub periods: Vec<R>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeTask<V, R> {
    pub demand: f64,
    pub duration: usize,
    pub starts: Vec<StartOption<V, R>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeParams<V, R> {
    pub capacity: f64,
    pub tasks: Vec<CumulativeTask<V, R>>,
}

impl<V: Clone, R: Clone> CumulativeParams<V, R> {
    pub fn map_ids<V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<CumulativeParams<V2, R2>, String> {
        let mut tasks = Vec::with_capacity(self.tasks.len());
        for t in &self.tasks {
            let mut starts = Vec::with_capacity(t.starts.len());
            for s in &t.starts {
                starts.push(StartOption {
                    var: m.v(&s.var)?,
                    periods: m.rs(&s.periods)?,
                });
            }
            tasks.push(CumulativeTask {
                demand: t.demand,
                duration: t.duration,
                starts,
            });
        }
        Ok(CumulativeParams {
            capacity: self.capacity,
            tasks,
        })
    }
}

impl<V: Ord, R: Ord> CumulativeParams<V, R> {
    pub fn canonicalize(&mut self) {
        for t in &mut self.tasks {
            for s in &mut t.starts {
                s.periods.sort();
            }
            t.starts.sort_by(|a, b| a.var.cmp(&b.var));
        }
        self.tasks.sort_by(|a, b| a.starts.first().map(|s| &s.var).cmp(&b.starts.first().map(|s| &s.var)));
    }
}

/// Value indicators `values[v]`, item assignment grid `items[i][v]` and the
/// count variable with `count = sum(values)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NValueParams<V> {
    pub count: V,
    pub values: Vec<V>,
    pub items: Vec<Vec<Option<V>>>,
    /// `value <= sum of its item indicators` rows are present.
    pub upper_link: bool,
}

impl<V: Clone> NValueParams<V> {
    pub fn map_ids<R, V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<NValueParams<V2>, String> {
        Ok(NValueParams {
            count: m.v(&self.count)?,
            values: m.vs(&self.values)?,
            items: self
                .items
                .iter()
                .map(|row| row.iter().map(|c| m.opt(c)).collect::<Result<Vec<_>, String>>())
                .collect::<Result<_, String>>()?,
            upper_link: self.upper_link,
        })
    }
}

impl<V: Ord + Clone> NValueParams<V> {
    pub fn canonicalize(&mut self) {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].cmp(&self.values[b]));
        self.values = order.iter().map(|&i| self.values[i].clone()).collect();
        for row in &mut self.items {
            *row = order.iter().map(|&i| row[i].clone()).collect();
        }
        self.items.sort();
    }
}

/// Binary sequence whose runs of ones have length at least `min_run`
/// (truncated at the horizon) and at most `max_run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchParams<V> {
    pub sequence: Vec<V>,
    pub starts: Vec<V>,
    pub min_run: usize,
    pub max_run: Option<usize>,
}

impl<V: Clone> StretchParams<V> {
    pub fn map_ids<R, V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<StretchParams<V2>, String> {
        Ok(StretchParams {
            sequence: m.vs(&self.sequence)?,
            starts: m.vs(&self.starts)?,
            min_run: self.min_run,
            max_run: self.max_run,
        })
    }

    pub fn canonicalize(&mut self) {}
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotResourceParams<V> {
    pub groups: Vec<Vec<V>>,
    pub costs: Vec<Vec<f64>>,
    pub budget: f64,
    /// Variables of the capacity row outside the groups, with coefficients.
    pub external: Vec<(V, f64)>,
    /// Smallest contribution of `external` under the original bounds.
    pub external_min: f64,
}

impl<V: Clone> OneHotResourceParams<V> {
    pub fn map_ids<R, V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<OneHotResourceParams<V2>, String> {
        Ok(OneHotResourceParams {
            groups: m.vss(&self.groups)?,
            costs: self.costs.clone(),
            budget: self.budget,
            external: self
                .external
                .iter()
                .map(|(v, c)| Ok((m.v(v)?, *c)))
                .collect::<Result<_, String>>()?,
            external_min: self.external_min,
        })
    }
}

impl<V: Ord + Clone> OneHotResourceParams<V> {
    pub fn canonicalize(&mut self) {
        for (g, c) in self.groups.iter_mut().zip(self.costs.iter_mut()) {
            sort_parallel(g, c);
        }
        sort_parallel(&mut self.groups, &mut self.costs);
        self.external.sort_by(|a, b| a.0.cmp(&b.0));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivatorParams<V> {
    pub activators: Vec<V>,
    /// Activator of each selector, aligned with `groups`.
    pub selector_activator: Vec<Vec<Option<V>>>,
    pub open_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleneckParams<V> {
    pub groups: Vec<Vec<V>>,
    /// `None` where a selector has no link row.
    pub weights: Vec<Vec<Option<f64>>>,
    pub bottleneck: V,
    pub activators: Option<ActivatorParams<V>>,
}

impl<V: Clone> BottleneckParams<V> {
    pub fn map_ids<R, V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<BottleneckParams<V2>, String> {
        let activators = match &self.activators {
            None => None,
            Some(a) => Some(ActivatorParams {
                activators: m.vs(&a.activators)?,
                selector_activator: a
                    .selector_activator
                    .iter()
                    .map(|row| row.iter().map(|c| m.opt(c)).collect::<Result<Vec<_>, String>>())
                    .collect::<Result<_, String>>()?,
                open_count: a.open_count,
            }),
        };
        Ok(BottleneckParams {
            groups: m.vss(&self.groups)?,
            weights: self.weights.clone(),
            bottleneck: m.v(&self.bottleneck)?,
            activators,
        })
    }
}

impl<V: Ord + Clone> BottleneckParams<V> {
    pub fn canonicalize(&mut self) {
        let n = self.groups.len();
        let mut sel_act = match &self.activators {
            Some(a) => a.selector_activator.clone(),
            None => self.groups.iter().map(|g| vec![None; g.len()]).collect(),
        };
        let mut payload: Vec<Vec<(Option<f64>, Option<V>)>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut p: Vec<(Option<f64>, Option<V>)> =
                self.weights[i].iter().cloned().zip(sel_act[i].iter().cloned()).collect();
            sort_parallel(&mut self.groups[i], &mut p);
            payload.push(p);
        }
        sort_parallel(&mut self.groups, &mut payload);
        self.weights = payload.iter().map(|p| p.iter().map(|x| x.0).collect()).collect();
        sel_act = payload.into_iter().map(|p| p.into_iter().map(|x| x.1).collect()).collect();
        if let Some(a) = &mut self.activators {
            a.activators.sort();
            a.selector_activator = sel_act;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RosterRole {
    WorkWind,
    RestWind,
    Flow,
    Dem,
    Sos,
    Hlb,
    Hub,
    Lba,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow<V> {
    pub vars: Vec<V>,
    pub requirement: f64,
}

/// One day: the per-nurse at-most-one rows and the per-shift coverage rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterDay<V> {
    pub nurses: Vec<Vec<V>>,
    pub coverage: Vec<CoverageRow<V>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosteringParams<V, R> {
    pub days: Vec<RosterDay<V>>,
    pub roles: Vec<(R, RosterRole)>,
}

impl<V: Clone, R: Clone> RosteringParams<V, R> {
    pub fn map_ids<V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<RosteringParams<V2, R2>, String> {
        let mut days = Vec::with_capacity(self.days.len());
        for d in &self.days {
            days.push(RosterDay {
                nurses: m.vss(&d.nurses)?,
                coverage: d
                    .coverage
                    .iter()
                    .map(|c| {
                        Ok(CoverageRow {
                            vars: m.vs(&c.vars)?,
                            requirement: c.requirement,
                        })
                    })
                    .collect::<Result<_, String>>()?,
            });
        }
        Ok(RosteringParams {
            days,
            roles: self
                .roles
                .iter()
                .map(|(r, role)| Ok((m.r(r)?, *role)))
                .collect::<Result<_, String>>()?,
        })
    }
}

impl<V: Ord, R: Ord> RosteringParams<V, R> {
    pub fn canonicalize(&mut self) {
        for d in &mut self.days {
            for n in &mut d.nurses {
                n.sort();
            }
            d.nurses.sort();
            for c in &mut d.coverage {
                c.vars.sort();
            }
            d.coverage.sort_by(|a, b| a.vars.cmp(&b.vars));
        }
        self.days.sort_by(|a, b| a.nurses.cmp(&b.nurses));
        self.roles.sort();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UcRole {
    Demand,
    Reserve,
    Link,
    Ramp,
    MinUp,
    Logic,
}

/// Per-period variables of one generator plus its limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcGenerator<V> {
    pub status: Vec<V>,
    pub startup: Vec<V>,
    pub shutdown: Vec<V>,
    pub power: Vec<V>,
    pub reserve: Vec<Option<V>>,
    pub p_min: f64,
    pub p_max: f64,
    pub ramp_up: f64,
    pub startup_ramp: f64,
    pub initial_status: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCommitmentParams<V, R> {
    pub generators: Vec<UcGenerator<V>>,
    pub demand: Vec<f64>,
    /// Empty when there are no reserve rows.
    pub reserve: Vec<f64>,
    pub roles: Vec<(R, UcRole)>,
}

impl<V: Clone, R: Clone> UnitCommitmentParams<V, R> {
    pub fn map_ids<V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<UnitCommitmentParams<V2, R2>, String> {
        let mut generators = Vec::with_capacity(self.generators.len());
        for g in &self.generators {
            generators.push(UcGenerator {
                status: m.vs(&g.status)?,
                startup: m.vs(&g.startup)?,
                shutdown: m.vs(&g.shutdown)?,
                power: m.vs(&g.power)?,
                reserve: g.reserve.iter().map(|r| m.opt(r)).collect::<Result<_, String>>()?,
                p_min: g.p_min,
                p_max: g.p_max,
                ramp_up: g.ramp_up,
                startup_ramp: g.startup_ramp,
                initial_status: g.initial_status,
            });
        }
        Ok(UnitCommitmentParams {
            generators,
            demand: self.demand.clone(),
            reserve: self.reserve.clone(),
            roles: self
                .roles
                .iter()
                .map(|(r, role)| Ok((m.r(r)?, *role)))
                .collect::<Result<_, String>>()?,
        })
    }
}

impl<V: Ord, R: Ord> UnitCommitmentParams<V, R> {
    pub fn canonicalize(&mut self) {
        self.generators.sort_by(|a, b| a.status.cmp(&b.status));
        self.roles.sort();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisjVariant {
    BinarySelector,
    ExactOneMode,
}

/// `terms <= rhs` once the guard is at its active value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow<V, R> {
    pub row: R,
    pub terms: Vec<(V, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjBranch<V, R> {
    pub selector: V,
    /// Value of `selector` that activates the rows.
    pub active_value: f64,
    pub rows: Vec<BranchRow<V, R>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjPolyhedralParams<V, R> {
    pub variant: DisjVariant,
    pub branches: Vec<DisjBranch<V, R>>,
    pub touched: Vec<V>,
}

impl<V: Clone, R: Clone> DisjPolyhedralParams<V, R> {
    pub fn map_ids<V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<DisjPolyhedralParams<V2, R2>, String> {
        let mut branches = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            let mut rows = Vec::with_capacity(b.rows.len());
            for row in &b.rows {
                rows.push(BranchRow {
                    row: m.r(&row.row)?,
                    terms: row
                        .terms
                        .iter()
                        .map(|(v, c)| Ok((m.v(v)?, *c)))
                        .collect::<Result<_, String>>()?,
                    rhs: row.rhs,
                });
            }
            branches.push(DisjBranch {
                selector: m.v(&b.selector)?,
                active_value: b.active_value,
                rows,
            });
        }
        Ok(DisjPolyhedralParams {
            variant: self.variant,
            branches,
            touched: m.vs(&self.touched)?,
        })
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }
}

impl<V: Ord, R: Ord> DisjPolyhedralParams<V, R> {
    pub fn canonicalize(&mut self) {
        for b in &mut self.branches {
            for row in &mut b.rows {
                row.terms.sort_by(|x, y| x.0.cmp(&y.0));
            }
            b.rows.sort_by(|x, y| x.row.cmp(&y.row));
        }
        self.branches
            .sort_by(|a, b| a.selector.cmp(&b.selector).then(a.active_value.total_cmp(&b.active_value)));
        self.touched.sort();
    }
}

/// The payload of a record, tagged by family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum RecordParams<V, R> {
    AllDifferent(AllDifferentParams<V>),
    Cardinality(CardinalityParams<V>),
    Channel(ChannelParams<V>),
    Cumulative(CumulativeParams<V, R>),
    NValue(NValueParams<V>),
    Stretch(StretchParams<V>),
    OneHotResource(OneHotResourceParams<V>),
    BottleneckExactOne(BottleneckParams<V>),
    RosteringWindow(RosteringParams<V, R>),
    UnitCommitmentRamp(UnitCommitmentParams<V, R>),
    DisjPolyhedral(DisjPolyhedralParams<V, R>),
}

impl<V: Clone, R: Clone> RecordParams<V, R> {
    pub fn map_ids<V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<RecordParams<V2, R2>, String> {
        use RecordParams::*;
        Ok(match self {
            AllDifferent(p) => AllDifferent(p.map_ids(m)?),
            Cardinality(p) => Cardinality(p.map_ids(m)?),
            Channel(p) => Channel(p.map_ids(m)?),
            Cumulative(p) => Cumulative(p.map_ids(m)?),
            NValue(p) => NValue(p.map_ids(m)?),
            Stretch(p) => Stretch(p.map_ids(m)?),
            OneHotResource(p) => OneHotResource(p.map_ids(m)?),
            BottleneckExactOne(p) => BottleneckExactOne(p.map_ids(m)?),
            RosteringWindow(p) => RosteringWindow(p.map_ids(m)?),
            UnitCommitmentRamp(p) => UnitCommitmentRamp(p.map_ids(m)?),
            DisjPolyhedral(p) => DisjPolyhedral(p.map_ids(m)?),
        })
    }
}

impl<V: Ord + Clone, R: Ord + Clone> RecordParams<V, R> {
    pub fn canonicalize(&mut self) {
        use RecordParams::*;
        match self {
            AllDifferent(p) => p.canonicalize(),
            Cardinality(p) => p.canonicalize(),
            Channel(p) => p.canonicalize(),
            Cumulative(p) => p.canonicalize(),
            NValue(p) => p.canonicalize(),
            Stretch(p) => p.canonicalize(),
            OneHotResource(p) => p.canonicalize(),
            BottleneckExactOne(p) => p.canonicalize(),
            RosteringWindow(p) => p.canonicalize(),
            UnitCommitmentRamp(p) => p.canonicalize(),
            DisjPolyhedral(p) => p.canonicalize(),
        }
    }
}
