//! Planted instances with known structure.
//!
//! [`reverse_sample`] builds a small model of one family from a feasible
//! assignment outwards, together with the record the detector should find.
//! [`obfuscate`] then adds distractor rows, shuffles ids and flips row signs
//! while keeping the ground truth in step.

mod builder;
mod families;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{Family, NamedRecord, SemanticRecord};
use crate::model::{LinearRow, MipModel, RowId, VarId};
use crate::mps::{parse_mps, write_mps, MpsError};

use builder::{activity_range, Builder};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("bad size `{0}`: expected N, NxM or NxMxK")]
    BadSize(String),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("sidecar: {0}")]
    Sidecar(String),
}

/// Up to three size knobs; their meaning depends on the family (see
/// [`SizeParams::describe`]). Unset knobs take the family default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeParams {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
}

impl SizeParams {
    pub fn new(n: usize, m: usize) -> Self {
        SizeParams {
            n: Some(n),
            m: Some(m),
            k: None,
        }
    }

    /// What `n`, `m` and `k` mean for `family`, with defaults.
    pub fn describe(family: Family) -> &'static str {
        match family {
            Family::AllDifferent => "items (3) x values (items)",
            Family::Cardinality => "variables (6)",
            Family::Channel => "values (5)",
            Family::Cumulative => "tasks (3) x horizon (4)",
            Family::NValue => "items (2) x values (3)",
            Family::Stretch => "horizon (5) x min run (2)",
            Family::OneHotResource => "groups (2) x options (2)",
            Family::BottleneckExactOne => "groups (2) x options (3)",
            Family::RosteringWindow => "nurses (2) x days (3) x shifts (2)",
            Family::UnitCommitmentRamp => "generators (2) x periods (2)",
            Family::DisjPolyhedral => "branches (2) x variables (2)",
        }
    }
}

impl FromStr for SizeParams {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Result<Vec<usize>, _> = s.split(['x', 'X']).map(|p| p.trim().parse::<usize>()).collect();
        match parts.as_deref() {
            Ok([n]) => Ok(SizeParams {
                n: Some(*n),
                ..Default::default()
            }),
            Ok([n, m]) => Ok(SizeParams::new(*n, *m)),
            Ok([n, m, k]) => Ok(SizeParams {
                n: Some(*n),
                m: Some(*m),
                k: Some(*k),
            }),
            _ => Err(SynthError::BadSize(s.to_string())),
        }
    }
}

impl fmt::Display for SizeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = [self.n, self.m, self.k].iter().flatten().map(|x| x.to_string()).collect();
        if parts.is_empty() {
            f.write_str("default")
        } else {
            f.write_str(&parts.join("x"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    /// Fix a few scope binaries at random, which may leave the instance
    /// infeasible. The witness is dropped when it no longer fits.
    pub allow_infeasible: bool,
    /// Most integer variables a planted scope may hold, so brute-force
    /// enumeration stays cheap.
    pub scope_cap: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            allow_infeasible: false,
            scope_cap: 12,
        }
    }
}

/// `new = vars[old]`, `new = rows[old]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    pub vars: Vec<VarId>,
    pub rows: Vec<RowId>,
}

impl Permutation {
    pub fn identity(vars: usize, rows: usize) -> Self {
        Permutation {
            vars: (0..vars).collect(),
            rows: (0..rows).collect(),
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Permutation) -> Permutation {
        Permutation {
            vars: self.vars.iter().map(|&v| next.vars[v]).collect(),
            rows: self.rows.iter().map(|&r| next.rows[r]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    pub family: Family,
    pub seed: u64,
    pub model: MipModel,
    /// Canonical record the detector should recover, in current ids.
    pub ground_truth: SemanticRecord,
    /// From generation ids to current ids.
    pub permutation: Permutation,
    /// A feasible assignment, if one is known.
    pub witness: Option<Vec<f64>>,
    /// Distractor rows, in current ids.
    pub noise_rows: Vec<RowId>,
}

fn family_salt(family: Family) -> u64 {
    Family::ALL.iter().position(|&f| f == family).unwrap() as u64
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

/// Planted instance of `family` with default options.
pub fn reverse_sample(family: Family, sizes: SizeParams, seed: u64) -> Result<PlantedInstance, SynthError> {
    reverse_sample_with(family, sizes, seed, &SynthOptions::default())
}

pub fn reverse_sample_with(
    family: Family,
    sizes: SizeParams,
    seed: u64,
    options: &SynthOptions,
) -> Result<PlantedInstance, SynthError> {
    let name = format!("{}_{seed}", family.name().to_ascii_lowercase());
    let mut b = Builder::new(&name, rng_for(seed, family_salt(family)));
    let n = |d: usize| sizes.n.unwrap_or(d);
    let m = |d: usize| sizes.m.unwrap_or(d);
    let record = match family {
        Family::AllDifferent => families::all_different(&mut b, n(3), sizes.m.unwrap_or(n(3)))?,
        Family::Cardinality => families::cardinality(&mut b, n(6))?,
        Family::Channel => families::channel(&mut b, n(5))?,
        Family::Cumulative => families::cumulative(&mut b, n(3), m(4))?,
        Family::NValue => families::nvalue(&mut b, n(2), m(3))?,
        Family::Stretch => families::stretch(&mut b, n(5), m(2))?,
        Family::OneHotResource => families::one_hot(&mut b, n(2), m(2))?,
        Family::BottleneckExactOne => families::bottleneck(&mut b, n(2), m(3))?,
        Family::RosteringWindow => families::rostering(&mut b, n(2), m(3), sizes.k.unwrap_or(2))?,
        Family::UnitCommitmentRamp => families::unit_commitment(&mut b, n(2), m(2))?,
        Family::DisjPolyhedral => families::disjunction(&mut b, n(2), m(2))?,
    };
    let integers = record.scope.iter().filter(|&&v| b.model.variables[v].is_integral()).count();
    if integers > options.scope_cap {
        return Err(SynthError::Unsupported(format!(
            "{family} scope has {integers} integer variables, cap is {}",
            options.scope_cap
        )));
    }
    let (mut model, ground_truth, witness) = b.finish(record);
    let mut witness = Some(witness);
    if options.allow_infeasible {
        let mut rng = rng_for(seed, 0xF1C5);
        let binaries: Vec<VarId> = ground_truth.scope.iter().copied().filter(|&v| model.is_binary(v)).collect();
        let count = rng.gen_range(1..=3.min(binaries.len()));
        for &v in binaries.choose_multiple(&mut rng, count) {
            let value = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
            model.variables[v].lower = value;
            model.variables[v].upper = value;
        }
        if let Some(w) = &witness {
            let inside = model
                .variables
                .iter()
                .zip(w)
                .all(|(var, &x)| x >= var.lower && x <= var.upper);
            if !inside {
                witness = None;
            }
        }
    }
    let permutation = Permutation::identity(model.num_vars(), model.num_rows());
    Ok(PlantedInstance {
        family,
        seed,
        model,
        ground_truth,
        permutation,
        witness,
        noise_rows: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationConfig {
    pub noise_rows: usize,
    pub permute_rows: bool,
    pub permute_vars: bool,
    /// Chance that a row is stored negated (`-hi <= -a.x <= -lo`).
    pub sign_flip_prob: f64,
    pub seed: u64,
}

impl Default for ObfuscationConfig {
    fn default() -> Self {
        ObfuscationConfig {
            noise_rows: 10,
            permute_rows: true,
            permute_vars: true,
            sign_flip_prob: 0.3,
            seed: 0,
        }
    }
}

impl ObfuscationConfig {
    /// Changes nothing.
    pub fn none() -> Self {
        ObfuscationConfig {
            noise_rows: 0,
            permute_rows: false,
            permute_vars: false,
            sign_flip_prob: 0.0,
            seed: 0,
        }
    }
}

/// A one-sided row over 3-4 variables with mixed-sign coefficients that the
/// original bounds already satisfy, with a nonzero side.
fn noise_row(model: &MipModel, rng: &mut ChaCha8Rng, name: String) -> Option<LinearRow> {
    let candidates: Vec<VarId> = (0..model.num_vars())
        .filter(|&v| model.variables[v].lower.is_finite() && model.variables[v].upper.is_finite())
        .collect();
    if candidates.len() < 3 {
        return None;
    }
    let size = rng.gen_range(3..=4.min(candidates.len()));
    let vars: Vec<VarId> = candidates.choose_multiple(rng, size).copied().collect();
    let mut terms: Vec<(VarId, f64)> = vars
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mag = rng.gen_range(2..=7) as f64;
            // first positive, second negative, rest random
            let sign = match i {
                0 => 1.0,
                1 => -1.0,
                _ if rng.gen_bool(0.5) => 1.0,
                _ => -1.0,
            };
            (v, sign * mag)
        })
        .collect();
    terms.shuffle(rng);
    let (lo, hi) = activity_range(model, &terms);
    let slack = rng.gen_range(1..=5) as f64;
    Some(if rng.gen_bool(0.5) {
        let rhs = (hi + slack).ceil();
        let rhs = if rhs == 0.0 { 1.0 } else { rhs };
        LinearRow::le(name, terms, rhs)
    } else {
        let lhs = (lo - slack).floor();
        let lhs = if lhs == 0.0 { -1.0 } else { lhs };
        LinearRow::ge(name, terms, lhs)
    })
}

fn shuffled(n: usize, on: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // map[old] = new
    let mut order: Vec<usize> = (0..n).collect();
    if on {
        order.shuffle(rng);
    }
    let mut map = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        map[old] = new;
    }
    map
}

/// Adds distractor rows, permutes ids and flips row signs. The model's
/// feasible set, up to the variable renaming, is unchanged.
pub fn obfuscate(instance: &PlantedInstance, config: &ObfuscationConfig) -> Result<PlantedInstance, SynthError> {
    let mut rng = rng_for(config.seed ^ instance.seed.rotate_left(17), 0x0BF5);
    let mut model = instance.model.clone();
    let mut noise = instance.noise_rows.clone();
    for i in 0..config.noise_rows {
        let mut name = format!("aux_{i}");
        while model.row_by_name(&name).is_some() {
            name.push('_');
        }
        match noise_row(&model, &mut rng, name) {
            Some(row) => noise.push(model.add_row(row)),
            None => break,
        }
    }
    let extended = Permutation {
        vars: instance.permutation.vars.clone(),
        rows: instance
            .permutation
            .rows
            .iter()
            .copied()
            .chain(instance.model.num_rows()..model.num_rows())
            .collect(),
    };
    let step = Permutation {
        vars: shuffled(model.num_vars(), config.permute_vars, &mut rng),
        rows: shuffled(model.num_rows(), config.permute_rows, &mut rng),
    };

    let mut variables = model.variables.clone();
    for (old, var) in model.variables.iter().enumerate() {
        variables[step.vars[old]] = var.clone();
    }
    let mut rows = model.rows.clone();
    for (old, row) in model.rows.iter().enumerate() {
        let mut row = LinearRow {
            terms: row.terms.iter().map(|&(v, c)| (step.vars[v], c)).collect(),
            ..row.clone()
        };
        if config.sign_flip_prob > 0.0 && rng.gen_bool(config.sign_flip_prob.min(1.0)) {
            row = row.negated();
        }
        rows[step.rows[old]] = row;
    }
    model.variables = variables;
    model.rows = rows;
    model.objective = model.objective.iter().map(|&(v, c)| (step.vars[v], c)).collect();

    let ground_truth = instance
        .ground_truth
        .remap(&step.vars, &step.rows)
        .map_err(SynthError::Unsupported)?
        .canonical();
    let witness = instance.witness.as_ref().map(|w| {
        let mut out = vec![0.0; w.len()];
        for (old, &x) in w.iter().enumerate() {
            out[step.vars[old]] = x;
        }
        out
    });
    let mut noise_rows: Vec<RowId> = noise.iter().map(|&r| step.rows[r]).collect();
    noise_rows.sort_unstable();
    Ok(PlantedInstance {
        family: instance.family,
        seed: instance.seed,
        model,
        ground_truth,
        permutation: extended.then(&step),
        witness,
        noise_rows,
    })
}

/// The JSON written next to an instance's MPS file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: u32,
    pub family: Family,
    pub seed: u64,
    pub ground_truth: NamedRecord,
    pub permutation: Permutation,
    pub witness: Option<Vec<f64>>,
    pub noise_rows: Vec<String>,
}

impl PlantedInstance {
    pub fn sidecar(&self) -> Result<Sidecar, SynthError> {
        Ok(Sidecar {
            schema: 1,
            family: self.family,
            seed: self.seed,
            ground_truth: self.ground_truth.to_named(&self.model).map_err(SynthError::Sidecar)?,
            permutation: self.permutation.clone(),
            witness: self.witness.clone(),
            noise_rows: self.noise_rows.iter().map(|&r| self.model.rows[r].name.clone()).collect(),
        })
    }

    /// Writes `<stem>.mps` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), SynthError> {
        std::fs::create_dir_all(dir)?;
        let mps = dir.join(format!("{stem}.mps"));
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&mps, write_mps(&self.model)?)?;
        let doc = serde_json::to_vec_pretty(&self.sidecar()?).map_err(|e| SynthError::Sidecar(e.to_string()))?;
        std::fs::write(&json, doc)?;
        Ok((mps, json))
    }

    /// Reads a pair written by [`PlantedInstance::write`].
    pub fn read(mps: &Path, json: &Path) -> Result<PlantedInstance, SynthError> {
        let model = parse_mps(&std::fs::read(mps)?)?;
        let sidecar: Sidecar =
            serde_json::from_slice(&std::fs::read(json)?).map_err(|e| SynthError::Sidecar(e.to_string()))?;
        let ground_truth = SemanticRecord::from_named(&model, &sidecar.ground_truth)
            .map_err(SynthError::Sidecar)?
            .canonical();
        let noise_rows = sidecar
            .noise_rows
            .iter()
            .map(|n| model.row_by_name(n).ok_or_else(|| SynthError::Sidecar(format!("unknown row `{n}`"))))
            .collect::<Result<_, _>>()?;
        Ok(PlantedInstance {
            family: sidecar.family,
            seed: sidecar.seed,
            model,
            ground_truth,
            permutation: sidecar.permutation,
            witness: sidecar.witness,
            noise_rows,
        })
    }
}

/// `count` obfuscated instances of `family` with consecutive seeds.
pub fn planted_suite(
    family: Family,
    sizes: SizeParams,
    count: usize,
    seed: u64,
    obfuscation: &ObfuscationConfig,
) -> Result<Vec<PlantedInstance>, SynthError> {
    (0..count as u64)
        .map(|i| {
            let base = reverse_sample(family, sizes, seed + i)?;
            obfuscate(&base, obfuscation)
        })
        .collect()
}
