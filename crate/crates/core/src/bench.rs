//! Paired baseline/plugin runs over an instance directory, aggregated into
//! coverage, performance and propagation-diagnostics tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{detect_all, DetectConfig, Family};
use crate::mps::parse_mps;
use crate::outcome::duration_ms;
use crate::search::{dfs_solve, SearchConfig, SearchStatus};

/// Shift for running times (seconds) and for the diagnostic counters.
pub const TIME_SHIFT: f64 = 1.0;
pub const NODE_SHIFT: f64 = 100.0;

/// `(prod (x_i + s))^(1/n) - s`, evaluated in log space. `None` for an
/// empty list, a non-positive shift, or some `x_i + s <= 0`.
pub fn shifted_geometric_mean(values: &[f64], shift: f64) -> Option<f64> {
    if values.is_empty() || !(shift > 0.0) || values.iter().any(|&x| !(x + shift > 0.0) || !x.is_finite()) {
        return None;
    }
    // s * (exp(mean(ln(1 + x/s))) - 1): exact zero for all-zero input.
    let mean_log = values.iter().map(|&x| (x / shift).ln_1p()).sum::<f64>() / values.len() as f64;
    Some(shift * mean_log.exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigLabel {
    Baseline,
    Plugin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub instance: String,
    pub config: ConfigLabel,
    pub seed: u64,
    pub status: SearchStatus,
    #[serde(rename = "wall_time_ms", with = "duration_ms")]
    pub wall_time: Duration,
    pub nodes: u64,
    pub calls: u64,
    pub domain_reductions: u64,
    pub cutoffs: u64,
    #[serde(rename = "prop_time_ms", with = "duration_ms")]
    pub prop_time: Duration,
    pub objective: Option<f64>,
}

impl BenchRun {
    pub fn solved(&self) -> bool {
        self.status == SearchStatus::Optimal
    }
}

/// Families detected per instance name.
pub type InstanceDetections = BTreeMap<String, BTreeSet<Family>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub family: Family,
    pub detected: usize,
    pub baseline: usize,
    pub plugin: usize,
    pub common: usize,
    pub baseline_only: usize,
    pub plugin_only: usize,
}

/// Shifted geometric means over the commonly solved instances; every mean
/// is `None` when nothing was solved by both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRow {
    pub family: Family,
    pub common: usize,
    pub t_base: Option<f64>,
    pub t_plug: Option<f64>,
    pub n_base: Option<f64>,
    pub n_plug: Option<f64>,
    pub t_speedup: Option<f64>,
    pub n_speedup: Option<f64>,
    pub t_speedup_count: usize,
    pub n_speedup_count: usize,
}

/// Plugin-side handler activity over the detected instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub family: Family,
    pub runs: usize,
    pub calls: Option<f64>,
    pub domain_reductions: Option<f64>,
    pub cutoffs: Option<f64>,
    /// Runs where the handlers were called but reduced nothing.
    pub zero_reduction_runs: usize,
    pub prop_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema: u32,
    pub coverage: Vec<CoverageRow>,
    pub performance: Vec<PerformanceRow>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub runs: Vec<BenchRun>,
    pub skipped: Vec<SkippedFile>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("runs without a matching pair: {}", .0.join(", "))]
    Orphans(Vec<String>),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Pairs runs by instance and seed, then builds the three tables with one
/// row per family in [`Family::ALL`] order.
pub fn aggregate(runs: &[BenchRun], detection: &InstanceDetections) -> Result<BenchReport, BenchError> {
    let mut pairs: BTreeMap<(&str, u64), [Option<&BenchRun>; 2]> = BTreeMap::new();
    let mut orphans = Vec::new();
    for r in runs {
        let slot = &mut pairs.entry((r.instance.as_str(), r.seed)).or_default()[r.config as usize];
        if slot.is_some() {
            orphans.push(format!("{} ({:?}, duplicate)", r.instance, r.config));
        }
        *slot = Some(r);
    }
    for ((name, seed), pair) in &pairs {
        match pair {
            [Some(_), Some(_)] => {}
            [Some(_), None] => orphans.push(format!("{name} seed {seed} (baseline only)")),
            _ => orphans.push(format!("{name} seed {seed} (plugin only)")),
        }
    }
    if !orphans.is_empty() {
        return Err(BenchError::Orphans(orphans));
    }

    let mut coverage = Vec::new();
    let mut performance = Vec::new();
    let mut diagnostics = Vec::new();
    for family in Family::ALL {
        let mine: Vec<(&BenchRun, &BenchRun)> = pairs
            .iter()
            .filter(|((name, _), _)| detection.get(*name).is_some_and(|f| f.contains(&family)))
            .map(|(_, p)| (p[0].unwrap(), p[1].unwrap()))
            .collect();
        let detected: BTreeSet<&str> = detection
            .iter()
            .filter(|(_, f)| f.contains(&family))
            .map(|(n, _)| n.as_str())
            .collect();
        let common: Vec<_> = mine.iter().filter(|(b, p)| b.solved() && p.solved()).collect();
        coverage.push(CoverageRow {
            family,
            detected: detected.len(),
            baseline: mine.iter().filter(|(b, _)| b.solved()).count(),
            plugin: mine.iter().filter(|(_, p)| p.solved()).count(),
            common: common.len(),
            baseline_only: mine.iter().filter(|(b, p)| b.solved() && !p.solved()).count(),
            plugin_only: mine.iter().filter(|(b, p)| !b.solved() && p.solved()).count(),
        });

        let side = |plugin: bool| -> Vec<&BenchRun> { common.iter().map(|p| if plugin { p.1 } else { p.0 }).collect() };
        let secs = |plugin: bool| -> Vec<f64> { side(plugin).iter().map(|r| r.wall_time.as_secs_f64()).collect() };
        let nodes = |plugin: bool| -> Vec<f64> { side(plugin).iter().map(|r| r.nodes as f64).collect() };
        let t_base = shifted_geometric_mean(&secs(false), TIME_SHIFT);
        let t_plug = shifted_geometric_mean(&secs(true), TIME_SHIFT);
        let n_base = shifted_geometric_mean(&nodes(false), NODE_SHIFT);
        let n_plug = shifted_geometric_mean(&nodes(true), NODE_SHIFT);
        let ratio = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        };
        performance.push(PerformanceRow {
            family,
            common: common.len(),
            t_base,
            t_plug,
            n_base,
            n_plug,
            t_speedup: ratio(t_base, t_plug),
            n_speedup: ratio(n_base, n_plug),
            t_speedup_count: common.iter().filter(|(b, p)| p.wall_time < b.wall_time).count(),
            n_speedup_count: common.iter().filter(|(b, p)| p.nodes < b.nodes).count(),
        });

        let plug: Vec<&BenchRun> = mine.iter().map(|p| p.1).collect();
        let sgm = |f: fn(&BenchRun) -> f64| shifted_geometric_mean(&plug.iter().map(|r| f(r)).collect::<Vec<_>>(), TIME_SHIFT);
        diagnostics.push(DiagnosticsRow {
            family,
            runs: plug.len(),
            calls: sgm(|r| r.calls as f64),
            domain_reductions: sgm(|r| r.domain_reductions as f64),
            cutoffs: sgm(|r| r.cutoffs as f64),
            zero_reduction_runs: plug.iter().filter(|r| r.calls > 0 && r.domain_reductions == 0).count(),
            prop_time_s: sgm(|r| r.prop_time.as_secs_f64()),
        });
    }
    let mut runs = runs.to_vec();
    runs.sort_by(|a, b| (&a.instance, a.seed, a.config).cmp(&(&b.instance, b.seed, b.config)));
    Ok(BenchReport {
        schema: 1,
        coverage,
        performance,
        diagnostics,
        runs,
        skipped: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Families to evaluate; empty means all.
    pub families: BTreeSet<Family>,
    pub baseline: SearchConfig,
    pub plugin: SearchConfig,
    pub detect: DetectConfig,
    pub jobs: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            families: BTreeSet::new(),
            baseline: SearchConfig::default(),
            plugin: SearchConfig::default(),
            detect: DetectConfig::default(),
            jobs: 1,
            seed: 0,
        }
    }
}

impl BenchConfig {
    /// Same time limit on both sides.
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.baseline.time_limit = limit;
        self.plugin.time_limit = limit;
        self
    }
}

enum Outcome {
    Runs(String, BTreeSet<Family>, [BenchRun; 2]),
    Skipped(SkippedFile),
}

fn run_one(path: &Path, config: &BenchConfig) -> Outcome {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let skip = |reason: String| {
        log::warn!("skipping {}: {reason}", path.display());
        Outcome::Skipped(SkippedFile {
            file: path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            reason,
        })
    };
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => return skip(e.to_string()),
    };
    let model = match parse_mps(&bytes) {
        Ok(m) => m,
        Err(e) => return skip(e.to_string()),
    };
    let wanted = |f: Family| config.families.is_empty() || config.families.contains(&f);
    let records: Vec<_> = detect_all(&model, &config.detect)
        .records
        .into_iter()
        .filter(|r| wanted(r.family()))
        .collect();
    if records.is_empty() {
        return skip("no requested family detected".into());
    }
    let families: BTreeSet<Family> = records.iter().map(|r| r.family()).collect();
    let solve = |label: ConfigLabel| {
        let (recs, cfg) = match label {
            ConfigLabel::Baseline => (&[][..], &config.baseline),
            ConfigLabel::Plugin => (&records[..], &config.plugin),
        };
        dfs_solve(&model, recs, cfg).map(|r| BenchRun {
            instance: name.clone(),
            config: label,
            seed: config.seed,
            status: r.stats.status,
            wall_time: r.stats.solve_time,
            nodes: r.stats.nodes,
            calls: r.stats.handler_calls,
            domain_reductions: r.stats.domain_reductions,
            cutoffs: r.stats.cutoffs,
            prop_time: r.stats.prop_time,
            objective: r.objective,
        })
    };
    match (solve(ConfigLabel::Baseline), solve(ConfigLabel::Plugin)) {
        (Ok(b), Ok(p)) => Outcome::Runs(name, families, [b, p]),
        (Err(e), _) | (_, Err(e)) => skip(e.to_string()),
    }
}

/// MPS files of `dir` (sorted by name; `.mps` extension, case-insensitive).
pub fn instance_files(dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| BenchError::Io(dir.to_path_buf(), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("mps")))
        .collect();
    files.sort();
    Ok(files)
}

/// Parse, detect and run both configurations on every instance of `dir`
/// with `config.jobs` workers. Unreadable files and search errors end up in
/// `skipped`.
pub fn run_benchmark(dir: &Path, config: &BenchConfig) -> Result<BenchReport, BenchError> {
    use rayon::prelude::*;
    let files = instance_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let outcomes: Vec<Outcome> = pool.install(|| files.par_iter().map(|p| run_one(p, config)).collect());
    let mut runs = Vec::new();
    let mut detection = InstanceDetections::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Runs(name, fams, pair) => {
                detection.insert(name, fams);
                runs.extend(pair);
            }
            Outcome::Skipped(s) => skipped.push(s),
        }
    }
    let mut report = aggregate(&runs, &detection)?;
    report.skipped = skipped;
    Ok(report)
}

pub const COVERAGE_HEADER: [&str; 7] = [
    "Family",
    "Detected",
    "Baseline",
    "Plugin",
    "Common",
    "Baseline only",
    "Plugin only",
];

pub const PERFORMANCE_HEADER: [&str; 10] = [
    "Family",
    "Common",
    "T_base",
    "T_plug",
    "N_base",
    "N_plug",
    "T speedup",
    "N speedup",
    "#T_speedup",
    "#N_speedup",
];

pub const DIAGNOSTICS_HEADER: [&str; 7] = [
    "Family",
    "Runs",
    "Calls",
    "Domain red.",
    "Cutoffs",
    "Zero-red. runs",
    "Prop. time (s)",
];

/// `--` for an absent cell.
pub fn cell(value: Option<f64>, decimals: usize) -> String {
    value.map_or_else(|| "--".to_string(), |v| format!("{v:.decimals$}"))
}

fn table<const N: usize>(header: [&str; N], rows: Vec<[String; N]>) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Pool(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl BenchReport {
    pub fn coverage_csv(&self) -> Result<String, BenchError> {
        table(
            COVERAGE_HEADER,
            self.coverage
                .iter()
                .map(|r| {
                    [
                        r.family.to_string(),
                        r.detected.to_string(),
                        r.baseline.to_string(),
                        r.plugin.to_string(),
                        r.common.to_string(),
                        r.baseline_only.to_string(),
                        r.plugin_only.to_string(),
                    ]
                })
                .collect(),
        )
    }

    pub fn performance_csv(&self) -> Result<String, BenchError> {
        table(
            PERFORMANCE_HEADER,
            self.performance
                .iter()
                .map(|r| {
                    [
                        r.family.to_string(),
                        r.common.to_string(),
                        cell(r.t_base, 6),
                        cell(r.t_plug, 6),
                        cell(r.n_base, 2),
                        cell(r.n_plug, 2),
                        cell(r.t_speedup, 3),
                        cell(r.n_speedup, 3),
                        r.t_speedup_count.to_string(),
                        r.n_speedup_count.to_string(),
                    ]
                })
                .collect(),
        )
    }

    pub fn diagnostics_csv(&self) -> Result<String, BenchError> {
        table(
            DIAGNOSTICS_HEADER,
            self.diagnostics
                .iter()
                .map(|r| {
                    [
                        r.family.to_string(),
                        r.runs.to_string(),
                        cell(r.calls, 1),
                        cell(r.domain_reductions, 1),
                        cell(r.cutoffs, 1),
                        r.zero_reduction_runs.to_string(),
                        cell(r.prop_time_s, 6),
                    ]
                })
                .collect(),
        )
    }

    /// Writes `{suite}_coverage.csv`, `{suite}_performance.csv`,
    /// `{suite}_diagnostics.csv` and `{suite}.json` into `dir`.
    pub fn write(&self, dir: &Path, suite: &str) -> Result<Vec<PathBuf>, BenchError> {
        fs::create_dir_all(dir).map_err(|e| BenchError::Io(dir.to_path_buf(), e))?;
        let files = [
            (format!("{suite}_coverage.csv"), self.coverage_csv()?),
            (format!("{suite}_performance.csv"), self.performance_csv()?),
            (format!("{suite}_diagnostics.csv"), self.diagnostics_csv()?),
            (format!("{suite}.json"), serde_json::to_string_pretty(self)? + "\n"),
        ];
        let mut out = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| BenchError::Io(path.clone(), e))?;
            out.push(path);
        }
        Ok(out)
    }

    /// Run records with every timing zeroed, for comparing reports.
    pub fn without_timings(&self) -> BenchReport {
        let mut r = self.clone();
        for run in &mut r.runs {
            run.wall_time = Duration::ZERO;
            run.prop_time = Duration::ZERO;
        }
        for p in &mut r.performance {
            p.t_base = p.t_base.map(|_| 0.0);
            p.t_plug = p.t_plug.map(|_| 0.0);
            p.t_speedup = p.t_speedup.map(|_| 1.0);
            p.t_speedup_count = 0;
        }
        for d in &mut r.diagnostics {
            d.prop_time_s = d.prop_time_s.map(|_| 0.0);
        }
        r
    }
}
