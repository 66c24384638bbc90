//! `structprop`: detect, propagate, synthesize, verify, search and bench from
//! the shell. Data goes to stdout or files, logs to stderr.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use structprop_core::bench::{run_benchmark, BenchConfig};
use structprop_core::detect::{
    detect_all, detect_family, records_from_json, records_to_json, DetectConfig, Family, SemanticRecord,
};
use structprop_core::mps::parse_mps;
use structprop_core::propagate::{run_fixpoint, PropagatorConfig};
use structprop_core::search::{dfs_solve, BranchRule, PropFreq, SearchConfig, SearchStatus};
use structprop_core::synth::{obfuscate, reverse_sample_with, ObfuscationConfig, SizeParams, SynthOptions};
use structprop_core::verify::{ladder_report, run_ladders, LadderConfig};
use structprop_core::{BoundSide, DomainBox, MipModel, Tolerances};

#[derive(Parser)]
#[command(name = "structprop", version, about = "Global-constraint detection and semantic propagation for MIP models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "STRUCTPROP_SEED", default_value_t = 0)]
    seed: u64,
    /// Feasibility tolerance used by detection and propagation.
    #[arg(long, global = true, default_value_t = 1e-6, value_parser = parse_tolerance)]
    tolerance: f64,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Only errors on stderr, no human summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    /// Keep wall-clock measurements in JSON output.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Find global-constraint structure in an MPS file.
    Detect(DetectArgs),
    /// Run the propagation fixpoint at the root of an MPS file.
    Propagate(PropagateArgs),
    /// Write planted instances with ground-truth sidecars.
    Synth(SynthArgs),
    /// Run the per-family gate ladder.
    Verify(VerifyArgs),
    /// Depth-first search for an optimal solution.
    Search(SearchArgs),
    /// Baseline vs plugin runs over a directory of MPS files.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DetectArgs {
    file: PathBuf,
    /// `all` or one family name.
    #[arg(long, default_value = "all", value_parser = parse_families)]
    family: Families,
    /// Also write the records document here.
    #[arg(long)]
    records_out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["records", "detect"])))]
struct PropagateArgs {
    file: PathBuf,
    /// Records document written by `detect`.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Detect records instead of reading them.
    #[arg(long)]
    detect: bool,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    fixpoint_rounds: u64,
    /// Exit 1 when propagation proves the model infeasible.
    #[arg(long)]
    expect_feasible: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    /// Size knobs `N`, `NxM` or `NxMxK`; their meaning depends on the family.
    #[arg(long, value_parser = parse_size)]
    size: Option<SizeParams>,
    #[arg(long, value_enum, default_value = "on")]
    obfuscate: OnOff,
    #[arg(long)]
    out: PathBuf,
    /// Instances to write, with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 10)]
    noise_rows: usize,
    #[arg(long, default_value_t = 0.3, value_parser = parse_probability)]
    sign_flip_prob: f64,
    /// Fix a few scope binaries at random; the result may be infeasible.
    #[arg(long)]
    allow_infeasible: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// `all` or one family name.
    #[arg(long, default_value = "all", value_parser = parse_families)]
    family: Families,
    /// Seed of the planted suites; defaults to --seed.
    #[arg(long)]
    suite_seed: Option<u64>,
    /// Also write the gate report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    detector_suite: usize,
    #[arg(long, default_value_t = 100)]
    soundness_suite: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropFreqArg {
    Root,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    First,
    MostConstrained,
}

#[derive(Args)]
struct SearchArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "root")]
    propfreq: PropFreqArg,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    node_limit: u64,
    /// Seconds.
    #[arg(long, default_value_t = 60.0, value_parser = parse_seconds)]
    time_limit: f64,
    #[arg(long, value_enum, default_value = "first")]
    branch: BranchArg,
    /// Records document to use instead of detecting.
    #[arg(long, conflicts_with = "no_records")]
    records: Option<PathBuf>,
    /// Search with row tightening only.
    #[arg(long)]
    no_records: bool,
    /// Exit 1 when the model is proven infeasible.
    #[arg(long)]
    expect_feasible: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    dir: PathBuf,
    /// Comma-separated family names; all when absent.
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    families: Vec<Family>,
    /// Seconds per run.
    #[arg(long, default_value_t = 60.0, value_parser = parse_seconds)]
    time_limit: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    node_limit: u64,
    /// Propagation frequency of the plugin configuration.
    #[arg(long, value_enum, default_value = "root")]
    propfreq: PropFreqArg,
    /// Where the CSV and JSON reports go.
    #[arg(long)]
    out: Option<PathBuf>,
    /// File name prefix of the reports.
    #[arg(long, default_value = "bench")]
    suite: String,
}

#[derive(Clone)]
struct Families(Vec<Family>);

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

fn parse_families(s: &str) -> Result<Families, String> {
    if s.eq_ignore_ascii_case("all") {
        Ok(Families(Family::ALL.to_vec()))
    } else {
        Ok(Families(vec![s.parse()?]))
    }
}

fn parse_size(s: &str) -> Result<SizeParams, String> {
    s.parse().map_err(|e: structprop_core::synth::SynthError| e.to_string())
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t.is_finite() && t > 0.0 => Ok(t),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn parse_probability(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(p) if (0.0..=1.0).contains(&p) => Ok(p),
        _ => Err(format!("`{s}` is not in [0, 1]")),
    }
}

fn parse_seconds(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t.is_finite() && t >= 0.0 => Ok(t),
        _ => Err(format!("`{s}` is not a non-negative number of seconds")),
    }
}

/// Bad input files exit 2 like bad flags; failed writes exit 1.
enum Failure {
    Input(String),
    Output(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Output(m) => f.write_str(m),
        }
    }
}

/// `Ok(false)` is a domain failure: output was produced, exit code 1.
type CmdResult = Result<bool, Failure>;

struct Ctx {
    seed: u64,
    json: bool,
    quiet: bool,
    timings: bool,
    tolerances: Tolerances,
}

impl Ctx {
    fn detect_config(&self) -> DetectConfig {
        DetectConfig {
            tolerances: self.tolerances,
            ..DetectConfig::default()
        }
    }

    fn propagator_config(&self) -> PropagatorConfig {
        PropagatorConfig {
            tolerances: self.tolerances,
            ..PropagatorConfig::default()
        }
    }

    /// Prints `doc` when `--json`, otherwise the human text unless `--quiet`.
    fn emit(&self, doc: &Value, human: impl FnOnce() -> String) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(doc).expect("JSON value serializes"));
        } else if !self.quiet {
            print!("{}", human());
        }
    }
}

fn read_model(path: &Path) -> Result<MipModel, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_mps(&bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_records(model: &MipModel, path: &Path) -> Result<Vec<SemanticRecord>, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let doc: Value =
        serde_json::from_slice(&bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    records_from_json(model, &doc).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, doc: &Value) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::Output(format!("{}: {e}", parent.display())))?;
    }
    let mut body = serde_json::to_string_pretty(doc).expect("JSON value serializes");
    body.push('\n');
    fs::write(path, body).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))
}

fn cmd_detect(ctx: &Ctx, args: &DetectArgs) -> CmdResult {
    let model = read_model(&args.file)?;
    let config = ctx.detect_config();
    let (records, warnings) = match args.family.0.as_slice() {
        [one] => (detect_family(&model, *one, &config), Vec::new()),
        _ => {
            let report = detect_all(&model, &config);
            (report.records, report.warnings)
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    let doc = records_to_json(&model, &records, &warnings).map_err(Failure::Input)?;
    if let Some(path) = &args.records_out {
        write_json(path, &doc)?;
    }
    ctx.emit(&doc, || {
        let mut s = format!("{}: {} record(s)\n", args.file.display(), records.len());
        for r in &records {
            s += &format!("  {:<20} {} vars, {} rows\n", r.family().name(), r.scope.len(), r.evidence.len());
        }
        s
    });
    Ok(true)
}

fn cmd_propagate(ctx: &Ctx, args: &PropagateArgs) -> CmdResult {
    let model = read_model(&args.file)?;
    let records = match &args.records {
        Some(path) => read_records(&model, path)?,
        None => detect_all(&model, &ctx.detect_config()).records,
    };
    let config = PropagatorConfig {
        max_fixpoint_rounds: args.fixpoint_rounds as usize,
        ..ctx.propagator_config()
    };
    let mut dom = DomainBox::from_model(&model);
    let out = run_fixpoint(&model, &records, &mut dom, &config);
    let side = |s: BoundSide| match s {
        BoundSide::Lower => "lb",
        BoundSide::Upper => "ub",
    };
    let doc = out.to_named_json(&model, records.len(), ctx.timings);
    ctx.emit(&doc, || {
        let mut s = String::new();
        for c in &out.bound_changes {
            s += &format!("{} {} {} -> {}\n", model.variables[c.var].name, side(c.side), c.old, c.new);
        }
        s += &format!(
            "{} change(s), {} handler call(s), {} reduction(s){}\n",
            out.bound_changes.len(),
            out.calls,
            out.domain_reductions,
            if out.cutoff { ", cutoff: no feasible point" } else { "" }
        );
        s
    });
    Ok(!(args.expect_feasible && out.cutoff))
}

fn cmd_synth(ctx: &Ctx, args: &SynthArgs) -> CmdResult {
    let sizes = args.size.unwrap_or_default();
    let options = SynthOptions {
        allow_infeasible: args.allow_infeasible,
        ..SynthOptions::default()
    };
    let mut written = Vec::new();
    for i in 0..args.count {
        let seed = ctx.seed + i;
        let base = reverse_sample_with(args.family, sizes, seed, &options).map_err(|e| Failure::Input(e.to_string()))?;
        let instance = match args.obfuscate {
            OnOff::On => obfuscate(
                &base,
                &ObfuscationConfig {
                    noise_rows: args.noise_rows,
                    sign_flip_prob: args.sign_flip_prob,
                    seed,
                    ..ObfuscationConfig::default()
                },
            )
            .map_err(|e| Failure::Input(e.to_string()))?,
            OnOff::Off => base,
        };
        let stem = format!("{}_{seed}", args.family.name().to_ascii_lowercase());
        let (mps, sidecar) = instance.write(&args.out, &stem).map_err(|e| Failure::Output(e.to_string()))?;
        log::info!("wrote {}", mps.display());
        written.push(json!({
            "family": args.family.name(),
            "seed": seed,
            "size": sizes.to_string(),
            "obfuscated": matches!(args.obfuscate, OnOff::On),
            "mps": mps.display().to_string(),
            "sidecar": sidecar.display().to_string(),
            "vars": instance.model.num_vars(),
            "rows": instance.model.num_rows(),
            "witness": instance.witness.is_some(),
        }));
    }
    let doc = json!({ "schema": 1, "instances": written });
    ctx.emit(&doc, || {
        written
            .iter()
            .map(|w| format!("{} ({} vars, {} rows)\n", w["mps"].as_str().unwrap_or(""), w["vars"], w["rows"]))
            .collect()
    });
    Ok(true)
}

fn cmd_verify(ctx: &Ctx, args: &VerifyArgs) -> CmdResult {
    let suite_seed = args.suite_seed.unwrap_or(ctx.seed);
    let config = LadderConfig {
        detector_suite: args.detector_suite,
        soundness_suite: args.soundness_suite,
        detect: ctx.detect_config(),
        propagator: ctx.propagator_config(),
        ..LadderConfig::default()
    };
    let results = run_ladders(&args.family.0, suite_seed, &config);
    let doc = ladder_report(&results, suite_seed, ctx.timings);
    if let Some(path) = &args.report {
        write_json(path, &doc)?;
    }
    let ready = results.values().all(|gates| gates.iter().all(|g| g.passed));
    ctx.emit(&doc, || {
        let mut s = String::new();
        for (family, gates) in &results {
            let ok = gates.iter().all(|g| g.passed);
            s += &format!("{:<20} {}\n", family.name(), if ok { "benchmark_ready" } else { "NOT READY" });
            for g in gates.iter().filter(|g| !g.passed) {
                s += &format!("  {}: {:?} {}\n", g.gate.name(), g.status, g.detail);
            }
        }
        s
    });
    Ok(ready)
}

fn propfreq(arg: PropFreqArg) -> PropFreq {
    match arg {
        PropFreqArg::Root => PropFreq::RootOnly,
        PropFreqArg::All => PropFreq::EveryNode,
    }
}

fn cmd_search(ctx: &Ctx, args: &SearchArgs) -> CmdResult {
    let model = read_model(&args.file)?;
    let records = match (&args.records, args.no_records) {
        (Some(path), _) => read_records(&model, path)?,
        (None, true) => Vec::new(),
        (None, false) => detect_all(&model, &ctx.detect_config()).records,
    };
    let config = SearchConfig {
        propfreq: propfreq(args.propfreq),
        node_limit: args.node_limit,
        time_limit: Duration::from_secs_f64(args.time_limit),
        branch_rule: match args.branch {
            BranchArg::First => BranchRule::FirstUnfixed,
            BranchArg::MostConstrained => BranchRule::MostConstrained,
        },
        propagator: ctx.propagator_config(),
    };
    let result = dfs_solve(&model, &records, &config).map_err(|e| Failure::Input(e.to_string()))?;
    let stats = &result.stats;
    let doc = result.to_named_json(&model, config.propfreq, records.len(), ctx.timings);
    ctx.emit(&doc, || {
        let objective = result.objective.map_or("--".to_string(), |o| o.to_string());
        format!(
            "status {}  objective {objective}  nodes {}  calls {}  reductions {}  cutoffs {}\n",
            stats.status, stats.nodes, stats.handler_calls, stats.domain_reductions, stats.cutoffs
        )
    });
    Ok(!(args.expect_feasible && stats.status == SearchStatus::Infeasible))
}

fn cmd_bench(ctx: &Ctx, args: &BenchArgs) -> CmdResult {
    let search = SearchConfig {
        node_limit: args.node_limit,
        propagator: ctx.propagator_config(),
        ..SearchConfig::default()
    };
    let config = BenchConfig {
        families: args.families.iter().copied().collect(),
        baseline: search.clone(),
        plugin: SearchConfig {
            propfreq: propfreq(args.propfreq),
            ..search
        },
        detect: ctx.detect_config(),
        jobs: args.jobs as usize,
        seed: ctx.seed,
    }
    .with_time_limit(Duration::from_secs_f64(args.time_limit));
    let report = run_benchmark(&args.dir, &config).map_err(|e| Failure::Input(e.to_string()))?;
    let csv = |r: Result<String, _>| r.map_err(|e: structprop_core::bench::BenchError| Failure::Output(e.to_string()));
    let tables = [
        ("coverage", csv(report.coverage_csv())?),
        ("performance", csv(report.performance_csv())?),
        ("diagnostics", csv(report.diagnostics_csv())?),
    ];
    let shown = if ctx.timings { report.clone() } else { report.without_timings() };
    let doc = serde_json::to_value(&shown).expect("bench report serializes");
    if let Some(out) = &args.out {
        fs::create_dir_all(out).map_err(|e| Failure::Output(format!("{}: {e}", out.display())))?;
        for (name, body) in &tables {
            let path = out.join(format!("{}_{name}.csv", args.suite));
            fs::write(&path, body).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))?;
        }
        write_json(&out.join(format!("{}.json", args.suite)), &doc)?;
    }
    ctx.emit(&doc, || tables.iter().map(|(_, body)| format!("{body}\n")).collect());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let ctx = Ctx {
        seed: cli.global.seed,
        json: cli.global.json,
        quiet: cli.global.quiet,
        timings: cli.global.timings,
        tolerances: Tolerances::with_feasibility(cli.global.tolerance),
    };
    let result = match &cli.command {
        Command::Detect(a) => cmd_detect(&ctx, a),
        Command::Propagate(a) => cmd_propagate(&ctx, a),
        Command::Synth(a) => cmd_synth(&ctx, a),
        Command::Verify(a) => cmd_verify(&ctx, a),
        Command::Search(a) => cmd_search(&ctx, a),
        Command::Bench(a) => cmd_bench(&ctx, a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Failure::Input(_) => 2,
                Failure::Output(_) => 1,
            })
        }
    }
}
