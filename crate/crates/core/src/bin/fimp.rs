//! `fimp`: command-line front end.
//!
//! Every flag may also come from a JSON object passed with `--config`, keyed
//! by the long flag name; flags given on the command line win. The resolved
//! configuration is echoed on stderr as one JSON line that can be fed back
//! through `--config`.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use forest_importance::context::{asymptotic_contextual, contextual_importances, ctx_pvalues, ContextConfig};
use forest_importance::distributions::{
    generate, load_csv, load_distribution, save_csv, save_distribution, Dataset, JointDistribution, Problem,
};
use forest_importance::forest::{build_forest, ForestConfig, Loss, Method};
use forest_importance::importance::{asymptotic_mdi_report, mda, mda_zscore, mdi, selection_frequency};
use forest_importance::netinfer::{
    averaged_partial_correlation, challenge_grid, correlation, directivity_adjust, evaluate, genie3_forest_config,
    genie3_scores, load_scores, load_series, load_truth, partial_correlation, preprocess, save_series, save_truth,
    synth_network, DirectivityParams, Dynamics, EdgeMode, FilterSpec, LowPass, ScoreMatrix, SynthConfig, TimeSeries,
};
use forest_importance::report::{
    fmt_float, render_context, render_importance, render_scores, Format, Table, DEFAULT_DECIMALS,
};
use forest_importance::srs::{
    expected_found_curve, expected_time, markov_expected_time, markov_transition_matrix, random_subspace_run,
    simulate_expected_time, srs_run, RelevanceMode, Scenario, ScenarioModel, SrsConfig, SubspaceMethod,
};
use forest_importance::tree::{SplitFamily, TreeConfig};

#[derive(Parser)]
#[command(
    name = "fimp",
    version,
    about = "Tree-ensemble feature importances, random subspace selection and network inference",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
enum Verb {
    /// Write a generated distribution, a dataset drawn from it, or a
    /// synthetic network with its time series.
    Gen,
    /// Oracle or forest-based variable importances.
    Importance,
    /// Contextual importances.
    Context,
    /// Sequential random subspace (or plain random subspace) selection.
    Srs,
    /// Expected discovery times of RS and SRS.
    #[command(name = "srs-theory")]
    SrsTheory,
    /// Score the edges of a network from a time series.
    Netinfer,
    /// AUROC and AUPRC of edge scores against a true network.
    Eval,
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verb::Gen => "gen",
            Verb::Importance => "importance",
            Verb::Context => "context",
            Verb::Srs => "srs",
            Verb::SrsTheory => "srs-theory",
            Verb::Netinfer => "netinfer",
            Verb::Eval => "eval",
        })
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Flags {
    /// Seed of every random choice
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 or unset uses every logical core
    #[arg(long, global = true, env = "FI_THREADS")]
    threads: Option<usize>,
    /// Output column of a CSV dataset (default: last column)
    #[arg(long, global = true)]
    target: Option<String>,
    /// Context column of a CSV dataset
    #[arg(long, global = true)]
    context: Option<String>,
    /// Number of trees
    #[arg(long, global = true)]
    trees: Option<usize>,
    /// Variables drawn at each node
    #[serde(rename = "K")]
    #[arg(long = "K", global = true)]
    k: Option<usize>,
    /// Maximal tree depth, or the depth of the oracle
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Ensemble (bagging, rs, rp, et, trt), subspace method (srs, rs) or
    /// edge score (pc, corr, genie3), depending on the command
    #[arg(long, global = true)]
    method: Option<String>,
    /// Fraction of the subspace re-injected from the found features
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Subspace size
    #[arg(long, global = true)]
    q: Option<usize>,
    /// SRS iterations, or the length of an expected-discovery curve
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Spike threshold
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Low-pass filter f1..f4, `none` to skip it, `raw` to skip every
    /// filter, `grid` for the averaged filter grid
    #[arg(long, global = true)]
    filter: Option<String>,
    /// Principal components kept in the precision matrix
    #[arg(long, global = true)]
    components: Option<usize>,
    /// csv, json or markdown (default: from the --out extension, else csv)
    #[arg(long, global = true)]
    format: Option<String>,
    /// Output file (default: stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file supplying any of these flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Decimals of printed numbers
    #[arg(long, global = true)]
    decimals: Option<usize>,

    /// Generator, e.g. digit, xor_strongweak:0.8, chain:10,3, or network
    #[arg(long, global = true)]
    problem: Option<String>,
    /// JSON distribution
    #[arg(long, global = true)]
    dist: Option<PathBuf>,
    /// CSV dataset
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Use the exact infinite-sample importances of the distribution
    #[arg(long, global = true)]
    #[serde(default)]
    oracle: bool,
    /// mdi, mda, mda_z or frequency
    #[arg(long, global = true)]
    measure: Option<String>,
    /// Draw this many rows instead of writing the distribution
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Write the exact-frequency dataset of the distribution
    #[arg(long, global = true)]
    #[serde(default)]
    exact: bool,
    /// Rows per tree of random patches
    #[arg(long, global = true)]
    rows: Option<usize>,
    /// Split family: multiway, binary_ordered, binary_unordered or
    /// binary_one_vs_all
    #[arg(long, global = true)]
    family: Option<String>,
    /// Permutations of the MDA or of the context p-values
    #[arg(long, global = true)]
    permutations: Option<usize>,
    /// Smallest context stratum whose impurity is estimated (default: 5, or
    /// 1 on weighted data)
    #[arg(long, global = true)]
    min_stratum: Option<usize>,
    /// Relevance test of SRS: probe or exact
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Evaluations needed before the probe test can pass
    #[arg(long, global = true)]
    min_evaluations: Option<usize>,
    /// Fraction of evaluations in which a feature must beat the probe
    #[arg(long, global = true)]
    pass_fraction: Option<f64>,
    /// JSON-lines trace of the SRS iterations
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    /// chaining, clique or marginal_only (default: all three)
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Number of features
    #[arg(long, global = true)]
    p: Option<u64>,
    /// Number of relevant features
    #[arg(long, global = true)]
    r: Option<u64>,
    /// Monte-Carlo runs of the idealized process
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Nodes of a synthetic network
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Edge probability of a synthetic network
    #[arg(long, global = true)]
    density: Option<f64>,
    /// Time steps of a synthetic series
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// linear or spiking
    #[arg(long, global = true)]
    dynamics: Option<String>,
    /// CSV time series
    #[arg(long, global = true)]
    series: Option<PathBuf>,
    /// CSV edge list of the true network
    #[arg(long, global = true)]
    truth: Option<PathBuf>,
    /// CSV edge scores
    #[arg(long, global = true)]
    scores: Option<PathBuf>,
    /// Break score symmetry with the directivity heuristic
    #[arg(long, global = true)]
    #[serde(default)]
    directivity: bool,
    /// Score pairs as unordered
    #[arg(long, global = true)]
    #[serde(default)]
    undirected: bool,
}

const COMMON: &[&str] = &["seed", "threads", "format", "out", "config", "decimals"];

fn allowed(verb: Verb) -> &'static [&'static str] {
    match verb {
        Verb::Gen => &[
            "problem", "samples", "exact", "nodes", "density", "steps", "dynamics", "truth",
        ],
        Verb::Importance => &[
            "oracle", "dist", "data", "target", "context", "trees", "K", "depth", "method", "q", "rows", "family",
            "measure", "permutations",
        ],
        Verb::Context => &[
            "oracle", "dist", "data", "target", "context", "trees", "K", "depth", "method", "q", "rows", "family",
            "permutations", "min_stratum",
        ],
        Verb::Srs => &[
            "dist", "data", "target", "context", "K", "depth", "method", "alpha", "q", "iterations", "family", "mode",
            "min_evaluations", "pass_fraction", "trace",
        ],
        Verb::SrsTheory => &["scenario", "method", "p", "q", "r", "iterations", "runs"],
        Verb::Netinfer => &[
            "series", "method", "filter", "tau", "components", "trees", "K", "directivity",
        ],
        Verb::Eval => &["scores", "truth", "series", "undirected"],
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(forest_importance::Error),
}

impl From<forest_importance::Error> for CliError {
    fn from(e: forest_importance::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Non-default entries of the flags as a JSON object.
fn set_entries(flags: &Flags) -> Map<String, Value> {
    match serde_json::to_value(flags).expect("flags serialize") {
        Value::Object(mut m) => {
            m.retain(|_, v| !v.is_null() && *v != Value::Bool(false));
            m
        }
        _ => unreachable!(),
    }
}

fn resolve_flags(verb: Verb, cli: &Flags) -> CliResult<Flags> {
    let given = set_entries(cli);
    for key in given.keys() {
        if !COMMON.contains(&key.as_str()) && !allowed(verb).contains(&key.as_str()) {
            let flag = if key == "K" { "K".to_string() } else { key.replace('_', "-") };
            return Err(usage(format!("--{flag} is not used by `{verb}`")));
        }
    }
    let mut merged = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(existing(path)?)?;
            let file: Flags = serde_json::from_str(&text)
                .map_err(|e| usage(format!("config file {}: {e}", path.display())))?;
            let mut m = set_entries(&file);
            m.retain(|k, _| COMMON.contains(&k.as_str()) || allowed(verb).contains(&k.as_str()));
            m
        }
        None => Map::new(),
    };
    merged.extend(given);
    merged.remove("config");
    merged.entry("seed").or_insert(Value::from(0u64));
    Ok(serde_json::from_value(Value::Object(merged))?)
}

fn require<'a, T>(value: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    value.as_ref().ok_or_else(|| usage(format!("--{flag} is required")))
}

/// Parses a value through its serde name.
fn parse_named<T: DeserializeOwned>(s: &str, flag: &str) -> CliResult<T> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| usage(format!("invalid --{flag} {s:?}")))
}

fn output_format(flags: &Flags) -> CliResult<Format> {
    if let Some(f) = &flags.format {
        return f.parse().map_err(|e: forest_importance::Error| usage(e.to_string()));
    }
    let ext = flags.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str());
    Ok(match ext {
        Some("json") => Format::Json,
        Some("md") => Format::Markdown,
        _ => Format::Csv,
    })
}

fn decimals(flags: &Flags) -> usize {
    flags.decimals.unwrap_or(DEFAULT_DECIMALS)
}

fn emit(flags: &Flags, text: &str) -> CliResult<()> {
    match &flags.out {
        Some(path) => {
            fs::write(path, text)?;
            log::info!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Fails with the path in the message when an input file is missing.
fn existing(path: &Path) -> CliResult<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::Runtime(forest_importance::Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no such file: {}", path.display()),
        ))))
    }
}

fn out_path(flags: &Flags) -> CliResult<&Path> {
    Ok(require(&flags.out, "out")?.as_path())
}

fn load_dataset(flags: &Flags) -> CliResult<Dataset> {
    match (&flags.data, &flags.dist) {
        (Some(_), Some(_)) => Err(usage("give either --data or --dist, not both")),
        (Some(path), None) => Ok(load_csv(existing(path)?, flags.target.as_deref(), flags.context.as_deref())?),
        (None, Some(path)) => Ok(load_distribution(existing(path)?)?.to_exact_dataset()),
        (None, None) => Err(usage("--data or --dist is required")),
    }
}

fn load_dist(flags: &Flags) -> CliResult<JointDistribution> {
    Ok(load_distribution(existing(require(&flags.dist, "dist")?)?)?)
}

fn split_family(flags: &Flags) -> CliResult<SplitFamily> {
    match flags.family.as_deref() {
        None | Some("multiway") => Ok(SplitFamily::MultiwayExhaustive),
        Some(s) => parse_named(s, "family"),
    }
}

fn tree_config(flags: &Flags) -> CliResult<TreeConfig> {
    Ok(TreeConfig {
        k: flags.k,
        max_depth: flags.depth,
        split_family: split_family(flags)?,
        ..TreeConfig::default()
    })
}

fn forest_config(flags: &Flags) -> CliResult<ForestConfig> {
    let q = || require(&flags.q, "q").copied();
    let method = match flags.method.as_deref().unwrap_or("trt") {
        "bagging" => Method::Bagging,
        "rs" => Method::RandomSubspace { q: q()? },
        "rp" => Method::RandomPatches {
            q: q()?,
            l: *require(&flags.rows, "rows")?,
        },
        "et" => Method::ExtraTrees,
        "trt" => Method::TotallyRandomized,
        other => return Err(usage(format!("invalid --method {other:?} (bagging, rs, rp, et or trt)"))),
    };
    let seed = flags.seed.unwrap_or(0);
    Ok(ForestConfig::new(method, flags.trees.unwrap_or(1000), tree_config(flags)?, seed))
}

fn cmd_gen(flags: &Flags) -> CliResult<()> {
    let name = require(&flags.problem, "problem")?;
    let seed = flags.seed.unwrap_or(0);
    if name == "network" {
        let dynamics = match flags.dynamics.as_deref().unwrap_or("linear") {
            "linear" => Dynamics::LinearGaussian,
            "spiking" => Dynamics::spiking(),
            other => return Err(usage(format!("invalid --dynamics {other:?} (linear or spiking)"))),
        };
        let config = SynthConfig {
            dynamics,
            ..SynthConfig::new(
                flags.nodes.unwrap_or(30),
                flags.density.unwrap_or(0.1),
                flags.steps.unwrap_or(1000),
                seed,
            )
        };
        let (series, edges) = synth_network(&config)?;
        save_series(&series, out_path(flags)?)?;
        if let Some(truth) = &flags.truth {
            save_truth(&edges, series.names(), truth)?;
        }
        return Ok(());
    }
    if flags.truth.is_some() || flags.nodes.is_some() || flags.density.is_some() || flags.steps.is_some() {
        return Err(usage("--truth, --nodes, --density and --steps need --problem network"));
    }
    let problem: Problem = name.parse().map_err(|e: forest_importance::Error| usage(e.to_string()))?;
    let dist = generate(problem)?;
    match (flags.samples, flags.exact) {
        (Some(_), true) => Err(usage("give either --samples or --exact, not both")),
        (Some(n), false) => Ok(save_csv(&dist.sample(n, seed)?, out_path(flags)?)?),
        (None, true) => Ok(save_csv(&dist.to_exact_dataset(), out_path(flags)?)?),
        (None, false) => match &flags.out {
            Some(path) => Ok(save_distribution(&dist, path)?),
            None => emit(flags, &(serde_json::to_string_pretty(&dist)? + "\n")),
        },
    }
}

fn cmd_importance(flags: &Flags) -> CliResult<()> {
    let report = if flags.oracle {
        let dist = load_dist(flags)?;
        let depth = flags.depth.unwrap_or(dist.n_inputs());
        asymptotic_mdi_report(&dist, depth)?
    } else {
        let dataset = load_dataset(flags)?;
        let forest = build_forest(&dataset, &forest_config(flags)?)?;
        let loss = if dataset.is_classification() { Loss::ZeroOne } else { Loss::Mse };
        let repeats = flags.permutations.unwrap_or(10);
        let seed = flags.seed.unwrap_or(0);
        match flags.measure.as_deref().unwrap_or("mdi") {
            "mdi" => mdi(&forest, &dataset),
            "mda" => mda(&forest, &dataset, loss, repeats, seed)?,
            "mda_z" => mda_zscore(&forest, &dataset, loss, repeats, seed)?,
            "frequency" => selection_frequency(&forest, &dataset)?,
            other => {
                return Err(usage(format!(
                    "invalid --measure {other:?} (mdi, mda, mda_z or frequency)"
                )))
            }
        }
    };
    emit(flags, &render_importance(&report, output_format(flags)?, decimals(flags)))
}

fn cmd_context(flags: &Flags) -> CliResult<()> {
    let report = if flags.oracle {
        asymptotic_contextual(&load_dist(flags)?)?
    } else {
        let dataset = load_dataset(flags)?;
        if dataset.context().is_none() {
            return Err(usage("the dataset has no context column; pass --context"));
        }
        let default_stratum = match dataset.weights() {
            Some(_) => 1,
            None => ContextConfig::default().min_stratum_rows,
        };
        let config = ContextConfig {
            min_stratum_rows: flags.min_stratum.unwrap_or(default_stratum),
            ..ContextConfig::default()
        };
        let forest_config = forest_config(flags)?;
        match flags.permutations {
            Some(n) => ctx_pvalues(&forest_config, &dataset, &config, n, flags.seed.unwrap_or(0))?,
            None => contextual_importances(&build_forest(&dataset, &forest_config)?, &dataset, &config)?,
        }
    };
    emit(flags, &render_context(&report, output_format(flags)?, decimals(flags)))
}

fn cmd_srs(flags: &Flags) -> CliResult<()> {
    let dataset = load_dataset(flags)?;
    let defaults = SrsConfig::default();
    let config = SrsConfig {
        q: flags.q.unwrap_or(defaults.q.min(dataset.inputs().len())),
        iterations: flags.iterations.unwrap_or(defaults.iterations),
        alpha: flags.alpha.unwrap_or(defaults.alpha),
        k: flags.k.unwrap_or(defaults.k),
        min_evaluations: flags.min_evaluations.unwrap_or(defaults.min_evaluations),
        pass_fraction: flags.pass_fraction.unwrap_or(defaults.pass_fraction),
        mode: match flags.mode.as_deref() {
            None => defaults.mode,
            Some(s) => parse_named::<RelevanceMode>(s, "mode")?,
        },
        tree: tree_config(flags)?,
        seed: flags.seed.unwrap_or(0),
    };
    let (_, trace) = match flags.method.as_deref().unwrap_or("srs") {
        "srs" => srs_run(&dataset, &config)?,
        "rs" => random_subspace_run(&dataset, &config)?,
        other => return Err(usage(format!("invalid --method {other:?} (srs or rs)"))),
    };
    if let Some(path) = &flags.trace {
        trace.write_jsonl(std::io::BufWriter::new(fs::File::create(path)?))?;
    }
    let mut table = Table::new(["variable", "discovered_at", "evaluations", "wins"]);
    for &c in &trace.found {
        let stats = trace.stats.iter().find(|s| s.column == c);
        table.push(vec![
            dataset.column(c).name.clone(),
            trace.discovery_iteration(c).map_or_else(String::new, |i| i.to_string()),
            stats.map_or(0, |s| s.evaluations).to_string(),
            stats.map_or(0, |s| s.wins).to_string(),
        ]);
    }
    emit(flags, &table.render(output_format(flags)?))
}

fn cmd_srs_theory(flags: &Flags) -> CliResult<()> {
    let scenarios = match flags.scenario.as_deref() {
        None => vec![Scenario::Chaining, Scenario::Clique, Scenario::MarginalOnly],
        Some(s) => vec![parse_named::<Scenario>(s, "scenario")?],
    };
    let methods = match flags.method.as_deref() {
        None => vec![SubspaceMethod::Rs, SubspaceMethod::Srs],
        Some(s) => vec![parse_named::<SubspaceMethod>(&s.to_ascii_uppercase(), "method")?],
    };
    let (p, q, r) = (*require(&flags.p, "p")?, *require(&flags.q, "q")? as u64, *require(&flags.r, "r")?);
    let mut models = Vec::new();
    for &s in &scenarios {
        for &m in &methods {
            models.push(ScenarioModel::new(s, m, p, q, r)?);
        }
    }
    let label = |m: &ScenarioModel| {
        let s = serde_json::to_value(m.scenario).expect("serializable");
        let t = serde_json::to_value(m.method).expect("serializable");
        (s.as_str().unwrap_or_default().to_string(), t.as_str().unwrap_or_default().to_string())
    };
    let d = decimals(flags);
    let table = if let Some(steps) = flags.iterations {
        let mut header = vec!["step".to_string()];
        let mut curves = Vec::new();
        for m in &models {
            let (s, t) = label(m);
            header.push(format!("{s}_{t}"));
            curves.push(expected_found_curve(&markov_transition_matrix(m)?, steps)?);
        }
        let mut table = Table::new(header);
        for step in 0..=steps {
            let mut row = vec![step.to_string()];
            row.extend(curves.iter().map(|c| fmt_float(c[step], d)));
            table.push(row);
        }
        table
    } else {
        let mut header = vec!["scenario", "method", "p", "q", "r", "closed_form", "markov"];
        if flags.runs.is_some() {
            header.push("simulated");
        }
        let mut table = Table::new(header);
        for m in &models {
            let (s, t) = label(m);
            let closed = match m.scenario {
                Scenario::MarginalOnly => f64::NAN,
                _ => expected_time(m, r)?,
            };
            let mut row = vec![
                s,
                t,
                p.to_string(),
                q.to_string(),
                r.to_string(),
                fmt_float(closed, d),
                fmt_float(markov_expected_time(&markov_transition_matrix(m)?)?, d),
            ];
            if let Some(runs) = flags.runs {
                row.push(fmt_float(simulate_expected_time(m, runs, flags.seed.unwrap_or(0))?, d));
            }
            table.push(row);
        }
        table
    };
    emit(flags, &table.render(output_format(flags)?))
}

fn single_spec(flags: &Flags, filter: &str) -> CliResult<FilterSpec> {
    let low_pass = match filter {
        "none" => None,
        f => Some(f.parse::<LowPass>().map_err(|e| usage(e.to_string()))?),
    };
    Ok(FilterSpec {
        low_pass,
        tau: flags.tau.unwrap_or(FilterSpec::default().tau),
        ..FilterSpec::default()
    })
}

fn cmd_netinfer(flags: &Flags) -> CliResult<()> {
    let series = load_series(existing(require(&flags.series, "series")?)?)?;
    let filter = flags.filter.as_deref().unwrap_or("f1");
    let method = flags.method.as_deref().unwrap_or("pc");
    if filter == "grid" && flags.tau.is_some() {
        return Err(usage("--tau is fixed by --filter grid"));
    }
    let filtered: TimeSeries = match filter {
        "raw" => series.clone(),
        "grid" => preprocess(&series, &FilterSpec::default())?,
        f => preprocess(&series, &single_spec(flags, f)?)?,
    };
    let scores: ScoreMatrix = match (method, filter) {
        ("pc", "grid") => {
            let (specs, weights) = challenge_grid();
            averaged_partial_correlation(&series, &specs, &weights, flags.components)?
        }
        ("pc", _) => partial_correlation(&filtered, flags.components)?,
        (_, "grid") => return Err(usage("--filter grid only applies to --method pc")),
        ("corr", _) => correlation(&filtered),
        ("genie3", _) => {
            let mut config = genie3_forest_config(series.n_nodes(), flags.trees.unwrap_or(100), flags.seed.unwrap_or(0));
            if let Some(k) = flags.k {
                config.tree.k = Some(k);
            }
            genie3_scores(&filtered, &config)?
        }
        (other, _) => return Err(usage(format!("invalid --method {other:?} (pc, corr or genie3)"))),
    };
    let scores = if flags.directivity {
        directivity_adjust(&filtered, &scores, &DirectivityParams::default())?
    } else {
        scores
    };
    emit(flags, &render_scores(&scores, output_format(flags)?, decimals(flags)))
}

fn cmd_eval(flags: &Flags) -> CliResult<()> {
    let names = match &flags.series {
        Some(path) => Some(load_series(existing(path)?)?.names().to_vec()),
        None => None,
    };
    let scores = load_scores(existing(require(&flags.scores, "scores")?)?, names.as_deref())?;
    let truth = load_truth(existing(require(&flags.truth, "truth")?)?, &scores.names)?;
    let mode = if flags.undirected { EdgeMode::Undirected } else { EdgeMode::Directed };
    let e = evaluate(&scores, &truth, mode)?;
    let d = decimals(flags);
    let mut table = Table::new(["auroc", "auprc", "n_positive", "n_candidates"]);
    table.push(vec![
        fmt_float(e.auroc, d),
        fmt_float(e.auprc, d),
        e.n_positive.to_string(),
        e.n_candidates.to_string(),
    ]);
    emit(flags, &table.render(output_format(flags)?))
}

fn run(cli: Cli) -> CliResult<()> {
    let flags = resolve_flags(cli.verb, &cli.flags)?;
    eprintln!("# fimp {} {}", cli.verb, serde_json::to_string(&set_entries(&flags))?);
    if let Some(n) = flags.threads.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| forest_importance::Error::Config(e.to_string()))?;
    }
    match cli.verb {
        Verb::Gen => cmd_gen(&flags),
        Verb::Importance => cmd_importance(&flags),
        Verb::Context => cmd_context(&flags),
        Verb::Srs => cmd_srs(&flags),
        Verb::SrsTheory => cmd_srs_theory(&flags),
        Verb::Netinfer => cmd_netinfer(&flags),
        Verb::Eval => cmd_eval(&flags),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
