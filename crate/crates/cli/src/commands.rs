//! The `analyze`, `simulate` and `selftest` workflows.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use setgc_core::bootstrap::{bootstrap_replicate, resolve_block_length, summarize};
use setgc_core::graph::EdgeTest;
use setgc_core::lagcov::{assemble_blocks, conditional_cov};
use setgc_core::pcca::{canonical_loadings, solve_pcca, LoadingReport, DEFAULT_TOL};
use setgc_core::rng::derive_seed;
use setgc_core::sim::SET_LABELS;
use setgc_core::{
    build_graph, lag_align, to_dot, BootstrapConfig, DetectionMatrix, LaggedDesign, Method, SetGraph,
    SetPartition, SimKind, SimSpec,
};

use crate::error::CliError;
use crate::io;
use crate::montecarlo::{run_monte_carlo, with_workers};

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeConfig {
    pub panel: PathBuf,
    pub partition: PathBuf,
    pub out: PathBuf,
    pub bootstrap: BootstrapConfig,
    pub skip_self_loops: bool,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateConfig {
    pub spec: SimSpec,
    pub methods: Vec<Method>,
    pub runs: u64,
    pub out: PathBuf,
    pub bootstrap: BootstrapConfig,
    pub workers: usize,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    include_unassigned_in_x: bool,
    ridge: String,
}

fn manifest_json<C: Serialize>(command: &'static str, config: &C, boot: &BootstrapConfig) -> Result<String, CliError> {
    pretty(&Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        include_unassigned_in_x: boot.conditioning.include_unassigned,
        ridge: format!("{:?}", boot.ridge),
    })
}

/// Ordered `(from, to)` label pairs tested by `analyze`.
pub fn edge_pairs(partition: &SetPartition, skip_self_loops: bool) -> Vec<(String, String)> {
    let labels = partition.labels();
    labels
        .iter()
        .flat_map(|from| labels.iter().map(move |to| (from.clone(), to.clone())))
        .filter(|(f, t)| !(skip_self_loops && f == t))
        .collect()
}

/// Bootstrap test of one edge, replicates spread over the rayon pool.
pub fn test_edge(
    design: &LaggedDesign,
    partition: &SetPartition,
    from: &str,
    to: &str,
    cfg: &BootstrapConfig,
) -> Result<setgc_core::GcTestResult, setgc_core::Error> {
    let l = resolve_block_length(design, cfg)?;
    let blocks = assemble_blocks(design, partition, to, from, cfg.conditioning)?;
    let rho_hat = setgc_core::pcca::leading_rho(&conditional_cov(&blocks, cfg.ridge)?, DEFAULT_TOL)?;
    let outcomes = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| bootstrap_replicate(design, partition, to, from, cfg, l, b))
        .collect();
    summarize(rho_hat, outcomes, l, cfg)
}

#[derive(Debug, Clone, Serialize)]
struct JsonConfig {
    #[serde(rename = "B")]
    b: usize,
    l: usize,
    alpha: f64,
    seed: u64,
}

#[derive(Serialize)]
struct ResultsJson<'a> {
    nodes: &'a [setgc_core::graph::Node],
    edges: &'a [setgc_core::graph::Edge],
    config: JsonConfig,
}

#[derive(Debug, Serialize)]
struct EdgeLoadings {
    from: String,
    to: String,
    eigenvalues: Vec<f64>,
    loadings: LoadingReport,
}

/// Everything `analyze` produces, before anything is written.
#[derive(Debug)]
pub struct Analysis {
    pub graph: SetGraph,
    pub tests: Vec<EdgeTest>,
    pub block_length: usize,
    loadings: Vec<EdgeLoadings>,
}

pub fn analyze(cfg: &AnalyzeConfig) -> Result<Analysis, CliError> {
    let panel = io::load_panel(&cfg.panel)?;
    let partition = io::load_partition(&cfg.partition)?;
    partition.check_against(panel.names()).map_err(|e| CliError::invalid(&cfg.partition, e))?;
    let design = lag_align(&panel)?;
    let block_length = resolve_block_length(&design, &cfg.bootstrap)?;
    let labels = partition.labels().to_vec();

    let pairs = edge_pairs(&partition, cfg.skip_self_loops);
    let outcomes: Vec<Result<(EdgeTest, EdgeLoadings), CliError>> = with_workers(cfg.workers, || {
        pairs
            .par_iter()
            .map(|(from, to)| {
                let edge_err = |source| CliError::Edge { from: from.clone(), to: to.clone(), source };
                let fi = labels.iter().position(|l| l == from).unwrap_or(0) as u64;
                let ti = labels.iter().position(|l| l == to).unwrap_or(0) as u64;
                let edge_cfg = BootstrapConfig { seed: derive_seed(cfg.bootstrap.seed, &[fi, ti]), ..cfg.bootstrap };
                let result = test_edge(&design, &partition, from, to, &edge_cfg).map_err(edge_err)?;
                let blocks = assemble_blocks(&design, &partition, to, from, cfg.bootstrap.conditioning).map_err(edge_err)?;
                let pcca = solve_pcca(&conditional_cov(&blocks, cfg.bootstrap.ridge).map_err(edge_err)?, DEFAULT_TOL)
                    .map_err(edge_err)?;
                let names = |cols: &[usize]| cols.iter().map(|&c| design.names()[c].clone()).collect::<Vec<_>>();
                let loadings = canonical_loadings(&pcca, &names(&blocks.effect_columns), &names(&blocks.cause_columns));
                Ok((
                    EdgeTest { from: from.clone(), to: to.clone(), result },
                    EdgeLoadings { from: from.clone(), to: to.clone(), eigenvalues: pcca.eigenvalues, loadings },
                ))
            })
            .collect()
    });
    let mut tests = Vec::with_capacity(outcomes.len());
    let mut loadings = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let (t, l) = o?;
        tests.push(t);
        loadings.push(l);
    }
    let graph = build_graph(&partition, &tests)?;
    Ok(Analysis { graph, tests, block_length, loadings })
}

fn summary_table(a: &Analysis, cfg: &AnalyzeConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# bootstraps={} block_length={} alpha={} seed={}",
        cfg.bootstrap.replicates, a.block_length, cfg.bootstrap.alpha, cfg.bootstrap.seed
    );
    let _ = writeln!(out, "{:<12} {:<12} {:>8} {:>8} {:>8}  significant", "from", "to", "rho", "p", "tier");
    for e in &a.graph.edges {
        let t = a.tests.iter().find(|t| t.from == e.from && t.to == e.to).map(|t| t.result.significant);
        let _ = writeln!(
            out,
            "{:<12} {:<12} {:>8.4} {:>8.4} {:>8}  {}",
            e.from,
            e.to,
            e.rho,
            e.p_value,
            format!("{:?}", e.tier).to_lowercase(),
            if t == Some(true) { "yes" } else { "no" }
        );
    }
    out
}

/// Runs the analysis and writes `graph.dot`, `results.json`,
/// `loadings.json`, `summary.txt` and `manifest.json` into `cfg.out`.
pub fn cmd_analyze(cfg: &AnalyzeConfig) -> Result<Analysis, CliError> {
    let analysis = analyze(cfg)?;
    let results = ResultsJson {
        nodes: &analysis.graph.nodes,
        edges: &analysis.graph.edges,
        config: JsonConfig {
            b: cfg.bootstrap.replicates,
            l: analysis.block_length,
            alpha: cfg.bootstrap.alpha,
            seed: cfg.bootstrap.seed,
        },
    };
    io::write_text(&io::output_path(&cfg.out, "graph.dot")?, &to_dot(&analysis.graph))?;
    io::write_text(&io::output_path(&cfg.out, "results.json")?, &pretty(&results)?)?;
    io::write_text(&io::output_path(&cfg.out, "loadings.json")?, &pretty(&analysis.loadings)?)?;
    io::write_text(&io::output_path(&cfg.out, "summary.txt")?, &summary_table(&analysis, cfg))?;
    io::write_text(&io::output_path(&cfg.out, "manifest.json")?, &manifest_json("analyze", cfg, &cfg.bootstrap)?)?;
    Ok(analysis)
}

fn pretty<T: Serialize + ?Sized>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Pass/fail of a simulated rate against the reference rates: null cells
/// must sit within three binomial standard errors of alpha, true edges
/// within 0.07 of the reference detection rate.
pub fn calibration_report(kind: SimKind, mats: &[DetectionMatrix], alpha: f64) -> (String, bool) {
    let truth = kind.truth();
    let mut out = String::new();
    let mut all_ok = true;
    for m in mats {
        let reference = kind.reference_rates(m.method);
        let _ = writeln!(out, "[{}] runs={}", m.method.tag(), m.runs);
        let band = 3.0 * (alpha * (1.0 - alpha) / m.runs.max(1) as f64).sqrt();
        for (f, from) in SET_LABELS.iter().enumerate() {
            for (t, to) in SET_LABELS.iter().enumerate() {
                let rate = m.rate(f, t);
                let (target, ok) = if truth[f][t] {
                    match reference {
                        Some(r) => (format!("reference {:.4} +/- 0.07", r[f][t]), (rate - r[f][t]).abs() <= 0.07),
                        None => ("true edge".to_string(), true),
                    }
                } else {
                    (format!("{alpha:.2} +/- {band:.4}"), (rate - alpha).abs() <= band)
                };
                all_ok &= ok;
                let _ = writeln!(
                    out,
                    "  {from:>3} -> {to:<3} rate={rate:.4} se={:.4} target {target}: {}",
                    m.std_error(f, t),
                    if ok { "PASS" } else { "FAIL" }
                );
            }
        }
    }
    (out, all_ok)
}

pub fn cmd_simulate(cfg: &SimulateConfig) -> Result<Vec<DetectionMatrix>, CliError> {
    if cfg.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(CliError::Usage("--methods must name at least one method".into()));
    }
    cfg.bootstrap.validate()?;
    setgc_core::generate(&cfg.spec)?;
    let mats = with_workers(cfg.workers, || run_monte_carlo(&cfg.spec, &cfg.methods, cfg.runs, &cfg.bootstrap))?;
    for m in &mats {
        let tag = m.method.tag();
        io::write_text(&io::output_path(&cfg.out, &format!("counts_{tag}.csv"))?, &io::counts_csv(m))?;
        io::write_text(&io::output_path(&cfg.out, &format!("rates_{tag}.csv"))?, &io::rates_csv(m))?;
        io::write_text(&io::output_path(&cfg.out, &format!("stderr_{tag}.csv"))?, &io::std_errors_csv(m))?;
    }
    io::write_text(&io::output_path(&cfg.out, "truth.csv")?, &io::truth_csv(&cfg.spec.kind.truth()))?;
    let (report, _) = calibration_report(cfg.spec.kind, &mats, cfg.bootstrap.alpha);
    io::write_text(&io::output_path(&cfg.out, "calibration.txt")?, &report)?;
    io::write_text(&io::output_path(&cfg.out, "manifest.json")?, &manifest_json("simulate", cfg, &cfg.bootstrap)?)?;
    Ok(mats)
}

/// Quick internal consistency battery; returns the report and overall status.
pub fn cmd_selftest(seed: u64) -> (String, bool) {
    crate::selftest::run(seed)
}
