//! Experiment configuration, the generate / solve / validate / simulate /
//! aggregate lifecycle, and report files.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{
    generate_sfcrs, load_catalog, load_sfcrs, validate_sfcrs, Catalog, CatalogDocument, SfcRequest,
    DEFAULT_CATALOG_JSON,
};
use crate::engine::{simulate, EngineConfig, EngineEvaluator};
use crate::seed::stage_seed;
use crate::solver::{
    ga_solve, replay_scheme, solve_simple_dijkstra, EmbeddingScheme, EvolutionTrace, GaParams, Outcome,
};
use crate::telemetry::{bin_latencies, mean_latency, TelemetryFrame, DEFAULT_BIN_WIDTH_MS};
use crate::topology::{NetworkSpec, SubstrateNetwork};

/// Lifecycle stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Solve,
    Validate,
    Simulate,
    Aggregate,
    Io,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Solve => "solve",
            Stage::Validate => "validate",
            Stage::Simulate => "simulate",
            Stage::Aggregate => "aggregate",
            Stage::Io => "io",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct ExperimentError {
    pub stage: Stage,
    pub message: String,
}

impl ExperimentError {
    pub fn new(stage: Stage, message: impl fmt::Display) -> Self {
        Self { stage, message: message.to_string() }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        Self::new(Stage::Config, message)
    }

    pub fn is_config(&self) -> bool {
        self.stage == Stage::Config
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CatalogSource {
    Path(String),
    Inline(CatalogDocument),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SfcrSource {
    Path(String),
    Inline(Vec<SfcRequest>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "simple-dijkstra")]
    SimpleDijkstra,
    #[serde(rename = "ga")]
    Ga,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::SimpleDijkstra => "simple-dijkstra",
            SolverKind::Ga => "ga",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    #[serde(default)]
    pub ga: GaParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Base directory; runs go to a timestamped subdirectory of it.
    pub directory: Option<String>,
    pub formats: Vec<ReportFormat>,
    pub bin_width_ms: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            formats: vec![ReportFormat::Json, ReportFormat::Csv],
            bin_width_ms: DEFAULT_BIN_WIDTH_MS,
        }
    }
}

/// Experiment config file. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSpec,
    /// Path (relative to the config file) or inline document; the bundled
    /// catalog when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogSource>,
    pub sfcrs: SfcrSource,
    pub duplicates: usize,
    pub solver: SolverConfig,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub seed: u64,
}

/// A config with every reference resolved and validated.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub network: SubstrateNetwork,
    pub catalog: Catalog,
    pub templates: Vec<SfcRequest>,
    pub sfcrs: Vec<SfcRequest>,
}

#[derive(Serialize)]
struct DigestInput<'a> {
    network: &'a NetworkSpec,
    catalog: Vec<&'a crate::catalog::VnfDescriptor>,
    templates: &'a [SfcRequest],
    duplicates: usize,
    solver: &'a SolverConfig,
    engine: &'a EngineConfig,
    seed: u64,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::config(format!("{}: {e}", path.display())))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| ExperimentError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_config(config, base)
    }

    /// Resolves file references against `base_dir`.
    pub fn from_config(config: ExperimentConfig, base_dir: &Path) -> Result<Self, ExperimentError> {
        let read = |rel: &str| {
            let p = base_dir.join(rel);
            fs::read_to_string(&p).map_err(|e| ExperimentError::config(format!("{}: {e}", p.display())))
        };
        let network =
            SubstrateNetwork::new(&config.network).map_err(|e| ExperimentError::config(format!("network: {e}")))?;
        let catalog = match &config.catalog {
            None => load_catalog(DEFAULT_CATALOG_JSON),
            Some(CatalogSource::Path(p)) => load_catalog(&read(p)?),
            Some(CatalogSource::Inline(doc)) => Catalog::from_descriptors(doc.vnfs.clone()),
        }
        .map_err(|e| ExperimentError::config(format!("catalog: {e}")))?;
        let templates = match &config.sfcrs {
            SfcrSource::Path(p) => load_sfcrs(&read(p)?).map_err(|e| ExperimentError::config(format!("sfcrs: {e}")))?,
            SfcrSource::Inline(v) => v.clone(),
        };
        if templates.is_empty() {
            return Err(ExperimentError::config("sfcrs: no templates"));
        }
        validate_sfcrs(&templates, &catalog).map_err(|e| ExperimentError::config(format!("sfcrs: {e}")))?;
        config.engine.validate().map_err(|e| ExperimentError::config(format!("engine: {e}")))?;
        if config.solver.kind == SolverKind::Ga {
            config.solver.ga.validate().map_err(|e| ExperimentError::config(format!("solver.ga: {e}")))?;
            if network.compute_hosts().is_empty() {
                return Err(ExperimentError::config("network: no hosts available for placement"));
            }
        }
        if !(config.output.bin_width_ms > 0.0) {
            return Err(ExperimentError::config("output.bin_width_ms must be positive"));
        }
        let sfcrs = generate_sfcrs(&templates, config.duplicates, config.seed);
        validate_sfcrs(&sfcrs, &catalog).map_err(|e| ExperimentError::config(format!("generated sfcrs: {e}")))?;
        Ok(Self { config, network, catalog, templates, sfcrs })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.seed = seed;
        self.sfcrs = generate_sfcrs(&self.templates, self.config.duplicates, seed);
        self
    }

    /// SHA-256 over everything that determines the run's results.
    pub fn digest(&self) -> String {
        let input = DigestInput {
            network: &self.config.network,
            catalog: self.catalog.iter().collect(),
            templates: &self.templates,
            duplicates: self.config.duplicates,
            solver: &self.config.solver,
            engine: &self.config.engine,
            seed: self.config.seed,
        };
        let bytes = serde_json::to_vec(&input).expect("digest input serializes");
        let hash = Sha256::digest(&bytes);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn engine_config(&self) -> EngineConfig {
        let mut cfg = self.config.engine.clone();
        cfg.seed.get_or_insert(stage_seed(self.config.seed, "engine"));
        cfg
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Bounds concurrent GA evaluations.
    pub parallelism: Option<usize>,
}

/// Result of running only the solver.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub scheme: EmbeddingScheme,
    pub trace: Option<EvolutionTrace>,
    pub solve_time: Duration,
}

pub fn solve(exp: &Experiment, options: &RunOptions) -> Result<SolveResult, ExperimentError> {
    let started = Instant::now();
    let (scheme, trace) = match exp.config.solver.kind {
        SolverKind::SimpleDijkstra => {
            let mut net = exp.network.clone();
            let scheme = solve_simple_dijkstra(&mut net, &exp.sfcrs, &exp.catalog)
                .map_err(|e| ExperimentError::new(Stage::Solve, e))?;
            (scheme, None)
        }
        SolverKind::Ga => {
            let evaluator = EngineEvaluator {
                net: &exp.network,
                sfcrs: &exp.sfcrs,
                catalog: &exp.catalog,
                config: exp.engine_config(),
            };
            let out = ga_solve(
                &exp.network,
                &exp.sfcrs,
                &exp.catalog,
                &exp.config.solver.ga,
                &evaluator,
                stage_seed(exp.config.seed, "solver"),
                options.parallelism,
            )
            .map_err(|e| ExperimentError::new(Stage::Solve, e))?;
            (out.best, Some(out.trace))
        }
    };
    Ok(SolveResult { scheme, trace, solve_time: started.elapsed() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub sfcr_id: String,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Host per chain position for accepted requests.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub placement: Vec<String>,
}

/// Everything a run produces. `solve_time` is wall-clock and therefore not
/// part of the serialized report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config_digest: String,
    pub seed: u64,
    pub solver: SolverKind,
    pub outcomes: Vec<OutcomeRecord>,
    pub acceptance_ratio: f64,
    pub mean_latency_ms: Option<f64>,
    pub frames: Vec<TelemetryFrame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<EvolutionTrace>,
    #[serde(skip)]
    pub solve_time: Duration,
}

impl PartialEq for ExperimentReport {
    fn eq(&self, other: &Self) -> bool {
        self.config_digest == other.config_digest
            && self.seed == other.seed
            && self.solver == other.solver
            && self.outcomes == other.outcomes
            && self.acceptance_ratio == other.acceptance_ratio
            && self.mean_latency_ms == other.mean_latency_ms
            && self.frames == other.frames
            && self.trace == other.trace
    }
}

impl ExperimentReport {
    pub fn accepted_ids(&self) -> Vec<&str> {
        self.outcomes.iter().filter(|o| o.accepted).map(|o| o.sfcr_id.as_str()).collect()
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::config(format!("report: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn outcome_records(exp: &Experiment, scheme: &EmbeddingScheme) -> Vec<OutcomeRecord> {
    scheme
        .entries
        .iter()
        .map(|e| match &e.outcome {
            Outcome::Accepted(p) => OutcomeRecord {
                sfcr_id: e.sfcr_id.clone(),
                accepted: true,
                reason: None,
                placement: p.hosts.iter().map(|&h| exp.network.host_id(h).to_string()).collect(),
            },
            Outcome::Rejected(r) => OutcomeRecord {
                sfcr_id: e.sfcr_id.clone(),
                accepted: false,
                reason: Some(r.to_string()),
                placement: Vec::new(),
            },
        })
        .collect()
}

/// Full lifecycle for a loaded experiment.
pub fn run_experiment(exp: &Experiment, options: &RunOptions) -> Result<ExperimentReport, ExperimentError> {
    let solved = solve(exp, options)?;

    replay_scheme(&exp.network, &solved.scheme, &exp.sfcrs, &exp.catalog)
        .map_err(|e| ExperimentError::new(Stage::Validate, e))?;

    let frames = simulate(&exp.network, &solved.scheme, &exp.sfcrs, &exp.catalog, &exp.engine_config())
        .map_err(|e| ExperimentError::new(Stage::Simulate, e))?;

    let acceptance_ratio = solved.scheme.acceptance_ratio().map_err(|e| ExperimentError::new(Stage::Aggregate, e))?;
    let outcomes = outcome_records(exp, &solved.scheme);
    let accepted: Vec<&str> = outcomes.iter().filter(|o| o.accepted).map(|o| o.sfcr_id.as_str()).collect();
    let mean_latency_ms = if accepted.is_empty() { None } else { mean_latency(&frames, &accepted).ok() };

    Ok(ExperimentReport {
        config_digest: exp.digest(),
        seed: exp.config.seed,
        solver: exp.config.solver.kind,
        outcomes,
        acceptance_ratio,
        mean_latency_ms,
        frames,
        trace: solved.trace,
        solve_time: solved.solve_time,
    })
}

fn io_err(e: impl fmt::Display) -> ExperimentError {
    ExperimentError::new(Stage::Io, e)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(&r).map_err(io_err)?;
    }
    w.into_inner().map_err(io_err)
}

/// Report files as `(file name, contents)`, in a fixed order.
pub fn render_report(
    report: &ExperimentReport,
    formats: &[ReportFormat],
) -> Result<Vec<(String, Vec<u8>)>, ExperimentError> {
    let mut files = Vec::new();
    if formats.contains(&ReportFormat::Json) {
        files.push(("report.json".to_string(), report.to_json().into_bytes()));
    }
    if formats.contains(&ReportFormat::Csv) {
        files.push((
            "outcomes.csv".into(),
            csv_bytes(
                &["sfcr_id", "accepted", "reason"],
                report
                    .outcomes
                    .iter()
                    .map(|o| vec![o.sfcr_id.clone(), o.accepted.to_string(), o.reason.clone().unwrap_or_default()]),
            )?,
        ));
        let accepted = report.accepted_ids();
        files.push((
            "latency.csv".into(),
            csv_bytes(
                &["timestamp_s", "sfc_id", "latency_ms"],
                report.frames.iter().flat_map(|f| {
                    accepted.iter().filter_map(move |id| {
                        f.sfc_latency.get(*id).map(|l| vec![f.timestamp_s.to_string(), id.to_string(), l.to_string()])
                    })
                }),
            )?,
        ));
        files.push((
            "cpu.csv".into(),
            csv_bytes(
                &["timestamp_s", "host_id", "utilization"],
                report.frames.iter().flat_map(|f| {
                    f.host_cpu.iter().map(move |(h, u)| vec![f.timestamp_s.to_string(), h.clone(), u.to_string()])
                }),
            )?,
        ));
        if let Some(trace) = &report.trace {
            files.push((
                "trace.csv".into(),
                csv_bytes(
                    &[
                        "generation",
                        "mean_ar",
                        "min_ar",
                        "max_ar",
                        "mean_latency_ms",
                        "min_latency_ms",
                        "max_latency_ms",
                    ],
                    trace.generations.iter().map(|g| {
                        vec![
                            g.generation.to_string(),
                            g.mean_acceptance_ratio.to_string(),
                            g.min_acceptance_ratio.to_string(),
                            g.max_acceptance_ratio.to_string(),
                            fmt_opt(g.mean_latency_ms),
                            fmt_opt(g.min_latency_ms),
                            fmt_opt(g.max_latency_ms),
                        ]
                    }),
                )?,
            ));
        }
    }
    Ok(files)
}

/// Per-SFC latency histogram rows: `sfc_id, bin_lower_ms, count`.
pub fn render_histograms(report: &ExperimentReport, bin_width_ms: f64) -> Result<Vec<u8>, ExperimentError> {
    let mut rows = Vec::new();
    for id in report.accepted_ids() {
        let h =
            bin_latencies(&report.frames, id, bin_width_ms).map_err(|e| ExperimentError::new(Stage::Aggregate, e))?;
        for b in h.bins {
            rows.push(vec![id.to_string(), b.lower_ms.to_string(), b.count.to_string()]);
        }
    }
    csv_bytes(&["sfc_id", "bin_lower_ms", "count"], rows)
}

/// Writes `files` into `directory`. Everything is staged in a sibling
/// temporary directory first, so a failure leaves no partial report behind.
pub fn write_files(directory: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>, ExperimentError> {
    let parent = match directory.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io_err)?;
    let staging = tempfile::Builder::new().prefix(".rase-staging-").tempdir_in(&parent).map_err(io_err)?;
    for (name, bytes) in files {
        let mut f = fs::File::create(staging.path().join(name)).map_err(io_err)?;
        f.write_all(bytes).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::create_dir_all(directory).map_err(io_err)?;
    let mut written = Vec::with_capacity(files.len());
    for (name, _) in files {
        let target = directory.join(name);
        fs::rename(staging.path().join(name), &target).map_err(io_err)?;
        written.push(target);
    }
    Ok(written)
}

pub fn write_report(
    report: &ExperimentReport,
    directory: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>, ExperimentError> {
    write_files(directory, &render_report(report, formats)?)
}
