use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use htp_core::{outline, Divisibility, RuleLibrary};
use htp_eval::{
    aggregate_metrics, evaluate, load_dataset, Benchmark, ConstraintClass, DatasetError, Instance, InstanceSpec,
    KnowledgeBase, PlanFormat,
};
use htp_gateway::{Gateway, GatewayError};
use htp_planner::{build_outline, generate_plan, self_guided_plan, BuildTrace, FinalPlan};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{io, CliError};
use crate::report::{InstanceReport, RunReport, Timings};

pub const OUTLINE_FILE: &str = "outline.txt";
pub const TRACE_FILE: &str = "trace.json";
pub const REASONING_FILE: &str = "reasoning.txt";
pub const PLAN_FILE: &str = "plan.txt";
pub const PLAN_JSON_FILE: &str = "plan.json";
pub const USAGE_FILE: &str = "usage.json";
pub const REPORT_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStatus {
    Delivered,
    Undelivered,
}

impl PlanStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            PlanStatus::Delivered => 0,
            PlanStatus::Undelivered => 2,
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write(path, text)
}

/// What one query produced. `Err` is reserved for an unreachable model.
struct QueryRun {
    outline: bool,
    plan: Option<FinalPlan>,
    error: Option<String>,
}

impl QueryRun {
    fn failed(outline: bool, error: impl ToString) -> Self {
        QueryRun {
            outline,
            plan: None,
            error: Some(error.to_string()),
        }
    }
}

fn soft(outline: bool, e: GatewayError) -> Result<QueryRun, CliError> {
    if e.is_unavailable() {
        Err(CliError::Unavailable(e.to_string()))
    } else {
        Ok(QueryRun::failed(outline, e))
    }
}

/// Outline, then self-guided planning, then the final plan, writing each
/// artifact into `dir` as soon as it exists.
fn run_query(
    library: &RuleLibrary,
    query: &str,
    gateway: &Gateway,
    config: &RunConfig,
    format: PlanFormat,
    kb: Option<&KnowledgeBase>,
    dir: &Path,
) -> Result<QueryRun, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let built = match build_outline(library, query, gateway, config.params) {
        Ok(b) => b,
        Err(failure) => {
            write(&dir.join(TRACE_FILE), failure.trace.to_json())?;
            if failure.error.is_unavailable() {
                return Err(CliError::Unavailable(failure.error.to_string()));
            }
            return Ok(QueryRun::failed(false, failure.error));
        }
    };
    write(&dir.join(OUTLINE_FILE), built.outline_text())?;
    write(&dir.join(TRACE_FILE), built.trace.to_json())?;
    let outcome = match self_guided_plan(gateway, query, library, &built.outline, kb, config.pipeline) {
        Ok(o) => o,
        Err(e) => return soft(true, e),
    };
    write(&dir.join(REASONING_FILE), outcome.render())?;
    let plan = match generate_plan(gateway, query, &outcome, format) {
        Ok(p) => p,
        Err(e) => return soft(true, e),
    };
    write(&dir.join(PLAN_FILE), &plan.text)?;
    write_json(&dir.join(PLAN_JSON_FILE), &plan)?;
    Ok(QueryRun {
        outline: true,
        error: plan.failure.clone(),
        plan: Some(plan),
    })
}

/// Plans a single query into `config.out`.
pub fn cmd_plan(config: &RunConfig, query: &str) -> Result<PlanStatus, CliError> {
    config.validate()?;
    if query.trim().is_empty() {
        return Err(CliError::Config("query is empty".into()));
    }
    let library = config.load_library()?;
    let format = config.plan_format()?;
    let kb = config.load_knowledge()?;
    let gateway = config.backend.gateway(None)?;
    let run = run_query(&library, query, &gateway, config, format, kb.as_ref(), &config.out);
    let usage = gateway.usage_by_role();
    write_json(&config.out.join(USAGE_FILE), &usage)?;
    let run = run?;
    if let Some(e) = &run.error {
        eprintln!("{e}");
    }
    Ok(match run.plan {
        Some(p) if p.delivered => PlanStatus::Delivered,
        _ => PlanStatus::Undelivered,
    })
}

fn knowledge_path<'a>(instance: &'a Instance, config: &'a RunConfig) -> Option<&'a Path> {
    match &instance.spec {
        InstanceSpec::TravelPlanner {
            knowledge: Some(path), ..
        } => Some(path),
        InstanceSpec::TravelPlanner { knowledge: None, .. } => config.knowledge.as_deref(),
        _ => None,
    }
}

fn rel(id: &str, file: &str) -> String {
    format!("instances/{id}/{file}")
}

fn run_instance(
    instance: &Instance,
    library: &RuleLibrary,
    config: &RunConfig,
    format: PlanFormat,
    kb: Option<&Result<KnowledgeBase, String>>,
) -> InstanceReport {
    let dir = config.out.join("instances").join(&instance.id);
    let mut report = InstanceReport::new(&instance.id);
    let kb = match kb {
        Some(Ok(kb)) => Some(kb),
        Some(Err(e)) => {
            report.error = Some(e.clone());
            report.verdict = evaluate(instance, None, None);
            return report;
        }
        None => None,
    };
    let run = config
        .backend
        .gateway(Some(&instance.id))
        .and_then(|gateway| {
            let run = run_query(library, &instance.query, &gateway, config, format, kb, &dir);
            report.usage = gateway.usage_total();
            run
        })
        .unwrap_or_else(|e| QueryRun::failed(dir.join(OUTLINE_FILE).is_file(), e));
    if run.outline {
        report.outline = Some(rel(&instance.id, OUTLINE_FILE));
    }
    let delivered = run.plan.as_ref().filter(|p| p.delivered);
    if delivered.is_some() {
        report.plan = Some(rel(&instance.id, PLAN_FILE));
    }
    report.verdict = evaluate(instance, delivered.map(|p| p.text.as_str()), kb);
    report.error = run.error;
    report
}

/// Plans and evaluates every instance of a dataset, writing per-instance
/// artifacts plus `report.json`, `report.txt` and `timings.json`.
pub fn cmd_bench(config: &RunConfig, dataset: &Path, benchmark: Benchmark) -> Result<RunReport, CliError> {
    let mut config = config.clone();
    config.benchmark.get_or_insert(benchmark);
    config.validate()?;
    let instances = load_dataset(dataset, benchmark).map_err(|e| match e {
        DatasetError::Io(m) => CliError::Io(m),
        schema => CliError::Schema(schema.to_string()),
    })?;
    if instances.is_empty() {
        return Err(CliError::EmptyInput);
    }
    let library = config.load_library()?;
    let format = benchmark.plan_format();
    std::fs::create_dir_all(&config.out).map_err(|e| io(&config.out, e))?;

    let mut knowledge: BTreeMap<PathBuf, Result<KnowledgeBase, String>> = BTreeMap::new();
    for path in instances.iter().filter_map(|i| knowledge_path(i, &config)) {
        if !knowledge.contains_key(path) {
            knowledge.insert(path.to_path_buf(), KnowledgeBase::load(path).map_err(|e| e.to_string()));
        }
    }

    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.shuffle(&mut StdRng::seed_from_u64(config.seed));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let started = Instant::now();
    let mut results: Vec<(usize, InstanceReport, f64)> = pool.install(|| {
        order
            .par_iter()
            .map(|&i| {
                let t = Instant::now();
                let instance = &instances[i];
                let kb = knowledge_path(instance, &config).and_then(|p| knowledge.get(p));
                let report = run_instance(instance, &library, &config, format, kb);
                (i, report, t.elapsed().as_secs_f64())
            })
            .collect()
    });
    results.sort_by_key(|(i, _, _)| *i);

    let timings = Timings {
        total_secs: started.elapsed().as_secs_f64(),
        instances: results.iter().map(|(_, r, t)| (r.id.clone(), *t)).collect(),
    };
    let reports: Vec<InstanceReport> = results.into_iter().map(|(_, r, _)| r).collect();
    let verdicts: Vec<_> = reports.iter().map(|r| r.verdict.clone()).collect();
    let metrics = aggregate_metrics(&verdicts).map_err(|_| CliError::EmptyInput)?;
    let report = RunReport {
        benchmark,
        seed: config.seed,
        params: config.params,
        instances: reports,
        metrics,
    };
    write_json(&config.out.join(REPORT_FILE), &report)?;
    write(&config.out.join(REPORT_TEXT_FILE), report.table())?;
    write_json(&config.out.join(TIMINGS_FILE), &timings)?;
    Ok(report)
}

/// Accepts every node; stored traces only contain valid attachments.
struct AnyDivisible;

impl Divisibility for AnyDivisible {
    fn is_divisible(&self, _: &str) -> bool {
        true
    }
}

pub fn load_trace(path: &Path) -> Result<BuildTrace, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    BuildTrace::from_json(&text).map_err(|e| CliError::MalformedTrace(format!("{}: {e}", path.display())))
}

/// The outline a stored trace decides, rebuilt from its attachments.
pub fn trace_outline(trace: &BuildTrace, library: Option<&RuleLibrary>) -> Result<String, CliError> {
    let divisibility: &dyn Divisibility = match library {
        Some(lib) => lib,
        None => &AnyDivisible,
    };
    let chain = trace.replay_outline(divisibility).map_err(CliError::MalformedTrace)?;
    Ok(outline::render(&chain.tree))
}

/// Iteration table followed by the replayed outline.
pub fn cmd_inspect(path: &Path, library: Option<&RuleLibrary>) -> Result<String, CliError> {
    let trace = load_trace(path)?;
    Ok(format!(
        "{}\noutline:\n{}",
        trace.summary(),
        trace_outline(&trace, library)?
    ))
}

/// Parses a rule library and describes it, or re-renders it.
pub fn cmd_parse_lib(path: &Path, render: bool) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    let lib = RuleLibrary::parse(&text).map_err(|e| CliError::Library(format!("{}: {e}", path.display())))?;
    if render {
        return Ok(lib.render());
    }
    let mut out = format!(
        "rules: {}\ndivisible patterns: {}\nleaf patterns: {}\n",
        lib.rules.len(),
        lib.divisible_patterns.len(),
        lib.leaf_patterns.len()
    );
    for rule in &lib.rules {
        out.push_str(&rule.render());
        out.push('\n');
    }
    Ok(out)
}

pub(crate) fn class_counts(report: &InstanceReport, class: ConstraintClass) -> (usize, usize) {
    let results = report.verdict.results.iter().filter(|r| r.class == class);
    let total = results.clone().count();
    (results.filter(|r| r.passed).count(), total)
}
