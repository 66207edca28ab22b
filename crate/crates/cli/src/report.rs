use std::collections::BTreeMap;

use htp_eval::{Benchmark, ConstraintClass, MetricsReport, PlanVerdict};
use htp_gateway::Usage;
use htp_planner::BuilderParams;
use serde::Serialize;

use crate::commands::class_counts;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceReport {
    pub id: String,
    /// Paths relative to the output directory.
    pub outline: Option<String>,
    /// Set only for delivered plans.
    pub plan: Option<String>,
    pub verdict: PlanVerdict,
    pub usage: Usage,
    pub error: Option<String>,
}

impl InstanceReport {
    pub fn new(id: &str) -> Self {
        InstanceReport {
            id: id.to_string(),
            outline: None,
            plan: None,
            verdict: PlanVerdict {
                id: id.to_string(),
                delivered: false,
                results: Vec::new(),
            },
            usage: Usage::default(),
            error: None,
        }
    }
}

/// Batch result. Wall times live in [`Timings`] so that replayed runs give
/// identical reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub benchmark: Benchmark,
    pub seed: u64,
    pub params: BuilderParams,
    pub instances: Vec<InstanceReport>,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub total_secs: f64,
    pub instances: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn usage_total(&self) -> Usage {
        self.instances
            .iter()
            .map(|i| i.usage)
            .fold(Usage::default(), |a, b| a + b)
    }

    pub fn table(&self) -> String {
        let mut out = format!("benchmark: {}\ninstances: {}\n\n", self.benchmark, self.instances.len());
        out.push_str(&format!(
            "{:<16} {:>9} {:>11} {:>6} {:>7}  {}\n",
            "id", "delivered", "commonsense", "hard", "success", "error"
        ));
        for i in &self.instances {
            let (cp, ct) = class_counts(i, ConstraintClass::Commonsense);
            let (hp, ht) = class_counts(i, ConstraintClass::Hard);
            out.push_str(&format!(
                "{:<16} {:>9} {:>11} {:>6} {:>7}  {}\n",
                i.id,
                if i.verdict.delivered { "yes" } else { "no" },
                format!("{cp}/{ct}"),
                format!("{hp}/{ht}"),
                if i.verdict.success() { "yes" } else { "no" },
                i.error.as_deref().unwrap_or("").lines().next().unwrap_or("")
            ));
        }
        let usage = self.usage_total();
        out.push_str(&format!(
            "\ntokens: {} in / {} out\n\n",
            usage.prompt_tokens, usage.completion_tokens
        ));
        out.push_str(&self.metrics.table());
        out
    }
}
