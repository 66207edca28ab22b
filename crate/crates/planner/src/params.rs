//! Builder parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How hyperchains are cut down to the expansion width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", content = "n", rename_all = "snake_case")]
pub enum Pruning {
    /// First `n` chains in canonical order.
    Width(usize),
    /// Top `n` chains by the confidence of their newest branch.
    Probability(usize),
    /// The `n` chains the model keeps.
    LlmGuided(usize),
}

impl Pruning {
    pub fn n(self) -> usize {
        match self {
            Pruning::Width(n) | Pruning::Probability(n) | Pruning::LlmGuided(n) => n,
        }
    }
}

impl fmt::Display for Pruning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pruning::Width(n) => write!(f, "width:{n}"),
            Pruning::Probability(n) => write!(f, "prob:{n}"),
            Pruning::LlmGuided(n) => write!(f, "llm:{n}"),
        }
    }
}

impl FromStr for Pruning {
    type Err = String;

    /// `width:n`, `prob:n` or `llm:n`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, n) = s
            .split_once(':')
            .ok_or_else(|| format!("pruning `{s}` is not of the form strategy:n"))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| format!("pruning width `{n}` is not a positive integer"))?;
        if n == 0 {
            return Err("pruning width must be positive".into());
        }
        match kind.trim().to_ascii_lowercase().as_str() {
            "width" => Ok(Pruning::Width(n)),
            "prob" | "probability" => Ok(Pruning::Probability(n)),
            "llm" | "llm-guided" => Ok(Pruning::LlmGuided(n)),
            other => Err(format!(
                "unknown pruning strategy `{other}` (expected width, prob or llm)"
            )),
        }
    }
}

/// How a definite rule turns into children.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionMode {
    /// Instantiate the body with the head bindings; ask the model only when
    /// a body placeholder is unbound.
    #[default]
    Instantiate,
    /// Always ask the model, which may specialise and select body atoms.
    ModelRefined,
}

/// Which rules are used when more than `rule_sample` apply.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSampling {
    /// The first ones in library order.
    #[default]
    LibraryOrder,
    /// The ones the model ranks highest.
    ModelRanked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuilderParams {
    /// Iterations of selection and expansion.
    pub depth: usize,
    /// Chains kept per iteration.
    pub width: usize,
    /// Rules expanded per selected node.
    pub rule_sample: usize,
    pub pruning: Pruning,
    #[serde(default)]
    pub expansion: ExpansionMode,
    #[serde(default)]
    pub rule_sampling: RuleSampling,
}

impl Default for BuilderParams {
    fn default() -> Self {
        BuilderParams {
            depth: 8,
            width: 2,
            rule_sample: 2,
            pruning: Pruning::Width(2),
            expansion: ExpansionMode::Instantiate,
            rule_sampling: RuleSampling::LibraryOrder,
        }
    }
}

impl BuilderParams {
    pub fn new(depth: usize, width: usize, rule_sample: usize) -> Self {
        BuilderParams {
            depth,
            width,
            rule_sample,
            pruning: Pruning::Width(width),
            ..BuilderParams::default()
        }
    }

    /// Replaces the strategy while keeping its `n` equal to the width.
    pub fn with_pruning(mut self, pruning: Pruning) -> Self {
        self.width = pruning.n();
        self.pruning = pruning;
        self
    }

    pub fn with_expansion(mut self, expansion: ExpansionMode) -> Self {
        self.expansion = expansion;
        self
    }

    pub fn with_rule_sampling(mut self, sampling: RuleSampling) -> Self {
        self.rule_sampling = sampling;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.depth == 0 || self.width == 0 || self.rule_sample == 0 {
            return Err(format!(
                "depth, width and rule sample must be positive (got {}, {}, {})",
                self.depth, self.width, self.rule_sample
            ));
        }
        if self.pruning.n() != self.width {
            return Err(format!("pruning {} does not match width {}", self.pruning, self.width));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pruning_specs() {
        assert_eq!("width:2".parse(), Ok(Pruning::Width(2)));
        assert_eq!("prob:3".parse(), Ok(Pruning::Probability(3)));
        assert_eq!("LLM:1".parse(), Ok(Pruning::LlmGuided(1)));
        for bad in ["width", "width:0", "beam:2", "prob:x"] {
            assert!(bad.parse::<Pruning>().is_err(), "{bad}");
        }
        for p in [Pruning::Width(2), Pruning::Probability(4), Pruning::LlmGuided(1)] {
            assert_eq!(p.to_string().parse(), Ok(p));
        }
    }

    #[test]
    fn defaults_validate() {
        let p = BuilderParams::default();
        assert_eq!((p.depth, p.width, p.rule_sample), (8, 2, 2));
        assert!(p.validate().is_ok());
        assert!(BuilderParams::new(0, 1, 1).validate().is_err());
        let mut q = BuilderParams::new(2, 2, 1);
        q.pruning = Pruning::Width(3);
        assert!(q.validate().is_err());
        assert!(q.with_pruning(Pruning::LlmGuided(3)).validate().is_ok());
    }
}
