//! Pass-rate aggregation with exact rational arithmetic.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintClass {
    Commonsense,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintResult {
    pub name: String,
    pub class: ConstraintClass,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Evaluation of one plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanVerdict {
    pub id: String,
    pub delivered: bool,
    pub results: Vec<ConstraintResult>,
}

impl PlanVerdict {
    /// Delivered and no constraint of the class failed.
    pub fn class_passed(&self, class: ConstraintClass) -> bool {
        self.delivered && self.results.iter().filter(|r| r.class == class).all(|r| r.passed)
    }

    pub fn success(&self) -> bool {
        self.delivered && self.results.iter().all(|r| r.passed)
    }
}

/// An exact fraction; serialized as `{"value": f64, "fraction": "n/d"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rate(pub Ratio<u64>);

impl Rate {
    pub fn new(num: u64, den: u64) -> Rate {
        Rate(Ratio::new(num, den))
    }

    pub fn value(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            value: f64,
            fraction: String,
        }
        Repr {
            value: self.value(),
            fraction: self.to_string(),
        }
        .serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricsReport {
    pub plans: usize,
    pub delivery_rate: Rate,
    pub commonsense_micro: Rate,
    pub commonsense_macro: Rate,
    pub hard_micro: Rate,
    pub hard_macro: Rate,
    pub success_rate: Rate,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no verdicts to aggregate")]
    EmptyInput,
}

/// Micro: passed over total constraint checks in the class, where a check
/// only counts as passed on a delivered plan; a class with no checks at all
/// scores 1. Macro: fraction of plans that are delivered with no failure in
/// the class. Success: fraction delivered with no failure in any class.
pub fn aggregate_metrics(verdicts: &[PlanVerdict]) -> Result<MetricsReport, MetricsError> {
    if verdicts.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = verdicts.len() as u64;
    let count = |f: &dyn Fn(&PlanVerdict) -> bool| verdicts.iter().filter(|v| f(v)).count() as u64;
    let micro = |class: ConstraintClass| {
        let (mut passed, mut total) = (0u64, 0u64);
        for v in verdicts {
            for r in v.results.iter().filter(|r| r.class == class) {
                total += 1;
                if r.passed && v.delivered {
                    passed += 1;
                }
            }
        }
        if total == 0 {
            Rate::new(1, 1)
        } else {
            Rate::new(passed, total)
        }
    };
    Ok(MetricsReport {
        plans: verdicts.len(),
        delivery_rate: Rate::new(count(&|v| v.delivered), n),
        commonsense_micro: micro(ConstraintClass::Commonsense),
        commonsense_macro: Rate::new(count(&|v| v.class_passed(ConstraintClass::Commonsense)), n),
        hard_micro: micro(ConstraintClass::Hard),
        hard_macro: Rate::new(count(&|v| v.class_passed(ConstraintClass::Hard)), n),
        success_rate: Rate::new(count(&|v| v.success()), n),
    })
}

impl MetricsReport {
    /// Plain-text table, one metric per row.
    pub fn table(&self) -> String {
        let rows = [
            ("delivery rate", self.delivery_rate),
            ("commonsense micro", self.commonsense_micro),
            ("commonsense macro", self.commonsense_macro),
            ("hard micro", self.hard_micro),
            ("hard macro", self.hard_macro),
            ("success rate", self.success_rate),
        ];
        let mut out = format!("{:<18} {:>8}  {}\n", "metric", "value", "fraction");
        for (name, rate) in rows {
            out.push_str(&format!("{:<18} {:>8.4}  {}\n", name, rate.value(), rate));
        }
        out.push_str(&format!("{:<18} {:>8}\n", "plans", self.plans));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(delivered: bool, commonsense: (usize, usize), hard: (usize, usize)) -> PlanVerdict {
        let mut results = Vec::new();
        let mut push = |class, (passed, total): (usize, usize)| {
            for i in 0..total {
                results.push(ConstraintResult {
                    name: format!("{class:?}{i}"),
                    class,
                    passed: i < passed,
                    detail: None,
                });
            }
        };
        push(ConstraintClass::Commonsense, commonsense);
        push(ConstraintClass::Hard, hard);
        PlanVerdict {
            id: String::new(),
            delivered,
            results,
        }
    }

    #[test]
    fn micro_and_macro() {
        let v = [
            verdict(true, (8, 10), (1, 1)),
            verdict(true, (10, 10), (1, 1)),
            verdict(true, (5, 10), (0, 1)),
        ];
        let m = aggregate_metrics(&v).unwrap();
        assert_eq!(m.commonsense_micro, Rate::new(23, 30));
        assert_eq!(m.commonsense_macro, Rate::new(1, 3));
        assert_eq!(m.hard_micro, Rate::new(2, 3));
        assert_eq!(m.success_rate, Rate::new(1, 3));
    }

    #[test]
    fn undelivered_plan() {
        let v = [verdict(true, (3, 3), (2, 2)), verdict(false, (0, 0), (0, 0))];
        let m = aggregate_metrics(&v).unwrap();
        assert_eq!(m.delivery_rate, Rate::new(1, 2));
        assert_eq!(m.success_rate, Rate::new(1, 2));
    }

    #[test]
    fn all_pass_and_empty() {
        let m = aggregate_metrics(&[verdict(true, (2, 2), (1, 1))]).unwrap();
        for r in [
            m.delivery_rate,
            m.commonsense_micro,
            m.commonsense_macro,
            m.hard_micro,
            m.hard_macro,
            m.success_rate,
        ] {
            assert_eq!(r, Rate::new(1, 1));
        }
        assert_eq!(aggregate_metrics(&[]), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn rate_json() {
        let json = serde_json::to_string(&Rate::new(2, 4)).unwrap();
        assert_eq!(json, r#"{"value":0.5,"fraction":"1/2"}"#);
    }
}
