use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::role::{Payload, Role};

/// One role-tagged model request: a template reference plus its slot values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRequest {
    pub role: Role,
    pub template_id: String,
    pub slots: BTreeMap<String, String>,
}

impl ModelRequest {
    /// Request using the role's bundled template.
    pub fn new(role: Role) -> Self {
        ModelRequest {
            role,
            template_id: role.default_template().to_string(),
            slots: BTreeMap::new(),
        }
    }

    pub fn with_template(mut self, id: impl Into<String>) -> Self {
        self.template_id = id.into();
        self
    }

    pub fn slot(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.slots.insert(name.into(), value.into());
        self
    }

    /// Cache and transcript key: SHA-256 over the canonical JSON of role,
    /// template, slots, attempt number and model name.
    pub fn key(&self, attempt: u32, model: &str) -> String {
        #[derive(Serialize)]
        struct KeyParts<'a> {
            role: Role,
            template_id: &'a str,
            slots: &'a BTreeMap<String, String>,
            attempt: u32,
            model: &'a str,
        }
        let parts = KeyParts {
            role: self.role,
            template_id: &self.template_id,
            slots: &self.slots,
            attempt,
            model,
        };
        let json = serde_json::to_string(&parts).expect("key parts serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Usage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

impl Add for Usage {
    type Output = Usage;
    fn add(self, rhs: Usage) -> Usage {
        Usage {
            prompt_tokens: self.prompt_tokens + rhs.prompt_tokens,
            completion_tokens: self.completion_tokens + rhs.completion_tokens,
        }
    }
}

impl AddAssign for Usage {
    fn add_assign(&mut self, rhs: Usage) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for Usage {
    fn sum<I: Iterator<Item = Usage>>(iter: I) -> Usage {
        iter.fold(Usage::default(), Add::add)
    }
}

/// Rough token count for backends that report none: one token per four
/// characters, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// A parsed reply with its bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub raw: String,
    pub parsed: Payload,
    /// Tokens billed for this completion across all attempts; cache hits
    /// bill nothing.
    pub usage: Usage,
    /// Wall seconds spent across all attempts.
    pub latency: f64,
    /// Number of attempts, 1 when the first reply parsed.
    pub attempts: u32,
    /// Whether the accepted reply came from the cache.
    pub cached: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_every_part() {
        let a = ModelRequest::new(Role::SelectNode)
            .slot("query", "q")
            .slot("chain", "c");
        let base = a.key(0, "m");
        assert_eq!(base.len(), 64);
        assert_eq!(base, a.clone().key(0, "m"));
        assert_ne!(base, a.key(1, "m"));
        assert_ne!(base, a.key(0, "n"));
        assert_ne!(base, a.clone().slot("chain", "d").key(0, "m"));
        assert_ne!(base, a.clone().with_template("other").key(0, "m"));
        let mut b = a.clone();
        b.role = Role::DecideOutline;
        assert_ne!(base, b.key(0, "m"));
    }

    #[test]
    fn key_ignores_slot_insertion_order() {
        let a = ModelRequest::new(Role::SelectNode).slot("x", "1").slot("y", "2");
        let b = ModelRequest::new(Role::SelectNode).slot("y", "2").slot("x", "1");
        assert_eq!(a.key(0, "m"), b.key(0, "m"));
    }

    #[test]
    fn token_estimate() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abcd"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
    }
}
