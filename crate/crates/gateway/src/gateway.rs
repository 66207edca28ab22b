use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendCall, RawReply};
use crate::error::GatewayError;
use crate::request::{Completion, ModelRequest, Usage};
use crate::role::{parse_reply, Payload, Role};
use crate::template::TemplateSet;

/// One backend answer as seen by the gateway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub key: String,
    pub role: Role,
    pub attempt: u32,
    pub usage: Usage,
    pub cached: bool,
    pub latency: f64,
}

/// Caps the number of calls in flight.
struct Limiter {
    max: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

impl Limiter {
    fn acquire(&self) -> LimiterGuard<'_> {
        let mut busy = self.busy.lock().expect("limiter lock");
        while *busy >= self.max {
            busy = self.freed.wait(busy).expect("limiter lock");
        }
        *busy += 1;
        LimiterGuard(self)
    }
}

struct LimiterGuard<'a>(&'a Limiter);

impl Drop for LimiterGuard<'_> {
    fn drop(&mut self) {
        *self.0.busy.lock().expect("limiter lock") -= 1;
        self.0.freed.notify_one();
    }
}

/// Renders templates, calls the backend for the request's role, parses the
/// reply, re-prompts with a format reminder on parse failure, and caches raw
/// replies by request key. Shareable across threads.
pub struct Gateway {
    backend: Arc<dyn Backend>,
    overrides: BTreeMap<Role, Arc<dyn Backend>>,
    templates: TemplateSet,
    retry_limit: u32,
    cache: Mutex<HashMap<String, RawReply>>,
    ledger: Mutex<Vec<CallRecord>>,
    limiter: Limiter,
}

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        Gateway {
            backend,
            overrides: BTreeMap::new(),
            templates: TemplateSet::default(),
            retry_limit: 1,
            cache: Mutex::new(HashMap::new()),
            ledger: Mutex::new(Vec::new()),
            limiter: Limiter {
                max: 4,
                busy: Mutex::new(0),
                freed: Condvar::new(),
            },
        }
    }

    pub fn with_retry_limit(mut self, retry_limit: u32) -> Self {
        self.retry_limit = retry_limit;
        self
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_override(mut self, role: Role, backend: Arc<dyn Backend>) -> Self {
        self.overrides.insert(role, backend);
        self
    }

    pub fn with_max_in_flight(mut self, max: usize) -> Self {
        self.limiter.max = max.max(1);
        self
    }

    pub fn retry_limit(&self) -> u32 {
        self.retry_limit
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn backend_for(&self, role: Role) -> &Arc<dyn Backend> {
        self.overrides.get(&role).unwrap_or(&self.backend)
    }

    /// Rendered prompt for a given attempt; attempts after the first carry
    /// the role's format reminder.
    pub fn prompt(&self, request: &ModelRequest, attempt: u32) -> Result<String, GatewayError> {
        let mut prompt = self.templates.get(&request.template_id)?.render(&request.slots)?;
        if attempt > 0 {
            prompt.push_str("\n\n");
            prompt.push_str(request.role.format_reminder());
        }
        Ok(prompt)
    }

    pub fn complete(&self, request: &ModelRequest) -> Result<Completion, GatewayError> {
        self.complete_validated(request, |_| Ok(()))
    }

    /// Like [`Gateway::complete`], with an extra check on the parsed payload
    /// (for example an index range). A rejected payload counts as a parse
    /// failure and triggers a re-prompt.
    pub fn complete_validated(
        &self,
        request: &ModelRequest,
        validate: impl Fn(&Payload) -> Result<(), String>,
    ) -> Result<Completion, GatewayError> {
        // template problems surface before any backend call
        self.prompt(request, 0)?;
        let backend = self.backend_for(request.role);
        let mut usage = Usage::default();
        let mut latency = 0.0;
        let mut last = (String::new(), String::new());
        for attempt in 0..=self.retry_limit {
            let prompt = self.prompt(request, attempt)?;
            let key = request.key(attempt, backend.model());
            let started = Instant::now();
            let (reply, cached) = self.fetch(backend.as_ref(), &key, request, &prompt, attempt)?;
            let elapsed = started.elapsed().as_secs_f64();
            latency += elapsed;
            if !cached {
                usage += reply.usage;
            }
            self.ledger.lock().expect("ledger lock").push(CallRecord {
                key,
                role: request.role,
                attempt,
                usage: reply.usage,
                cached,
                latency: elapsed,
            });
            let outcome = parse_reply(request.role, &reply.text).and_then(|p| validate(&p).map(|_| p));
            match outcome {
                Ok(parsed) => {
                    return Ok(Completion {
                        raw: reply.text,
                        parsed,
                        usage,
                        latency,
                        attempts: attempt + 1,
                        cached,
                    })
                }
                Err(reason) => last = (reason, reply.text),
            }
        }
        Err(GatewayError::ParseFailure {
            role: request.role,
            attempts: self.retry_limit + 1,
            reason: last.0,
            raw: last.1,
        })
    }

    fn fetch(
        &self,
        backend: &dyn Backend,
        key: &str,
        request: &ModelRequest,
        prompt: &str,
        attempt: u32,
    ) -> Result<(RawReply, bool), GatewayError> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(key) {
            return Ok((hit.clone(), true));
        }
        let reply = {
            let _slot = self.limiter.acquire();
            backend.call(&BackendCall {
                key,
                request,
                prompt,
                attempt,
            })?
        };
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key.to_string(), reply.clone());
        Ok((reply, false))
    }

    /// Every backend answer so far, in arrival order.
    pub fn ledger(&self) -> Vec<CallRecord> {
        self.ledger.lock().expect("ledger lock").clone()
    }

    /// Billed usage: the sum over calls that reached a backend.
    pub fn usage_total(&self) -> Usage {
        self.ledger
            .lock()
            .expect("ledger lock")
            .iter()
            .filter(|r| !r.cached)
            .map(|r| r.usage)
            .sum()
    }

    pub fn usage_by_role(&self) -> BTreeMap<Role, Usage> {
        let mut out: BTreeMap<Role, Usage> = BTreeMap::new();
        for r in self.ledger.lock().expect("ledger lock").iter().filter(|r| !r.cached) {
            *out.entry(r.role).or_default() += r.usage;
        }
        out
    }

    /// Number of calls that reached a backend.
    pub fn backend_calls(&self) -> usize {
        self.ledger
            .lock()
            .expect("ledger lock")
            .iter()
            .filter(|r| !r.cached)
            .count()
    }
}
