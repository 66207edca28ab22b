//! Backends turn a rendered prompt into raw reply text.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::GatewayError;
use crate::request::{estimate_tokens, ModelRequest, Usage};
use crate::role::Role;

/// Everything a backend sees for one attempt.
#[derive(Debug, Clone, Copy)]
pub struct BackendCall<'a> {
    pub key: &'a str,
    pub request: &'a ModelRequest,
    pub prompt: &'a str,
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReply {
    pub text: String,
    pub usage: Usage,
}

impl RawReply {
    /// Reply whose usage is estimated from prompt and reply lengths.
    pub fn estimated(prompt: &str, text: impl Into<String>) -> Self {
        let text = text.into();
        RawReply {
            usage: Usage {
                prompt_tokens: estimate_tokens(prompt),
                completion_tokens: estimate_tokens(&text),
            },
            text,
        }
    }
}

pub trait Backend: Send + Sync {
    /// Model name; part of every request key.
    fn model(&self) -> &str;
    fn call(&self, call: &BackendCall<'_>) -> Result<RawReply, GatewayError>;
}

/// One JSONL transcript line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub key: String,
    pub role: Role,
    pub raw: String,
    pub usage: Usage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, GatewayError> {
    let file = File::open(path).map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry =
            serde_json::from_str(&line).map_err(|e| GatewayError::Io(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

/// Answers only from a recorded transcript.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    model: String,
    entries: HashMap<String, TranscriptEntry>,
}

impl ReplayBackend {
    pub const DEFAULT_MODEL: &'static str = "replay";

    /// The model name is taken from the first entry that records one. For a
    /// repeated key the first entry wins.
    pub fn from_entries(entries: Vec<TranscriptEntry>) -> Self {
        let model = entries
            .iter()
            .find_map(|e| e.model.clone())
            .unwrap_or_else(|| Self::DEFAULT_MODEL.to_string());
        let mut map = HashMap::new();
        for e in entries {
            map.entry(e.key.clone()).or_insert(e);
        }
        ReplayBackend { model, entries: map }
    }

    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        read_transcript(path).map(Self::from_entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn model(&self) -> &str {
        &self.model
    }

    fn call(&self, call: &BackendCall<'_>) -> Result<RawReply, GatewayError> {
        let entry = self.entries.get(call.key).ok_or_else(|| GatewayError::TranscriptMiss {
            key: call.key.to_string(),
            role: call.request.role,
        })?;
        Ok(RawReply {
            text: entry.raw.clone(),
            usage: entry.usage,
        })
    }
}

/// Wraps another backend and appends every answered call to a JSONL file.
pub struct RecordingBackend {
    inner: Arc<dyn Backend>,
    path: PathBuf,
    file: Mutex<File>,
}

impl RecordingBackend {
    /// Appends to `path`, creating it when missing.
    pub fn new(inner: Arc<dyn Backend>, path: &Path) -> Result<Self, GatewayError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| GatewayError::Io(format!("{}: {e}", dir.display())))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))?;
        Ok(RecordingBackend {
            inner,
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Backend for RecordingBackend {
    fn model(&self) -> &str {
        self.inner.model()
    }

    fn call(&self, call: &BackendCall<'_>) -> Result<RawReply, GatewayError> {
        let reply = self.inner.call(call)?;
        let entry = TranscriptEntry {
            key: call.key.to_string(),
            role: call.request.role,
            raw: reply.text.clone(),
            usage: reply.usage,
            model: Some(self.inner.model().to_string()),
        };
        let line = serde_json::to_string(&entry).expect("transcript entry serializes");
        let mut file = self.file.lock().expect("transcript lock");
        writeln!(file, "{line}")
            .and_then(|_| file.flush())
            .map_err(|e| GatewayError::Io(format!("{}: {e}", self.path.display())))?;
        Ok(reply)
    }
}

type ReplyFn = dyn Fn(&BackendCall<'_>) -> Result<String, GatewayError> + Send + Sync;

/// Backend driven by a closure; usage is estimated from text lengths.
pub struct FnBackend {
    model: String,
    f: Box<ReplyFn>,
}

impl FnBackend {
    pub fn new(
        model: impl Into<String>,
        f: impl Fn(&BackendCall<'_>) -> Result<String, GatewayError> + Send + Sync + 'static,
    ) -> Self {
        FnBackend {
            model: model.into(),
            f: Box::new(f),
        }
    }
}

impl Backend for FnBackend {
    fn model(&self) -> &str {
        &self.model
    }

    fn call(&self, call: &BackendCall<'_>) -> Result<RawReply, GatewayError> {
        (self.f)(call).map(|text| RawReply::estimated(call.prompt, text))
    }
}

/// OpenAI-style chat-completions client.
pub struct HttpChat {
    endpoint: String,
    model: String,
    temperature: f64,
    api_key: Option<String>,
    retries: u32,
    client: reqwest::blocking::Client,
}

impl HttpChat {
    /// The bearer token is read once from `api_key_env` when that variable
    /// is set.
    pub fn new(
        endpoint: &str,
        model: &str,
        temperature: f64,
        api_key_env: &str,
        timeout: Duration,
        retries: u32,
    ) -> Result<Self, GatewayError> {
        if !(0.0..=2.0).contains(&temperature) {
            return Err(GatewayError::InvalidConfig(format!(
                "temperature {temperature} outside [0, 2]"
            )));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        Ok(HttpChat {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            temperature,
            api_key: std::env::var(api_key_env).ok().filter(|k| !k.is_empty()),
            retries,
            client,
        })
    }

    fn once(&self, prompt: &str) -> Result<RawReply, String> {
        let body = serde_json::json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        let value: serde_json::Value = resp.json().map_err(|e| e.to_string())?;
        parse_chat_response(&value, prompt)
    }
}

/// Extracts text and usage from a chat-completions response body.
pub fn parse_chat_response(value: &serde_json::Value, prompt: &str) -> Result<RawReply, String> {
    let text = value
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .ok_or("response has no choices[0].message.content")?
        .to_string();
    let usage = match value.get("usage") {
        Some(u) => Usage {
            prompt_tokens: u.get("prompt_tokens").and_then(|v| v.as_u64()).unwrap_or(0),
            completion_tokens: u.get("completion_tokens").and_then(|v| v.as_u64()).unwrap_or(0),
        },
        None => RawReply::estimated(prompt, text.as_str()).usage,
    };
    Ok(RawReply { text, usage })
}

impl Backend for HttpChat {
    fn model(&self) -> &str {
        &self.model
    }

    fn call(&self, call: &BackendCall<'_>) -> Result<RawReply, GatewayError> {
        let mut last = String::new();
        for _ in 0..=self.retries {
            match self.once(call.prompt) {
                Ok(reply) => return Ok(reply),
                Err(e) => last = e,
            }
        }
        Err(GatewayError::BackendUnavailable(format!("{}: {last}", self.endpoint)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call<'a>(req: &'a ModelRequest, key: &'a str) -> BackendCall<'a> {
        BackendCall {
            key,
            request: req,
            prompt: "p",
            attempt: 0,
        }
    }

    #[test]
    fn empty_transcript_misses() {
        let replay = ReplayBackend::from_entries(vec![]);
        let req = ModelRequest::new(Role::SelectNode);
        let err = replay.call(&call(&req, "k")).unwrap_err();
        assert!(matches!(
            err,
            GatewayError::TranscriptMiss {
                role: Role::SelectNode,
                ..
            }
        ));
        assert_eq!(replay.model(), ReplayBackend::DEFAULT_MODEL);
    }

    #[test]
    fn first_entry_wins() {
        let e = |raw: &str| TranscriptEntry {
            key: "k".into(),
            role: Role::SelectNode,
            raw: raw.into(),
            usage: Usage::default(),
            model: Some("m".into()),
        };
        let replay = ReplayBackend::from_entries(vec![e("1"), e("2")]);
        let req = ModelRequest::new(Role::SelectNode);
        assert_eq!(replay.call(&call(&req, "k")).unwrap().text, "1");
        assert_eq!(replay.model(), "m");
        assert_eq!(replay.len(), 1);
    }

    #[test]
    fn chat_response_parsing() {
        let v = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": "2"}}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 1}
        });
        let r = parse_chat_response(&v, "prompt").unwrap();
        assert_eq!(r.text, "2");
        assert_eq!(
            r.usage,
            Usage {
                prompt_tokens: 10,
                completion_tokens: 1
            }
        );
        assert!(parse_chat_response(&serde_json::json!({}), "p").is_err());
    }

    #[test]
    fn http_rejects_bad_temperature() {
        let err = HttpChat::new(
            "http://localhost:1",
            "m",
            2.5,
            "HTP_TEST_NO_KEY",
            Duration::from_secs(1),
            0,
        )
        .err();
        assert!(matches!(err, Some(GatewayError::InvalidConfig(_))));
    }

    #[test]
    fn unreachable_http_is_unavailable() {
        let http = HttpChat::new(
            "http://127.0.0.1:9/v1/chat",
            "m",
            0.0,
            "HTP_TEST_NO_KEY",
            Duration::from_millis(300),
            1,
        )
        .unwrap();
        let req = ModelRequest::new(Role::SelectNode);
        let err = http.call(&call(&req, "k")).unwrap_err();
        assert!(matches!(err, GatewayError::BackendUnavailable(_)));
    }
}
