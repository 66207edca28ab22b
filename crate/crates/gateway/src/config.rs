use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, HttpChat, RecordingBackend, ReplayBackend};
use crate::error::GatewayError;
use crate::gateway::Gateway;
use crate::role::Role;
use crate::template::TemplateSet;

fn default_temperature() -> f64 {
    0.0
}

fn default_api_key_env() -> String {
    "HTP_API_KEY".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpSettings {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
}

impl HttpSettings {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpSettings {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: default_temperature(),
            api_key_env: default_api_key_env(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendKind {
    HttpChat(HttpSettings),
    Scripted { transcript: PathBuf },
    Recording { transcript: PathBuf, http: HttpSettings },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default = "BackendConfig::default_retry_limit")]
    pub retry_limit: u32,
    #[serde(default = "BackendConfig::default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "BackendConfig::default_in_flight")]
    pub max_in_flight: usize,
    /// Roles answered by a different backend than `kind`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub role_overrides: BTreeMap<Role, BackendKind>,
    /// Directory of `<template id>.txt` files overriding the bundled ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_dir: Option<PathBuf>,
}

impl BackendConfig {
    fn default_retry_limit() -> u32 {
        1
    }

    fn default_timeout() -> f64 {
        120.0
    }

    fn default_in_flight() -> usize {
        4
    }

    pub fn new(kind: BackendKind) -> Self {
        BackendConfig {
            kind,
            retry_limit: Self::default_retry_limit(),
            timeout_secs: Self::default_timeout(),
            max_in_flight: Self::default_in_flight(),
            role_overrides: BTreeMap::new(),
            template_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        for kind in std::iter::once(&self.kind).chain(self.role_overrides.values()) {
            let http = match kind {
                BackendKind::HttpChat(h) | BackendKind::Recording { http: h, .. } => h,
                BackendKind::Scripted { .. } => continue,
            };
            if !(0.0..=2.0).contains(&http.temperature) {
                return Err(GatewayError::InvalidConfig(format!(
                    "temperature {} outside [0, 2]",
                    http.temperature
                )));
            }
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(GatewayError::InvalidConfig("timeout must be positive".into()));
        }
        Ok(())
    }

    fn backend(&self, kind: &BackendKind) -> Result<Arc<dyn Backend>, GatewayError> {
        let timeout = Duration::from_secs_f64(self.timeout_secs);
        let http = |h: &HttpSettings| {
            HttpChat::new(
                &h.endpoint,
                &h.model,
                h.temperature,
                &h.api_key_env,
                timeout,
                self.retry_limit,
            )
        };
        Ok(match kind {
            BackendKind::HttpChat(h) => Arc::new(http(h)?),
            BackendKind::Scripted { transcript } => Arc::new(ReplayBackend::open(transcript)?),
            BackendKind::Recording { transcript, http: h } => {
                Arc::new(RecordingBackend::new(Arc::new(http(h)?), transcript)?)
            }
        })
    }

    pub fn build(&self) -> Result<Gateway, GatewayError> {
        self.validate()?;
        let mut templates = TemplateSet::default();
        if let Some(dir) = &self.template_dir {
            templates.load_dir(dir)?;
        }
        let mut gateway = Gateway::new(self.backend(&self.kind)?)
            .with_retry_limit(self.retry_limit)
            .with_max_in_flight(self.max_in_flight)
            .with_templates(templates);
        for (role, kind) in &self.role_overrides {
            gateway = gateway.with_override(*role, self.backend(kind)?);
        }
        Ok(gateway)
    }
}
