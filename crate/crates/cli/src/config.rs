use std::path::{Path, PathBuf};
use std::str::FromStr;

use htp_core::rules::builtin;
use htp_core::RuleLibrary;
use htp_eval::{Benchmark, KnowledgeBase, PlanFormat};
use htp_gateway::{BackendConfig, BackendKind, Gateway, HttpSettings};
use htp_planner::{BuilderParams, PipelineParams};

use crate::error::CliError;

/// Where model replies come from, written `kind:ref` on the command line.
///
/// * `replay:PATH` answers from a JSONL transcript. In a batch run a
///   directory holds one `<id>.jsonl` per instance.
/// * `record:PATH=MODEL@ENDPOINT` calls a chat endpoint and appends every
///   reply to the transcript at `PATH` (a directory in a batch run).
/// * `http:MODEL@ENDPOINT` calls a chat endpoint.
/// * `config:PATH` reads a full JSON backend config.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Replay(PathBuf),
    Record { transcript: PathBuf, http: HttpSettings },
    Http(HttpSettings),
    Config(PathBuf),
}

fn http_ref(s: &str) -> Result<HttpSettings, String> {
    let (model, endpoint) = s
        .split_once('@')
        .filter(|(m, e)| !m.is_empty() && !e.is_empty())
        .ok_or_else(|| format!("expected MODEL@ENDPOINT, got `{s}`"))?;
    Ok(HttpSettings::new(endpoint, model))
}

impl FromStr for BackendSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, reference) = s
            .split_once(':')
            .filter(|(_, r)| !r.is_empty())
            .ok_or_else(|| format!("backend `{s}` is not of the form kind:ref"))?;
        match kind {
            "replay" => Ok(BackendSpec::Replay(reference.into())),
            "config" => Ok(BackendSpec::Config(reference.into())),
            "http" => Ok(BackendSpec::Http(http_ref(reference)?)),
            "record" => {
                let (path, http) = reference
                    .split_once('=')
                    .ok_or_else(|| format!("expected record:PATH=MODEL@ENDPOINT, got `{s}`"))?;
                Ok(BackendSpec::Record {
                    transcript: path.into(),
                    http: http_ref(http)?,
                })
            }
            other => Err(format!(
                "unknown backend kind `{other}` (expected replay, record, http or config)"
            )),
        }
    }
}

fn per_instance(path: &Path, instance: Option<&str>) -> PathBuf {
    match instance {
        Some(id) if path.is_dir() => path.join(format!("{id}.jsonl")),
        _ => path.to_path_buf(),
    }
}

fn rebase(kind: &mut BackendKind, base: &Path) {
    match kind {
        BackendKind::Scripted { transcript } | BackendKind::Recording { transcript, .. }
            if transcript.is_relative() =>
        {
            *transcript = base.join(&*transcript);
        }
        _ => {}
    }
}

impl BackendSpec {
    /// The gateway config for one run. Relative transcript paths inside a
    /// config file resolve against the file's directory.
    pub fn backend_config(&self, instance: Option<&str>) -> Result<BackendConfig, CliError> {
        Ok(match self {
            BackendSpec::Replay(path) => BackendConfig::new(BackendKind::Scripted {
                transcript: per_instance(path, instance),
            }),
            BackendSpec::Record { transcript, http } => BackendConfig::new(BackendKind::Recording {
                transcript: per_instance(transcript, instance),
                http: http.clone(),
            }),
            BackendSpec::Http(http) => BackendConfig::new(BackendKind::HttpChat(http.clone())),
            BackendSpec::Config(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let mut cfg: BackendConfig =
                    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new("."));
                rebase(&mut cfg.kind, base);
                for kind in cfg.role_overrides.values_mut() {
                    rebase(kind, base);
                }
                if let Some(dir) = cfg.template_dir.as_mut().filter(|d| d.is_relative()) {
                    *dir = base.join(&*dir);
                }
                cfg
            }
        })
    }

    fn check(&self) -> Result<(), CliError> {
        match self {
            BackendSpec::Replay(path) | BackendSpec::Config(path) if !path.exists() => {
                Err(CliError::Config(format!("{} does not exist", path.display())))
            }
            _ => Ok(()),
        }
    }

    /// Builds the gateway. A transcript missing for one instance means that
    /// run has no model, not that the configuration is wrong.
    pub fn gateway(&self, instance: Option<&str>) -> Result<Gateway, CliError> {
        let cfg = self.backend_config(instance)?;
        cfg.build().map_err(|e| {
            if e.is_unavailable() {
                CliError::Unavailable(e.to_string())
            } else {
                CliError::Config(e.to_string())
            }
        })
    }
}

/// Everything a run needs besides the query or dataset.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Rule library file; `None` uses the bundled library of the benchmark.
    pub library: Option<PathBuf>,
    pub benchmark: Option<Benchmark>,
    pub backend: BackendSpec,
    pub params: BuilderParams,
    pub pipeline: PipelineParams,
    pub knowledge: Option<PathBuf>,
    pub out: PathBuf,
    pub jobs: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(backend: BackendSpec, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            library: None,
            benchmark: None,
            backend,
            params: BuilderParams::default(),
            pipeline: PipelineParams::default(),
            knowledge: None,
            out: out.into(),
            jobs: 1,
            seed: 0,
        }
    }

    /// Checks that referenced paths exist and parameters are consistent.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(CliError::Config)?;
        if self.jobs == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        if self.library.is_none() && self.benchmark.is_none() {
            return Err(CliError::Config("pass --library or --benchmark".into()));
        }
        for path in self.library.iter().chain(&self.knowledge) {
            if !path.is_file() {
                return Err(CliError::Config(format!("{} does not exist", path.display())));
            }
        }
        self.backend.check()
    }

    pub fn load_library(&self) -> Result<RuleLibrary, CliError> {
        let text = match (&self.library, self.benchmark) {
            (Some(path), _) => {
                std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            (None, Some(b)) => builtin::by_name(b.name())
                .expect("every benchmark ships a library")
                .to_string(),
            (None, None) => return Err(CliError::Config("pass --library or --benchmark".into())),
        };
        RuleLibrary::parse(&text).map_err(|e| CliError::Config(format!("rule library: {e}")))
    }

    /// The benchmark's format, else one guessed from the library file name.
    pub fn plan_format(&self) -> Result<PlanFormat, CliError> {
        if let Some(b) = self.benchmark {
            return Ok(b.plan_format());
        }
        self.library
            .as_deref()
            .and_then(|p| p.file_stem())
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<Benchmark>().ok())
            .map(Benchmark::plan_format)
            .ok_or_else(|| CliError::Config("cannot infer the plan format; pass --benchmark".into()))
    }

    pub fn load_knowledge(&self) -> Result<Option<KnowledgeBase>, CliError> {
        self.knowledge
            .as_deref()
            .map(|p| KnowledgeBase::load(p).map_err(|e| CliError::Config(e.to_string())))
            .transpose()
    }
}

/// Reads `@file` arguments from disk; anything else is taken literally.
pub fn read_query(arg: &str) -> Result<String, CliError> {
    match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .map(|s| s.trim_end().to_string())
            .map_err(|e| CliError::Config(format!("{path}: {e}"))),
        None => Ok(arg.to_string()),
    }
}
