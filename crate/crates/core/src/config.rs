//! TOML configuration shared by `serve` and `tutor`.
//!
//! Every key is optional; omitted keys fall back to the bundled demo
//! (graph, chicken-rabbit problem, four strategy arms, scripted backend).
//! Relative paths resolve against the configuration file's directory.
//!
//! ```toml
//! graph = "demo_graph.json"
//! log_path = "sessions.log"
//!
//! [[problems]]
//! file = "chicken_rabbit.json"
//!
//! [[arms]]
//! id = "hint_first"
//! directive = "Open with a small hint, then ask the learner to take the next step."
//!
//! [backend]
//! kind = "scripted"        # or "remote" with `model` (and optional `base_url`)
//!
//! [dialogue]
//! advance_threshold = 0.8
//! remediation_threshold = 0.3
//! max_turns_per_stage = 4
//! history_window = 8
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::adaptation::{default_arms, StrategyArm};
use crate::agent::{
    BackendError, BackendFactory, GenerationSettings, RemoteBackend, RetrievalSettings,
    ScriptedSpec, API_KEY_ENV,
};
use crate::dialogue::{DialogueSettings, ProblemInstance};
use crate::kg::{KgError, KnowledgeGraph};
use crate::tutor::TutorSettings;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("graph {path}: {source}")]
    Graph {
        path: PathBuf,
        #[source]
        source: KgError,
    },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("duplicate problem id `{0}`")]
    DuplicateProblem(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    File { file: PathBuf },
    Inline(ProblemInstance),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Scripted {
        #[serde(default)]
        rules: Vec<crate::agent::KeywordRule>,
        #[serde(default)]
        responses: Vec<String>,
    },
    Remote {
        model: String,
        #[serde(default)]
        base_url: Option<String>,
    },
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Scripted {
            rules: Vec::new(),
            responses: Vec::new(),
        }
    }
}

/// Raw configuration file contents.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub graph: Option<PathBuf>,
    pub problems: Vec<ProblemSource>,
    pub arms: Vec<StrategyArm>,
    pub backend: BackendConfig,
    pub dialogue: DialogueSettings,
    pub retrieval: RetrievalSettings,
    pub generation: GenerationSettings,
    pub log_path: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

/// A configuration with files loaded and defaults applied.
#[derive(Clone)]
pub struct AppConfig {
    pub graph: Arc<KnowledgeGraph>,
    pub problems: Vec<ProblemInstance>,
    pub arms: Vec<StrategyArm>,
    pub backend: Arc<dyn BackendFactory>,
    pub backend_kind: &'static str,
    pub settings: TutorSettings,
    pub log_path: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

impl std::fmt::Debug for AppConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AppConfig")
            .field("nodes", &self.graph.nodes().len())
            .field("problems", &self.problems.len())
            .field("arms", &self.arms.len())
            .field("backend", &self.backend_kind)
            .field("settings", &self.settings)
            .field("log_path", &self.log_path)
            .finish()
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })
}

impl AppConfig {
    /// The bundled demo with the scripted backend.
    pub fn bundled() -> Self {
        Self::from_file(ConfigFile::default(), Path::new("."))
            .expect("bundled configuration is valid")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read(path)?;
        let file: ConfigFile = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_file(file, base)
    }

    pub fn from_file(file: ConfigFile, base: &Path) -> Result<Self, ConfigError> {
        let resolve = |p: &Path| if p.is_absolute() { p.to_owned() } else { base.join(p) };

        let graph = match &file.graph {
            Some(p) => {
                let path = resolve(p);
                KnowledgeGraph::from_json(&read(&path)?)
                    .map_err(|source| ConfigError::Graph { path, source })?
            }
            None => KnowledgeGraph::demo(),
        };

        let mut problems = Vec::new();
        for source in &file.problems {
            let problem = match source {
                ProblemSource::Inline(p) => p.clone(),
                ProblemSource::File { file } => {
                    let path = resolve(file);
                    let mut p: ProblemInstance = serde_json::from_str(&read(&path)?)
                        .map_err(|e| ConfigError::Parse {
                            path: path.clone(),
                            message: e.to_string(),
                        })?;
                    if p.id.is_empty() {
                        p.id = path
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_default();
                    }
                    p
                }
            };
            if problems.iter().any(|q: &ProblemInstance| q.id == problem.id) {
                return Err(ConfigError::DuplicateProblem(problem.id));
            }
            problems.push(problem);
        }
        if problems.is_empty() {
            problems.push(ProblemInstance::demo());
        }

        let arms = if file.arms.is_empty() { default_arms() } else { file.arms };

        let (backend, backend_kind): (Arc<dyn BackendFactory>, _) = match file.backend {
            BackendConfig::Scripted { rules, responses } => {
                let spec = if rules.is_empty() && responses.is_empty() {
                    ScriptedSpec::demo()
                } else {
                    ScriptedSpec { rules, responses }
                };
                (Arc::new(spec), "scripted")
            }
            BackendConfig::Remote { model, base_url } => {
                let remote = match base_url {
                    Some(url) => RemoteBackend::new(url, model, std::env::var(API_KEY_ENV).ok()),
                    None => RemoteBackend::from_env(model)?,
                };
                (Arc::new(remote), "remote")
            }
        };

        Ok(Self {
            graph: Arc::new(graph),
            problems,
            arms,
            backend,
            backend_kind,
            settings: TutorSettings {
                dialogue: file.dialogue,
                retrieval: file.retrieval,
                generation: file.generation,
            },
            log_path: file.log_path.map(|p| resolve(&p)),
            static_dir: file.static_dir.map(|p| resolve(&p)),
        })
    }

    pub fn problem(&self, id: &str) -> Option<&ProblemInstance> {
        self.problems.iter().find(|p| p.id == id)
    }
}
