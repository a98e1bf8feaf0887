use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use intentmfg_core::catalog::ProcessCatalog;
use intentmfg_core::graph::{load_graph, KnowledgeGraph};
use intentmfg_core::translate::EndpointConfig;
use serde::{Deserialize, Serialize};

use crate::error::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Rule,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "loopback")]
    pub bind: IpAddr,
    #[serde(default = "default_port")]
    pub port: u16,
    /// Applies allowed to run or wait at once; further ones get 409.
    #[serde(default = "default_queue")]
    pub apply_queue: usize,
}

fn loopback() -> IpAddr {
    IpAddr::V4(Ipv4Addr::LOCALHOST)
}
fn default_port() -> u16 {
    8080
}
fn default_queue() -> usize {
    8
}
fn default_log_level() -> String {
    "info".into()
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self { bind: loopback(), port: default_port(), apply_queue: default_queue() }
    }
}

impl ServerConfig {
    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.bind, self.port)
    }
}

/// Contents of `app.toml`. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    /// Catalog JSON; the built-in catalog when absent.
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    /// Graph JSON loaded at startup; the built-in ontology when absent.
    #[serde(default)]
    pub ontology: Option<PathBuf>,
    #[serde(default)]
    pub backend: BackendKind,
    #[serde(default)]
    pub endpoint: Option<EndpointConfig>,
    #[serde(default)]
    pub server: ServerConfig,
    #[serde(default = "default_log_level")]
    pub log_level: String,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            catalog: None,
            ontology: None,
            backend: BackendKind::Rule,
            endpoint: None,
            server: ServerConfig::default(),
            log_level: default_log_level(),
        }
    }
}

impl AppConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, Failure> {
        let mut config: AppConfig =
            toml::from_str(text).map_err(|e| Failure::usage(format!("invalid config: {e}")))?;
        for p in [&mut config.catalog, &mut config.ontology].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.endpoint = config.endpoint.map(EndpointConfig::with_env_overrides);
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn check(&self) -> Result<(), Failure> {
        for p in [&self.catalog, &self.ontology].into_iter().flatten() {
            if !p.exists() {
                return Err(Failure::io(format!("{} does not exist", p.display())));
            }
        }
        if let Some(e) = &self.endpoint {
            e.check().map_err(Failure::usage)?;
        }
        if self.backend == BackendKind::Remote && self.endpoint.is_none() {
            return Err(Failure::usage("backend = \"remote\" needs an [endpoint] section"));
        }
        if self.server.apply_queue == 0 {
            return Err(Failure::usage("server.apply_queue must be at least 1"));
        }
        Ok(())
    }

    pub fn load_catalog(&self) -> Result<ProcessCatalog, Failure> {
        load_catalog(self.catalog.as_deref())
    }

    pub fn load_ontology(&self) -> Result<KnowledgeGraph, Failure> {
        load_ontology(self.ontology.as_deref())
    }
}

pub fn load_catalog(path: Option<&Path>) -> Result<ProcessCatalog, Failure> {
    use intentmfg_core::catalog::CatalogError;
    match path {
        None => Ok(ProcessCatalog::default()),
        Some(p) => ProcessCatalog::load(p).map_err(|e| match e {
            CatalogError::Io { .. } => Failure::io(e.to_string()),
            other => Failure::validation(crate::error::ApiError::bad_request(other.to_string())),
        }),
    }
}

pub fn load_ontology(path: Option<&Path>) -> Result<KnowledgeGraph, Failure> {
    match path {
        None => Ok(KnowledgeGraph::default_ontology()),
        Some(p) => Ok(load_graph(p)?),
    }
}
