use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};

use super::{apply_requirement, ApplyMode, GraphError, KnowledgeGraph, UpdateReport};
use crate::model::RequirementModel;

/// Shared graph with snapshot reads and serialized writes.
///
/// Readers get an `Arc` to an immutable graph and never block writers for
/// longer than a pointer swap. Writers work on a private copy.
#[derive(Debug)]
pub struct GraphStore {
    current: RwLock<Arc<KnowledgeGraph>>,
    writer: Mutex<()>,
}

impl GraphStore {
    pub fn new(graph: KnowledgeGraph) -> Self {
        Self { current: RwLock::new(Arc::new(graph)), writer: Mutex::new(()) }
    }

    pub fn snapshot(&self) -> Arc<KnowledgeGraph> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn apply(
        &self,
        model: &RequirementModel,
        mode: ApplyMode,
        at: DateTime<Utc>,
    ) -> Result<UpdateReport, GraphError> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut next = (*self.snapshot()).clone();
        let report = apply_requirement(&mut next, model, mode, at)?;
        debug_assert!(next.check_integrity().is_ok());
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
        Ok(report)
    }

    pub fn replace(&self, graph: KnowledgeGraph) {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(graph);
    }
}
