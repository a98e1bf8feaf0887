//! Intent-driven manufacturing pipeline: natural-language operator intents are
//! translated into JSON requirement models, applied to a process/resource/
//! constraint knowledge graph, and scored with structured-prediction metrics.

pub mod catalog;
pub mod dataset;
pub mod decimal;
pub mod eval;
pub mod graph;
pub mod model;
pub mod translate;

pub use catalog::ProcessCatalog;
pub use decimal::Decimal;
pub use model::{
    canonicalize, parse_constraint_value, parse_requirement_model, serialize, validate,
    RequirementModel,
};
