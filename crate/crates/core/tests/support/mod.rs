//! Oracles and generators shared by the integration and acceptance tests.
#![allow(dead_code)]

pub mod checks;
pub mod corrupt;
pub mod cypher;
pub mod graphs;
pub mod metrics;
pub mod models;
pub mod stub;
