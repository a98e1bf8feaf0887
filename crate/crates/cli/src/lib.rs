//! Command-line and HTTP front ends for `intentmfg-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod service;
