//! The `cinemeta` command line: batch ingest, export, query and evaluation.

pub mod config;
pub mod demo;
pub mod eval;
pub mod pipeline;
