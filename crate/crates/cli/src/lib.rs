//! Command-line front end and triage service for `uxprobe-core`.

pub mod commands;
pub mod config;
pub mod service;
