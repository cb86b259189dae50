//! Experiment runner: configuration, subcommands and output formats.

pub mod commands;
pub mod config;
pub mod output;
