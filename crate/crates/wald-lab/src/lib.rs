//! Command-line front end: flat config files, command dispatch, CSV and
//! JSON artifacts.

pub mod commands;
pub mod config;
pub mod output;
