//! Command-line pipeline driver and read-only dashboard API.

pub mod api;
pub mod cli;
pub mod snapshot;
