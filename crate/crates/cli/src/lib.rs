//! Configuration, persistence and command-line surface for soliton experiments.

pub mod app;
pub mod checkpoint;
pub mod config;
pub mod plots;
pub mod series;
