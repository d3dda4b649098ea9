//! Desk-scale embodied-exploration harness: a deterministic 2D grid world
//! with cone-of-view sensing, frontier extraction over an online occupancy
//! map, two-layer frontier clustering for coarse-to-fine selection by a text
//! policy, retrospective experience abstraction with fused recall, and
//! episode-level evaluation metrics.
//!
//! Start with the runnable programs under `examples/`; each one exercises a
//! single capability end to end. The `gridexplore` binary exposes the same
//! pipeline as subcommands (`gen-maps`, `build-experience`, `run`,
//! `evaluate`, `ablate`, `dump-hierarchy`).

pub mod experience;
pub mod harness;
pub mod hierarchy;
pub mod mapping;
pub mod metrics;
pub mod policy;
pub mod retrieval;
pub mod sim;
pub mod textgen;
