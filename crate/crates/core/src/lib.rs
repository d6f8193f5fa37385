//! Cold storage archive benchmarking.
//!
//! The crate generates domain-shaped datasets and request streams, replays
//! them against simulated tape, disk-cache, cloud and hybrid backends under a
//! virtual clock, and reports latency, sustained download bandwidth and cost.

pub mod backends;
pub mod config;
pub mod cost;
pub mod datagen;
pub mod driver;
pub mod report;
pub mod sim;
pub mod units;
pub mod workload;
pub mod zipf;
