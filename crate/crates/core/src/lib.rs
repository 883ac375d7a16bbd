//! Deterministic traffic co-simulation core: road networks, microscopic
//! traffic, pre-crash scenarios, run logs and a throughput harness.

pub mod bench;
pub mod config;
pub mod datalog;
pub mod geometry;
pub mod network;
pub mod scenario;
pub mod traffic;
