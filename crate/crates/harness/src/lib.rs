//! Adversaries, exact verifier, benchmarks and trace tooling for `dyncolor`.

pub mod adversary;
pub mod bench;
pub mod config;
pub mod runner;
pub mod verify;
