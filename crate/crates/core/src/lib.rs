//! Static analysis of Solidity NFT contracts for rug-pull backdoors.
//!
//! The pipeline is: [`frontend::parse`] → [`sanitizer::sanitize`] →
//! [`classifier::classify`] → [`detectors::run_all`] → [`risk::profile`] →
//! [`aggregate::aggregate`]. [`pipeline`] wires these together for single
//! files and whole directories.

pub mod aggregate;
pub mod charts;
pub mod classifier;
pub mod config;
pub mod detectors;
pub mod error;
pub mod frontend;
pub mod manifest;
pub mod pipeline;
pub mod risk;
pub mod sanitizer;
