//! Command-line front end for the fork-join storage simulator: scenario
//! files, sweep execution with CSV output, and figure-data generation.
//!
//! The binary (`fjsim`) wires these modules to three subcommands:
//! `bounds` (stability verdict plus per-class latency bounds), `run`
//! (simulate, sweeping if configured, and emit CSV), and `sweep-report`
//! (reshape result CSVs into per-figure `.dat` files).

pub mod config;
pub mod report;
pub mod runner;
