//! Core toolkit for fluidic (pneumatic) logic circuits.
//!
//! - [`fchdl`]: parse, validate and serialize FC-HDL circuit text.
//! - [`simulator`]: tick-based simulation of binary pressure signals.
//! - [`verifier`]: truth-table and temporal checks, redundancy and scoring.
//! - [`layout`]: simulated-annealing placement of operator footprints.
//! - [`patterns`]: heat-seal pattern dimensions and SVG for inflatable airbags.

pub mod fchdl;
pub mod simulator;
pub mod layout;
pub mod patterns;
pub mod verifier;

pub use fchdl::{parse_circuit, serialize_circuit, NetName, Netlist, OperatorInstance, OperatorKind};
