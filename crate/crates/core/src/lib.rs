//! File-format-aware dataflow analysis for record-processing programs.
//!
//! A program in a small Cobol-like language is analyzed together with an
//! input automaton that describes which sequences of record types its input
//! file may contain. Facts are tracked per automaton state, which rules out
//! paths no well-formed file can drive.

pub mod conformance;
pub mod domains;
pub mod formatspec;
pub mod lifted;
pub mod minilang;
pub mod oracle;
pub mod pfsg;
pub mod session;
pub mod specializer;

pub use session::{FfaError, OutputFormat, Session};
