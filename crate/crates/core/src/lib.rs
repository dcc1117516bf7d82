//! Schedule optimizer for GPU-native assembly (SASS).
//!
//! The crate parses SASS kernel listings, runs static dependency analysis,
//! and searches for faster instruction schedules by repeatedly swapping
//! adjacent memory instructions under a dependency-aware action mask. The
//! search is driven by a masked PPO agent scored by a pluggable performance
//! evaluator: a deterministic latency simulator or an external GPU executor
//! command.

pub mod analysis;
pub mod env;
pub mod eval;
pub mod microbench;
pub mod rl;
pub mod sass;

pub use analysis::{analyze, AnalysisReport, StallCountTable};
pub use sass::{parse_kernel, serialize_kernel, Instruction, Kernel};
