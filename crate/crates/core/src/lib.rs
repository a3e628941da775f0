//! Energy-aware encodings for multi-level-cell phase change memory.
//!
//! The crate models 2-bit-per-cell PCM lines, a family of write encoders
//! (baseline, Flip-N-Write, XOR cosets, table cosets and the word-level
//! compression based schemes), the energy and disturbance cost of each write,
//! a trace-driven memory simulator and a parameter-sweep harness.

pub mod codec;
pub mod harness;
pub mod memsim;
pub mod metrics;
pub mod model;
pub mod wlc;
pub mod workloads;

pub use codec::{Codec, CodecError, EncodedLine, MemoryLine, SchemeConfig, SchemeKind};
pub use memsim::{Aggregate, MemoryArray, WriteRecord};
pub use metrics::{CostBreakdown, WriteReport};
pub use model::{CellState, DisturbanceModel, Energy, EnergyModel, Symbol};
