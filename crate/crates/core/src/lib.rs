//! Simulation, decoding and fault-tolerance verification for the
//! [[16,4,4]] tesseract subsystem color code.

pub mod circuit;
pub mod gf2;
pub mod pauli;
pub mod tableau;

pub use circuit::{Basis, Circuit, CircuitBuilder, CircuitError, Instruction, Op};
pub use pauli::{Pauli1, PauliError, PauliOperator};
pub use tableau::{stabilizer_group_of, Tableau};
pub mod propagate;
pub mod simulate;
pub mod code;
pub mod decoder;
pub mod noise;
pub mod sampler;
pub mod gadgets;
pub mod experiments;
pub mod stats;
pub mod verifier;
