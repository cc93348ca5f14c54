//! Desk-scale quantum learning for seismic full-waveform inversion.
//!
//! The pipeline runs end to end on an exact statevector simulator: a 2D
//! acoustic finite-difference engine synthesizes layered velocity models and
//! their shot gathers, physics-guided or nearest-neighbor scaling shrinks
//! them to a 256-value input and an 8x8 label, grouped amplitude encoding
//! loads inputs into qubits, a trainable U3+CU3 block circuit processes
//! them, and pixel-wise or layer-wise decoders turn measurements back into
//! velocity maps. A superposition batching construction processes 2^N
//! samples at once with N extra qubits per group.

pub mod ansatz;
pub mod batch;
pub mod cli;
pub mod decode;
pub mod encode;
pub mod error;
pub mod io;
pub mod metrics;
pub mod qsim;
pub mod train;
pub mod wavesim;

pub use error::{Error, Result};
