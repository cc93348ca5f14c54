//! File formats: NPY tensors, the native dataset container, checkpoints,
//! and CSV metric logs. Everything written here is read back by the same
//! build bit-exactly.

pub mod checkpoint;
pub mod csv;
pub mod dataset;
pub mod manifest;
pub mod npy;
