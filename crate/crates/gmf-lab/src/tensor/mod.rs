//! Minimal dense-matrix substrate: storage, reverse-mode tape, SGD,
//! seeded random streams, and a binary checkpoint container.

pub mod checkpoint;
pub mod matrix;
pub mod optim;
pub mod prng;
pub mod tape;

pub use matrix::Matrix;
pub use optim::{sgd_step, ParamId, ParamSet, Parameter, SgdConfig};
pub use prng::SplitMix64;
pub use tape::{NodeId, Tape};
