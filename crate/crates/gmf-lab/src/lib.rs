//! A desk-scale numerical laboratory around gradient-scoped multimodal
//! fusion.
//!
//! The crate bundles four things that are usually studied apart:
//!
//! * [`tensor`]: a dense-matrix reverse-mode tape with a gradient barrier
//!   primitive, momentum SGD, seeded random streams, and a binary checkpoint
//!   container;
//! * [`gmf`]: the dissolve / concentrate / reconstruct fusion block whose
//!   dissociation loss is scoped away from feature extractors by that
//!   barrier;
//! * [`pnp`]: a one-dimensional Poisson-Nernst-Planck cell between blocking
//!   electrodes, discretized with exponential-fitted fluxes;
//! * [`entropy`] and [`bench`]: histogram information estimators, dimension
//!   and rank experiments, and a synthetic multimodal benchmark that
//!   exercises the fusion block end to end.
//!
//! Everything is reproducible from a single `u64` seed: named PRNG streams
//! derive from it, training loops are single-threaded, and report writers
//! emit byte-stable CSV.
//!
//! Start with the `examples/` directory; each file there demonstrates one
//! capability end to end. The `gmf-lab` binary wraps the same entry points
//! behind subcommands for scripted runs.

#![forbid(unsafe_code)]

pub mod bench;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod gmf;
pub mod pnp;
pub mod report;
pub mod tensor;

pub use error::{Error, Result};
