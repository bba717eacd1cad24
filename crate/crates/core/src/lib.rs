//! Byzantine-resilient multicast network coding over simulated random linear network coding.

pub mod adversary;
pub mod blocks;
pub mod cryptokit;
pub mod gf;
pub mod harness;
pub mod linalg;
pub mod netsim;
pub mod rng;
pub mod schemes;
