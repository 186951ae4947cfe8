//! Stop-aware instruction-following navigation on synthetic street graphs.

pub mod harness;
pub mod language;
pub mod metrics;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod training;
pub mod world;
