pub mod algorithms;
pub mod env;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod regions;
pub mod rng;
