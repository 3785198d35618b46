//! Group key transfer protocol with a trusted key generation center (KGC),
//! a synchronous broadcast network simulator, and an insider key-forgery
//! harness.

pub mod actors;
pub mod attacks;
pub mod cli;
pub mod config;
pub mod field;
pub mod hash;
pub mod math;
pub mod netsim;
pub mod oracle;
pub mod prime;
pub mod rng;
