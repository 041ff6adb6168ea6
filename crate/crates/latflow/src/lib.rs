//! Random-capacity lattice flows.
//!
//! Every edge of a finite window of the `Z^d` lattice carries an i.i.d.
//! non-negative capacity. This crate computes exact maximum flows and
//! canonical minimal cutsets on boxes `B(k, m)`, runs the geometric
//! constructions that certify those cutsets (exterior boundaries,
//! renormalized cube shells, tunnel exits, cutset patching), and drives
//! Monte Carlo estimation of the flow constant, the surface-law tail,
//! and concentration behaviour.
//!
//! Capacities are fixed-point: every value is an integer count of quanta
//! (`2^-20` units by default), so max-flow = min-cut holds to the last
//! bit and all passage-time comparisons are exact. The flow solver and
//! the planar dual oracle are generic over the arithmetic scalar (see
//! [`scalar::FlowScalar`]); production code instantiates them at [`Cap`].

pub mod capacity;
pub mod cluster;
pub mod cutset;
pub mod estimator;
pub mod flow;
pub mod lattice;
pub mod patch;
pub mod renorm;
pub mod scalar;
pub mod suite;

/// Capacity scalar used throughout: signed 64-bit quanta.
pub type Cap = i64;

/// Default fixed-point resolution: capacities are multiples of `2^-20`.
pub const DEFAULT_QUANTUM_BITS: u32 = 20;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("degenerate box: {0}")]
    DegenerateBox(String),
    #[error("invalid scale: {0}")]
    InvalidScale(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("inconsistent result: {0}")]
    Inconsistent(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("cluster reaches the window boundary: {0}")]
    InfiniteCluster(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
