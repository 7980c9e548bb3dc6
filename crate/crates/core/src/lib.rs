//! Verification protocols for ground states of frustration-free
//! Hamiltonians.
//!
//! The crate builds matching and coloring protocols out of local bond tests,
//! computes their spectral gaps on small systems, evaluates the closed-form
//! gap and sample-count bounds, and simulates the resulting hypothesis test.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix it to `f64`.

pub mod aklt;
pub mod checks;
pub mod detectability;
pub mod error;
pub mod graph;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod protocol;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use graph::{generators, Hypergraph, Vertex};
pub use linalg::SolverOptions;
pub use protocol::{CompetitorCosts, CompetitorParams};
pub use scalar::Real;
pub use simulate::{NoiseMode, NoiseSpec, RunResult};

pub type MatchingCover = graph::MatchingCover<f64>;
pub type FfHamiltonian = hamiltonian::FfHamiltonian<f64>;
pub type SpectralProfile = hamiltonian::SpectralProfile<f64>;
pub type DirectionDistribution = aklt::DirectionDistribution<f64>;
pub type BondOperator = aklt::BondOperator<f64>;
pub type BondSpec = protocol::BondSpec<f64>;
pub type Protocol = protocol::Protocol<f64>;
pub type GapReport = protocol::GapReport<f64>;
pub type NoisyState = simulate::NoisyState<f64>;
pub type TestSampler = simulate::TestSampler<f64>;
pub type CMatrix = linalg::CMatrix<f64>;
pub type CVector = linalg::CVector<f64>;
