//! Equivariant Liapunov-center analysis for `ẍ = −∇U(x)`: critical orbits of
//! symmetric potentials, the Euler ring of `S¹`, Conley-index certification
//! of bifurcation, and shooting for the periodic orbits that branch off.
//!
//! Numerical code is generic over [`scalar::Scalar`] / [`scalar::Real`]; the
//! aliases below fix the scalars used by the pipeline.

pub mod conley;
pub mod critical_orbits;
pub mod euler_ring;
pub mod linalg;
pub mod orbit_finder;
pub mod poly;
pub mod potential;
pub mod scalar;
pub mod symmetry;

pub use scalar::{Rational, Real, Scalar};

/// Floating point jet of a potential at a point.
pub type Jet = potential::Jet2<f64>;
/// Exact jet over the rationals.
pub type ExactJet = potential::Jet2<Rational>;
/// Dense `f64` matrix.
pub type RealMatrix = linalg::Matrix<f64>;
/// Dense exact matrix.
pub type ExactMatrix = linalg::Matrix<Rational>;
/// Trajectory integrated in double precision.
pub type RealTrajectory = orbit_finder::Trajectory<f64>;

pub use conley::{certify_bifurcation, ConleyOptions, ConleyReport};
pub use critical_orbits::{find_critical_orbits, CriticalOrbitRecord, SearchConfig};
pub use euler_ring::{chi_sphere, EulerRingElement, S1Representation};
pub use orbit_finder::{amplitude_sweep, refine_orbit, seed_from_linearization, FinderOptions, PeriodicOrbitSolution};
pub use potential::{parse_potential, PotentialSpec};
pub use symmetry::{BlockRotation, FinitePermGroup, GroupAction};
