//! Numerical laboratory for planar lattice statistical mechanics.
//!
//! The crate computes exact and Monte Carlo critical data for the
//! nearest-neighbour and generalized Ising models, two Ising layers coupled by
//! a quartic term (Ashkin–Teller and eight-vertex variants), the six-vertex
//! model and the (interacting) dimer model on the square torus, and checks the
//! extended scaling relations that tie their exponents together.
//!
//! Module map:
//!
//! * [`lattice`]: torus geometry, spin/dimer configurations, height function,
//!   Hamiltonians and exhaustive-enumeration oracles for tiny systems.
//! * [`linalg`]: dense LU factorisation (real and complex) used by the
//!   Kasteleyn solver.
//! * [`pfaffian`]: skew-symmetric Pfaffians, Kasteleyn matrices, exact dimer
//!   partition functions and correlations.
//! * [`exactsol`]: closed-form critical data and the relation verifier.
//! * [`montecarlo`]: Metropolis samplers and correlation estimators.
//! * [`stats`]: binning and jackknife error analysis.
//! * [`fitting`]: exponent extraction and Binder-crossing location.
//! * [`rgflow`]: running-coupling recursion and scaling dimensions.

pub mod exactsol;
pub mod fitting;
pub mod lattice;
pub mod linalg;
pub mod montecarlo;
pub mod pfaffian;
pub mod rgflow;
pub mod stats;

pub use exactsol::{CouplingParams, ExponentName, ExponentSet, RelationReport};
pub use lattice::{DimerCover, DualPath, SpinConfig, SpinPairConfig, TorusLattice};
