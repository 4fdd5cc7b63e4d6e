//! Greedy sign-choice dynamics `x_n = x_{n-1} +- v_n`.
//!
//! The sign at each step is the one that brings the walker closer to the
//! origin. This crate provides the step rule and trajectory simulation, the
//! direction families, the radial Markov chain of the uniform-random case and
//! the geometric predicates of the van der Corput case.

pub mod error;
pub mod export;
pub mod geometry;
pub mod point;
pub mod quadrature;
pub mod radial;
pub mod sources;
pub mod stats;
pub mod validation;
pub mod walk;

pub use error::{Error, Result};
pub use point::Point;
pub use radial::{
    c_d, first_coord_density, kernel, mc_invariant, radial_step, sample_first_coord,
    solve_stationary, stationary_mean, DensityGrid, RadialHistogram,
};
pub use sources::{vdc, farey_term, DirectionSource, Fraction, Real, SourceKind};
pub use walk::{
    greedy_harmonic, greedy_step, simulate, simulate_with, SimulateOptions, Sign, Step,
    StepOutcome, Storage, TieMode, TiePolicy, Trajectory,
};
