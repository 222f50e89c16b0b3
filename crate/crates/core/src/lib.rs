//! Numerics for elliptic equations whose weight `|y|^a` degenerates or blows
//! up on the thin manifold `Σ₀ = {|y| = 0}` of `R^d = R^{d-n} × R^n`.
//!
//! The crate is organised bottom-up:
//!
//! * [`params`] — exponent and constant algebra for `(d, n, a)`;
//! * [`grid`] — cell-centred grids on the reduced half-space `(x, r)` and on
//!   small full grids, with the lift/restrict maps between them;
//! * [`solver`] — flux-form assembly and preconditioned CG for the weighted
//!   equation, plus the identity checks used to study axisymmetric solutions;
//! * [`extension`] — Poisson-kernel extension of traces on a torus, the
//!   Dirichlet-to-Neumann map and the spectral fractional Laplacian;
//! * [`analysis`] — Hölder-exponent fits, boundary Harnack ratios, radial
//!   capacities and Hardy ratios.
//!
//! Everything numeric is generic over a [`Real`] scalar (`f32` or `f64`);
//! the `*64` aliases below fix the scalar to `f64`.

pub mod analysis;
pub mod error;
pub mod extension;
pub mod grid;
pub mod params;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod special;

mod linalg;

pub use error::{Error, Result};
pub use params::{ProblemParams, Regime};
pub use scalar::Real;

pub type ProblemParams64 = params::ProblemParams<f64>;
pub type AxiGrid64 = grid::AxiGrid<f64>;
pub type Field64 = grid::Field<f64>;
pub type FullGrid64 = grid::FullGrid<f64>;
pub type FullField64 = grid::FullField<f64>;
pub type BoundaryCondition64 = solver::BoundaryCondition<f64>;
pub type LinearSystem64 = solver::LinearSystem<f64>;
pub type TraceFunction64 = extension::TraceFunction<f64>;
pub type HolderFit64 = analysis::HolderFit<f64>;
