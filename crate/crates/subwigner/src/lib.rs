//! Joint fluctuations of linear eigenvalue statistics over overlapping
//! principal submatrices of Wigner random matrices.
//!
//! For index sets `B_1, .., B_d` with densities `gamma_l` and pairwise
//! overlap densities `gamma_lp`, the centered statistics
//! `Tr phi_l(M(B_l)) - E[..]` converge jointly to a Gaussian vector whose
//! covariance has a closed form in the rescaled Chebyshev coefficients of
//! the test functions, driven entirely by the ratio
//! `beta = gamma_lp / sqrt(gamma_l gamma_p)`. This crate evaluates that
//! covariance by three independent routes and validates them against each
//! other and against Monte Carlo simulation:
//!
//! * [`theory`] — the coefficient series (production path), the
//!   contour-integral form against the Gaussian-free-field log kernel, and
//!   the diagonalized bilinear form;
//! * [`freeprob`] — an exact-arithmetic combinatorial oracle summing over
//!   non-crossing pair partitions / Dyck paths;
//! * [`montecarlo`] — replicated finite-order experiments with
//!   deterministic parallel seeding, covariance standard errors, and
//!   normality diagnostics.
//!
//! Supporting modules: [`ensemble`] (entry laws, sampling, index
//! families), [`spectra`] (dense symmetric eigensolve and statistics),
//! [`chebfn`] (rescaled Chebyshev machinery), [`cli`] (the batch front
//! end behind the `subwigner` binary).
//!
//! The `examples/` directory contains one runnable walk-through per major
//! capability; `cargo run --example theory_breakdown` is a good starting
//! point.

pub mod chebfn;
pub mod cli;
pub mod ensemble;
pub mod freeprob;
pub mod matrix;
pub mod montecarlo;
pub mod spectra;
pub mod theory;

pub use chebfn::{ChebCoeffs, TestFunction};
pub use ensemble::{EntryLaw, EntryLawKind, IndexSetSpec, OverlapGeometry, WignerSample};
pub use montecarlo::{ComparisonReport, ExperimentConfig, SimulationResult};
pub use spectra::{Spectrum, StatisticVector};
pub use theory::{CovarianceBreakdown, TheoryOptions};
