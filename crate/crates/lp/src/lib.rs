//! Linear programs for weighted Expected Shortfall portfolio selection.
//!
//! * [`model`]: a plain row-wise LP representation.
//! * [`solver`]: a deterministic bounded-variable revised simplex.
//! * [`mps`]: fixed-format MPS export and re-import for external solvers.
//! * [`portfolio`]: the manager, analyst and generic epigraph programs.

pub mod error;
pub mod model;
pub mod mps;
pub mod portfolio;
pub mod solver;

pub use error::{LpError, Result};
pub use model::{LpModel, Row, Sense};
pub use mps::{export_lp_file, parse_lp_file};
pub use portfolio::{
    build_analyst_lp, build_generic_regret_lp, build_manager_lp, es_of_portfolio, portfolio_losses, solve_portfolio,
    AffineFunctional, AffinePiece, PortfolioProblem, PortfolioSolution, RegretPieces, TargetMode,
};
pub use solver::{solve, solve_with, LpSolution, LpStatus, SolverOptions};
