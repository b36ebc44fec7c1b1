//! Numerical minimization of discretized free-boundary problems and the
//! residual checks tying them back to the symbolic operators.

mod film;
mod one_dim;
pub mod optim;

pub use film::{
    check_film_orthogonality, relax_film, FilmMesh, FilmRelaxation, FilmSettings, OrthoReport,
    Wall,
};
pub use one_dim::{
    check_residuals_1d, discretize_action, first_variation, minimize_1d, DiscreteSolution1D,
    Initial1D, Objective1D, Problem1D, Profile1D, Residual1DReport, SolverSettings,
};

use crate::jet::{EvalError, JetError};
use crate::variational::VariationalError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("grid must have at least 8 cells, got {0}")]
    TooFewCells(usize),
    #[error("degenerate interval: endpoint abscissas t0={t0}, t1={t1}")]
    DegenerateInterval { t0: f64, t1: f64 },
    #[error("initial graph is tangent to boundary curve {0}")]
    TangentAtEndpoint(usize),
    #[error("1D minimization did not converge: FD gradient norm {:.3e} after {} iterations",
            solution.grad_norm_fd, solution.iterations)]
    NonConvergence1D { solution: Box<DiscreteSolution1D> },
    #[error("film relaxation did not converge within {iterations} iterations (last relative decrease {last_rel_decrease:.3e})")]
    FilmNonConvergence { iterations: usize, last_rel_decrease: f64 },
    #[error("mesh degenerated at iteration {iteration}: step rejected repeatedly")]
    MeshDegenerate { iteration: usize },
    #[error("wall projection failed: no radius solves phi = 0 at theta={theta:.3}, y={y:.3}")]
    WallProjectionFailed { theta: f64, y: f64 },
    #[error("{0}")]
    BadProblem(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
}
