use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A perimetric component is negative beyond roundoff, i.e. the three
    /// distances do not form a triangle.
    #[error("distances ({r12}, {r13}, {r23}) violate the triangle inequality")]
    OutsideDomain { r12: f64, r13: f64, r23: f64 },

    #[error("mesh with {points_per_axis} points per axis exceeds the supported envelope (max {max})")]
    Envelope { points_per_axis: usize, max: usize },

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {worst_residual:.3e})")]
    NotConverged {
        iterations: usize,
        worst_residual: f64,
        /// Ritz values and residual norms at the last iteration.
        best_values: Vec<f64>,
        best_residuals: Vec<f64>,
    },

    #[error("no interior minimum in bracket [{lo}, {hi}]")]
    NoMinimum { lo: f64, hi: f64 },

    #[error("trial function not resolved by the mesh (norm fraction on the outer shell {loss:.3e})")]
    Unresolved { loss: f64 },
}
