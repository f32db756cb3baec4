//! Numerical lab for traveling-wave stability in weighted norms.
pub mod decay;
pub mod grid;
pub mod kfunctional;
pub mod nonlinear;
pub mod profiles;
pub mod semigroups;
pub mod spectral;
pub mod trajectory;

use thiserror::Error;

/// Any error raised by the library, tagged by the module that produced it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(#[from] grid::GridError),
    #[error("profile: {0}")]
    Profile(#[from] profiles::ProfileError),
    #[error("k-functional: {0}")]
    KFunctional(#[from] kfunctional::KError),
    #[error("linear semigroup: {0}")]
    Linear(#[from] semigroups::LinearError),
    #[error("nonlinear solver: {0}")]
    Nonlinear(#[from] nonlinear::NonlinearError),
    #[error("decay analysis: {0}")]
    Decay(#[from] decay::DecayError),
}
