//! Local linear convexity over finite-dimensional commutative unital real
//! algebras.
//!
//! An algebra is given by structure constants in a basis whose first element
//! is the identity. Domains in `A^n` are described by a real defining
//! function; the checker tests the second-order condition on the tangent
//! algebra hyperplane at sampled boundary points, and the oracle probes the
//! same hyperplane geometrically.

pub mod algebra;
pub mod checker;
pub mod domain;
pub mod gamma;
pub mod hyperplane;
mod linalg;
pub mod oracle;

pub use algebra::{builtin_algebra, validate_algebra, Algebra, AlgebraElement, AlgebraError, AlgebraSpec, StructureTensor};
pub use checker::{check_domain, classify_point, CheckerConfig, ConvexityReport, PointClassification, PointKind, Verdict};
pub use domain::{BoundaryPoint, BuiltinDomain, DefiningFunction, DomainError, DomainSpec, FnDomain, Polynomial};
pub use gamma::{GammaError, GammaFrame, GammaSpec};
pub use hyperplane::{tangent_frame, AHyperplane, HyperplaneError, TangentFrame};
pub use linalg::RANK_TOL;
pub use oracle::{cross_validate, geometric_probe, Agreement, OracleConfig, OracleError, ProbeResult};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error(transparent)]
    Hyperplane(#[from] HyperplaneError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
