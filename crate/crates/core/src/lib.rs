pub mod auerbach;
pub mod checks;
pub mod error;
pub mod frames;
pub mod linalg;
pub mod operators;
pub mod seqspace;
pub mod spaces;
pub mod subspace;

pub use auerbach::{auerbach_basis, auerbach_basis_with, AuerbachBasis, AuerbachOptions};
pub use checks::BoundCheck;
pub use error::{Error, Result};
pub use frames::{FramePair, OFrame};
pub use operators::{op_norm, EstimatorConfig, MatOperator, NormResult, RankOneOperator};
pub use seqspace::{Mode, SeqNorm};
pub use spaces::{Exponent, Functional, SpaceSpec, Vector};
pub use subspace::SubspaceBall;
