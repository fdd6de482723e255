//! Augmented principal component analysis.
//!
//! Supervised and adversarial variants of PCA that add (or subtract) a
//! reconstruction objective on augmenting data `Y` to the usual objective on
//! primary data `X`. Scores are inferred either locally from both blocks or
//! through a linear encoder of `X` alone.

pub mod apca;
pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod randomized;

pub use apca::{Flavor, Inference, Loadings};
pub use data::{Dataset, Standardizer};
pub use error::{ApcaError, ModelFileError, Result};
pub use eval::{EvalReport, LogRegModel};
pub use linalg::Matrix;
pub use model::{fit, load, save, ApcaConfig, ApcaModel, Decomp, Warnings};
