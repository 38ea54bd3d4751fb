//! Front end for `socert`: the analysis pipeline, canonical reports, the
//! example gallery, surface dumps and derivative checks.

pub mod canonical;
pub mod derivatives;
pub mod gallery;
pub mod pipeline;
pub mod surface;

use socert_core::expr::ExprError;
use socert_core::linalg::LinalgError;
use socert_core::model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
