//! Keyframe selection by maximum volume over frame embeddings.
//!
//! Given an `n x d` matrix of frame embeddings, a truncated SVD gives an
//! `n x s` row basis; rectangular MaxVol then greedily picks the rows that
//! span the largest volume. See [`pipeline::select`].

pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod maxvol;
pub mod metrics;
pub mod pipeline;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use linalg::{rect_vol, log_rect_vol, truncated_svd, EmbeddingMatrix, Matrix, SvdReduction};
pub use maxvol::{maxvol_square, rect_maxvol, MaxVolParams, SelectionState, StopReason};
pub use pipeline::{select, MaxInfoConfig, Mode, SelectionReport, TolConvention};
