//! Spillover-free eigenvalue embedding for structured symmetric pencils
//! `λM + K` with `M = diag(M_u, 0)`.
//!
//! A handful of finite eigenvalues of the pencil are replaced by prescribed
//! ones while every other eigenpair, including the infinite ones, is kept
//! exactly, and the updated mass matrix keeps its `diag(M̃_u, 0)` form.
//!
//! Pipeline: [`pencil::solve_spectrum`] → [`spectral::select_eigendata`] →
//! [`embedding::embed`] (optionally [`objective::optimize_gamma_tilde`]) →
//! [`objective::residual_report`].

// `!(x >= t)` is used on purpose so NaN fails every threshold check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod embedding;
pub mod error;
pub mod io;
pub mod linalg;
pub mod objective;
pub mod pencil;
pub mod probgen;
pub mod spectral;

pub use config::Tolerances;
pub use embedding::{
    compute_gamma1, default_gamma_tilde, embed, embed_direct, embed_smw, Method, MethodChoice,
    ParamMode, ParameterSet, UpdatedSystem,
};
pub use error::{Error, Result};
pub use objective::{optimize_gamma_tilde, residual_report, OptimizerConfig, ResidualReport};
pub use pencil::{solve_spectrum, SpectrumResult, StructuredPencil};
pub use probgen::{generate_scenario, ProblemSpec, Scenario};
pub use spectral::{EigBlock, EigenPair, RealSpectralData, SpectralBlocks};
