//! PAC-Bayes generalization-risk certificates.
//!
//! The crate evaluates posterior-averaged risk bounds for bounded losses
//! (McAllester, Seeger-Langford, Catoni, fast-rate and mixed-rate families,
//! Thiemann, Rivasplata), for losses with general tail behaviors described
//! by a cumulant-generating-function envelope (Chernoff-style bounds with
//! configurable cut-offs, second-moment and martingale variants), and
//! anytime-valid versions of all of them via confidence-budget schedules.
//! A lab module provides exactly solvable discrete problems for Monte-Carlo
//! coverage experiments, and every evaluator reports its optimized
//! parameters inside a [`Certificate`].

pub mod anytime;
pub mod bounded;
pub mod error;
pub mod general;
pub mod lab;
pub mod specfun;
pub mod tails;

pub use anytime::BetaSchedule;
pub use bounded::{BoundContext, BoundId, Certificate, ConfidenceConstant};
pub use error::{Error, Result};
pub use general::EssSupInfo;
pub use lab::{CoverageReport, DiscreteProblem, PosteriorRule};
pub use specfun::{NatsValue, Probability};
pub use tails::{CgfTable, TailFamily};
