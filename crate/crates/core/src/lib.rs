//! Exact evaluation, transformation and verification of generalized
//! continued fractions.

pub mod cli;
pub mod decimal;
pub mod engine;
pub mod expr;
pub mod fixtures;
pub mod formula_file;
pub mod recognize;
pub mod seqid;
pub mod transform;
pub mod verify;
