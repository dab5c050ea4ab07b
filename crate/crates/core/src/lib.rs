//! Generic Kappa: rule-based models over agent hierarchies.
//!
//! The pipeline is `parse_model` → [`hierarchy::Hierarchy::from_ast`] →
//! [`compile::resolve_model`] → [`engine::simulate`].

pub mod diag;
pub mod graph;
pub mod compile;
pub mod engine;
pub mod hierarchy;
pub mod syntax;

pub use diag::{Diagnostic, Diagnostics, Severity, Span};
pub use syntax::{parse_model, unparse, ModelAst};
