//! Usability issue prediction for a single app view, and the evaluation methodology used
//! to judge such predictions against human assessments.
//!
//! The prediction side assembles a prompt from an app context, the view's source and a
//! screenshot ([`prompt`], [`image_prep`]), sends it to a multimodal chat model
//! ([`gateway`]) and parses the enumerated answer ([`parser`]). [`pipeline`] wires these
//! together. The evaluation side ([`evaluation`]) computes confusion counts, precision,
//! recall, Cohen's kappa and cross-method overlap; [`reporting`] loads data files and
//! renders reports.

pub mod evaluation;
pub mod gateway;
pub mod image_prep;
pub mod model;
pub mod parser;
pub mod pipeline;
pub mod prompt;
pub mod reporting;

pub use model::*;
