//! Parametric set-valued fixed points on grids: solution and approximate
//! solution sets, numeric lower-semicontinuity certificates with hypothesis
//! audits, and the bilevel and quasi-equilibrium problems built on them.

pub mod certificate;
pub mod certifier;
pub mod checks;
pub mod expr;
pub mod fixpoint;
pub mod geometry;
pub mod mapping;
pub mod quasieq;
pub mod sequences;
pub mod stackelberg;

pub use certificate::{Certificate, HypothesisAudit, Verdict};
