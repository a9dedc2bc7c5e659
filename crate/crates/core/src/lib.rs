//! Private information retrieval from linearly coded distributed storage.
//!
//! The crate covers finite-field arithmetic, code analytics, rate-matrix
//! search, exact rate formulas, a simulated storage system, and end-to-end
//! retrieval protocols with recovery and privacy audits.

pub mod code;
pub mod dss;
pub mod field;
pub mod fixtures;
pub mod lambda;
pub mod linalg;
pub mod protocols;
pub mod rates;
