//! Brute-force dense reference computations for tests.
//!
//! Nothing here shares code with `fjnet`: networks are plain slot lists and
//! every answer is obtained with dense factorizations, so agreement with the
//! sparse library is evidence rather than tautology.

pub mod fj;
pub mod qp;
