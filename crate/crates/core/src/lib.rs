//! Co-design sizing of charging energy hubs.
//!
//! The crate builds a mixed-integer linear program that chooses how many PV
//! units, wind turbines, battery units and chargers to install, and schedules
//! every charging session of a set of representative days, minimizing the
//! annualized total cost of ownership under grid-connection limits.
//!
//! Pipeline: [`ingest`] loads and validates inputs, [`model`] assembles the
//! MILP, [`solve`] hands it to a backend (HiGHS by default, or the exhaustive
//! reference solver for small instances), and [`report`] decodes, re-validates
//! and renders the result.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod ingest;
pub mod model;
pub mod report;
pub mod solve;
pub mod synthetic;
