//! CLI and HTTP front ends for the `routerisk` engine.
//!
//! Both front ends score through [`api::rank`], so identical inputs give
//! bit-identical totals whichever way they arrive.

pub mod api;
pub mod cli;
pub mod http;
