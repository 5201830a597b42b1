//! Service layer over `suif-core`: session workflows, background jobs, the
//! REST API and the `suif` command line.

pub mod api;
pub mod cli;
pub mod config;
pub mod jobs;
pub mod ops;

pub use config::ServiceConfig;
pub use ops::Engine;
