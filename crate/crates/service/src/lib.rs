//! Registry, HTTP API and command line for arbiter decision applications.

pub mod api;
pub mod query;
pub mod registry;
pub mod source;
