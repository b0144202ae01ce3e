//! Command line and local HTTP front ends for the privacy pipeline.
//!
//! Private text, substitution histories and decoded translations stay in
//! this process. The only thing that ever reaches an engine is the public
//! text of a session, sent by [`Service::send`].

pub mod cli;
pub mod config;
mod error;
pub mod http;
pub mod session;

pub use config::ServiceConfig;
pub use error::ServiceError;
pub use session::{Service, SessionState};
