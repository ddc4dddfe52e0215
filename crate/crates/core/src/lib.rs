//! Mining C repository histories for who changes `#ifdef`-guarded code,
//! and how well authorship metrics predict it.

pub mod cache;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod expertise;
pub mod history;
pub mod ledger;
pub mod month;
pub mod par;
pub mod pipeline;
pub mod report;
pub mod text;
pub mod timeline;
pub mod variability;
pub mod warnings;

pub use config::{OutputFormat, RunConfig};
pub use error::{Error, Result};
