//! Blinded side-by-side assessment of two answer runs.
//!
//! A session pairs the top-`k` answers of two conditions per question and
//! assigns condition A to the left or right column by a seeded coin flip.
//! Judges only ever see "left" and "right"; results are unblinded through
//! the stored side map. All state changes go through an append-only JSONL
//! journal that is synced before a request is acknowledged and replayed on
//! startup.

pub mod error;
pub mod http;
pub mod results;
pub mod service;
pub mod types;

pub use error::{Error, Result};
pub use service::{AssessService, NewSession};
pub use types::{Outcome, Side, Verdict};
