//! Reproducible Brownian increments and the Girsanov cost ledger.

mod ledger;
mod stream;

pub use ledger::{ledger_kl_bound, ledger_m_delta, GirsanovLedger, LedgerSnapshot};
pub use stream::NoiseStream;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
}
