//! Double-auction markets with unit-supply sellers and unit-demand buyers:
//! value distributions, trade-reduction and posted-price mechanisms, and exact
//! and Monte Carlo gains-from-trade engines.

pub mod dist;
pub mod error;
pub mod eval;
pub mod market;
pub mod scalar;

pub use dist::{check_fsd, fsd_report, product_support, Distribution, FsdReport, Piece};
pub use error::{Error, Result};
pub use scalar::{format_rational, parse_rational, Rational, Scalar};
