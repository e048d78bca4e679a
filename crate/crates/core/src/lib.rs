//! Contact-resistivity extraction from de-embedded transmission-line test
//! structures.
//!
//! The crate has three layers:
//!
//! * closed forms for the RTLM ([`rtlm`]) and ladder ([`ltlm`]) structures;
//! * a brute-force resistor-ladder solver ([`oracle`]) that checks them;
//! * the measurement pipeline ([`extraction`]) with uncertainty analysis
//!   ([`error_model`]).
//!
//! Everything is SI internally: ohm/sq, ohm·m², meters.

pub mod error;
pub mod error_model;
pub mod extraction;
pub mod forward;
pub mod ltlm;
pub mod oracle;
pub mod params;
pub mod rtlm;

pub use error::{Approx, Error, Guard, Result, Warning};
pub use extraction::{extract, fit_line, ExtractionReport, FitResult, Flavor, MeasurementSeries};
pub use params::{
    convert_rho_c, transfer_length, GuardThresholds, LtlmGeometry, RhoUnit, RtlmGeometry, SheetStack,
    TransferLength, UM,
};
