//! Error and warning types shared by every module.

use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("unknown contact resistivity unit `{0}` (expected `ohm_m2` or `ohm_cm2`)")]
    UnknownUnit(String),

    /// The closed form relies on `R_shs ≫ R_shm` and cannot be evaluated otherwise.
    #[error("closed form requires r_shs > r_shm (got r_shs = {r_shs}, r_shm = {r_shm})")]
    SheetOrdering { r_shs: f64, r_shm: f64 },

    #[error("extraction invalid: {0}")]
    ExtractionInvalid(String),

    #[error("line fit invalid: {0}")]
    FitInvalid(String),

    #[error("invalid measurement series: {0}")]
    InvalidSeries(String),

    #[error("invalid region map: {0}")]
    InvalidRegionMap(String),

    /// No conducting path joins the two terminals, or the nodal system is singular.
    #[error("unsolvable network topology: {0}")]
    UnsolvableTopology(String),

    #[error("negative radicand {0} in the printed error-propagation form")]
    NegativeRadicand(f64),

    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
}

/// Which closed-form approximation a guard protects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guard {
    /// `L_0 / 2 ≫ L_t`, needed by the de-embed resistance.
    HalfGapOverTransferLength,
    /// `L_c ≫ L_t`, needed to drop the sinh tail of the contact-region profile.
    ContactOverTransferLength,
    /// `R_shs ≫ R_shm`.
    SheetRatio,
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Guard::HalfGapOverTransferLength => "l_0/(2 l_t)",
            Guard::ContactOverTransferLength => "l_c/l_t",
            Guard::SheetRatio => "r_shs/r_shm",
        })
    }
}

/// Non-fatal diagnostics attached to results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    ApproximationInvalid {
        guard: Guard,
        ratio: f64,
        threshold: f64,
    },
    CoarseGrid {
        dx: f64,
        transfer_length: f64,
    },
    NonMonotoneConvergence {
        coarse_delta: f64,
        fine_delta: f64,
    },
    UnexpectedSlopeSign {
        slope: f64,
    },
    BelowResolution {
        value_at_reference: f64,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ApproximationInvalid {
                guard,
                ratio,
                threshold,
            } => write!(
                f,
                "approximation outside validity range: {guard} = {ratio:.4} < {threshold}"
            ),
            Warning::CoarseGrid { dx, transfer_length } => write!(
                f,
                "coarse grid: dx = {dx:.4e} m exceeds l_t/5 = {:.4e} m",
                transfer_length / 5.0
            ),
            Warning::NonMonotoneConvergence {
                coarse_delta,
                fine_delta,
            } => write!(
                f,
                "non-monotone grid convergence (coarse delta {coarse_delta:.4e}, fine delta {fine_delta:.4e}); using finest solve"
            ),
            Warning::UnexpectedSlopeSign { slope } => {
                write!(f, "fitted slope {slope:.6e} has the unexpected sign")
            }
            Warning::BelowResolution { value_at_reference } => write!(
                f,
                "fitted value at reference {value_at_reference:.6e} ohm is negative: rho_c below structure resolution"
            ),
        }
    }
}

/// A closed-form value together with the guard warnings raised while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Approx<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Approx<T> {
    pub fn exact(value: T) -> Self {
        Self {
            value,
            warnings: Vec::new(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Approx<U> {
        Approx {
            value: f(self.value),
            warnings: self.warnings,
        }
    }
}
