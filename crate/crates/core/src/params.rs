//! Material stack, test-structure geometry and the elementary quantities
//! derived from them.
//!
//! Everything inside the crate is strict SI: lengths in meters, resistances in
//! ohms, sheet resistances in ohm/square and contact resistivity in ohm·m².
//! Lab units (µm, ohm·cm²) are only accepted through the explicit conversion
//! helpers here.

use std::fmt;
use std::str::FromStr;

use crate::error::{Approx, Error, Guard, Result, Warning};

/// Meters per micrometer.
pub const UM: f64 = 1e-6;

/// ohm·cm² per ohm·m².
const CM2_PER_M2: f64 = 1e4;

/// Sheet resistances, contact resistivity and width of a test section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetStack {
    r_shs: f64,
    r_shm: f64,
    rho_c: f64,
    width: f64,
}

impl SheetStack {
    /// `rho_c` is in ohm·m² and `width` in meters. An infinite `rho_c`
    /// (fully decoupled rails) is accepted for the network oracle.
    pub fn new(r_shs: f64, r_shm: f64, rho_c: f64, width: f64) -> Result<Self> {
        positive("r_shs", r_shs)?;
        positive("r_shm", r_shm)?;
        positive("width", width)?;
        if rho_c.is_nan() || rho_c < 0.0 {
            return Err(Error::InvalidParameter {
                name: "rho_c",
                value: rho_c,
                reason: "must be >= 0",
            });
        }
        Ok(Self {
            r_shs,
            r_shm,
            rho_c,
            width,
        })
    }

    /// Builds a stack from lab units: `rho_c` in ohm·cm², `width` in µm.
    pub fn from_lab_units(r_shs: f64, r_shm: f64, rho_c_cm2: f64, width_um: f64) -> Result<Self> {
        Self::new(
            r_shs,
            r_shm,
            convert_rho_c(rho_c_cm2, RhoUnit::OhmCm2, RhoUnit::OhmM2),
            width_um * UM,
        )
    }

    pub fn r_shs(&self) -> f64 {
        self.r_shs
    }

    pub fn r_shm(&self) -> f64 {
        self.r_shm
    }

    /// Contact resistivity in ohm·m².
    pub fn rho_c(&self) -> f64 {
        self.rho_c
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn with_rho_c(&self, rho_c: f64) -> Result<Self> {
        Self::new(self.r_shs, self.r_shm, rho_c, self.width)
    }

    pub fn with_width(&self, width: f64) -> Result<Self> {
        Self::new(self.r_shs, self.r_shm, self.rho_c, width)
    }

    pub fn with_sheets(&self, r_shs: f64, r_shm: f64) -> Result<Self> {
        Self::new(r_shs, r_shm, self.rho_c, self.width)
    }

    /// `r_shs + r_shm`.
    pub fn sheet_sum(&self) -> f64 {
        self.r_shs + self.r_shm
    }

    /// Sheet resistance of the two layers in parallel, `r_shs·r_shm/(r_shs+r_shm)`.
    pub fn parallel_sheet(&self) -> f64 {
        self.r_shs * self.r_shm / self.sheet_sum()
    }

    /// Whether the closed forms' `r_shs > r_shm` ordering holds.
    pub fn is_ordered(&self) -> bool {
        self.r_shs > self.r_shm
    }

    pub(crate) fn require_ordered(&self) -> Result<()> {
        if self.is_ordered() {
            Ok(())
        } else {
            Err(Error::SheetOrdering {
                r_shs: self.r_shs,
                r_shm: self.r_shm,
            })
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

/// RTLM-flavor geometry: two metal contacts of length `l_c` separated by a
/// semiconductor spacer `l_s`, with `l_0 = l_s + 2·l_c` held constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtlmGeometry {
    l_s: f64,
    l_c: f64,
    l_0: f64,
}

impl RtlmGeometry {
    pub fn from_spacer(l_s: f64, l_0: f64) -> Result<Self> {
        non_negative("l_s", l_s)?;
        non_negative("l_0", l_0)?;
        let l_c = (l_0 - l_s) / 2.0;
        non_negative("l_c", l_c)?;
        Ok(Self { l_s, l_c, l_0 })
    }

    pub fn from_contact(l_c: f64, l_s: f64) -> Result<Self> {
        non_negative("l_c", l_c)?;
        non_negative("l_s", l_s)?;
        Ok(Self {
            l_s,
            l_c,
            l_0: l_s + 2.0 * l_c,
        })
    }

    pub fn l_s(&self) -> f64 {
        self.l_s
    }

    pub fn l_c(&self) -> f64 {
        self.l_c
    }

    pub fn l_0(&self) -> f64 {
        self.l_0
    }
}

/// Ladder-flavor geometry. The swept ladder region `l_g` sits between two
/// semiconductor spacers `l_s` with `l_0 = 2·l_s + l_g` held constant. The
/// outer metal contact regions have a fixed length `l_c` on each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtlmGeometry {
    l_g: f64,
    l_s: f64,
    l_0: f64,
    l_c: f64,
}

impl LtlmGeometry {
    pub fn from_ladder(l_c: f64, l_g: f64, l_0: f64) -> Result<Self> {
        non_negative("l_c", l_c)?;
        non_negative("l_g", l_g)?;
        non_negative("l_0", l_0)?;
        let l_s = (l_0 - l_g) / 2.0;
        // tolerate rounding when l_g == l_0 was computed
        let l_s = if l_s < 0.0 && l_s > -1e-12 * l_0 { 0.0 } else { l_s };
        non_negative("l_s", l_s)?;
        Ok(Self { l_g, l_s, l_0, l_c })
    }

    pub fn from_spacer(l_c: f64, l_s: f64, l_g: f64) -> Result<Self> {
        non_negative("l_c", l_c)?;
        non_negative("l_s", l_s)?;
        non_negative("l_g", l_g)?;
        Ok(Self {
            l_g,
            l_s,
            l_0: 2.0 * l_s + l_g,
            l_c,
        })
    }

    pub fn l_g(&self) -> f64 {
        self.l_g
    }

    pub fn l_s(&self) -> f64 {
        self.l_s
    }

    pub fn l_0(&self) -> f64 {
        self.l_0
    }

    pub fn l_c(&self) -> f64 {
        self.l_c
    }
}

/// Characteristic current-transfer length `sqrt(rho_c / (r_shs + r_shm))`, meters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TransferLength(f64);

impl TransferLength {
    pub fn meters(self) -> f64 {
        self.0
    }
}

impl fmt::Display for TransferLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} m", self.0)
    }
}

pub fn transfer_length(stack: &SheetStack) -> TransferLength {
    TransferLength((stack.rho_c / stack.sheet_sum()).sqrt())
}

/// Single-contact resistance as the semiconductor resistance over one
/// transfer length, `r_shs·l_t/W`.
pub fn contact_resistance_rtlm(stack: &SheetStack) -> f64 {
    stack.r_shs * transfer_length(stack).meters() / stack.width
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoUnit {
    OhmM2,
    OhmCm2,
}

impl FromStr for RhoUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ohm_m2" | "ohm*m^2" | "Ω·m²" | "ohm.m2" => Ok(RhoUnit::OhmM2),
            "ohm_cm2" | "ohm*cm^2" | "Ω·cm²" | "ohm.cm2" => Ok(RhoUnit::OhmCm2),
            other => Err(Error::UnknownUnit(other.to_string())),
        }
    }
}

pub fn convert_rho_c(value: f64, from: RhoUnit, to: RhoUnit) -> f64 {
    match (from, to) {
        (RhoUnit::OhmM2, RhoUnit::OhmCm2) => value * CM2_PER_M2,
        (RhoUnit::OhmCm2, RhoUnit::OhmM2) => value / CM2_PER_M2,
        _ => value,
    }
}

/// String-unit variant of [`convert_rho_c`] for I/O boundaries.
pub fn convert_rho_c_str(value: f64, from: &str, to: &str) -> Result<f64> {
    Ok(convert_rho_c(value, from.parse()?, to.parse()?))
}

/// Thresholds below which the closed forms raise approximation warnings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardThresholds {
    /// Minimum `l_0 / (2·l_t)`.
    pub half_gap: f64,
    /// Minimum `l_c / l_t`.
    pub contact: f64,
    /// Minimum `r_shs / r_shm`.
    pub sheet_ratio: f64,
}

impl Default for GuardThresholds {
    fn default() -> Self {
        Self {
            half_gap: 10.0,
            contact: 5.0,
            sheet_ratio: 5.0,
        }
    }
}

impl GuardThresholds {
    pub(crate) fn check_half_gap(&self, stack: &SheetStack, l_0: f64, out: &mut Vec<Warning>) {
        let lt = transfer_length(stack).meters();
        if lt > 0.0 {
            ratio_guard(Guard::HalfGapOverTransferLength, l_0 / (2.0 * lt), self.half_gap, out);
        }
    }

    pub(crate) fn check_contact(&self, stack: &SheetStack, l_c: f64, out: &mut Vec<Warning>) {
        let lt = transfer_length(stack).meters();
        if lt > 0.0 {
            ratio_guard(Guard::ContactOverTransferLength, l_c / lt, self.contact, out);
        }
    }

    pub(crate) fn check_sheet_ratio(&self, r_shs: f64, r_shm: f64, out: &mut Vec<Warning>) {
        ratio_guard(Guard::SheetRatio, r_shs / r_shm, self.sheet_ratio, out);
    }
}

fn ratio_guard(guard: Guard, ratio: f64, threshold: f64, out: &mut Vec<Warning>) {
    if ratio < threshold {
        out.push(Warning::ApproximationInvalid {
            guard,
            ratio,
            threshold,
        });
    }
}

pub(crate) fn with_warnings<T>(value: T, warnings: Vec<Warning>) -> Approx<T> {
    Approx { value, warnings }
}
