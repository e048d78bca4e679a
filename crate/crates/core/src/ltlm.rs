//! Closed forms for the de-embedded ladder structure.
//!
//! The two coupled rails (metal over semiconductor) obey
//! `I_m'' = ((r_shs + r_shm)·I_m − r_shs·I_0)/rho_c`, so every current profile
//! is an exponential relaxation over the transfer length `l_t` towards the
//! parallel split `r_shs/(r_shs + r_shm)`. The resistances below integrate
//! those profiles for three configurations:
//!
//! * the full-metal de-embed structure (metal continuous over `2·l_c + l_0`),
//! * the partitioned structure (metal cut at `l_c` and `l_c + l_0`), which is
//!   the test structure at `l_g = l_0`,
//! * the swept test structure, affine in the ladder length `l_g`.

use crate::error::{Approx, Error, Result};
use crate::params::{transfer_length, with_warnings, GuardThresholds, LtlmGeometry, SheetStack};

/// Conduction rail of the two-layer stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rail {
    Metal,
    Semiconductor,
}

impl Rail {
    pub fn other(self) -> Rail {
        match self {
            Rail::Metal => Rail::Semiconductor,
            Rail::Semiconductor => Rail::Metal,
        }
    }
}

/// Sampled current fraction `I(x)/I_0` carried by one rail.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentProfile {
    pub rail: Rail,
    /// Sample positions in meters, strictly increasing.
    pub x: Vec<f64>,
    pub fraction: Vec<f64>,
}

impl CurrentProfile {
    pub fn from_fn(rail: Rail, xs: &[f64], f: impl Fn(f64) -> f64) -> Self {
        Self {
            rail,
            x: xs.to_vec(),
            fraction: xs.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Linear interpolation, clamped to the sampled range.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.x.len();
        if n == 0 {
            return f64::NAN;
        }
        if x <= self.x[0] {
            return self.fraction[0];
        }
        if x >= self.x[n - 1] {
            return self.fraction[n - 1];
        }
        let hi = self.x.partition_point(|&s| s <= x);
        let lo = hi - 1;
        let t = (x - self.x[lo]) / (self.x[hi] - self.x[lo]);
        self.fraction[lo] + t * (self.fraction[hi] - self.fraction[lo])
    }

    /// Profile of the complementary rail under conservation.
    pub fn complement(&self) -> Self {
        Self {
            rail: self.rail.other(),
            x: self.x.clone(),
            fraction: self.fraction.iter().map(|f| 1.0 - f).collect(),
        }
    }
}

/// `W·(r_shs + r_shm)`, the denominator shared by every closed form here.
fn w_sum(stack: &SheetStack) -> f64 {
    stack.width() * stack.sheet_sum()
}

/// Metal-rail fraction `I_m(x)/I_0` near a full-metal injection edge:
/// `r_shs/(r_shs+r_shm) + r_shm/(r_shs+r_shm)·exp(−x/l_t)`.
///
/// For `rho_c = 0` this is the limiting step (1 at `x = 0`, the parallel split beyond).
pub fn im_profile(stack: &SheetStack, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "must be >= 0",
        });
    }
    let sum = stack.sheet_sum();
    let lt = transfer_length(stack).meters();
    let decay = if lt > 0.0 {
        (-x / lt).exp()
    } else if x == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(stack.r_shs() / sum + stack.r_shm() / sum * decay)
}

/// Semiconductor-rail fraction `I_s(x)/I_0` in an outer contact region of
/// length `l_c`, current entering in metal at `x = 0` and leaving entirely in
/// the semiconductor at `x = l_c`.
pub fn is_profile_left_part(
    stack: &SheetStack,
    l_c: f64,
    x: f64,
    guards: &GuardThresholds,
) -> Result<Approx<f64>> {
    if !(x >= 0.0 && x <= l_c) {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "must lie in [0, l_c]",
        });
    }
    let mut warnings = Vec::new();
    guards.check_sheet_ratio(stack.r_shs(), stack.r_shm(), &mut warnings);
    let sum = stack.sheet_sum();
    let split = stack.r_shm() / sum;
    let lt = transfer_length(stack).meters();
    let value = if lt > 0.0 {
        // exp(−l_c/l_t)·sinh(x/l_t), written without overflow
        let tail = 0.5 * (((x - l_c) / lt).exp() - (-(x + l_c) / lt).exp());
        split - split * (-x / lt).exp() + 2.0 * stack.r_shs() / sum * tail
    } else if x == 0.0 {
        0.0
    } else if x == l_c {
        1.0
    } else {
        split
    };
    Ok(with_warnings(value, warnings))
}

/// Resistance of the full-metal de-embed structure (metal over `2·l_c + l_0`):
/// `r_shs·r_shm·(2·l_c + l_0)/(W·Σ) + 2·r_shm²·l_t/(W·Σ)`.
pub fn r_no_spacer_ltlm(
    stack: &SheetStack,
    l_c: f64,
    l_0: f64,
    guards: &GuardThresholds,
) -> Approx<f64> {
    let mut warnings = Vec::new();
    guards.check_half_gap(stack, l_0, &mut warnings);
    let lt = transfer_length(stack).meters();
    let d = w_sum(stack);
    let (rs, rm) = (stack.r_shs(), stack.r_shm());
    with_warnings(
        rs * rm * (2.0 * l_c + l_0) / d + 2.0 * rm * rm * lt / d,
        warnings,
    )
}

/// Access plus contact resistance of one outer contact region, taken as the
/// semiconductor-rail drop across it:
/// `r_shs·r_shm·l_c/(W·Σ) + (r_shs² − r_shs·r_shm)·l_t/(W·Σ)`.
pub fn r_access_plus_contact(stack: &SheetStack, l_c: f64, guards: &GuardThresholds) -> Approx<f64> {
    let mut warnings = Vec::new();
    guards.check_contact(stack, l_c, &mut warnings);
    let lt = transfer_length(stack).meters();
    let d = w_sum(stack);
    let (rs, rm) = (stack.r_shs(), stack.r_shm());
    with_warnings(rs * rm * l_c / d + (rs * rs - rs * rm) * lt / d, warnings)
}

/// Total resistance of the partitioned structure (metal cut at `l_c` and `l_c + l_0`):
/// `2·r_shs·r_shm·l_c/(W·Σ) + r_shs·r_shm·l_0/(W·Σ) + (4·r_shs² − 2·r_shs·r_shm)·l_t/(W·Σ)`.
pub fn r_total_partitioned(
    stack: &SheetStack,
    l_c: f64,
    l_0: f64,
    guards: &GuardThresholds,
) -> Approx<f64> {
    let mut warnings = Vec::new();
    guards.check_half_gap(stack, l_0, &mut warnings);
    guards.check_contact(stack, l_c, &mut warnings);
    let lt = transfer_length(stack).meters();
    let d = w_sum(stack);
    let (rs, rm) = (stack.r_shs(), stack.r_shm());
    with_warnings(
        2.0 * rs * rm * l_c / d + rs * rm * l_0 / d + (4.0 * rs * rs - 2.0 * rs * rm) * lt / d,
        warnings,
    )
}

/// Slope of the total resistance in the ladder length, `−r_shs²/(W·Σ)` (ohm/m).
pub fn slope_ltlm(stack: &SheetStack) -> f64 {
    -stack.r_shs() * stack.r_shs() / w_sum(stack)
}

/// Legacy single-contact term `r_shs²·l_t/(W·Σ)` of the undeembedded ladder
/// decomposition. Not used by the de-embedded pipeline.
pub fn r_c_ltlm(stack: &SheetStack) -> f64 {
    stack.r_shs() * stack.r_shs() * transfer_length(stack).meters() / w_sum(stack)
}

/// Total resistance of the swept test structure:
/// `S·l_g + r_shs·l_0/W + 2·r_shs·r_shm·l_c/(W·Σ) + (4·r_shs² − 2·r_shs·r_shm)·l_t/(W·Σ)`.
///
/// At `l_g = l_0` this coincides with [`r_total_partitioned`].
pub fn rt_ltlm(
    stack: &SheetStack,
    geom: &LtlmGeometry,
    slope_s: f64,
    guards: &GuardThresholds,
) -> Approx<f64> {
    let mut warnings = Vec::new();
    guards.check_contact(stack, geom.l_c(), &mut warnings);
    guards.check_sheet_ratio(stack.r_shs(), stack.r_shm(), &mut warnings);
    let lt = transfer_length(stack).meters();
    let d = w_sum(stack);
    let (rs, rm) = (stack.r_shs(), stack.r_shm());
    let value = slope_s * geom.l_g()
        + rs * geom.l_0() / stack.width()
        + 2.0 * rs * rm * geom.l_c() / d
        + (4.0 * rs * rs - 2.0 * rs * rm) * lt / d;
    with_warnings(value, warnings)
}

/// Value of the de-embedded line at `l_g = l_0`:
/// `(4·r_shs² − 2·r_shs·r_shm − 2·r_shm²)·l_t/(W·Σ)`.
pub fn value_at_l0_ltlm(stack: &SheetStack) -> f64 {
    let (rs, rm) = (stack.r_shs(), stack.r_shm());
    (4.0 * rs * rs - 2.0 * rs * rm - 2.0 * rm * rm) * transfer_length(stack).meters() / w_sum(stack)
}

/// De-embedded resistance `S·(l_g − l_0) + R(l_0)`.
pub fn r_hrtlm_ltlm(stack: &SheetStack, l_g: f64, l_0: f64, guards: &GuardThresholds) -> Approx<f64> {
    let mut warnings = Vec::new();
    guards.check_half_gap(stack, l_0, &mut warnings);
    guards.check_sheet_ratio(stack.r_shs(), stack.r_shm(), &mut warnings);
    with_warnings(slope_ltlm(stack) * (l_g - l_0) + value_at_l0_ltlm(stack), warnings)
}

/// Inverts slope and value at `l_0` for `rho_c` (ohm·m²):
/// `(R(l_0)/(2·S))²·Σ·(r_shs²/(2·r_shs² − r_shm² − r_shs·r_shm))²`.
pub fn rho_c_from_fit_ltlm(slope_s: f64, value_at_l0: f64, r_shs: f64, r_shm: f64) -> Result<f64> {
    if slope_s == 0.0 || !slope_s.is_finite() {
        return Err(Error::ExtractionInvalid(format!(
            "ladder slope must be finite and non-zero, got {slope_s:e} ohm/m"
        )));
    }
    let denom = 2.0 * r_shs * r_shs - r_shm * r_shm - r_shs * r_shm;
    if !(denom > 0.0) {
        return Err(Error::SheetOrdering { r_shs, r_shm });
    }
    let root = value_at_l0 / (2.0 * slope_s);
    let shape = r_shs * r_shs / denom;
    Ok(root * root * (r_shs + r_shm) * shape * shape)
}
