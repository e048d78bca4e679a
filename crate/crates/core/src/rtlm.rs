//! Closed forms for the de-embedded RTLM structure: two metal contacts of
//! length `l_c` around a semiconductor spacer `l_s`, with the total length
//! `l_0 = l_s + 2·l_c` fixed across the sweep.
//!
//! The full-metal de-embed structure has no closed form
//! here. Its resistance comes from measurement data or from the network
//! oracle, and the subtraction happens at the data level in
//! [`crate::extraction::deembed`].

use crate::error::{Error, Result};
use crate::params::{contact_resistance_rtlm, RtlmGeometry, SheetStack};

/// Total resistance of the RTLM test section:
/// `2·r_shm·l_c/W + 2·R_C + r_shs·l_s/W`.
pub fn rt_rtlm(stack: &SheetStack, geom: &RtlmGeometry) -> f64 {
    let w = stack.width();
    2.0 * stack.r_shm() * geom.l_c() / w
        + 2.0 * contact_resistance_rtlm(stack)
        + stack.r_shs() * geom.l_s() / w
}

/// Slope `(r_shs − r_shm)/W` and intercept `2·R_C` of the de-embedded line.
pub fn hrtlm_line_rtlm(stack: &SheetStack) -> Result<(f64, f64)> {
    stack.require_ordered()?;
    Ok((
        (stack.r_shs() - stack.r_shm()) / stack.width(),
        2.0 * contact_resistance_rtlm(stack),
    ))
}

/// De-embedded resistance `(r_shs − r_shm)·l_s/W + 2·R_C`.
pub fn r_hrtlm_rtlm(stack: &SheetStack, l_s: f64) -> Result<f64> {
    let (slope, intercept) = hrtlm_line_rtlm(stack)?;
    Ok(slope * l_s + intercept)
}

/// Inverts the de-embedded line for `rho_c` (ohm·m²):
/// `(intercept·(r_shs − r_shm)/(2·slope))² · (r_shs + r_shm)/r_shs²`.
pub fn rho_c_from_fit_rtlm(slope: f64, intercept: f64, r_shs: f64, r_shm: f64) -> Result<f64> {
    if r_shs <= r_shm {
        return Err(Error::SheetOrdering { r_shs, r_shm });
    }
    if !(slope > 0.0) {
        return Err(Error::ExtractionInvalid(format!(
            "RTLM slope must be positive, got {slope:e} ohm/m"
        )));
    }
    if !(intercept >= 0.0) {
        return Err(Error::ExtractionInvalid(format!(
            "RTLM intercept must be non-negative, got {intercept:e} ohm"
        )));
    }
    let root = intercept * (r_shs - r_shm) / (2.0 * slope);
    Ok(root * root * (r_shs + r_shm) / (r_shs * r_shs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::UM;

    fn t1() -> SheetStack {
        SheetStack::from_lab_units(100.0, 10.0, 1.1e-9, 10.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn total_resistance_hand_value() {
        let g = RtlmGeometry::from_contact(5.0 * UM, 2.0 * UM).unwrap();
        assert!(rel(rt_rtlm(&t1(), &g), 30.6325) < 2e-6);
    }

    #[test]
    fn zero_spacer_zero_rho_is_pure_metal_arms() {
        let s = t1().with_rho_c(0.0).unwrap();
        let g = RtlmGeometry::from_contact(5.0 * UM, 0.0).unwrap();
        assert_eq!(rt_rtlm(&s, &g), 2.0 * 10.0 * 5.0 * UM / s.width());
    }

    #[test]
    fn deembedded_line_hand_values() {
        assert!(rel(r_hrtlm_rtlm(&t1(), 2.0 * UM).unwrap(), 18.6325) < 5e-6);
        assert!(rel(r_hrtlm_rtlm(&t1(), 0.0).unwrap(), 0.632456) < 1e-6);
        let s0 = t1().with_rho_c(0.0).unwrap();
        assert_eq!(r_hrtlm_rtlm(&s0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn deembedded_line_requires_ordering() {
        let inv = SheetStack::new(10.0, 100.0, 1e-13, 1e-5).unwrap();
        assert!(matches!(r_hrtlm_rtlm(&inv, 0.0), Err(Error::SheetOrdering { .. })));
    }

    #[test]
    fn affine_second_difference_vanishes() {
        let s = t1();
        let h = 1.5 * UM;
        let r: Vec<f64> = (0..3).map(|k| r_hrtlm_rtlm(&s, 1.0 * UM + k as f64 * h).unwrap()).collect();
        assert!((r[0] - 2.0 * r[1] + r[2]).abs() <= 1e-14 * r[2]);
    }

    #[test]
    fn inversion_hand_values() {
        let rho = rho_c_from_fit_rtlm(9e6, 0.632456, 100.0, 10.0).unwrap();
        assert!(rel(rho, 1.1e-13) < 2e-6, "{rho}");
        assert_eq!(rho_c_from_fit_rtlm(9e6, 0.0, 100.0, 10.0).unwrap(), 0.0);
        let doubled = rho_c_from_fit_rtlm(9e6, 2.0 * 0.632456, 100.0, 10.0).unwrap();
        assert!(rel(doubled, 4.0 * rho) < 1e-14);
    }

    #[test]
    fn inversion_rejects_bad_slope() {
        assert!(matches!(
            rho_c_from_fit_rtlm(0.0, 0.6, 100.0, 10.0),
            Err(Error::ExtractionInvalid(_))
        ));
        assert!(matches!(
            rho_c_from_fit_rtlm(-9e6, 0.6, 100.0, 10.0),
            Err(Error::ExtractionInvalid(_))
        ));
    }

    #[test]
    fn exact_round_trip() {
        let s = t1();
        let (slope, intercept) = hrtlm_line_rtlm(&s).unwrap();
        let rho = rho_c_from_fit_rtlm(slope, intercept, s.r_shs(), s.r_shm()).unwrap();
        assert!(rel(rho, s.rho_c()) < 1e-12);
    }
}
