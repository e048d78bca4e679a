use crate::error::{Error, Result};
use crate::extraction::{FitResult, Flavor};
use crate::ltlm::rt_ltlm;
use crate::params::{GuardThresholds, LtlmGeometry, SheetStack};

/// Uncertainty of the fitted slope, either in ohm/m or relative to `|S|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeUncertainty {
    Absolute(f64),
    Relative(f64),
}

impl SlopeUncertainty {
    pub fn absolute(self, slope: f64) -> f64 {
        match self {
            SlopeUncertainty::Absolute(d) => d,
            SlopeUncertainty::Relative(r) => r * slope.abs(),
        }
    }

    fn magnitude(self) -> f64 {
        match self {
            SlopeUncertainty::Absolute(d) | SlopeUncertainty::Relative(d) => d,
        }
    }
}

/// Standard uncertainties of the extraction inputs. All entries are `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyBudget {
    /// ohm/sq.
    pub d_r_shs: f64,
    /// ohm/sq.
    pub d_r_shm: f64,
    pub d_slope: SlopeUncertainty,
    /// Uncertainty of the de-embedded line at the reference, ohm.
    pub d_value_at_ref: f64,
    /// Lithographic variation of `l_0` on the de-embed structure, m.
    pub d_l0: f64,
    /// Per-point measurement noise of the swept resistances, ohm.
    pub sigma_r: f64,
}

impl UncertaintyBudget {
    pub fn zero() -> Self {
        Self {
            d_r_shs: 0.0,
            d_r_shm: 0.0,
            d_slope: SlopeUncertainty::Absolute(0.0),
            d_value_at_ref: 0.0,
            d_l0: 0.0,
            sigma_r: 0.0,
        }
    }

    /// Operating point quoted for micron-scale lithography: 0.1 ohm/sq on both
    /// sheets, 0.5 ohm at the reference and 1% on the slope.
    pub fn typical() -> Self {
        Self {
            d_r_shs: 0.1,
            d_r_shm: 0.1,
            d_slope: SlopeUncertainty::Relative(0.01),
            d_value_at_ref: 0.5,
            ..Self::zero()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let entries = [
            ("d_r_shs", self.d_r_shs),
            ("d_r_shm", self.d_r_shm),
            ("d_slope", self.d_slope.magnitude()),
            ("d_value_at_ref", self.d_value_at_ref),
            ("d_l0", self.d_l0),
            ("sigma_r", self.sigma_r),
        ];
        for (name, value) in entries {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "uncertainties must be finite and >= 0",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationForm {
    /// Quadrature sum of the first-order contributions.
    FirstOrder,
    /// Ladder flavor only: the slope contribution enters the radicand with a
    /// minus sign. Errors if the radicand goes negative.
    PrintedStrict,
    /// Ladder flavor only: the `r_shs >> r_shm` simplification. For
    /// comparison output; its terms mix units.
    Simplified,
}

/// Relative sensitivities `∂ln(rho_c)/∂ln(r_sh)` of the inversion.
pub fn sheet_weights(flavor: Flavor, r_shs: f64, r_shm: f64) -> (f64, f64) {
    let sum = r_shs + r_shm;
    match flavor {
        Flavor::HrLtlm => {
            let d = 2.0 * r_shs * r_shs - r_shs * r_shm - r_shm * r_shm;
            let cross = 2.0 * (r_shs * r_shm + 2.0 * r_shm * r_shm) / d;
            (r_shs / sum - cross, r_shm / sum + cross)
        }
        Flavor::HrRtlm => {
            let diff = r_shs - r_shm;
            (2.0 * r_shs / diff + r_shs / sum - 2.0, -2.0 * r_shm / diff + r_shm / sum)
        }
    }
}

/// The four first-order contributions to `Δrho_c` (ohm·m²): value at the
/// reference, slope, `r_shs`, `r_shm`.
pub fn error_terms(
    flavor: Flavor,
    fit: &FitResult,
    r_shs: f64,
    r_shm: f64,
    budget: &UncertaintyBudget,
) -> Result<[f64; 4]> {
    let (s, r) = (fit.slope, fit.value_at_reference);
    // rho_c = k·R², so the value term stays finite at R = 0
    let k = flavor.invert(s, 1.0, r_shs, r_shm)?;
    let rho = k * r * r;
    let d_s = budget.d_slope.absolute(s);
    let (w_s, w_m) = sheet_weights(flavor, r_shs, r_shm);
    Ok([
        2.0 * k * r.abs() * budget.d_value_at_ref,
        2.0 * rho * d_s / s.abs(),
        (w_s * rho * budget.d_r_shs / r_shs).abs(),
        (w_m * rho * budget.d_r_shm / r_shm).abs(),
    ])
}

/// Propagated standard uncertainty of `rho_c` (ohm·m²).
pub fn propagate_error(
    flavor: Flavor,
    fit: &FitResult,
    r_shs: f64,
    r_shm: f64,
    budget: &UncertaintyBudget,
    form: PropagationForm,
) -> Result<f64> {
    budget.validate()?;
    match form {
        PropagationForm::FirstOrder => {
            let t = error_terms(flavor, fit, r_shs, r_shm, budget)?;
            Ok(t.iter().map(|t| t * t).sum::<f64>().sqrt())
        }
        PropagationForm::PrintedStrict => {
            require_ladder(flavor, form)?;
            let [tr, ts, tsh, tmh] = error_terms(flavor, fit, r_shs, r_shm, budget)?;
            let radicand = tr * tr - ts * ts + tsh * tsh + tmh * tmh;
            if radicand < 0.0 {
                return Err(Error::NegativeRadicand(radicand));
            }
            Ok(radicand.sqrt())
        }
        PropagationForm::Simplified => {
            require_ladder(flavor, form)?;
            let (s, r) = (fit.slope, fit.value_at_reference);
            if s == 0.0 {
                return Err(Error::ExtractionInvalid("slope is zero".into()));
            }
            let sum = r_shs + r_shm;
            let d_s = budget.d_slope.absolute(s);
            let value_term = if r == 0.0 { 0.0 } else { sum / (2.0 * r) * budget.d_value_at_ref };
            let radicand = value_term.powi(2)
                + (sum / (2.0 * s) * d_s).powi(2)
                + (budget.d_r_shs / 4.0).powi(2)
                + (budget.d_r_shm / 2.0).powi(2);
            Ok((r / (2.0 * s)).powi(2) * radicand.sqrt())
        }
    }
}

fn require_ladder(flavor: Flavor, form: PropagationForm) -> Result<()> {
    if flavor == Flavor::HrLtlm {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{form:?} propagation is defined for hr-ltlm only")))
    }
}

/// `∂R_T(l_g = 0)/∂l_0` of the ladder structure, `r_shs/W` (ohm/m).
pub fn sensitivity_l0_rltlm(stack: &SheetStack) -> f64 {
    stack.r_shs() / stack.width()
}

/// `∂R_no_spacer/∂l_0`, `r_shs·r_shm/(W·Σ)` (ohm/m).
pub fn sensitivity_l0_hrtlm(stack: &SheetStack) -> f64 {
    stack.r_shs() * stack.r_shm() / (stack.width() * stack.sheet_sum())
}

/// Ratio of the two de-embed sensitivities, `r_shm/Σ`.
pub fn sensitivity_ratio(stack: &SheetStack) -> f64 {
    sensitivity_l0_hrtlm(stack) / sensitivity_l0_rltlm(stack)
}

/// Central finite difference of the full ladder total resistance at
/// `l_g = 0` with respect to `l_0`, every term allowed to vary.
pub fn sensitivity_l0_rltlm_fd(stack: &SheetStack, l_c: f64, l_0: f64) -> Result<f64> {
    let guards = GuardThresholds::default();
    let h = 1e-4 * l_0;
    let at = |l0: f64| -> Result<f64> {
        let geom = LtlmGeometry::from_ladder(l_c, 0.0, l0)?;
        Ok(rt_ltlm(stack, &geom, crate::ltlm::slope_ltlm(stack), &guards).value)
    };
    Ok((at(l_0 + h)? - at(l_0 - h)?) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltlm::{r_no_spacer_ltlm, slope_ltlm, value_at_l0_ltlm};
    use crate::params::{convert_rho_c, RhoUnit, UM};
    use proptest::prelude::*;

    fn t1() -> SheetStack {
        SheetStack::from_lab_units(100.0, 10.0, 1.1e-9, 10.0).unwrap()
    }

    fn ltlm_fit(stack: &SheetStack) -> FitResult {
        FitResult {
            slope: slope_ltlm(stack),
            slope_se: 0.0,
            reference: 14.0 * UM,
            value_at_reference: value_at_l0_ltlm(stack),
            value_se: 0.0,
            r_squared: 1.0,
            n_points: 6,
            weighted: false,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn sensitivities_on_t1() {
        let s = t1();
        assert!(rel(sensitivity_l0_rltlm(&s), 1e7) < 1e-12);
        assert!(rel(sensitivity_l0_hrtlm(&s), 9.0909090909e5) < 1e-9);
        assert!(rel(sensitivity_ratio(&s), 10.0 / 110.0) < 1e-12);
        let wide = s.with_width(20.0 * UM).unwrap();
        assert!(rel(sensitivity_l0_rltlm(&wide), 5e6) < 1e-12);
    }

    #[test]
    fn ratio_vanishes_with_metal_sheet() {
        let s = SheetStack::new(100.0, 1e-9, 1e-13, 1e-5).unwrap();
        assert!(sensitivity_ratio(&s) < 1e-10);
    }

    #[test]
    fn finite_differences_match_sensitivities() {
        let s = t1();
        let fd = sensitivity_l0_rltlm_fd(&s, 5.0 * UM, 14.0 * UM).unwrap();
        assert!(rel(fd, sensitivity_l0_rltlm(&s)) < 1e-6);
        let g = GuardThresholds::default();
        let h = 1e-3 * UM;
        let fd_ns = (r_no_spacer_ltlm(&s, 5.0 * UM, 14.0 * UM + h, &g).value
            - r_no_spacer_ltlm(&s, 5.0 * UM, 14.0 * UM - h, &g).value)
            / (2.0 * h);
        assert!(rel(fd_ns, sensitivity_l0_hrtlm(&s)) < 1e-6);
    }

    #[test]
    fn zero_budget_gives_zero() {
        let s = t1();
        for form in [PropagationForm::FirstOrder, PropagationForm::PrintedStrict, PropagationForm::Simplified] {
            let d = propagate_error(Flavor::HrLtlm, &ltlm_fit(&s), 100.0, 10.0, &UncertaintyBudget::zero(), form).unwrap();
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn typical_budget_on_t1() {
        let s = t1();
        let d = propagate_error(Flavor::HrLtlm, &ltlm_fit(&s), 100.0, 10.0, &UncertaintyBudget::typical(), PropagationForm::FirstOrder)
            .unwrap();
        // dominated by 2·ΔR/R with R ≈ 1.087 ohm
        let cm2 = convert_rho_c(d, RhoUnit::OhmM2, RhoUnit::OhmCm2);
        assert!(cm2 > 9e-10 && cm2 < 1.1e-9, "{cm2:e}");
    }

    #[test]
    fn printed_strict_rejects_negative_radicand() {
        let s = t1();
        let budget = UncertaintyBudget {
            d_slope: SlopeUncertainty::Relative(0.5),
            ..UncertaintyBudget::zero()
        };
        assert!(matches!(
            propagate_error(Flavor::HrLtlm, &ltlm_fit(&s), 100.0, 10.0, &budget, PropagationForm::PrintedStrict),
            Err(Error::NegativeRadicand(_))
        ));
        assert!(propagate_error(Flavor::HrRtlm, &ltlm_fit(&s), 100.0, 10.0, &budget, PropagationForm::PrintedStrict).is_err());
    }

    fn fd_term(flavor: Flavor, fit: &FitResult, rs: f64, rm: f64, which: usize, step: f64) -> f64 {
        let (s, r) = (fit.slope, fit.value_at_reference);
        let f = |d: f64| -> f64 {
            match which {
                0 => flavor.invert(s, r + d, rs, rm).unwrap(),
                1 => flavor.invert(s + d, r, rs, rm).unwrap(),
                2 => flavor.invert(s, r, rs + d, rm).unwrap(),
                _ => flavor.invert(s, r, rs, rm + d).unwrap(),
            }
        };
        ((f(1e-6 * step) - f(-1e-6 * step)) / 2e-6).abs()
    }

    #[test]
    fn terms_match_finite_difference_jacobian() {
        let s = t1();
        let budget = UncertaintyBudget {
            d_r_shs: 0.1,
            d_r_shm: 0.1,
            d_slope: SlopeUncertainty::Absolute(9e4),
            d_value_at_ref: 0.5,
            ..UncertaintyBudget::zero()
        };
        let steps = [0.5, 9e4, 0.1, 0.1];
        for (flavor, fit) in [
            (Flavor::HrLtlm, ltlm_fit(&s)),
            (Flavor::HrRtlm, FitResult { slope: 9e6, value_at_reference: 0.6, reference: 0.0, ..ltlm_fit(&s) }),
        ] {
            let t = error_terms(flavor, &fit, 100.0, 10.0, &budget).unwrap();
            for k in 0..4 {
                let fd = fd_term(flavor, &fit, 100.0, 10.0, k, steps[k]);
                assert!(rel(t[k], fd) < 1e-4, "{flavor} term {k}: {} vs {fd}", t[k]);
            }
        }
    }

    #[test]
    fn simplified_form_is_finite() {
        let s = t1();
        let d = propagate_error(Flavor::HrLtlm, &ltlm_fit(&s), 100.0, 10.0, &UncertaintyBudget::typical(), PropagationForm::Simplified)
            .unwrap();
        assert!(d.is_finite() && d > 0.0);
    }

    proptest! {
        #[test]
        fn monotone_in_every_entry(
            base in proptest::array::uniform5(0.0f64..1.0),
            which in 0usize..5,
            bump in 0.0f64..1.0,
        ) {
            let s = t1();
            let fit = ltlm_fit(&s);
            let mk = |v: [f64; 5]| UncertaintyBudget {
                d_r_shs: v[0],
                d_r_shm: v[1],
                d_slope: SlopeUncertainty::Relative(0.01 * v[2]),
                d_value_at_ref: v[3],
                d_l0: v[4],
                sigma_r: 0.0,
            };
            let mut up = base;
            up[which] += bump;
            let lo = propagate_error(Flavor::HrLtlm, &fit, 100.0, 10.0, &mk(base), PropagationForm::FirstOrder).unwrap();
            let hi = propagate_error(Flavor::HrLtlm, &fit, 100.0, 10.0, &mk(up), PropagationForm::FirstOrder).unwrap();
            prop_assert!(hi >= lo);
        }

        #[test]
        fn ratio_below_one(rs in 1e-3f64..1e4, rm in 1e-3f64..1e4) {
            let s = SheetStack::new(rs, rm, 1e-13, 1e-5).unwrap();
            let ratio = sensitivity_ratio(&s);
            prop_assert!(ratio < 1.0);
            prop_assert!(((ratio - rm / (rs + rm)) / ratio).abs() < 1e-12);
        }
    }
}
