//! Measurement-side pipeline: de-embedding, line fit and `rho_c` inversion.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result, Warning};
use crate::error_model::{propagate_error, PropagationForm, SlopeUncertainty, UncertaintyBudget};
use crate::ltlm::rho_c_from_fit_ltlm;
use crate::params::{convert_rho_c, GuardThresholds, RhoUnit, SheetStack};
use crate::rtlm::rho_c_from_fit_rtlm;

/// Which de-embedded structure family a series comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// RTLM-based; the sweep variable is the spacer length `l_s`.
    HrRtlm,
    /// Ladder-based; the sweep variable is the ladder length `l_g`.
    HrLtlm,
}

impl Flavor {
    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::HrRtlm => "hr-rtlm",
            Flavor::HrLtlm => "hr-ltlm",
        }
    }

    /// Abscissa at which the de-embedded line is evaluated for the inversion.
    pub fn reference(self, l_0: f64) -> f64 {
        match self {
            Flavor::HrRtlm => 0.0,
            Flavor::HrLtlm => l_0,
        }
    }

    /// `rho_c` from slope and value at the reference abscissa.
    pub fn invert(self, slope: f64, value: f64, r_shs: f64, r_shm: f64) -> Result<f64> {
        match self {
            Flavor::HrRtlm => rho_c_from_fit_rtlm(slope, value, r_shs, r_shm),
            Flavor::HrLtlm => rho_c_from_fit_ltlm(slope, value, r_shs, r_shm),
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hr-rtlm" => Ok(Flavor::HrRtlm),
            "hr-ltlm" => Ok(Flavor::HrLtlm),
            other => Err(Error::InvalidSeries(format!(
                "unknown flavor `{other}` (expected hr-rtlm or hr-ltlm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPoint {
    /// Sweep length in meters.
    pub length: f64,
    /// Measured total resistance, ohms.
    pub resistance: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeembedMeasurement {
    pub resistance: f64,
    pub sigma: Option<f64>,
}

/// Swept total resistances plus the de-embed measurement of one die.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    flavor: Flavor,
    points: Vec<MeasurementPoint>,
    deembed: DeembedMeasurement,
    l_0: f64,
    r_shs: f64,
    r_shm: f64,
    width: f64,
    /// Standard uncertainties of the independently measured sheet resistances.
    pub d_r_shs: f64,
    pub d_r_shm: f64,
    pub guards: GuardThresholds,
}

impl MeasurementSeries {
    pub fn new(
        flavor: Flavor,
        points: Vec<MeasurementPoint>,
        deembed: DeembedMeasurement,
        l_0: f64,
        r_shs: f64,
        r_shm: f64,
        width: f64,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidSeries(msg));
        if points.len() < 3 {
            return bad(format!("need at least 3 points, got {}", points.len()));
        }
        for (name, v) in [("l_0", l_0), ("r_shs", r_shs), ("r_shm", r_shm), ("width", width)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and > 0, got {v:e}"));
            }
        }
        let with_sigma = points.iter().filter(|p| p.sigma.is_some()).count();
        if with_sigma != 0 && with_sigma != points.len() {
            return bad("per-point sigma must be given for all points or none".into());
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.length.is_finite() && p.length >= 0.0) {
                return bad(format!("point {i}: sweep length {:e} must be >= 0", p.length));
            }
            if i > 0 && !(p.length > points[i - 1].length) {
                return bad(format!("point {i}: sweep lengths must be strictly increasing"));
            }
            if p.length > l_0 * (1.0 + 1e-9) {
                return bad(format!("point {i}: sweep length {:e} exceeds l_0 = {l_0:e}", p.length));
            }
            if !(p.resistance.is_finite() && p.resistance > 0.0) {
                return bad(format!("point {i}: resistance {:e} must be > 0", p.resistance));
            }
            if let Some(s) = p.sigma {
                if !(s.is_finite() && s > 0.0) {
                    return bad(format!("point {i}: sigma {s:e} must be > 0"));
                }
            }
        }
        if !(deembed.resistance.is_finite() && deembed.resistance >= 0.0) {
            return bad(format!("de-embed resistance {:e} must be >= 0", deembed.resistance));
        }
        if let Some(s) = deembed.sigma {
            if !(s.is_finite() && s >= 0.0) {
                return bad(format!("de-embed sigma {s:e} must be >= 0"));
            }
        }
        Ok(Self {
            flavor,
            points,
            deembed,
            l_0,
            r_shs,
            r_shm,
            width,
            d_r_shs: 0.0,
            d_r_shm: 0.0,
            guards: GuardThresholds::default(),
        })
    }

    /// Convenience constructor from exact `(length, resistance)` pairs.
    pub fn from_pairs(
        flavor: Flavor,
        pairs: &[(f64, f64)],
        deembed_r: f64,
        l_0: f64,
        stack: &SheetStack,
    ) -> Result<Self> {
        let points = pairs
            .iter()
            .map(|&(length, resistance)| MeasurementPoint {
                length,
                resistance,
                sigma: None,
            })
            .collect();
        Self::new(
            flavor,
            points,
            DeembedMeasurement {
                resistance: deembed_r,
                sigma: None,
            },
            l_0,
            stack.r_shs(),
            stack.r_shm(),
            stack.width(),
        )
    }

    pub fn with_sheet_uncertainty(mut self, d_r_shs: f64, d_r_shm: f64) -> Self {
        self.d_r_shs = d_r_shs;
        self.d_r_shm = d_r_shm;
        self
    }

    pub fn with_sheets(mut self, r_shs: f64, r_shm: f64) -> Self {
        self.r_shs = r_shs;
        self.r_shm = r_shm;
        self
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn points(&self) -> &[MeasurementPoint] {
        &self.points
    }

    pub fn deembed_measurement(&self) -> DeembedMeasurement {
        self.deembed
    }

    pub fn l_0(&self) -> f64 {
        self.l_0
    }

    pub fn r_shs(&self) -> f64 {
        self.r_shs
    }

    pub fn r_shm(&self) -> f64 {
        self.r_shm
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

/// One point of the de-embedded line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeembeddedPoint {
    pub length: f64,
    pub resistance: f64,
    pub sigma: Option<f64>,
}

/// Subtracts the de-embed resistance from every total resistance. Per-point
/// sigmas are combined in quadrature with the de-embed sigma.
pub fn deembed(series: &MeasurementSeries) -> Vec<DeembeddedPoint> {
    let d = series.deembed;
    let sd = d.sigma.unwrap_or(0.0);
    series
        .points
        .iter()
        .map(|p| DeembeddedPoint {
            length: p.length,
            resistance: p.resistance - d.resistance,
            sigma: p.sigma.map(|s| s.hypot(sd)),
        })
        .collect()
}

/// Straight-line fit evaluated at a reference abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub slope_se: f64,
    pub reference: f64,
    pub value_at_reference: f64,
    /// Standard error of the fitted line at the reference, including the
    /// slope/intercept covariance.
    pub value_se: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub weighted: bool,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.value_at_reference + self.slope * (x - self.reference)
    }
}

/// Least-squares line through `(x, y)`, weighted by `1/sigma²` when sigmas
/// are given.
///
/// Unweighted fits estimate the residual variance from the data (zero
/// degrees of freedom gives zero standard errors). Weighted fits take the
/// sigmas as absolute. When the data has zero total variance `r²` is 1.
pub fn fit_line(x: &[f64], y: &[f64], sigma: Option<&[f64]>, reference: f64) -> Result<FitResult> {
    let n = x.len();
    if n < 2 || y.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(Error::FitInvalid(format!(
            "need at least 2 points with matching lengths (x: {n}, y: {})",
            y.len()
        )));
    }
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|s| 1.0 / (s * s)).collect(),
        None => vec![1.0; n],
    };
    if w.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::FitInvalid("sigmas must be finite and > 0".into()));
    }
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(&w).map(|(x, w)| w * x).sum::<f64>() / sw;
    let ym = y.iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let (dx, dy) = (x[i] - xm, y[i] - ym);
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    let span = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(span > 0.0) || !(sxx > 0.0) {
        return Err(Error::FitInvalid("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let value = ym + slope * (reference - xm);
    let ssr: f64 = (0..n)
        .map(|i| {
            let r = y[i] - (ym + slope * (x[i] - xm));
            w[i] * r * r
        })
        .sum();
    let scale = if sigma.is_some() {
        1.0
    } else if n > 2 {
        ssr / (n - 2) as f64
    } else {
        0.0
    };
    let slope_var = scale / sxx;
    let value_var = scale * (1.0 / sw + (reference - xm).powi(2) / sxx);
    let r_squared = if syy > 0.0 {
        (1.0 - ssr / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(FitResult {
        slope,
        slope_se: slope_var.sqrt(),
        reference,
        value_at_reference: value,
        value_se: value_var.sqrt(),
        r_squared,
        n_points: n,
        weighted: sigma.is_some(),
    })
}

/// Extracted contact resistivity with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionReport {
    pub flavor: Flavor,
    /// ohm·m².
    pub rho_c: f64,
    /// ohm·m², first-order propagation of the fit and sheet uncertainties.
    pub delta_rho_c: f64,
    /// Transfer length implied by the extracted `rho_c`, meters.
    pub transfer_length: f64,
    pub fit: FitResult,
    pub deembedded: Vec<DeembeddedPoint>,
    /// The fitted value at the reference was negative; `rho_c` is reported as
    /// zero and `delta_rho_c` is the resistivity equivalent of one standard
    /// error of that value.
    pub below_resolution: bool,
    pub warnings: Vec<Warning>,
}

impl ExtractionReport {
    pub fn rho_c_cm2(&self) -> f64 {
        convert_rho_c(self.rho_c, RhoUnit::OhmM2, RhoUnit::OhmCm2)
    }

    pub fn delta_rho_c_cm2(&self) -> f64 {
        convert_rho_c(self.delta_rho_c, RhoUnit::OhmM2, RhoUnit::OhmCm2)
    }
}

/// De-embeds, fits and inverts a series.
pub fn extract(series: &MeasurementSeries) -> Result<ExtractionReport> {
    let flavor = series.flavor;
    let points = deembed(series);
    let xs: Vec<f64> = points.iter().map(|p| p.length).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.resistance).collect();
    let sig: Option<Vec<f64>> = points.iter().map(|p| p.sigma).collect();
    let reference = flavor.reference(series.l_0);
    let mut fit = fit_line(&xs, &ys, sig.as_deref(), reference)?;
    if sig.is_none() {
        // a common-mode de-embed uncertainty moves the whole line
        if let Some(sd) = series.deembed.sigma {
            fit.value_se = fit.value_se.hypot(sd);
        }
    }

    let (r_shs, r_shm) = (series.r_shs, series.r_shm);
    let mut warnings = Vec::new();
    series.guards.check_sheet_ratio(r_shs, r_shm, &mut warnings);
    match flavor {
        Flavor::HrRtlm if !(fit.slope > 0.0) => {
            return Err(Error::ExtractionInvalid(format!(
                "fitted RTLM slope {:e} ohm/m is not positive",
                fit.slope
            )))
        }
        Flavor::HrLtlm if fit.slope > 0.0 => warnings.push(Warning::UnexpectedSlopeSign { slope: fit.slope }),
        _ => {}
    }

    let budget = UncertaintyBudget {
        d_r_shs: series.d_r_shs,
        d_r_shm: series.d_r_shm,
        d_slope: SlopeUncertainty::Absolute(fit.slope_se),
        d_value_at_ref: fit.value_se,
        ..UncertaintyBudget::zero()
    };

    let below_resolution = fit.value_at_reference < 0.0;
    let (rho_c, delta_rho_c) = if below_resolution {
        warnings.push(Warning::BelowResolution {
            value_at_reference: fit.value_at_reference,
        });
        let floor = flavor.invert(fit.slope, fit.value_se, r_shs, r_shm)?;
        (0.0, floor)
    } else {
        let rho = flavor.invert(fit.slope, fit.value_at_reference, r_shs, r_shm)?;
        let delta = propagate_error(flavor, &fit, r_shs, r_shm, &budget, PropagationForm::FirstOrder)?;
        (rho, delta)
    };
    let transfer_length = (rho_c / (r_shs + r_shm)).sqrt();
    if transfer_length > 0.0 {
        let ratio = series.l_0 / (2.0 * transfer_length);
        if ratio < series.guards.half_gap {
            warnings.push(Warning::ApproximationInvalid {
                guard: crate::error::Guard::HalfGapOverTransferLength,
                ratio,
                threshold: series.guards.half_gap,
            });
        }
    }
    Ok(ExtractionReport {
        flavor,
        rho_c,
        delta_rho_c,
        transfer_length,
        fit,
        deembedded: points,
        below_resolution,
        warnings,
    })
}
