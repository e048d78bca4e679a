//! JSON report types. Field names are the documented report keys.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::data::fmt_num;
use crate::error::{CliError, CliResult};

/// A number written with 17 significant digits; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(fmt_num(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub flavor: &'static str,
    pub source: &'static str,
    pub measurements_csv: String,
    pub deembed_csv: String,
    pub n_points: usize,
    pub deembed_ohm: Num,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ExtractReport {
    pub flavor: &'static str,
    pub rho_c_ohm_cm2: Num,
    pub rho_c_ohm_m2: Num,
    pub delta_rho_c_ohm_cm2: Num,
    pub delta_rho_c_ohm_m2: Num,
    pub transfer_length_um: Num,
    pub slope_ohm_per_um: Num,
    pub slope_se_ohm_per_um: Num,
    pub reference_um: Num,
    pub value_at_reference_ohm: Num,
    pub value_se_ohm: Num,
    pub r_squared: Num,
    pub n_points: usize,
    pub weighted: bool,
    pub below_resolution: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Debug, Serialize)]
pub struct ValidateRow {
    pub name: &'static str,
    pub analytic: Num,
    pub oracle: Num,
    pub relative_error: Num,
    pub tolerance: Num,
    pub status: RowStatus,
    pub detail: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub n_segments: usize,
    pub rows: Vec<ValidateRow>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct McReport {
    pub flavor: &'static str,
    pub source: &'static str,
    pub baseline: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub below_resolution: usize,
    pub mean_ohm_cm2: Num,
    pub std_ohm_cm2: Num,
    pub p05_ohm_cm2: Num,
    pub p50_ohm_cm2: Num,
    pub p95_ohm_cm2: Num,
    pub min_ohm_cm2: Num,
    pub max_ohm_cm2: Num,
    pub analytic_std_ohm_cm2: Num,
    pub std_relative_difference: Num,
    pub wide_ci: bool,
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
