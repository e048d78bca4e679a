//! Flat `key = value` run configuration.
//!
//! Keys carry their unit as a suffix. Blank lines and `#` comments are
//! ignored; unknown and repeated keys are errors.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tlm_forge_core::error_model::{Baseline, McConfig, McSource, Perturb, SlopeUncertainty, UncertaintyBudget};
use tlm_forge_core::forward::{uniform_sweep, Source, SweepSpec};
use tlm_forge_core::{Flavor, SheetStack, UM};

use crate::error::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "flavor",
    "source",
    "baseline",
    "r_shs_ohm_sq",
    "r_shm_ohm_sq",
    "rho_c_ohm_cm2",
    "w_um",
    "l0_um",
    "lc_um",
    "sweep_um",
    "sweep_min_um",
    "sweep_max_um",
    "sweep_count",
    "n_segments",
    "seed",
    "trials",
    "d_r_shs_ohm_sq",
    "d_r_shm_ohm_sq",
    "d_slope_rel",
    "d_slope_ohm_per_um",
    "d_value_ohm",
    "d_l0_um",
    "sigma_ohm",
    "out",
    "per_trial_csv",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub flavor: Flavor,
    pub source: Source,
    pub baseline: Baseline,
    pub r_shs_ohm_sq: f64,
    pub r_shm_ohm_sq: f64,
    pub rho_c_ohm_cm2: f64,
    pub w_um: f64,
    pub l0_um: f64,
    pub lc_um: f64,
    /// Explicit sweep lengths; overrides the uniform sweep when set.
    pub sweep_um: Option<Vec<f64>>,
    pub sweep_min_um: Option<f64>,
    pub sweep_max_um: Option<f64>,
    pub sweep_count: usize,
    pub n_segments: usize,
    pub seed: u64,
    pub trials: usize,
    pub d_r_shs_ohm_sq: f64,
    pub d_r_shm_ohm_sq: f64,
    pub d_slope: SlopeUncertainty,
    pub d_value_ohm: f64,
    pub d_l0_um: f64,
    pub sigma_ohm: f64,
    pub out: Option<PathBuf>,
    pub per_trial_csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let budget = UncertaintyBudget::typical();
        Self {
            flavor: Flavor::HrLtlm,
            source: Source::ClosedForm,
            baseline: Baseline::HrTlm,
            r_shs_ohm_sq: 100.0,
            r_shm_ohm_sq: 10.0,
            rho_c_ohm_cm2: 1.1e-9,
            w_um: 10.0,
            l0_um: 14.0,
            lc_um: 5.0,
            sweep_um: None,
            sweep_min_um: None,
            sweep_max_um: None,
            sweep_count: 6,
            n_segments: 20_000,
            seed: 0,
            trials: 10_000,
            d_r_shs_ohm_sq: budget.d_r_shs,
            d_r_shm_ohm_sq: budget.d_r_shm,
            d_slope: budget.d_slope,
            d_value_ohm: budget.d_value_at_ref,
            d_l0_um: budget.d_l0 / UM,
            sigma_ohm: budget.sigma_r,
            out: None,
            per_trial_csv: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}`: cannot parse `{value}` as a number"))
}

pub fn parse_source(value: &str) -> Result<Source, String> {
    match value {
        "closed-form" => Ok(Source::ClosedForm),
        "oracle" => Ok(Source::Oracle),
        other => Err(format!("unknown source `{other}` (expected closed-form or oracle)")),
    }
}

fn parse_baseline(value: &str) -> Result<Baseline, String> {
    match value {
        "hr-tlm" => Ok(Baseline::HrTlm),
        "r-ltlm" => Ok(Baseline::RLtlm),
        other => Err(format!("unknown baseline `{other}` (expected hr-tlm or r-ltlm)")),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        match key {
            "flavor" => self.flavor = value.parse().map_err(|e: tlm_forge_core::Error| e.to_string())?,
            "source" => self.source = parse_source(value)?,
            "baseline" => self.baseline = parse_baseline(value)?,
            "r_shs_ohm_sq" => self.r_shs_ohm_sq = parse_num(key, value)?,
            "r_shm_ohm_sq" => self.r_shm_ohm_sq = parse_num(key, value)?,
            "rho_c_ohm_cm2" => self.rho_c_ohm_cm2 = parse_num(key, value)?,
            "w_um" => self.w_um = parse_num(key, value)?,
            "l0_um" => self.l0_um = parse_num(key, value)?,
            "lc_um" => self.lc_um = parse_num(key, value)?,
            "sweep_um" => self.sweep_um = Some(parse_list(key, value)?),
            "sweep_min_um" => self.sweep_min_um = Some(parse_num(key, value)?),
            "sweep_max_um" => self.sweep_max_um = Some(parse_num(key, value)?),
            "sweep_count" => self.sweep_count = parse_num(key, value)?,
            "n_segments" => self.n_segments = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "d_r_shs_ohm_sq" => self.d_r_shs_ohm_sq = parse_num(key, value)?,
            "d_r_shm_ohm_sq" => self.d_r_shm_ohm_sq = parse_num(key, value)?,
            "d_slope_rel" => self.d_slope = SlopeUncertainty::Relative(parse_num(key, value)?),
            // ohm/µm on input, ohm/m internally
            "d_slope_ohm_per_um" => self.d_slope = SlopeUncertainty::Absolute(parse_num::<f64>(key, value)? / UM),
            "d_value_ohm" => self.d_value_ohm = parse_num(key, value)?,
            "d_l0_um" => self.d_l0_um = parse_num(key, value)?,
            "sigma_ohm" => self.sigma_ohm = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "per_trial_csv" => self.per_trial_csv = Some(PathBuf::from(value)),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Parses config text. `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        let mut slope_key: Option<&str> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| CliError::Invalid(format!("{origin}:{line_no}: {msg}"));
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            if key.starts_with("d_slope_") {
                if let Some(prev) = slope_key {
                    return Err(err(format!("`{key}` conflicts with `{prev}`")));
                }
                slope_key = KEYS.iter().copied().find(|k| *k == key);
            }
            cfg.set(key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn stack(&self) -> CliResult<SheetStack> {
        Ok(SheetStack::from_lab_units(
            self.r_shs_ohm_sq,
            self.r_shm_ohm_sq,
            self.rho_c_ohm_cm2,
            self.w_um,
        )?)
    }

    pub fn l_0(&self) -> f64 {
        self.l0_um * UM
    }

    pub fn l_c(&self) -> f64 {
        self.lc_um * UM
    }

    /// Sweep lengths in meters. Without an explicit list the ladder sweep
    /// spans `[l_0/4, l_0]` and the spacer sweep `[l_0/6, l_0/2]`.
    pub fn sweep(&self) -> Vec<f64> {
        if let Some(list) = &self.sweep_um {
            return list.iter().map(|v| v * UM).collect();
        }
        let (lo, hi) = match self.flavor {
            Flavor::HrLtlm => (self.l0_um / 4.0, self.l0_um),
            Flavor::HrRtlm => (self.l0_um / 6.0, self.l0_um / 2.0),
        };
        let lo = self.sweep_min_um.unwrap_or(lo);
        let hi = self.sweep_max_um.unwrap_or(hi);
        uniform_sweep(lo * UM, hi * UM, self.sweep_count)
    }

    pub fn sweep_spec(&self) -> CliResult<SweepSpec> {
        Ok(SweepSpec {
            flavor: self.flavor,
            stack: self.stack()?,
            l_c: self.l_c(),
            l_0: self.l_0(),
            lengths: self.sweep(),
            n_segments: self.n_segments,
        })
    }

    pub fn budget(&self) -> UncertaintyBudget {
        UncertaintyBudget {
            d_r_shs: self.d_r_shs_ohm_sq,
            d_r_shm: self.d_r_shm_ohm_sq,
            d_slope: self.d_slope,
            d_value_at_ref: self.d_value_ohm,
            d_l0: self.d_l0_um * UM,
            sigma_r: self.sigma_ohm,
        }
    }

    pub fn mc_config(&self) -> CliResult<McConfig> {
        Ok(McConfig {
            trials: self.trials,
            seed: self.seed,
            flavor: self.flavor,
            stack: self.stack()?,
            l_c: self.l_c(),
            l_0: self.l_0(),
            sweep: self.sweep(),
            source: match self.source {
                Source::ClosedForm => McSource::ClosedForm,
                Source::Oracle => McSource::Oracle {
                    n_segments: self.n_segments,
                },
            },
            baseline: self.baseline,
            perturb: Perturb::ALL,
        })
    }
}

pub fn source_name(source: Source) -> &'static str {
    match source {
        Source::ClosedForm => "closed-form",
        Source::Oracle => "oracle",
    }
}
