use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::propagate::{propagate_error, sensitivity_l0_hrtlm, sensitivity_l0_rltlm, PropagationForm, SlopeUncertainty, UncertaintyBudget};
use crate::error::{Error, Result};
use crate::extraction::{extract, fit_line, Flavor, MeasurementSeries};
use crate::forward::{deembed_map, oracle_resistance, simulate, Source, SweepSpec};
use crate::ltlm::{r_no_spacer_ltlm, rt_ltlm, slope_ltlm};
use crate::params::{GuardThresholds, LtlmGeometry, SheetStack};

pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McSource {
    ClosedForm,
    Oracle { n_segments: usize },
}

/// Which structure supplies the de-embed resistance when `l_0` varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// The full-metal structure.
    HrTlm,
    /// The ladder structure at `l_g = 0`, offset so that the nominal line is
    /// unchanged. Ladder flavor only.
    RLtlm,
}

/// Which budget entries are sampled. A disabled entry stays at its nominal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Perturb {
    pub sheets: bool,
    pub value_at_ref: bool,
    pub slope: bool,
    pub l0: bool,
    pub noise: bool,
}

impl Perturb {
    pub const ALL: Perturb = Perturb {
        sheets: true,
        value_at_ref: true,
        slope: true,
        l0: true,
        noise: true,
    };
}

impl Default for Perturb {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    pub flavor: Flavor,
    pub stack: SheetStack,
    pub l_c: f64,
    pub l_0: f64,
    pub sweep: Vec<f64>,
    pub source: McSource,
    pub baseline: Baseline,
    pub perturb: Perturb,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::InvalidConfig(format!(
                "trials must be >= {MIN_TRIALS}, got {}",
                self.trials
            )));
        }
        if self.sweep.len() < 3 {
            return Err(Error::InvalidConfig("sweep needs at least 3 lengths".into()));
        }
        if self.flavor == Flavor::HrRtlm && self.baseline == Baseline::RLtlm {
            return Err(Error::InvalidConfig("the l_g = 0 baseline exists for hr-ltlm only".into()));
        }
        Ok(())
    }

    fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            flavor: self.flavor,
            stack: self.stack,
            l_c: self.l_c,
            l_0: self.l_0,
            lengths: self.sweep.clone(),
            n_segments: match self.source {
                McSource::Oracle { n_segments } => n_segments,
                McSource::ClosedForm => 20_000,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSummary {
    pub trials: usize,
    pub succeeded: usize,
    pub failed: usize,
    /// Trials whose value at the reference fell below zero (counted as `rho_c = 0`).
    pub below_resolution: usize,
    /// ohm·m².
    pub mean: f64,
    pub std: f64,
    pub p05: f64,
    pub p50: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
    /// Relative standard error of `std` exceeds 5%.
    pub wide_ci: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McOutcome {
    pub summary: McSummary,
    /// Extracted `rho_c` per trial in trial order; `None` for failed trials.
    pub per_trial: Vec<Option<f64>>,
}

/// Nominal data the trials perturb.
struct Nominal {
    lengths: Vec<f64>,
    resistances: Vec<f64>,
    deembed: f64,
    /// Constant that converts the `l_g = 0` reading into the de-embed value.
    rltlm_offset: f64,
}

fn nominal(config: &McConfig) -> Result<Nominal> {
    let spec = config.sweep_spec();
    let source = match config.source {
        McSource::ClosedForm => Source::ClosedForm,
        McSource::Oracle { .. } => Source::Oracle,
    };
    let sim = simulate(&spec, source)?;
    let rltlm_offset = if config.baseline == Baseline::RLtlm {
        ladder_at_zero(config, config.l_0)? - sim.deembed
    } else {
        0.0
    };
    Ok(Nominal {
        lengths: sim.lengths,
        resistances: sim.resistances,
        deembed: sim.deembed,
        rltlm_offset,
    })
}

fn ladder_at_zero(config: &McConfig, l_0: f64) -> Result<f64> {
    match config.source {
        McSource::ClosedForm => {
            let geom = LtlmGeometry::from_ladder(config.l_c, 0.0, l_0)?;
            Ok(rt_ltlm(&config.stack, &geom, slope_ltlm(&config.stack), &GuardThresholds::default()).value)
        }
        McSource::Oracle { n_segments } => {
            let map = crate::forward::test_structure_map(config.flavor, config.l_c, l_0, 0.0)?;
            Ok(oracle_resistance(&config.stack, &map, n_segments)?.0)
        }
    }
}

/// De-embed reading when the de-embed structure is drawn at `l_0 + delta`.
fn deembed_at(config: &McConfig, nom: &Nominal, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Ok(nom.deembed);
    }
    let l0 = config.l_0 + delta;
    match (config.baseline, config.source, config.flavor) {
        (Baseline::RLtlm, _, _) => Ok(ladder_at_zero(config, l0)? - nom.rltlm_offset),
        (Baseline::HrTlm, McSource::ClosedForm, Flavor::HrLtlm) => {
            Ok(r_no_spacer_ltlm(&config.stack, config.l_c, l0, &GuardThresholds::default()).value)
        }
        // the full-metal strip only has the oracle value; shift it by its exact slope in l_0
        (Baseline::HrTlm, McSource::ClosedForm, Flavor::HrRtlm) => {
            Ok(nom.deembed + sensitivity_l0_hrtlm(&config.stack) * delta)
        }
        (Baseline::HrTlm, McSource::Oracle { n_segments }, flavor) => {
            let map = deembed_map(flavor, config.l_c, l0)?;
            Ok(oracle_resistance(&config.stack, &map, n_segments)?.0)
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn gauss(rng: &mut ChaCha8Rng, sd: f64, enabled: bool) -> f64 {
    // always draw so that each entry keeps its position in the stream
    let z: f64 = StandardNormal.sample(rng);
    if enabled {
        z * sd
    } else {
        0.0
    }
}

enum Trial {
    Ok(f64),
    Below,
    Failed,
}

fn run_trial(config: &McConfig, budget: &UncertaintyBudget, nom: &Nominal, slope_nom: f64, trial: usize) -> Trial {
    let p = config.perturb;
    let mut rng = trial_rng(config.seed, trial);
    let e_rs = gauss(&mut rng, budget.d_r_shs, p.sheets);
    let e_rm = gauss(&mut rng, budget.d_r_shm, p.sheets);
    let e_value = gauss(&mut rng, budget.d_value_at_ref, p.value_at_ref);
    let e_slope = gauss(&mut rng, budget.d_slope.absolute(slope_nom), p.slope);
    let e_l0 = gauss(&mut rng, budget.d_l0, p.l0);
    let noise: Vec<f64> = nom
        .lengths
        .iter()
        .map(|_| gauss(&mut rng, budget.sigma_r, p.noise))
        .collect();

    let reference = config.flavor.reference(config.l_0);
    let deembed = match deembed_at(config, nom, e_l0) {
        Ok(d) => d - e_value,
        Err(_) => return Trial::Failed,
    };
    let pairs: Vec<(f64, f64)> = nom
        .lengths
        .iter()
        .zip(&nom.resistances)
        .zip(&noise)
        .map(|((&x, &r), &n)| (x, r + e_slope * (x - reference) + n))
        .collect();
    let series = match MeasurementSeries::from_pairs(config.flavor, &pairs, deembed.max(0.0), config.l_0, &config.stack) {
        Ok(s) => s.with_sheets(config.stack.r_shs() + e_rs, config.stack.r_shm() + e_rm),
        Err(_) => return Trial::Failed,
    };
    match extract(&series) {
        Ok(r) if r.below_resolution => Trial::Below,
        Ok(r) => Trial::Ok(r.rho_c),
        Err(_) => Trial::Failed,
    }
}

/// Repeats the extraction under Gaussian perturbations drawn from `budget`.
///
/// Trial `k` draws from the ChaCha8 stream `k` of `seed`, so results do not
/// depend on the thread count.
pub fn monte_carlo(config: &McConfig, budget: &UncertaintyBudget) -> Result<McOutcome> {
    config.validate()?;
    budget.validate()?;
    let nom = nominal(config)?;
    let slope_nom = nominal_fit_slope(config, &nom)?;
    let results: Vec<Trial> = (0..config.trials)
        .into_par_iter()
        .map(|k| run_trial(config, budget, &nom, slope_nom, k))
        .collect();

    let mut values = Vec::with_capacity(results.len());
    let mut per_trial = Vec::with_capacity(results.len());
    let (mut failed, mut below) = (0, 0);
    for t in results {
        match t {
            Trial::Ok(v) => {
                values.push(v);
                per_trial.push(Some(v));
            }
            Trial::Below => {
                below += 1;
                values.push(0.0);
                per_trial.push(Some(0.0));
            }
            Trial::Failed => {
                failed += 1;
                per_trial.push(None);
            }
        }
    }
    Ok(McOutcome {
        summary: summarize(config.trials, &values, failed, below),
        per_trial,
    })
}

fn nominal_fit_slope(config: &McConfig, nom: &Nominal) -> Result<f64> {
    let ys: Vec<f64> = nom.resistances.iter().map(|r| r - nom.deembed).collect();
    Ok(fit_line(&nom.lengths, &ys, None, config.flavor.reference(config.l_0))?.slope)
}

fn summarize(trials: usize, values: &[f64], failed: usize, below: usize) -> McSummary {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mean, std) = mean_std(values);
    McSummary {
        trials,
        succeeded: n,
        failed,
        below_resolution: below,
        mean,
        std,
        p05: quantile(&sorted, 0.05),
        p50: quantile(&sorted, 0.5),
        p95: quantile(&sorted, 0.95),
        min: sorted.first().copied().unwrap_or(f64::NAN),
        max: sorted.last().copied().unwrap_or(f64::NAN),
        wide_ci: n < 2 || 1.0 / (2.0 * (n as f64 - 1.0)).sqrt() > 0.05,
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(it: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in it {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Mean and sample standard deviation, shifted by the first value so that
/// identical inputs give exactly zero spread.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let shift = values[0];
    let d_mean = compensated_sum(values.iter().map(|v| v - shift)) / n as f64;
    let mean = shift + d_mean;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - shift - d_mean).powi(2)));
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// First-order prediction of the Monte Carlo spread for `config` (ohm·m²).
///
/// Per-point noise enters through the ordinary least-squares standard errors
/// and `l_0` variation through the de-embed sensitivity of the baseline; both
/// add in quadrature to the matching budget entries.
pub fn analytic_prediction(config: &McConfig, budget: &UncertaintyBudget) -> Result<f64> {
    config.validate()?;
    let nom = nominal(config)?;
    let reference = config.flavor.reference(config.l_0);
    let ys: Vec<f64> = nom.resistances.iter().map(|r| r - nom.deembed).collect();
    let fit = fit_line(&nom.lengths, &ys, None, reference)?;
    let p = config.perturb;
    let on = |flag: bool, v: f64| if flag { v } else { 0.0 };

    let n = nom.lengths.len() as f64;
    let xm = nom.lengths.iter().sum::<f64>() / n;
    let sxx: f64 = nom.lengths.iter().map(|x| (x - xm).powi(2)).sum();
    let sigma = on(p.noise, budget.sigma_r);
    let noise_slope = sigma / sxx.sqrt();
    let noise_value = sigma * (1.0 / n + (reference - xm).powi(2) / sxx).sqrt();

    let l0_sens = match config.baseline {
        Baseline::HrTlm => sensitivity_l0_hrtlm(&config.stack),
        Baseline::RLtlm => sensitivity_l0_rltlm(&config.stack),
    };
    let d_value = on(p.value_at_ref, budget.d_value_at_ref)
        .hypot(noise_value)
        .hypot(on(p.l0, l0_sens * budget.d_l0));
    let d_slope = on(p.slope, budget.d_slope.absolute(fit.slope)).hypot(noise_slope);
    let combined = UncertaintyBudget {
        d_r_shs: on(p.sheets, budget.d_r_shs),
        d_r_shm: on(p.sheets, budget.d_r_shm),
        d_slope: SlopeUncertainty::Absolute(d_slope),
        d_value_at_ref: d_value,
        d_l0: 0.0,
        sigma_r: 0.0,
    };
    propagate_error(
        config.flavor,
        &fit,
        config.stack.r_shs(),
        config.stack.r_shm(),
        &combined,
        PropagationForm::FirstOrder,
    )
}
