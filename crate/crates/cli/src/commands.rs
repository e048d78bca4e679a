use std::path::{Path, PathBuf};

use tlm_forge_core::error_model::{analytic_prediction, monte_carlo, Baseline};
use tlm_forge_core::extraction::{extract, DeembedMeasurement, MeasurementSeries};
use tlm_forge_core::forward::simulate;
use tlm_forge_core::ltlm::{
    im_profile, is_profile_left_part, r_access_plus_contact, r_hrtlm_ltlm, r_no_spacer_ltlm, r_total_partitioned,
    rt_ltlm, slope_ltlm, value_at_l0_ltlm, Rail,
};
use tlm_forge_core::oracle::{
    aligned_segments, build_network, current_profile, richardson_refine, solve, OracleSolution, RegionMap,
    MIN_SEGMENTS,
};
use tlm_forge_core::params::contact_resistance_rtlm;
use tlm_forge_core::{convert_rho_c, transfer_length, GuardThresholds, LtlmGeometry, RhoUnit, SheetStack, Warning, UM};

use crate::config::{source_name, RunConfig};
use crate::data::{self, write_file};
use crate::error::{CliError, CliResult};
use crate::report::{to_json, ExtractReport, McReport, Num, RowStatus, SimulateReport, ValidateReport, ValidateRow};

/// What a command wants printed and which exit status it ends with.
pub struct Output {
    pub stdout: String,
    pub stderr: Vec<String>,
    pub exit_code: u8,
}

pub const EXIT_BELOW_RESOLUTION: u8 = 2;
pub const EXIT_ORACLE_FAILURE: u8 = 3;

impl Output {
    fn new(stdout: String) -> Self {
        Self {
            stdout,
            stderr: Vec::new(),
            exit_code: 0,
        }
    }
}

fn cm2(v: f64) -> f64 {
    convert_rho_c(v, RhoUnit::OhmM2, RhoUnit::OhmCm2)
}

fn warning_strings(ws: &[Warning]) -> Vec<String> {
    ws.iter().map(ToString::to_string).collect()
}

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<Output> {
    let spec = cfg.sweep_spec()?;
    let sim = simulate(&spec, cfg.source)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("measurements.csv"));
    let deembed_path = out.parent().unwrap_or(Path::new("")).join("deembed.csv");
    write_file(&out, &data::points_csv(&sim.lengths, &sim.resistances, None))?;
    write_file(&deembed_path, &data::deembed_csv(sim.deembed, None))?;

    let mut warnings = warning_strings(&sim.warnings);
    if sim.lengths.is_empty() {
        warnings.push("no sweep geometries: wrote a header-only measurement file".into());
    }
    let report = SimulateReport {
        flavor: cfg.flavor.as_str(),
        source: source_name(cfg.source),
        measurements_csv: out.display().to_string(),
        deembed_csv: deembed_path.display().to_string(),
        n_points: sim.lengths.len(),
        deembed_ohm: Num(sim.deembed),
        warnings: warnings.clone(),
    };
    let mut output = Output::new(to_json(&report)?);
    output.stderr = warnings.into_iter().map(|w| format!("warning: {w}")).collect();
    Ok(output)
}

pub enum DeembedInput {
    Value(f64),
    File(PathBuf),
}

pub fn cmd_extract(cfg: &RunConfig, data_path: &Path, deembed: Option<DeembedInput>) -> CliResult<Output> {
    let deembed = match deembed {
        Some(DeembedInput::Value(resistance)) => DeembedMeasurement { resistance, sigma: None },
        Some(DeembedInput::File(path)) => data::load_deembed(&path)?,
        None => {
            return Err(CliError::Invalid(
                "a de-embed resistance is required: pass --deembed-ohm <ohm> or --deembed <deembed.csv>".into(),
            ))
        }
    };
    let points = data::load_points(data_path)?;
    let series = MeasurementSeries::new(
        cfg.flavor,
        points,
        deembed,
        cfg.l_0(),
        cfg.r_shs_ohm_sq,
        cfg.r_shm_ohm_sq,
        cfg.w_um * UM,
    )?
    .with_sheet_uncertainty(cfg.d_r_shs_ohm_sq, cfg.d_r_shm_ohm_sq);
    let r = extract(&series)?;
    let report = ExtractReport {
        flavor: r.flavor.as_str(),
        rho_c_ohm_cm2: Num(r.rho_c_cm2()),
        rho_c_ohm_m2: Num(r.rho_c),
        delta_rho_c_ohm_cm2: Num(r.delta_rho_c_cm2()),
        delta_rho_c_ohm_m2: Num(r.delta_rho_c),
        transfer_length_um: Num(r.transfer_length / UM),
        slope_ohm_per_um: Num(r.fit.slope * UM),
        slope_se_ohm_per_um: Num(r.fit.slope_se * UM),
        reference_um: Num(r.fit.reference / UM),
        value_at_reference_ohm: Num(r.fit.value_at_reference),
        value_se_ohm: Num(r.fit.value_se),
        r_squared: Num(r.fit.r_squared),
        n_points: r.fit.n_points,
        weighted: r.fit.weighted,
        below_resolution: r.below_resolution,
        warnings: warning_strings(&r.warnings),
    };
    let json = to_json(&report)?;
    if let Some(path) = &cfg.out {
        write_file(path, &json)?;
    }
    let mut output = Output::new(json);
    if r.below_resolution {
        output.exit_code = EXIT_BELOW_RESOLUTION;
    }
    output.stderr = report.warnings.iter().map(|w| format!("warning: {w}")).collect();
    Ok(output)
}

struct Check {
    name: &'static str,
    tolerance: f64,
    /// Meaningless without a finite contact resistivity.
    needs_rho: bool,
}

const CHECKS: [Check; 9] = [
    Check { name: "contact_resistance", tolerance: 0.1, needs_rho: true },
    Check { name: "metal_profile_at_lt", tolerance: 1e-3, needs_rho: true },
    Check { name: "full_metal_resistance", tolerance: 1e-3, needs_rho: false },
    Check { name: "semiconductor_profile_at_lt", tolerance: 1e-3, needs_rho: true },
    Check { name: "contact_region_drop", tolerance: 1e-2, needs_rho: false },
    Check { name: "partitioned_resistance", tolerance: 1e-2, needs_rho: false },
    Check { name: "ladder_total_at_half_l0", tolerance: 1e-2, needs_rho: false },
    Check { name: "deembedded_line_at_half_l0", tolerance: 1e-2, needs_rho: false },
    Check { name: "deembedded_value_at_l0", tolerance: 1e-2, needs_rho: true },
];

/// Oracle side of the validation rows, with warnings collected across solves.
struct OracleRuns<'a> {
    stack: &'a SheetStack,
    l_c: f64,
    l_0: f64,
    n: usize,
    warnings: Vec<Warning>,
}

impl OracleRuns<'_> {
    fn refined(&mut self, map: &RegionMap) -> CliResult<f64> {
        let r = richardson_refine(self.stack, map, self.n)?;
        self.note(r.warnings);
        Ok(r.value)
    }

    /// Single solve at the finest refinement level, for profiles and drops.
    fn fine_solution(&mut self, map: &RegionMap) -> CliResult<OracleSolution> {
        let net = build_network(self.stack, map, 2 * aligned_segments(map, self.n))?;
        self.note(net.warnings.clone());
        Ok(solve(&net)?)
    }

    fn note(&mut self, ws: Vec<Warning>) {
        for w in ws {
            if !self.warnings.contains(&w) {
                self.warnings.push(w);
            }
        }
    }

    fn ladder(&mut self, l_g: f64) -> CliResult<f64> {
        let map = RegionMap::ltlm_test(self.l_c, self.l_0, l_g)?;
        self.refined(&map)
    }

    fn evaluate(&mut self, name: &str) -> CliResult<(f64, f64)> {
        let s = *self.stack;
        let g = GuardThresholds::default();
        let (l_c, l_0) = (self.l_c, self.l_0);
        let lt = transfer_length(&s).meters();
        let w_sum = s.width() * s.sheet_sum();
        let parallel = s.r_shs() * s.r_shm() / w_sum;
        Ok(match name {
            "contact_resistance" => {
                // metal terminal to the semiconductor at the end of the contact,
                // less the bulk drop of the two sheets in parallel
                let sol = self.fine_solution(&RegionMap::partitioned(l_c, l_0)?)?;
                let k = (l_c / sol.dx).round() as usize;
                let drop = potential(&sol, 0, Rail::Metal)? - potential(&sol, k, Rail::Semiconductor)?;
                (contact_resistance_rtlm(&s), drop - parallel * l_c)
            }
            "metal_profile_at_lt" => {
                let sol = self.fine_solution(&RegionMap::no_spacer(l_c, l_0)?)?;
                (im_profile(&s, lt)?, current_profile(&sol, Rail::Metal).at(lt))
            }
            "full_metal_resistance" => (
                r_no_spacer_ltlm(&s, l_c, l_0, &g).value,
                self.refined(&RegionMap::no_spacer(l_c, l_0)?)?,
            ),
            "semiconductor_profile_at_lt" => {
                let sol = self.fine_solution(&RegionMap::partitioned(l_c, l_0)?)?;
                (
                    is_profile_left_part(&s, l_c, lt, &g)?.value,
                    current_profile(&sol, Rail::Semiconductor).at(lt),
                )
            }
            "contact_region_drop" => {
                let sol = self.fine_solution(&RegionMap::partitioned(l_c, l_0)?)?;
                let k = (l_c / sol.dx).round() as usize;
                let drop = potential(&sol, 0, Rail::Semiconductor)? - potential(&sol, k, Rail::Semiconductor)?;
                (r_access_plus_contact(&s, l_c, &g).value, drop)
            }
            "partitioned_resistance" => (
                r_total_partitioned(&s, l_c, l_0, &g).value,
                self.refined(&RegionMap::partitioned(l_c, l_0)?)?,
            ),
            "ladder_total_at_half_l0" => {
                let geom = LtlmGeometry::from_ladder(l_c, l_0 / 2.0, l_0)?;
                (rt_ltlm(&s, &geom, slope_ltlm(&s), &g).value, self.ladder(l_0 / 2.0)?)
            }
            "deembedded_line_at_half_l0" => {
                let deembed = self.refined(&RegionMap::no_spacer(l_c, l_0)?)?;
                (r_hrtlm_ltlm(&s, l_0 / 2.0, l_0, &g).value, self.ladder(l_0 / 2.0)? - deembed)
            }
            "deembedded_value_at_l0" => {
                let deembed = self.refined(&RegionMap::no_spacer(l_c, l_0)?)?;
                (value_at_l0_ltlm(&s), self.ladder(l_0)? - deembed)
            }
            other => unreachable!("no validation row named {other}"),
        })
    }
}

fn potential(sol: &OracleSolution, line: usize, rail: Rail) -> CliResult<f64> {
    sol.rail_potential(line, rail, true)
        .ok_or_else(|| CliError::Oracle(format!("no {rail:?} node on grid line {line}")))
}

pub fn cmd_validate(cfg: &RunConfig) -> CliResult<Output> {
    let stack = cfg.stack()?;
    if cfg.n_segments < 2 * MIN_SEGMENTS {
        return Err(CliError::Invalid(format!(
            "n_segments must be at least {}, got {}",
            2 * MIN_SEGMENTS,
            cfg.n_segments
        )));
    }
    let mut runs = OracleRuns {
        stack: &stack,
        l_c: cfg.l_c(),
        l_0: cfg.l_0(),
        n: cfg.n_segments,
        warnings: Vec::new(),
    };
    let finite_rho = stack.rho_c() > 0.0 && stack.rho_c().is_finite();
    let mut rows = Vec::new();
    let mut oracle_failed = false;
    for check in &CHECKS {
        let row = |analytic: f64, oracle: f64, rel: f64, status, detail| ValidateRow {
            name: check.name,
            analytic: Num(analytic),
            oracle: Num(oracle),
            relative_error: Num(rel),
            tolerance: Num(check.tolerance),
            status,
            detail,
        };
        if check.needs_rho && !finite_rho {
            rows.push(row(f64::NAN, f64::NAN, f64::NAN, RowStatus::Skipped, Some("degenerate at rho_c = 0".into())));
            continue;
        }
        match runs.evaluate(check.name) {
            Ok((a, o)) => {
                let rel = if o == 0.0 { (a - o).abs() } else { ((a - o) / o).abs() };
                let status = if rel <= check.tolerance { RowStatus::Pass } else { RowStatus::Fail };
                rows.push(row(a, o, rel, status, None));
            }
            Err(e) => {
                oracle_failed |= matches!(e, CliError::Oracle(_));
                rows.push(row(f64::NAN, f64::NAN, f64::NAN, RowStatus::Error, Some(e.to_string())));
            }
        }
    }
    let report = ValidateReport {
        n_segments: cfg.n_segments,
        rows,
        warnings: warning_strings(&runs.warnings),
    };
    if let Some(path) = &cfg.out {
        write_file(path, &to_json(&report)?)?;
    }
    let mut output = Output::new(validate_table(&report));
    output.stderr = report.warnings.iter().map(|w| format!("warning: {w}")).collect();
    if oracle_failed {
        output.exit_code = EXIT_ORACLE_FAILURE;
    }
    Ok(output)
}

fn validate_table(report: &ValidateReport) -> String {
    let cell = |n: Num| if n.0.is_finite() { format!("{:.6e}", n.0) } else { "-".into() };
    let mut out = format!(
        "{:<28} {:>14} {:>14} {:>11} {:>7}  status\n",
        "row", "analytic", "oracle", "rel_error", "tol"
    );
    for r in &report.rows {
        let status = match r.status {
            RowStatus::Pass => "pass",
            RowStatus::Fail => "FAIL",
            RowStatus::Skipped => "skipped",
            RowStatus::Error => "error",
        };
        out.push_str(&format!(
            "{:<28} {:>14} {:>14} {:>11} {:>7}  {status}",
            r.name,
            cell(r.analytic),
            cell(r.oracle),
            if r.relative_error.0.is_finite() { format!("{:.3e}", r.relative_error.0) } else { "-".into() },
            format!("{:.0e}", r.tolerance.0),
        ));
        if let Some(d) = &r.detail {
            out.push_str(&format!("  ({d})"));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_mc(cfg: &RunConfig) -> CliResult<Output> {
    let config = cfg.mc_config()?;
    let budget = cfg.budget();
    let outcome = monte_carlo(&config, &budget)?;
    let predicted = analytic_prediction(&config, &budget)?;
    let s = outcome.summary;
    let report = McReport {
        flavor: cfg.flavor.as_str(),
        source: source_name(cfg.source),
        baseline: match cfg.baseline {
            Baseline::HrTlm => "hr-tlm",
            Baseline::RLtlm => "r-ltlm",
        },
        seed: cfg.seed,
        trials: s.trials,
        succeeded: s.succeeded,
        failed: s.failed,
        below_resolution: s.below_resolution,
        mean_ohm_cm2: Num(cm2(s.mean)),
        std_ohm_cm2: Num(cm2(s.std)),
        p05_ohm_cm2: Num(cm2(s.p05)),
        p50_ohm_cm2: Num(cm2(s.p50)),
        p95_ohm_cm2: Num(cm2(s.p95)),
        min_ohm_cm2: Num(cm2(s.min)),
        max_ohm_cm2: Num(cm2(s.max)),
        analytic_std_ohm_cm2: Num(cm2(predicted)),
        std_relative_difference: Num(if predicted > 0.0 { (s.std - predicted) / predicted } else { f64::NAN }),
        wide_ci: s.wide_ci,
    };
    let json = to_json(&report)?;
    if let Some(path) = &cfg.out {
        write_file(path, &json)?;
    }
    if let Some(path) = &cfg.per_trial_csv {
        let mut csv = String::from("trial,rho_c_ohm_cm2\n");
        for (k, v) in outcome.per_trial.iter().enumerate() {
            csv.push_str(&match v {
                Some(v) => format!("{k},{}\n", data::fmt_num(cm2(*v))),
                None => format!("{k},\n"),
            });
        }
        write_file(path, &csv)?;
    }
    let mut output = Output::new(json);
    if s.wide_ci {
        output
            .stderr
            .push(format!("warning: {} trials leave the std estimate with a wide confidence interval", s.trials));
    }
    Ok(output)
}
