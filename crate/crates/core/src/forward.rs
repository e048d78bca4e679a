//! Forward generation of measurement series, from the closed forms or from
//! the network oracle.

use rayon::prelude::*;

use crate::error::{Result, Warning};
use crate::extraction::{Flavor, MeasurementSeries};
use crate::ltlm::{r_no_spacer_ltlm, rt_ltlm, slope_ltlm};
use crate::oracle::{richardson_refine, RegionMap};
use crate::params::{GuardThresholds, LtlmGeometry, RtlmGeometry, SheetStack};
use crate::rtlm::rt_rtlm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    ClosedForm,
    Oracle,
}

/// What to simulate: one structure family over a list of sweep lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub flavor: Flavor,
    pub stack: SheetStack,
    /// Outer contact length of the ladder flavor; unused for RTLM, where the
    /// contact length follows from `l_0` and the spacer.
    pub l_c: f64,
    pub l_0: f64,
    /// Sweep lengths in meters: spacer `l_s` (RTLM) or ladder `l_g` (LTLM).
    pub lengths: Vec<f64>,
    /// Base segment count for oracle solves.
    pub n_segments: usize,
}

/// Simulated total resistances and de-embed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub lengths: Vec<f64>,
    pub resistances: Vec<f64>,
    pub deembed: f64,
    pub warnings: Vec<Warning>,
}

impl Simulated {
    pub fn into_series(self, spec: &SweepSpec) -> Result<MeasurementSeries> {
        let pairs: Vec<(f64, f64)> = self.lengths.iter().copied().zip(self.resistances.iter().copied()).collect();
        MeasurementSeries::from_pairs(spec.flavor, &pairs, self.deembed, spec.l_0, &spec.stack)
    }
}

/// Default sweep: `count` lengths uniformly spaced over `[lo, hi]`.
pub fn uniform_sweep(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => (0..count)
            .map(|k| if k + 1 == count { hi } else { lo + (hi - lo) * k as f64 / (count - 1) as f64 })
            .collect(),
    }
}

/// Oracle terminal resistance of a single map, grid-refined.
pub fn oracle_resistance(stack: &SheetStack, map: &RegionMap, n_segments: usize) -> Result<(f64, Vec<Warning>)> {
    let refined = richardson_refine(stack, map, n_segments)?;
    Ok((refined.value, refined.warnings))
}

pub fn test_structure_map(flavor: Flavor, l_c: f64, l_0: f64, length: f64) -> Result<RegionMap> {
    match flavor {
        Flavor::HrLtlm => RegionMap::ltlm_test(l_c, l_0, length),
        Flavor::HrRtlm => {
            let geom = RtlmGeometry::from_spacer(length, l_0)?;
            RegionMap::rtlm_spacer(geom.l_c(), geom.l_s())
        }
    }
}

pub fn deembed_map(flavor: Flavor, l_c: f64, l_0: f64) -> Result<RegionMap> {
    match flavor {
        Flavor::HrLtlm => RegionMap::no_spacer(l_c, l_0),
        Flavor::HrRtlm => RegionMap::full_metal(l_0),
    }
}

/// Evaluates the sweep. The RTLM de-embed structure has no closed form, so
/// it always comes from the oracle.
pub fn simulate(spec: &SweepSpec, source: Source) -> Result<Simulated> {
    let guards = GuardThresholds::default();
    let stack = &spec.stack;
    let mut warnings = Vec::new();
    let resistances: Vec<f64> = match (source, spec.flavor) {
        (Source::ClosedForm, Flavor::HrLtlm) => {
            let slope = slope_ltlm(stack);
            let mut out = Vec::with_capacity(spec.lengths.len());
            for &lg in &spec.lengths {
                let geom = LtlmGeometry::from_ladder(spec.l_c, lg, spec.l_0)?;
                let r = rt_ltlm(stack, &geom, slope, &guards);
                merge(&mut warnings, r.warnings);
                out.push(r.value);
            }
            out
        }
        (Source::ClosedForm, Flavor::HrRtlm) => spec
            .lengths
            .iter()
            .map(|&ls| RtlmGeometry::from_spacer(ls, spec.l_0).map(|g| rt_rtlm(stack, &g)))
            .collect::<Result<_>>()?,
        (Source::Oracle, flavor) => {
            let solved: Vec<(f64, Vec<Warning>)> = spec
                .lengths
                .par_iter()
                .map(|&len| {
                    let map = test_structure_map(flavor, spec.l_c, spec.l_0, len)?;
                    oracle_resistance(stack, &map, spec.n_segments)
                })
                .collect::<Result<_>>()?;
            solved
                .into_iter()
                .map(|(r, w)| {
                    merge(&mut warnings, w);
                    r
                })
                .collect()
        }
    };
    let deembed = match (source, spec.flavor) {
        (Source::ClosedForm, Flavor::HrLtlm) => {
            let r = r_no_spacer_ltlm(stack, spec.l_c, spec.l_0, &guards);
            merge(&mut warnings, r.warnings);
            r.value
        }
        (_, flavor) => {
            let (r, w) = oracle_resistance(stack, &deembed_map(flavor, spec.l_c, spec.l_0)?, spec.n_segments)?;
            merge(&mut warnings, w);
            r
        }
    };
    Ok(Simulated {
        lengths: spec.lengths.clone(),
        resistances,
        deembed,
        warnings,
    })
}

fn merge(into: &mut Vec<Warning>, from: Vec<Warning>) {
    for w in from {
        if !into.contains(&w) {
            into.push(w);
        }
    }
}
