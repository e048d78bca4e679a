//! Brute-force discrete realization of the two-rail structures.
//!
//! A [`RegionMap`] says where the metal rail exists; [`build_network`] turns
//! it into a uniform ladder of lateral rail resistors and vertical contact
//! resistors; [`solve`] runs nodal analysis with a banded LDLᵀ factorization.
//! Nothing here uses the closed forms, so it can check them.

mod banded;
mod network;
mod region;

pub use banded::{BandedLdlt, BandedSpd};
pub use network::{
    build_network, current_profile, solve, solve_with_current, DiscreteNetwork, Edge, EdgeKind,
    LineNodes, OracleSolution, MIN_SEGMENTS,
};
pub use region::RegionMap;

use crate::error::{Error, Result, Warning};
use crate::params::SheetStack;

/// Grid-refined terminal resistance.
#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    /// Extrapolated resistance, or the finest solve if convergence was not monotone.
    pub value: f64,
    /// `|R(2N) − R(N)|`.
    pub error_estimate: f64,
    /// Segment count actually used as the base `N`.
    pub n_base: usize,
    pub coarse: f64,
    pub base: f64,
    pub fine: f64,
    pub warnings: Vec<Warning>,
}

/// Largest grid the alignment search may round `n_base` up to, relative to the request.
const ALIGN_SLACK: usize = 2;

/// Picks a segment count `>= n` whose halving and doubling keep every metal
/// edge on a grid line, when such a count is nearby.
pub fn aligned_segments(map: &RegionMap, n: usize) -> usize {
    match map.alignment_segments((ALIGN_SLACK * n) as u64) {
        Some(q) => {
            let step = 2 * q as usize;
            let aligned = n.div_ceil(step) * step;
            if aligned <= ALIGN_SLACK * n {
                aligned
            } else {
                n
            }
        }
        None => n,
    }
}

/// Solves `map` at `N/2`, `N` and `2N` segments and returns the second-order
/// Richardson extrapolation `R(2N) + (R(2N) − R(N))/3`.
///
/// `N` is rounded up so that metal edges fall on grid lines at every level.
/// If the three solves do not converge monotonically, the `2N` value is
/// returned with a warning.
pub fn richardson_refine(stack: &SheetStack, map: &RegionMap, n_base: usize) -> Result<Refined> {
    if n_base < 2 * MIN_SEGMENTS {
        return Err(Error::InvalidParameter {
            name: "n_base",
            value: n_base as f64,
            reason: "coarsest level must keep at least the minimum segment count",
        });
    }
    let n = aligned_segments(map, n_base);
    let solve_at = |segments: usize| -> Result<(f64, Vec<Warning>)> {
        let net = build_network(stack, map, segments)?;
        let sol = solve(&net)?;
        Ok((sol.resistance, net.warnings))
    };
    let (coarse, (base, fine)) = rayon::join(
        || solve_at(n / 2),
        || rayon::join(|| solve_at(n), || solve_at(2 * n)),
    );
    let (coarse, _) = coarse?;
    let (base, _) = base?;
    let (fine, mut warnings) = fine?;

    let d1 = base - coarse;
    let d2 = fine - base;
    let converged = d2.abs() <= 1e-10 * fine.abs();
    let monotone = d1 * d2 > 0.0 && d2.abs() < d1.abs();
    let value = if converged || monotone {
        fine + d2 / 3.0
    } else {
        warnings.push(Warning::NonMonotoneConvergence {
            coarse_delta: d1,
            fine_delta: d2,
        });
        fine
    };
    Ok(Refined {
        value,
        error_estimate: d2.abs(),
        n_base: n,
        coarse,
        base,
        fine,
        warnings,
    })
}
