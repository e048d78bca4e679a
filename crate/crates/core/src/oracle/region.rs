//! Structural maps of the one-dimensional two-rail structures.

use crate::error::{Error, Result};
use crate::ltlm::Rail;

/// Where the metal rail exists along a structure of length `total_length`.
///
/// The semiconductor rail is continuous over the whole length. Metal and
/// semiconductor are coupled through the contact resistivity wherever metal
/// exists. Two metal intervals that touch (`b_k == a_{k+1}`) are separated by
/// a zero-width partition.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    total_length: f64,
    metal: Vec<(f64, f64)>,
    terminals: (Rail, Rail),
}

impl RegionMap {
    pub fn new(total_length: f64, metal: Vec<(f64, f64)>, terminals: (Rail, Rail)) -> Result<Self> {
        if !(total_length.is_finite() && total_length > 0.0) {
            return Err(Error::InvalidRegionMap(format!(
                "total length must be positive, got {total_length:e}"
            )));
        }
        let slack = 1e-12 * total_length;
        let mut prev_end = 0.0;
        for (k, &(a, b)) in metal.iter().enumerate() {
            if !(a < b) {
                return Err(Error::InvalidRegionMap(format!("interval {k} [{a:e}, {b:e}) is empty")));
            }
            if a < prev_end - slack || a < -slack || b > total_length + slack {
                return Err(Error::InvalidRegionMap(format!(
                    "interval {k} [{a:e}, {b:e}) overlaps its predecessor or leaves [0, {total_length:e}]"
                )));
            }
            prev_end = b;
        }
        let map = Self {
            total_length,
            metal,
            terminals,
        };
        if terminals.0 == Rail::Metal && !map.metal.first().is_some_and(|&(a, _)| a.abs() <= slack) {
            return Err(Error::InvalidRegionMap(
                "left terminal is on the metal rail but no metal starts at x = 0".into(),
            ));
        }
        if terminals.1 == Rail::Metal
            && !map
                .metal
                .last()
                .is_some_and(|&(_, b)| (b - total_length).abs() <= slack)
        {
            return Err(Error::InvalidRegionMap(
                "right terminal is on the metal rail but no metal reaches the right end".into(),
            ));
        }
        Ok(map)
    }

    /// Metal continuous over the whole length, terminals on metal.
    pub fn full_metal(length: f64) -> Result<Self> {
        Self::new(length, vec![(0.0, length)], (Rail::Metal, Rail::Metal))
    }

    /// Full-metal de-embed structure spanning `2·l_c + l_0`.
    pub fn no_spacer(l_c: f64, l_0: f64) -> Result<Self> {
        Self::full_metal(2.0 * l_c + l_0)
    }

    /// Metal cut by zero-width partitions at `l_c` and `l_c + l_0`.
    pub fn partitioned(l_c: f64, l_0: f64) -> Result<Self> {
        let total = 2.0 * l_c + l_0;
        Self::new(
            total,
            vec![(0.0, l_c), (l_c, l_c + l_0), (l_c + l_0, total)],
            (Rail::Metal, Rail::Metal),
        )
    }

    /// RTLM test structure: metal contacts `[0, l_c)` and `[l_c + l_s, 2·l_c + l_s)`.
    pub fn rtlm_spacer(l_c: f64, l_s: f64) -> Result<Self> {
        let total = 2.0 * l_c + l_s;
        if l_s == 0.0 {
            return Self::new(total, vec![(0.0, l_c), (l_c, total)], (Rail::Metal, Rail::Metal));
        }
        Self::new(
            total,
            vec![(0.0, l_c), (l_c + l_s, total)],
            (Rail::Metal, Rail::Metal),
        )
    }

    /// Ladder test structure: outer contacts of length `l_c`, spacers
    /// `l_s = (l_0 − l_g)/2` and the ladder region `l_g` modeled as a coupled
    /// metal strip. At `l_g = l_0` this is [`RegionMap::partitioned`].
    pub fn ltlm_test(l_c: f64, l_0: f64, l_g: f64) -> Result<Self> {
        if !(l_g >= 0.0 && l_g <= l_0 * (1.0 + 1e-12)) {
            return Err(Error::InvalidRegionMap(format!(
                "ladder length {l_g:e} must lie in [0, l_0 = {l_0:e}]"
            )));
        }
        let total = 2.0 * l_c + l_0;
        let l_s = ((l_0 - l_g) / 2.0).max(0.0);
        let mut metal = vec![(0.0, l_c)];
        if l_g > 0.0 {
            metal.push((l_c + l_s, l_c + l_s + l_g));
        }
        metal.push((l_c + l_0, total));
        Self::new(total, metal, (Rail::Metal, Rail::Metal))
    }

    /// Bare semiconductor strip with semiconductor terminals.
    pub fn semiconductor_only(length: f64) -> Result<Self> {
        Self::new(length, Vec::new(), (Rail::Semiconductor, Rail::Semiconductor))
    }

    /// Left-right reflection.
    pub fn mirrored(&self) -> Self {
        let l = self.total_length;
        Self {
            total_length: l,
            metal: self.metal.iter().rev().map(|&(a, b)| (l - b, l - a)).collect(),
            terminals: (self.terminals.1, self.terminals.0),
        }
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn metal(&self) -> &[(f64, f64)] {
        &self.metal
    }

    pub fn terminals(&self) -> (Rail, Rail) {
        self.terminals
    }

    /// Smallest segment count whose grid lines hit every interval endpoint,
    /// if one exists below `max`.
    pub fn alignment_segments(&self, max: u64) -> Option<u64> {
        let mut q: u64 = 1;
        for &(a, b) in &self.metal {
            for p in [a, b] {
                let f = p / self.total_length;
                let d = rational_denominator(f, 1e-9, max)?;
                q = lcm(q, d);
                if q > max {
                    return None;
                }
            }
        }
        Some(q)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Denominator of the simplest fraction within `tol` of `f` (continued fractions).
fn rational_denominator(f: f64, tol: f64, max: u64) -> Option<u64> {
    let (mut h0, mut h1) = (0.0f64, 1.0f64);
    let (mut k0, mut k1) = (1.0f64, 0.0f64);
    let mut x = f;
    for _ in 0..64 {
        let a = x.floor();
        (h0, h1) = (h1, a * h1 + h0);
        (k0, k1) = (k1, a * k1 + k0);
        if k1 > max as f64 {
            return None;
        }
        if (h1 / k1 - f).abs() <= tol {
            return Some(k1 as u64);
        }
        let frac = x - a;
        if frac.abs() < 1e-15 {
            return Some(k1 as u64);
        }
        x = 1.0 / frac;
    }
    let _ = (h0, k0);
    None
}
