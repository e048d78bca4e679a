//! Two-rail resistor ladder and its nodal solve.

use crate::error::{Error, Result, Warning};
use crate::ltlm::{CurrentProfile, Rail};
use crate::params::{transfer_length, SheetStack};

use super::banded::BandedSpd;
use super::region::RegionMap;

/// Smallest segment count accepted by [`build_network`].
pub const MIN_SEGMENTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Lateral resistor of one rail across grid cell `cell`.
    Horizontal { rail: Rail, cell: usize },
    /// Contact resistor between the rails at grid line `line`.
    Vertical { line: usize },
    /// Edge of a hand-built network with no grid meaning.
    Lumped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// Conductance in siemens.
    pub g: f64,
    pub kind: EdgeKind,
}

/// Node indices present at one grid line.
///
/// At a zero-width partition the metal rail has two nodes, `metal_left`
/// (attached to the cell on the left) and `metal_right`. When the rails are
/// shorted (`rho_c = 0`) the metal entries alias the semiconductor node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineNodes {
    pub semi: usize,
    pub metal_left: Option<usize>,
    pub metal_right: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct DiscreteNetwork {
    n_nodes: usize,
    edges: Vec<Edge>,
    terminals: (usize, usize),
    terminal_rails: (Rail, Rail),
    n_segments: usize,
    dx: f64,
    lines: Vec<LineNodes>,
    pub warnings: Vec<Warning>,
}

impl DiscreteNetwork {
    /// Hand-built network without grid structure; terminal `a` receives the
    /// injected current and terminal `b` is grounded.
    pub fn from_edges(n_nodes: usize, edges: Vec<(usize, usize, f64)>, terminals: (usize, usize)) -> Result<Self> {
        if terminals.0 >= n_nodes || terminals.1 >= n_nodes || terminals.0 == terminals.1 {
            return Err(Error::InvalidRegionMap("terminal index out of range".into()));
        }
        let edges = edges
            .into_iter()
            .map(|(a, b, g)| {
                if a >= n_nodes || b >= n_nodes || a == b || !(g >= 0.0) {
                    Err(Error::InvalidRegionMap(format!("bad edge ({a}, {b}, {g})")))
                } else {
                    Ok(Edge {
                        a,
                        b,
                        g,
                        kind: EdgeKind::Lumped,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_nodes,
            edges,
            terminals,
            terminal_rails: (Rail::Metal, Rail::Metal),
            n_segments: 0,
            dx: 0.0,
            lines: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn lines(&self) -> &[LineNodes] {
        &self.lines
    }

    pub fn terminals(&self) -> (usize, usize) {
        self.terminals
    }

    /// Dense copy of the nodal conductance matrix (no grounding). Only meant
    /// for small networks in tests.
    pub fn conductance_matrix(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n_nodes]; self.n_nodes];
        for e in &self.edges {
            if e.a == e.b {
                continue;
            }
            m[e.a][e.a] += e.g;
            m[e.b][e.b] += e.g;
            m[e.a][e.b] -= e.g;
            m[e.b][e.a] -= e.g;
        }
        m
    }
}

/// Discretizes `map` into `n_segments` uniform cells.
///
/// Per cell of width `dx` the rails carry `r_shm·dx/W` and `r_shs·dx/W`; each
/// metal node couples to the semiconductor below through `rho_c/(W·a)`, where
/// `a` is the half-cell area it owns on each metal side.
pub fn build_network(stack: &SheetStack, map: &RegionMap, n_segments: usize) -> Result<DiscreteNetwork> {
    if n_segments < MIN_SEGMENTS {
        return Err(Error::InvalidParameter {
            name: "n_segments",
            value: n_segments as f64,
            reason: "must be >= 100",
        });
    }
    let n = n_segments;
    let length = map.total_length();
    let dx = length / n as f64;
    let w = stack.width();

    let mut cell_island: Vec<Option<usize>> = vec![None; n];
    for (k, &(a, b)) in map.metal().iter().enumerate() {
        let lo = ((a / dx).round() as usize).min(n);
        let hi = ((b / dx).round() as usize).min(n);
        for c in cell_island.iter_mut().take(hi).skip(lo) {
            *c = Some(k);
        }
    }

    let shorted = stack.rho_c() == 0.0;
    let mut lines = Vec::with_capacity(n + 1);
    let mut count = 0usize;
    for i in 0..=n {
        let semi = count;
        count += 1;
        let left = if i > 0 { cell_island[i - 1] } else { None };
        let right = if i < n { cell_island[i] } else { None };
        let (metal_left, metal_right) = if shorted {
            (left.map(|_| semi), right.map(|_| semi))
        } else {
            match (left, right) {
                (Some(l), Some(r)) if l != r => {
                    count += 2;
                    (Some(semi + 1), Some(semi + 2))
                }
                (None, None) => (None, None),
                (l, r) => {
                    count += 1;
                    (l.map(|_| semi + 1), r.map(|_| semi + 1))
                }
            }
        };
        lines.push(LineNodes {
            semi,
            metal_left,
            metal_right,
        });
    }

    let mut edges = Vec::with_capacity(4 * n);
    let g_semi = w / (stack.r_shs() * dx);
    let g_metal = w / (stack.r_shm() * dx);
    for c in 0..n {
        edges.push(Edge {
            a: lines[c].semi,
            b: lines[c + 1].semi,
            g: g_semi,
            kind: EdgeKind::Horizontal {
                rail: Rail::Semiconductor,
                cell: c,
            },
        });
        if cell_island[c].is_some() {
            edges.push(Edge {
                a: lines[c].metal_right.expect("metal node right of cell"),
                b: lines[c + 1].metal_left.expect("metal node left of cell"),
                g: g_metal,
                kind: EdgeKind::Horizontal {
                    rail: Rail::Metal,
                    cell: c,
                },
            });
        }
    }
    if !shorted && stack.rho_c().is_finite() {
        let g_half = w * (dx / 2.0) / stack.rho_c();
        for (i, ln) in lines.iter().enumerate() {
            match (ln.metal_left, ln.metal_right) {
                (Some(l), Some(r)) if l == r => edges.push(Edge {
                    a: l,
                    b: ln.semi,
                    g: 2.0 * g_half,
                    kind: EdgeKind::Vertical { line: i },
                }),
                (l, r) => {
                    for m in [l, r].into_iter().flatten() {
                        edges.push(Edge {
                            a: m,
                            b: ln.semi,
                            g: g_half,
                            kind: EdgeKind::Vertical { line: i },
                        });
                    }
                }
            }
        }
    }

    let terminal_node = |rail: Rail, ln: &LineNodes, metal: Option<usize>| -> Result<usize> {
        match rail {
            Rail::Semiconductor => Ok(ln.semi),
            Rail::Metal => metal.ok_or_else(|| {
                Error::InvalidRegionMap("metal terminal has no metal node after discretization".into())
            }),
        }
    };
    let (lr, rr) = map.terminals();
    let left = terminal_node(lr, &lines[0], lines[0].metal_right)?;
    let right = terminal_node(rr, &lines[n], lines[n].metal_left)?;

    let mut warnings = Vec::new();
    let lt = transfer_length(stack).meters();
    if !map.metal().is_empty() && lt > 0.0 && lt.is_finite() && dx > lt / 5.0 {
        warnings.push(Warning::CoarseGrid {
            dx,
            transfer_length: lt,
        });
    }

    Ok(DiscreteNetwork {
        n_nodes: count,
        edges,
        terminals: (left, right),
        terminal_rails: (lr, rr),
        n_segments: n,
        dx,
        lines,
        warnings,
    })
}

/// Result of a nodal solve with current injected at the left terminal and
/// the right terminal grounded.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// `(V_left − V_right)/I_0`, ohms.
    pub resistance: f64,
    pub injected: f64,
    /// Node potentials in volts; `NaN` for nodes floating apart from the terminals.
    pub potentials: Vec<f64>,
    /// Metal-rail current through each grid cell, left to right.
    pub metal_current: Vec<f64>,
    /// Semiconductor-rail current through each grid cell, left to right.
    pub semi_current: Vec<f64>,
    /// Largest Kirchhoff current-law imbalance over all nodes, amperes.
    pub kcl_residual: f64,
    pub dx: f64,
    pub lines: Vec<LineNodes>,
    pub terminal_rails: (Rail, Rail),
}

impl OracleSolution {
    /// Potential of `rail` at grid line `line`. At a partition the metal value
    /// is taken on the side given by `from_left`.
    pub fn rail_potential(&self, line: usize, rail: Rail, from_left: bool) -> Option<f64> {
        let ln = self.lines.get(line)?;
        let node = match rail {
            Rail::Semiconductor => Some(ln.semi),
            Rail::Metal if from_left => ln.metal_left.or(ln.metal_right),
            Rail::Metal => ln.metal_right.or(ln.metal_left),
        }?;
        Some(self.potentials[node])
    }

    /// Largest `|I_m + I_s − I_0|` over all cross-sections, amperes.
    pub fn conservation_residual(&self) -> f64 {
        self.metal_current
            .iter()
            .zip(&self.semi_current)
            .map(|(m, s)| (m + s - self.injected).abs())
            .fold(0.0, f64::max)
    }

    pub fn total_length(&self) -> f64 {
        self.dx * self.metal_current.len() as f64
    }
}

pub fn solve(network: &DiscreteNetwork) -> Result<OracleSolution> {
    solve_with_current(network, 1.0)
}

pub fn solve_with_current(network: &DiscreteNetwork, injected: f64) -> Result<OracleSolution> {
    let (src, gnd) = network.terminals;
    let n = network.n_nodes;

    // component containing the source
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in network.edges.iter().filter(|e| e.g > 0.0) {
        let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let root = find(&mut parent, src);
    if find(&mut parent, gnd) != root {
        return Err(Error::UnsolvableTopology(
            "no conducting path between the terminals".into(),
        ));
    }
    let active: Vec<bool> = (0..n).map(|i| find(&mut parent, i) == root).collect();

    // compact numbering of the unknowns, order preserved so the band stays narrow
    let mut unknown = vec![usize::MAX; n];
    let mut m = 0usize;
    for i in 0..n {
        if active[i] && i != gnd {
            unknown[i] = m;
            m += 1;
        }
    }
    let live = |e: &Edge| e.g > 0.0 && e.a != e.b && active[e.a];
    let bw = network
        .edges
        .iter()
        .filter(|e| live(e) && e.a != gnd && e.b != gnd)
        .map(|e| unknown[e.a].abs_diff(unknown[e.b]))
        .max()
        .unwrap_or(0);

    let mut a = BandedSpd::zeros(m, bw);
    for e in network.edges.iter().filter(|e| live(e)) {
        let (ua, ub) = (unknown[e.a], unknown[e.b]);
        if e.a != gnd {
            a.add(ua, ua, e.g);
        }
        if e.b != gnd {
            a.add(ub, ub, e.g);
        }
        if e.a != gnd && e.b != gnd {
            a.add(ua, ub, -e.g);
        }
    }
    let ldlt = a.factor()?;

    let mut rhs = vec![0.0; m];
    rhs[unknown[src]] = injected;
    let mut x = ldlt.solve(&rhs);

    let potentials_of = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if i == gnd {
                    0.0
                } else if active[i] {
                    x[unknown[i]]
                } else {
                    f64::NAN
                }
            })
            .collect()
    };
    // residual in branch-difference form, which keeps cancellation local
    let residual = |v: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; n];
        r[src] = injected;
        for e in network.edges.iter().filter(|e| live(e)) {
            let flow = e.g * (v[e.a] - v[e.b]);
            r[e.a] -= flow;
            r[e.b] += flow;
        }
        r
    };

    for _ in 0..2 {
        let v = potentials_of(&x);
        let r = residual(&v);
        let r_unknown: Vec<f64> = (0..n).filter(|&i| unknown[i] != usize::MAX).map(|i| r[i]).collect();
        let corr = ldlt.solve(&r_unknown);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += ci;
        }
    }

    let potentials = potentials_of(&x);
    let r = residual(&potentials);
    let kcl_residual = r
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != gnd && active[i])
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);

    let cells = network.n_segments;
    let mut metal_current = vec![0.0; cells];
    let mut semi_current = vec![0.0; cells];
    for e in network.edges.iter().filter(|e| live(e)) {
        if let EdgeKind::Horizontal { rail, cell } = e.kind {
            let flow = e.g * (potentials[e.a] - potentials[e.b]);
            match rail {
                Rail::Metal => metal_current[cell] += flow,
                Rail::Semiconductor => semi_current[cell] += flow,
            }
        }
    }

    Ok(OracleSolution {
        resistance: (potentials[src] - potentials[gnd]) / injected,
        injected,
        potentials,
        metal_current,
        semi_current,
        kcl_residual,
        dx: network.dx,
        lines: network.lines.clone(),
        terminal_rails: network.terminal_rails,
    })
}

/// Fraction of the injected current carried by `rail` at each cross-section.
///
/// Samples sit at the cell centers, plus the two terminal lines where the
/// whole current is on the terminal rail.
pub fn current_profile(solution: &OracleSolution, rail: Rail) -> CurrentProfile {
    let cells = match rail {
        Rail::Metal => &solution.metal_current,
        Rail::Semiconductor => &solution.semi_current,
    };
    let n = cells.len();
    let mut x = Vec::with_capacity(n + 2);
    let mut fraction = Vec::with_capacity(n + 2);
    let edge = |r: Rail| if r == rail { 1.0 } else { 0.0 };
    x.push(0.0);
    fraction.push(edge(solution.terminal_rails.0));
    for (c, i) in cells.iter().enumerate() {
        x.push((c as f64 + 0.5) * solution.dx);
        fraction.push(i / solution.injected);
    }
    x.push(n as f64 * solution.dx);
    fraction.push(edge(solution.terminal_rails.1));
    CurrentProfile { rail, x, fraction }
}
