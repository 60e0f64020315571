//! Panel-based Gauss–Legendre quadrature on a truncated interval and its
//! tensor product over the plane.
//!
//! Integrals over the whole real line (or plane) are replaced by integrals
//! over `[-L, L]` (or a box), with `L` chosen large enough that the omitted
//! tails sit below the working tolerances. Each interval is split into
//! panels and an `m`-point Gauss–Legendre rule is mapped onto every panel,
//! so kinked integrands can be isolated by inserting panel boundaries at the
//! kink locations.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on the reference interval `[-1, 1]`.
///
/// Nodes are computed by Newton iteration on the Legendre polynomial
/// `P_m`, seeded with the Chebyshev-like initial guess; iteration stops when
/// the node residual falls below 1e-14.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::config("Gauss rule needs at least one node"));
        }
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let n = m as f64;
        // Only the lower half is computed; the rule is symmetric.
        for i in 0..(m + 1) / 2 {
            let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-14 {
                    break;
                }
            }
            let (_, d) = legendre_with_deriv(m, x);
            dp = d;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            weights[i] = w;
            nodes[m - 1 - i] = -x;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Ok(GaussRule { nodes, weights })
    }

    /// Integrate `f` over `[lo, hi]` with this rule mapped affinely.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let mut terms = Vec::with_capacity(self.nodes.len());
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            terms.push(w * h * f(c + h * x));
        }
        pairwise_sum(&terms)
    }
}

/// Value and derivative of the Legendre polynomial `P_m` at `x`.
fn legendre_with_deriv(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise (cascade) summation; deterministic and accurate to ~1e-15 relative
/// independent of how the terms were produced.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        2 => terms[0] + terms[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
        }
    }
}

/// A composite Gauss–Legendre rule on `[-L, L]`.
#[derive(Debug, Clone)]
pub struct Grid1D {
    /// Truncation radius.
    pub trunc: f64,
    /// Sorted panel boundaries, first `-L`, last `L`, containing every
    /// mandatory split that fell strictly inside the interval.
    pub boundaries: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Nodes per panel.
    pub rule_m: usize,
    base_panels: usize,
}

impl Grid1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Width the base panels would have without mandatory splits; inner
    /// integrals reuse it as their resolution target.
    pub fn panel_width(&self) -> f64 {
        2.0 * self.trunc / self.base_panels as f64
    }

    pub fn panels(&self) -> usize {
        self.base_panels
    }
}

/// Build a composite rule on `[-L, L]`: `panels` equal panels, plus a panel
/// boundary at every mandatory split strictly inside the interval.
pub fn build_grid1(trunc: f64, m: usize, panels: usize, mandatory_splits: &[f64]) -> Result<Grid1D> {
    if !(trunc > 0.0) || !trunc.is_finite() {
        return Err(Error::config(format!("truncation radius must be positive, got {trunc}")));
    }
    if m < 2 {
        return Err(Error::config(format!("nodes per panel must be >= 2, got {m}")));
    }
    if panels < 1 {
        return Err(Error::config("panel count must be >= 1"));
    }
    let mut boundaries: Vec<f64> = (0..=panels)
        .map(|i| -trunc + 2.0 * trunc * i as f64 / panels as f64)
        .collect();
    for &s in mandatory_splits {
        if s > -trunc && s < trunc && boundaries.iter().all(|&b| (b - s).abs() > 1e-12) {
            boundaries.push(s);
        }
    }
    boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let rule = GaussRule::new(m)?;
    let mut nodes = Vec::with_capacity(m * (boundaries.len() - 1));
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in boundaries.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push(c + h * x);
            weights.push(w * h);
        }
    }
    Ok(Grid1D { trunc, boundaries, nodes, weights, rule_m: m, base_panels: panels })
}

/// Tensor product of two 1-D grids, row-major with axis 0 outermost.
#[derive(Debug, Clone)]
pub struct Grid2D {
    pub axis0: Grid1D,
    pub axis1: Grid1D,
    /// Flattened nodes `(z0, z1)`.
    pub nodes: Vec<(f64, f64)>,
    /// Flattened product weights.
    pub weights: Vec<f64>,
}

impl Grid2D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn build_grid2(axis0: Grid1D, axis1: Grid1D) -> Grid2D {
    let q = axis0.len() * axis1.len();
    let mut nodes = Vec::with_capacity(q);
    let mut weights = Vec::with_capacity(q);
    for (z0, w0) in axis0.nodes.iter().zip(&axis0.weights) {
        for (z1, w1) in axis1.nodes.iter().zip(&axis1.weights) {
            nodes.push((*z0, *z1));
            weights.push(w0 * w1);
        }
    }
    Grid2D { axis0, axis1, nodes, weights }
}

/// Weighted node sum over a 1-D grid. Errors if the integrand produces a
/// non-finite value, reporting the offending node.
pub fn integrate1<F: FnMut(f64) -> f64>(grid: &Grid1D, mut f: F) -> Result<f64> {
    let mut terms = Vec::with_capacity(grid.len());
    for (&z, &w) in grid.nodes.iter().zip(&grid.weights) {
        let v = f(z);
        if !v.is_finite() {
            return Err(Error::non_finite_at(z, f64::NAN, v));
        }
        terms.push(w * v);
    }
    Ok(pairwise_sum(&terms))
}

/// Weighted node sum over a 2-D grid.
pub fn integrate2<F: FnMut(f64, f64) -> f64>(grid: &Grid2D, mut f: F) -> Result<f64> {
    let mut terms = Vec::with_capacity(grid.len());
    for (&(z0, z1), &w) in grid.nodes.iter().zip(&grid.weights) {
        let v = f(z0, z1);
        if !v.is_finite() {
            return Err(Error::non_finite_at(z0, z1, v));
        }
        terms.push(w * v);
    }
    Ok(pairwise_sum(&terms))
}

/// Composite Gauss integration of `f` over `[lo, hi]` with interior break
/// points isolated as panel boundaries and long segments subdivided so no
/// panel exceeds `max_width`.
///
/// This is the workhorse behind the collapsed 1-D integrals of the iterated
/// kernel, whose integrands have break points that move with the evaluation
/// point and therefore cannot be baked into a fixed grid.
pub fn integrate_segmented<F: FnMut(f64) -> f64>(
    rule: &GaussRule,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    max_width: f64,
    mut f: F,
) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let mut cuts = vec![lo];
    let mut sorted: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.extend(sorted);
    cuts.push(hi);

    let mut acc = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a < 1e-300 {
            continue;
        }
        let sub = ((b - a) / max_width).ceil().max(1.0) as usize;
        for k in 0..sub {
            let pa = a + (b - a) * k as f64 / sub as f64;
            let pb = a + (b - a) * (k + 1) as f64 / sub as f64;
            acc.push(rule.integrate(pa, pb, &mut f));
        }
    }
    pairwise_sum(&acc)
}
