//! Radial grids, the core weight `b(r)`, the bracket `⟨x⟩`, and the doubly
//! weighted norms.
//!
//! Grids are uniform in `τ = ln r`. Norms are integrated with the trapezoid
//! rule in `τ` using `r dr = r² dτ`, and radial derivatives come from
//! fourth-order differences in `τ`:
//! `f′ = f_τ / r`, `f″ = (f_ττ − f_τ) / r²`.

use std::f64::consts::{LN_2, PI};
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{diff1, diff2};

/// Log-uniform radial nodes on `[r_min, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_min: f64,
    r_max: f64,
    h: f64,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub const DEFAULT_R_MIN: f64 = 1e-4;
    pub const DEFAULT_R_MAX: f64 = 40.0;
    pub const DEFAULT_N_R: usize = 1024;
    pub const MIN_NODES: usize = 16;

    pub fn new(r_min: f64, r_max: f64, n_r: usize) -> Result<Self> {
        if !(r_min.is_finite() && r_min > 0.0) {
            return Err(Error::InvalidGrid(format!("r_min must be positive, got {r_min}")));
        }
        if !(r_max.is_finite() && r_max > r_min) {
            return Err(Error::InvalidGrid(format!("r_max must exceed r_min, got {r_max}")));
        }
        if n_r < Self::MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {} nodes, got {n_r}", Self::MIN_NODES)));
        }
        let t0 = r_min.ln();
        let h = (r_max.ln() - t0) / (n_r - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_r).map(|i| (t0 + h * i as f64).exp()).collect();
        nodes[0] = r_min;
        nodes[n_r - 1] = r_max;
        Ok(Self { r_min, r_max, h, nodes })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Step in `τ`.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.r_min.ln() + self.h * i as f64
    }

    /// Same window with the `τ` step halved; every old node is kept.
    pub fn refined(&self) -> Self {
        Self::new(self.r_min, self.r_max, 2 * self.len() - 1).expect("refinement of a valid grid")
    }

    /// Same window with a different node count.
    pub fn with_nodes(&self, n_r: usize) -> Result<Self> {
        Self::new(self.r_min, self.r_max, n_r)
    }

    /// Nodes at least three away from either end.
    pub fn interior(&self) -> Range<usize> {
        3..self.len() - 3
    }

    /// Index of the node closest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        let x = (r.ln() - self.r_min.ln()) / self.h;
        (x.round().max(0.0) as usize).min(self.len() - 1)
    }
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self::new(Self::DEFAULT_R_MIN, Self::DEFAULT_R_MAX, Self::DEFAULT_N_R).expect("default grid")
    }
}

/// Core exponent `σ` and far-field exponent `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub sigma: f64,
    pub gamma: f64,
}

impl WeightPair {
    pub fn new(sigma: f64, gamma: f64) -> Result<Self> {
        if !sigma.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidWeight(format!("({sigma}, {gamma}) must be finite")));
        }
        Ok(Self { sigma, gamma })
    }

    pub fn shifted(self, d_sigma: f64, d_gamma: f64) -> Self {
        Self { sigma: self.sigma + d_sigma, gamma: self.gamma + d_gamma }
    }
}

/// Which derivative orders pick up the far-field weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceFamily {
    /// `b^{σ+|α|} ⟨x⟩^{γ+|α|}`.
    #[serde(rename = "M_space")]
    M,
    /// `b^{σ+|α|} ⟨x⟩^{γ}`.
    #[serde(rename = "H_space")]
    H,
}

/// A weighted Sobolev space `M^{s,2}` or `H^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceKind {
    pub family: SpaceFamily,
    pub s: u8,
    pub p: u8,
}

impl SpaceKind {
    pub fn new(family: SpaceFamily, s: u8) -> Result<Self> {
        if s > 2 {
            return Err(Error::InvalidGrid(format!("derivative order {s} > 2 is not supported")));
        }
        Ok(Self { family, s, p: 2 })
    }

    pub const fn m(s: u8) -> Self {
        Self { family: SpaceFamily::M, s, p: 2 }
    }

    pub const fn h(s: u8) -> Self {
        Self { family: SpaceFamily::H, s, p: 2 }
    }

    pub const fn l2() -> Self {
        Self::m(0)
    }

    /// Log of the weight applied to derivatives of order `k`.
    fn log_weight(self, w: WeightPair, k: u8, r: f64) -> f64 {
        let k = k as f64;
        let far = match self.family {
            SpaceFamily::M => w.gamma + k,
            SpaceFamily::H => w.gamma,
        };
        (w.sigma + k) * b_unchecked(r).ln() + far * bracket(r).ln()
    }
}

/// `⟨x⟩ = (1 + x²)^{1/2}`.
pub fn bracket(x: f64) -> f64 {
    x.hypot(1.0)
}

/// The core weight: `r` below 1, `1` above 2, a quintic Hermite blend in
/// `ln r` between them.
pub fn weight_b(r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::NonPositiveRadius(r));
    }
    Ok(b_unchecked(r))
}

pub(crate) fn b_unchecked(r: f64) -> f64 {
    if r <= 1.0 {
        r
    } else if r >= 2.0 {
        1.0
    } else {
        let t = r.ln() / LN_2;
        let u = 1.0 - t;
        let h1 = t * u * u * u * (1.0 + 3.0 * t);
        let h2 = 0.5 * t * t * u * u * u;
        1.0 + LN_2 * h1 + LN_2 * LN_2 * h2
    }
}

/// Squared weighted `L²` norms of `|D^k u|` for `k = 0..=s` of the single
/// mode `u = f(r) e^{inθ}`, restricted to `range`. Entries above `s` are zero.
///
/// Per-mode densities:
/// * `|u|² = |f|²`
/// * `|Du|² = |f′|² + n²|f|²/r²`
/// * `|D²u|² = |f″|² + 2n²|f′/r − f/r²|² + |f′/r − n²f/r²|²`
pub fn mode_norm_squares(
    n: i32,
    f: &[Complex64],
    grid: &RadialGrid,
    kind: SpaceKind,
    w: WeightPair,
    range: Range<usize>,
) -> [f64; 3] {
    assert_eq!(f.len(), grid.len(), "samples must live on the grid");
    let mut out = [0.0; 3];
    if range.is_empty() {
        return out;
    }
    let h = grid.h();
    let r = grid.nodes();
    let n2 = (n as f64) * (n as f64);
    let need_d1 = kind.s >= 1;
    let d1 = if need_d1 { diff1(f, h) } else { Vec::new() };
    let d2 = if kind.s >= 2 { diff2(f, h) } else { Vec::new() };
    for k in 0..=kind.s {
        let density = |i: usize| -> f64 {
            let ri = r[i];
            match k {
                0 => f[i].norm_sqr(),
                1 => {
                    let fp = d1[i] / ri;
                    fp.norm_sqr() + n2 * f[i].norm_sqr() / (ri * ri)
                }
                _ => {
                    let fp = d1[i] / ri;
                    let fpp = (d2[i] - d1[i]) / (ri * ri);
                    let mixed = fp / ri - f[i] / (ri * ri);
                    let angular = fp / ri - f[i] * (n2 / (ri * ri));
                    fpp.norm_sqr() + 2.0 * n2 * mixed.norm_sqr() + angular.norm_sqr()
                }
            }
        };
        let integrand = |i: usize| {
            let ri = r[i];
            let lw = kind.log_weight(w, k, ri);
            density(i) * (2.0 * lw + 2.0 * ri.ln()).exp()
        };
        let (a, b) = (range.start, range.end - 1);
        let mut sum = 0.5 * (integrand(a) + integrand(b));
        if b == a {
            sum = 0.0;
        }
        for i in a + 1..b {
            sum += integrand(i);
        }
        out[k as usize] = 2.0 * PI * sum * h;
    }
    out
}

/// Combines per-order squared integrals into the norm `Σ_k ‖|D^k u| w_k‖`.
pub fn combine_norm_squares(parts: [f64; 3]) -> f64 {
    parts.iter().map(|p| p.sqrt()).sum()
}

/// Anything carrying samples that can be measured in a weighted space.
pub trait WeightedNorm {
    /// Per-order squared norms over the node range.
    fn norm_squares_on(&self, kind: SpaceKind, w: WeightPair, range: Range<usize>) -> [f64; 3];

    /// Norm over the full grid.
    fn weighted_norm(&self, kind: SpaceKind, w: WeightPair) -> f64;

    /// Norm over a node range.
    fn weighted_norm_on(&self, kind: SpaceKind, w: WeightPair, range: Range<usize>) -> f64 {
        combine_norm_squares(self.norm_squares_on(kind, w, range))
    }
}

/// Generic entry point matching the free-function form.
pub fn weighted_norm<U: WeightedNorm + ?Sized>(u: &U, kind: SpaceKind, w: WeightPair) -> f64 {
    u.weighted_norm(kind, w)
}

/// Norm of a sampled mode profile with a refinement diagnostic: the profile
/// is resampled on the refined grid and the two norms must agree to 1%.
pub fn resolved_mode_norm(
    n: i32,
    sample: impl Fn(f64) -> Complex64,
    grid: &RadialGrid,
    kind: SpaceKind,
    w: WeightPair,
) -> Result<f64> {
    let norm_on = |g: &RadialGrid| {
        let f: Vec<Complex64> = g.nodes().iter().map(|&r| sample(r)).collect();
        combine_norm_squares(mode_norm_squares(n, &f, g, kind, w, 0..g.len()))
    };
    let coarse = norm_on(grid);
    let fine = norm_on(&grid.refined());
    if (fine - coarse).abs() > 0.01 * fine.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::GridTooCoarse(format!("norm changed from {coarse:e} to {fine:e} under refinement")));
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_log_uniform_and_hits_endpoints() {
        let g = RadialGrid::new(1e-3, 50.0, 100).unwrap();
        assert_eq!(g.nodes()[0], 1e-3);
        assert_eq!(*g.nodes().last().unwrap(), 50.0);
        for w in g.nodes().windows(3) {
            let a = (w[1] / w[0]).ln();
            let b = (w[2] / w[1]).ln();
            assert!(((a - b) / a).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_rejects_bad_windows() {
        assert!(RadialGrid::new(0.0, 1.0, 32).is_err());
        assert!(RadialGrid::new(2.0, 1.0, 32).is_err());
        assert!(RadialGrid::new(1e-3, 1.0, 15).is_err());
    }

    #[test]
    fn refinement_keeps_old_nodes() {
        let g = RadialGrid::new(1e-2, 10.0, 33).unwrap();
        let f = g.refined();
        assert_eq!(f.len(), 65);
        for i in 0..g.len() {
            assert!((f.nodes()[2 * i] / g.nodes()[i] - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn weight_b_pieces() {
        assert_eq!(weight_b(0.5).unwrap(), 0.5);
        assert_eq!(weight_b(3.0).unwrap(), 1.0);
        assert!((weight_b(1.5).unwrap() - 1.085_734_946_854_732_8).abs() < 1e-15);
        assert!(weight_b(0.0).is_err());
        for i in 0..=200 {
            let r = 1.0 + i as f64 / 200.0;
            let b = weight_b(r).unwrap();
            assert!((1.0..=r + 1e-15).contains(&b));
        }
    }

    #[test]
    fn weight_b_is_c2_in_log_radius() {
        let f = |s: f64| b_unchecked(s.exp());
        for &s0 in &[0.0, LN_2] {
            let h = 1e-4;
            let d1l = (f(s0) - f(s0 - h)) / h;
            let d1r = (f(s0 + h) - f(s0)) / h;
            assert!((d1l - d1r).abs() < 1e-3);
            let d2l = (f(s0) - 2.0 * f(s0 - h) + f(s0 - 2.0 * h)) / (h * h);
            let d2r = (f(s0 + 2.0 * h) - 2.0 * f(s0 + h) + f(s0)) / (h * h);
            assert!((d2l - d2r).abs() < 1e-2);
        }
    }

    #[test]
    fn bracket_values() {
        assert_eq!(bracket(0.0), 1.0);
        assert!((bracket(1.0) - 2f64.sqrt()).abs() < 1e-16);
        assert!(((bracket(1e8) - 1e8) / 1e8).abs() < 1e-15);
    }

    #[test]
    fn zero_has_zero_norm() {
        let g = RadialGrid::new(1e-3, 20.0, 64).unwrap();
        let f = vec![Complex64::default(); g.len()];
        let w = WeightPair::new(0.3, -1.0).unwrap();
        assert_eq!(combine_norm_squares(mode_norm_squares(2, &f, &g, SpaceKind::m(2), w, 0..g.len())), 0.0);
    }

    #[test]
    fn gaussian_l2_norm_matches_closed_form() {
        // ‖e^{−r²}‖² over the plane with unit weights is π/2.
        let g = RadialGrid::new(1e-6, 8.0, 800).unwrap();
        let f: Vec<Complex64> = g.nodes().iter().map(|r| Complex64::new((-r * r).exp(), 0.0)).collect();
        let w = WeightPair::new(0.0, 0.0).unwrap();
        let sq = mode_norm_squares(0, &f, &g, SpaceKind::h(0), w, 0..g.len());
        assert!((sq[0] - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_density_matches_cartesian_form() {
        // u = r e^{iθ} e^{−r²} = (x + iy) e^{−r²}; |∇u|² integrates to 2π ∫ (|f′|² + f²/r²) r dr.
        let g = RadialGrid::new(1e-6, 8.0, 1200).unwrap();
        let f: Vec<Complex64> = g.nodes().iter().map(|r| Complex64::new(r * (-r * r).exp(), 0.0)).collect();
        let w = WeightPair::new(-1.0, -1.0).unwrap();
        let sq = mode_norm_squares(1, &f, &g, SpaceKind::m(1), w, 0..g.len());
        // Weight for k = 1 is b^0 ⟨r⟩^0 = 1. ∫|∇u|² = 2π ∫ [(1−2r²)² + 1] e^{−2r²} r dr = 2π · 1/2.
        assert!((sq[1] - PI).abs() < 1e-6, "{}", sq[1]);
    }
}
