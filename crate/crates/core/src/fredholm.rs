//! Weight-regime classification: Fredholm or resonant, kernel and cokernel
//! bases, index, and solvability pairings.
//!
//! Thresholds, with `ν(m) = m` for `Δ − 1` and `ν(m) = q(m) = √(m² + 1)`
//! otherwise:
//!
//! | operator | kernel element | when | cokernel element | when |
//! |---|---|---|---|---|
//! | `Δ − 1`, `Δ − 1/r² − 1` | `K_ν(r)·trig` | `σ > ν − 1` | `K_ν(r)·trig` | `σ < −ν − 1` |
//! | `Δ − 1/r²` | `r^{−q}·trig` | `σ + 1 > q` | `r^{q}·trig` | `γ + 1 > q` |
//! | `Δ − 1/r²` | `r^{q}·trig` | `γ + 1 < −q` | `r^{−q}·trig` | `σ + 1 < −q` |
//!
//! `trig` runs over `cos(mθ)` and, for `m ≥ 1`, `sin(mθ)`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, SpaceKind, WeightPair, WeightedNorm};
use crate::modes::{Field2D, ModeFunction, OperatorKind};
use crate::quadrature::cumulative_left;
use crate::special::{ln_bessel_k, BesselOrder};

/// Distance below which a weight counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Distance below which a non-resonant weight is flagged as ill-conditioned.
pub const NEAR_RESONANCE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Fredholm,
    Resonant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Kernel,
    Cokernel,
}

/// Radial profile of a basis element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum RadialForm {
    BesselK { order: f64 },
    Power { exponent: f64 },
}

impl RadialForm {
    /// `ln` of the (positive) profile at `r`.
    pub fn ln_value(self, r: f64) -> f64 {
        match self {
            Self::BesselK { order } => {
                ln_bessel_k(BesselOrder::new(order).expect("valid order"), r).expect("positive radius")
            }
            Self::Power { exponent } => exponent * r.ln(),
        }
    }

    pub fn ln_samples(self, grid: &RadialGrid) -> Vec<f64> {
        grid.nodes().iter().map(|&r| self.ln_value(r)).collect()
    }

    pub fn label(self) -> String {
        match self {
            Self::BesselK { order } => format!("K_{order:.6}"),
            Self::Power { exponent } => format!("r^{exponent:.6}"),
        }
    }
}

/// One kernel or cokernel function `radial(r)·trig(mode·θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisElement {
    pub mode: u32,
    pub parity: Parity,
    pub radial_form: RadialForm,
    pub side: Side,
}

impl BasisElement {
    pub fn id(&self) -> String {
        let side = match self.side {
            Side::Kernel => "kernel",
            Side::Cokernel => "cokernel",
        };
        let trig = match self.parity {
            Parity::Cos => "cos",
            Parity::Sin => "sin",
        };
        format!("{side}:{}:{trig}{}", self.radial_form.label(), self.mode)
    }

    /// Coefficients `c_n` with `trig(mθ) = Σ c_n e^{inθ}`.
    pub fn angular_coefficients(&self) -> Vec<(i32, Complex64)> {
        let m = self.mode as i32;
        match (self.parity, m) {
            (Parity::Cos, 0) => vec![(0, Complex64::new(1.0, 0.0))],
            (Parity::Cos, _) => vec![(m, Complex64::new(0.5, 0.0)), (-m, Complex64::new(0.5, 0.0))],
            (Parity::Sin, _) => vec![(m, Complex64::new(0.0, -0.5)), (-m, Complex64::new(0.0, 0.5))],
        }
    }

    /// Unnormalized samples on the polar grid.
    pub fn sample(&self, grid: &Arc<RadialGrid>, n_theta: usize) -> Result<Field2D> {
        let ln_y = self.radial_form.ln_samples(grid);
        let modes = self.angular_coefficients().into_iter().map(|(n, c)| {
            let values = ln_y.iter().map(|&l| c * l.exp()).collect();
            ModeFunction::new(n, grid.clone(), values).expect("grid-sized samples")
        });
        Field2D::from_modes(grid.clone(), n_theta, modes)
    }
}

/// Result of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmReport {
    pub kind: OperatorKind,
    pub weights: WeightPair,
    pub status: Status,
    pub kernel_basis: Vec<BasisElement>,
    pub cokernel_basis: Vec<BasisElement>,
    pub index: i64,
    pub resonant_modes: Vec<u32>,
}

impl FredholmReport {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.len()
    }

    pub fn cokernel_dim(&self) -> usize {
        self.cokernel_basis.len()
    }

    pub fn is_resonant(&self) -> bool {
        self.status == Status::Resonant
    }

    fn require_fredholm(&self) -> Result<()> {
        if self.is_resonant() {
            return Err(Error::ResonantWeight(format!(
                "{} at (σ, γ) = ({}, {}) resonates in modes {:?}",
                self.kind, self.weights.sigma, self.weights.gamma, self.resonant_modes
            )));
        }
        Ok(())
    }
}

fn push_trig(out: &mut Vec<BasisElement>, mode: u32, radial_form: RadialForm, side: Side) {
    out.push(BasisElement { mode, parity: Parity::Cos, radial_form, side });
    if mode > 0 {
        out.push(BasisElement { mode, parity: Parity::Sin, radial_form, side });
    }
}

/// Modes `k` with `q(k)` (or `k`) within the resonance tolerance of `|x|`.
fn resonant_orders(x: f64, order: impl Fn(u32) -> f64) -> Vec<u32> {
    let target = x.abs();
    let mut out = Vec::new();
    let mut k = 0;
    while order(k) <= target + 1.0 {
        if (order(k) - target).abs() <= RESONANCE_TOL {
            out.push(k);
        }
        k += 1;
    }
    out
}

/// Modes `k ≥ 0` with `order(k) < bound`.
fn modes_below(bound: f64, order: impl Fn(u32) -> f64) -> impl Iterator<Item = u32> {
    (0..).take_while(move |&k| order(k) < bound)
}

/// Classifies `kind` between its weighted spaces at `w`.
pub fn classify(kind: OperatorKind, w: WeightPair) -> FredholmReport {
    let s1 = w.sigma + 1.0;
    let g1 = w.gamma + 1.0;
    let order = move |k: u32| kind.order(k as i32);
    let mut resonant: Vec<u32> = match kind {
        OperatorKind::Helmholtz => {
            if (w.sigma - w.sigma.round()).abs() <= RESONANCE_TOL {
                resonant_orders(s1, order)
            } else {
                Vec::new()
            }
        }
        OperatorKind::ShiftedHelmholtz => resonant_orders(s1, order),
        OperatorKind::Euler => {
            let mut v = resonant_orders(s1, order);
            v.extend(resonant_orders(g1, order));
            v
        }
    };
    resonant.sort_unstable();
    resonant.dedup();
    let mut kernel = Vec::new();
    let mut cokernel = Vec::new();
    if resonant.is_empty() {
        match kind {
            OperatorKind::Helmholtz | OperatorKind::ShiftedHelmholtz => {
                for k in modes_below(s1, order) {
                    push_trig(&mut kernel, k, RadialForm::BesselK { order: order(k) }, Side::Kernel);
                }
                for k in modes_below(-s1, order) {
                    push_trig(&mut cokernel, k, RadialForm::BesselK { order: order(k) }, Side::Cokernel);
                }
            }
            OperatorKind::Euler => {
                for k in modes_below(s1, order) {
                    push_trig(&mut kernel, k, RadialForm::Power { exponent: -order(k) }, Side::Kernel);
                }
                for k in modes_below(-g1, order) {
                    push_trig(&mut kernel, k, RadialForm::Power { exponent: order(k) }, Side::Kernel);
                }
                for k in modes_below(g1, order) {
                    push_trig(&mut cokernel, k, RadialForm::Power { exponent: order(k) }, Side::Cokernel);
                }
                for k in modes_below(-s1, order) {
                    push_trig(&mut cokernel, k, RadialForm::Power { exponent: -order(k) }, Side::Cokernel);
                }
            }
        }
    }
    let index = kernel.len() as i64 - cokernel.len() as i64;
    FredholmReport {
        kind,
        weights: w,
        status: if resonant.is_empty() { Status::Fredholm } else { Status::Resonant },
        kernel_basis: kernel,
        cokernel_basis: cokernel,
        index,
        resonant_modes: resonant,
    }
}

/// Smallest distance from `σ + 1` (and for the Euler operator `γ + 1`) to a
/// threshold `±ν(k)` over modes `|k| ≤ max_mode`.
pub fn resonance_distance(kind: OperatorKind, w: WeightPair, max_mode: u32) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..=max_mode {
        let nu = kind.order(k as i32);
        for t in [nu, -nu] {
            best = best.min((w.sigma + 1.0 - t).abs());
            if kind == OperatorKind::Euler {
                best = best.min((w.gamma + 1.0 - t).abs());
            }
        }
    }
    best
}

/// Space in which cokernel elements are normalized: the unweighted-pairing
/// dual of the range space.
pub fn cokernel_weights(kind: OperatorKind, w: WeightPair) -> WeightPair {
    let r = kind.range_weights(w);
    WeightPair { sigma: -r.sigma, gamma: -r.gamma }
}

fn sampled_basis(
    report: &FredholmReport,
    elements: &[BasisElement],
    grid: &Arc<RadialGrid>,
    n_theta: usize,
    kernel: bool,
) -> Result<Vec<Field2D>> {
    report.require_fredholm()?;
    elements
        .iter()
        .map(|e| {
            let field = e.sample(grid, n_theta)?;
            let norm = if kernel {
                field.weighted_norm(report.kind.domain_space(), report.weights)
            } else {
                field.weighted_norm(SpaceKind::l2(), cokernel_weights(report.kind, report.weights))
            };
            Ok(if norm > 0.0 && norm.is_finite() { field.scaled(Complex64::new(1.0 / norm, 0.0)) } else { field })
        })
        .collect()
}

/// Kernel elements sampled on the grid, each of unit domain norm.
pub fn kernel_basis_field(report: &FredholmReport, grid: &Arc<RadialGrid>, n_theta: usize) -> Result<Vec<Field2D>> {
    sampled_basis(report, &report.kernel_basis, grid, n_theta, true)
}

/// Cokernel elements sampled on the grid, each of unit norm in the dual of
/// the range space.
pub fn cokernel_basis_field(report: &FredholmReport, grid: &Arc<RadialGrid>, n_theta: usize) -> Result<Vec<Field2D>> {
    sampled_basis(report, &report.cokernel_basis, grid, n_theta, false)
}

/// `∫ f(ρ) y(ρ) ρ dρ` over the grid with `y = exp(ln_y)`.
pub fn radial_moment(f: &[Complex64], ln_y: &[f64], grid: &RadialGrid) -> Complex64 {
    let g: Vec<Complex64> = f
        .iter()
        .zip(ln_y)
        .zip(grid.nodes())
        .map(|((&v, &l), &r)| if v == Complex64::default() { v } else { v * (l + 2.0 * r.ln()).exp() })
        .collect();
    *cumulative_left(&g, grid.h()).last().expect("non-empty grid")
}

/// Unweighted `L²(ℝ²)` pairing `∫ f h̄ dA` with a basis element.
pub fn pairing(f: &Field2D, element: &BasisElement) -> Complex64 {
    let ln_y = element.radial_form.ln_samples(f.grid());
    element
        .angular_coefficients()
        .into_iter()
        .filter_map(|(n, c)| f.mode(n).map(|m| c.conj() * radial_moment(m.values(), &ln_y, f.grid())))
        .fold(Complex64::default(), |acc, v| acc + v)
        * (2.0 * std::f64::consts::PI)
}

/// One solvability pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub element: BasisElement,
    pub id: String,
    pub pairing: Complex64,
}

/// Pairings of `f` with every cokernel element at `w`.
pub fn solvability_defect(kind: OperatorKind, f: &Field2D, w: WeightPair) -> Vec<Defect> {
    classify(kind, w)
        .cokernel_basis
        .iter()
        .map(|e| Defect { element: *e, id: e.id(), pairing: pairing(f, e) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(s: f64, g: f64) -> WeightPair {
        WeightPair::new(s, g).unwrap()
    }

    #[test]
    fn helmholtz_surjective_example() {
        let r = classify(OperatorKind::Helmholtz, wp(0.5, 7.0));
        assert_eq!(r.status, Status::Fredholm);
        assert_eq!(r.kernel_dim(), 3);
        assert_eq!(r.cokernel_dim(), 0);
        assert_eq!(r.index, 3);
        assert!(r.kernel_basis.iter().all(|e| matches!(e.radial_form, RadialForm::BesselK { .. })));
    }

    #[test]
    fn helmholtz_injective_example() {
        let r = classify(OperatorKind::Helmholtz, wp(-2.5, 0.0));
        assert_eq!((r.kernel_dim(), r.cokernel_dim(), r.index), (0, 3, -3));
    }

    #[test]
    fn euler_gap_and_quadrant() {
        let gap = classify(OperatorKind::Euler, wp(-0.5, -0.5));
        assert_eq!((gap.kernel_dim(), gap.cokernel_dim(), gap.index), (0, 0, 0));
        let quad = classify(OperatorKind::Euler, wp(1.0, 1.0));
        assert_eq!((quad.kernel_dim(), quad.cokernel_dim(), quad.index), (3, 3, 0));
    }

    #[test]
    fn resonances() {
        let r = classify(OperatorKind::Euler, wp(2f64.sqrt() - 1.0, 0.3));
        assert_eq!(r.status, Status::Resonant);
        assert_eq!(r.resonant_modes, vec![1]);
        assert!(r.kernel_basis.is_empty() && r.cokernel_basis.is_empty());
        let h = classify(OperatorKind::Helmholtz, wp(2.0, 0.0));
        assert_eq!(h.resonant_modes, vec![3]);
        let h = classify(OperatorKind::Helmholtz, wp(-1.0, 0.0));
        assert_eq!(h.resonant_modes, vec![0]);
        let s = classify(OperatorKind::ShiftedHelmholtz, wp(2.0, 0.0));
        assert_eq!(s.status, Status::Fredholm);
        let s = classify(OperatorKind::ShiftedHelmholtz, wp(-1.0 - 5f64.sqrt(), 0.0));
        assert_eq!(s.resonant_modes, vec![2]);
    }

    #[test]
    fn no_vanishing_sine_elements() {
        for kind in OperatorKind::ALL {
            for s in [-4.5, -1.5, 0.5, 3.5] {
                let r = classify(kind, wp(s, -s));
                for e in r.kernel_basis.iter().chain(&r.cokernel_basis) {
                    assert!(e.parity == Parity::Cos || e.mode > 0);
                }
            }
        }
    }

    #[test]
    fn angular_coefficients_reproduce_trig() {
        let e = BasisElement {
            mode: 2,
            parity: Parity::Sin,
            radial_form: RadialForm::Power { exponent: 1.0 },
            side: Side::Kernel,
        };
        let theta: f64 = 0.37;
        let v: Complex64 =
            e.angular_coefficients().iter().map(|(n, c)| c * Complex64::from_polar(1.0, *n as f64 * theta)).sum();
        assert!((v - Complex64::new((2.0 * theta).sin(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn report_round_trips_through_json() {
        let r = classify(OperatorKind::Euler, wp(1.0, 1.0));
        let s = serde_json::to_string(&r).unwrap();
        let back: FredholmReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
