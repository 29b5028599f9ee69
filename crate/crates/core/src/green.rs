//! Per-mode inverses by variation of constants, and the full-field driver.
//!
//! Mode `n` of each operator is the Sturm–Liouville problem
//! `(ρu′)′ − (ν²/ρ + cρ)u = ρf` with homogeneous solutions `y₁, y₂` and
//! constant `C = ρ W(y₁, y₂)`:
//!
//! * `Δ − 1`, `Δ − 1/r² − 1`: `y₁ = I_ν`, `y₂ = K_ν`, `C = −1`;
//! * `Δ − 1/r²`: `y₁ = r^{−q}`, `y₂ = r^{q}`, `C = 2q`.
//!
//! A particular solution is
//! `u = (1/C) [ y₂(r) ∫_{a}^{r} y₁ f ρ dρ − y₁(r) ∫_{b}^{r} y₂ f ρ dρ ]`.
//! Each term is anchored according to where its outer factor lies in the
//! domain space: at the end where the outer factor is inadmissible, so the
//! integral kills it there. When the outer factor is admissible at both ends it
//! is a kernel direction. When it is admissible at neither end, the full moment
//! of the inner factor must vanish, and the term is integrated from the left
//! below `r = 1` and from the right above it.
//!
//! All integrals are evaluated as `ŷ_out(r) ∫ e^{E(r)−E(ρ)} (y_in y_out)(ρ) f ρ² dτ`
//! with `E = ln y_out`, so no Bessel function or power is ever formed on its
//! own.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fredholm::{
    classify, radial_moment, solvability_defect, Defect, FredholmReport, RadialForm, NEAR_RESONANCE_TOL, RESONANCE_TOL,
};
use crate::grid::{b_unchecked, bracket, RadialGrid, SpaceKind, WeightPair, WeightedNorm};
use crate::modes::{Field2D, ModeFunction, OperatorKind};
use crate::quadrature::{cumulative_left_scaled, cumulative_right_scaled};
use crate::special::{ln_bessel_i, ln_bessel_k, BesselOrder};

/// Relative size of a solvability moment above which it counts as violated.
pub const SOLVABILITY_TOL: f64 = 1e-6;
/// Relative tail contribution beyond `r_max` that is tolerated.
pub const TAIL_TOL: f64 = 1e-8;
/// Radius separating left- and right-anchored integration of constrained terms.
const PIVOT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Anchor {
    Left,
    Right,
    Kernel,
    Split,
}

/// A homogeneous solution: log-samples and its power-law exponents at `0`
/// and `∞` (infinite for exponential behavior).
struct Homogeneous {
    form: HomogeneousForm,
    ln_y: Vec<f64>,
    p0: f64,
    p_inf: f64,
}

#[derive(Debug, Clone, Copy)]
enum HomogeneousForm {
    BesselI,
    Radial(RadialForm),
}

impl Homogeneous {
    fn anchor(&self, w: WeightPair) -> Anchor {
        let in_left = self.p0 > -(w.sigma + 1.0);
        let in_right = self.p_inf < -(w.gamma + 1.0);
        match (in_left, in_right) {
            (true, false) => Anchor::Right,
            (false, true) => Anchor::Left,
            (true, true) => Anchor::Kernel,
            (false, false) => Anchor::Split,
        }
    }

    fn distance_to_threshold(&self, w: WeightPair) -> f64 {
        let a = (self.p0 + w.sigma + 1.0).abs();
        let b = (self.p_inf + w.gamma + 1.0).abs();
        a.min(b)
    }
}

fn homogeneous_pair(kind: OperatorKind, n: i32, grid: &RadialGrid) -> Result<(Homogeneous, Homogeneous, f64)> {
    let nu = kind.order(n);
    match kind {
        OperatorKind::Helmholtz | OperatorKind::ShiftedHelmholtz => {
            let order = BesselOrder::new(nu)?;
            let ln_i = grid.nodes().iter().map(|&r| ln_bessel_i(order, r)).collect::<Result<Vec<_>>>()?;
            let ln_k = grid.nodes().iter().map(|&r| ln_bessel_k(order, r)).collect::<Result<Vec<_>>>()?;
            Ok((
                Homogeneous { form: HomogeneousForm::BesselI, ln_y: ln_i, p0: nu, p_inf: f64::INFINITY },
                Homogeneous {
                    form: HomogeneousForm::Radial(RadialForm::BesselK { order: nu }),
                    ln_y: ln_k,
                    p0: -nu,
                    p_inf: f64::NEG_INFINITY,
                },
                -1.0,
            ))
        }
        OperatorKind::Euler => {
            let power = |e: f64| Homogeneous {
                form: HomogeneousForm::Radial(RadialForm::Power { exponent: e }),
                ln_y: grid.nodes().iter().map(|r| e * r.ln()).collect(),
                p0: e,
                p_inf: e,
            };
            Ok((power(-nu), power(nu), 2.0 * nu))
        }
    }
}

/// A solvability moment of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMoment {
    /// The homogeneous solution the right-hand side was paired with.
    pub radial_form: RadialForm,
    /// `∫ f y ρ dρ` before projection.
    pub moment: Complex64,
    /// Threshold above which the moment counts as nonzero.
    pub tolerance: f64,
    pub violated: bool,
}

/// Output of a mode solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub u: ModeFunction,
    /// The right-hand side actually inverted (projected if moments were nonzero).
    pub rhs: ModeFunction,
    pub moments: Vec<ModeMoment>,
    /// Kernel directions removed from the output.
    pub kernel: Vec<RadialForm>,
    pub warnings: Vec<String>,
}

impl ModeSolution {
    pub fn violated(&self) -> bool {
        self.moments.iter().any(|m| m.violated)
    }

    /// Turns a violated moment into an error.
    pub fn check(&self) -> Result<()> {
        match self.moments.iter().find(|m| m.violated) {
            Some(m) => {
                Err(Error::SolvabilityViolated { mode: self.u.n(), moment: m.moment.norm(), tolerance: m.tolerance })
            }
            None => Ok(()),
        }
    }
}

/// Fixed log-normal bump used to project out solvability defects.
fn projection_bump(grid: &RadialGrid, centre: f64) -> Vec<Complex64> {
    grid.nodes()
        .iter()
        .map(|&r| {
            let l = (r / centre).ln() / 0.5;
            Complex64::new((-0.5 * l * l).exp(), 0.0)
        })
        .collect()
}

fn solve_small(a: &[Vec<Complex64>], b: &[Complex64]) -> Result<Vec<Complex64>> {
    match b.len() {
        0 => Ok(Vec::new()),
        1 => {
            if a[0][0].norm() == 0.0 {
                return Err(Error::ZeroDenominator);
            }
            Ok(vec![b[0] / a[0][0]])
        }
        2 => {
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if det.norm() == 0.0 {
                return Err(Error::ZeroDenominator);
            }
            Ok(vec![(b[0] * a[1][1] - b[1] * a[0][1]) / det, (a[0][0] * b[1] - a[1][0] * b[0]) / det])
        }
        _ => unreachable!("a mode has at most two homogeneous solutions"),
    }
}

/// `ŷ_out(r) ∫_{anchor}^{r} (y_in y_out) f ρ² e^{E(r)−E(ρ)} dτ` for one term.
fn term(
    f: &[Complex64],
    inner: &Homogeneous,
    outer: &Homogeneous,
    anchor: Anchor,
    grid: &RadialGrid,
) -> Vec<Complex64> {
    let h = grid.h();
    let g: Vec<Complex64> = f
        .iter()
        .zip(&inner.ln_y)
        .zip(&outer.ln_y)
        .zip(grid.nodes())
        .map(|(((&v, &li), &lo), &r)| v * (li + lo + 2.0 * r.ln()).exp())
        .collect();
    let expo: Vec<f64> = outer.ln_y.iter().map(|l| -l).collect();
    let left = || cumulative_left_scaled(&g, &expo, h);
    let right = || cumulative_right_scaled(&g, &expo, h).into_iter().map(|v| -v).collect::<Vec<_>>();
    match anchor {
        Anchor::Left | Anchor::Kernel => left(),
        Anchor::Right => right(),
        Anchor::Split => {
            let pivot = grid.nearest(PIVOT);
            let mut out = left();
            let r = right();
            out[pivot + 1..].copy_from_slice(&r[pivot + 1..]);
            out
        }
    }
}

/// Estimated relative contribution of `∫_{r_max}^∞ y_in f ρ dρ` for the
/// exponentially decaying inner factor.
fn tail_estimate(f: &[Complex64], inner: &Homogeneous, grid: &RadialGrid) -> f64 {
    let last = grid.len() - 1;
    let r_max = grid.r_max();
    let tail = f[last].norm() * (inner.ln_y[last] + 2.0 * r_max.ln()).exp();
    let abs: Vec<Complex64> = f.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
    let total = radial_moment(&abs, &inner.ln_y, grid).re;
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// `L²_{σ,γ}` pairing `∫ a b̄ b^{2σ}⟨r⟩^{2γ} r dr` with `b = exp(ln_b)`.
fn weighted_pairing(a: &[Complex64], ln_b: &[f64], grid: &RadialGrid, w: WeightPair) -> Complex64 {
    let mut acc = Complex64::default();
    let n = grid.len();
    for (i, (&r, (&v, &lb))) in grid.nodes().iter().zip(a.iter().zip(ln_b)).enumerate() {
        let lw = 2.0 * (w.sigma * b_unchecked(r).ln() + w.gamma * bracket(r).ln()) + 2.0 * r.ln();
        let e = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        if v != Complex64::default() {
            acc += v * (lb + lw).exp() * e;
        }
    }
    acc * grid.h()
}

/// Removes from `u` its `L²_{σ,γ}` projection onto the given kernel
/// directions.
pub(crate) fn project_out(u: &mut [Complex64], ln_kernel: &[&[f64]], grid: &RadialGrid, w: WeightPair) -> Result<()> {
    if ln_kernel.is_empty() {
        return Ok(());
    }
    let gram: Vec<Vec<Complex64>> = ln_kernel
        .iter()
        .map(|a| {
            ln_kernel
                .iter()
                .map(|b| {
                    let sum: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
                    weighted_pairing(&vec![Complex64::new(1.0, 0.0); grid.len()], &sum, grid, w)
                })
                .collect()
        })
        .collect();
    let rhs: Vec<Complex64> = ln_kernel.iter().map(|l| weighted_pairing(u, l, grid, w)).collect();
    let coef = solve_small(&gram, &rhs)?;
    for (c, l) in coef.iter().zip(ln_kernel) {
        if c.norm() == 0.0 {
            continue;
        }
        let (lc, phase) = (c.norm().ln(), c / c.norm());
        for (v, &ly) in u.iter_mut().zip(l.iter()) {
            *v -= phase * (lc + ly).exp();
        }
    }
    Ok(())
}

/// Solves `L_n u = f` in mode `n` between the weighted spaces at `w`.
pub fn solve_mode(kind: OperatorKind, f: &ModeFunction, w: WeightPair) -> Result<ModeSolution> {
    let grid = f.grid().clone();
    let n = f.n();
    let (y1, y2, c) = homogeneous_pair(kind, n, &grid)?;
    let mut warnings = Vec::new();
    for y in [&y1, &y2] {
        let d = y.distance_to_threshold(w);
        if d <= RESONANCE_TOL {
            return Err(Error::ResonantWeight(format!(
                "{kind} mode {n}: (σ, γ) = ({}, {}) sits on a threshold",
                w.sigma, w.gamma
            )));
        }
        if d <= NEAR_RESONANCE_TOL {
            warnings.push(format!("mode {n}: weight within {d:e} of a threshold; expect ill-conditioning"));
        }
    }
    // term A: y₂ outside, y₁ inside; term B: y₁ outside, y₂ inside.
    let terms = [(&y1, &y2, 1.0 / c), (&y2, &y1, -1.0 / c)];
    let anchors: Vec<Anchor> = terms.iter().map(|(_, outer, _)| outer.anchor(w)).collect();

    let mut rhs = f.values().to_vec();
    let mut moments = Vec::new();
    let constrained: Vec<&Homogeneous> =
        terms.iter().zip(&anchors).filter(|(_, a)| **a == Anchor::Split).map(|((inner, _, _), _)| *inner).collect();
    if !constrained.is_empty() {
        let abs: Vec<Complex64> = rhs.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
        let raw: Vec<Complex64> = constrained.iter().map(|y| radial_moment(&rhs, &y.ln_y, &grid)).collect();
        for (y, m) in constrained.iter().zip(&raw) {
            let tolerance = SOLVABILITY_TOL * radial_moment(&abs, &y.ln_y, &grid).re;
            let radial_form = match y.form {
                HomogeneousForm::Radial(form) => form,
                HomogeneousForm::BesselI => unreachable!("I is never a constrained inner factor"),
            };
            moments.push(ModeMoment { radial_form, moment: *m, tolerance, violated: m.norm() > tolerance });
        }
        let bumps: Vec<Vec<Complex64>> =
            (0..constrained.len()).map(|k| projection_bump(&grid, (0.7 * k as f64).exp())).collect();
        let gram: Vec<Vec<Complex64>> =
            constrained.iter().map(|y| bumps.iter().map(|b| radial_moment(b, &y.ln_y, &grid)).collect()).collect();
        let coef = solve_small(&gram, &raw)?;
        for (cf, b) in coef.iter().zip(&bumps) {
            for (v, bv) in rhs.iter_mut().zip(b) {
                *v -= cf * bv;
            }
        }
    }
    for ((inner, _, _), anchor) in terms.iter().zip(&anchors) {
        if matches!(anchor, Anchor::Right | Anchor::Split) && kind != OperatorKind::Euler {
            let est = tail_estimate(&rhs, inner, &grid);
            if est > TAIL_TOL {
                return Err(Error::TailTruncation { mode: n, estimate: est });
            }
        }
    }

    let mut u = vec![Complex64::default(); grid.len()];
    let mut kernel = Vec::new();
    let mut kernel_ln: Vec<&[f64]> = Vec::new();
    for ((inner, outer, scale), anchor) in terms.iter().zip(&anchors) {
        for (acc, v) in u.iter_mut().zip(term(&rhs, inner, outer, *anchor, &grid)) {
            *acc += v * *scale;
        }
        if *anchor == Anchor::Kernel {
            if let HomogeneousForm::Radial(form) = outer.form {
                kernel.push(form);
            }
            kernel_ln.push(&outer.ln_y);
        }
    }
    project_out(&mut u, &kernel_ln, &grid, w)?;
    Ok(ModeSolution {
        u: ModeFunction::new(n, grid.clone(), u)?,
        rhs: ModeFunction::new(n, grid, rhs)?,
        moments,
        kernel,
        warnings,
    })
}

/// `(Δ_n − 1) u = f`.
pub fn solve_helmholtz_mode(f: &ModeFunction, w: WeightPair) -> Result<ModeSolution> {
    solve_mode(OperatorKind::Helmholtz, f, w)
}

/// `(Δ_n − 1/r² − 1) u = f`.
pub fn solve_shifted_helmholtz_mode(f: &ModeFunction, w: WeightPair) -> Result<ModeSolution> {
    solve_mode(OperatorKind::ShiftedHelmholtz, f, w)
}

/// `Δ_{n²+1} u = f`.
pub fn solve_euler_mode(f: &ModeFunction, w: WeightPair) -> Result<ModeSolution> {
    solve_mode(OperatorKind::Euler, f, w)
}

/// Removes the kernel directions the solver would remove, so that a
/// manufactured solution can be compared with solver output.
pub fn project_kernel(kind: OperatorKind, u: &ModeFunction, w: WeightPair) -> Result<ModeFunction> {
    let grid = u.grid().clone();
    let (y1, y2, _) = homogeneous_pair(kind, u.n(), &grid)?;
    let ln: Vec<&[f64]> =
        [&y2, &y1].iter().filter(|y| y.anchor(w) == Anchor::Kernel).map(|y| y.ln_y.as_slice()).collect();
    let mut values = u.values().to_vec();
    project_out(&mut values, &ln, &grid, w)?;
    ModeFunction::new(u.n(), grid, values)
}

/// Full-field solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solution: Field2D,
    /// The right-hand side actually inverted, after defect projection.
    pub rhs: Field2D,
    /// `‖L u − rhs‖` in the range space over interior nodes.
    pub residual_norm: f64,
    /// `residual_norm / ‖rhs‖`.
    pub relative_residual: f64,
    pub solvability_defects: Vec<Defect>,
    pub mode_moments: BTreeMap<i32, Vec<ModeMoment>>,
    pub norms: BTreeMap<String, f64>,
    pub regime: FredholmReport,
    pub warnings: Vec<String>,
}

impl SolveResult {
    pub fn violated(&self) -> bool {
        self.mode_moments.values().flatten().any(|m| m.violated)
    }
}

/// Mode-wise solve of `L u = f`; modes run in parallel and are reduced in
/// mode order.
pub fn solve_field(kind: OperatorKind, f: &Field2D, w: WeightPair) -> Result<SolveResult> {
    let regime = classify(kind, w);
    if regime.is_resonant() {
        return Err(Error::ResonantWeight(format!(
            "{kind} at (σ, γ) = ({}, {}) resonates in modes {:?}",
            w.sigma, w.gamma, regime.resonant_modes
        )));
    }
    let grid: Arc<RadialGrid> = f.grid().clone();
    let solved: Vec<Option<ModeSolution>> = f
        .modes()
        .par_iter()
        .map(|m| {
            if m.values().iter().all(|v| *v == Complex64::default()) {
                Ok(None)
            } else {
                solve_mode(kind, m, w).map(Some).map_err(|e| e.in_mode(m.n()))
            }
        })
        .collect::<Result<_>>()?;
    let mut solution = Field2D::zeros(grid.clone(), f.n_theta())?;
    let mut rhs = f.clone();
    let mut mode_moments = BTreeMap::new();
    let mut warnings = Vec::new();
    for s in solved.into_iter().flatten() {
        let n = s.u.n();
        *solution.mode_mut(n).expect("mode in range") = s.u;
        *rhs.mode_mut(n).expect("mode in range") = s.rhs;
        if !s.moments.is_empty() {
            mode_moments.insert(n, s.moments);
        }
        warnings.extend(s.warnings);
    }
    let residual = solution.apply(kind)?.sub(&rhs);
    let interior = grid.interior();
    let range_w = kind.range_weights(w);
    let residual_norm = residual.weighted_norm_on(SpaceKind::l2(), range_w, interior.clone());
    let rhs_norm = rhs.weighted_norm_on(SpaceKind::l2(), range_w, interior.clone());
    let relative_residual = if rhs_norm == 0.0 { residual_norm } else { residual_norm / rhs_norm };
    let mut norms = BTreeMap::new();
    norms.insert("solution_domain".to_string(), solution.weighted_norm_on(kind.domain_space(), w, interior.clone()));
    norms.insert("solution_l2".to_string(), solution.weighted_norm_on(SpaceKind::l2(), w, interior.clone()));
    norms.insert("rhs_range".to_string(), f.weighted_norm_on(SpaceKind::l2(), range_w, interior));
    Ok(SolveResult {
        solution,
        rhs,
        residual_norm,
        relative_residual,
        solvability_defects: solvability_defect(kind, f, w),
        mode_moments,
        norms,
        regime,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::weighted_residual;

    fn wp(s: f64, g: f64) -> WeightPair {
        WeightPair::new(s, g).unwrap()
    }

    fn gaussian_mode(n: i32, grid: &Arc<RadialGrid>, a: f64) -> ModeFunction {
        ModeFunction::from_real(n, grid.clone(), |r| r.powf(a) * (-r * r).exp())
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = Arc::new(RadialGrid::new(1e-3, 30.0, 256).unwrap());
        for kind in OperatorKind::ALL {
            let f = ModeFunction::zeros(1, g.clone());
            let s = solve_mode(kind, &f, wp(-0.5, -0.5)).unwrap();
            assert!(s.u.values().iter().all(|v| v.norm() == 0.0));
            assert!(!s.violated());
        }
    }

    #[test]
    fn solution_satisfies_equation() {
        let g = Arc::new(RadialGrid::default());
        for kind in OperatorKind::ALL {
            for n in [0, 1, 3] {
                let f = gaussian_mode(n, &g, 2.0);
                let w = wp(-0.5, -0.5);
                let s = solve_mode(kind, &f, w).unwrap();
                let res = weighted_residual(kind, &s.u, &f, w).unwrap();
                assert!(res < 1e-5, "{kind} n={n}: {res}");
            }
        }
    }

    #[test]
    fn resonant_mode_is_refused() {
        let g = Arc::new(RadialGrid::new(1e-3, 30.0, 256).unwrap());
        let f = gaussian_mode(1, &g, 1.0);
        let e = solve_mode(OperatorKind::Euler, &f, wp(2f64.sqrt() - 1.0, 0.0)).unwrap_err();
        assert!(matches!(e, Error::ResonantWeight(_)));
        let e = solve_mode(OperatorKind::Helmholtz, &f, wp(0.0, 0.0)).unwrap_err();
        assert!(matches!(e, Error::ResonantWeight(_)));
    }

    #[test]
    fn cokernel_moment_is_reported_and_projected() {
        let g = Arc::new(RadialGrid::default());
        let f = ModeFunction::from_real(0, g.clone(), |r| (-(r.ln() - 0.3).powi(2)).exp());
        // σ + 1 < −1: the Helmholtz I-term has no admissible anchor.
        let w = wp(-2.5, 0.0);
        let s = solve_helmholtz_mode(&f, w).unwrap();
        assert_eq!(s.moments.len(), 1);
        assert!(s.violated());
        assert!(s.check().is_err());
        let ln_k = RadialForm::BesselK { order: 0.0 }.ln_samples(&g);
        assert!(radial_moment(s.rhs.values(), &ln_k, &g).norm() < 1e-12 * s.moments[0].moment.norm());
        let res = weighted_residual(OperatorKind::Helmholtz, &s.u, &s.rhs, w).unwrap();
        assert!(res < 1e-5, "{res}");
    }

    #[test]
    fn kernel_component_is_normalized_away() {
        let g = Arc::new(RadialGrid::default());
        let f = gaussian_mode(0, &g, 0.0);
        let w = wp(0.6, -0.5);
        let s = solve_euler_mode(&f, w).unwrap();
        assert_eq!(s.kernel.len(), 1);
        let ln_y = RadialForm::Power { exponent: -1.0 }.ln_samples(&g);
        assert!(weighted_pairing(s.u.values(), &ln_y, &g, w).norm() < 1e-10);
        // Adding the kernel element leaves the residual unchanged.
        let shifted = s.u.add(&ModeFunction::from_real(0, g.clone(), |r| 3.0 / r));
        let r1 = weighted_residual(OperatorKind::Euler, &s.u, &f, w).unwrap();
        let r2 = weighted_residual(OperatorKind::Euler, &shifted, &f, w).unwrap();
        assert!(r1 < 1e-5 && r2 < 1e-5, "{r1} {r2}");
    }
}
