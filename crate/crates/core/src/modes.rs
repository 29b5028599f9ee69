//! Angular Fourier modes, polar fields and the discrete mode operators.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{combine_norm_squares, mode_norm_squares, RadialGrid, SpaceKind, WeightPair, WeightedNorm};
use crate::quadrature::diff2;
use crate::special::q;

/// The three operators `Δ − 1`, `Δ − 1/r² − 1`, `Δ − 1/r²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Helmholtz,
    ShiftedHelmholtz,
    Euler,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 3] = [Self::Helmholtz, Self::ShiftedHelmholtz, Self::Euler];

    /// Effective order `ν` of mode `n`: `r²L_n = ∂_ττ − ν² − c r²`.
    pub fn order(self, n: i32) -> f64 {
        let k = n.unsigned_abs();
        match self {
            Self::Helmholtz => k as f64,
            Self::ShiftedHelmholtz | Self::Euler => q(k),
        }
    }

    /// Zeroth-order coefficient `c` in `L = Δ_ν − c`.
    pub fn mass(self) -> f64 {
        match self {
            Self::Helmholtz | Self::ShiftedHelmholtz => 1.0,
            Self::Euler => 0.0,
        }
    }

    /// Space the operator is posed on.
    pub fn domain_space(self) -> SpaceKind {
        match self {
            Self::Helmholtz | Self::ShiftedHelmholtz => SpaceKind::h(2),
            Self::Euler => SpaceKind::m(2),
        }
    }

    /// Weights of the `L²` target space.
    pub fn range_weights(self, w: WeightPair) -> WeightPair {
        match self {
            Self::Helmholtz | Self::ShiftedHelmholtz => w.shifted(2.0, 0.0),
            Self::Euler => w.shifted(2.0, 2.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Helmholtz => "helmholtz",
            Self::ShiftedHelmholtz => "shifted_helmholtz",
            Self::Euler => "euler",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "helmholtz" => Ok(Self::Helmholtz),
            "shifted" | "shifted_helmholtz" => Ok(Self::ShiftedHelmholtz),
            "euler" => Ok(Self::Euler),
            other => Err(Error::Parse(format!("unknown operator `{other}`"))),
        }
    }
}

/// Radial profile of the angular mode `n`: `u(r, θ) = f(r) e^{inθ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunction {
    n: i32,
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
}

impl ModeFunction {
    pub fn new(n: i32, grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!("{} samples for a grid of {} nodes", values.len(), grid.len())));
        }
        Ok(Self { n, grid, values })
    }

    pub fn zeros(n: i32, grid: Arc<RadialGrid>) -> Self {
        let values = vec![Complex64::default(); grid.len()];
        Self { n, grid, values }
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(n: i32, grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self { n, grid, values }
    }

    /// Samples a real profile.
    pub fn from_real(n: i32, grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(n, grid, |r| Complex64::new(f(r), 0.0))
    }

    pub fn n(&self) -> i32 {
        self.n
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { n: self.n, grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "mode functions on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { n: self.n, grid: self.grid.clone(), values }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    /// Largest modulus over a node range.
    pub fn sup_on(&self, range: Range<usize>) -> f64 {
        self.values[range].iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl WeightedNorm for ModeFunction {
    fn norm_squares_on(&self, kind: SpaceKind, w: WeightPair, range: Range<usize>) -> [f64; 3] {
        mode_norm_squares(self.n, &self.values, &self.grid, kind, w, range)
    }

    fn weighted_norm(&self, kind: SpaceKind, w: WeightPair) -> f64 {
        self.weighted_norm_on(kind, w, 0..self.values.len())
    }
}

/// A function on the polar tensor grid, stored as its mode stack
/// `n = −n_θ/2 + 1, …, n_θ/2 − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Arc<RadialGrid>,
    n_theta: usize,
    modes: Vec<ModeFunction>,
}

impl Field2D {
    pub const DEFAULT_N_THETA: usize = 64;

    fn check_n_theta(n_theta: usize) -> Result<()> {
        if n_theta < 4 || !n_theta.is_power_of_two() {
            return Err(Error::ShapeMismatch(format!("n_theta must be a power of two ≥ 4, got {n_theta}")));
        }
        Ok(())
    }

    pub fn zeros(grid: Arc<RadialGrid>, n_theta: usize) -> Result<Self> {
        Self::check_n_theta(n_theta)?;
        let max = (n_theta / 2 - 1) as i32;
        let modes = (-max..=max).map(|n| ModeFunction::zeros(n, grid.clone())).collect();
        Ok(Self { grid, n_theta, modes })
    }

    /// Field with the given modes and zeros elsewhere.
    pub fn from_modes(
        grid: Arc<RadialGrid>,
        n_theta: usize,
        modes: impl IntoIterator<Item = ModeFunction>,
    ) -> Result<Self> {
        let mut field = Self::zeros(grid, n_theta)?;
        for m in modes {
            if m.values.len() != field.grid.len() {
                return Err(Error::ShapeMismatch("mode sampled on a different grid".into()));
            }
            let n = m.n;
            let slot = field
                .mode_mut(n)
                .ok_or_else(|| Error::ShapeMismatch(format!("mode {n} exceeds angular resolution {n_theta}")))?;
            *slot = slot.add(&m);
        }
        Ok(field)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn max_mode(&self) -> i32 {
        (self.n_theta / 2 - 1) as i32
    }

    pub fn modes(&self) -> &[ModeFunction] {
        &self.modes
    }

    pub fn mode(&self, n: i32) -> Option<&ModeFunction> {
        let idx = n + self.max_mode();
        (n.abs() <= self.max_mode()).then(|| &self.modes[idx as usize])
    }

    pub fn mode_mut(&mut self, n: i32) -> Option<&mut ModeFunction> {
        let idx = n + self.max_mode();
        (n.abs() <= self.max_mode()).then(move || &mut self.modes[idx as usize])
    }

    /// Modes carrying any nonzero sample.
    pub fn active_modes(&self) -> impl Iterator<Item = &ModeFunction> {
        self.modes.iter().filter(|m| m.values.iter().any(|v| *v != Complex64::default()))
    }

    /// Angular nodes `θ_j = 2πj / n_θ`.
    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n_theta).map(|j| 2.0 * std::f64::consts::PI * j as f64 / self.n_theta as f64).collect()
    }

    /// Discrete angular Fourier transform of row-major samples
    /// `samples[i * n_theta + j] = u(r_i, θ_j)`.
    pub fn decompose(grid: Arc<RadialGrid>, n_theta: usize, samples: &[Complex64]) -> Result<Self> {
        Self::check_n_theta(n_theta)?;
        if samples.len() != grid.len() * n_theta {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a {}×{} polar grid",
                samples.len(),
                grid.len(),
                n_theta
            )));
        }
        if samples.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::ShapeMismatch("samples must be finite".into()));
        }
        let fft = FftPlanner::new().plan_fft_forward(n_theta);
        let mut field = Self::zeros(grid, n_theta)?;
        let max = field.max_mode();
        let scale = 1.0 / n_theta as f64;
        let mut row = vec![Complex64::default(); n_theta];
        for (i, chunk) in samples.chunks(n_theta).enumerate() {
            row.copy_from_slice(chunk);
            fft.process(&mut row);
            for n in -max..=max {
                let k = n.rem_euclid(n_theta as i32) as usize;
                field.modes[(n + max) as usize].values[i] = row[k] * scale;
            }
        }
        Ok(field)
    }

    /// Point samples on the polar tensor grid, row-major in `r`.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let fft = FftPlanner::new().plan_fft_inverse(self.n_theta);
        let max = self.max_mode();
        let mut out = Vec::with_capacity(self.grid.len() * self.n_theta);
        let mut row = vec![Complex64::default(); self.n_theta];
        for i in 0..self.grid.len() {
            row.iter_mut().for_each(|v| *v = Complex64::default());
            for n in -max..=max {
                let k = n.rem_euclid(self.n_theta as i32) as usize;
                row[k] = self.modes[(n + max) as usize].values[i];
            }
            fft.process(&mut row);
            out.extend_from_slice(&row);
        }
        out
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.map_modes(|m| m.scaled(c))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_modes(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_modes(other, |a, b| a.sub(b))
    }

    pub fn map_modes(&self, f: impl Fn(&ModeFunction) -> ModeFunction) -> Self {
        Self { grid: self.grid.clone(), n_theta: self.n_theta, modes: self.modes.iter().map(f).collect() }
    }

    fn zip_modes(&self, other: &Self, f: impl Fn(&ModeFunction, &ModeFunction) -> ModeFunction) -> Self {
        assert_eq!(self.n_theta, other.n_theta, "fields with different angular resolution");
        let modes = self.modes.iter().zip(&other.modes).map(|(a, b)| f(a, b)).collect();
        Self { grid: self.grid.clone(), n_theta: self.n_theta, modes }
    }

    /// Applies the operator mode by mode.
    pub fn apply(&self, kind: OperatorKind) -> Result<Self> {
        let modes = self.modes.par_iter().map(|m| apply_mode_operator(kind, m)).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: self.grid.clone(), n_theta: self.n_theta, modes })
    }
}

impl WeightedNorm for Field2D {
    fn norm_squares_on(&self, kind: SpaceKind, w: WeightPair, range: Range<usize>) -> [f64; 3] {
        let mut total = [0.0; 3];
        for m in &self.modes {
            let part = m.norm_squares_on(kind, w, range.clone());
            for k in 0..3 {
                total[k] += part[k];
            }
        }
        total
    }

    fn weighted_norm(&self, kind: SpaceKind, w: WeightPair) -> f64 {
        combine_norm_squares(self.norm_squares_on(kind, w, 0..self.grid.len()))
    }
}

/// Smallest node count accepted by [`apply_mode_operator`].
pub const MIN_OPERATOR_NODES: usize = 64;

/// `L_n u = (u_ττ − ν² u)/r² − c u` by fourth-order differences in `τ`.
pub fn apply_mode_operator(kind: OperatorKind, m: &ModeFunction) -> Result<ModeFunction> {
    let grid = &m.grid;
    if grid.len() < MIN_OPERATOR_NODES {
        return Err(Error::GridTooCoarse(format!(
            "operator needs at least {MIN_OPERATOR_NODES} radial nodes, got {}",
            grid.len()
        )));
    }
    let nu = kind.order(m.n);
    let nu2 = nu * nu;
    let mass = kind.mass();
    let utt = diff2(&m.values, grid.h());
    let values = grid
        .nodes()
        .iter()
        .zip(&m.values)
        .zip(&utt)
        .map(|((&r, &u), &d2)| (d2 - u * nu2) / (r * r) - u * mass)
        .collect();
    Ok(ModeFunction { n: m.n, grid: grid.clone(), values })
}

/// Largest pointwise residual `|L u − f|` over the interior nodes, relative
/// to the operator's natural size `((1 + ν²)/r² + c)|u| + |f|` at each node.
pub fn pointwise_residual(kind: OperatorKind, u: &ModeFunction, f: &ModeFunction) -> Result<f64> {
    let lu = apply_mode_operator(kind, u)?;
    let nu = kind.order(u.n);
    let weight = 1.0 + nu * nu;
    let mass = kind.mass();
    let r = u.grid.nodes();
    let mut worst: f64 = 0.0;
    for i in u.grid.interior() {
        let scale = (weight / (r[i] * r[i]) + mass) * u.values[i].norm() + f.values[i].norm();
        if scale > 0.0 {
            worst = worst.max((lu.values[i] - f.values[i]).norm() / scale);
        }
    }
    Ok(worst)
}

/// `‖L u − f‖ / ‖u‖` over the interior nodes, with `u` measured in the
/// operator's domain space and the residual in its range space.
pub fn weighted_residual(kind: OperatorKind, u: &ModeFunction, f: &ModeFunction, w: WeightPair) -> Result<f64> {
    let lu = apply_mode_operator(kind, u)?;
    let range = u.grid.interior();
    let res = lu.sub(f).weighted_norm_on(SpaceKind::l2(), kind.range_weights(w), range.clone());
    let scale = u.weighted_norm_on(kind.domain_space(), w, range);
    Ok(if scale == 0.0 { res } else { res / scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{bessel_k, BesselOrder};

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(1e-3, 30.0, 512).unwrap())
    }

    #[test]
    fn operator_kind_parsing_and_orders() {
        assert_eq!("shifted".parse::<OperatorKind>().unwrap(), OperatorKind::ShiftedHelmholtz);
        assert!("laplace".parse::<OperatorKind>().is_err());
        assert_eq!(OperatorKind::Helmholtz.order(-3), 3.0);
        assert!((OperatorKind::Euler.order(1) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(serde_json::to_string(&OperatorKind::ShiftedHelmholtz).unwrap(), "\"shifted_helmholtz\"");
    }

    #[test]
    fn radial_field_has_only_mode_zero() {
        let g = grid();
        let nt = 16;
        let samples: Vec<Complex64> =
            g.nodes().iter().flat_map(|&r| std::iter::repeat_n(Complex64::new((-r).exp(), 0.0), nt)).collect();
        let f = Field2D::decompose(g.clone(), nt, &samples).unwrap();
        for m in f.modes() {
            let peak = m.sup_on(0..g.len());
            if m.n() == 0 {
                assert!((peak - (-1e-3f64).exp()).abs() < 1e-14);
            } else {
                assert!(peak < 1e-15);
            }
        }
    }

    #[test]
    fn cosine_splits_into_two_halves() {
        let g = grid();
        let nt = 16;
        let thetas: Vec<f64> = (0..nt).map(|j| 2.0 * std::f64::consts::PI * j as f64 / nt as f64).collect();
        let samples: Vec<Complex64> = g
            .nodes()
            .iter()
            .flat_map(|&r| thetas.iter().map(move |&t| Complex64::new(r * (3.0 * t).cos(), 0.0)))
            .collect();
        let f = Field2D::decompose(g.clone(), nt, &samples).unwrap();
        for n in [-3, 3] {
            let m = f.mode(n).unwrap();
            for (v, r) in m.values().iter().zip(g.nodes()) {
                assert!((v - Complex64::new(r / 2.0, 0.0)).norm() < 1e-14 * r.max(1.0));
            }
        }
    }

    #[test]
    fn shape_errors() {
        let g = grid();
        assert!(Field2D::decompose(g.clone(), 12, &[]).is_err());
        assert!(Field2D::decompose(g.clone(), 8, &[Complex64::default(); 3]).is_err());
        assert!(ModeFunction::new(0, g, vec![]).is_err());
    }

    #[test]
    fn euler_annihilates_power_law() {
        let g = Arc::new(RadialGrid::default());
        for n in 0..3 {
            let qn = q(n as u32);
            for s in [qn, -qn] {
                let u = ModeFunction::from_real(n, g.clone(), |r| r.powf(s));
                let zero = ModeFunction::zeros(n, g.clone());
                let res = pointwise_residual(OperatorKind::Euler, &u, &zero).unwrap();
                assert!(res < 1e-8, "n={n} s={s}: {res}");
            }
        }
    }

    #[test]
    fn helmholtz_annihilates_k_n() {
        let g = Arc::new(RadialGrid::default());
        for n in 0..6u32 {
            let o = BesselOrder::integer(n);
            let u = ModeFunction::from_real(n as i32, g.clone(), |r| bessel_k(o, r).unwrap());
            let zero = ModeFunction::zeros(n as i32, g.clone());
            let w = WeightPair::new(n as f64 - 0.5, 0.0).unwrap();
            let res = weighted_residual(OperatorKind::Helmholtz, &u, &zero, w).unwrap();
            assert!(res < 1e-6, "n={n}: {res}");
        }
    }

    #[test]
    fn residual_of_zero_is_zero() {
        let g = grid();
        let z = ModeFunction::zeros(2, g);
        assert_eq!(pointwise_residual(OperatorKind::Helmholtz, &z, &z).unwrap(), 0.0);
    }

    #[test]
    fn coarse_grid_rejected() {
        let g = Arc::new(RadialGrid::new(1e-3, 20.0, 32).unwrap());
        let u = ModeFunction::zeros(0, g);
        assert!(matches!(apply_mode_operator(OperatorKind::Euler, &u), Err(Error::GridTooCoarse(_))));
    }
}
