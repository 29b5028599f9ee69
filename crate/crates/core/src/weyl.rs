//! Near-kernel sequences at threshold weights.
//!
//! At a threshold the homogeneous power `r^s` has weighted density exactly
//! `dτ`, so cutting it off with a bump of width `j` in `τ = ln r` gives a
//! function of norm `~√j` whose image only sees the bump derivatives, of size
//! `~1/j`. The normalized ratio `‖L u_j‖ / ‖u_j‖` then decays like `1/j`.
//! Away from a threshold the weighted profile is `e^{ετ}`, which pins the mass
//! near one ramp and leaves a floor of order `ε`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, SpaceKind, WeightPair, WeightedNorm};
use crate::modes::{apply_mode_operator, Field2D, ModeFunction, OperatorKind};

/// Which end of the half-line carries the plateau.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeylSide {
    /// Plateau in `τ < 0`, probing the weight at the origin.
    Interior,
    /// Plateau in `τ > 0`, probing the weight at infinity.
    Exterior,
}

impl FromStr for WeylSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(Self::Interior),
            "exterior" => Ok(Self::Exterior),
            other => Err(Error::Parse(format!("unknown side `{other}` (expected interior or exterior)"))),
        }
    }
}

impl fmt::Display for WeylSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Interior => "interior",
            Self::Exterior => "exterior",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylParams {
    pub kind: OperatorKind,
    pub mode: u32,
    pub side: WeylSide,
    /// Plateau and ramp length in `τ`.
    pub j: u32,
    pub weights: WeightPair,
}

impl WeylParams {
    /// The homogeneous exponent `±ν` nearest the threshold of the chosen side.
    pub fn exponent(&self) -> f64 {
        let nu = self.kind.order(self.mode as i32);
        let target = match self.side {
            WeylSide::Interior => -(self.weights.sigma + 1.0),
            WeylSide::Exterior => -(self.weights.gamma + 1.0),
        };
        if (nu - target).abs() <= (-nu - target).abs() {
            nu
        } else {
            -nu
        }
    }

    /// Distance of the exponent from the threshold; zero at resonance.
    pub fn detuning(&self) -> f64 {
        let t = match self.side {
            WeylSide::Interior => self.weights.sigma + 1.0,
            WeylSide::Exterior => self.weights.gamma + 1.0,
        };
        (self.exponent() + t).abs()
    }

    /// `τ` support `[lo, hi]` of the cut-off.
    pub fn support(&self) -> (f64, f64) {
        let j = self.j as f64;
        match self.side {
            WeylSide::Interior => (-3.0 * j, 0.0),
            WeylSide::Exterior => (0.0, 3.0 * j),
        }
    }

    fn check(&self, grid: &RadialGrid) -> Result<()> {
        if self.j == 0 {
            return Err(Error::InvalidGrid("scale parameter j must be at least 1".into()));
        }
        if self.side == WeylSide::Exterior && self.kind != OperatorKind::Euler {
            return Err(Error::ResonantWeight(format!(
                "{} has no threshold at infinity; use the interior side",
                self.kind
            )));
        }
        let (lo, hi) = self.support();
        // a few nodes of margin so the support stays clear of one-sided stencils
        let margin = 6.0 * grid.h();
        if grid.r_min().ln() > lo - margin || grid.r_max().ln() < hi + margin {
            return Err(Error::GridTooNarrow(format!(
                "support e^{lo}..e^{hi} needs r_min ≤ {:e}, r_max ≥ {:e}; grid spans {:e}..{:e}",
                (lo - margin).exp(),
                (hi + margin).exp(),
                grid.r_min(),
                grid.r_max()
            )));
        }
        Ok(())
    }
}

/// Quintic `C²` step from 0 at `x ≤ 0` to 1 at `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

/// Cut-off `χ_j(τ)`: ramp up over the first third of the support, plateau,
/// ramp down over the last third.
pub fn cutoff(p: &WeylParams, tau: f64) -> f64 {
    let (lo, _) = p.support();
    let j = p.j as f64;
    let x = (tau - lo) / j;
    smooth_step(x) * smooth_step(3.0 - x)
}

/// A grid wide enough for every scale up to `j_max` on the given side.
pub fn weyl_grid(side: WeylSide, j_max: u32, n_r: usize) -> Result<RadialGrid> {
    let reach = (3.0 * j_max as f64 + 1.0).exp();
    match side {
        WeylSide::Interior => RadialGrid::new(1.0 / reach, RadialGrid::DEFAULT_R_MAX, n_r),
        WeylSide::Exterior => RadialGrid::new(RadialGrid::DEFAULT_R_MIN, reach, n_r),
    }
}

/// Radial profile `χ_j(τ) r^s`, unit norm in the domain space.
pub fn weyl_mode(p: &WeylParams, grid: Arc<RadialGrid>) -> Result<ModeFunction> {
    p.check(&grid)?;
    let s = p.exponent();
    let raw = ModeFunction::from_real(p.mode as i32, grid, |r| {
        let tau = r.ln();
        let c = cutoff(p, tau);
        if c == 0.0 {
            0.0
        } else {
            c * (s * tau).exp()
        }
    });
    let norm = raw.weighted_norm(p.kind.domain_space(), p.weights);
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(raw.scaled(Complex64::new(1.0 / norm, 0.0)))
}

/// `u_j(r, θ) = χ_j(τ) r^s e^{ikθ}` as a field.
pub fn weyl_element(p: &WeylParams, grid: Arc<RadialGrid>, n_theta: usize) -> Result<Field2D> {
    let m = weyl_mode(p, grid.clone())?;
    Field2D::from_modes(grid, n_theta, [m])
}

/// `‖L u_j‖` in the range space for the unit-norm element.
pub fn weyl_ratio(p: &WeylParams, grid: Arc<RadialGrid>) -> Result<f64> {
    let u = weyl_mode(p, grid)?;
    let lu = apply_mode_operator(p.kind, &u)?;
    let range = u.grid().interior();
    Ok(lu.weighted_norm_on(SpaceKind::l2(), p.kind.range_weights(p.weights), range))
}

/// One entry of a ratio sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    pub j: u32,
    pub ratio: f64,
}

/// Ratios for `j = 1, 2, 4, …, j_max` on a shared grid.
pub fn weyl_sequence(base: &WeylParams, j_max: u32, grid: Arc<RadialGrid>) -> Result<Vec<WeylPoint>> {
    std::iter::successors(Some(1u32), |j| j.checked_mul(2))
        .take_while(|&j| j <= j_max)
        .map(|j| {
            let p = WeylParams { j, ..*base };
            weyl_ratio(&p, grid.clone()).map(|ratio| WeylPoint { j, ratio })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::q;

    fn euler_interior(sigma: f64, j: u32) -> WeylParams {
        WeylParams {
            kind: OperatorKind::Euler,
            mode: 1,
            side: WeylSide::Interior,
            j,
            weights: WeightPair::new(sigma, 0.0).unwrap(),
        }
    }

    #[test]
    fn smooth_step_is_c2() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        let d = 1e-4;
        for x in [0.0, 1.0] {
            let second = (smooth_step(x + d) - 2.0 * smooth_step(x) + smooth_step(x - d)) / (d * d);
            assert!(second.abs() < 1e-2, "{second}");
        }
    }

    #[test]
    fn exponent_tracks_threshold() {
        let p = euler_interior(q(1) - 1.0, 1);
        assert!((p.exponent() + q(1)).abs() < 1e-15);
        assert!(p.detuning() < 1e-15);
        let p = WeylParams { side: WeylSide::Exterior, weights: WeightPair::new(0.0, -q(1) - 1.0).unwrap(), ..p };
        assert!((p.exponent() - q(1)).abs() < 1e-15);
    }

    #[test]
    fn element_has_unit_norm() {
        let g = Arc::new(weyl_grid(WeylSide::Interior, 1, 512).unwrap());
        let p = euler_interior(q(1) - 1.0, 1);
        let f = weyl_element(&p, g, 8).unwrap();
        let n = f.weighted_norm(SpaceKind::m(2), p.weights);
        assert!((n - 1.0).abs() < 1e-12, "{n}");
        assert_eq!(f.active_modes().count(), 1);
    }

    #[test]
    fn narrow_grid_rejected() {
        let g = Arc::new(RadialGrid::default());
        let p = euler_interior(q(1) - 1.0, 4);
        assert!(matches!(weyl_mode(&p, g).unwrap_err(), Error::GridTooNarrow(_)));
    }

    #[test]
    fn resonant_ratios_decay() {
        let g = Arc::new(weyl_grid(WeylSide::Interior, 8, 2048).unwrap());
        let seq = weyl_sequence(&euler_interior(q(1) - 1.0, 1), 8, g.clone()).unwrap();
        for w in seq.windows(2) {
            assert!(w[1].ratio <= 0.7 * w[0].ratio, "{seq:?}");
        }
        let control = weyl_sequence(&euler_interior(-1.0, 1), 8, g).unwrap();
        assert!(control[3].ratio > 10.0 * seq[3].ratio, "{control:?} vs {seq:?}");
    }

    #[test]
    fn helmholtz_integer_sigma_has_weyl_sequence() {
        let g = Arc::new(weyl_grid(WeylSide::Interior, 8, 2048).unwrap());
        let base = WeylParams {
            kind: OperatorKind::Helmholtz,
            mode: 1,
            side: WeylSide::Interior,
            j: 1,
            weights: WeightPair::new(0.0, 0.0).unwrap(),
        };
        let seq = weyl_sequence(&base, 8, g).unwrap();
        for w in seq.windows(2) {
            assert!(w[1].ratio <= 0.7 * w[0].ratio, "{seq:?}");
        }
        assert!(matches!(
            weyl_mode(&WeylParams { side: WeylSide::Exterior, ..base }, Arc::new(RadialGrid::default())),
            Err(Error::ResonantWeight(_))
        ));
    }
}
