//! Oracles: manufactured solutions, a-priori inequality ratios, and empirical
//! bounds for the mode inverses.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fredholm::classify;
use crate::green::{project_kernel, solve_mode};
use crate::grid::{RadialGrid, SpaceKind, WeightPair, WeightedNorm};
use crate::modes::{Field2D, ModeFunction, OperatorKind};
use crate::special::ln_k_pair;

/// Seed for the lemma corpus.
pub const CORPUS_SEED: u64 = 0x5eed_a11a;
/// Seed for the random right-hand sides of the bound estimate.
pub const BOUND_SEED: u64 = 0x5eed_b0d5;
/// Nodes kept clear at each edge by compactly supported test functions.
pub const EDGE_MARGIN: usize = 5;

/// Closed-form test solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `r^a e^{−r²}`.
    GaussianPower,
    /// `K_ν(r)` under a log-normal bump in `τ`; by default the product peaks
    /// at `r = 1`.
    BesselDamped,
    /// Smooth bump supported on an annulus.
    AnnulusBump,
}

impl Family {
    pub const ALL: [Family; 3] = [Self::GaussianPower, Self::BesselDamped, Self::AnnulusBump];

    pub fn name(self) -> &'static str {
        match self {
            Self::GaussianPower => "gaussian_power",
            Self::BesselDamped => "bessel_damped",
            Self::AnnulusBump => "annulus_bump",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Self::GaussianPower => &["a"],
            Self::BesselDamped => &["center", "width"],
            Self::AnnulusBump => &["r_inner", "r_outer"],
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A family with its numeric parameters; absent keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manufactured {
    pub family: Family,
    pub params: BTreeMap<String, f64>,
}

impl Manufactured {
    pub fn new(family: Family) -> Self {
        Self { family, params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Result<Self> {
        if !self.family.keys().contains(&key) {
            return Err(Error::Parse(format!("{} takes {:?}, not `{key}`", self.family, self.family.keys())));
        }
        if !value.is_finite() {
            return Err(Error::Parse(format!("parameter `{key}` must be finite")));
        }
        self.params.insert(key.to_string(), value);
        Ok(self)
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

/// `(u, L_n u)` sampled on `grid`, with `L_n u` from hand-derived formulas.
pub fn manufactured_case(
    kind: OperatorKind,
    n: i32,
    case: &Manufactured,
    grid: Arc<RadialGrid>,
) -> Result<(ModeFunction, ModeFunction)> {
    let nu = kind.order(n);
    let c = kind.mass();
    let nodes = grid.nodes();
    let (u, f): (Vec<f64>, Vec<f64>) = match case.family {
        Family::GaussianPower => {
            let a = case.get("a", nu);
            let singular = a * a - nu * nu;
            nodes
                .iter()
                .map(|&r| {
                    let e = (a * r.ln() - r * r).exp();
                    let lead = if singular == 0.0 { 0.0 } else { singular / (r * r) };
                    (e, e * (lead - (4.0 * a + 4.0 + c) + 4.0 * r * r))
                })
                .unzip()
        }
        Family::BesselDamped => {
            let s = case.get("width", 1.0);
            // K_ν ~ r^{−ν} shifts the peak of the product to center − ν s²
            let t0 = case.get("center", nu * s * s);
            if s <= 0.0 {
                return Err(Error::Parse("width must be positive".into()));
            }
            nodes
                .iter()
                .map(|&r| {
                    let x = (r.ln() - t0) / s;
                    let (ln_k, ln_k1) = ln_k_pair(nu, r);
                    let u = (ln_k - 0.5 * x * x).exp();
                    if u == 0.0 {
                        return (0.0, 0.0);
                    }
                    // K_ττ = (r² + ν²) K, so only the bump derivatives survive.
                    let d = nu - r * (ln_k1 - ln_k).exp();
                    let (b1, b2) = (-x / s, (x * x - 1.0) / (s * s));
                    (u, u * (1.0 - c + (2.0 * d * b1 + b2) / (r * r)))
                })
                .unzip()
        }
        Family::AnnulusBump => {
            let (r1, r2) = (case.get("r_inner", 0.5), case.get("r_outer", 2.0));
            if !(r1 > 0.0 && r2 > r1) {
                return Err(Error::Parse("annulus needs 0 < r_inner < r_outer".into()));
            }
            let (centre, half) = ((r1 * r2).ln() / 2.0, (r2 / r1).ln() / 2.0);
            nodes
                .iter()
                .map(|&r| {
                    let (b, _, b2) = smooth_bump((r.ln() - centre) / half);
                    (b, (b2 / (half * half) - nu * nu * b) / (r * r) - c * b)
                })
                .unzip()
        }
    };
    let real = |v: Vec<f64>| v.into_iter().map(|x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
    Ok((ModeFunction::new(n, grid.clone(), real(u))?, ModeFunction::new(n, grid, real(f))?))
}

/// `(B, B′, B″)` for `B(x) = (1 − x²)⁶` on `|x| < 1`, zero outside; `C⁵`.
pub fn smooth_bump(x: f64) -> (f64, f64, f64) {
    let s = 1.0 - x * x;
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let s4 = s.powi(4);
    (s4 * s * s, -12.0 * x * s4 * s, (120.0 * x * x - 12.0 * s) * s4)
}

/// Errors of a manufactured solve under successive halvings of the `τ` step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryStudy {
    pub n_r: Vec<usize>,
    /// Relative domain-norm error on interior nodes, one per grid.
    pub errors: Vec<f64>,
    /// `log₂(e_k / e_{k+1})`.
    pub orders: Vec<f64>,
}

/// Relative domain-norm distance between `solve(L u)` and `u`, both with
/// kernel components removed.
pub fn recovery_error(
    kind: OperatorKind,
    n: i32,
    case: &Manufactured,
    w: WeightPair,
    grid: Arc<RadialGrid>,
) -> Result<f64> {
    let (u, f) = manufactured_case(kind, n, case, grid.clone())?;
    let solved = solve_mode(kind, &f, w)?;
    let exact = project_kernel(kind, &u, w)?;
    let space = kind.domain_space();
    let interior = grid.interior();
    let scale = exact.weighted_norm_on(space, w, interior.clone());
    if scale == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(solved.u.sub(&exact).weighted_norm_on(space, w, interior) / scale)
}

/// Recovery errors on `base` and `halvings` successive refinements.
pub fn recovery_study(
    kind: OperatorKind,
    n: i32,
    case: &Manufactured,
    w: WeightPair,
    base: &RadialGrid,
    halvings: usize,
) -> Result<RecoveryStudy> {
    let mut grids = vec![base.clone()];
    for _ in 0..halvings {
        let next = grids.last().expect("nonempty").refined();
        grids.push(next);
    }
    let errors =
        grids.iter().map(|g| recovery_error(kind, n, case, w, Arc::new(g.clone()))).collect::<Result<Vec<_>>>()?;
    let orders = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    Ok(RecoveryStudy { n_r: grids.iter().map(RadialGrid::len).collect(), errors, orders })
}

fn check_support(u: &Field2D) -> Result<()> {
    let len = u.grid().len();
    let peak = u.modes().iter().map(|m| m.sup_on(0..len)).fold(0.0, f64::max);
    let edge =
        u.modes().iter().map(|m| m.sup_on(0..EDGE_MARGIN).max(m.sup_on(len - EDGE_MARGIN..len))).fold(0.0, f64::max);
    if edge > 1e-12 * peak {
        return Err(Error::GridTooNarrow(format!(
            "test function must vanish within {EDGE_MARGIN} nodes of the grid edges"
        )));
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den == 0.0 || !den.is_finite() {
        Err(Error::ZeroDenominator)
    } else {
        Ok(num / den)
    }
}

/// `‖D²u‖_{L²_{σ+2,γ+2}} / (‖Δu‖_{L²_{σ+2,γ+2}} + ‖Du‖_{L²_{σ+1,γ+1}})`.
pub fn interpolation_ratio(u: &Field2D, w: WeightPair) -> Result<f64> {
    check_support(u)?;
    let interior = u.grid().interior();
    let parts = u.norm_squares_on(SpaceKind::m(2), w, interior.clone());
    let laplacian = u.apply(OperatorKind::Helmholtz)?.add(u);
    let lap = laplacian.weighted_norm_on(SpaceKind::l2(), w.shifted(2.0, 2.0), interior);
    ratio(parts[2].sqrt(), lap + parts[1].sqrt())
}

/// `‖u‖_{H²_{σ,γ}} / (‖(Δ − 1)u‖_{L²_{σ+2,γ}} + ‖u‖_{L²_{σ,γ}})`.
pub fn helmholtz_apriori_ratio(u: &Field2D, w: WeightPair) -> Result<f64> {
    check_support(u)?;
    let interior = u.grid().interior();
    let full = u.weighted_norm_on(SpaceKind::h(2), w, interior.clone());
    let image =
        u.apply(OperatorKind::Helmholtz)?.weighted_norm_on(SpaceKind::l2(), w.shifted(2.0, 0.0), interior.clone());
    let base = u.weighted_norm_on(SpaceKind::l2(), w, interior);
    ratio(full, image + base)
}

/// One mode of a random test function: a complex multiple of a smooth bump
/// supported on `[e^{lo}, e^{hi}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpTerm {
    pub mode: i32,
    pub lo: f64,
    pub hi: f64,
    pub coefficient: Complex64,
}

impl BumpTerm {
    fn random(rng: &mut ChaCha8Rng, mode: i32, window: (f64, f64)) -> Self {
        let span = window.1 - window.0;
        let len = rng.gen_range(0.5..3.0f64).min(span);
        let lo = rng.gen_range(window.0..=window.1 - len);
        let coefficient = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        Self { mode, lo, hi: lo + len, coefficient }
    }

    pub fn sample(&self, grid: Arc<RadialGrid>) -> Result<ModeFunction> {
        let (centre, half) = ((self.lo + self.hi) / 2.0, (self.hi - self.lo) / 2.0);
        let c = self.coefficient;
        Ok(ModeFunction::from_fn(self.mode, grid, |r| c * smooth_bump((r.ln() - centre) / half).0))
    }
}

/// `τ` window keeping a margin of one unit from each grid edge.
fn bump_window(grid: &RadialGrid) -> (f64, f64) {
    (grid.r_min().ln() + 1.0, grid.r_max().ln() - 1.0)
}

/// A band-limited test function: a sum of bump terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpField {
    pub terms: Vec<BumpTerm>,
}

impl BumpField {
    pub fn sample(&self, grid: Arc<RadialGrid>, n_theta: usize) -> Result<Field2D> {
        let mut field = Field2D::zeros(grid.clone(), n_theta)?;
        for t in &self.terms {
            let m = t.sample(grid.clone())?;
            let slot = field
                .mode_mut(t.mode)
                .ok_or_else(|| Error::ShapeMismatch(format!("mode {} exceeds n_theta = {n_theta}", t.mode)))?;
            *slot = slot.add(&m);
        }
        Ok(field)
    }
}

/// `count` random fields with modes `|n| ≤ band`, frozen by `seed`.
pub fn bump_corpus(grid: &RadialGrid, count: usize, band: i32, seed: u64) -> Vec<BumpField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = bump_window(grid);
    (0..count)
        .map(|_| BumpField { terms: (-band..=band).map(|n| BumpTerm::random(&mut rng, n, window)).collect() })
        .collect()
}

/// Largest ratio over a corpus, computed in parallel and reduced in order.
pub fn corpus_max(
    corpus: &[BumpField],
    grid: Arc<RadialGrid>,
    n_theta: usize,
    w: WeightPair,
    ratio: fn(&Field2D, WeightPair) -> Result<f64>,
) -> Result<f64> {
    let values = corpus.par_iter().map(|b| ratio(&b.sample(grid.clone(), n_theta)?, w)).collect::<Result<Vec<_>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Empirical operator norm of the inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    /// `max ‖u_n‖_domain / ‖f_n‖_range` over samples and modes.
    pub estimate: f64,
    /// Mode attaining the maximum.
    pub mode: i32,
    /// `max(1/|γ|, 1/(σ+2))` for the Euler operator.
    pub envelope: Option<f64>,
    pub samples: usize,
    pub max_mode: i32,
}

/// Maximizes `‖solve(f)‖ / ‖f‖` over `sample_count` random right-hand sides
/// in each mode `0..=max_mode`. The inverse is block diagonal and `±n` behave
/// alike, so mode-wise sampling bounds the full field from below. Each
/// `(sample, mode)` pair has its own seed, so the estimate for a smaller
/// `max_mode` is a prefix of the one for a larger.
pub fn bound_constant_estimate(
    kind: OperatorKind,
    w: WeightPair,
    sample_count: usize,
    max_mode: i32,
    grid: Arc<RadialGrid>,
) -> Result<BoundEstimate> {
    let report = classify(kind, w);
    if report.is_resonant() {
        return Err(Error::ResonantWeight(format!("modes {:?} resonate", report.resonant_modes)));
    }
    let window = bump_window(&grid);
    let space = kind.domain_space();
    let range_w = kind.range_weights(w);
    let interior = grid.interior();
    let jobs: Vec<(usize, i32)> = (0..sample_count).flat_map(|s| (0..=max_mode).map(move |n| (s, n))).collect();
    let ratios = jobs
        .par_iter()
        .map(|&(s, n)| {
            let mut rng = ChaCha8Rng::seed_from_u64(BOUND_SEED ^ ((s as u64) << 20) ^ n as u64);
            let mut f = ModeFunction::zeros(n, grid.clone());
            for _ in 0..2 {
                f = f.add(&BumpTerm::random(&mut rng, n, window).sample(grid.clone())?);
            }
            let sol = solve_mode(kind, &f, w).map_err(|e| e.in_mode(n))?;
            let den = sol.rhs.weighted_norm_on(SpaceKind::l2(), range_w, interior.clone());
            ratio(sol.u.weighted_norm_on(space, w, interior.clone()), den).map(|r| (r, n))
        })
        .collect::<Result<Vec<_>>>()?;
    let (estimate, mode) = ratios.into_iter().fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
    let envelope = (kind == OperatorKind::Euler && w.gamma != 0.0 && w.sigma != -2.0)
        .then(|| (1.0 / w.gamma.abs()).max(1.0 / (w.sigma + 2.0)));
    Ok(BoundEstimate { estimate, mode, envelope, samples: sample_count, max_mode })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(s: f64, g: f64) -> WeightPair {
        WeightPair::new(s, g).unwrap()
    }

    /// `L_n u` at `r` by Richardson-extrapolated central differences in `τ`.
    fn richardson_apply(kind: OperatorKind, n: i32, case: &Manufactured, r: f64) -> (f64, f64, f64) {
        let h: f64 = 2e-3;
        let g = Arc::new(RadialGrid::new(r * (-8.0 * h).exp(), r * (8.0 * h).exp(), 17).unwrap());
        let (u, f) = manufactured_case(kind, n, case, g).unwrap();
        let v: Vec<f64> = u.values().iter().map(|z| z.re).collect();
        let d2 = |k: usize| (v[8 + k] - 2.0 * v[8] + v[8 - k]) / ((k as f64) * h).powi(2);
        let utt = (4.0 * d2(1) - d2(2)) / 3.0;
        let nu = kind.order(n);
        let applied = (utt - nu * nu * v[8]) / (r * r) - kind.mass() * v[8];
        let scale = (utt.abs() + nu * nu * v[8].abs()) / (r * r) + v[8].abs();
        (applied, f.values()[8].re, scale)
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        let cases = [
            Manufactured::new(Family::GaussianPower),
            Manufactured::new(Family::GaussianPower).with("a", 0.0).unwrap(),
            Manufactured::new(Family::BesselDamped),
            Manufactured::new(Family::BesselDamped).with("center", 1.0).unwrap().with("width", 0.7).unwrap(),
            Manufactured::new(Family::AnnulusBump),
        ];
        for kind in OperatorKind::ALL {
            for n in [0, 1, 3] {
                for case in &cases {
                    for r in [0.2, 0.9, 1.3, 2.5] {
                        let (fd, exact, scale) = richardson_apply(kind, n, case, r);
                        assert!((fd - exact).abs() <= 1e-8 * scale, "{kind} n={n} {case:?} r={r}: {fd} vs {exact}");
                    }
                }
            }
        }
    }

    #[test]
    fn unknown_family_and_key() {
        assert!(matches!("sinc".parse::<Family>(), Err(Error::UnknownFamily(_))));
        assert!(Manufactured::new(Family::AnnulusBump).with("a", 1.0).is_err());
    }

    #[test]
    fn euler_power_cancels_singular_term() {
        let g = Arc::new(RadialGrid::default());
        let (_, f) =
            manufactured_case(OperatorKind::Euler, 1, &Manufactured::new(Family::GaussianPower), g.clone()).unwrap();
        // f ~ −(4q + 4) r^q near the origin, with no r^{q−2} part
        let q = OperatorKind::Euler.order(1);
        let r = g.nodes()[0];
        assert!((f.values()[0].re / r.powf(q) + 4.0 * q + 4.0).abs() < 1e-6);
    }

    #[test]
    fn euler_mode_zero_with_a_zero_leaves_range_for_low_sigma() {
        let case = Manufactured::new(Family::GaussianPower).with("a", 0.0).unwrap();
        let norm = |sigma: f64, r_min: f64| {
            let g = Arc::new(RadialGrid::new(r_min, 40.0, 1024).unwrap());
            let (_, f) = manufactured_case(OperatorKind::Euler, 0, &case, g).unwrap();
            f.weighted_norm(SpaceKind::l2(), wp(sigma + 2.0, 2.0))
        };
        // logarithmic growth at σ = −1, power growth below
        let sq = |r_min: f64| norm(-1.0, r_min).powi(2);
        let (d1, d2) = (sq(1e-8) - sq(1e-4), sq(1e-12) - sq(1e-8));
        assert!(d1 > 0.1 * sq(1e-4) && (d2 / d1 - 1.0).abs() < 0.05, "{d1} {d2}");
        assert!(norm(-1.5, 1e-8) > 10.0 * norm(-1.5, 1e-4));
        assert!((norm(-0.5, 1e-8) / norm(-0.5, 1e-4) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn manufactured_solutions_are_recovered() {
        let g = Arc::new(RadialGrid::default());
        for (kind, w) in [
            (OperatorKind::Helmholtz, wp(0.5, 0.0)),
            (OperatorKind::ShiftedHelmholtz, wp(-0.5, 0.0)),
            (OperatorKind::Euler, wp(-0.5, -0.5)),
            (OperatorKind::Euler, wp(0.6, -0.5)),
        ] {
            for family in Family::ALL {
                let e = recovery_error(kind, 1, &Manufactured::new(family), w, g.clone()).unwrap();
                assert!(e < 1e-4, "{kind} {family}: {e}");
            }
        }
    }

    #[test]
    fn lemma_ratios_on_radial_bump() {
        let g = Arc::new(RadialGrid::default());
        let bump =
            BumpField { terms: vec![BumpTerm { mode: 0, lo: -1.0, hi: 1.0, coefficient: Complex64::new(1.0, 0.0) }] };
        let u = bump.sample(g.clone(), 16).unwrap();
        let r = interpolation_ratio(&u, wp(0.0, 0.0)).unwrap();
        assert!(r > 0.0 && r <= 3.0, "{r}");
        let r = helmholtz_apriori_ratio(&u, wp(0.0, 0.0)).unwrap();
        assert!(r > 0.0 && r.is_finite(), "{r}");
        let zero = Field2D::zeros(g, 16).unwrap();
        assert_eq!(interpolation_ratio(&zero, wp(0.0, 0.0)), Err(Error::ZeroDenominator));
        assert_eq!(helmholtz_apriori_ratio(&zero, wp(0.0, 0.0)), Err(Error::ZeroDenominator));
    }

    #[test]
    fn edge_support_rejected() {
        let g = Arc::new(RadialGrid::default());
        let u = Field2D::from_modes(g.clone(), 16, [ModeFunction::from_real(0, g, |r| (-r).exp())]).unwrap();
        assert!(matches!(interpolation_ratio(&u, wp(0.0, 0.0)), Err(Error::GridTooNarrow(_))));
    }

    #[test]
    fn corpus_is_reproducible() {
        let g = RadialGrid::default();
        assert_eq!(bump_corpus(&g, 5, 3, CORPUS_SEED), bump_corpus(&g, 5, 3, CORPUS_SEED));
        assert_ne!(bump_corpus(&g, 5, 3, CORPUS_SEED), bump_corpus(&g, 5, 3, CORPUS_SEED + 1));
    }

    #[test]
    fn bound_estimate_is_finite_and_mode_truncation_stable() {
        let g = Arc::new(RadialGrid::default());
        let e = bound_constant_estimate(OperatorKind::Euler, wp(-0.5, -0.5), 20, 4, g.clone()).unwrap();
        assert!(e.estimate.is_finite() && e.estimate > 0.0);
        assert_eq!(e.envelope, Some(2.0));
        let a = bound_constant_estimate(OperatorKind::Helmholtz, wp(0.5, 0.0), 4, 8, g.clone()).unwrap();
        let b = bound_constant_estimate(OperatorKind::Helmholtz, wp(0.5, 0.0), 4, 16, g.clone()).unwrap();
        assert!((a.estimate / b.estimate - 1.0).abs() < 0.1, "{a:?} {b:?}");
        assert!(matches!(
            bound_constant_estimate(OperatorKind::Helmholtz, wp(1.0, 0.0), 1, 1, g),
            Err(Error::ResonantWeight(_))
        ));
    }
}
