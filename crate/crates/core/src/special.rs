//! Modified Bessel functions `I_ν` and `K_ν` of real order `0 ≤ ν ≤ 64`
//! and real positive argument.
//!
//! * `I_ν` is summed from its power series (all terms positive, so there is
//!   no cancellation) for `z ≤ max(40, ν²)`, and from the Hankel asymptotic
//!   expansion beyond.
//! * `K_ν` uses Temme's series for `z ≤ 2` and Steed's continued fraction
//!   for `z > 2` at the reduced order `μ = ν − round(ν) ∈ [−½, ½)`, followed
//!   by upward recurrence in the order, which is stable for `K`.
//!
//! Every function has an exponentially scaled companion (`e^{−z} I_ν`,
//! `e^{z} K_ν`) so that products appearing in Green's functions can be
//! formed without overflow.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest order accepted by the public evaluators.
pub const MAX_ORDER: f64 = 64.0;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;

/// Order of a modified Bessel function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselOrder {
    nu: f64,
}

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::OrderOutOfRange(nu));
        }
        Ok(Self { nu })
    }

    /// Integer order `n`.
    pub fn integer(n: u32) -> Self {
        Self { nu: n as f64 }
    }

    /// Order `q(k) = √(k² + 1)` of the shifted operator's mode `k`.
    pub fn shifted(k: u32) -> Self {
        Self { nu: q(k) }
    }

    pub fn nu(self) -> f64 {
        self.nu
    }

    pub fn is_integer(self) -> bool {
        (self.nu - self.nu.round()).abs() <= 1e-12
    }
}

/// `q(k) = √(k² + 1)`.
pub fn q(k: u32) -> f64 {
    let k = k as f64;
    (k * k + 1.0).sqrt()
}

/// The pair `(e^{−z} I_ν(z), e^{z} K_ν(z))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPair {
    pub i_scaled: f64,
    pub k_scaled: f64,
}

fn check(order: BesselOrder, z: f64) -> Result<()> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::NonPositiveArgument(z));
    }
    if order.nu > MAX_ORDER {
        return Err(Error::OrderOutOfRange(order.nu));
    }
    Ok(())
}

fn unscale(what: &'static str, scaled: f64, log_factor: f64, order: BesselOrder, z: f64) -> Result<f64> {
    let log_value = scaled.ln() + log_factor;
    if log_value > f64::MAX.ln() {
        return Err(Error::Overflow { what, order: order.nu, z });
    }
    let value = scaled * log_factor.exp();
    if !value.is_finite() {
        return Err(Error::Overflow { what, order: order.nu, z });
    }
    if value < f64::MIN_POSITIVE {
        return Err(Error::Underflow { what, order: order.nu, z });
    }
    Ok(value)
}

/// `I_ν(z)`.
pub fn bessel_i(order: BesselOrder, z: f64) -> Result<f64> {
    let s = bessel_i_scaled(order, z)?;
    unscale("I", s, z, order, z)
}

/// `e^{−z} I_ν(z)`.
pub fn bessel_i_scaled(order: BesselOrder, z: f64) -> Result<f64> {
    check(order, z)?;
    let v = i_scaled_raw(order.nu, z);
    if !v.is_finite() {
        return Err(Error::Overflow { what: "scaled I", order: order.nu, z });
    }
    if v < f64::MIN_POSITIVE {
        return Err(Error::Underflow { what: "scaled I", order: order.nu, z });
    }
    Ok(v)
}

/// `K_ν(z)`.
pub fn bessel_k(order: BesselOrder, z: f64) -> Result<f64> {
    let s = bessel_k_scaled(order, z)?;
    unscale("K", s, -z, order, z)
}

/// `e^{z} K_ν(z)`.
pub fn bessel_k_scaled(order: BesselOrder, z: f64) -> Result<f64> {
    check(order, z)?;
    let (k, _) = k_pair_scaled(order.nu, z);
    if !k.is_finite() {
        return Err(Error::Overflow { what: "scaled K", order: order.nu, z });
    }
    Ok(k)
}

/// Both scaled functions at once.
pub fn bessel_ik_scaled(order: BesselOrder, z: f64) -> Result<ScaledPair> {
    Ok(ScaledPair { i_scaled: bessel_i_scaled(order, z)?, k_scaled: bessel_k_scaled(order, z)? })
}

/// `I′_ν(z) = I_{ν+1}(z) + (ν/z) I_ν(z)`.
pub fn bessel_i_prime(order: BesselOrder, z: f64) -> Result<f64> {
    let s = bessel_i_prime_scaled(order, z)?;
    unscale("I'", s, z, order, z)
}

/// `e^{−z} I′_ν(z)`.
pub fn bessel_i_prime_scaled(order: BesselOrder, z: f64) -> Result<f64> {
    check(order, z)?;
    let nu = order.nu;
    let v = i_scaled_raw(nu + 1.0, z) + nu / z * i_scaled_raw(nu, z);
    if !v.is_finite() {
        return Err(Error::Overflow { what: "scaled I'", order: nu, z });
    }
    Ok(v)
}

/// `K′_ν(z) = (ν/z) K_ν(z) − K_{ν+1}(z)`.
pub fn bessel_k_prime(order: BesselOrder, z: f64) -> Result<f64> {
    let s = bessel_k_prime_scaled(order, z)?;
    // K' is negative; unscale its magnitude.
    unscale("K'", -s, -z, order, z).map(|v| -v)
}

/// `e^{z} K′_ν(z)`.
pub fn bessel_k_prime_scaled(order: BesselOrder, z: f64) -> Result<f64> {
    check(order, z)?;
    let nu = order.nu;
    let (k, k1) = k_pair_scaled(nu, z);
    let v = nu / z * k - k1;
    if !v.is_finite() {
        return Err(Error::Overflow { what: "scaled K'", order: nu, z });
    }
    Ok(v)
}

/// `|z (I′_ν K_ν − I_ν K′_ν) − 1|`; the Wronskian of the pair is `1/z`.
pub fn wronskian_residual(order: BesselOrder, z: f64) -> Result<f64> {
    let i = bessel_i_scaled(order, z)?;
    let ip = bessel_i_prime_scaled(order, z)?;
    let k = bessel_k_scaled(order, z)?;
    let kp = bessel_k_prime_scaled(order, z)?;
    Ok((z * (ip * k - i * kp) - 1.0).abs())
}

/// Leading small-argument forms `(I_ν, K_ν)`:
/// `I_ν ~ (z/2)^ν / Γ(ν+1)`, `K_ν ~ ½ Γ(ν) (z/2)^{−ν}` for `ν > 0`,
/// `K_0 ~ −ln z`.
pub fn small_argument_forms(nu: f64, z: f64) -> (f64, f64) {
    let half = 0.5 * z;
    let i = (nu * half.ln() - ln_gamma(nu + 1.0)).exp();
    let k = if nu == 0.0 { -z.ln() } else { 0.5 * (ln_gamma(nu) - nu * half.ln()).exp() };
    (i, k)
}

/// Leading large-argument forms `(I_ν, K_ν)`:
/// `I_ν ~ e^{z}/√(2πz)`, `K_ν ~ √(π/2z) e^{−z}`.
pub fn large_argument_forms(z: f64) -> (f64, f64) {
    (z.exp() / (2.0 * PI * z).sqrt(), (PI / (2.0 * z)).sqrt() * (-z).exp())
}

/// Argument above which `I_ν` switches from the power series to the
/// asymptotic expansion.
pub fn asymptotic_threshold(nu: f64) -> f64 {
    (nu * nu).max(40.0)
}

pub(crate) fn i_scaled_raw(nu: f64, z: f64) -> f64 {
    if z > asymptotic_threshold(nu) {
        i_scaled_asymptotic(nu, z)
    } else {
        i_scaled_series(nu, z)
    }
}

/// `e^{−z} I_ν(z)` from `Σ (z/2)^{2k+ν} / (k! Γ(k+ν+1))`.
pub fn i_scaled_series(nu: f64, z: f64) -> f64 {
    (ln_i_series(nu, z) - z).exp()
}

/// `ln I_ν(z)` from the power series, rescaling the running sum so that
/// neither the sum nor its leading factor leaves the `f64` range.
fn ln_i_series(nu: f64, z: f64) -> f64 {
    let half = 0.5 * z;
    let quarter_sq = half * half;
    let mut log_scale = if nu == 0.0 { 0.0 } else { nu * half.ln() - ln_gamma(nu + 1.0) };
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= quarter_sq / (kf * (kf + nu));
        sum += term;
        if sum > 1e250 {
            sum *= 1e-250;
            term *= 1e-250;
            log_scale += 250.0 * std::f64::consts::LN_10;
        }
        if kf > half && term < EPS * 0.1 * sum {
            break;
        }
    }
    sum.ln() + log_scale
}

/// `ln I_ν(z)` for any `ν ≥ 0`, `z > 0`, without overflow or underflow.
pub fn ln_bessel_i(order: BesselOrder, z: f64) -> Result<f64> {
    check(order, z)?;
    let nu = order.nu;
    Ok(if z > asymptotic_threshold(nu) { i_scaled_asymptotic(nu, z).ln() + z } else { ln_i_series(nu, z) })
}

/// `ln K_ν(z)` for any `ν ≥ 0`, `z > 0`, without overflow or underflow.
pub fn ln_bessel_k(order: BesselOrder, z: f64) -> Result<f64> {
    check(order, z)?;
    Ok(ln_k_pair(order.nu, z).0)
}

/// `e^{−z} I_ν(z)` from the Hankel expansion
/// `(2πz)^{−½} Σ (−1)^k a_k(ν) z^{−k}`.
pub fn i_scaled_asymptotic(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = -term * (mu - odd * odd) / (kf * 8.0 * z);
        if next.abs() > term.abs() && k > 1 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < EPS * 0.1 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * z).sqrt()
}

// Coefficients of 1/Γ(z) = Σ c_k z^k (Abramowitz & Stegun 6.1.34).
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// Temme's auxiliary gammas for `|μ| ≤ ½`:
/// `(γ₁, γ₂, 1/Γ(1+μ), 1/Γ(1−μ))` with
/// `γ₁ = (1/Γ(1−μ) − 1/Γ(1+μ)) / 2μ`, `γ₂ = (1/Γ(1−μ) + 1/Γ(1+μ)) / 2`.
pub(crate) fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    // 1/Γ(1+x) = Σ_{k≥0} c_{k+1} x^k; split into even and odd parts.
    let mut even = 0.0;
    let mut odd_over_mu = 0.0;
    let mu2 = mu * mu;
    let mut p = 1.0;
    for k in (0..RECIP_GAMMA.len() - 1).step_by(2) {
        even += RECIP_GAMMA[k] * p;
        odd_over_mu += RECIP_GAMMA[k + 1] * p;
        p *= mu2;
    }
    let plus = even + mu * odd_over_mu;
    let minus = even - mu * odd_over_mu;
    (-odd_over_mu, even, plus, minus)
}

/// `(e^{z} K_ν(z), e^{z} K_{ν+1}(z))` for any real `ν ≥ 0`.
pub(crate) fn k_pair_scaled(nu: f64, z: f64) -> (f64, f64) {
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut k_mu, mut k_mu1) = if z <= 2.0 {
        let (a, b) = temme_series(mu, z);
        let e = z.exp();
        (a * e, b * e)
    } else {
        steed_cf2_scaled(mu, z)
    };
    let two_over_z = 2.0 / z;
    for i in 1..=(nl as usize) {
        let next = (mu + i as f64) * two_over_z * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    (k_mu, k_mu1)
}

/// `(ln K_ν(z), ln K_{ν+1}(z))`, rescaling during the recurrence.
pub(crate) fn ln_k_pair(nu: f64, z: f64) -> (f64, f64) {
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut k_mu, mut k_mu1, mut log_scale) = if z <= 2.0 {
        let (a, b) = temme_series(mu, z);
        (a, b, 0.0)
    } else {
        let (a, b) = steed_cf2_scaled(mu, z);
        (a, b, -z)
    };
    let two_over_z = 2.0 / z;
    for i in 1..=(nl as usize) {
        let next = (mu + i as f64) * two_over_z * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
        if k_mu1 > 1e250 {
            k_mu *= 1e-250;
            k_mu1 *= 1e-250;
            log_scale += 250.0 * std::f64::consts::LN_10;
        }
    }
    (k_mu.ln() + log_scale, k_mu1.ln() + log_scale)
}

/// Unscaled `(K_μ, K_{μ+1})` for `|μ| ≤ ½`, `z ≤ 2`.
fn temme_series(mu: f64, z: f64) -> (f64, f64) {
    let x2 = 0.5 * z;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * EPS && del1.abs() < sum1.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / z)
}

/// Scaled `(e^{z} K_μ, e^{z} K_{μ+1})` for `|μ| ≤ ½`, `z > 2`.
fn steed_cf2_scaled(mu: f64, z: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k_mu = (PI / (2.0 * z)).sqrt() / s;
    let k_mu1 = k_mu * (mu + z + 0.5 - h) / z;
    (k_mu, k_mu1)
}
