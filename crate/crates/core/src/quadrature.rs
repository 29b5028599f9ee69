//! Uniform-step quadrature and finite differences in `τ = ln r`.
//!
//! Everything here operates on samples at equispaced nodes with step `h`
//! and is generic over real and complex values.

use std::ops::{Add, Mul, Sub};

/// Values that can be combined linearly with real coefficients.
pub trait Sample: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T> Sample for T where T: Copy + Default + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// Trapezoid rule over all samples.
pub fn trapezoid<T: Sample>(values: &[T], h: f64) -> T {
    match values.len() {
        0 | 1 => T::default(),
        n => {
            let mut sum = (values[0] + values[n - 1]) * 0.5;
            for &v in &values[1..n - 1] {
                sum = sum + v;
            }
            sum * h
        }
    }
}

/// Weights of the four-point rule for the interval `[i, i+1]`, together with
/// the first node they apply to.
fn interval_rule(i: usize, n: usize) -> (usize, [f64; 4]) {
    const C: f64 = 1.0 / 24.0;
    if i == 0 {
        (0, [9.0 * C, 19.0 * C, -5.0 * C, C])
    } else if i + 2 >= n {
        (n - 4, [C, -5.0 * C, 19.0 * C, 9.0 * C])
    } else {
        (i - 1, [-C, 13.0 * C, 13.0 * C, -C])
    }
}

/// Fourth-order cumulative integral with exponential rescaling.
///
/// Returns `C_i = ∫_{τ_0}^{τ_i} e^{E(τ) − E(τ_i)} g(τ) dτ`. The recursion never
/// forms `e^{E}` itself, so `E` may span hundreds of units.
pub fn cumulative_left_scaled<T: Sample>(g: &[T], expo: &[f64], h: f64) -> Vec<T> {
    let n = g.len();
    assert_eq!(n, expo.len());
    assert!(n >= 4, "cumulative rule needs at least four nodes");
    let mut out = vec![T::default(); n];
    for i in 0..n - 1 {
        let (start, w) = interval_rule(i, n);
        let target = expo[i + 1];
        let mut seg = T::default();
        for (j, wj) in w.iter().enumerate() {
            let k = start + j;
            seg = seg + g[k] * (wj * h * (expo[k] - target).exp());
        }
        out[i + 1] = out[i] * (expo[i] - target).exp() + seg;
    }
    out
}

/// Fourth-order cumulative integral from the right:
/// `D_i = ∫_{τ_i}^{τ_last} e^{E(τ) − E(τ_i)} g(τ) dτ`.
pub fn cumulative_right_scaled<T: Sample>(g: &[T], expo: &[f64], h: f64) -> Vec<T> {
    let n = g.len();
    assert_eq!(n, expo.len());
    assert!(n >= 4, "cumulative rule needs at least four nodes");
    let mut out = vec![T::default(); n];
    for i in (0..n - 1).rev() {
        let (start, w) = interval_rule(i, n);
        let target = expo[i];
        let mut seg = T::default();
        for (j, wj) in w.iter().enumerate() {
            let k = start + j;
            seg = seg + g[k] * (wj * h * (expo[k] - target).exp());
        }
        out[i] = out[i + 1] * (expo[i + 1] - target).exp() + seg;
    }
    out
}

/// Unscaled cumulative integral from the first node.
pub fn cumulative_left<T: Sample>(g: &[T], h: f64) -> Vec<T> {
    cumulative_left_scaled(g, &vec![0.0; g.len()], h)
}

/// Unscaled cumulative integral to the last node.
pub fn cumulative_right<T: Sample>(g: &[T], h: f64) -> Vec<T> {
    cumulative_right_scaled(g, &vec![0.0; g.len()], h)
}

/// Fourth-order first derivative with one-sided closures at both ends.
pub fn diff1<T: Sample>(v: &[T], h: f64) -> Vec<T> {
    let n = v.len();
    assert!(n >= 6, "derivative stencils need at least six nodes");
    let s = 1.0 / (12.0 * h);
    let lin = |idx: [usize; 5], c: [f64; 5]| {
        let mut acc = T::default();
        for (k, ck) in idx.iter().zip(c) {
            acc = acc + v[*k] * (ck * s);
        }
        acc
    };
    let mut out = vec![T::default(); n];
    out[0] = lin([0, 1, 2, 3, 4], [-25.0, 48.0, -36.0, 16.0, -3.0]);
    out[1] = lin([0, 1, 2, 3, 4], [-3.0, -10.0, 18.0, -6.0, 1.0]);
    for (i, o) in out.iter_mut().enumerate().take(n - 2).skip(2) {
        *o = lin([i - 2, i - 1, i, i + 1, i + 2], [1.0, -8.0, 0.0, 8.0, -1.0]);
    }
    let m = n - 1;
    out[m - 1] = lin([m, m - 1, m - 2, m - 3, m - 4], [3.0, 10.0, -18.0, 6.0, -1.0]);
    out[m] = lin([m, m - 1, m - 2, m - 3, m - 4], [25.0, -48.0, 36.0, -16.0, 3.0]);
    out
}

/// Fourth-order second derivative with one-sided closures at both ends.
pub fn diff2<T: Sample>(v: &[T], h: f64) -> Vec<T> {
    let n = v.len();
    assert!(n >= 6, "derivative stencils need at least six nodes");
    let s = 1.0 / (12.0 * h * h);
    let lin = |idx: [usize; 6], c: [f64; 6]| {
        let mut acc = T::default();
        for (k, ck) in idx.iter().zip(c) {
            acc = acc + v[*k] * (ck * s);
        }
        acc
    };
    let mut out = vec![T::default(); n];
    out[0] = lin([0, 1, 2, 3, 4, 5], [45.0, -154.0, 214.0, -156.0, 61.0, -10.0]);
    out[1] = lin([0, 1, 2, 3, 4, 5], [10.0, -15.0, -4.0, 14.0, -6.0, 1.0]);
    for (i, o) in out.iter_mut().enumerate().take(n - 2).skip(2) {
        *o = lin([i - 2, i - 1, i, i + 1, i + 2, i + 2], [-1.0, 16.0, -30.0, 16.0, -1.0, 0.0]);
    }
    let m = n - 1;
    out[m - 1] = lin([m, m - 1, m - 2, m - 3, m - 4, m - 5], [10.0, -15.0, -4.0, 14.0, -6.0, 1.0]);
    out[m] = lin([m, m - 1, m - 2, m - 3, m - 4, m - 5], [45.0, -154.0, 214.0, -156.0, 61.0, -10.0]);
    out
}
