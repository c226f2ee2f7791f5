// SPDX-License-Identifier: Apache-2.0

//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) and fixed Gauss–Legendre.

use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub error_estimate: T,
    pub evaluations: usize,
    pub converged: bool,
}

fn kronrod15<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let x = h * T::lit(XGK[j]);
        let s = f(c - x) + f(c + x);
        k += s * T::lit(WGK[j]);
        if j % 2 == 1 {
            g += s * T::lit(WG[j / 2]);
        }
    }
    (k * h, (k - g).abs() * h.abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Intervals are bisected until each one's Kronrod–Gauss difference is below its share of
/// the tolerance, reaches the roundoff floor of the panel, or the depth limit is reached.
pub fn integrate_adaptive<T: Real>(f: impl Fn(T) -> T, a: T, b: T, abs_tol: T) -> QuadratureResult<T> {
    const MAX_DEPTH: usize = 40;
    let total = (b - a).abs();
    let mut value = T::zero();
    let mut error = T::zero();
    let mut evaluations = 0;
    let mut converged = true;
    let mut stack = vec![(a, b, 0usize)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = kronrod15(&f, lo, hi);
        evaluations += 15;
        let share = if total > T::zero() { abs_tol * (hi - lo).abs() / total } else { abs_tol };
        let floor = T::lit(50.0) * T::default_epsilon() * v.abs();
        if e <= share || e <= floor || depth >= MAX_DEPTH {
            if e > share {
                converged = false;
            }
            value += v;
            error += e;
        } else {
            let mid = (lo + hi) * T::lit(0.5);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    QuadratureResult { value, error_estimate: error, evaluations, converged }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre rule with `panels` equal sub-intervals of `order` points each.
pub fn integrate_gauss_legendre<T: Real>(
    f: impl Fn(T) -> T,
    a: T,
    b: T,
    order: usize,
    panels: usize,
) -> T {
    let nodes = gauss_legendre_nodes(order);
    let width = (b - a) / T::lit(panels as f64);
    let half = width * T::lit(0.5);
    let mut sum = T::zero();
    for p in 0..panels {
        let c = a + width * T::lit(p as f64) + half;
        for &(x, w) in &nodes {
            sum += f(c + half * T::lit(x)) * T::lit(w);
        }
    }
    sum * half
}
