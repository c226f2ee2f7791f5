// SPDX-License-Identifier: Apache-2.0

//! Adaptive Krylov evaluation of `exp(t𝓛) v` (Arnoldi with a posteriori error control).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::Complex64;

/// Krylov subspace dimension.
pub const KRYLOV_DIM: usize = 30;
const BREAKDOWN: f64 = 1e-12;
const SAFETY: f64 = 0.9;
const ACCEPT: f64 = 1.2;
const MAX_REJECTS: usize = 20;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn round_two_digits(x: f64) -> f64 {
    let s = 10f64.powf(x.log10().floor() - 1.0);
    (x / s).ceil() * s
}

/// Work counters of one propagation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KrylovStats {
    pub substeps: usize,
    pub rejections: usize,
    pub applications: usize,
}

/// Advances `v` by `t` under `apply` (`w = 𝓛 u`) to local tolerance `tol`; `anorm` bounds `‖𝓛‖`.
pub fn expv(
    t: f64,
    v: &[Complex64],
    anorm: f64,
    tol: f64,
    apply: &mut dyn FnMut(&[Complex64]) -> Vec<Complex64>,
    stats: &mut KrylovStats,
) -> Result<Vec<Complex64>> {
    let n = v.len();
    let m = KRYLOV_DIM.min(n.max(1));
    let mut w = v.to_vec();
    let mut beta = norm(&w);
    if beta == 0.0 || t == 0.0 {
        return Ok(w);
    }
    let anorm = anorm.max(f64::MIN_POSITIVE);
    let mf = m as f64;
    let fact = ((mf + 1.0) / std::f64::consts::E).powf(mf + 1.0) * (2.0 * std::f64::consts::PI * (mf + 1.0)).sqrt();
    let mut t_new = (1.0 / anorm) * ((fact * tol) / (4.0 * beta * anorm)).powf(1.0 / mf);
    t_new = round_two_digits(t_new);
    let mut t_now = 0.0;
    while t_now < t {
        let mut t_step = (t - t_now).min(t_new);
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(w.iter().map(|z| z / beta).collect());
        let mut h = DMatrix::<Complex64>::zeros(m + 2, m + 2);
        let mut mb = m;
        let mut k1 = 2usize;
        let mut avnorm = 0.0;
        for j in 0..m {
            let mut p = apply(&basis[j]);
            stats.applications += 1;
            for i in 0..=j {
                let hij = dot(&basis[i], &p);
                h[(i, j)] = hij;
                for (pk, vk) in p.iter_mut().zip(&basis[i]) {
                    *pk -= hij * vk;
                }
            }
            let s = norm(&p);
            if s < BREAKDOWN * beta.max(1.0) {
                k1 = 0;
                mb = j + 1;
                t_step = t - t_now;
                break;
            }
            h[(j + 1, j)] = Complex64::new(s, 0.0);
            basis.push(p.iter().map(|z| z / s).collect());
        }
        if k1 != 0 {
            h[(m + 1, m)] = Complex64::new(1.0, 0.0);
            avnorm = norm(&apply(&basis[m]));
            stats.applications += 1;
        }
        let mut rejects = 0;
        let (f, err_loc, xm) = loop {
            let mx = mb + k1;
            let f = (h.view((0, 0), (mx, mx)) * Complex64::new(t_step, 0.0)).exp();
            if k1 == 0 {
                break (f, BREAKDOWN, 1.0 / mf);
            }
            let phi1 = (f[(m, 0)] * beta).norm();
            let phi2 = (f[(m + 1, 0)] * beta * avnorm).norm();
            let (err, xm) = if phi1 > 10.0 * phi2 {
                (phi2, 1.0 / mf)
            } else if phi1 > phi2 {
                (phi1 * phi2 / (phi1 - phi2), 1.0 / mf)
            } else {
                (phi1, 1.0 / (mf - 1.0).max(1.0))
            };
            if err <= ACCEPT * t_step * tol {
                break (f, err, xm);
            }
            rejects += 1;
            stats.rejections += 1;
            if rejects > MAX_REJECTS {
                return Err(Error::Integrator(format!(
                    "Krylov step rejected {MAX_REJECTS} times at t = {t_now:.6e} (error {err:.2e})"
                )));
            }
            t_step = round_two_digits(SAFETY * t_step * (t_step * tol / err).powf(xm));
            if !(t_step > 1e-14 * t.max(1.0)) {
                return Err(Error::Integrator(format!("Krylov step underflow at t = {t_now:.6e}")));
            }
        };
        let mx = mb + k1.saturating_sub(1);
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for (i, vi) in basis.iter().enumerate().take(mx) {
            let coef = f[(i, 0)] * beta;
            for (nk, vk) in next.iter_mut().zip(vi) {
                *nk += coef * vk;
            }
        }
        w = next;
        beta = norm(&w);
        if !beta.is_finite() {
            return Err(Error::Integrator(format!("non-finite state at t = {t_now:.6e}")));
        }
        t_now += t_step;
        stats.substeps += 1;
        t_new = round_two_digits(SAFETY * t_step * (t_step * tol / err_loc.max(f64::MIN_POSITIVE)).powf(xm));
        if beta == 0.0 {
            break;
        }
    }
    Ok(w)
}
