//! Cross-correlations of the scaling functions and the one-dimensional
//! operator blocks built from them.

pub(crate) mod blocks;

use std::sync::OnceLock;

pub use blocks::{cotangent_block, gaussian_block, gaussian_blocks, BlockKind, OpBlock1D};

use crate::basis::{scaling_all, QuadratureRule, MAX_ORDER};
use crate::error::{MrokError, Result};

/// `Phi^+_{k0}(x)` for `k = 0..out.len()`, `x` in `[0,1]`, from the
/// Gegenbauer form `(1-t^2) P'_k(t) / (k(k+1))`.
pub fn phi_plus_l0_all(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 1.0 - x;
    if n == 1 {
        return;
    }
    let t = 2.0 * x - 1.0;
    let s = 1.0 - t * t;
    let (mut p0, mut p1) = (1.0, t);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        out[k] = 0.5 * (2.0 * kf + 1.0).sqrt() * s * d1 / (kf * (kf + 1.0));
        // advance to k+1
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
}

/// `Phi^+_{ii'}(x) = int_0^{1-x} phi_i(x+y) phi_i'(y) dy` for every pair,
/// row-major `p x p`, by a rule exact for the polynomial integrand.
fn phi_plus_direct_all(p: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; p * p];
    if !(0.0..=1.0).contains(&x) {
        return out;
    }
    let r = QuadratureRule::unit_interval(p);
    let len = 1.0 - x;
    for (&u, &w) in r.nodes.iter().zip(&r.weights) {
        let y = len * u;
        let a = scaling_all(p, x + y);
        let b = scaling_all(p, y);
        for i in 0..p {
            for ip in 0..p {
                out[i * p + ip] += len * w * a[i] * b[ip];
            }
        }
    }
    out
}

/// Cross-correlation `Phi_{ii'}(x) = int phi_i(x+y) phi_i'(y) dy`, zero
/// outside `[-1,1]`.
pub fn phi(i: usize, ip: usize, x: f64) -> f64 {
    if !(-1.0..=1.0).contains(&x) {
        return 0.0;
    }
    let p = i.max(ip) + 1;
    let sign = if (i + ip) % 2 == 0 { 1.0 } else { -1.0 };
    if x >= 0.0 {
        phi_plus_direct_all(p, x)[i * p + ip]
    } else {
        sign * phi_plus_direct_all(p, -x)[i * p + ip]
    }
}

/// Expansion coefficients `c^l_{ii'}` of `Phi^+_{ii'}` in `Phi^+_{l0}`.
#[derive(Debug, Clone)]
pub struct CrossCorrTable {
    pub p: usize,
    /// `2p - 1`
    nl: usize,
    c: Vec<f64>,
}

impl CrossCorrTable {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 || p > MAX_ORDER {
            return Err(MrokError::OrderOutOfRange(p));
        }
        let nl = 2 * p - 1;
        let mut c = vec![0.0; p * p * nl];
        let rule = QuadratureRule::unit_interval(2 * p + 4);
        let mut dp = vec![0.0; nl];
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let vals = phi_plus_direct_all(p, x);
            let t = 2.0 * x - 1.0;
            // P'_l(t) for l < nl
            let pl = crate::basis::legendre_deriv_all(nl - 1, t);
            dp.copy_from_slice(&pl[..nl]);
            for i in 0..p {
                for ip in i..p {
                    let mut v = vals[i * p + ip];
                    if i == ip {
                        v -= 1.0 - x;
                    }
                    let base = (i * p + ip) * nl;
                    for l in 1..=(i + ip).min(nl - 1) {
                        c[base + l] += w * v * dp[l];
                    }
                }
            }
        }
        for i in 0..p {
            for ip in i..p {
                let base = (i * p + ip) * nl;
                c[base] = if i == ip { 1.0 } else { 0.0 };
                for l in 1..nl {
                    let v = &mut c[base + l];
                    *v *= 2.0 * ((2 * l + 1) as f64).sqrt();
                    if l < ip - i || l > ip + i {
                        *v = 0.0;
                    }
                }
                let sign = if (i + ip) % 2 == 0 { 1.0 } else { -1.0 };
                for l in 0..nl {
                    c[(ip * p + i) * nl + l] = sign * c[base + l];
                }
            }
        }
        Ok(CrossCorrTable { p, nl, c })
    }

    /// Shared table for order `p`.
    pub fn get(p: usize) -> Result<&'static CrossCorrTable> {
        static TABLES: [OnceLock<CrossCorrTable>; MAX_ORDER] = [const { OnceLock::new() }; MAX_ORDER];
        if p == 0 || p > MAX_ORDER {
            return Err(MrokError::OrderOutOfRange(p));
        }
        Ok(TABLES[p - 1].get_or_init(|| CrossCorrTable::new(p).unwrap()))
    }

    /// Number of base functions `Phi^+_{l0}` used, `2p - 1`.
    pub fn n_base(&self) -> usize {
        self.nl
    }

    pub fn coeff(&self, i: usize, ip: usize, l: usize) -> f64 {
        self.c[(i * self.p + ip) * self.nl + l]
    }

    pub(crate) fn coeffs(&self, i: usize, ip: usize) -> &[f64] {
        let b = (i * self.p + ip) * self.nl;
        &self.c[b..b + self.nl]
    }

    /// `Phi^+_{ii'}(x)` through the expansion.
    pub fn phi_plus(&self, i: usize, ip: usize, x: f64) -> f64 {
        let mut base = vec![0.0; self.nl];
        phi_plus_l0_all(x, &mut base);
        crate::tensor::dot(self.coeffs(i, ip), &base)
    }
}
