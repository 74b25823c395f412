use super::quadrature::{QuadratureRule, MAX_ORDER};
use super::scaling_eval;
use crate::error::{MrokError, Result};

/// Two-scale filter matrices (row-major `p x p`).
///
/// `h0[k][k'] = sqrt(2) * int phi_k(x) phi_k'(2x) dx`, `h1` likewise with
/// `phi_k'(2x - 1)`. The `g` rows complete `[h0 h1]` to an orthogonal
/// `2p x 2p` matrix; their sign convention is fixed only up to that.
#[derive(Debug, Clone)]
pub struct TwoScaleFilters {
    pub p: usize,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
    pub(crate) h0t: Vec<f64>,
    pub(crate) h1t: Vec<f64>,
}

impl TwoScaleFilters {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 || p > MAX_ORDER {
            return Err(MrokError::OrderOutOfRange(p));
        }
        let q = QuadratureRule::unit_interval(2 * p);
        let mut h0 = vec![0.0; p * p];
        let mut h1 = vec![0.0; p * p];
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        for k in 0..p {
            for kp in 0..p {
                // substitute y = 2x (resp. 2x - 1)
                h0[k * p + kp] = inv_sqrt2
                    * q.integrate(0.0, 1.0, |y| scaling_eval(k, 0.5 * y) * scaling_eval(kp, y));
                h1[k * p + kp] = inv_sqrt2
                    * q.integrate(0.0, 1.0, |y| {
                        scaling_eval(k, 0.5 * (y + 1.0)) * scaling_eval(kp, y)
                    });
            }
        }
        let (g0, g1) = complete_orthogonal(p, &h0, &h1);
        let h0t = crate::tensor::transpose(&h0, p, p);
        let h1t = crate::tensor::transpose(&h1, p, p);
        Ok(TwoScaleFilters { p, h0, h1, g0, g1, h0t, h1t })
    }

    /// `H^(parity)`.
    pub fn h(&self, parity: usize) -> &[f64] {
        if parity == 0 {
            &self.h0
        } else {
            &self.h1
        }
    }

    pub(crate) fn h_t(&self, parity: usize) -> &[f64] {
        if parity == 0 {
            &self.h0t
        } else {
            &self.h1t
        }
    }

    pub fn g(&self, parity: usize) -> &[f64] {
        if parity == 0 {
            &self.g0
        } else {
            &self.g1
        }
    }

    /// Fine (`j+1`) pair to coarse scaling and wavelet coefficients.
    pub fn decompose_step(&self, s_even: &[f64], s_odd: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.p;
        let mut s = vec![0.0; p];
        let mut d = vec![0.0; p];
        for k in 0..p {
            for kp in 0..p {
                s[k] += self.h0[k * p + kp] * s_even[kp] + self.h1[k * p + kp] * s_odd[kp];
                d[k] += self.g0[k * p + kp] * s_even[kp] + self.g1[k * p + kp] * s_odd[kp];
            }
        }
        (s, d)
    }

    /// Inverse of [`TwoScaleFilters::decompose_step`].
    pub fn reconstruct_step(&self, s: &[f64], d: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.p;
        let mut even = vec![0.0; p];
        let mut odd = vec![0.0; p];
        for kp in 0..p {
            for k in 0..p {
                even[kp] += self.h0[k * p + kp] * s[k] + self.g0[k * p + kp] * d[k];
                odd[kp] += self.h1[k * p + kp] * s[k] + self.g1[k * p + kp] * d[k];
            }
        }
        (even, odd)
    }

    /// The full `2p x 2p` matrix `[[H0, H1], [G0, G1]]`, row-major.
    pub fn full_matrix(&self) -> Vec<f64> {
        let p = self.p;
        let n = 2 * p;
        let mut m = vec![0.0; n * n];
        for r in 0..p {
            for c in 0..p {
                m[r * n + c] = self.h0[r * p + c];
                m[r * n + p + c] = self.h1[r * p + c];
                m[(p + r) * n + c] = self.g0[r * p + c];
                m[(p + r) * n + p + c] = self.g1[r * p + c];
            }
        }
        m
    }
}

/// Orthonormal complement of the rows of `[h0 h1]` by greedy modified
/// Gram-Schmidt over the unit vectors (two passes per candidate).
fn complete_orthogonal(p: usize, h0: &[f64], h1: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = 2 * p;
    let mut basis: Vec<Vec<f64>> = (0..p)
        .map(|r| {
            let mut v = h0[r * p..(r + 1) * p].to_vec();
            v.extend_from_slice(&h1[r * p..(r + 1) * p]);
            v
        })
        .collect();
    let mut used = vec![false; n];
    let mut complement = Vec::with_capacity(p);
    while complement.len() < p {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for c in 0..n {
            if used[c] {
                continue;
            }
            let mut v = vec![0.0; n];
            v[c] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let proj: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= proj * bi;
                    }
                }
            }
            let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if best.as_ref().map_or(true, |b| nrm > b.2) {
                best = Some((c, v, nrm));
            }
        }
        let (c, mut v, nrm) = best.expect("candidate available");
        used[c] = true;
        v.iter_mut().for_each(|x| *x /= nrm);
        basis.push(v.clone());
        complement.push(v);
    }
    let mut g0 = vec![0.0; p * p];
    let mut g1 = vec![0.0; p * p];
    for (r, v) in complement.iter().enumerate() {
        g0[r * p..(r + 1) * p].copy_from_slice(&v[..p]);
        g1[r * p..(r + 1) * p].copy_from_slice(&v[p..]);
    }
    (g0, g1)
}
