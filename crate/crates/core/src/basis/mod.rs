//! Legendre scaling functions, Gauss-Legendre quadrature, two-scale filters
//! and the per-box transforms between values, coefficients and children.

mod block;
mod filters;
mod quadrature;

use std::sync::OnceLock;

pub use block::{block_eval, samples_to_block, CoeffBlock};
pub use filters::TwoScaleFilters;
pub use quadrature::{legendre, legendre_all, legendre_deriv_all, QuadratureRule, MAX_ORDER};

use crate::error::{MrokError, Result};
use crate::tensor;

/// `phi_k(x) = sqrt(2k+1) P_k(2x-1)` on `[0,1]`, zero elsewhere.
pub fn scaling_eval(k: usize, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    ((2 * k + 1) as f64).sqrt() * legendre(k, 2.0 * x - 1.0)
}

/// `phi_0..phi_{p-1}` at `x` (assumed inside `[0,1]`).
pub fn scaling_all(p: usize, x: f64) -> Vec<f64> {
    let mut v = legendre_all(p - 1, 2.0 * x - 1.0);
    for (k, vk) in v.iter_mut().enumerate() {
        *vk *= ((2 * k + 1) as f64).sqrt();
    }
    v
}

/// Everything derived from the basis order.
#[derive(Debug)]
pub struct Basis {
    pub p: usize,
    pub rule: QuadratureRule,
    pub filters: TwoScaleFilters,
    /// `to_coef[k][i] = phi_k(x_i) w_i`
    to_coef: Vec<f64>,
    /// `to_val[i][k] = phi_k(x_i)`
    to_val: Vec<f64>,
}

static CACHE: OnceLock<Vec<Basis>> = OnceLock::new();

impl Basis {
    pub fn new(p: usize) -> Result<Self> {
        let rule = QuadratureRule::new(p)?;
        let filters = TwoScaleFilters::new(p)?;
        let mut to_coef = vec![0.0; p * p];
        let mut to_val = vec![0.0; p * p];
        for (i, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let phi = scaling_all(p, x);
            for k in 0..p {
                to_coef[k * p + i] = phi[k] * w;
                to_val[i * p + k] = phi[k];
            }
        }
        Ok(Basis { p, rule, filters, to_coef, to_val })
    }

    /// Shared instance for order `p`.
    pub fn get(p: usize) -> Result<&'static Basis> {
        if p == 0 || p > MAX_ORDER {
            return Err(MrokError::OrderOutOfRange(p));
        }
        let all = CACHE.get_or_init(|| (1..=MAX_ORDER).map(|p| Basis::new(p).unwrap()).collect());
        Ok(&all[p - 1])
    }

    pub fn block_len(&self, d: usize) -> usize {
        self.p.pow(d as u32)
    }

    /// Tensor-grid values at the quadrature nodes of a scale-`level` box to
    /// scaling coefficients.
    pub fn values_to_coeffs(&self, values: &[f64], d: usize, level: u8) -> Vec<f64> {
        let mut c = tensor::apply_all_axes(values, d, self.p, &self.to_coef);
        let s = (-(level as f64) * d as f64 / 2.0).exp2();
        c.iter_mut().for_each(|v| *v *= s);
        c
    }

    pub fn coeffs_to_values(&self, coeffs: &[f64], d: usize, level: u8) -> Vec<f64> {
        let mut v = tensor::apply_all_axes(coeffs, d, self.p, &self.to_val);
        let s = ((level as f64) * d as f64 / 2.0).exp2();
        v.iter_mut().for_each(|x| *x *= s);
        v
    }

    /// Evaluate a block at local coordinates `t` in `[0,1]^d`.
    pub fn eval_local(&self, coeffs: &[f64], level: u8, t: &[f64]) -> f64 {
        let d = t.len();
        let p = self.p;
        let phis: Vec<Vec<f64>> = t.iter().map(|&ta| scaling_all(p, ta)).collect();
        let mut cur = coeffs.to_vec();
        let mut len = cur.len();
        // contract the last axis first
        for a in (0..d).rev() {
            len /= p;
            let mut next = vec![0.0; len];
            for (o, nx) in next.iter_mut().enumerate() {
                *nx = tensor::dot(&cur[o * p..(o + 1) * p], &phis[a]);
            }
            cur = next;
        }
        cur[0] * ((level as f64) * d as f64 / 2.0).exp2()
    }

    /// Child `c` of a parent block (zero detail), exact for the parent polynomial.
    pub fn child_from_parent(&self, d: usize, parent: &[f64], c: usize) -> Vec<f64> {
        let mats: Vec<&[f64]> = (0..d).map(|a| self.filters.h_t((c >> a) & 1)).collect();
        tensor::apply_per_axis(parent, self.p, &mats)
    }

    pub fn split_to_children(&self, d: usize, parent: &[f64]) -> Vec<Vec<f64>> {
        (0..1usize << d).map(|c| self.child_from_parent(d, parent, c)).collect()
    }

    /// Project `2^d` children blocks (ordered by child index) onto the parent.
    pub fn project_children(&self, d: usize, children: &[&[f64]]) -> Vec<f64> {
        let mut acc = vec![0.0; self.block_len(d)];
        for (c, ch) in children.iter().enumerate() {
            let mats: Vec<&[f64]> = (0..d).map(|a| self.filters.h((c >> a) & 1)).collect();
            let part = tensor::apply_per_axis(ch, self.p, &mats);
            tensor::axpy(1.0, &part, &mut acc);
        }
        acc
    }

    /// Descend a block from its own scale to a descendant box.
    pub fn interpolate_down(&self, d: usize, block: &[f64], from: crate::BoxKey, to: crate::BoxKey) -> Vec<f64> {
        let mut cur = block.to_vec();
        for lev in from.level + 1..=to.level {
            let c = to.ancestor(lev).child_index(d);
            cur = self.child_from_parent(d, &cur, c);
        }
        cur
    }
}
