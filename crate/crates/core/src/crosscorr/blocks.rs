use std::f64::consts::PI;

use super::{phi_plus_l0_all, CrossCorrTable};
use crate::error::Result;
use crate::quad::integrate_vec;

const REL_TOL: f64 = 1e-15;
/// `exp(-EXP_CUT)` is below the smallest normal double.
const EXP_CUT: f64 = 745.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// Term `m` of a Gaussian expansion.
    Gaussian(usize),
    Cotangent,
}

/// `p x p` operator block at scale `j` for shift `l` (output minus input
/// translation), row-major with the output index as row.
#[derive(Clone, Debug)]
pub struct OpBlock1D {
    pub p: usize,
    pub j: u8,
    pub l: i64,
    pub kind: BlockKind,
    pub data: Vec<f64>,
}

impl OpBlock1D {
    pub fn entry(&self, i: usize, ip: usize) -> f64 {
        self.data[i * self.p + ip]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `int_0^1 exp(-t (x+l)^2) Phi^+_{k0}(x) dx` for `k < n`.
fn gauss_base(t: f64, l: i64, n: usize) -> Result<Vec<f64>> {
    let c = -(l as f64);
    let reach = (EXP_CUT / t).sqrt();
    let lo = (c - reach).max(0.0);
    let hi = (c + reach).min(1.0);
    if lo >= hi {
        return Ok(vec![0.0; n]);
    }
    // panels graded geometrically away from the peak
    let w = 1.0 / t.sqrt();
    let x0 = c.clamp(lo, hi);
    let mut breaks = vec![lo, x0, hi];
    let mut s = w;
    while x0 - s > lo || x0 + s < hi {
        if x0 - s > lo {
            breaks.push(x0 - s);
        }
        if x0 + s < hi {
            breaks.push(x0 + s);
        }
        s *= 2.0;
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    integrate_vec(
        |x, out| {
            let g = (-t * (x - c) * (x - c)).exp();
            phi_plus_l0_all(x, out);
            out.iter_mut().for_each(|v| *v *= g);
        },
        n,
        &breaks,
        REL_TOL,
        1e-300,
    )
}

fn sign(i: usize, ip: usize) -> f64 {
    if (i + ip) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Block entries from the base integrals `int K(x+l) Phi^+_{k0}` (`plus`)
/// and `int K(l-x) Phi^+_{k0}` (`minus`).
fn assemble(tab: &CrossCorrTable, scale: f64, plus: &[f64], minus: &[f64]) -> Vec<f64> {
    let p = tab.p;
    let mut data = vec![0.0; p * p];
    for i in 0..p {
        for ip in i..p {
            let s = sign(i, ip);
            let c = tab.coeffs(i, ip);
            let mut v = 0.0;
            for k in (ip - i)..=(ip + i) {
                v += c[k] * (plus[k] + s * minus[k]);
            }
            data[i * p + ip] = scale * v;
            data[ip * p + i] = s * scale * v;
        }
    }
    data
}

/// Block of `exp(-tau x^2)` at scale `j` and shift `l`.
pub fn gaussian_block(j: u8, tau: f64, l: i64, p: usize) -> Result<OpBlock1D> {
    let mut v = gaussian_blocks(j, tau, &[l], p)?;
    Ok(v.pop().unwrap())
}

/// Blocks for several shifts, sharing base integrals between `l` and `-l`.
pub fn gaussian_blocks(j: u8, tau: f64, shifts: &[i64], p: usize) -> Result<Vec<OpBlock1D>> {
    let tab = CrossCorrTable::get(p)?;
    let n = tab.n_base();
    let t = tau / 4f64.powi(j as i32);
    let scale = (-(j as f64)).exp2();
    let mut cache: std::collections::BTreeMap<i64, Vec<f64>> = Default::default();
    let mut out = Vec::with_capacity(shifts.len());
    for &l in shifts {
        for key in [l, -l] {
            if !cache.contains_key(&key) {
                cache.insert(key, gauss_base(t, key, n)?);
            }
        }
        let data = assemble(tab, scale, &cache[&l], &cache[&-l]);
        out.push(OpBlock1D { p, j, l, kind: BlockKind::Gaussian(0), data });
    }
    Ok(out)
}

/// Shift reduced to `(-2^{j-1}, 2^{j-1}]`.
pub(crate) fn periodic_shift(j: u8, l: i64) -> i64 {
    let n = 1i64 << j;
    let mut r = l.rem_euclid(n);
    if 2 * r > n {
        r -= n;
    }
    r
}

/// `cot(pi u / 2^j)` with `u` first moved to `(-2^{j-1}, 2^{j-1}]`.
fn cot_scaled(u: f64, j: u8) -> f64 {
    let n = (j as f64).exp2();
    let mut v = u;
    if v > 0.5 * n {
        v -= n;
    } else if v <= -0.5 * n {
        v += n;
    }
    1.0 / (PI * v / n).tan()
}

/// Block of the periodic kernel `cot(pi x)` at scale `j` and shift `l`; the
/// principal value at `l = 0` is taken through the symmetrized integrand.
pub fn cotangent_block(j: u8, l: i64, p: usize) -> Result<OpBlock1D> {
    let tab = CrossCorrTable::get(p)?;
    let n = tab.n_base();
    let l = periodic_shift(j, l);
    let lf = l as f64;
    let scale = (-(j as f64)).exp2();
    // combined integrals E^s_k = int [K(x+l) + s K(l-x)] Phi^+_{k0}
    let mut e = [vec![0.0; n], vec![0.0; n]];
    for (si, s) in [1.0f64, -1.0].into_iter().enumerate() {
        if (l == 0 || 2 * l == 1i64 << j) && s > 0.0 {
            // odd periodic kernel: the even combination vanishes identically
            // at zero and half-period shifts
            continue;
        }
        e[si] = integrate_vec(
            |x, out| {
                let k = cot_scaled(x + lf, j) + s * cot_scaled(lf - x, j);
                phi_plus_l0_all(x, out);
                out.iter_mut().for_each(|v| *v *= k);
                if l == 0 {
                    out[0] = 0.0;
                }
            },
            n,
            &[0.0, 0.5, 1.0],
            REL_TOL,
            1e-300,
        )?;
    }
    let mut data = vec![0.0; p * p];
    for i in 0..p {
        for ip in i..p {
            let s = sign(i, ip);
            let c = tab.coeffs(i, ip);
            let src = if s > 0.0 { &e[0] } else { &e[1] };
            let mut v = 0.0;
            for k in (ip - i)..=(ip + i) {
                v += c[k] * src[k];
            }
            data[i * p + ip] = scale * v;
            data[ip * p + i] = s * scale * v;
        }
    }
    Ok(OpBlock1D { p, j, l, kind: BlockKind::Cotangent, data })
}
