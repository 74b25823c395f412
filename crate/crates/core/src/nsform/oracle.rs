//! Brute-force projected-operator application on a uniform grid, used to
//! validate the banded and separated forms.

use std::collections::BTreeMap;

use crate::basis::Basis;
use crate::crosscorr::gaussian_blocks;
use crate::error::{MrokError, Result};
use crate::funtree::FunTree;
use crate::gaussfit::GaussianExpansion;
use crate::key::BoxKey;

const MAX_SIZE: usize = 100_000;

fn box_index(d: usize, j: u8, k: &[i64]) -> usize {
    let n = 1usize << j;
    (0..d).fold(0, |acc, a| acc * n + k[a] as usize)
}

fn box_coords(d: usize, j: u8, mut i: usize) -> [i64; 3] {
    let n = 1usize << j;
    let mut c = [0i64; 3];
    for a in (0..d).rev() {
        c[a] = (i % n) as i64;
        i /= n;
    }
    c
}

/// `g_l = sum_l' T^{l-l'} f_l'` over every box pair of the uniform grid at
/// scale `j`. Boxes are row-major with axis 0 slowest, each holding `p^d`
/// coefficients; `blocks(s)` is the `p^d x p^d` block for shift `s`.
pub fn dense_apply_oracle<F>(blocks: F, d: usize, p: usize, j: u8, periodic: bool, f: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[i64]) -> Result<Vec<f64>>,
{
    let nb = 1usize << (j as usize * d);
    let bl = p.pow(d as u32);
    if nb * bl > MAX_SIZE {
        return Err(MrokError::InstanceTooLarge(nb * bl));
    }
    if f.len() != nb * bl {
        return Err(MrokError::Mismatch(format!("grid has {} values, expected {}", f.len(), nb * bl)));
    }
    let mut cache: BTreeMap<[i64; 3], Vec<f64>> = BTreeMap::new();
    let mut g = vec![0.0; nb * bl];
    for o in 0..nb {
        let lo = box_coords(d, j, o);
        for i in 0..nb {
            let li = box_coords(d, j, i);
            let mut s = [0i64; 3];
            for a in 0..d {
                s[a] = lo[a] - li[a];
                if periodic {
                    s[a] = crate::crosscorr::blocks::periodic_shift(j, s[a]);
                }
            }
            if !cache.contains_key(&s) {
                cache.insert(s, blocks(&s[..d])?);
            }
            let t = &cache[&s];
            let x = &f[i * bl..(i + 1) * bl];
            let y = &mut g[o * bl..(o + 1) * bl];
            for r in 0..bl {
                y[r] += crate::tensor::dot(&t[r * bl..(r + 1) * bl], x);
            }
        }
    }
    Ok(g)
}

/// Kronecker product of `d` square `p x p` matrices, matching block layout.
pub(crate) fn kron(mats: &[&[f64]], p: usize) -> Vec<f64> {
    let mut cur = vec![1.0];
    let mut n = 1;
    for m in mats {
        let nn = n * p;
        let mut next = vec![0.0; nn * nn];
        for r1 in 0..n {
            for c1 in 0..n {
                let v = cur[r1 * n + c1];
                for r2 in 0..p {
                    for c2 in 0..p {
                        next[(r1 * p + r2) * nn + c1 * p + c2] = v * m[r2 * p + c2];
                    }
                }
            }
        }
        cur = next;
        n = nn;
    }
    cur
}

/// Dense blocks `sum_m w_m (x) F^{j;m,s_k}` of a Gaussian expansion.
pub fn dense_block_provider(e: &GaussianExpansion, d: usize, p: usize, j: u8) -> impl Fn(&[i64]) -> Result<Vec<f64>> + '_ {
    move |s| {
        let bl = p.pow(d as u32);
        let mut acc = vec![0.0; bl * bl];
        for (w, t) in e.weights.iter().zip(&e.taus) {
            let fs = gaussian_blocks(j, *t, &s[..d], p)?;
            let mats: Vec<&[f64]> = fs.iter().map(|b| b.data.as_slice()).collect();
            crate::tensor::axpy(*w, &kron(&mats, p), &mut acc);
        }
        Ok(acc)
    }
}

/// Coefficients of `f` on the uniform grid at scale `j`.
pub fn uniform_coeffs(f: &FunTree, j: u8) -> Vec<f64> {
    let d = f.d;
    let nb = 1usize << (j as usize * d);
    let mut out = Vec::with_capacity(nb * f.p.pow(d as u32));
    for i in 0..nb {
        let c = box_coords(d, j, i);
        let idx: Vec<u32> = c[..d].iter().map(|&v| v as u32).collect();
        out.extend(f.block_on(&BoxKey::new(j, &idx)).expect("uniform grid box inside the domain"));
    }
    out
}

/// Projection of uniform-grid coefficients at scale `j` onto box `key`
/// (`key.level <= j`).
pub fn project_grid(grid: &[f64], d: usize, p: usize, j: u8, key: BoxKey) -> Result<Vec<f64>> {
    let bl = p.pow(d as u32);
    if key.level == j {
        let c: Vec<i64> = key.idx[..d].iter().map(|&v| v as i64).collect();
        let i = box_index(d, j, &c);
        return Ok(grid[i * bl..(i + 1) * bl].to_vec());
    }
    let kids: Vec<Vec<f64>> = key.children(d).map(|c| project_grid(grid, d, p, j, c)).collect::<Result<_>>()?;
    let refs: Vec<&[f64]> = kids.iter().map(|v| v.as_slice()).collect();
    Ok(Basis::get(p)?.project_children(d, &refs))
}
