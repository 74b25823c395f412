use std::collections::BTreeMap;

use super::FunTree;
use crate::basis::Basis;
use crate::error::{MrokError, Result};
use crate::key::BoxKey;
use crate::par;

/// Where the refinement test compares a box's polynomial with the function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckGrid {
    /// Children's quadrature nodes only.
    Nodes,
    /// Children's quadrature nodes plus their boundary, where interpolation
    /// error peaks; this makes the bound hold between nodes as well.
    NodesAndBoundary,
}

#[derive(Clone, Copy, Debug)]
pub struct DecomposeOptions {
    pub eps: f64,
    pub j0: u8,
    pub jmax: u8,
    pub check: CheckGrid,
}

impl DecomposeOptions {
    /// Defaults `j0 = 0`, `jmax = 20` in 1D, 16 in 2D and 12 in 3D.
    pub fn new(d: usize, eps: f64) -> Self {
        let jmax = match d {
            1 => 20,
            2 => 16,
            _ => 12,
        };
        DecomposeOptions { eps, j0: 0, jmax, check: CheckGrid::NodesAndBoundary }
    }
}

/// Points `corner + h * t` for the tensor grid of local coordinates `t`
/// (row-major, axis 0 slowest).
pub(crate) fn grid_points(d: usize, key: BoxKey, t: &[f64]) -> Vec<[f64; 3]> {
    let m = t.len();
    let (corner, h) = key.corner(d);
    let n = m.pow(d as u32);
    let mut pts = Vec::with_capacity(n);
    for flat in 0..n {
        let mut x = [0.0; 3];
        let mut rem = flat;
        for a in (0..d).rev() {
            x[a] = corner[a] + h * t[rem % m];
            rem /= m;
        }
        pts.push(x);
    }
    pts
}

/// Values of a coefficient block of box `key` on the tensor grid `t` of
/// local coordinates of its child `c`.
fn eval_on_child_grid(basis: &Basis, d: usize, key: BoxKey, coeffs: &[f64], c: usize, t: &[f64]) -> Vec<f64> {
    let p = basis.p;
    let s = ((key.level as f64) / 2.0).exp2();
    let mats: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let off = ((c >> a) & 1) as f64;
            let mut m = Vec::with_capacity(t.len() * p);
            for &ti in t {
                let phi = crate::basis::scaling_all(p, 0.5 * (off + ti));
                m.extend(phi.iter().map(|v| v * s));
            }
            m
        })
        .collect();
    let refs: Vec<&[f64]> = mats.iter().map(|m| m.as_slice()).collect();
    crate::tensor::apply_per_axis_rect(coeffs, p, t.len(), &refs)
}

/// Interior `p^d` sub-grid of a `(p+2)^d` check grid.
fn interior(vals: &[f64], d: usize, p: usize) -> Vec<f64> {
    let m = p + 2;
    let mut out = Vec::with_capacity(p.pow(d as u32));
    for flat in 0..p.pow(d as u32) {
        let mut rem = flat;
        let mut idx = 0;
        let mut stride = 1;
        for _ in 0..d {
            idx += (rem % p + 1) * stride;
            rem /= p;
            stride *= m;
        }
        out.push(vals[idx]);
    }
    out
}

/// Adaptive decomposition of `f` starting from the uniform grid at `j0`.
pub fn decompose<F: Fn(&[f64]) -> f64 + Sync>(f: F, d: usize, p: usize, opts: DecomposeOptions) -> Result<FunTree> {
    if opts.j0 > opts.jmax {
        return Err(MrokError::InvalidArgument(format!("j0 = {} exceeds jmax = {}", opts.j0, opts.jmax)));
    }
    let n = 1u32 << opts.j0;
    let mut start = Vec::new();
    for flat in 0..(n as usize).pow(d as u32) {
        let mut idx = [0u32; 3];
        let mut rem = flat;
        for a in (0..d).rev() {
            idx[a] = (rem % n as usize) as u32;
            rem /= n as usize;
        }
        start.push(BoxKey { level: opts.j0, idx });
    }
    let sample = |k: BoxKey, t: &[f64]| grid_points(d, k, t).iter().map(|x| f(&x[..d])).collect();
    decompose_from(sample, d, p, opts.eps, opts.jmax, opts.check, start)
}

/// Level-synchronous refinement from the boxes in `start`, which must tile
/// the unit box. `sample(key, t)` returns function values on the tensor grid
/// of local coordinates `t` in `key` (row-major, axis 0 slowest).
///
/// A box is kept when its polynomial matches the function to `eps` on the
/// `check` grid of every child.
pub fn decompose_from<S: Fn(BoxKey, &[f64]) -> Vec<f64> + Sync>(
    sample: S,
    d: usize,
    p: usize,
    eps: f64,
    jmax: u8,
    check: CheckGrid,
    start: Vec<BoxKey>,
) -> Result<FunTree> {
    super::check_dp(d, p)?;
    let basis = Basis::get(p)?;
    let nodes = &basis.rule.nodes;
    let pad = check == CheckGrid::NodesAndBoundary;
    let mut grid = Vec::with_capacity(p + 2);
    if pad {
        grid.push(0.0);
    }
    grid.extend_from_slice(nodes);
    if pad {
        grid.push(1.0);
    }
    let mut leaves = BTreeMap::new();
    let mut unresolved = Vec::new();
    let mut frontier: Vec<(BoxKey, Vec<f64>)> = par::map(&start, |&k| (k, sample(k, nodes)));
    while !frontier.is_empty() {
        let results = par::map(&frontier, |(k, vals)| {
            let coeffs = basis.values_to_coeffs(vals, d, k.level);
            let mut err = 0.0f64;
            let mut kids = Vec::with_capacity(1 << d);
            for (ci, c) in k.children(d).enumerate() {
                let fv = sample(c, &grid);
                let iv = eval_on_child_grid(basis, d, *k, &coeffs, ci, &grid);
                for (a, b) in fv.iter().zip(&iv) {
                    err = err.max((a - b).abs());
                }
                kids.push((c, if pad { interior(&fv, d, p) } else { fv }));
            }
            let refine = !(err <= eps);
            (*k, coeffs, refine, kids)
        });
        let mut next = Vec::new();
        for (k, coeffs, refine, kids) in results {
            if refine && k.level < jmax {
                next.extend(kids);
            } else {
                if refine {
                    unresolved.push(k);
                }
                leaves.insert(k, coeffs);
            }
        }
        frontier = next;
    }
    Ok(FunTree::from_parts(d, p, eps, jmax, leaves, unresolved))
}

/// Decomposition of `x -> tree(x) g(x)`, starting from the leaves of `tree`.
pub fn multiply_analytic<G: Fn(&[f64]) -> f64 + Sync>(tree: &FunTree, g: G, eps: f64) -> Result<FunTree> {
    let d = tree.d;
    let sample = |k: BoxKey, t: &[f64]| {
        // the tree's polynomial on k, evaluated through k's parent grid map
        let blk = tree.block_on(&k).expect("box below a leaf");
        let s = ((k.level as f64) / 2.0).exp2();
        let mat: Vec<f64> = t.iter().flat_map(|&ti| crate::basis::scaling_all(tree.p, ti).into_iter().map(move |v| v * s)).collect();
        let mats = vec![mat.as_slice(); d];
        let mut v = crate::tensor::apply_per_axis_rect(&blk, tree.p, t.len(), &mats);
        for (x, val) in grid_points(d, k, t).iter().zip(v.iter_mut()) {
            *val *= g(&x[..d]);
        }
        v
    };
    let start: Vec<BoxKey> = tree.leaf_map().keys().copied().collect();
    decompose_from(sample, d, tree.p, eps, tree.jmax, CheckGrid::NodesAndBoundary, start)
}
