//! Adaptive `2^d`-trees of scaling-coefficient blocks on `[0,1]^d`.

mod assemble;
mod decompose;
mod io;

use std::collections::{BTreeMap, BTreeSet};

pub use assemble::{assemble, prune};
pub(crate) use decompose::grid_points;
pub use decompose::{decompose, decompose_from, multiply_analytic, CheckGrid, DecomposeOptions};
pub use io::{read_tree, write_tree};

use crate::basis::{Basis, CoeffBlock};
use crate::error::{MrokError, Result};
use crate::key::BoxKey;
use crate::tensor;

/// Leaves-only tree. Leaf boxes tile `[0,1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunTree {
    pub d: usize,
    pub p: usize,
    pub eps: f64,
    pub jmax: u8,
    leaves: BTreeMap<BoxKey, Vec<f64>>,
    unresolved: Vec<BoxKey>,
}

pub(crate) fn check_dp(d: usize, p: usize) -> Result<()> {
    if !(1..=3).contains(&d) {
        return Err(MrokError::UnsupportedDimension(d));
    }
    Basis::get(p).map(|_| ())
}

impl FunTree {
    /// Single root leaf of zeros.
    pub fn zero(d: usize, p: usize, eps: f64, jmax: u8) -> Result<Self> {
        check_dp(d, p)?;
        let mut leaves = BTreeMap::new();
        leaves.insert(BoxKey::ROOT, vec![0.0; p.pow(d as u32)]);
        Ok(FunTree { d, p, eps, jmax, leaves, unresolved: Vec::new() })
    }

    /// Tree from explicit leaf blocks; rejects sets that do not tile the box.
    pub fn from_leaves(d: usize, p: usize, eps: f64, jmax: u8, leaves: BTreeMap<BoxKey, Vec<f64>>) -> Result<Self> {
        check_dp(d, p)?;
        let n = p.pow(d as u32);
        let mut volume: u128 = 0;
        let top = leaves.keys().map(|k| k.level).max().unwrap_or(0);
        for (k, b) in &leaves {
            if b.len() != n {
                return Err(MrokError::Mismatch(format!("leaf {k:?} has {} coefficients, expected {n}", b.len())));
            }
            if k.level > jmax {
                return Err(MrokError::InvalidArgument(format!("leaf {k:?} beyond jmax {jmax}")));
            }
            let lim = 1u64 << k.level;
            if k.idx[..d].iter().any(|&i| i as u64 >= lim) || k.idx[d..].iter().any(|&i| i != 0) {
                return Err(MrokError::InvalidArgument(format!("leaf {k:?} index out of range")));
            }
            for lev in 0..k.level {
                if leaves.contains_key(&k.ancestor(lev)) {
                    return Err(MrokError::InvalidArgument(format!("leaf {k:?} overlaps leaf {:?}", k.ancestor(lev))));
                }
            }
            volume += 1u128 << ((top - k.level) as u32 * d as u32);
        }
        if volume != 1u128 << (top as u32 * d as u32) {
            return Err(MrokError::InvalidArgument("leaves do not cover the unit box".into()));
        }
        Ok(FunTree { d, p, eps, jmax, leaves, unresolved: Vec::new() })
    }

    pub(crate) fn from_parts(d: usize, p: usize, eps: f64, jmax: u8, leaves: BTreeMap<BoxKey, Vec<f64>>, unresolved: Vec<BoxKey>) -> Self {
        FunTree { d, p, eps, jmax, leaves, unresolved }
    }

    pub fn leaves(&self) -> impl Iterator<Item = (&BoxKey, &Vec<f64>)> {
        self.leaves.iter()
    }

    pub fn leaf_map(&self) -> &BTreeMap<BoxKey, Vec<f64>> {
        &self.leaves
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn get(&self, key: &BoxKey) -> Option<&Vec<f64>> {
        self.leaves.get(key)
    }

    pub fn block(&self, key: &BoxKey) -> Option<CoeffBlock> {
        self.leaves.get(key).map(|c| CoeffBlock { d: self.d, p: self.p, key: *key, coeffs: c.clone() })
    }

    /// Leaves whose refinement test still failed at `jmax`.
    pub fn unresolved(&self) -> &[BoxKey] {
        &self.unresolved
    }

    /// Distinct leaf scales, ascending.
    pub fn scales(&self) -> Vec<u8> {
        let s: BTreeSet<u8> = self.leaves.keys().map(|k| k.level).collect();
        s.into_iter().collect()
    }

    pub fn max_level(&self) -> u8 {
        self.leaves.keys().map(|k| k.level).max().unwrap_or(0)
    }

    /// The leaf at or above `key`, if the tree is not finer there.
    pub fn covering_leaf(&self, key: &BoxKey) -> Option<BoxKey> {
        (0..=key.level).rev().map(|l| key.ancestor(l)).find(|a| self.leaves.contains_key(a))
    }

    /// Leaf containing `x`; dyadic ties go to the lower-index box.
    pub fn leaf_at(&self, x: &[f64]) -> Result<BoxKey> {
        if x.len() != self.d {
            return Err(MrokError::Mismatch(format!("point has {} coordinates, tree is {}D", x.len(), self.d)));
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(MrokError::PointOutsideBox(x.to_vec()));
        }
        for lev in 0..=self.max_level() {
            let k = BoxKey::containing(lev, x);
            if self.leaves.contains_key(&k) {
                return Ok(k);
            }
        }
        Err(MrokError::InvalidArgument("tree does not tile the box".into()))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let k = self.leaf_at(x)?;
        self.block(&k).unwrap().eval(x)
    }

    /// Block of the represented function on `key`, which must be at or below a leaf.
    pub fn block_on(&self, key: &BoxKey) -> Option<Vec<f64>> {
        let a = self.covering_leaf(key)?;
        let b = Basis::get(self.p).ok()?;
        Some(b.interpolate_down(self.d, &self.leaves[&a], a, *key))
    }

    fn compatible(&self, o: &FunTree) -> Result<()> {
        if self.d != o.d || self.p != o.p {
            return Err(MrokError::Mismatch(format!("trees (d={}, p={}) and (d={}, p={})", self.d, self.p, o.d, o.p)));
        }
        Ok(())
    }

    /// Visit every cell of the union refinement with both blocks on it.
    fn union_cells(&self, o: &FunTree, mut visit: impl FnMut(BoxKey, &[f64], &[f64])) {
        let basis = Basis::get(self.p).unwrap();
        for (ka, ba) in &self.leaves {
            if let Some(kb) = o.covering_leaf(ka) {
                let bb = basis.interpolate_down(self.d, &o.leaves[&kb], kb, *ka);
                visit(*ka, ba, &bb);
            }
        }
        for (kb, bb) in &o.leaves {
            if let Some(ka) = self.covering_leaf(kb) {
                if ka.level < kb.level {
                    let ba = basis.interpolate_down(self.d, &self.leaves[&ka], ka, *kb);
                    visit(*kb, &ba, bb);
                }
            }
        }
    }

    /// `int f g` over the unit box.
    pub fn inner(&self, o: &FunTree) -> Result<f64> {
        self.compatible(o)?;
        let mut s = 0.0;
        self.union_cells(o, |_, a, b| s += tensor::dot(a, b));
        Ok(s)
    }

    pub fn norm2(&self) -> f64 {
        self.leaves.values().map(|b| tensor::norm_sq(b)).sum::<f64>().sqrt()
    }

    /// `a x + y` on the union refinement.
    pub fn axpy(a: f64, x: &FunTree, y: &FunTree) -> Result<FunTree> {
        x.compatible(y)?;
        let mut leaves = BTreeMap::new();
        x.union_cells(y, |k, bx, by| {
            let mut v = by.to_vec();
            tensor::axpy(a, bx, &mut v);
            leaves.insert(k, v);
        });
        Ok(FunTree { d: x.d, p: x.p, eps: x.eps.max(y.eps), jmax: x.jmax.max(y.jmax), leaves, unresolved: Vec::new() })
    }

    pub fn scaled(&self, c: f64) -> FunTree {
        let mut t = self.clone();
        t.leaves.values_mut().for_each(|b| b.iter_mut().for_each(|v| *v *= c));
        t
    }

    pub fn make_redundant(&self) -> RedundantFunTree {
        let basis = Basis::get(self.p).unwrap();
        let mut nodes = self.leaves.clone();
        let top = self.max_level();
        for lev in (1..=top).rev() {
            let parents: BTreeSet<BoxKey> = nodes.keys().filter(|k| k.level == lev).map(|k| k.parent()).collect();
            for par in parents {
                let kids: Vec<&[f64]> = par.children(self.d).map(|c| nodes[&c].as_slice()).collect();
                let blk = basis.project_children(self.d, &kids);
                nodes.insert(par, blk);
            }
        }
        RedundantFunTree { d: self.d, p: self.p, eps: self.eps, jmax: self.jmax, leaves: self.leaves.keys().copied().collect(), nodes }
    }
}

/// Tree with blocks on every node, internal and leaf.
#[derive(Clone, Debug)]
pub struct RedundantFunTree {
    pub d: usize,
    pub p: usize,
    pub eps: f64,
    pub jmax: u8,
    leaves: BTreeSet<BoxKey>,
    nodes: BTreeMap<BoxKey, Vec<f64>>,
}

impl RedundantFunTree {
    pub fn get(&self, key: &BoxKey) -> Option<&Vec<f64>> {
        self.nodes.get(key)
    }

    pub fn is_leaf(&self, key: &BoxKey) -> bool {
        self.leaves.contains(key)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&BoxKey, &Vec<f64>)> {
        self.nodes.iter()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn max_level(&self) -> u8 {
        self.nodes.keys().map(|k| k.level).max().unwrap_or(0)
    }

    /// Nodes at scale `lev`.
    pub fn level(&self, lev: u8) -> impl Iterator<Item = (&BoxKey, &Vec<f64>)> {
        let lo = BoxKey { level: lev, idx: [0; 3] };
        let hi = BoxKey { level: lev, idx: [u32::MAX; 3] };
        self.nodes.range(lo..=hi)
    }

    /// Leaves-only view.
    pub fn to_tree(&self) -> FunTree {
        let leaves = self.leaves.iter().map(|k| (*k, self.nodes[k].clone())).collect();
        FunTree { d: self.d, p: self.p, eps: self.eps, jmax: self.jmax, leaves, unresolved: Vec::new() }
    }
}

#[cfg(test)]
mod tests;
