//! Adaptive application shared by the banded and separated forms: output
//! skeleton, per-scale input cache, per-node evaluation, assembly.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{MrokError, Result};
use crate::funtree::{assemble, FunTree};
use crate::key::BoxKey;
use crate::par;

/// One scale-by-scale operator in natural-scale form.
pub(crate) trait ScaleOperator: Sync {
    fn dim(&self) -> usize;
    fn order(&self) -> usize;
    fn periodic(&self) -> bool;
    fn max_scale(&self) -> u8;
    /// Largest shift component (in boxes) read at scale `j`.
    fn reach(&self, j: u8) -> i64;
    /// Add the contribution at output box `key` to `out`.
    fn apply_box(&self, key: BoxKey, leaf: bool, input: &Inputs, out: &mut [f64]);
    /// Whole-scale alternative to [`ScaleOperator::apply_box`].
    fn apply_level(&self, _outs: &[BoxKey], _leaf: &[bool], _input: &Inputs) -> Option<Vec<Vec<f64>>> {
        None
    }
}

/// Input blocks of one scale, addressed relative to an output box.
pub(crate) struct Inputs<'a> {
    pub d: usize,
    pub periodic: bool,
    pub cache: &'a BTreeMap<BoxKey, Vec<f64>>,
}

impl Inputs<'_> {
    /// Block at `key - s`, `None` outside the domain.
    pub fn at(&self, key: BoxKey, s: &[i64]) -> Option<&[f64]> {
        let mut neg = [0i64; 3];
        for a in 0..self.d {
            neg[a] = -s[a];
        }
        let k = key.shifted(self.d, &neg[..self.d], self.periodic)?;
        self.cache.get(&k).map(|v| v.as_slice())
    }
}

/// All offsets in `[-r, r]^d`.
pub(crate) fn offsets(d: usize, r: i64) -> Vec<[i64; 3]> {
    let w = (2 * r + 1) as usize;
    (0..w.pow(d as u32))
        .map(|mut c| {
            let mut o = [0i64; 3];
            for a in (0..d).rev() {
                o[a] = (c % w) as i64 - r;
                c /= w;
            }
            o
        })
        .collect()
}

/// Output skeleton: input nodes plus their same-scale neighbours, closed
/// under ancestors and sibling completion.
fn skeleton<O: ScaleOperator>(op: &O, f: &FunTree) -> BTreeSet<BoxKey> {
    let (d, periodic) = (f.d, op.periodic());
    let red = f.make_redundant();
    let mut set: BTreeSet<BoxKey> = BTreeSet::new();
    for (k, _) in red.nodes() {
        for o in &offsets(d, op.reach(k.level)) {
            if let Some(n) = k.shifted(d, &o[..d], periodic) {
                set.insert(n);
            }
        }
    }
    let keys: Vec<BoxKey> = set.iter().copied().collect();
    for k in keys {
        for lev in 0..k.level {
            let a = k.ancestor(lev);
            set.insert(a);
            set.extend(a.children(d));
        }
    }
    set.insert(BoxKey::ROOT);
    set
}

/// Fraction of the operator budget spent on skipping negligible input blocks.
const INPUT_DROP: f64 = 1e-3;

/// Apply `op` to `f` with relative accuracy `eps`: input blocks whose total
/// energy is below `INPUT_DROP eps ||f||` are skipped and the result is
/// pruned with `eps ||f|| / 4`.
pub(crate) fn apply_scale_operator<O: ScaleOperator>(op: &O, f: &FunTree, eps: f64) -> Result<FunTree> {
    let fnorm = f.norm2();
    let prune_eps = 0.25 * eps * fnorm;
    let (d, p) = (op.dim(), op.order());
    if f.d != d || f.p != p {
        return Err(MrokError::Mismatch(format!("operator d={d} p={p}, tree d={} p={}", f.d, f.p)));
    }
    if f.max_level() > op.max_scale() {
        return Err(MrokError::TreeTooDeep { op: op.max_scale() as usize, tree: f.max_level() as usize });
    }
    let red = f.make_redundant();
    let skel = skeleton(op, f);
    let top = skel.iter().map(|k| k.level).max().unwrap_or(0);
    let mut partials: BTreeMap<BoxKey, Vec<f64>> = BTreeMap::new();
    for j in 0..=top {
        let outs: Vec<BoxKey> = skel.range(BoxKey::new(j, &[0; 3][..d])..).take_while(|k| k.level == j).copied().collect();
        // every input block this scale reads, built before the parallel sweep
        let shifts = offsets(d, op.reach(j));
        let mut need: BTreeSet<BoxKey> = BTreeSet::new();
        for k in &outs {
            for s in &shifts {
                if let Some(n) = k.shifted(d, &s[..d], op.periodic()) {
                    need.insert(n);
                }
            }
        }
        let need: Vec<BoxKey> = need.into_iter().collect();
        let blocks = par::map(&need, |k| red.get(k).cloned().or_else(|| f.block_on(k)));
        // equal share per block, counting every scale
        let floor = INPUT_DROP * eps * fnorm / ((need.len() * (top as usize + 1)) as f64).sqrt();
        let cache: BTreeMap<BoxKey, Vec<f64>> = need
            .into_iter()
            .zip(blocks)
            .filter_map(|(k, b)| b.filter(|b| crate::tensor::norm_sq(b).sqrt() > floor).map(|b| (k, b)))
            .collect();
        let input = Inputs { d, periodic: op.periodic(), cache: &cache };
        let n = p.pow(d as u32);
        let leaf: Vec<bool> = outs.iter().map(|k| j == top || !skel.contains(&k.child(d, 0))).collect();
        let res = match op.apply_level(&outs, &leaf, &input) {
            Some(r) => r,
            None => par::map_range(outs.len(), |i| {
                let mut out = vec![0.0; n];
                op.apply_box(outs[i], leaf[i], &input, &mut out);
                out
            }),
        };
        partials.extend(outs.into_iter().zip(res));
    }
    assemble(partials, d, p, prune_eps, f.jmax.max(top))
}
