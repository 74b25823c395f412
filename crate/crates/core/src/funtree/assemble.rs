use std::collections::{BTreeMap, BTreeSet};

use super::FunTree;
use crate::basis::Basis;
use crate::error::Result;
use crate::key::BoxKey;
use crate::tensor;

/// Sum per-scale partial blocks into a leaves-only tree: every parent block
/// is refined into its children with zero detail and added there. Missing
/// ancestors are zero and internal nodes get all `2^d` children. The result
/// is pruned with budget `eps`.
pub fn assemble(partials: BTreeMap<BoxKey, Vec<f64>>, d: usize, p: usize, eps: f64, jmax: u8) -> Result<FunTree> {
    super::check_dp(d, p)?;
    let basis = Basis::get(p)?;
    let n = p.pow(d as u32);
    let mut nodes = partials;
    let mut internal: BTreeSet<BoxKey> = BTreeSet::new();
    let keys: Vec<BoxKey> = nodes.keys().copied().collect();
    for k in keys {
        for lev in 0..k.level {
            internal.insert(k.ancestor(lev));
        }
    }
    nodes.entry(BoxKey::ROOT).or_insert_with(|| vec![0.0; n]);
    for k in &internal {
        nodes.entry(*k).or_insert_with(|| vec![0.0; n]);
        for c in k.children(d) {
            nodes.entry(c).or_insert_with(|| vec![0.0; n]);
        }
    }
    // coarse to fine
    for k in &internal {
        let blk = nodes[k].clone();
        for (ci, c) in k.children(d).enumerate() {
            let add = basis.child_from_parent(d, &blk, ci);
            tensor::axpy(1.0, &add, nodes.get_mut(&c).unwrap());
        }
    }
    let leaves: BTreeMap<BoxKey, Vec<f64>> = nodes.into_iter().filter(|(k, _)| !internal.contains(k)).collect();
    let top = leaves.keys().map(|k| k.level).max().unwrap_or(0);
    let tree = FunTree::from_parts(d, p, eps, jmax.max(top), leaves, Vec::new());
    Ok(prune(&tree, eps))
}

/// Merge sibling groups, finest first and smallest detail first, while the
/// total removed `L^2` energy stays within `eps^2`.
pub fn prune(tree: &FunTree, eps: f64) -> FunTree {
    if eps <= 0.0 {
        return tree.clone();
    }
    let d = tree.d;
    let basis = Basis::get(tree.p).unwrap();
    let mut leaves = tree.leaf_map().clone();
    let budget = eps * eps;
    let mut spent = 0.0;
    for lev in (1..=tree.max_level()).rev() {
        let parents: BTreeSet<BoxKey> = leaves.keys().filter(|k| k.level == lev).map(|k| k.parent()).collect();
        let mut groups = Vec::new();
        for par in parents {
            if !par.children(d).all(|c| leaves.contains_key(&c)) {
                continue;
            }
            let kids: Vec<&[f64]> = par.children(d).map(|c| leaves[&c].as_slice()).collect();
            let blk = basis.project_children(d, &kids);
            // energy of the wavelet part, computed directly to avoid cancellation
            let mut detail = 0.0;
            for (ci, kid) in kids.iter().enumerate() {
                let mut r = basis.child_from_parent(d, &blk, ci);
                tensor::axpy(-1.0, kid, &mut r);
                detail += tensor::norm_sq(&r);
            }
            groups.push((detail, par, blk));
        }
        groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut merged_any = false;
        for (detail, par, blk) in groups {
            if spent + detail > budget {
                break;
            }
            spent += detail;
            for c in par.children(d) {
                leaves.remove(&c);
            }
            leaves.insert(par, blk);
            merged_any = true;
        }
        if !merged_any && spent >= budget {
            break;
        }
    }
    FunTree::from_parts(d, tree.p, tree.eps, tree.jmax, leaves, tree.unresolved().to_vec())
}
