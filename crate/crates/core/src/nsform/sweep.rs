//! Scale-wide separated application: one axis at a time over every output
//! box of a scale, so partial contractions are shared between neighbours.

use std::collections::HashMap;

use crate::{par, tensor};

/// Key sets per stage: `keys[0]` are outputs, `keys[d]` inputs; key `k` of
/// stage `a` has input coordinates on axes `< a` and output ones after.
pub(crate) struct Plan {
    pub keys: Vec<Vec<[i64; 3]>>,
    /// Per stage `a < d` and key: `(index in keys[a + 1], shift)`.
    links: Vec<Vec<Vec<(u32, i64)>>>,
}

/// `shifts(axis, coord)` lists the shifts read along `axis` by a box with
/// that coordinate; sources outside `[0, 2^j)` are dropped.
pub(crate) fn plan<S: Fn(usize, i64) -> Vec<i64>>(d: usize, j: u8, outs: &[[i64; 3]], shifts: S) -> Plan {
    let side = 1i64 << j;
    let mut keys = vec![outs.to_vec()];
    let mut links = Vec::new();
    for a in 0..d {
        let mut index: HashMap<[i64; 3], u32> = HashMap::new();
        let mut next = Vec::new();
        let mut lk = Vec::with_capacity(keys[a].len());
        for t in &keys[a] {
            let mut row = Vec::new();
            for s in shifts(a, t[a]) {
                let mut src = *t;
                src[a] -= s;
                if src[a] < 0 || src[a] >= side {
                    continue;
                }
                let i = *index.entry(src).or_insert_with(|| {
                    next.push(src);
                    next.len() as u32 - 1
                });
                row.push((i, s));
            }
            lk.push(row);
        }
        keys.push(next);
        links.push(lk);
    }
    Plan { keys, links }
}

impl Plan {
    /// `sum_s (x)_a F_{s_a} f(key - s)` for every output key. `input(i)` is
    /// the block at `keys[d][i]`; `block(a, s)` the factor for shift `s`
    /// along axis `a`, `None` when negligible.
    pub fn run<'a, I, B>(&self, d: usize, p: usize, input: I, block: B) -> Vec<Option<Vec<f64>>>
    where
        I: Fn(usize) -> Option<&'a [f64]> + Sync,
        B: Fn(usize, i64) -> Option<&'a [f64]> + Sync,
    {
        let shape = vec![p; d];
        let mut vals: Option<Vec<Option<Vec<f64>>>> = None;
        for a in (0..d).rev() {
            let prev = &vals;
            let links = &self.links[a];
            let next = par::map_range(links.len(), |t| {
                let mut acc: Option<Vec<f64>> = None;
                for &(src, s) in &links[t] {
                    let y = match prev {
                        None => input(src as usize),
                        Some(v) => v[src as usize].as_deref(),
                    };
                    let (Some(y), Some(f)) = (y, block(a, s)) else { continue };
                    let acc = acc.get_or_insert_with(|| vec![0.0; y.len()]);
                    tensor::contract_axis_into(y, &shape, a, f, p, acc, true);
                }
                acc
            });
            vals = Some(next);
        }
        vals.unwrap()
    }
}
