//! Banded non-standard form in one dimension.

use std::collections::{BTreeMap, BTreeSet};

use super::apply::{apply_scale_operator, Inputs, ScaleOperator};
use super::{block_norm, upsample_block};
use crate::crosscorr::blocks::{gaussian_blocks, periodic_shift};
use crate::error::Result;
use crate::funtree::FunTree;
use crate::gaussfit::GaussianExpansion;
use crate::key::BoxKey;
use crate::tensor;

/// Consecutive negligible shifts after which a non-periodic scan stops.
const QUIET_RUN: usize = 4;

#[derive(Clone, Debug)]
pub struct NsForm1D {
    pub p: usize,
    pub n: u8,
    pub eps: f64,
    pub periodic: bool,
    /// Coarse band radius `B_j` (band width `2 B_j + 1`); `-1` is an empty band.
    pub radius: Vec<i64>,
    /// Per scale, shifts of the whole band for output parity 0 and 1.
    pub(crate) whole: Vec<[Vec<i64>; 2]>,
    /// Per scale and parity, signed shifts of the outer band.
    pub(crate) outer: Vec<[Vec<(i64, f64)>; 2]>,
    pub(crate) blocks: Vec<BTreeMap<i64, Vec<f64>>>,
}

impl NsForm1D {
    pub fn band_width(&self, j: u8) -> i64 {
        2 * self.radius[j as usize] + 1
    }

    /// Whole-band shifts `l - l'` for output parity `a`.
    pub fn whole_shifts(&self, j: u8, a: usize) -> &[i64] {
        &self.whole[j as usize][a]
    }

    pub fn outer_shifts(&self, j: u8, a: usize) -> &[(i64, f64)] {
        &self.outer[j as usize][a]
    }

    pub fn block(&self, j: u8, s: i64) -> Option<&[f64]> {
        self.blocks[j as usize].get(&s).map(|v| v.as_slice())
    }
}

/// `p x p` blocks of `sum_m w_m exp(-tau_m x^2)`.
pub fn gaussian_provider(e: &GaussianExpansion, p: usize) -> impl Fn(u8, i64) -> Result<Vec<f64>> + '_ {
    move |j, l| {
        let mut acc = vec![0.0; p * p];
        for (w, t) in e.weights.iter().zip(&e.taus) {
            let b = gaussian_blocks(j, *t, &[l], p)?;
            tensor::axpy(*w, &b[0].data, &mut acc);
        }
        Ok(acc)
    }
}

struct Provider<'a, F> {
    f: &'a F,
    p: usize,
    periodic: bool,
    cache: Vec<BTreeMap<i64, Vec<f64>>>,
}

impl<F: Fn(u8, i64) -> Result<Vec<f64>>> Provider<'_, F> {
    fn norm_shift(&self, j: u8, s: i64) -> i64 {
        if self.periodic {
            periodic_shift(j, s)
        } else {
            s
        }
    }

    fn get(&mut self, j: u8, s: i64) -> Result<&Vec<f64>> {
        let s = self.norm_shift(j, s);
        let m = &mut self.cache[j as usize];
        if !m.contains_key(&s) {
            m.insert(s, (self.f)(j, s)?);
        }
        Ok(&self.cache[j as usize][&s])
    }

    /// `sum_b max_a ||t^{j;2L+a-b} - H^aT t^{j-1;L} H^b||`.
    fn diff_norm(&mut self, j: u8, l: i64) -> Result<f64> {
        let up = upsample_block(&self.get(j - 1, l)?.clone(), self.p)?;
        let mut tot = 0.0;
        for b in 0..2 {
            let mut worst: f64 = 0.0;
            for a in 0..2 {
                let mut dif = self.get(j, 2 * l + a as i64 - b as i64)?.clone();
                tensor::axpy(-1.0, &up[2 * a + b], &mut dif);
                worst = worst.max(block_norm(&dif, self.p));
            }
            tot += worst;
        }
        Ok(tot)
    }
}

/// Coarse shifts `|L| <= r` at scale `j`, as residues when periodic.
fn coarse_set(j: u8, r: i64, periodic: bool) -> BTreeSet<i64> {
    (-r..=r).map(|l| if periodic { periodic_shift(j, l) } else { l }).collect()
}

/// Smallest radius whose excluded tail of difference norms stays within `budget`.
fn select_radius<F: Fn(u8, i64) -> Result<Vec<f64>>>(pr: &mut Provider<F>, j: u8, budget: f64) -> Result<i64> {
    let coarse = 1i64 << (j - 1);
    let lmax = if pr.periodic { coarse / 2 } else { coarse - 1 };
    if budget <= 0.0 {
        return Ok(lmax);
    }
    // norms by |L|, both signs summed
    let mut by_r: Vec<f64> = Vec::new();
    let mut quiet = 0;
    for r in 0..=lmax {
        let mut v = pr.diff_norm(j, r)?;
        if r > 0 && !(pr.periodic && 2 * r == coarse) {
            v += pr.diff_norm(j, -r)?;
        }
        by_r.push(v);
        if !pr.periodic {
            quiet = if v < budget / 64.0 { quiet + 1 } else { 0 };
            if quiet >= QUIET_RUN {
                break;
            }
        }
    }
    let mut tail = 0.0;
    let mut r = by_r.len() as i64 - 1;
    while r >= 0 && tail + by_r[r as usize] <= budget {
        tail += by_r[r as usize];
        r -= 1;
    }
    Ok(r)
}

/// Build the banded form for scales `0..=n` from `provider(j, l)`, the
/// `p x p` block for shift `l` (output minus input) at scale `j`.
pub fn build_1d<F>(provider: F, p: usize, n: u8, eps: f64, periodic: bool) -> Result<NsForm1D>
where
    F: Fn(u8, i64) -> Result<Vec<f64>>,
{
    crate::funtree::check_dp(1, p)?;
    let mut pr = Provider { f: &provider, p, periodic, cache: vec![BTreeMap::new(); n as usize + 1] };
    let budget = if n == 0 { eps } else { eps / n as f64 };
    let mut radius = vec![0i64];
    for j in 1..=n {
        radius.push(select_radius(&mut pr, j, budget)?);
    }
    assemble_1d(&mut pr, n, eps, radius)
}

/// Whole and outer bands from given radii.
pub(crate) fn assemble_1d_from<F>(provider: F, p: usize, n: u8, eps: f64, periodic: bool, radius: Vec<i64>) -> Result<NsForm1D>
where
    F: Fn(u8, i64) -> Result<Vec<f64>>,
{
    let mut pr = Provider { f: &provider, p, periodic, cache: vec![BTreeMap::new(); n as usize + 1] };
    assemble_1d(&mut pr, n, eps, radius)
}

fn assemble_1d<F: Fn(u8, i64) -> Result<Vec<f64>>>(pr: &mut Provider<F>, n: u8, eps: f64, radius: Vec<i64>) -> Result<NsForm1D> {
    let (p, periodic) = (pr.p, pr.periodic);
    let mut whole = Vec::new();
    let mut outer = Vec::new();
    let mut blocks = Vec::new();
    for j in 0..=n {
        let mut w: [Vec<i64>; 2] = Default::default();
        let mut o: [Vec<(i64, f64)>; 2] = Default::default();
        let inner = if j < n { coarse_set(j, radius[j as usize + 1], periodic) } else { BTreeSet::new() };
        for a in 0..2usize {
            let set: BTreeSet<i64> = if j == 0 {
                [0].into()
            } else {
                coarse_set(j - 1, radius[j as usize], periodic)
                    .into_iter()
                    .flat_map(|l| [2 * l + a as i64, 2 * l + a as i64 - 1])
                    .map(|s| pr.norm_shift(j, s))
                    .collect()
            };
            let mut signed: BTreeMap<i64, f64> = set.iter().map(|&s| (s, 1.0)).collect();
            for &s in &inner {
                *signed.entry(s).or_insert(0.0) -= 1.0;
            }
            o[a] = signed.into_iter().filter(|(_, c)| *c != 0.0).collect();
            w[a] = set.into_iter().collect();
        }
        let mut bl = BTreeMap::new();
        for s in w.iter().flatten().chain(o.iter().flatten().map(|(s, _)| s)) {
            if !bl.contains_key(s) {
                bl.insert(*s, pr.get(j, *s)?.clone());
            }
        }
        whole.push(w);
        outer.push(o);
        blocks.push(bl);
    }
    Ok(NsForm1D { p, n, eps, periodic, radius, whole, outer, blocks })
}

impl ScaleOperator for NsForm1D {
    fn dim(&self) -> usize {
        1
    }
    fn order(&self) -> usize {
        self.p
    }
    fn periodic(&self) -> bool {
        self.periodic
    }
    fn max_scale(&self) -> u8 {
        self.n
    }
    fn reach(&self, j: u8) -> i64 {
        let w = self.whole[j as usize].iter().flatten();
        let o = self.outer[j as usize].iter().flatten().map(|(s, _)| s);
        w.chain(o).map(|s| s.abs()).max().unwrap_or(0)
    }
    fn apply_box(&self, key: BoxKey, leaf: bool, input: &Inputs, out: &mut [f64]) {
        let j = key.level as usize;
        let a = (key.idx[0] & 1) as usize;
        let p = self.p;
        let mut run = |s: i64, c: f64| {
            if let Some(f) = input.at(key, &[s]) {
                let t = &self.blocks[j][&s];
                for i in 0..p {
                    out[i] += c * tensor::dot(&t[i * p..(i + 1) * p], f);
                }
            }
        };
        if leaf {
            self.whole[j][a].iter().for_each(|&s| run(s, 1.0));
        } else {
            self.outer[j][a].iter().for_each(|&(s, c)| run(s, c));
        }
    }
}

/// Apply the banded form to `f` with relative accuracy `op.eps`.
pub fn apply_1d(op: &NsForm1D, f: &FunTree) -> Result<FunTree> {
    apply_scale_operator(op, f, op.eps.max(0.0))
}
