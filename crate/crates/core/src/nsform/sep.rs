//! Separated non-standard form of a Gaussian expansion in `d` dimensions.

use std::collections::BTreeMap;

use super::apply::{apply_scale_operator, Inputs, ScaleOperator};
use super::{block_norm, classify_region, sweep, upsample_block};
use crate::crosscorr::gaussian_blocks;
use crate::error::{MrokError, Result};
use crate::funtree::FunTree;
use crate::gaussfit::GaussianExpansion;
use crate::key::BoxKey;
use crate::{par, tensor};

/// Coarse radius examined first; grows while its outer shell matters.
const START_RADIUS: i64 = 3;
const MAX_RADIUS: i64 = 8;
/// Blocks below this fraction of a term's largest block are skipped.
const BLOCK_CUT: f64 = 1e-17;

/// Per-term one-dimensional norms at scale `j` for coarse shifts
/// `-r..=r`, each the maximum over the four parity pairs and scaled by
/// `2^j`: `n_f` of `F^{j;m,2l+a-b}`, `n_up` of `H^aT F^{j-1;m,l} H^b` and
/// `n_dif` of their difference.
#[derive(Clone, Debug)]
pub struct NormTables {
    pub j: u8,
    pub r: i64,
    pub weights: Vec<f64>,
    pub n_dif: Vec<Vec<f64>>,
    pub n_f: Vec<Vec<f64>>,
    pub n_up: Vec<Vec<f64>>,
}

struct TermData {
    n_dif: Vec<f64>,
    n_f: Vec<f64>,
    n_up: Vec<f64>,
}

fn term_data(j: u8, tau: f64, p: usize, r: i64) -> Result<TermData> {
    let fs: Vec<i64> = (-2 * r - 1..=2 * r + 1).collect();
    let cs: Vec<i64> = (-r..=r).collect();
    let fine: Vec<Vec<f64>> = gaussian_blocks(j, tau, &fs, p)?.into_iter().map(|b| b.data).collect();
    let coarse = gaussian_blocks(j - 1, tau, &cs, p)?;
    let sc = (j as f64).exp2();
    let (mut n_dif, mut n_f, mut n_up) = (Vec::new(), Vec::new(), Vec::new());
    for (i, l) in cs.iter().enumerate() {
        let up = upsample_block(&coarse[i].data, p)?;
        let (mut nd, mut nf, mut nu) = (0.0f64, 0.0f64, 0.0f64);
        for a in 0..2 {
            for b in 0..2 {
                let f = &fine[(2 * l + a - b + 2 * r + 1) as usize];
                let u = &up[(2 * a + b) as usize];
                let mut dif = f.clone();
                tensor::axpy(-1.0, u, &mut dif);
                nd = nd.max(block_norm(&dif, p));
                nf = nf.max(block_norm(f, p));
                nu = nu.max(block_norm(u, p));
            }
        }
        n_dif.push(sc * nd);
        n_f.push(sc * nf);
        n_up.push(sc * nu);
    }
    Ok(TermData { n_dif, n_f, n_up })
}

fn all_terms(e: &GaussianExpansion, j: u8, p: usize, r: i64) -> Result<Vec<TermData>> {
    par::map(&e.taus, |t| term_data(j, *t, p, r)).into_iter().collect()
}

pub fn block_norm_tables(e: &GaussianExpansion, j: u8, p: usize, r: i64) -> Result<NormTables> {
    if j == 0 {
        return Err(MrokError::InvalidArgument("norm tables need j >= 1".into()));
    }
    let terms = all_terms(e, j, p, r)?;
    Ok(tables_of(e, j, r, &terms))
}

fn tables_of(e: &GaussianExpansion, j: u8, r: i64, terms: &[TermData]) -> NormTables {
    NormTables {
        j,
        r,
        weights: e.weights.clone(),
        n_dif: terms.iter().map(|t| t.n_dif.clone()).collect(),
        n_f: terms.iter().map(|t| t.n_f.clone()).collect(),
        n_up: terms.iter().map(|t| t.n_up.clone()).collect(),
    }
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    match d {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]],
    }
}

/// Upper bound for `w_m || (x)F - (x)upF ||` at coarse shift `l`, averaged
/// over the telescoping orders of the factors.
pub fn estimate_block_norm(t: &NormTables, l: &[i64], m: usize) -> f64 {
    let d = l.len();
    let at = |v: &Vec<Vec<f64>>, k: usize| v[m][(l[k] + t.r) as usize];
    let perms = permutations(d);
    let mut sum = 0.0;
    for perm in &perms {
        for pos in 0..d {
            let mut prod = at(&t.n_dif, perm[pos]);
            for (q, &k) in perm.iter().enumerate() {
                if q < pos {
                    prod *= at(&t.n_up, k);
                } else if q > pos {
                    prod *= at(&t.n_f, k);
                }
            }
            sum += prod;
        }
    }
    t.weights[m] * sum / perms.len() as f64 * (-(t.j as f64) * d as f64).exp2()
}

/// Shortest contiguous range `[m1, m2]` whose excluded sum stays within `budget`.
fn term_window(e: &[f64], budget: f64) -> Option<(usize, usize)> {
    let total: f64 = e.iter().sum();
    if total <= budget {
        return None;
    }
    let (mut lo, mut hi, mut cut) = (0usize, e.len() - 1, 0.0);
    while lo < hi {
        let (a, b) = (e[lo], e[hi]);
        if a <= b && cut + a <= budget {
            cut += a;
            lo += 1;
        } else if cut + b <= budget {
            cut += b;
            hi -= 1;
        } else if cut + a <= budget {
            cut += a;
            lo += 1;
        } else {
            break;
        }
    }
    Some((lo, hi))
}

fn union(a: Option<(usize, usize)>, b: Option<(usize, usize)>) -> Option<(usize, usize)> {
    match (a, b) {
        (Some(x), Some(y)) => Some((x.0.min(y.0), x.1.max(y.1))),
        (x, None) => x,
        (None, y) => y,
    }
}

/// All integer vectors in `[-r, r]^d`.
fn cube(d: usize, r: i64) -> Vec<Vec<i64>> {
    super::apply::offsets(d, r).into_iter().map(|o| o[..d].to_vec()).collect()
}

/// Per-axis coarse shift sets whose products make up region class `k`
/// inside radius `r`.
pub(crate) fn region_products(d: usize, r: i64, k: usize) -> Vec<Vec<Vec<i64>>> {
    if r < 0 || (k > 0 && r < 2) {
        return Vec::new();
    }
    let c = r.min(1);
    let core: Vec<i64> = (-c..=c).collect();
    let bnd: Vec<i64> = (-r..=r).filter(|v| v.abs() > 1).collect();
    (0..1usize << d)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..d).map(|a| if mask >> a & 1 == 1 { bnd.clone() } else { core.clone() }).collect())
        .collect()
}

#[derive(Clone, Debug)]
pub(crate) struct SepScale {
    pub radius: i64,
    /// Term window per region class (core first); scale 0 uses entry 0.
    pub windows: Vec<Option<(usize, usize)>>,
    pub blocks: BTreeMap<(usize, i64), Vec<f64>>,
    /// Largest block norm per term, for skipping negligible blocks.
    pub peak: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SepNsForm {
    pub d: usize,
    pub p: usize,
    pub n: u8,
    pub eps: f64,
    pub expansion: GaussianExpansion,
    pub(crate) scales: Vec<SepScale>,
}

impl SepNsForm {
    /// Retained coarse radius at scale `j >= 1` (`-1` when nothing is kept).
    pub fn radius(&self, j: u8) -> i64 {
        self.scales[j as usize].radius
    }

    pub fn window(&self, j: u8, class: super::RegionClass) -> Option<(usize, usize)> {
        self.scales[j as usize].windows.get(class.index()).copied().flatten()
    }
}

struct Selection {
    radius: i64,
    windows: Vec<Option<(usize, usize)>>,
}

fn select_scale(e: &GaussianExpansion, d: usize, j: u8, p: usize, budget: f64) -> Result<Selection> {
    let cap = (1i64 << (j - 1)) - 1;
    let m = e.len();
    if budget <= 0.0 {
        let windows = (0..=d).map(|k| (!region_products(d, cap, k).is_empty()).then_some((0, m - 1))).collect();
        return Ok(Selection { radius: cap, windows });
    }
    let mut r = START_RADIUS.min(cap);
    loop {
        let terms = all_terms(e, j, p, r)?;
        let tab = tables_of(e, j, r, &terms);
        let ls = cube(d, r);
        let beta = budget / ls.len() as f64;
        let mut windows = vec![None; d + 1];
        let mut radius = -1;
        let mut shell = false;
        for l in &ls {
            let est: Vec<f64> = (0..m).map(|k| estimate_block_norm(&tab, l, k)).collect();
            if est.iter().sum::<f64>() < beta {
                continue;
            }
            let lr = l.iter().map(|v| v.abs()).max().unwrap();
            shell |= lr == r;
            radius = radius.max(lr);
            let c = classify_region(l).index();
            windows[c] = union(windows[c], term_window(&est, beta));
        }
        if shell && r < cap.min(MAX_RADIUS) {
            r += 1;
            continue;
        }
        // classes outside the kept radius are empty
        for (k, w) in windows.iter_mut().enumerate() {
            if region_products(d, radius, k).is_empty() {
                *w = None;
            }
        }
        return Ok(Selection { radius, windows });
    }
}

/// Build the separated form for scales `0..=n` with total budget `eps`
/// split evenly over the scales.
pub fn build_sep(e: &GaussianExpansion, d: usize, p: usize, n: u8, eps: f64) -> Result<SepNsForm> {
    crate::funtree::check_dp(d, p)?;
    if e.is_empty() {
        return Err(MrokError::InvalidArgument("empty expansion".into()));
    }
    let res = (-(n as f64)).exp2() / p as f64;
    if e.delta > res || e.r_max < (d as f64).sqrt() * (1.0 - 1e-12) {
        return Err(MrokError::InvalidArgument(format!(
            "expansion range [{}, {}] does not cover [{res:e}, {}]",
            e.delta,
            e.r_max,
            (d as f64).sqrt()
        )));
    }
    let budget = eps / (n as f64 + 1.0);
    let m = e.len();
    let mut sels = Vec::new();
    for j in 1..=n {
        sels.push(select_scale(e, d, j, p, budget)?);
    }
    // scale 0: the full operator at shift 0
    let t0: Vec<Vec<f64>> =
        par::map(&e.taus, |t| gaussian_blocks(0, *t, &[0], p).map(|b| b[0].data.clone())).into_iter().collect::<Result<_>>()?;
    let w0 = if budget <= 0.0 {
        Some((0, m - 1))
    } else {
        let a: Vec<f64> = (0..m).map(|k| e.weights[k] * block_norm(&t0[k], p).powi(d as i32)).collect();
        term_window(&a, budget)
    };
    let radius: Vec<i64> = std::iter::once(0).chain(sels.iter().map(|s| s.radius)).collect();
    let windows: Vec<Vec<Option<(usize, usize)>>> = std::iter::once(vec![w0]).chain(sels.into_iter().map(|s| s.windows)).collect();
    assemble_sep(e, d, p, n, eps, radius, windows)
}

/// Blocks for given radii and term windows (scale 0 has a single window).
pub(crate) fn assemble_sep(
    e: &GaussianExpansion,
    d: usize,
    p: usize,
    n: u8,
    eps: f64,
    radius: Vec<i64>,
    windows: Vec<Vec<Option<(usize, usize)>>>,
) -> Result<SepNsForm> {
    let m = e.len();
    let hull = |w: &[Option<(usize, usize)>]| w.iter().fold(None, |u, w| union(u, *w));
    let mut scales = Vec::new();
    for j in 0..=n as usize {
        let mut blocks: BTreeMap<(usize, i64), Vec<f64>> = BTreeMap::new();
        let mut fetch = |lev: usize, win: Option<(usize, usize)>, shifts: Vec<i64>| -> Result<()> {
            let Some((a, b)) = win else { return Ok(()) };
            let got: Vec<Vec<Vec<f64>>> = par::map(&e.taus[a..=b], |t| {
                gaussian_blocks(lev as u8, *t, &shifts, p).map(|v| v.into_iter().map(|b| b.data).collect())
            })
            .into_iter()
            .collect::<Result<_>>()?;
            for (k, row) in (a..=b).zip(got) {
                for (sh, blk) in shifts.iter().zip(row) {
                    blocks.entry((k, *sh)).or_insert(blk);
                }
            }
            Ok(())
        };
        if j == 0 {
            fetch(0, windows[0][0], vec![0])?;
        } else {
            let r = radius[j];
            fetch(j, hull(&windows[j]), (-2 * r - 1..=2 * r + 1).collect())?;
        }
        // coarse part of the next scale, applied here
        if j < n as usize {
            let r = radius[j + 1];
            fetch(j, hull(&windows[j + 1]), (-r..=r).collect())?;
        }
        let mut peak = vec![0.0f64; m];
        for ((k, _), b) in &blocks {
            peak[*k] = peak[*k].max(tensor::norm_sq(b).sqrt());
        }
        scales.push(SepScale { radius: radius[j], windows: windows[j].clone(), blocks, peak });
    }
    Ok(SepNsForm { d, p, n, eps, expansion: e.clone(), scales })
}

impl SepNsForm {
    /// `out += w sum_s (x)_k F_{s_k} f(key - s)` over the product of the
    /// per-axis shift lists.
    fn product(&self, key: BoxKey, input: &Inputs, lists: &[Vec<(i64, &[f64])>], w: f64, out: &mut [f64]) {
        let (d, p) = (self.d, self.p);
        let shape = vec![p; d];
        let mut prefix = [0i64; 3];
        if let Some(acc) = self.partial(key, input, lists, 0, &mut prefix, &shape) {
            tensor::axpy(w, &acc, out);
        }
    }

    fn partial(
        &self,
        key: BoxKey,
        input: &Inputs,
        lists: &[Vec<(i64, &[f64])>],
        axis: usize,
        prefix: &mut [i64; 3],
        shape: &[usize],
    ) -> Option<Vec<f64>> {
        let d = self.d;
        let mut acc: Option<Vec<f64>> = None;
        for (s, f) in &lists[axis] {
            prefix[axis] = *s;
            let inner;
            let y: &[f64] = if axis + 1 == d {
                match input.at(key, &prefix[..d]) {
                    Some(v) => v,
                    None => continue,
                }
            } else {
                match self.partial(key, input, lists, axis + 1, prefix, shape) {
                    Some(v) => {
                        inner = v;
                        &inner
                    }
                    None => continue,
                }
            };
            let a = acc.get_or_insert_with(|| vec![0.0; y.len()]);
            tensor::contract_axis_into(y, shape, axis, f, self.p, a, true);
        }
        acc
    }

    /// Apply the windows of scale `src` with per-axis shift sets built by
    /// `shifts(axis, L)` from blocks stored at scale `at`.
    fn apply_part<S>(&self, key: BoxKey, input: &Inputs, src: usize, at: usize, sign: f64, shifts: S, out: &mut [f64])
    where
        S: Fn(usize, i64) -> Vec<i64>,
    {
        let sc = &self.scales[at];
        let radius = if src == 0 { 0 } else { self.scales[src].radius };
        for (class, win) in self.scales[src].windows.iter().enumerate() {
            let Some((m1, m2)) = *win else { continue };
            let products = if src == 0 { vec![vec![vec![0i64]; self.d]] } else { region_products(self.d, radius, class) };
            for prod in &products {
                for m in m1..=m2 {
                    let cut = BLOCK_CUT * sc.peak[m];
                    let lists: Vec<Vec<(i64, &[f64])>> = prod
                        .iter()
                        .enumerate()
                        .map(|(a, ls)| {
                            ls.iter()
                                .flat_map(|&l| shifts(a, l))
                                .filter_map(|s| {
                                    let b = sc.blocks.get(&(m, s))?;
                                    (tensor::norm_sq(b).sqrt() > cut).then_some((s, b.as_slice()))
                                })
                                .collect()
                        })
                        .collect();
                    if lists.iter().any(|l| l.is_empty()) {
                        continue;
                    }
                    self.product(key, input, &lists, sign * self.expansion.weights[m], out);
                }
            }
        }
    }
}

impl SepNsForm {
    /// Sweep one part over `outs`: the windows of scale `src` with blocks
    /// stored at the level of `outs`, per-axis shifts from `shifts(coord, L)`.
    fn sweep_part<S>(&self, outs: &[BoxKey], input: &Inputs, src: usize, sign: f64, shifts: S, res: &mut [Vec<f64>])
    where
        S: Fn(i64, i64) -> Vec<i64> + Copy,
    {
        let Some(first) = outs.first() else { return };
        let (d, p, j) = (self.d, self.p, first.level);
        let sc = &self.scales[j as usize];
        let coords: Vec<[i64; 3]> = outs.iter().map(|k| [k.idx[0] as i64, k.idx[1] as i64, k.idx[2] as i64]).collect();
        let radius = if src == 0 { 0 } else { self.scales[src].radius };
        for (class, win) in self.scales[src].windows.iter().enumerate() {
            let Some((m1, m2)) = *win else { continue };
            let products = if src == 0 { vec![vec![vec![0i64]; d]] } else { region_products(d, radius, class) };
            for prod in &products {
                let plan = sweep::plan(d, j, &coords, |a, c| prod[a].iter().flat_map(|&l| shifts(c, l)).collect());
                let ins: Vec<Option<&[f64]>> = plan.keys[d]
                    .iter()
                    .map(|c| {
                        let idx: Vec<u32> = c[..d].iter().map(|&v| v as u32).collect();
                        input.cache.get(&BoxKey::new(j, &idx)).map(|v| v.as_slice())
                    })
                    .collect();
                for m in m1..=m2 {
                    let cut = BLOCK_CUT * sc.peak[m];
                    let block = |_a: usize, s: i64| {
                        let b = sc.blocks.get(&(m, s))?;
                        (tensor::norm_sq(b).sqrt() > cut).then_some(b.as_slice())
                    };
                    let w = sign * self.expansion.weights[m];
                    for (i, v) in plan.run(d, p, |i| ins[i], block).into_iter().enumerate() {
                        if let Some(v) = v {
                            tensor::axpy(w, &v, &mut res[i]);
                        }
                    }
                }
            }
        }
    }
}

impl ScaleOperator for SepNsForm {
    fn apply_level(&self, outs: &[BoxKey], leaf: &[bool], input: &Inputs) -> Option<Vec<Vec<f64>>> {
        let Some(first) = outs.first() else { return Some(Vec::new()) };
        let j = first.level as usize;
        let n = self.p.pow(self.d as u32);
        let mut res = vec![vec![0.0; n]; outs.len()];
        if j == 0 {
            self.sweep_part(outs, input, 0, 1.0, |_, l| vec![l], &mut res);
        } else {
            self.sweep_part(outs, input, j, 1.0, |c, l| vec![2 * l + (c & 1), 2 * l + (c & 1) - 1], &mut res);
        }
        if j < self.n as usize {
            let (inner, pos): (Vec<BoxKey>, Vec<usize>) =
                outs.iter().zip(leaf).enumerate().filter(|(_, (_, l))| !**l).map(|(i, (k, _))| (*k, i)).unzip();
            let mut sub = vec![vec![0.0; n]; inner.len()];
            self.sweep_part(&inner, input, j + 1, -1.0, |_, l| vec![l], &mut sub);
            for (i, v) in pos.into_iter().zip(sub) {
                tensor::axpy(1.0, &v, &mut res[i]);
            }
        }
        Some(res)
    }

    fn dim(&self) -> usize {
        self.d
    }
    fn order(&self) -> usize {
        self.p
    }
    fn periodic(&self) -> bool {
        false
    }
    fn max_scale(&self) -> u8 {
        self.n
    }
    fn reach(&self, j: u8) -> i64 {
        let j = j as usize;
        let fine = if j == 0 { 0 } else { 2 * self.scales[j].radius + 1 };
        let coarse = if j < self.n as usize { self.scales[j + 1].radius } else { 0 };
        fine.max(coarse).max(0)
    }
    fn apply_box(&self, key: BoxKey, leaf: bool, input: &Inputs, out: &mut [f64]) {
        let j = key.level as usize;
        let par_of = |a: usize| (key.idx[a] & 1) as i64;
        if j == 0 {
            self.apply_part(key, input, 0, 0, 1.0, |_, l| vec![l], out);
        } else {
            self.apply_part(key, input, j, j, 1.0, |a, l| vec![2 * l + par_of(a), 2 * l + par_of(a) - 1], out);
        }
        if !leaf && j < self.n as usize {
            self.apply_part(key, input, j + 1, j, -1.0, |_, l| vec![l], out);
        }
    }
}

/// Apply the separated form to `f` with relative accuracy `op.eps`.
pub fn apply_sep(op: &SepNsForm, f: &FunTree) -> Result<FunTree> {
    apply_scale_operator(op, f, op.eps.max(0.0))
}
