use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::kron;
use super::*;
use crate::basis::Basis;
use crate::crosscorr::{cotangent_block, gaussian_blocks};
use crate::funtree::FunTree;
use crate::gaussfit::GaussianExpansion;
use crate::key::BoxKey;
use crate::tensor;

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Random adaptive tree: each box splits with probability `q` up to `depth`.
fn random_tree(rng: &mut ChaCha8Rng, d: usize, p: usize, depth: u8, q: f64) -> FunTree {
    let mut leaves = BTreeMap::new();
    let mut stack = vec![BoxKey::ROOT];
    while let Some(k) = stack.pop() {
        if k.level < depth && (k.level == 0 || rng.gen_bool(q)) {
            stack.extend(k.children(d));
        } else {
            leaves.insert(k, rand_vec(rng, p.pow(d as u32)));
        }
    }
    FunTree::from_leaves(d, p, 0.0, depth, leaves).unwrap()
}

fn single(tau: f64) -> GaussianExpansion {
    GaussianExpansion { mu: 0.0, alpha: 0.0, eps: 0.0, delta: 0.0, r_max: 2.0, weights: vec![1.0], taus: vec![tau] }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn upsample_of_zero_is_zero() {
    let u = upsample_block(&[0.0; 16], 4).unwrap();
    assert!(u.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn upsample_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in [3, 8, 17] {
        let t = rand_vec(&mut rng, p * p);
        let back = downsample_block(&upsample_block(&t, p).unwrap(), p).unwrap();
        assert!(dist(&t, &back) < 1e-13, "p={p}");
    }
}

/// Matrix of `v -> (children of v)` from scale `j-1` to `j` in 1D.
fn embedding(p: usize, j: u8) -> Vec<f64> {
    let b = Basis::get(p).unwrap();
    let (nc, nf) = ((1usize << (j - 1)) * p, (1usize << j) * p);
    let mut e = vec![0.0; nf * nc];
    for col in 0..nc {
        let (bx, i) = (col / p, col % p);
        let mut unit = vec![0.0; p];
        unit[i] = 1.0;
        for c in 0..2 {
            let ch = b.child_from_parent(1, &unit, c);
            for (r, v) in ch.iter().enumerate() {
                e[((2 * bx + c) * p + r) * nc + col] = *v;
            }
        }
    }
    e
}

fn dense_from_blocks(p: usize, j: u8, blk: impl Fn(i64) -> Vec<f64>) -> Vec<f64> {
    let nb = 1usize << j;
    let n = nb * p;
    let mut m = vec![0.0; n * n];
    for lo in 0..nb {
        for li in 0..nb {
            let t = blk(lo as i64 - li as i64);
            for r in 0..p {
                for c in 0..p {
                    m[(lo * p + r) * n + li * p + c] = t[r * p + c];
                }
            }
        }
    }
    m
}

#[test]
fn upsampled_blocks_match_dense_filters() {
    let (p, j) = (3, 2u8);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let coarse: BTreeMap<i64, Vec<f64>> = (-1..=1).map(|s| (s, rand_vec(&mut rng, p * p))).collect();
    let tc = dense_from_blocks(p, j - 1, |s| coarse[&s].clone());
    let e = embedding(p, j);
    let (nc, nf) = (2 * p, 4 * p);
    let et = tensor::transpose(&e, nf, nc);
    let want = tensor::matmul(&tensor::matmul(&e, &tc, nf, nc, nc), &et, nf, nc, nf);
    let mut got = vec![0.0; nf * nf];
    for lo in 0..4usize {
        for li in 0..4usize {
            let up = upsample_block(&coarse[&((lo / 2) as i64 - (li / 2) as i64)], p).unwrap();
            let u = &up[2 * (lo % 2) + li % 2];
            for r in 0..p {
                for c in 0..p {
                    got[(lo * p + r) * nf + li * p + c] = u[r * p + c];
                }
            }
        }
    }
    assert!(dist(&got, &want) < 1e-13);
}

fn gauss1(tau: f64, p: usize) -> impl Fn(u8, i64) -> crate::Result<Vec<f64>> {
    move |j, l| Ok(gaussian_blocks(j, tau, &[l], p)?.pop().unwrap().data)
}

#[test]
fn zero_eps_keeps_every_block() {
    let op = build_1d(gauss1(20.0, 4), 4, 4, 0.0, false).unwrap();
    for j in 1..=4u8 {
        let n = 1i64 << j;
        assert_eq!(op.radius[j as usize], (1 << (j - 1)) - 1);
        for a in 0..2 {
            let w = op.whole_shifts(j, a);
            // every in-domain shift from a box of parity a
            assert!(w.contains(&(a as i64 - n + 1)) || a == 0);
            assert!(w.contains(&(a as i64)));
            assert!(w.len() as i64 >= n);
        }
    }
}

#[test]
fn parity_rule_of_whole_band() {
    let op = build_1d(gauss1(500.0, 6), 6, 5, 1e-8, false).unwrap();
    for j in 1..=5u8 {
        let b = op.band_width(j);
        if b <= 0 {
            continue;
        }
        let even: Vec<i64> = (-b..=b - 1).collect();
        let odd: Vec<i64> = (-b + 1..=b).collect();
        assert_eq!(op.whole_shifts(j, 0), &even[..]);
        assert_eq!(op.whole_shifts(j, 1), &odd[..]);
        if j < 5 {
            let inner = op.radius[j as usize + 1];
            for a in 0..2 {
                let want: Vec<(i64, f64)> = op
                    .whole_shifts(j, a)
                    .iter()
                    .map(|&s| (s, 1.0 - if s.abs() <= inner { 1.0 } else { 0.0 }))
                    .chain((-inner..=inner).filter(|s| !op.whole_shifts(j, a).contains(s)).map(|s| (s, -1.0)))
                    .filter(|(_, c)| *c != 0.0)
                    .collect::<BTreeMap<_, _>>()
                    .into_iter()
                    .collect();
                assert_eq!(op.outer_shifts(j, a), &want[..]);
            }
        }
    }
}

fn cot(p: usize) -> impl Fn(u8, i64) -> crate::Result<Vec<f64>> {
    move |j, l| Ok(cotangent_block(j, l, p)?.data)
}

#[test]
fn cotangent_outer_bands_empty_on_coarse_scales() {
    let op = build_1d(cot(14), 14, 5, 1e-12, true).unwrap();
    for j in 0..2u8 {
        assert!(op.outer_shifts(j, 0).is_empty() && op.outer_shifts(j, 1).is_empty(), "j={j}");
    }
}

#[test]
fn band_widens_as_order_drops() {
    let widths: Vec<i64> = [14usize, 11, 8, 5]
        .iter()
        .map(|&p| {
            let op = build_1d(cot(p), p, 8, 1e-6, true).unwrap();
            op.band_width(8)
        })
        .collect();
    assert!(widths.windows(2).all(|w| w[0] <= w[1]), "{widths:?}");
}

/// `||apply(f) - P_out T_n f_n||` with the dense result projected onto the
/// output leaves.
fn oracle_gap(out: &FunTree, f: &FunTree, blocks: impl Fn(&[i64]) -> crate::Result<Vec<f64>>, periodic: bool) -> f64 {
    let (d, p) = (f.d, f.p);
    let n = f.max_level().max(out.max_level());
    let g = dense_apply_oracle(blocks, d, p, n, periodic, &uniform_coeffs(f, n)).unwrap();
    let mut e2 = 0.0;
    for (k, v) in out.leaves() {
        let want = project_grid(&g, d, p, n, *k).unwrap();
        e2 += dist(v, &want).powi(2);
    }
    e2.sqrt()
}

#[test]
fn zero_input_gives_zero_output() {
    let op = build_1d(gauss1(50.0, 5), 5, 3, 1e-8, false).unwrap();
    let f = FunTree::zero(1, 5, 0.0, 3).unwrap();
    let g = apply_1d(&op, &f).unwrap();
    assert!(g.norm2() == 0.0);
}

#[test]
fn banded_application_telescopes_to_dense() {
    let (p, n, eps) = (6, 4u8, 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let op = build_1d(gauss1(300.0, p), p, n, eps, false).unwrap();
    // uniform tree at depth n
    let f = random_tree(&mut rng, 1, p, n, 1.0);
    let g = apply_1d(&op, &f).unwrap();
    let gap = oracle_gap(&g, &f, |s| gauss1(300.0, p)(n, s[0]), false);
    assert!(gap <= eps * f.norm2(), "gap {gap:e}");
}

#[test]
fn periodic_banded_matches_dense_on_adaptive_tree() {
    let (p, n, eps) = (6, 4u8, 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let op = build_1d(cot(p), p, n, eps, true).unwrap();
    for _ in 0..3 {
        let f = random_tree(&mut rng, 1, p, n, 0.6);
        let g = apply_1d(&op, &f).unwrap();
        let top = f.max_level();
        let gap = oracle_gap(&g, &f, |s| cot(p)(top, s[0]), true);
        assert!(gap <= 3.0 * eps * f.norm2(), "gap {gap:e}");
    }
}

#[test]
fn tree_deeper_than_operator_is_rejected() {
    let op = build_1d(gauss1(50.0, 4), 4, 2, 1e-6, false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_tree(&mut rng, 1, 4, 3, 1.0);
    assert!(matches!(apply_1d(&op, &f), Err(crate::MrokError::TreeTooDeep { .. })));
}

#[test]
fn single_gaussian_separated_matches_dense_tensor() {
    let (p, j, d) = (4, 3u8, 2);
    let e = single(40.0);
    let op = build_sep(&e, d, p, j, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = random_tree(&mut rng, d, p, j, 1.0);
    let g = apply_sep(&op, &f).unwrap();
    let gap = oracle_gap(&g, &f, dense_block_provider(&e, d, p, j), false);
    assert!(gap < 1e-10, "gap {gap:e}");
}

#[test]
fn one_dimensional_separated_matches_banded() {
    let p = 5;
    let e = GaussianExpansion { weights: vec![0.7, 1.3, 0.4], taus: vec![3.0, 80.0, 2000.0], ..single(1.0) };
    let sep = build_sep(&e, 1, p, 4, 0.0).unwrap();
    let band = build_1d(gaussian_provider(&e, p), p, 4, 0.0, false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let f = random_tree(&mut rng, 1, p, 4, 0.5);
        let a = apply_sep(&sep, &f).unwrap();
        let b = apply_1d(&band, &f).unwrap();
        let diff = FunTree::axpy(-1.0, &a, &b).unwrap().norm2();
        assert!(diff < 1e-12, "diff {diff:e}");
    }
}

#[test]
fn region_classes() {
    assert_eq!(classify_region(&[0, 0, 0]), RegionClass::Core);
    assert_eq!(classify_region(&[0, 1, 2]), RegionClass::Boundary(1));
    assert_eq!(classify_region(&[2, -2, 3]), RegionClass::Boundary(3));
    assert_eq!(classify_region(&[-1, 1]), RegionClass::Core);
}

/// Single-term tables whose column `k` holds axis `k`, so the shift
/// vector `(k - r)_k` reads one column per axis.
fn estimate_axes(f: &[Vec<f64>], g: &[Vec<f64>], p: usize) -> f64 {
    let d = f.len();
    let nrm = |x: &[f64]| super::block_norm(x, p);
    let dif = |k: usize| {
        let mut x = f[k].clone();
        tensor::axpy(-1.0, &g[k], &mut x);
        nrm(&x)
    };
    let r = d as i64 - 1;
    let pad = |v: Vec<f64>| v.into_iter().chain(std::iter::repeat(0.0).take(d - 1)).collect::<Vec<f64>>();
    let t = NormTables {
        j: 0,
        r,
        weights: vec![1.0],
        n_f: vec![pad((0..d).map(|k| nrm(&f[k])).collect())],
        n_up: vec![pad((0..d).map(|k| nrm(&g[k])).collect())],
        n_dif: vec![pad((0..d).map(dif).collect())],
    };
    let l: Vec<i64> = (0..d as i64).map(|k| k - r).collect();
    estimate_block_norm(&t, &l, 0)
}

fn spectral(m: &[f64], n: usize) -> f64 {
    nalgebra::DMatrix::from_row_slice(n, n, m).singular_values().max()
}

#[test]
fn estimate_vanishes_for_equal_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f: Vec<Vec<f64>> = (0..3).map(|_| rand_vec(&mut rng, 9)).collect();
    assert_eq!(estimate_axes(&f, &f, 3), 0.0);
}

#[test]
fn estimate_bounds_kronecker_difference() {
    let p = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for d in 2..=3 {
        for _ in 0..50 {
            let f: Vec<Vec<f64>> = (0..d).map(|_| rand_vec(&mut rng, 9)).collect();
            let g: Vec<Vec<f64>> = f.iter().map(|x| x.iter().map(|v| v + 0.3 * rng.gen_range(-1.0..1.0)).collect()).collect();
            let fr: Vec<&[f64]> = f.iter().map(|v| v.as_slice()).collect();
            let gr: Vec<&[f64]> = g.iter().map(|v| v.as_slice()).collect();
            let mut dk = kron(&fr, p);
            tensor::axpy(-1.0, &kron(&gr, p), &mut dk);
            let truth = spectral(&dk, p.pow(d as u32));
            assert!(estimate_axes(&f, &g, p) >= truth * (1.0 - 1e-12));
        }
    }
}

#[test]
fn operator_file_round_trip() {
    let e = GaussianExpansion { weights: vec![0.5, 2.0], taus: vec![10.0, 400.0], ..single(1.0) };
    let op = build_sep(&e, 2, 4, 3, 1e-6).unwrap();
    let mut buf = Vec::new();
    write_operator(&OperatorFile::Gauss(op.clone()), &mut buf).unwrap();
    let OperatorFile::Gauss(back) = read_operator(&buf[..]).unwrap() else { panic!("kind") };
    for j in 0..=3u8 {
        assert_eq!(op.scales[j as usize].windows, back.scales[j as usize].windows);
        assert_eq!(op.radius(j), back.radius(j));
        assert_eq!(op.scales[j as usize].blocks, back.scales[j as usize].blocks);
    }
    assert!(read_operator(&b"MROK-OP v2 1 4 3 1e-6 gauss\n"[..]).is_err());
}

#[test]
fn oracle_is_linear_and_symmetric() {
    let (p, d, j) = (3usize, 2usize, 2u8);
    let e = single(25.0);
    let n = (1usize << (j as usize * d)) * p.pow(d as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (f, g) = (rand_vec(&mut rng, n), rand_vec(&mut rng, n));
    let t = |x: &[f64]| dense_apply_oracle(dense_block_provider(&e, d, p, j), d, p, j, false, x).unwrap();
    let mix: Vec<f64> = f.iter().zip(&g).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
    let want: Vec<f64> = t(&f).iter().zip(t(&g)).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
    assert!(dist(&t(&mix), &want) < 1e-12);
    assert!((tensor::dot(&t(&f), &g) - tensor::dot(&f, &t(&g))).abs() < 1e-11);
    let big = vec![0.0; 1 << 20];
    assert!(matches!(
        dense_apply_oracle(dense_block_provider(&e, 3, 4, 4), 3, 4, 4, false, &big),
        Err(crate::MrokError::InstanceTooLarge(_))
    ));
}
