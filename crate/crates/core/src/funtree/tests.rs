use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn opts(d: usize, eps: f64) -> DecomposeOptions {
    DecomposeOptions::new(d, eps)
}

fn fig1(x: &[f64]) -> f64 {
    (16.0 * PI * x[0].powi(6)).sin()
}

fn periodic_gaussian(a: f64, x: f64) -> f64 {
    (-3..=3).map(|k| (-a * (x + k as f64 - 0.5).powi(2)).exp()).sum()
}

#[test]
fn polynomial_is_single_leaf() {
    let t = decompose(|x| 1.0 + x[0] - 2.0 * x[0] * x[0] * x[1], 2, 4, opts(2, 1e-12)).unwrap();
    assert_eq!(t.n_leaves(), 1);
    assert!((t.eval(&[0.3, 0.7]).unwrap() - (1.3 - 2.0 * 0.09 * 0.7)).abs() < 1e-14);
}

#[test]
fn oscillatory_function_1d() {
    let t = decompose(fig1, 1, 8, opts(1, 1e-4)).unwrap();
    assert!(t.unresolved().is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let x: f64 = rng.gen();
        worst = worst.max((t.eval(&[x]).unwrap() - fig1(&[x])).abs());
    }
    assert!(worst < 1e-4);
    // finer near x = 1
    let left = t.leaves().filter(|(k, _)| k.idx[0] < 1 << (k.level - 1).min(31)).map(|(k, _)| k.level).max().unwrap();
    assert!(t.max_level() > left);
}

#[test]
fn periodized_gaussian_blocks() {
    let o = DecomposeOptions { check: CheckGrid::Nodes, ..opts(1, 1e-6) };
    let t = decompose(|x| periodic_gaussian(300.0, x[0]), 1, 8, o).unwrap();
    assert_eq!(t.n_leaves(), 12);
    assert_eq!(t.scales(), vec![2, 4, 5]);
}

#[test]
fn tie_rule_and_domain() {
    let t = decompose(|x| if x[0] <= 0.5 { 1.0 } else { 2.0 }, 1, 3, DecomposeOptions { j0: 1, jmax: 1, ..opts(1, 1e-10) }).unwrap();
    assert!((t.eval(&[0.5]).unwrap() - 1.0).abs() < 1e-14);
    assert!(matches!(t.eval(&[1.2]), Err(MrokError::PointOutsideBox(_))));
}

#[test]
fn tiling_in_3d() {
    let f = |x: &[f64]| (-40.0 * ((x[0] - 0.3).powi(2) + (x[1] - 0.6).powi(2) + (x[2] - 0.5).powi(2))).exp();
    let t = decompose(f, 3, 5, opts(3, 1e-5)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let x: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let hits = t
            .leaves()
            .filter(|(k, _)| {
                let (c, h) = k.corner(3);
                (0..3).all(|a| x[a] >= c[a] && x[a] < c[a] + h)
            })
            .count();
        assert_eq!(hits, 1);
        assert!((t.eval(&x).unwrap() - f(&x)).abs() < 1e-5);
    }
}

#[test]
fn flags_unresolved_leaves() {
    let t = decompose(|x| (x[0] - 0.3).abs().sqrt(), 1, 4, DecomposeOptions { jmax: 5, ..opts(1, 1e-12) }).unwrap();
    assert!(!t.unresolved().is_empty());
    assert!(t.max_level() <= 5);
}

#[test]
fn redundant_tree() {
    let t = decompose(fig1, 1, 6, opts(1, 1e-5)).unwrap();
    let r = t.make_redundant();
    let basis = Basis::get(6).unwrap();
    for (k, b) in r.nodes() {
        if r.is_leaf(k) {
            assert_eq!(t.get(k).unwrap(), b);
        } else {
            let kids: Vec<&[f64]> = k.children(1).map(|c| r.get(&c).unwrap().as_slice()).collect();
            let proj = basis.project_children(1, &kids);
            for (a, bb) in proj.iter().zip(b) {
                assert!((a - bb).abs() < 1e-13);
            }
        }
    }
    let root = tensor::norm_sq(r.get(&BoxKey::ROOT).unwrap()).sqrt();
    assert!(root <= t.norm2() + 1e-14);
    assert_eq!(r.to_tree().leaf_map(), t.leaf_map());

    // f(x) = x from two j=1 leaves projects exactly
    let t = decompose(|x| x[0], 1, 3, DecomposeOptions { j0: 1, jmax: 1, ..opts(1, 1e-12) }).unwrap();
    let r = t.make_redundant();
    let root = r.get(&BoxKey::ROOT).unwrap();
    assert!((root[0] - 0.5).abs() < 1e-15);
    assert!((root[1] - 0.5 / 3f64.sqrt()).abs() < 1e-15);
    assert!(root[2].abs() < 1e-15);
}

#[test]
fn inner_products() {
    let one = decompose(|_| 1.0, 2, 4, opts(2, 1e-10)).unwrap();
    assert!((one.inner(&one).unwrap() - 1.0).abs() < 1e-14);
    assert!((one.norm2() - 1.0).abs() < 1e-14);
    let f = |x: &[f64]| (3.0 * x[0]).sin() * (1.0 + x[0] * x[0]);
    let g = |x: &[f64]| (-20.0 * (x[0] - 0.4).powi(2)).exp();
    let tf = decompose(f, 1, 10, opts(1, 1e-13)).unwrap();
    let tg = decompose(g, 1, 10, opts(1, 1e-8)).unwrap();
    let exact = crate::quad::integrate(|x| tf.eval(&[x]).unwrap() * tg.eval(&[x]).unwrap(), &grid_breaks(&tf, &tg), 1e-15, 1e-18).unwrap();
    let v = tf.inner(&tg).unwrap();
    assert!((v - exact).abs() < 1e-10 * exact.abs());
    // disjoint supports
    let b1 = decompose(|x| if x[0] < 0.5 { x[0] } else { 0.0 }, 1, 4, DecomposeOptions { j0: 1, jmax: 3, ..opts(1, 1e-12) }).unwrap();
    let b2 = decompose(|x| if x[0] > 0.5 { 1.0 - x[0] } else { 0.0 }, 1, 4, DecomposeOptions { j0: 2, jmax: 3, ..opts(1, 1e-12) }).unwrap();
    assert!(b1.inner(&b2).unwrap().abs() < 1e-13);
    let three = decompose(|_| 1.0, 3, 4, opts(3, 1e-10)).unwrap();
    assert!(matches!(one.inner(&three), Err(MrokError::Mismatch(_))));
}

fn grid_breaks(a: &FunTree, b: &FunTree) -> Vec<f64> {
    let mut v: Vec<f64> = a.leaves().chain(b.leaves()).map(|(k, _)| k.corner(1).0[0]).collect();
    v.push(1.0);
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v.dedup();
    v
}

#[test]
fn axpy_and_bilinearity() {
    let f = decompose(fig1, 1, 6, opts(1, 1e-5)).unwrap();
    let g = decompose(|x| (-50.0 * (x[0] - 0.2).powi(2)).exp(), 1, 6, opts(1, 1e-7)).unwrap();
    let z = FunTree::axpy(-1.0, &f, &f).unwrap();
    assert!(z.leaves().all(|(_, b)| b.iter().all(|v| v.abs() < 1e-13)));
    let s = FunTree::axpy(1.0, &f, &g).unwrap();
    let lhs = s.norm2().powi(2);
    let rhs = f.norm2().powi(2) + 2.0 * f.inner(&g).unwrap() + g.norm2().powi(2);
    assert!((lhs - rhs).abs() < 1e-12);
}

#[test]
fn pruning() {
    let p = 4;
    let poly = |x: &[f64]| 1.0 - x[0] + x[0].powi(3);
    let t = decompose(poly, 1, p, DecomposeOptions { j0: 3, jmax: 3, ..opts(1, 1e-12) }).unwrap();
    assert_eq!(t.n_leaves(), 8);
    assert_eq!(prune(&t, 0.0), t);
    let q = prune(&t, 1e-12);
    assert_eq!(q.n_leaves(), 1);

    let f = decompose(fig1, 1, 6, opts(1, 1e-7)).unwrap();
    for eps in [1e-6, 1e-4, 1e-2] {
        let g = prune(&f, eps);
        assert!(g.n_leaves() <= f.n_leaves());
        let diff = FunTree::axpy(-1.0, &g, &f).unwrap().norm2();
        assert!(diff <= eps * (1.0 + 1e-9), "eps={eps} diff={diff}");
    }
    assert!(prune(&f, 1e-2).n_leaves() < f.n_leaves());
}

#[test]
fn assemble_partials() {
    let p = 5;
    let basis = Basis::get(p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rnd = |rng: &mut ChaCha8Rng| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let mut parts = BTreeMap::new();
    parts.insert(BoxKey::ROOT, rnd(&mut rng));
    let t = assemble(parts.clone(), 1, p, 0.0, 10).unwrap();
    assert_eq!(t.n_leaves(), 1);
    assert_eq!(t.get(&BoxKey::ROOT).unwrap(), &parts[&BoxKey::ROOT]);

    let k1 = BoxKey::new(1, &[1]);
    parts.insert(k1, rnd(&mut rng));
    let t = assemble(parts.clone(), 1, p, 0.0, 10).unwrap();
    assert_eq!(t.n_leaves(), 2);
    let up = basis.child_from_parent(1, &parts[&BoxKey::ROOT], 1);
    for ((a, b), c) in t.get(&k1).unwrap().iter().zip(&up).zip(&parts[&k1]) {
        assert!((a - (b + c)).abs() < 1e-15);
    }
    // re-assembling an assembled tree is idempotent
    let again = assemble(t.leaf_map().clone(), 1, p, 0.0, 10).unwrap();
    let diff = FunTree::axpy(-1.0, &again, &t).unwrap().norm2();
    assert!(diff < 1e-12);
}

#[test]
fn analytic_multiplication() {
    let f = decompose(fig1, 1, 8, opts(1, 1e-8)).unwrap();
    let g = multiply_analytic(&f, |_| 3.0, 1e-8).unwrap();
    assert_eq!(g.n_leaves(), f.n_leaves());
    for x in [0.1, 0.5, 0.93] {
        assert!((g.eval(&[x]).unwrap() - 3.0 * f.eval(&[x]).unwrap()).abs() < 1e-12);
    }
    // low-degree polynomials multiply exactly on the same leaves
    let a = decompose(|x| 1.0 + x[0], 1, 6, DecomposeOptions { j0: 2, jmax: 2, ..opts(1, 1e-12) }).unwrap();
    let b = multiply_analytic(&a, |x| x[0] * x[0] - 0.5, 1e-12).unwrap();
    assert_eq!(b.n_leaves(), a.n_leaves());
    assert!((b.eval(&[0.77]).unwrap() - 1.77 * (0.77f64.powi(2) - 0.5)).abs() < 1e-13);

    // e^{-r} times -1/r around an off-grid centre
    let c = [0.5, 0.5, 0.5];
    let r = move |x: &[f64]| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)).sqrt();
    let eps = 1e-3;
    let e = decompose(|x| (-r(x)).exp(), 3, 6, DecomposeOptions { j0: 1, jmax: 6, ..opts(3, eps) }).unwrap();
    let v = multiply_analytic(&e, |x| -1.0 / r(x), eps).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let x: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        if r(&x) < 0.15 {
            continue;
        }
        let exact = -(-r(&x)).exp() / r(&x);
        assert!((v.eval(&x).unwrap() - exact).abs() < 2.0 * eps, "x={x:?}");
    }
}

#[test]
fn serialization_roundtrip() {
    let t = decompose(|x| (x[0] * 5.0).cos() * x[1], 2, 4, opts(2, 1e-5)).unwrap();
    let mut buf = Vec::new();
    write_tree(&t, &mut buf).unwrap();
    let back = read_tree(buf.as_slice()).unwrap();
    assert_eq!(back.leaf_map(), t.leaf_map());
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("MROK-TREE v1 2 4 "));
}

#[test]
fn reader_rejects_overlap() {
    let text = "MROK-TREE v1 1 1 1e-3 5 3\n0 0 1.0\n1 0 1.0\n1 1 1.0\n";
    assert!(read_tree(text.as_bytes()).is_err());
    let text = "MROK-TREE v1 1 1 1e-3 5 1\n1 0 1.0\n";
    assert!(read_tree(text.as_bytes()).is_err());
    let text = "MROK-TREE v1 1 1 1e-3 5 2\n1 0 1.0\n1 1 2.0\n";
    assert_eq!(read_tree(text.as_bytes()).unwrap().n_leaves(), 2);
}
