//! Adaptive Gauss-Legendre integration of vector-valued integrands.

use std::sync::OnceLock;

use crate::basis::QuadratureRule;
use crate::error::{MrokError, Result};

const BASE: usize = 32;
const MAX_DEPTH: u32 = 60;
const MAX_PANELS: usize = 20_000;

fn base_rule() -> &'static QuadratureRule {
    static R: OnceLock<QuadratureRule> = OnceLock::new();
    R.get_or_init(|| QuadratureRule::unit_interval(BASE))
}

/// Writes the panel integral into `out` and returns the largest `int |f_i|`.
fn panel<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, buf: &mut [f64], out: &mut [f64]) -> f64 {
    let r = base_rule();
    let h = b - a;
    out.iter_mut().for_each(|v| *v = 0.0);
    let mut mass = vec![0.0f64; out.len()];
    for (&x, &w) in r.nodes.iter().zip(&r.weights) {
        f(a + h * x, buf);
        for ((o, m), v) in out.iter_mut().zip(mass.iter_mut()).zip(buf.iter()) {
            *o += h * w * v;
            *m += h * w * v.abs();
        }
    }
    mass.into_iter().fold(0.0, f64::max)
}

/// Integrate the `n` components written by `f(x, out)` over each consecutive
/// pair of `breaks`. A panel is accepted once the whole-panel and half-panel
/// estimates agree to `rel * max|I| + abs`, or to rounding level.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    n: usize,
    breaks: &[f64],
    rel: f64,
    abs: f64,
) -> Result<Vec<f64>> {
    let mut buf = vec![0.0; n];
    let mut total = vec![0.0; n];
    let mut todo: Vec<(f64, f64, Vec<f64>, u32)> = Vec::new();
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let mut est = vec![0.0; n];
        panel(&mut f, w[0], w[1], &mut buf, &mut est);
        for (t, e) in total.iter_mut().zip(&est) {
            *t += e;
        }
        todo.push((w[0], w[1], est, 0));
    }
    let mut scale = total.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let mut result = vec![0.0; n];
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    let mut panels = 0usize;
    while let Some((a, b, est, depth)) = todo.pop() {
        let m = 0.5 * (a + b);
        let ml = panel(&mut f, a, m, &mut buf, &mut left);
        let mr = panel(&mut f, m, b, &mut buf, &mut right);
        panels += 1;
        let mut err = 0.0f64;
        for i in 0..n {
            err = err.max((left[i] + right[i] - est[i]).abs());
            scale = scale.max((left[i] + right[i]).abs());
        }
        let floor = 64.0 * f64::EPSILON * (ml + mr);
        if err <= rel * scale + abs || err <= floor || m <= a || m >= b {
            for i in 0..n {
                result[i] += left[i] + right[i];
            }
        } else if depth >= MAX_DEPTH || panels > MAX_PANELS {
            return Err(MrokError::QuadratureFailure(format!(
                "no convergence on [{a:e}, {b:e}], error {err:e}"
            )));
        } else {
            todo.push((a, m, left.clone(), depth + 1));
            todo.push((m, b, right.clone(), depth + 1));
        }
    }
    Ok(result)
}

/// Scalar convenience wrapper.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], rel: f64, abs: f64) -> Result<f64> {
    integrate_vec(|x, o| o[0] = f(x), 1, breaks, rel, abs).map(|v| v[0])
}
