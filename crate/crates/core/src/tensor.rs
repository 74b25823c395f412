//! Dense row-major tensor contractions used by the block transforms and the
//! separated operator application.

/// Contract `data` (row-major, `shape`) with the `rows x shape[axis]` matrix
/// `mat` along `axis`, writing into `out` whose shape has `shape[axis]`
/// replaced by `rows`. `out` is overwritten unless `accumulate` is set.
pub fn contract_axis_into(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    mat: &[f64],
    rows: usize,
    out: &mut [f64],
    accumulate: bool,
) {
    let n = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    debug_assert_eq!(data.len(), outer * n * inner);
    debug_assert_eq!(mat.len(), rows * n);
    debug_assert_eq!(out.len(), outer * rows * inner);
    let beta = if accumulate { 1.0 } else { 0.0 };
    if inner == 1 {
        // C (outer x rows) = A (outer x n) * M^T
        unsafe {
            matrixmultiply::dgemm(
                outer,
                n,
                rows,
                1.0,
                data.as_ptr(),
                n as isize,
                1,
                mat.as_ptr(),
                1,
                n as isize,
                beta,
                out.as_mut_ptr(),
                rows as isize,
                1,
            );
        }
        return;
    }
    for o in 0..outer {
        let a = &data[o * n * inner..(o + 1) * n * inner];
        let c = &mut out[o * rows * inner..(o + 1) * rows * inner];
        // C (rows x inner) = M (rows x n) * A (n x inner)
        unsafe {
            matrixmultiply::dgemm(
                rows,
                n,
                inner,
                1.0,
                mat.as_ptr(),
                n as isize,
                1,
                a.as_ptr(),
                inner as isize,
                1,
                beta,
                c.as_mut_ptr(),
                inner as isize,
                1,
            );
        }
    }
}

pub fn contract_axis(data: &[f64], shape: &[usize], axis: usize, mat: &[f64], rows: usize) -> Vec<f64> {
    let total: usize = shape.iter().product::<usize>() / shape[axis] * rows;
    let mut out = vec![0.0; total];
    contract_axis_into(data, shape, axis, mat, rows, &mut out, false);
    out
}

/// Apply the same `p x p` matrix along every axis of a `p^d` block.
pub fn apply_all_axes(block: &[f64], d: usize, p: usize, mat: &[f64]) -> Vec<f64> {
    let shape = vec![p; d];
    let mut cur = block.to_vec();
    for axis in 0..d {
        cur = contract_axis(&cur, &shape, axis, mat, p);
    }
    cur
}

/// Apply one `p x p` matrix per axis (`mats[axis]`).
pub fn apply_per_axis(block: &[f64], p: usize, mats: &[&[f64]]) -> Vec<f64> {
    let shape = vec![p; mats.len()];
    let mut cur = block.to_vec();
    for (axis, m) in mats.iter().enumerate() {
        cur = contract_axis(&cur, &shape, axis, m, p);
    }
    cur
}

/// Apply one `rows x p` matrix per axis, mapping a `p^d` block to `rows^d`.
pub fn apply_per_axis_rect(block: &[f64], p: usize, rows: usize, mats: &[&[f64]]) -> Vec<f64> {
    let mut shape = vec![p; mats.len()];
    let mut cur = block.to_vec();
    for (axis, m) in mats.iter().enumerate() {
        cur = contract_axis(&cur, &shape, axis, m, rows);
        shape[axis] = rows;
    }
    cur
}

pub fn transpose(mat: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = mat[r * cols + c];
        }
    }
    t
}

/// `a (m x k) * b (k x n)`
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
