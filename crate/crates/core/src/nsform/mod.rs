//! Non-standard form of convolution operators: banded one-dimensional forms,
//! separated multidimensional forms and their adaptive application.

mod apply;
mod io;
mod oned;
mod oracle;
mod sep;
mod sweep;
#[cfg(test)]
mod tests;

pub use io::{read_operator, write_operator, OperatorFile};
pub use oned::{apply_1d, build_1d, gaussian_provider, NsForm1D};
pub use oracle::{dense_apply_oracle, dense_block_provider, project_grid, uniform_coeffs};
pub use sep::{apply_sep, block_norm_tables, build_sep, estimate_block_norm, NormTables, SepNsForm};

use crate::basis::Basis;
use crate::error::Result;
use crate::tensor;

/// Sub-blocks `H^(a)T t H^(b)` of the upsampled block, indexed `2a + b`.
pub fn upsample_block(t: &[f64], p: usize) -> Result<[Vec<f64>; 4]> {
    let f = &Basis::get(p)?.filters;
    let mut out: [Vec<f64>; 4] = Default::default();
    for a in 0..2 {
        let left = tensor::matmul(f.h_t(a), t, p, p, p);
        for b in 0..2 {
            out[2 * a + b] = tensor::matmul(&left, f.h(b), p, p, p);
        }
    }
    Ok(out)
}

/// Inverse of [`upsample_block`]: `sum_ab H^(a) u_ab H^(b)T`.
pub fn downsample_block(u: &[Vec<f64>; 4], p: usize) -> Result<Vec<f64>> {
    let f = &Basis::get(p)?.filters;
    let mut out = vec![0.0; p * p];
    for a in 0..2 {
        for b in 0..2 {
            let left = tensor::matmul(f.h(a), &u[2 * a + b], p, p, p);
            let v = tensor::matmul(&left, f.h_t(b), p, p, p);
            tensor::axpy(1.0, &v, &mut out);
        }
    }
    Ok(out)
}

/// Operator norm used for retention decisions: Frobenius for `p <= 4`,
/// spectral otherwise. Both are upper bounds for the spectral norm.
pub(crate) fn block_norm(data: &[f64], p: usize) -> f64 {
    if p <= 4 {
        // scaled so that tiny far-field blocks do not underflow to zero
        let big = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if big == 0.0 {
            return 0.0;
        }
        return big * data.iter().map(|v| (v / big) * (v / big)).sum::<f64>().sqrt();
    }
    let m = nalgebra::DMatrix::from_row_slice(p, p, data);
    m.singular_values().max()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RegionClass {
    Core,
    /// Number of components outside `{-1, 0, 1}`.
    Boundary(usize),
}

impl RegionClass {
    pub fn index(self) -> usize {
        match self {
            RegionClass::Core => 0,
            RegionClass::Boundary(k) => k,
        }
    }
}

pub fn classify_region(l: &[i64]) -> RegionClass {
    match l.iter().filter(|v| v.abs() > 1).count() {
        0 => RegionClass::Core,
        k => RegionClass::Boundary(k),
    }
}
