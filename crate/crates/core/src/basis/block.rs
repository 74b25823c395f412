use super::Basis;
use crate::error::{MrokError, Result};
use crate::key::BoxKey;

/// Scaling coefficients of one dyadic box, row-major with axis 0 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffBlock {
    pub d: usize,
    pub p: usize,
    pub key: BoxKey,
    pub coeffs: Vec<f64>,
}

impl CoeffBlock {
    pub fn new(d: usize, p: usize, key: BoxKey, coeffs: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(MrokError::UnsupportedDimension(d));
        }
        if coeffs.len() != p.pow(d as u32) {
            return Err(MrokError::Mismatch(format!(
                "block holds {} coefficients, expected {}",
                coeffs.len(),
                p.pow(d as u32)
            )));
        }
        let n = 1u64 << key.level;
        if key.idx[..d].iter().any(|&i| i as u64 >= n) {
            return Err(MrokError::InvalidArgument(format!("index out of range at scale {}", key.level)));
        }
        Ok(CoeffBlock { d, p, key, coeffs })
    }

    /// 1D block from samples at the scaled quadrature nodes `2^-j (x_i + l)`.
    pub fn from_samples(values: &[f64], j: u8, l: u32) -> Result<Self> {
        let p = values.len();
        let b = Basis::get(p)?;
        let coeffs = b.values_to_coeffs(values, 1, j);
        CoeffBlock::new(1, p, BoxKey::new(j, &[l]), coeffs)
    }

    /// Value of the local expansion at `x`, which must lie in the closed box.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(MrokError::Mismatch(format!("point has {} coordinates, block is {}D", x.len(), self.d)));
        }
        let (corner, h) = self.key.corner(self.d);
        let mut t = vec![0.0; self.d];
        for a in 0..self.d {
            let ta = (x[a] - corner[a]) / h;
            if !(-1e-12..=1.0 + 1e-12).contains(&ta) {
                return Err(MrokError::PointOutsideBox(x.to_vec()));
            }
            t[a] = ta.clamp(0.0, 1.0);
        }
        Ok(Basis::get(self.p)?.eval_local(&self.coeffs, self.key.level, &t))
    }
}

/// Free-function form of [`CoeffBlock::from_samples`].
pub fn samples_to_block(values: &[f64], j: u8, l: u32) -> Result<CoeffBlock> {
    CoeffBlock::from_samples(values, j, l)
}

pub fn block_eval(block: &CoeffBlock, x: &[f64]) -> Result<f64> {
    block.eval(x)
}
