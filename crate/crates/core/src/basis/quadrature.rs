use crate::error::{MrokError, Result};

/// Largest supported basis order.
pub const MAX_ORDER: usize = 30;

/// Legendre polynomials `P_0..=P_n` at `t`.
pub fn legendre_all(n: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(t);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

pub fn legendre(n: usize, t: f64) -> f64 {
    legendre_all(n, t)[n]
}

/// Derivatives `P'_0..=P'_n` at `t`, via `P'_{k+1} = P'_{k-1} + (2k+1) P_k`.
/// Stable up to and including the endpoints.
pub fn legendre_deriv_all(n: usize, t: f64) -> Vec<f64> {
    let p = legendre_all(n, t);
    let mut d = vec![0.0; n + 1];
    if n >= 1 {
        d[1] = 1.0;
    }
    for k in 1..n {
        d[k + 1] = d[k - 1] + (2 * k + 1) as f64 * p[k];
    }
    d
}

/// Gauss-Legendre rule with `n` nodes on `[-1, 1]`, nodes increasing.
/// Any `n >= 1`; used internally for orders beyond the public cap.
pub(crate) fn gauss_legendre_sym(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let half = n.div_ceil(2);
    for i in 0..half {
        // Chebyshev-like initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (pn, pn1) = pn_and_prev(n, x);
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (pn, pn1) = pn_and_prev(n, x);
                dp = nf * (x * pn - pn1) / (x * x - 1.0);
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn pn_and_prev(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss-Legendre rule on `[0, 1]`: the roots of `P_p(2x-1)` with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 || p > MAX_ORDER {
            return Err(MrokError::OrderOutOfRange(p));
        }
        Ok(Self::unit_interval(p))
    }

    /// Same as [`QuadratureRule::new`] without the order cap.
    pub fn unit_interval(n: usize) -> Self {
        let (x, w) = gauss_legendre_sym(n);
        QuadratureRule {
            nodes: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|w| 0.5 * w).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(a + h * x))
            .sum::<f64>()
            * h
    }
}
