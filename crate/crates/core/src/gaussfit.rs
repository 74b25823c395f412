//! Sum-of-Gaussians approximations of the radial kernels of
//! `(-Laplacian + mu^2)^(-alpha)` in three dimensions.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{MrokError, Result};
use crate::quad::integrate;

const CERT_POINTS: usize = 1000;
const MAX_ATTEMPTS: usize = 12;

/// `K(r) ~ sum_m w_m exp(-tau_m r^2)` on `[delta, r_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianExpansion {
    pub mu: f64,
    pub alpha: f64,
    pub eps: f64,
    pub delta: f64,
    pub r_max: f64,
    pub weights: Vec<f64>,
    pub taus: Vec<f64>,
}

pub fn c_alpha(alpha: f64) -> f64 {
    2.0 * (-2.0 * alpha).exp2() * PI.powf(-1.5) / gamma(alpha)
}

/// `K_{0,alpha}(r)`, the scale against which errors are measured.
pub fn homogeneous_kernel(alpha: f64, r: f64) -> f64 {
    gamma(1.5 - alpha) * c_alpha(alpha) / (2.0 * r.powf(3.0 - 2.0 * alpha))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.5) {
        return Err(MrokError::InvalidArgument(format!("alpha = {alpha} outside (0, 3/2)")));
    }
    Ok(())
}

/// Kernel of `(-Laplacian + mu^2)^(-alpha)` at distance `r > 0`.
pub fn reference_kernel(mu: f64, alpha: f64, r: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(r > 0.0) || !(mu >= 0.0) {
        return Err(MrokError::InvalidArgument(format!("need r > 0 and mu >= 0, got r = {r}, mu = {mu}")));
    }
    if mu == 0.0 {
        return Ok(homogeneous_kernel(alpha, r));
    }
    if alpha == 1.0 {
        return Ok((-mu * r).exp() / (4.0 * PI * r));
    }
    kernel_by_quadrature(mu, alpha, r)
}

/// Direct quadrature of the integral representation in `s`.
pub(crate) fn kernel_by_quadrature(mu: f64, alpha: f64, r: f64) -> Result<f64> {
    let g = 3.0 - 2.0 * alpha;
    let expo = |s: f64| -r * r * (2.0 * s).exp() - 0.25 * mu * mu * (-2.0 * s).exp() + g * s;
    let slope = |s: f64| -2.0 * r * r * (2.0 * s).exp() + 0.5 * mu * mu * (-2.0 * s).exp() + g;
    // the exponent is concave; bisect for its maximum
    let (mut lo, mut hi) = (-200.0, 200.0);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if slope(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let s0 = 0.5 * (lo + hi);
    let peak = expo(s0);
    let mut breaks = vec![s0];
    let mut s = s0;
    while expo(s) - peak > -50.0 {
        s -= 0.5;
        breaks.push(s);
    }
    s = s0;
    while expo(s) - peak > -50.0 {
        s += 0.5;
        breaks.push(s);
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let v = integrate(|s| (expo(s) - peak).exp(), &breaks, 1e-15, 0.0)?;
    Ok(c_alpha(alpha) * peak.exp() * v)
}

impl GaussianExpansion {
    /// Trapezoid discretization of the integral representation with nodes
    /// `s_m = a + m h`, `m = 0..=ceil((b-a)/h)`.
    pub fn trapezoid(mu: f64, alpha: f64, a: f64, b: f64, h: f64) -> Self {
        let c = c_alpha(alpha);
        let g = 3.0 - 2.0 * alpha;
        let n = ((b - a) / h).ceil() as usize;
        let mut weights = Vec::with_capacity(n + 1);
        let mut taus = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let s = a + m as f64 * h;
            taus.push((2.0 * s).exp());
            weights.push(h * c * (-0.25 * mu * mu * (-2.0 * s).exp() + g * s).exp());
        }
        GaussianExpansion { mu, alpha, eps: f64::NAN, delta: f64::NAN, r_max: f64::NAN, weights, taus }
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r2 = r * r;
        self.weights.iter().zip(&self.taus).map(|(w, t)| w * (-t * r2).exp()).sum()
    }

    /// Largest `|K - expansion| / K_{0,alpha}` over `n` log-spaced points.
    pub fn max_rel_error(&self, delta: f64, r_max: f64, n: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for r in log_grid(delta, r_max, n) {
            let k = reference_kernel(self.mu, self.alpha, r)?;
            worst = worst.max((k - self.eval(r)).abs() / homogeneous_kernel(self.alpha, r));
        }
        Ok(worst)
    }

    /// Drop the low-exponent terms whose total weight cannot matter anywhere
    /// on `[delta, r_max]`.
    fn prune_low(&mut self, budget: f64) {
        let mut acc = 0.0;
        let mut cut = 0;
        while cut < self.weights.len() && acc + self.weights[cut] <= budget {
            acc += self.weights[cut];
            cut += 1;
        }
        self.weights.drain(..cut);
        self.taus.drain(..cut);
    }
}

pub(crate) fn log_grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(move |k| (la + (lb - la) * k as f64 / (n - 1) as f64).exp())
}

/// Certified expansion of `K_{mu,alpha}` with relative accuracy `eps`
/// (measured against `K_{0,alpha}`) on `[delta, r_max]`.
pub fn expand(mu: f64, alpha: f64, eps: f64, delta: f64, r_max: f64) -> Result<GaussianExpansion> {
    check_alpha(alpha)?;
    if !(mu >= 0.0) || !(delta > 0.0 && delta < r_max) || !(1e-13..=1e-1).contains(&eps) {
        return Err(MrokError::InvalidArgument(format!(
            "expand needs mu >= 0, 0 < delta < R, 1e-13 <= eps <= 0.1; got mu={mu} delta={delta} R={r_max} eps={eps}"
        )));
    }
    let g = 3.0 - 2.0 * alpha;
    let ga = gamma(1.5 - alpha);
    let target = eps / 4.0;
    // lower end: the tail C e^{g s}/g must stay below target * K_0(R)
    let a = ((target * ga * g / 2.0).ln() - g * r_max.ln()) / g;
    // upper end: tail relative to K_0(delta) ~ e^{-U^2} U^{1-2 alpha} / Gamma
    let mut u2 = (1.0 / (target * ga)).ln().max(1.0);
    for _ in 0..20 {
        u2 = ((1.0 / (target * ga)).ln() + (1.0 - 2.0 * alpha) * 0.5 * u2.ln()).max(1.0);
    }
    let b = 0.5 * u2.ln() - delta.ln();
    let mut h = 1.0 / (0.2 * (1.0 / eps).ln() + 1.0);
    let (mut a, mut b) = (a, b);
    for attempt in 0..MAX_ATTEMPTS {
        let mut e = GaussianExpansion::trapezoid(mu, alpha, a, b, h);
        if mu > 0.0 {
            e.prune_low(eps / 8.0 * homogeneous_kernel(alpha, r_max));
        }
        let err = e.max_rel_error(delta, r_max, CERT_POINTS)?;
        if err <= eps {
            e.eps = eps;
            e.delta = delta;
            e.r_max = r_max;
            return Ok(e);
        }
        if attempt % 2 == 0 {
            a -= 5.0 * h;
            b += 5.0 * h;
        } else {
            h *= 0.5;
        }
    }
    Err(MrokError::CertificationFailure(format!(
        "no certified expansion for mu={mu} alpha={alpha} eps={eps} on [{delta}, {r_max}]"
    )))
}

/// Expansion for the same kernel in coordinates where the box edge `l`
/// becomes 1. Approximates `l^{3-2 alpha} K(l r')`, so the physical operator
/// picks up `l^{d - (3 - 2 alpha)}`.
pub fn scale_expansion(e: &GaussianExpansion, l: f64) -> Result<GaussianExpansion> {
    if !(l > 0.0) {
        return Err(MrokError::InvalidArgument(format!("box length {l} must be positive")));
    }
    if l == 1.0 {
        return Ok(e.clone());
    }
    if e.mu > 0.0 {
        return expand(e.mu * l, e.alpha, e.eps, e.delta / l, e.r_max / l);
    }
    let f = l.powf(3.0 - 2.0 * e.alpha);
    Ok(GaussianExpansion {
        weights: e.weights.iter().map(|w| w * f).collect(),
        taus: e.taus.iter().map(|t| t * l * l).collect(),
        delta: e.delta / l,
        r_max: e.r_max / l,
        ..e.clone()
    })
}
