//! Drivers for the numerical experiments: periodic cotangent convolution,
//! free-space Poisson solve, hydrogen ground state and kernel expansion.

use std::fmt;
use std::time::Instant;

use crate::crosscorr::cotangent_block;
use crate::error::{MrokError, Result};
use crate::funtree::{decompose, grid_points, multiply_analytic, CheckGrid, DecomposeOptions, FunTree};
use crate::gaussfit::{expand, GaussianExpansion};
use crate::nsform::{apply_1d, apply_sep, build_1d, build_sep, NsForm1D};
use crate::{par, Basis};

/// Summary of one run, printed as `key=value` lines.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub command: String,
    pub p: usize,
    pub eps: f64,
    pub d: usize,
    pub scales: Vec<u8>,
    pub e2: Option<f64>,
    pub einf: Option<f64>,
    /// Wall time of the operator application.
    pub seconds: f64,
    pub n_blocks: usize,
    /// `n_blocks p^d / seconds`.
    pub rate: f64,
    pub extra: Vec<(String, String)>,
    pub history: Vec<String>,
}

impl RunReport {
    fn new(command: &str, p: usize, eps: f64, d: usize) -> Self {
        RunReport { command: command.into(), p, eps, d, ..Default::default() }
    }

    fn timed(&mut self, out: &FunTree, seconds: f64) {
        self.seconds = seconds;
        self.n_blocks = out.n_leaves();
        self.scales = out.scales();
        self.rate = (self.n_blocks * self.p.pow(self.d as u32)) as f64 / seconds.max(1e-9);
    }

    fn note(&mut self, k: &str, v: impl fmt::Display) {
        self.extra.push((k.into(), v.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "command={}", self.command)?;
        writeln!(f, "p={}", self.p)?;
        writeln!(f, "eps={:e}", self.eps)?;
        writeln!(f, "d={}", self.d)?;
        let sc: Vec<String> = self.scales.iter().map(|s| s.to_string()).collect();
        writeln!(f, "scales={}", sc.join(","))?;
        if let Some(e) = self.e2 {
            writeln!(f, "e2={e:.3e}")?;
        }
        if let Some(e) = self.einf {
            writeln!(f, "einf={e:.3e}")?;
        }
        writeln!(f, "time_s={:.3}", self.seconds)?;
        writeln!(f, "n_blocks={}", self.n_blocks)?;
        writeln!(f, "rate_pts_per_s={:.3e}", self.rate)?;
        for (k, v) in &self.extra {
            writeln!(f, "{k}={v}")?;
        }
        for h in &self.history {
            writeln!(f, "# {h}")?;
        }
        Ok(())
    }
}

/// Discrete `L^2` and max errors at the leaf quadrature nodes.
pub fn node_errors<R: Fn(&[f64]) -> f64 + Sync>(tree: &FunTree, reference: R) -> Result<(f64, f64)> {
    let (d, p) = (tree.d, tree.p);
    let basis = Basis::get(p)?;
    let rule = &basis.rule;
    let leaves: Vec<_> = tree.leaves().collect();
    let parts = par::map(&leaves, |(k, c)| {
        let vals = basis.coeffs_to_values(c, d, k.level);
        let pts = grid_points(d, **k, &rule.nodes);
        let vol = (-(k.level as f64) * d as f64).exp2();
        let (mut s2, mut mx) = (0.0f64, 0.0f64);
        for (flat, (x, v)) in pts.iter().zip(&vals).enumerate() {
            let err = (v - reference(&x[..d])).abs();
            let mut w = vol;
            let mut f = flat;
            for _ in 0..d {
                w *= rule.weights[f % p];
                f /= p;
            }
            s2 += w * err * err;
            mx = mx.max(err);
        }
        (s2, mx)
    });
    let (s2, mx) = parts.iter().fold((0.0f64, 0.0f64), |(a, b), (s, m)| (a + s, b.max(*m)));
    Ok((s2.sqrt(), mx))
}

/// Width parameter of the periodized Gaussian in the cotangent example.
pub const COT_A: f64 = 300.0;

/// `f(x) = sum_k exp(-a (x + k - 1/2)^2)`.
pub fn periodic_gaussian(a: f64, x: f64) -> f64 {
    (-3..=3).map(|k| (-a * (x + k as f64 - 0.5).powi(2)).exp()).sum()
}

/// Cotangent convolution of [`periodic_gaussian`] from its Fourier series,
/// `2 sqrt(pi/a) sum_{n>=1} (-1)^n exp(-n^2 pi^2 / a) sin(2 pi n y)`.
pub fn cotangent_reference(a: f64, y: f64) -> f64 {
    use std::f64::consts::PI;
    let mut s = 0.0;
    for n in 1.. {
        let c = (-(n * n) as f64 * PI * PI / a).exp();
        if c < 1e-20 {
            break;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * c * (2.0 * PI * n as f64 * y).sin();
    }
    2.0 * (PI / a).sqrt() * s
}

pub fn run_cotangent(p: usize, eps: f64) -> Result<RunReport> {
    Ok(cotangent_parts(p, eps)?.0)
}

/// Cotangent run returning the report, the computed output and the operator.
pub fn cotangent_parts(p: usize, eps: f64) -> Result<(RunReport, FunTree, NsForm1D)> {
    let mut rep = RunReport::new("cotangent", p, eps, 1);
    let mut opts = DecomposeOptions::new(1, eps);
    opts.check = CheckGrid::Nodes;
    let f = decompose(|x| periodic_gaussian(COT_A, x[0]), 1, p, opts)?;
    let n = f.max_level();
    let t = Instant::now();
    let op = build_1d(|j, l| Ok(cotangent_block(j, l, p)?.data), p, n, 0.5 * eps / f.norm2(), true)?;
    rep.note("build_s", format!("{:.3}", t.elapsed().as_secs_f64()));
    let t = Instant::now();
    let g = apply_1d(&op, &f)?;
    rep.timed(&g, t.elapsed().as_secs_f64());
    let (e2, einf) = node_errors(&g, |x| cotangent_reference(COT_A, x[0]))?;
    rep.e2 = Some(e2);
    rep.einf = Some(einf);
    let widths: Vec<String> = (0..=n).map(|j| op.band_width(j).to_string()).collect();
    rep.note("input_scales", f.scales().iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    rep.note("band_widths", widths.join(","));
    Ok((rep, g, op))
}

/// Gaussian exponent and centers of the Poisson example.
pub const POISSON_ALPHA: f64 = 300.0;
pub const POISSON_CENTERS: [[f64; 3]; 3] = [[0.5, 0.5, 0.5], [0.6, 0.6, 0.5], [0.35, 0.6, 0.5]];

fn dist2(x: &[f64], c: &[f64; 3]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `rho = -sum (4 alpha^2 |r - r_i|^2 - 6 alpha) exp(-alpha |r - r_i|^2)`.
pub fn poisson_source(x: &[f64]) -> f64 {
    let a = POISSON_ALPHA;
    POISSON_CENTERS.iter().map(|c| {
        let r2 = dist2(x, c);
        -(4.0 * a * a * r2 - 6.0 * a) * (-a * r2).exp()
    }).sum()
}

/// `phi = sum exp(-alpha |r - r_i|^2)`, so that `-Laplace phi = rho`.
pub fn poisson_solution(x: &[f64]) -> f64 {
    POISSON_CENTERS.iter().map(|c| (-POISSON_ALPHA * dist2(x, c)).exp()).sum()
}

/// Smallest distance resolved by the kernel expansions.
const EXPANSION_DELTA: f64 = 1e-7;

fn kernel_eps(eps: f64) -> f64 {
    (0.1 * eps).clamp(1e-12, 1e-4)
}

pub fn run_poisson(p: usize, eps: f64) -> Result<RunReport> {
    Ok(poisson_parts(p, eps)?.0)
}

/// Poisson run returning the report and the computed potential.
pub fn poisson_parts(p: usize, eps: f64) -> Result<(RunReport, FunTree)> {
    let d = 3;
    let mut rep = RunReport::new("poisson", p, eps, d);
    let e = expand(0.0, 1.0, kernel_eps(eps), EXPANSION_DELTA, 3f64.sqrt())?;
    rep.note("terms", e.len());
    let rho = decompose(poisson_source, d, p, DecomposeOptions::new(d, eps))?;
    let n = rho.max_level();
    let t = Instant::now();
    let op = build_sep(&e, d, p, n, eps / rho.norm2())?;
    rep.note("build_s", format!("{:.3}", t.elapsed().as_secs_f64()));
    let t = Instant::now();
    let phi = apply_sep(&op, &rho)?;
    rep.timed(&phi, t.elapsed().as_secs_f64());
    let (e2, einf) = node_errors(&phi, poisson_solution)?;
    rep.e2 = Some(e2);
    rep.einf = Some(einf);
    rep.note("source_blocks", rho.n_leaves());
    let radii: Vec<String> = (1..=n).map(|j| op.radius(j).to_string()).collect();
    rep.note("radii", radii.join(","));
    Ok((rep, phi))
}

/// Expansion table plus `(r, relative error)` samples over its range.
pub fn run_expand(mu: f64, alpha: f64, eps: f64, delta: f64, r_max: f64) -> Result<(GaussianExpansion, Vec<(f64, f64)>, RunReport)> {
    let mut rep = RunReport::new("expand", 0, eps, 3);
    let t = Instant::now();
    let e = expand(mu, alpha, eps, delta, r_max)?;
    rep.seconds = t.elapsed().as_secs_f64();
    let curve: Vec<(f64, f64)> = crate::gaussfit::log_grid(delta, r_max, 2000)
        .map(|r| {
            let want = crate::gaussfit::reference_kernel(mu, alpha, r)?;
            Ok((r, (e.eval(r) - want).abs() / want.abs()))
        })
        .collect::<Result<_>>()?;
    let worst = curve.iter().fold(0.0f64, |m, (_, v)| m.max(*v));
    rep.einf = Some(worst);
    rep.note("terms", e.len());
    rep.note("mu", mu);
    rep.note("alpha", alpha);
    rep.note("delta", format!("{delta:e}"));
    rep.note("r_max", r_max);
    Ok((e, curve, rep))
}

/// Settings of the hydrogen ground-state iteration (atomic units).
#[derive(Clone, Copy, Debug)]
pub struct HydrogenOptions {
    pub p: usize,
    pub eps: f64,
    pub mu0: f64,
    /// Edge of the cube centred on the nucleus.
    pub box_len: f64,
    pub jmax: u8,
    pub max_iter: usize,
}

impl HydrogenOptions {
    pub fn new(p: usize, eps: f64) -> Self {
        HydrogenOptions { p, eps, mu0: 1.2, box_len: 40.0, jmax: 9, max_iter: 50 }
    }
}

/// Fixed-point iteration `phi <- -2 G_mu V phi` with `mu = sqrt(-2 E)`.
/// The energy comes from inner products only: since
/// `(-Laplace + mu^2) phi_new = -2 V phi`, the kinetic term equals
/// `-<V phi, phi_new> - mu^2/2 ||phi_new||^2`.
pub fn run_hydrogen(o: HydrogenOptions) -> Result<RunReport> {
    run_hydrogen_with(o, |_| {})
}

/// As [`run_hydrogen`], calling `on_iter` with each history line.
pub fn run_hydrogen_with(o: HydrogenOptions, mut on_iter: impl FnMut(&str)) -> Result<RunReport> {
    let d = 3;
    let l = o.box_len;
    let mut rep = RunReport::new("hydrogen", o.p, o.eps, d);
    let tol = 10.0 * o.eps;
    let r_of = |x: &[f64]| l * x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum::<f64>().sqrt();
    let pot = |x: &[f64]| -1.0 / r_of(x);
    let mut opts = DecomposeOptions::new(d, o.eps);
    opts.jmax = o.jmax;
    // unit norm in box coordinates, so that tolerances are relative
    let c0 = l.powf(1.5) * std::f64::consts::PI.powf(-0.75);
    let phi0 = decompose(|x| c0 * (-0.5 * r_of(x).powi(2)).exp(), d, o.p, opts)?;
    let mut phi = phi0.scaled(1.0 / phi0.norm2());
    let mut mu = o.mu0;
    let mut apply_time = 0.0;
    for it in 1..=o.max_iter {
        let vphi = multiply_analytic(&phi, pot, o.eps)?;
        let e = expand(mu * l, 1.0, kernel_eps(o.eps), EXPANSION_DELTA, 3f64.sqrt())?;
        let op = build_sep(&e, d, o.p, vphi.max_level(), o.eps / (2.0 * l * l * vphi.norm2()))?;
        let t = Instant::now();
        let g = apply_sep(&op, &vphi)?;
        apply_time += t.elapsed().as_secs_f64();
        let new = g.scaled(-2.0 * l * l);
        let vnew = multiply_analytic(&new, pot, o.eps)?;
        let nn = new.inner(&new)?;
        let energy = (-vphi.inner(&new)? - 0.5 * mu * mu * nn + vnew.inner(&new)?) / nn;
        if !(energy < 0.0) {
            return Err(MrokError::NoConvergence(it));
        }
        let mu_new = (-2.0 * energy).sqrt();
        let norm = new.norm2();
        rep.history.push(format!("iter={it} E={energy:.10} mu={mu_new:.10} norm={norm:.10} blocks={}", new.n_leaves()));
        on_iter(rep.history.last().unwrap());
        let done = (mu_new - mu).abs() < tol && (norm - 1.0).abs() < tol;
        mu = mu_new;
        phi = new.scaled(1.0 / norm);
        if done {
            rep.note("iterations", it);
            rep.note("energy", format!("{energy:.12}"));
            rep.note("mu", format!("{mu:.12}"));
            rep.note("norm", format!("{norm:.12}"));
            rep.e2 = Some((energy + 0.5).abs());
            rep.timed(&phi, apply_time);
            return Ok(rep);
        }
    }
    Err(MrokError::NoConvergence(o.max_iter))
}
