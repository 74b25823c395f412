use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mrok_core::experiments::{self, HydrogenOptions};
use mrok_core::funtree::{decompose, read_tree, write_tree, DecomposeOptions, FunTree};
use mrok_core::nsform::{apply_1d, apply_sep, read_operator, write_operator, OperatorFile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "mrok", about = "Adaptive multiwavelet operators: experiments and batch commands")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Gaussian expansion of exp(-mu r) / r^(3 - 2 alpha); writes the (w, tau) table and an error curve.
    Expand {
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-10)]
        eps: f64,
        #[arg(long, default_value_t = 1e-15)]
        delta: f64,
        /// Upper end of the certified range.
        #[arg(long, default_value_t = 1.0)]
        range: f64,
        /// Table file; the error curve goes to FILE.curve.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Adaptive decomposition of a built-in function.
    Decompose {
        #[arg(value_enum)]
        function: Function,
        #[arg(long, default_value_t = 8)]
        p: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long)]
        jmax: Option<u8>,
        /// Seed of the fresh points used to measure the error.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a stored operator to a stored tree.
    Apply {
        operator: PathBuf,
        tree: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Periodic cotangent convolution of a periodized Gaussian (a = 300).
    Cotangent {
        #[arg(long, default_value_t = 8)]
        p: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Two-column plot data: y, computed Cf(y).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Free-space Poisson solve with a three-Gaussian source (alpha = 300).
    Poisson {
        #[arg(long, default_value_t = 8)]
        p: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Plot data along x at y = z = 0.5: x, computed phi.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hydrogen ground state by the bound-state Helmholtz iteration.
    Hydrogen {
        #[arg(long, default_value_t = 10)]
        p: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Initial mu.
        #[arg(long, default_value_t = 1.2)]
        mu: f64,
        /// Edge of the computational cube in atomic units.
        #[arg(long = "box", default_value_t = 40.0)]
        box_len: f64,
        #[arg(long, default_value_t = 9)]
        jmax: u8,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Function {
    /// Periodized Gaussian of the cotangent example, d = 1.
    PeriodicGaussian,
    /// sin(16 pi x^6), d = 1.
    Chirp,
    /// Source of the Poisson example, d = 3.
    PoissonSource,
}

impl Function {
    fn dim(self) -> usize {
        match self {
            Function::PoissonSource => 3,
            _ => 1,
        }
    }

    fn eval(self, x: &[f64]) -> f64 {
        match self {
            Function::PeriodicGaussian => experiments::periodic_gaussian(experiments::COT_A, x[0]),
            Function::Chirp => (16.0 * std::f64::consts::PI * x[0].powi(6)).sin(),
            Function::PoissonSource => experiments::poisson_source(x),
        }
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &PathBuf) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

/// Two-column samples of `tree` along axis 0 through the domain centre.
fn write_profile(tree: &FunTree, path: &PathBuf) -> Result<()> {
    let mut w = create(path)?;
    let n = 1000;
    for i in 0..n {
        let x = (i as f64 + 0.5) / n as f64;
        let pt = [x, 0.5, 0.5];
        writeln!(w, "{x:.10e} {:.16e}", tree.eval(&pt[..tree.d])?)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Expand { mu, alpha, eps, delta, range, out } => {
            let (e, curve, rep) = experiments::run_expand(mu, alpha, eps, delta, range)?;
            print!("{rep}");
            if let Some(path) = out {
                let mut w = create(&path)?;
                for (wt, t) in e.weights.iter().zip(&e.taus) {
                    writeln!(w, "{wt:.16e} {t:.16e}")?;
                }
                let mut c = create(&PathBuf::from(format!("{}.curve", path.display())))?;
                for (r, err) in curve {
                    writeln!(c, "{r:.10e} {err:.6e}")?;
                }
            }
        }
        Cmd::Decompose { function, p, eps, jmax, seed, out } => {
            let d = function.dim();
            let mut opts = DecomposeOptions::new(d, eps);
            if let Some(j) = jmax {
                opts.jmax = j;
            }
            let t = std::time::Instant::now();
            let tree = decompose(|x| function.eval(x), d, p, opts)?;
            let secs = t.elapsed().as_secs_f64();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..10_000 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
                worst = worst.max((tree.eval(&x)? - function.eval(&x)).abs());
            }
            let scales: Vec<String> = tree.scales().iter().map(|s| s.to_string()).collect();
            println!("command=decompose\np={p}\neps={eps:e}\nd={d}\nscales={}", scales.join(","));
            println!("n_blocks={}\nunresolved={}\ntime_s={secs:.3}", tree.n_leaves(), tree.unresolved().len());
            println!("seed={seed}\nfresh_points=10000\nfresh_max_error={worst:.3e}");
            if let Some(path) = out {
                write_tree(&tree, create(&path)?)?;
            }
        }
        Cmd::Apply { operator, tree, out } => {
            let op = read_operator(open(&operator)?)?;
            let f = read_tree(open(&tree)?)?;
            let t = std::time::Instant::now();
            let g = match &op {
                OperatorFile::Gauss(o) => apply_sep(o, &f)?,
                OperatorFile::Cotangent(o) => apply_1d(o, &f)?,
            };
            let secs = t.elapsed().as_secs_f64();
            let scales: Vec<String> = g.scales().iter().map(|s| s.to_string()).collect();
            let pts = g.n_leaves() * g.p.pow(g.d as u32);
            println!("command=apply\np={}\nd={}\nscales={}\nn_blocks={}", g.p, g.d, scales.join(","), g.n_leaves());
            println!("time_s={secs:.3}\nrate_pts_per_s={:.3e}\nnorm={:.10e}", pts as f64 / secs.max(1e-9), g.norm2());
            if let Some(path) = out {
                write_tree(&g, create(&path)?)?;
            }
        }
        Cmd::Cotangent { p, eps, out } => {
            let (rep, g, op) = experiments::cotangent_parts(p, eps)?;
            print!("{rep}");
            if let Some(path) = out {
                write_profile(&g, &path)?;
                write_operator(&OperatorFile::Cotangent(op), create(&PathBuf::from(format!("{}.op", path.display())))?)?;
            }
        }
        Cmd::Poisson { p, eps, out } => {
            let (rep, g) = experiments::poisson_parts(p, eps)?;
            print!("{rep}");
            if let Some(path) = out {
                write_profile(&g, &path)?;
            }
        }
        Cmd::Hydrogen { p, eps, mu, box_len, jmax } => {
            if !(mu > 0.0) {
                bail!("--mu must be positive");
            }
            let opts = HydrogenOptions { mu0: mu, box_len, jmax, ..HydrogenOptions::new(p, eps) };
            print!("{}", experiments::run_hydrogen_with(opts, |line| eprintln!("{line}"))?);
        }
    }
    Ok(())
}
