//! Text format for built operators:
//!
//! ```text
//! MROK-OP v1 d p n eps kind
//! ```
//!
//! followed for `gauss` by `terms M mu alpha eps delta r_max`, `M` lines
//! `w tau`, then one line per scale `scale j radius R w0 w1 ...` where each
//! window is `m1:m2` or `-`. For `cotangent` only the scale lines follow,
//! without windows. Blocks are recomputed on reading.

use std::io::{BufRead, Write};

use super::oned::assemble_1d_from;
use super::sep::assemble_sep;
use super::{NsForm1D, SepNsForm};
use crate::crosscorr::cotangent_block;
use crate::error::{MrokError, Result};
use crate::gaussfit::GaussianExpansion;

pub enum OperatorFile {
    Gauss(SepNsForm),
    Cotangent(NsForm1D),
}

fn win_str(w: &Option<(usize, usize)>) -> String {
    match w {
        Some((a, b)) => format!("{a}:{b}"),
        None => "-".into(),
    }
}

pub fn write_operator<W: Write>(op: &OperatorFile, mut w: W) -> Result<()> {
    match op {
        OperatorFile::Gauss(s) => {
            let e = &s.expansion;
            writeln!(w, "MROK-OP v1 {} {} {} {:.16e} gauss", s.d, s.p, s.n, s.eps)?;
            writeln!(w, "terms {} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}", e.len(), e.mu, e.alpha, e.eps, e.delta, e.r_max)?;
            for (wt, t) in e.weights.iter().zip(&e.taus) {
                writeln!(w, "{wt:.16e} {t:.16e}")?;
            }
            for (j, sc) in s.scales.iter().enumerate() {
                let ws: Vec<String> = sc.windows.iter().map(win_str).collect();
                writeln!(w, "scale {j} radius {} {}", sc.radius, ws.join(" "))?;
            }
        }
        OperatorFile::Cotangent(o) => {
            writeln!(w, "MROK-OP v1 1 {} {} {:.16e} cotangent", o.p, o.n, o.eps)?;
            for (j, r) in o.radius.iter().enumerate() {
                writeln!(w, "scale {j} radius {r}")?;
            }
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Vec<String>> {
        self.no += 1;
        match self.inner.next() {
            Some(l) => Ok(l?.split_whitespace().map(String::from).collect()),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: &str) -> MrokError {
        MrokError::Parse { line: self.no, msg: msg.into() }
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(&format!("bad number {s:?}")))
    }

    fn window(&self, s: &str) -> Result<Option<(usize, usize)>> {
        if s == "-" {
            return Ok(None);
        }
        let (a, b) = s.split_once(':').ok_or_else(|| self.err("bad window"))?;
        Ok(Some((self.num(a)?, self.num(b)?)))
    }
}

pub fn read_operator<R: BufRead>(r: R) -> Result<OperatorFile> {
    let mut ls = Lines { inner: r.lines(), no: 0 };
    let h = ls.next()?;
    if h.len() != 7 || h[0] != "MROK-OP" || h[1] != "v1" {
        return Err(ls.err("expected header MROK-OP v1 d p n eps kind"));
    }
    let (d, p, n): (usize, usize, u8) = (ls.num(&h[2])?, ls.num(&h[3])?, ls.num(&h[4])?);
    let eps: f64 = ls.num(&h[5])?;
    let scale_line = |ls: &mut Lines<R>, j: usize| -> Result<(i64, Vec<String>)> {
        let t = ls.next()?;
        if t.len() < 4 || t[0] != "scale" || t[2] != "radius" || ls.num::<usize>(&t[1])? != j {
            return Err(ls.err("expected scale line"));
        }
        Ok((ls.num(&t[3])?, t[4..].to_vec()))
    };
    match h[6].as_str() {
        "gauss" => {
            let t = ls.next()?;
            if t.len() != 7 || t[0] != "terms" {
                return Err(ls.err("expected terms line"));
            }
            let m: usize = ls.num(&t[1])?;
            let mut e = GaussianExpansion {
                mu: ls.num(&t[2])?,
                alpha: ls.num(&t[3])?,
                eps: ls.num(&t[4])?,
                delta: ls.num(&t[5])?,
                r_max: ls.num(&t[6])?,
                weights: Vec::with_capacity(m),
                taus: Vec::with_capacity(m),
            };
            for _ in 0..m {
                let t = ls.next()?;
                if t.len() != 2 {
                    return Err(ls.err("expected w tau"));
                }
                e.weights.push(ls.num(&t[0])?);
                e.taus.push(ls.num(&t[1])?);
            }
            let (mut radius, mut windows) = (Vec::new(), Vec::new());
            for j in 0..=n as usize {
                let (r, ws) = scale_line(&mut ls, j)?;
                let ws: Vec<_> = ws.iter().map(|s| ls.window(s)).collect::<Result<_>>()?;
                if ws.iter().flatten().any(|&(a, b)| a > b || b >= m) || ws.len() != if j == 0 { 1 } else { d + 1 } {
                    return Err(ls.err("bad term windows"));
                }
                radius.push(r);
                windows.push(ws);
            }
            Ok(OperatorFile::Gauss(assemble_sep(&e, d, p, n, eps, radius, windows)?))
        }
        "cotangent" => {
            let mut radius = Vec::new();
            for j in 0..=n as usize {
                radius.push(scale_line(&mut ls, j)?.0);
            }
            let op = assemble_1d_from(|j, l| Ok(cotangent_block(j, l, p)?.data), p, n, eps, true, radius)?;
            Ok(OperatorFile::Cotangent(op))
        }
        k => Err(ls.err(&format!("unknown operator kind {k:?}"))),
    }
}
