use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::FunTree;
use crate::error::{MrokError, Result};
use crate::key::BoxKey;

const MAGIC: &str = "MROK-TREE";

/// Text form: a header `MROK-TREE v1 d p eps jmax count`, then one line per
/// leaf holding `j l_1 .. l_d` and the `p^d` coefficients.
pub fn write_tree<W: Write>(tree: &FunTree, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC} v1 {} {} {:.16e} {} {}", tree.d, tree.p, tree.eps, tree.jmax, tree.n_leaves())?;
    for (k, b) in tree.leaves() {
        let mut line = format!("{}", k.level);
        for a in 0..tree.d {
            line.push_str(&format!(" {}", k.idx[a]));
        }
        for c in b {
            line.push_str(&format!(" {c:.16e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn perr(line: usize, msg: impl Into<String>) -> MrokError {
    MrokError::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| perr(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| perr(line, format!("bad {what}")))
}

pub fn read_tree<R: BufRead>(r: R) -> Result<FunTree> {
    let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let (ln, head) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
    let head = head?;
    let mut t = head.split_whitespace();
    if t.next() != Some(MAGIC) || t.next() != Some("v1") {
        return Err(perr(ln, "not a MROK-TREE v1 file"));
    }
    let d: usize = field(t.next(), ln, "d")?;
    let p: usize = field(t.next(), ln, "p")?;
    let eps: f64 = field(t.next(), ln, "eps")?;
    let jmax: u8 = field(t.next(), ln, "jmax")?;
    let count: usize = field(t.next(), ln, "count")?;
    if !(1..=3).contains(&d) {
        return Err(MrokError::UnsupportedDimension(d));
    }
    let n = p.pow(d as u32);
    let mut leaves = BTreeMap::new();
    for (ln, l) in lines {
        let l = l?;
        let mut t = l.split_whitespace();
        let level: u8 = field(t.next(), ln, "scale")?;
        let mut idx = [0u32; 3];
        for v in idx.iter_mut().take(d) {
            *v = field(t.next(), ln, "index")?;
        }
        let coeffs: Vec<f64> = t.map(|s| s.parse().map_err(|_| perr(ln, "bad coefficient"))).collect::<Result<_>>()?;
        if coeffs.len() != n {
            return Err(perr(ln, format!("expected {n} coefficients, found {}", coeffs.len())));
        }
        if leaves.insert(BoxKey { level, idx }, coeffs).is_some() {
            return Err(perr(ln, "duplicate leaf"));
        }
    }
    if leaves.len() != count {
        return Err(perr(ln, format!("header announces {count} leaves, found {}", leaves.len())));
    }
    FunTree::from_leaves(d, p, eps, jmax, leaves)
}
