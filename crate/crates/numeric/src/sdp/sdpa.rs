//! Sparse SDPA text format (`.dat-s`), for cross-checking against external
//! solvers.
//!
//! SDPA solves `min c'x s.t. sum_i F_i x_i - F_0 >= 0`, whose dual is
//! `max <F_0, Y> s.t. <F_i, Y> = c_i, Y >= 0`. A standard-form problem maps
//! onto the SDPA dual with `F_i = A_i`, `c_i = b_i`, and `F_0 = -C` for a
//! minimization (`F_0 = C` for a maximization). Layout:
//!
//! ```text
//! "optional comment lines start with a quote or asterisk
//! m
//! nblocks
//! n_1 n_2 ... n_k          (negative size = diagonal block)
//! b_1 b_2 ... b_m
//! matno blkno i j value    (1-based, upper triangle; matno 0 is F_0)
//! ```
//!
//! Objective sense is not part of the format; [`write`] records it in a
//! comment line (`*sense: max`) which [`read`] honours when present.

use std::fmt::Write as _;

use super::problem::{SdpProblem, Sense, SparseSymMatrix};
use crate::error::{NumericError, Result};

pub fn write(p: &SdpProblem) -> String {
    let mut out = String::new();
    let sense = match p.sense {
        Sense::Minimize => "min",
        Sense::Maximize => "max",
    };
    let _ = writeln!(out, "*sense: {sense}");
    let _ = writeln!(out, "{}", p.constraints.len());
    let _ = writeln!(out, "{}", p.blocks.len());
    let sizes: Vec<String> = p.blocks.iter().map(|n| n.to_string()).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let bs: Vec<String> = p.constraints.iter().map(|c| format!("{:e}", c.b)).collect();
    let _ = writeln!(out, "{}", bs.join(" "));
    let f0_sign = match p.sense {
        Sense::Minimize => -1.0,
        Sense::Maximize => 1.0,
    };
    let mut emit = |matno: usize, m: &SparseSymMatrix, s: f64| {
        let mut m = m.clone();
        m.compact();
        for e in m.entries() {
            let _ = writeln!(
                out,
                "{} {} {} {} {:e}",
                matno,
                e.block + 1,
                e.row + 1,
                e.col + 1,
                s * e.value
            );
        }
    };
    emit(0, &p.objective, f0_sign);
    for (i, c) in p.constraints.iter().enumerate() {
        emit(i + 1, &c.a, 1.0);
    }
    out
}

pub fn read(text: &str) -> Result<SdpProblem> {
    let is_comment = |t: &str| t.starts_with('*') || t.starts_with('"');
    let sense = if text
        .lines()
        .map(str::trim)
        .any(|t| is_comment(t) && t.trim_start_matches('*').trim() == "sense: max")
    {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let mut lines = text.lines().enumerate().filter_map(|(k, l)| {
        let t = l.trim();
        if is_comment(t) || t.is_empty() {
            None
        } else {
            Some((k + 1, t.to_string()))
        }
    });
    let bad = |line: usize, msg: &str| NumericError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut header = |what: &str| -> Result<(usize, Vec<String>)> {
        let (k, l) = lines.next().ok_or_else(|| bad(0, what))?;
        let toks = l
            .split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        Ok((k, toks))
    };
    let (k, t) = header("missing constraint count")?;
    let m: usize = t.first().and_then(|v| v.parse().ok()).ok_or_else(|| bad(k, "m"))?;
    let (k, t) = header("missing block count")?;
    let nb: usize = t.first().and_then(|v| v.parse().ok()).ok_or_else(|| bad(k, "nblocks"))?;
    let (k, t) = header("missing block sizes")?;
    let blocks: Vec<usize> = t
        .iter()
        .take(nb)
        .map(|v| v.parse::<i64>().map(|n| n.unsigned_abs() as usize))
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad(k, "block size"))?;
    if blocks.len() != nb {
        return Err(bad(k, "too few block sizes"));
    }
    let (k, t) = header("missing right-hand side")?;
    let b: Vec<f64> = t
        .iter()
        .take(m)
        .map(|v| v.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad(k, "rhs value"))?;
    if b.len() != m {
        return Err(bad(k, "too few rhs values"));
    }
    // SDPA does not mark the sense; we fold the sign of F_0 back in.
    let f0_sign = match sense {
        Sense::Minimize => -1.0,
        Sense::Maximize => 1.0,
    };
    let mut p = SdpProblem::new(blocks, sense);
    let mut mats = vec![SparseSymMatrix::new(); m];
    for (k, l) in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 5 {
            return Err(bad(k, "expected `matno blkno i j value`"));
        }
        let ints: Vec<usize> = t[..4]
            .iter()
            .map(|v| v.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(k, "index"))?;
        let v: f64 = t[4].parse().map_err(|_| bad(k, "value"))?;
        let (matno, blk, i, j) = (ints[0], ints[1], ints[2], ints[3]);
        if blk == 0 || i == 0 || j == 0 || blk > p.blocks.len() || matno > m {
            return Err(bad(k, "index out of range"));
        }
        if matno == 0 {
            p.objective.add(blk - 1, i - 1, j - 1, f0_sign * v);
        } else {
            mats[matno - 1].add(blk - 1, i - 1, j - 1, v);
        }
    }
    for (a, bi) in mats.into_iter().zip(b) {
        p.add_constraint(a, bi);
    }
    p.validate()?;
    Ok(p)
}
