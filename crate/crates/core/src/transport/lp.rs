//! Dense tableau simplex for `max c·x  s.t.  A x <= b, x >= 0` with `b >= 0`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) struct LpSolution<S> {
    pub x: Vec<S>,
    pub value: S,
}

/// Solve with the origin as starting vertex. Pivots follow Dantzig's rule
/// until a run of degenerate pivots is seen, then Bland's rule, which
/// cannot cycle.
pub(crate) fn maximize<S: Scalar>(
    a: &[Vec<S>],
    b: &[S],
    c: &[S],
    eps: &S,
) -> Result<LpSolution<S>> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::structural("LP dimensions disagree"));
    }
    if let Some(v) = b.iter().find(|v| **v < S::zero()) {
        return Err(Error::Solver(format!("negative right-hand side {v}")));
    }
    // rows 0..m: [A | b]; row m: [-c | 0]
    let mut t: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut obj: Vec<S> = c.iter().map(|v| -v.clone()).collect();
    obj.push(S::zero());
    t.push(obj);

    // labels: 0..n original variables, n..n+m slacks
    let mut col_var: Vec<usize> = (0..n).collect();
    let mut row_var: Vec<usize> = (n..n + m).collect();

    let max_iter = 50_000 + 20 * (m + n) * (m + n).min(200);
    let degenerate_limit = 2 * (m + n) + 10;
    let mut degenerate_run = 0usize;
    let mut bland = false;

    for _ in 0..max_iter {
        let entering = if bland {
            (0..n)
                .filter(|&k| t[m][k] < -eps.clone())
                .min_by_key(|&k| col_var[k])
        } else {
            let mut best: Option<usize> = None;
            for k in 0..n {
                if t[m][k] < -eps.clone() && best.is_none_or(|bk| t[m][k] < t[m][bk]) {
                    best = Some(k);
                }
            }
            best
        };
        let Some(k) = entering else {
            let mut x = vec![S::zero(); n];
            for (r, &v) in row_var.iter().enumerate() {
                if v < n {
                    x[v] = t[r][n].clone();
                }
            }
            return Ok(LpSolution {
                x,
                value: t[m][n].clone(),
            });
        };
        let mut leave: Option<(usize, S)> = None;
        for r in 0..m {
            if t[r][k] > *eps {
                let ratio = t[r][n].clone() / t[r][k].clone();
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < *best || (ratio == *best && row_var[r] < row_var[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(Error::Solver("LP is unbounded".into()));
        };
        if ratio <= *eps {
            degenerate_run += 1;
            if degenerate_run > degenerate_limit {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
        pivot(&mut t, r, k);
        std::mem::swap(&mut row_var[r], &mut col_var[k]);
    }
    Err(Error::Solver("simplex iteration limit reached".into()))
}

fn pivot<S: Scalar>(t: &mut [Vec<S>], r: usize, k: usize) {
    let p = t[r][k].clone();
    let width = t[r].len();
    let pivot_row: Vec<S> = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[k].clone();
        if f.is_zero() {
            continue;
        }
        let ratio = f / p.clone();
        for j in 0..width {
            if j != k {
                row[j] = row[j].clone() - ratio.clone() * pivot_row[j].clone();
            }
        }
        row[k] = -ratio;
    }
    for j in 0..width {
        if j != k {
            t[r][j] = t[r][j].clone() / p.clone();
        }
    }
    t[r][k] = S::one() / p;
}
