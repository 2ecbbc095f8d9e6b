//! Transportation simplex (network simplex on the complete bipartite graph).
//!
//! Flows only ever change by differences of supplies, so on rational input
//! the solution is exact.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) struct TransportSolution<S> {
    /// `flow[i][j]` over supplies `i` and demands `j`.
    pub flow: Vec<Vec<S>>,
    pub cost: S,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Row(usize),
    Col(usize),
}

struct Tree {
    m: usize,
    n: usize,
    basis: Vec<(usize, usize)>,
}

impl Tree {
    fn node_id(&self, v: Node) -> usize {
        match v {
            Node::Row(i) => i,
            Node::Col(j) => self.m + j,
        }
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        // entries are indices into `basis`
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (b, &(i, j)) in self.basis.iter().enumerate() {
            adj[i].push(b);
            adj[self.m + j].push(b);
        }
        adj
    }

    fn potentials<S: Scalar>(&self, cost: &[Vec<S>]) -> (Vec<S>, Vec<S>) {
        let adj = self.adjacency();
        let mut u: Vec<Option<S>> = vec![None; self.m];
        let mut v: Vec<Option<S>> = vec![None; self.n];
        u[0] = Some(S::zero());
        let mut queue = VecDeque::from([Node::Row(0)]);
        while let Some(node) = queue.pop_front() {
            for &b in &adj[self.node_id(node)] {
                let (i, j) = self.basis[b];
                match node {
                    Node::Row(_) if v[j].is_none() => {
                        v[j] = Some(cost[i][j].clone() - u[i].clone().expect("set"));
                        queue.push_back(Node::Col(j));
                    }
                    Node::Col(_) if u[i].is_none() => {
                        u[i] = Some(cost[i][j].clone() - v[j].clone().expect("set"));
                        queue.push_back(Node::Row(i));
                    }
                    _ => {}
                }
            }
        }
        (
            u.into_iter().map(|x| x.expect("basis spans")).collect(),
            v.into_iter().map(|x| x.expect("basis spans")).collect(),
        )
    }

    /// Basis indices along the tree path from row `i` to column `j`.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let total = self.m + self.n;
        let mut via: Vec<Option<(usize, usize)>> = vec![None; total]; // (prev node, basis idx)
        let start = i;
        let goal = self.m + j;
        let mut seen = vec![false; total];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            if x == goal {
                break;
            }
            for &b in &adj[x] {
                let (bi, bj) = self.basis[b];
                let y = if x < self.m { self.m + bj } else { bi };
                if !seen[y] {
                    seen[y] = true;
                    via[y] = Some((x, b));
                    queue.push_back(y);
                }
            }
        }
        let mut out = Vec::new();
        let mut x = goal;
        while x != start {
            let (prev, b) = via[x].expect("tree is connected");
            out.push(b);
            x = prev;
        }
        out.reverse();
        out
    }
}

/// Minimum-cost transport between positive `supply` and `demand` with equal
/// totals (within `tol_mass`).
pub(crate) fn solve<S: Scalar>(
    supply: &[S],
    demand: &[S],
    cost: &[Vec<S>],
    tol_lp: &S,
    tol_mass: &S,
) -> Result<TransportSolution<S>> {
    let m = supply.len();
    let n = demand.len();
    if m == 0 || n == 0 {
        return Err(Error::domain("transport between empty supports"));
    }
    if cost.len() != m || cost.iter().any(|r| r.len() != n) {
        return Err(Error::structural("cost matrix shape does not match the supports"));
    }
    let total_a = crate::scalar::sum(supply);
    let total_b = crate::scalar::sum(demand);
    if (total_a.clone() - total_b.clone()).abs() > *tol_mass {
        return Err(Error::invariant(
            "mass",
            format!("supplies total {total_a} but demands total {total_b}"),
        ));
    }

    // north-west corner start: a staircase of m + n - 1 cells is a spanning tree
    let mut flow = vec![vec![S::zero(); n]; m];
    let mut basic = vec![vec![false; n]; m];
    let mut basis = Vec::with_capacity(m + n - 1);
    let mut ra = supply.to_vec();
    let mut rb = demand.to_vec();
    let (mut i, mut j) = (0usize, 0usize);
    for _ in 0..(m + n - 1) {
        let x = S::max_of(S::zero(), S::min_of(ra[i].clone(), rb[j].clone()));
        flow[i][j] = x.clone();
        basic[i][j] = true;
        basis.push((i, j));
        let row_done = ra[i] <= rb[j];
        ra[i] = ra[i].clone() - x.clone();
        rb[j] = rb[j].clone() - x;
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || row_done {
            i += 1;
        } else {
            j += 1;
        }
    }
    let mut tree = Tree { m, n, basis };

    let scale = cost
        .iter()
        .flatten()
        .fold(S::one(), |acc, c| S::max_of(acc, c.abs()));
    let eps = tol_lp.clone() * scale;
    let max_iter = 100_000 + 50 * m * n;
    let degenerate_limit = 2 * (m + n) + 10;
    let mut degenerate_run = 0usize;
    let mut bland = false;

    let mut converged = false;
    for _ in 0..max_iter {
        let (u, v) = tree.potentials(cost);
        let mut entering: Option<(usize, usize, S)> = None;
        'scan: for a in 0..m {
            for b in 0..n {
                if basic[a][b] {
                    continue;
                }
                let r = cost[a][b].clone() - u[a].clone() - v[b].clone();
                if r < -eps.clone() {
                    if bland {
                        entering = Some((a, b, r));
                        break 'scan;
                    }
                    if entering.as_ref().is_none_or(|(_, _, best)| r < *best) {
                        entering = Some((a, b, r));
                    }
                }
            }
        }
        let Some((ei, ej, _)) = entering else {
            converged = true;
            break;
        };

        // cycle: entering cell (+), then path edges from column ej back to row ei
        let path = tree.path(ei, ej);
        let mut minus: Vec<usize> = Vec::new();
        let mut plus: Vec<usize> = Vec::new();
        for (k, &b) in path.iter().rev().enumerate() {
            if k % 2 == 0 {
                minus.push(b);
            } else {
                plus.push(b);
            }
        }
        let mut leave = minus[0];
        for &b in &minus[1..] {
            let (bi, bj) = tree.basis[b];
            let (li, lj) = tree.basis[leave];
            if flow[bi][bj] < flow[li][lj]
                || (flow[bi][bj] == flow[li][lj] && (bi, bj) < (li, lj))
            {
                leave = b;
            }
        }
        let (li, lj) = tree.basis[leave];
        let theta = flow[li][lj].clone();
        if theta <= eps {
            degenerate_run += 1;
            if degenerate_run > degenerate_limit {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
        for &b in &minus {
            let (bi, bj) = tree.basis[b];
            flow[bi][bj] = S::max_of(S::zero(), flow[bi][bj].clone() - theta.clone());
        }
        for &b in &plus {
            let (bi, bj) = tree.basis[b];
            flow[bi][bj] = flow[bi][bj].clone() + theta.clone();
        }
        flow[ei][ej] = theta;
        flow[li][lj] = S::zero();
        basic[li][lj] = false;
        basic[ei][ej] = true;
        tree.basis[leave] = (ei, ej);
    }
    if !converged {
        return Err(Error::Solver("transport simplex iteration limit reached".into()));
    }

    let mut total = S::zero();
    for a in 0..m {
        for b in 0..n {
            if !flow[a][b].is_zero() {
                total = total + flow[a][b].clone() * cost[a][b].clone();
            }
        }
    }
    for (a, s) in supply.iter().enumerate() {
        let row = crate::scalar::sum(&flow[a]);
        if (row.clone() - s.clone()).abs() > *tol_mass {
            return Err(Error::Solver(format!("row {a} ships {row}, supply is {s}")));
        }
    }
    for (b, d) in demand.iter().enumerate() {
        let col = (0..m).fold(S::zero(), |acc, a| acc + flow[a][b].clone());
        if (col.clone() - d.clone()).abs() > *tol_mass {
            return Err(Error::Solver(format!("column {b} receives {col}, demand is {d}")));
        }
    }
    Ok(TransportSolution { flow, cost: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn small_textbook_problem() {
        // supplies 20, 30, 25; demands 10, 35, 30
        let supply = [20.0, 30.0, 25.0];
        let demand = [10.0, 35.0, 30.0];
        let cost = vec![
            vec![8.0, 6.0, 10.0],
            vec![9.0, 12.0, 13.0],
            vec![14.0, 9.0, 16.0],
        ];
        let sol = solve(&supply, &demand, &cost, &1e-12, &1e-9).unwrap();
        // brute force over the two free cells of this 3x3 instance
        let mut best = f64::INFINITY;
        for a in 0..=20 {
            for b in 0..=(20 - a) {
                let x02 = 20 - a - b;
                for c in 0..=30 {
                    for d in 0..=(30 - c) {
                        let x12 = 30 - c - d;
                        let x20 = 10i32 - a as i32 - c as i32;
                        let x21 = 35i32 - b as i32 - d as i32;
                        let x22 = 30i32 - x02 as i32 - x12 as i32;
                        if x20 < 0 || x21 < 0 || x22 < 0 || x20 + x21 + x22 != 25 {
                            continue;
                        }
                        let v = [a, b, x02, c, d, x12]
                            .iter()
                            .zip([8.0, 6.0, 10.0, 9.0, 12.0, 13.0])
                            .map(|(x, w)| *x as f64 * w)
                            .sum::<f64>()
                            + x20 as f64 * 14.0
                            + x21 as f64 * 9.0
                            + x22 as f64 * 16.0;
                        best = best.min(v);
                    }
                }
            }
        }
        assert!((sol.cost - best).abs() < 1e-9, "{} vs {}", sol.cost, best);
    }

    #[test]
    fn exact_degenerate_instance() {
        let q = |a, b| Rational::from_ratio(a, b);
        let supply = [q(1, 2), q(1, 2)];
        let demand = [q(1, 2), q(1, 2)];
        let cost = vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]];
        let sol = solve(&supply, &demand, &cost, &q(0, 1), &q(0, 1)).unwrap();
        assert_eq!(sol.cost, q(0, 1));
        assert_eq!(sol.flow[0][1], q(1, 2));
    }

    #[test]
    fn mismatched_totals() {
        let r = solve(&[1.0], &[0.5], &[vec![0.0]], &1e-12, &1e-9);
        assert!(r.is_err());
    }
}
