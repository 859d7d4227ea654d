//! Exact OT by the primal transportation simplex.
//!
//! Masses are scaled to integers (every source supplies `N_t` units, every
//! target demands `N_s` units) so the flow arithmetic is exact and the
//! returned coupling `flow / (N_s·N_t)` meets the marginals up to rounding of
//! a single division. The basis is kept as a spanning tree of the bipartite
//! row/column graph with `N_s + N_t − 1` basic cells.
//!
//! Uniform-marginal problems are highly degenerate. The solver works on the
//! lexicographically perturbed problem instead: masses are multiplied by
//! `S = 2·N_s + 1`, each source gets one extra unit and the last target `N_s`
//! extra units. Every basic solution of the perturbed problem is
//! nondegenerate, so each pivot strictly decreases the objective and the
//! simplex cannot cycle. A basis optimal for the perturbed problem is optimal
//! for the original one, whose flows are recovered by rounding `flow / S`.
//!
//! Pivoting uses block pricing: cells are scanned cyclically in blocks of
//! about `sqrt(N_s·N_t)`, and the most negative reduced cost in the first
//! block that has one enters (first scanned cell on ties).

use std::collections::VecDeque;

use ndarray::Array2;

use super::{CostMatrix, SolveStatus, TransportPlan};
use crate::error::{Error, Result};

const BLOCK_MIN: usize = 16;

/// Solve `min ⟨γ, C⟩` over couplings with uniform marginals.
///
/// Deterministic for a fixed input: the initial basis, the entering rule and
/// the leaving rule all break ties by cell index.
pub fn solve_exact(cost: &CostMatrix) -> Result<TransportPlan> {
    let mut tableau = Tableau::new(cost);
    let iterations = tableau.run()?;

    let (m, n) = (tableau.m, tableau.n);
    let total = (m * n) as f64;
    let scale = tableau.scale;
    let coupling = Array2::from_shape_fn((m, n), |(i, j)| {
        let units = (tableau.flow[i * n + j] as f64 / scale as f64).round();
        units / total
    });
    let objective = super::frobenius_dot(coupling.view(), cost.values());
    let (row_err, col_err) = super::marginal_violation(coupling.view());
    Ok(TransportPlan {
        coupling,
        objective,
        status: SolveStatus {
            converged: true,
            iterations,
            marginal_error: row_err.max(col_err),
        },
    })
}

struct Tableau {
    m: usize,
    n: usize,
    cost: Vec<f64>,
    flow: Vec<i64>,
    basic: Vec<bool>,
    /// Basic cells incident to each node; rows are nodes `0..m`, columns `m..m+n`.
    adjacency: Vec<Vec<usize>>,
    potential: Vec<f64>,
    tol: f64,
    scale: i64,
}

impl Tableau {
    fn new(cost: &CostMatrix) -> Self {
        let (m, n) = (cost.n_source(), cost.n_target());
        let cost_vec: Vec<f64> = cost.values().iter().copied().collect();
        let tol = 1e-10 * cost.max().max(1.0);
        let mut t = Tableau {
            m,
            n,
            cost: cost_vec,
            flow: vec![0; m * n],
            basic: vec![false; m * n],
            adjacency: vec![Vec::new(); m + n],
            potential: vec![0.0; m + n],
            tol,
            scale: 2 * m as i64 + 1,
        };
        t.initial_basis();
        t
    }

    fn row_of(&self, cell: usize) -> usize {
        cell / self.n
    }

    fn col_node(&self, cell: usize) -> usize {
        self.m + cell % self.n
    }

    /// Least-cost greedy allocation, completed to a spanning tree with
    /// zero-flow cells.
    fn initial_basis(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut order: Vec<usize> = (0..m * n).collect();
        order.sort_by(|&a, &b| self.cost[a].total_cmp(&self.cost[b]).then(a.cmp(&b)));

        let s = self.scale;
        let mut supply = vec![n as i64 * s + 1; m];
        let mut demand = vec![m as i64 * s; n];
        demand[n - 1] += m as i64;
        let mut components = UnionFind::new(m + n);
        let mut n_basic = 0;

        for &cell in &order {
            let (i, j) = (cell / n, cell % n);
            if supply[i] > 0 && demand[j] > 0 {
                let q = supply[i].min(demand[j]);
                supply[i] -= q;
                demand[j] -= q;
                self.flow[cell] = q;
                let merged = components.union(i, m + j);
                debug_assert!(merged, "greedy allocation produced a cycle");
                self.add_basic(cell);
                n_basic += 1;
            }
        }
        for &cell in &order {
            if n_basic == m + n - 1 {
                break;
            }
            let (i, j) = (cell / n, cell % n);
            if !self.basic[cell] && components.union(i, m + j) {
                self.add_basic(cell);
                n_basic += 1;
            }
        }
        debug_assert_eq!(n_basic, m + n - 1);
    }

    fn add_basic(&mut self, cell: usize) {
        self.basic[cell] = true;
        let (r, c) = (self.row_of(cell), self.col_node(cell));
        self.adjacency[r].push(cell);
        self.adjacency[c].push(cell);
    }

    fn remove_basic(&mut self, cell: usize) {
        self.basic[cell] = false;
        let (r, c) = (self.row_of(cell), self.col_node(cell));
        self.adjacency[r].retain(|&e| e != cell);
        self.adjacency[c].retain(|&e| e != cell);
    }

    fn other_end(&self, cell: usize, node: usize) -> usize {
        let r = self.row_of(cell);
        if node == r {
            self.col_node(cell)
        } else {
            r
        }
    }

    /// Dual potentials `u_i + v_j = c_ij` on every basic cell, with `u_0 = 0`.
    fn update_potentials(&mut self) {
        let mut seen = vec![false; self.m + self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        self.potential[0] = 0.0;
        while let Some(a) = queue.pop_front() {
            for k in 0..self.adjacency[a].len() {
                let cell = self.adjacency[a][k];
                let b = self.other_end(cell, a);
                if !seen[b] {
                    seen[b] = true;
                    self.potential[b] = self.cost[cell] - self.potential[a];
                    queue.push_back(b);
                }
            }
        }
    }

    fn reduced_cost(&self, cell: usize) -> f64 {
        self.cost[cell] - self.potential[self.row_of(cell)] - self.potential[self.col_node(cell)]
    }

    /// Block pricing from `cursor`; leaves the cursor after the scanned block.
    fn entering_block(&self, cursor: &mut usize) -> Option<usize> {
        let cells = self.m * self.n;
        let block = ((cells as f64).sqrt().ceil() as usize).max(BLOCK_MIN).min(cells);
        let mut best: Option<(usize, f64)> = None;
        let mut scanned = 0;
        let mut cell = *cursor;
        while scanned < cells {
            if !self.basic[cell] {
                let r = self.reduced_cost(cell);
                if r < -self.tol && best.is_none_or(|(_, b)| r < b) {
                    best = Some((cell, r));
                }
            }
            scanned += 1;
            cell += 1;
            if cell == cells {
                cell = 0;
            }
            if scanned % block == 0 && best.is_some() {
                break;
            }
        }
        *cursor = cell;
        best.map(|(c, _)| c)
    }

    /// Tree path from the row node of `entering` to its column node, listed
    /// from the row end.
    fn tree_path(&self, entering: usize) -> Vec<usize> {
        let start = self.row_of(entering);
        let goal = self.col_node(entering);
        let mut via: Vec<Option<usize>> = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(a) = queue.pop_front() {
            if a == goal {
                break;
            }
            for &cell in &self.adjacency[a] {
                let b = self.other_end(cell, a);
                if !seen[b] {
                    seen[b] = true;
                    via[b] = Some(cell);
                    queue.push_back(b);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = goal;
        while node != start {
            let cell = via[node].expect("basis is a spanning tree");
            path.push(cell);
            node = self.other_end(cell, node);
        }
        path.reverse();
        path
    }

    fn pivot(&mut self, entering: usize) {
        let path = self.tree_path(entering);
        // Even positions (counted from the row end) lose flow.
        let (theta, leaving) = path
            .iter()
            .step_by(2)
            .map(|&c| (self.flow[c], c))
            .min()
            .expect("cycle has at least one decreasing cell");
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.flow[cell] -= theta;
            } else {
                self.flow[cell] += theta;
            }
        }
        self.flow[entering] = theta;
        self.remove_basic(leaving);
        self.add_basic(entering);
        debug_assert!(theta > 0, "perturbed problem is nondegenerate");
    }

    fn run(&mut self) -> Result<usize> {
        let max_pivots = 1_000 + 50 * self.m * self.n * (self.m + self.n);
        let mut cursor = 0usize;
        for iteration in 0..max_pivots {
            self.update_potentials();
            let Some(entering) = self.entering_block(&mut cursor) else {
                return Ok(iteration);
            };
            self.pivot(entering);
        }
        Err(Error::Solver(format!(
            "transportation simplex exceeded {max_pivots} pivots"
        )))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}
