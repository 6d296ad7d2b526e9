//! Bounded-variable primal simplex on a dense tableau.
//!
//! Solves `min c·x` subject to `A x <= b` and `l <= x <= u`, where every
//! lower bound is finite. Bland's rule picks entering and leaving variables,
//! so degenerate problems cannot cycle.

use serde::{Deserialize, Serialize};

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    /// Row `i` reads `rows[i] · x <= rhs[i]`.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Final structural values. For an infeasible program this is the
    /// phase-1 point.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Phase-1 optimum: sum of artificial variables left at the end of
    /// phase 1. Zero for feasible programs.
    pub infeasibility: f64,
    pub iterations: usize,
}

struct Tableau {
    m: usize,
    /// `m` rows of `B^-1 A` over all columns.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    beta: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    iterations: usize,
    max_iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.hi[j]
        } else {
            self.lo[j]
        }
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut d = cost[j];
        for i in 0..self.m {
            let tij = self.t[i][j];
            if tij != 0.0 {
                d -= cost[self.basis[i]] * tij;
            }
        }
        d
    }

    fn step(&mut self, cost: &[f64]) -> Step {
        let ncols = self.lo.len();
        // Bland: lowest-index improving column.
        let mut entering = None;
        for j in 0..ncols {
            if self.is_basic[j] || self.lo[j] == self.hi[j] {
                continue;
            }
            let d = self.reduced_cost(cost, j);
            if (!self.at_upper[j] && d < -COST_EPS) || (self.at_upper[j] && d > COST_EPS) {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return Step::Optimal;
        };
        let sgn = if self.at_upper[j] { -1.0 } else { 1.0 };

        let mut theta = self.hi[j] - self.lo[j];
        let mut leave: Option<(usize, bool)> = None;
        for i in 0..self.m {
            let alpha = sgn * self.t[i][j];
            let b = self.basis[i];
            let (limit, to_upper) = if alpha > PIVOT_EPS {
                (((self.beta[i] - self.lo[b]) / alpha).max(0.0), false)
            } else if alpha < -PIVOT_EPS && self.hi[b].is_finite() {
                (((self.hi[b] - self.beta[i]) / -alpha).max(0.0), true)
            } else {
                continue;
            };
            if limit < theta - 1e-12 {
                theta = limit;
                leave = Some((i, to_upper));
            } else if limit <= theta + 1e-12 {
                // Bland tie-break on the leaving variable; a tie with the
                // entering variable's own bound keeps the bound flip.
                if let Some((r, _)) = leave {
                    if b < self.basis[r] {
                        theta = theta.min(limit);
                        leave = Some((i, to_upper));
                    }
                }
            }
        }
        if !theta.is_finite() {
            return Step::Unbounded;
        }

        for i in 0..self.m {
            self.beta[i] -= sgn * theta * self.t[i][j];
        }
        let entering_value = self.value(j) + sgn * theta;

        match leave {
            None => {
                self.at_upper[j] = !self.at_upper[j];
            }
            Some((r, to_upper)) => {
                let out = self.basis[r];
                self.is_basic[out] = false;
                self.at_upper[out] = to_upper;
                self.pivot(r, j);
                self.basis[r] = j;
                self.is_basic[j] = true;
                self.at_upper[j] = false;
                self.beta[r] = entering_value;
            }
        }
        self.iterations += 1;
        Step::Moved
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[j];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                row[j] = 0.0;
            }
        }
    }

    fn run(&mut self, cost: &[f64]) -> Option<LpStatus> {
        loop {
            if self.iterations >= self.max_iterations {
                return Some(LpStatus::IterationLimit);
            }
            match self.step(cost) {
                Step::Optimal => return None,
                Step::Unbounded => return Some(LpStatus::Unbounded),
                Step::Moved => {}
            }
        }
    }

    fn column_values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.lo.len()).map(|j| self.value(j)).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.beta[i];
        }
        x
    }
}

pub fn solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.cost.len();
    let m = lp.rows.len();
    debug_assert_eq!(lp.rhs.len(), m);
    debug_assert!(lp.lower.iter().all(|l| l.is_finite()));

    // Columns: structural 0..n, slacks n..n+m, then one artificial per
    // row whose residual at the all-lower-bound point is negative.
    let mut lo = lp.lower.clone();
    let mut hi = lp.upper.clone();
    lo.extend(std::iter::repeat_n(0.0, m));
    hi.extend(std::iter::repeat_n(f64::INFINITY, m));

    let residual: Vec<f64> = lp
        .rows
        .iter()
        .zip(&lp.rhs)
        .map(|(row, &b)| b - row.iter().zip(&lp.lower).map(|(a, l)| a * l).sum::<f64>())
        .collect();
    let n_art = residual.iter().filter(|r| **r < 0.0).count();
    let ncols = n + m + n_art;
    lo.extend(std::iter::repeat_n(0.0, n_art));
    hi.extend(std::iter::repeat_n(f64::INFINITY, n_art));

    let mut t = vec![vec![0.0; ncols]; m];
    let mut basis = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut next_art = n + m;
    let mut artificials = Vec::with_capacity(n_art);
    for i in 0..m {
        if residual[i] >= 0.0 {
            t[i][..n].copy_from_slice(&lp.rows[i]);
            t[i][n + i] = 1.0;
            basis.push(n + i);
            beta.push(residual[i]);
        } else {
            for (tv, a) in t[i][..n].iter_mut().zip(&lp.rows[i]) {
                *tv = -a;
            }
            t[i][n + i] = -1.0;
            t[i][next_art] = 1.0;
            basis.push(next_art);
            beta.push(-residual[i]);
            artificials.push(next_art);
            next_art += 1;
        }
    }
    let mut is_basic = vec![false; ncols];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut tab = Tableau {
        m,
        t,
        basis,
        beta,
        lo,
        hi,
        at_upper: vec![false; ncols],
        is_basic,
        iterations: 0,
        max_iterations: 50 * (m + ncols).max(10),
    };

    let mut infeasibility = 0.0;
    if n_art > 0 {
        let mut phase1 = vec![0.0; ncols];
        for &a in &artificials {
            phase1[a] = 1.0;
        }
        if let Some(status) = tab.run(&phase1) {
            return finish(&tab, lp, status, f64::NAN);
        }
        let x = tab.column_values();
        infeasibility = artificials.iter().map(|&a| x[a]).sum();
        let scale = 1.0 + lp.rhs.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
        if infeasibility > 1e-9 * scale {
            return finish(&tab, lp, LpStatus::Infeasible, infeasibility);
        }
        for &a in &artificials {
            tab.hi[a] = 0.0;
            tab.at_upper[a] = false;
        }
    }

    let mut cost = lp.cost.clone();
    cost.resize(ncols, 0.0);
    let status = tab.run(&cost).unwrap_or(LpStatus::Optimal);
    finish(&tab, lp, status, infeasibility)
}

fn finish(tab: &Tableau, lp: &LinearProgram, status: LpStatus, infeasibility: f64) -> LpSolution {
    let n = lp.cost.len();
    let x: Vec<f64> = tab.column_values()[..n]
        .iter()
        .zip(lp.lower.iter().zip(&lp.upper))
        .map(|(&v, (&l, &u))| v.clamp(l, u))
        .collect();
    let objective = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpSolution {
        status,
        x,
        objective,
        infeasibility,
        iterations: tab.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(cost: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> LinearProgram {
        LinearProgram {
            cost,
            rows,
            rhs,
            lower,
            upper,
        }
    }

    #[test]
    fn single_variable() {
        // min v subject to v >= 2, 0 <= v <= 5
        let s = solve(&lp(vec![1.0], vec![vec![-1.0]], vec![-2.0], vec![0.0], vec![5.0]));
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bound_flip_only() {
        let s = solve(&lp(vec![-1.0, 2.0], vec![], vec![], vec![0.0, 1.0], vec![3.0, 4.0]));
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![3.0, 1.0]);
        assert_eq!(s.objective, -1.0);
    }

    #[test]
    fn classic_two_variable() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let s = solve(&lp(
            vec![-3.0, -5.0],
            vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            vec![4.0, 12.0, 18.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        ));
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        assert!((s.objective + 36.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_reports_phase_one_residual() {
        // v <= 1 and v >= 3
        let s = solve(&lp(
            vec![1.0],
            vec![vec![1.0], vec![-1.0]],
            vec![1.0, -3.0],
            vec![0.0],
            vec![10.0],
        ));
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!((s.infeasibility - 2.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded() {
        let s = solve(&lp(
            vec![-1.0],
            vec![vec![-1.0]],
            vec![0.0],
            vec![0.0],
            vec![f64::INFINITY],
        ));
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_pair_with_zero_width() {
        // x + y = 1 as two rows, min -x - 2y, box [0, 1]^2
        let s = solve(&lp(
            vec![-1.0, -2.0],
            vec![vec![1.0, 1.0], vec![-1.0, -1.0]],
            vec![1.0, -1.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        ));
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[1] - 1.0).abs() < 1e-12 && s.x[0].abs() < 1e-12);
    }

    #[test]
    fn degenerate_does_not_cycle() {
        // Beale's cycling example (converted to <= rows, min form).
        let s = solve(&lp(
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![
                vec![0.25, -60.0, -0.04, 9.0],
                vec![0.5, -90.0, -0.02, 3.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![0.0, 0.0, 1.0],
            vec![0.0; 4],
            vec![f64::INFINITY; 4],
        ));
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9);
    }
}
