//! Augmented-Lagrangian solver for box-bounded subproblems.
//!
//! The outer loop updates first-order multipliers and grows the penalty when
//! the constraint residual stalls; the inner loop is a projected limited-memory
//! BFGS with central finite-difference gradients.

use std::cell::Cell;
use std::collections::VecDeque;

use log::trace;

use super::fd;
use crate::error::Result;
use crate::problem::{violation, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct AlSettings {
    /// Feasibility tolerance used to judge the final point.
    pub tol: f64,
    /// Half-width of the band that replaces each equality.
    pub eq_band: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    /// The penalty grows unless the residual shrinks by at least this factor.
    pub required_shrink: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub memory: usize,
    pub pg_tol: f64,
    /// Residual (in `c(x) <= 0` units) below which the point counts as
    /// converged for the outer loop.
    pub residual_tol: f64,
}

impl Default for AlSettings {
    fn default() -> Self {
        Self::with_tol(crate::problem::DEFAULT_TOL)
    }
}

impl AlSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            eq_band: 0.99 * tol,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            required_shrink: 0.25,
            max_outer: 50,
            max_inner: 200,
            memory: 8,
            pg_tol: 1e-6,
            residual_tol: 1e-3 * tol,
        }
    }
}

/// Minimization of a problem over the `free` variables, all others held at
/// their values in `template`.
pub struct Subproblem<'a> {
    spec: &'a ProblemSpec,
    template: Vec<f64>,
    free: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    eq_band: f64,
    evals: Cell<u64>,
}

pub(crate) struct Point {
    pub f: f64,
    /// Constraints in `c(x) <= 0` form: inequalities as stated, then each
    /// equality as the pair `h - band`, `-h - band`.
    pub c: Vec<f64>,
}

impl<'a> Subproblem<'a> {
    pub fn new(spec: &'a ProblemSpec, template: Vec<f64>, free: Vec<usize>, eq_band: f64) -> Self {
        let lo = free.iter().map(|&i| spec.lower_bounds()[i]).collect();
        let hi = free.iter().map(|&i| spec.upper_bounds()[i]).collect();
        Self {
            spec,
            template,
            free,
            lo,
            hi,
            eq_band,
            evals: Cell::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn evals(&self) -> u64 {
        self.evals.get()
    }

    pub fn merged(&self, v: &[f64]) -> Vec<f64> {
        let mut x = self.template.clone();
        for (&i, &vi) in self.free.iter().zip(v) {
            x[i] = vi;
        }
        x
    }

    pub(crate) fn point(&self, v: &[f64]) -> Result<Point> {
        self.evals.set(self.evals.get() + 1);
        let r = self.spec.evaluate(&self.merged(v), f64::INFINITY)?;
        let mut c = r.g;
        c.reserve(2 * r.h.len());
        for h in r.h {
            c.push(h - self.eq_band);
            c.push(-h - self.eq_band);
        }
        Ok(Point { f: r.f, c })
    }

    /// Aggregate violation at `v` under `tol`, or `None` on a domain error.
    pub fn violation_at(&self, v: &[f64], tol: f64) -> Option<f64> {
        self.spec
            .evaluate(&self.merged(v), tol)
            .ok()
            .map(|r| violation(&r.g, &r.h, tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlStatus {
    Converged,
    Infeasible,
    MaxIter,
    DomainError,
}

#[derive(Debug, Clone)]
pub struct AlOutcome {
    pub status: AlStatus,
    pub x: Vec<f64>,
    pub f: f64,
    /// Aggregate violation at `x` under the settings' tolerance.
    pub violation: f64,
    /// Largest residual of the solver's own constraints (strict
    /// inequalities, banded equalities) at `x`.
    pub residual: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub evals: u64,
}

fn augmented(p: &Point, lambda: &[f64], rho: f64) -> f64 {
    let pen: f64 = p
        .c
        .iter()
        .zip(lambda)
        .map(|(&c, &l)| {
            let t = (l + rho * c).max(0.0);
            t * t - l * l
        })
        .sum();
    p.f + pen / (2.0 * rho)
}

fn max_residual(c: &[f64]) -> f64 {
    c.iter().fold(0.0f64, |acc, &v| acc.max(v))
}

pub fn solve(sub: &Subproblem<'_>, start: &[f64], settings: &AlSettings) -> AlOutcome {
    let (lo, hi) = (sub.lo.clone(), sub.hi.clone());
    let mut x: Vec<f64> = start
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(&v, (&l, &h))| v.clamp(l, h))
        .collect();
    let Ok(first) = sub.point(&x) else {
        return domain_failure(sub, x, 0, 0);
    };
    let mut lambda = vec![0.0; first.c.len()];
    let mut rho = settings.initial_penalty;
    let mut prev_residual = f64::INFINITY;
    let mut prev_phi = f64::INFINITY;
    let mut prev_f = first.f;
    let mut stationary_streak = 0;
    let mut inner_total = 0;
    let mut status = AlStatus::MaxIter;
    let mut outer = 0;

    while outer < settings.max_outer {
        outer += 1;
        let inner = {
            let mut phi = |v: &[f64]| sub.point(v).ok().map(|p| augmented(&p, &lambda, rho));
            minimize_box(&mut phi, &x, &lo, &hi, settings)
        };
        let Some(inner) = inner else {
            return domain_failure(sub, x, outer, inner_total);
        };
        inner_total += inner.iterations;
        x = inner.x;
        let Ok(p) = sub.point(&x) else {
            return domain_failure(sub, x, outer, inner_total);
        };
        let residual = max_residual(&p.c);
        trace!(
            "al outer {outer}: f = {:.10e}, phi = {:.10e}, residual = {residual:.3e}, rho = {rho:.1e}",
            p.f,
            inner.fx
        );

        let scale = 1.0 + p.f.abs();
        let stationary = (inner.fx - prev_phi).abs() <= 1e-9 * scale
            && (p.f - prev_f).abs() <= 1e-9 * scale;
        stationary_streak = if stationary { stationary_streak + 1 } else { 0 };
        prev_phi = inner.fx;
        prev_f = p.f;

        let feasible = residual <= settings.residual_tol;
        if feasible && (inner.pg_norm <= settings.pg_tol || stationary_streak >= 2) {
            status = AlStatus::Converged;
            break;
        }

        for (l, &c) in lambda.iter_mut().zip(&p.c) {
            *l = (*l + rho * c).max(0.0);
        }
        if residual > settings.required_shrink * prev_residual {
            if rho >= 1e12 && !feasible {
                status = AlStatus::Infeasible;
                break;
            }
            rho = (rho * settings.penalty_growth).min(1e12);
        }
        prev_residual = residual;
    }

    let (f, residual) = sub
        .point(&x)
        .map(|p| (p.f, max_residual(&p.c)))
        .unwrap_or((f64::INFINITY, f64::INFINITY));
    let violation = sub.violation_at(&x, settings.tol).unwrap_or(f64::INFINITY);
    if status == AlStatus::Converged && violation > 0.0 {
        status = AlStatus::Infeasible;
    }
    AlOutcome {
        status,
        x,
        f,
        violation,
        residual,
        outer_iterations: outer,
        inner_iterations: inner_total,
        evals: sub.evals(),
    }
}

fn domain_failure(sub: &Subproblem<'_>, x: Vec<f64>, outer: usize, inner: usize) -> AlOutcome {
    AlOutcome {
        status: AlStatus::DomainError,
        x,
        f: f64::INFINITY,
        violation: f64::INFINITY,
        residual: f64::INFINITY,
        outer_iterations: outer,
        inner_iterations: inner,
        evals: sub.evals(),
    }
}

struct InnerResult {
    x: Vec<f64>,
    fx: f64,
    pg_norm: f64,
    iterations: usize,
}

fn projected_gradient(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((&xi, &gi), (&l, &h))| {
            if (xi <= l && gi > 0.0) || (xi >= h && gi < 0.0) || l == h {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Projected L-BFGS on a box. Returns `None` when the objective cannot be
/// evaluated at the start point or a gradient probe keeps failing.
fn minimize_box<F>(
    f: &mut F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    settings: &AlSettings,
) -> Option<InnerResult>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut g = fd::gradient(f, &x, fx, lo, hi)?;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut pg_norm = f64::INFINITY;
    let mut stall = 0;
    let mut it = 0;

    while it < settings.max_inner {
        let pg = projected_gradient(&x, &g, lo, hi);
        pg_norm = inf_norm(&pg);
        if pg_norm <= settings.pg_tol {
            break;
        }
        let free: Vec<bool> = pg.iter().map(|&v| v != 0.0).collect();

        // Two-loop recursion restricted to the free coordinates.
        let mut q: Vec<f64> = pg.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..n {
                if free[i] {
                    q[i] -= a * y[i];
                }
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = memory.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..n {
                if free[i] {
                    q[i] += s[i] * (a - b);
                }
            }
        }
        let mut d: Vec<f64> = q
            .iter()
            .zip(&free)
            .map(|(&v, &fr)| if fr { -v } else { 0.0 })
            .collect();
        if dot(&d, &g) >= 0.0 {
            d = pg.iter().map(|v| -v).collect();
            memory.clear();
        }

        let mut alpha = if memory.is_empty() {
            (1.0 / inf_norm(&d)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..50 {
            let xn: Vec<f64> = x
                .iter()
                .zip(&d)
                .zip(lo.iter().zip(hi))
                .map(|((&xi, &di), (&l, &h))| (xi + alpha * di).clamp(l, h))
                .collect();
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            if inf_norm(&step) == 0.0 {
                break;
            }
            let decrease = dot(&g, &step);
            if let Some(fnew) = f(&xn) {
                if fnew <= fx + 1e-4 * decrease {
                    accepted = Some((xn, step, fnew));
                    break;
                }
            }
            alpha *= 0.5;
        }
        it += 1;
        let Some((xn, s, fnew)) = accepted else {
            break;
        };
        let gn = fd::gradient(f, &xn, fnew, lo, hi)?;
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if memory.len() == settings.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        stall = if fx - fnew <= 1e-15 * (1.0 + fx.abs()) {
            stall + 1
        } else {
            0
        };
        x = xn;
        fx = fnew;
        g = gn;
        if stall >= 3 {
            break;
        }
    }
    if it == settings.max_inner || pg_norm.is_infinite() {
        pg_norm = inf_norm(&projected_gradient(&x, &g, lo, hi));
    }
    Some(InnerResult {
        x,
        fx,
        pg_norm,
        iterations: it,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_toy(spec: &ProblemSpec, start: &[f64]) -> AlOutcome {
        let free = (0..spec.dim()).collect();
        let sub = Subproblem::new(spec, vec![0.0; spec.dim()], free, 0.99e-2);
        solve(&sub, start, &AlSettings::default())
    }

    #[test]
    fn unconstrained_quadratic() {
        let spec = ProblemSpec::builder("q", 1)
            .var(0.0, 10.0)
            .objective(|x| Ok((x[0] - 3.0).powi(2)))
            .build()
            .unwrap();
        let r = solve_toy(&spec, &[9.0]);
        assert_eq!(r.status, AlStatus::Converged);
        assert!((r.x[0] - 3.0).abs() <= 1e-6, "{:?}", r.x);
    }

    #[test]
    fn circle_equality() {
        let spec = ProblemSpec::builder("circle", 2)
            .vars(2, -2.0, 2.0)
            .objective(|x| Ok(x[0] + x[1]))
            .eq(|x| Ok(x[0] * x[0] + x[1] * x[1] - 1.0))
            .build()
            .unwrap();
        let r = solve_toy(&spec, &[0.5, 0.1]);
        assert_eq!(r.status, AlStatus::Converged);
        assert_eq!(r.violation, 0.0);
        // the band lets the radius grow to sqrt(1.01)
        let lo = -(2.0f64 * 1.01).sqrt();
        let hi = -(2.0f64 * 0.99).sqrt();
        assert!(r.f >= lo - 1e-6 && r.f <= hi, "f = {}", r.f);
        assert!((r.x[0] - r.x[1]).abs() < 1e-3);
    }

    #[test]
    fn active_inequality_and_bound() {
        // min -x - y  s.t. x + 2y <= 4, x <= 3
        let spec = ProblemSpec::builder("lin", 2)
            .var(0.0, 3.0)
            .var(0.0, 5.0)
            .objective(|x| Ok(-x[0] - x[1]))
            .le(|x| Ok(x[0] + 2.0 * x[1] - 4.0))
            .build()
            .unwrap();
        let r = solve_toy(&spec, &[0.0, 0.0]);
        assert_eq!(r.status, AlStatus::Converged);
        assert!((r.x[0] - 3.0).abs() < 1e-4 && (r.x[1] - 0.5).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn infeasible_problem_is_flagged() {
        let spec = ProblemSpec::builder("bad", 1)
            .var(0.0, 1.0)
            .objective(|x| Ok(x[0]))
            .le(|x| Ok(2.0 - x[0]))
            .build()
            .unwrap();
        let r = solve_toy(&spec, &[0.5]);
        assert!(matches!(r.status, AlStatus::Infeasible | AlStatus::MaxIter));
        assert!(r.violation > 0.0);
    }

    #[test]
    fn domain_error_at_start() {
        let spec = ProblemSpec::builder("dom", 1)
            .var(-1.0, 1.0)
            .objective(|x| crate::problem::expr::ln(x[0]))
            .build()
            .unwrap();
        let r = solve_toy(&spec, &[-0.5]);
        assert_eq!(r.status, AlStatus::DomainError);
    }
}
