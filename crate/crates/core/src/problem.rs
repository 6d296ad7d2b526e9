//! Box-bounded single-level problems, their evaluation, and the
//! upper/lower variable split used by the decomposition.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{DomainFault, Error, Result, Site};

/// Default feasibility tolerance applied to every constraint.
pub const DEFAULT_TOL: f64 = 1e-2;

/// A pure scalar expression over the full decision vector.
pub type Expr = Arc<dyn Fn(&[f64]) -> Result<f64, DomainFault> + Send + Sync>;

/// Domain-checked elementary functions for writing [`Expr`] bodies.
pub mod expr {
    use crate::error::DomainFault;

    pub fn pow(base: f64, exponent: f64) -> Result<f64, DomainFault> {
        if base < 0.0 && exponent.fract() != 0.0 {
            return Err(DomainFault("fractional power of a negative value"));
        }
        Ok(base.powf(exponent))
    }

    pub fn ln(v: f64) -> Result<f64, DomainFault> {
        if v <= 0.0 {
            return Err(DomainFault("logarithm of a non-positive value"));
        }
        Ok(v.ln())
    }

    pub fn sqrt(v: f64) -> Result<f64, DomainFault> {
        if v < 0.0 {
            return Err(DomainFault("square root of a negative value"));
        }
        Ok(v.sqrt())
    }
}

/// A constrained single-level problem: minimize `F(x)` subject to
/// `g_i(x) <= 0`, `h_j(x) = 0` and box bounds.
#[derive(Clone)]
pub struct ProblemSpec {
    id: String,
    base_dim: usize,
    lower_bounds: Vec<f64>,
    upper_bounds: Vec<f64>,
    objective: Expr,
    inequalities: Vec<Expr>,
    equalities: Vec<Expr>,
    scalable_p: usize,
    scalable_q: usize,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("id", &self.id)
            .field("dim", &self.dim())
            .field("inequalities", &self.inequalities.len())
            .field("equalities", &self.equalities.len())
            .field("scalable_p", &self.scalable_p)
            .field("scalable_q", &self.scalable_q)
            .finish()
    }
}

#[derive(Clone)]
pub struct ProblemBuilder {
    id: String,
    base_dim: usize,
    lower_bounds: Vec<f64>,
    upper_bounds: Vec<f64>,
    objective: Option<Expr>,
    inequalities: Vec<Expr>,
    equalities: Vec<Expr>,
    scalable_p: usize,
    scalable_q: usize,
}

impl ProblemBuilder {
    /// Appends one variable with the given box.
    pub fn var(mut self, lo: f64, hi: f64) -> Self {
        self.lower_bounds.push(lo);
        self.upper_bounds.push(hi);
        self
    }

    pub fn vars(mut self, count: usize, lo: f64, hi: f64) -> Self {
        for _ in 0..count {
            self = self.var(lo, hi);
        }
        self
    }

    pub fn scalable(mut self, p: usize, q: usize) -> Self {
        self.scalable_p = p;
        self.scalable_q = q;
        self
    }

    pub fn objective<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, DomainFault> + Send + Sync + 'static,
    {
        self.objective = Some(Arc::new(f));
        self
    }

    /// Adds `g(x) <= 0`.
    pub fn le<F>(mut self, g: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, DomainFault> + Send + Sync + 'static,
    {
        self.inequalities.push(Arc::new(g));
        self
    }

    /// Adds `h(x) = 0`.
    pub fn eq<F>(mut self, h: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, DomainFault> + Send + Sync + 'static,
    {
        self.equalities.push(Arc::new(h));
        self
    }

    pub fn build(self) -> Result<ProblemSpec> {
        let dim = self.lower_bounds.len();
        if dim != self.base_dim + self.scalable_p + self.scalable_q {
            return Err(Error::Contract(format!(
                "{}: {} variables declared, expected {} + {} + {}",
                self.id, dim, self.base_dim, self.scalable_p, self.scalable_q
            )));
        }
        for (i, (lo, hi)) in self.lower_bounds.iter().zip(&self.upper_bounds).enumerate() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Contract(format!(
                    "{}: invalid bounds [{lo}, {hi}] on variable {i}",
                    self.id
                )));
            }
        }
        let objective = self
            .objective
            .ok_or_else(|| Error::Contract(format!("{}: missing objective", self.id)))?;
        Ok(ProblemSpec {
            id: self.id,
            base_dim: self.base_dim,
            lower_bounds: self.lower_bounds,
            upper_bounds: self.upper_bounds,
            objective,
            inequalities: self.inequalities,
            equalities: self.equalities,
            scalable_p: self.scalable_p,
            scalable_q: self.scalable_q,
        })
    }
}

/// Objective value, constraint residuals and aggregate violation at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub f: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub violation: f64,
}

impl EvaluationResult {
    pub fn is_feasible(&self) -> bool {
        self.violation == 0.0
    }
}

impl ProblemSpec {
    pub fn builder(id: impl Into<String>, base_dim: usize) -> ProblemBuilder {
        ProblemBuilder {
            id: id.into(),
            base_dim,
            lower_bounds: Vec::new(),
            upper_bounds: Vec::new(),
            objective: None,
            inequalities: Vec::new(),
            equalities: Vec::new(),
            scalable_p: 0,
            scalable_q: 0,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.lower_bounds.len()
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn scalable_p(&self) -> usize {
        self.scalable_p
    }

    pub fn scalable_q(&self) -> usize {
        self.scalable_q
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower_bounds
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper_bounds
    }

    pub fn num_inequalities(&self) -> usize {
        self.inequalities.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.equalities.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        call(&self.objective, x, Site::Objective)
    }

    pub fn inequality(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        call(&self.inequalities[i], x, Site::Inequality(i))
    }

    pub fn equality(&self, j: usize, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        call(&self.equalities[j], x, Site::Equality(j))
    }

    /// Evaluates the objective and every constraint at `x`.
    ///
    /// `x` must already lie inside the box; see [`ProblemSpec::clip_to_bounds`].
    pub fn evaluate(&self, x: &[f64], tol: f64) -> Result<EvaluationResult> {
        self.check_dim(x)?;
        let f = call(&self.objective, x, Site::Objective)?;
        let g = self
            .inequalities
            .iter()
            .enumerate()
            .map(|(i, e)| call(e, x, Site::Inequality(i)))
            .collect::<Result<Vec<_>>>()?;
        let h = self
            .equalities
            .iter()
            .enumerate()
            .map(|(j, e)| call(e, x, Site::Equality(j)))
            .collect::<Result<Vec<_>>>()?;
        let violation = violation(&g, &h, tol);
        Ok(EvaluationResult { f, g, h, violation })
    }

    pub fn clip_to_bounds(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower_bounds.iter().zip(&self.upper_bounds))
            .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower_bounds.iter().zip(&self.upper_bounds))
                .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }
}

fn call(e: &Expr, x: &[f64], site: Site) -> Result<f64> {
    match e(x) {
        Ok(v) if v.is_nan() => Err(Error::Domain {
            site,
            fault: DomainFault("expression produced NaN"),
        }),
        Ok(v) => Ok(v),
        Err(fault) => Err(Error::Domain { site, fault }),
    }
}

/// Total excess of the residuals beyond `tol`.
///
/// Zero exactly when every `g_i <= tol` and every `|h_j| <= tol`.
pub fn violation(g: &[f64], h: &[f64], tol: f64) -> f64 {
    let ineq: f64 = g.iter().map(|&gi| (gi - tol).max(0.0)).sum();
    let eq: f64 = h.iter().map(|&hj| (hj.abs() - tol).max(0.0)).sum();
    ineq + eq
}

/// Disjoint, jointly exhaustive split of the variable indices into the
/// upper (evolutionary) and lower (classical) levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariablePartition {
    upper: Vec<usize>,
    lower: Vec<usize>,
}

impl VariablePartition {
    pub fn new(dim: usize, upper: Vec<usize>, lower: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; dim];
        for &i in upper.iter().chain(&lower) {
            if i >= dim {
                return Err(Error::Contract(format!("partition index {i} out of range 0..{dim}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Contract(format!("partition index {i} assigned twice")));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Contract(format!("partition misses index {missing}")));
        }
        Ok(Self { upper, lower })
    }

    pub fn upper(&self) -> &[usize] {
        &self.upper
    }

    pub fn lower(&self) -> &[usize] {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.upper.len() + self.lower.len()
    }

    pub fn split(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok((
            self.upper.iter().map(|&i| x[i]).collect(),
            self.lower.iter().map(|&i| x[i]).collect(),
        ))
    }

    pub fn merge(&self, x_upper: &[f64], x_lower: &[f64]) -> Result<Vec<f64>> {
        if x_upper.len() != self.upper.len() {
            return Err(Error::DimensionMismatch {
                expected: self.upper.len(),
                found: x_upper.len(),
            });
        }
        if x_lower.len() != self.lower.len() {
            return Err(Error::DimensionMismatch {
                expected: self.lower.len(),
                found: x_lower.len(),
            });
        }
        let mut x = vec![0.0; self.dim()];
        for (&i, &v) in self.upper.iter().zip(x_upper) {
            x[i] = v;
        }
        for (&i, &v) in self.lower.iter().zip(x_lower) {
            x[i] = v;
        }
        Ok(x)
    }

    /// Bounds of the variables at one level, in index-list order.
    pub fn level_bounds(&self, spec: &ProblemSpec, level: Level) -> (Vec<f64>, Vec<f64>) {
        let idx = match level {
            Level::Upper => &self.upper,
            Level::Lower => &self.lower,
        };
        (
            idx.iter().map(|&i| spec.lower_bounds()[i]).collect(),
            idx.iter().map(|&i| spec.upper_bounds()[i]).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Upper,
    Lower,
}
