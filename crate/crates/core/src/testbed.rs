//! The ten benchmark problems TP1..TP10 with their level assignments and
//! published reference values.
//!
//! Flat variable layout: base variables `x_1..x_n` first (0-based in code),
//! then `y_1..y_P`, then `z_1..z_Q`.
//!
//! Box bounds left open by the formulations are closed with the tightest
//! bound implied by the constraints together with the other variables'
//! lower bounds:
//!
//! * TP1/TP3/TP4: `x_2 <= 4` (from `x_2 + x_5 <= 4`), `x_4 <= 2`
//!   (from `x_1 + 2 x_4 <= 4`), `x_6 <= 6` (from `x_3 + x_6 <= 6`).
//! * TP6: `x_1 <= 6`, `x_2 <= 6` (from `x_1 + x_2 <= 6`).

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::expr::{ln, pow, sqrt};
use crate::problem::{ProblemBuilder, ProblemSpec, VariablePartition};

pub const PROBLEM_IDS: [&str; 10] = [
    "TP1", "TP2", "TP3", "TP4", "TP5", "TP6", "TP7", "TP8", "TP9", "TP10",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    /// Best known value from the literature.
    BestKnown,
    /// Value originally reported for the bilevel decomposition itself.
    ReportedDecomposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub value: f64,
    pub source: ReferenceSource,
}

/// Whether the scalable blocks exist for a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalableBlocks {
    pub y: bool,
    pub z: bool,
}

impl ScalableBlocks {
    /// Splits a total scalable dimension into `(P, Q)`: `P = ceil(S/2)`,
    /// `Q = floor(S/2)` when both blocks exist, otherwise all of it to `y`.
    pub fn allocate(self, split: usize) -> (usize, usize) {
        match (self.y, self.z) {
            (true, true) => (split.div_ceil(2), split / 2),
            (true, false) => (split, 0),
            (false, true) => (0, split),
            (false, false) => (0, 0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub base_dim: usize,
    pub scalable: ScalableBlocks,
    pub references: Vec<Reference>,
}

/// A catalog problem together with its variable partition.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub spec: ProblemSpec,
    pub partition: VariablePartition,
    pub references: Vec<Reference>,
    lower_affine: bool,
}

impl ProblemInstance {
    pub fn new(
        spec: ProblemSpec,
        partition: VariablePartition,
        references: Vec<Reference>,
        lower_affine: bool,
    ) -> Result<Self> {
        if partition.dim() != spec.dim() {
            return Err(Error::Contract(format!(
                "partition covers {} variables, problem has {}",
                partition.dim(),
                spec.dim()
            )));
        }
        Ok(Self {
            spec,
            partition,
            references,
            lower_affine,
        })
    }

    pub fn id(&self) -> &str {
        self.spec.id()
    }

    /// True when, with the upper variables fixed, the objective and every
    /// constraint are affine in the lower variables.
    pub fn lower_is_affine(&self) -> bool {
        self.lower_affine
    }

    pub fn best_known(&self) -> Option<f64> {
        self.references
            .iter()
            .find(|r| r.source == ReferenceSource::BestKnown)
            .map(|r| r.value)
    }
}

fn reference(best_known: Option<f64>, reported: f64) -> Vec<Reference> {
    let mut refs = Vec::new();
    if let Some(value) = best_known {
        refs.push(Reference {
            value,
            source: ReferenceSource::BestKnown,
        });
    }
    refs.push(Reference {
        value: reported,
        source: ReferenceSource::ReportedDecomposition,
    });
    refs
}

pub fn list_problems() -> Vec<CatalogEntry> {
    let none = ScalableBlocks { y: false, z: false };
    let y = ScalableBlocks { y: true, z: false };
    let yz = ScalableBlocks { y: true, z: true };
    let e = |id, base_dim, scalable, best: Option<f64>, reported| CatalogEntry {
        id,
        base_dim,
        scalable,
        references: reference(best, reported),
    };
    vec![
        e("TP1", 6, none, Some(-11.96), -13.417),
        e("TP2", 7, none, Some(193.724), 189.045),
        e("TP3", 6, none, None, -14.401),
        e("TP4", 6, y, None, -16.695),
        e("TP5", 7, y, None, 141.178),
        e("TP6", 6, yz, Some(-310.0), -310.0),
        e("TP7", 9, yz, None, -385.759),
        e("TP8", 13, y, None, -104.761),
        e("TP9", 8, y, Some(7049.330), 6912.51),
        e("TP10", 5, yz, Some(-30665.538), -30666.0),
    ]
}

pub fn catalog_entry(id: &str) -> Result<CatalogEntry> {
    list_problems()
        .into_iter()
        .find(|e| e.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::UnknownProblem(id.to_string()))
}

/// Builds a catalog problem with `p` copies of the `y` block and `q` of `z`.
pub fn make_problem(id: &str, p: usize, q: usize) -> Result<ProblemInstance> {
    let entry = catalog_entry(id)?;
    if (p > 0 && !entry.scalable.y) || (q > 0 && !entry.scalable.z) {
        return Err(Error::Contract(format!(
            "{} does not support P = {p}, Q = {q}",
            entry.id
        )));
    }
    let (spec, upper, lower_affine) = match entry.id {
        "TP1" => (tp1(false)?, vec![0, 1, 2], true),
        "TP2" => (tp2()?, vec![1, 2, 3], true),
        "TP3" => (tp1(true)?, vec![0, 1, 2], true),
        "TP4" => (tp4(p)?, vec![0, 1, 2], true),
        "TP5" => (tp5(p)?, vec![1, 2, 3], p == 0),
        "TP6" => (tp6(p, q)?, vec![2, 4], false),
        "TP7" => (tp7(p, q)?, vec![7, 8], p == 0 && q == 0),
        "TP8" => (tp8(p)?, vec![0, 1, 2, 3], p == 0),
        "TP9" => (tp9(p)?, vec![0, 1, 2], p == 0),
        "TP10" => (tp10(p, q)?, vec![0, 2, 4], p == 0 && q == 0),
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    let lower = (0..spec.dim()).filter(|i| !upper.contains(i)).collect();
    let partition = VariablePartition::new(spec.dim(), upper, lower)?;
    ProblemInstance::new(spec, partition, entry.references, lower_affine)
}

/// Instance for a total scalable dimension `split`, allocated per
/// [`ScalableBlocks::allocate`].
pub fn make_problem_split(id: &str, split: usize) -> Result<ProblemInstance> {
    let (p, q) = catalog_entry(id)?.scalable.allocate(split);
    if split > 0 && p + q == 0 {
        return Err(Error::Contract(format!("{id} is not scalable")));
    }
    make_problem(id, p, q)
}

// Shared pieces of TP1/TP3/TP4.
fn tp1_box(b: ProblemBuilder) -> ProblemBuilder {
    b.var(0.0, 3.0)
        .var(0.0, 4.0)
        .var(0.0, 4.0)
        .var(0.0, 2.0)
        .var(0.0, 2.0)
        .var(0.0, 6.0)
}

fn tp1_constraints(b: ProblemBuilder) -> ProblemBuilder {
    b.eq(|x| Ok(x[1] - 3.0 * x[0] - 3.0 * x[3]))
        .eq(|x| Ok(x[2] - 2.0 * x[1] - 2.0 * x[4]))
        .eq(|x| Ok(4.0 * x[3] - x[5]))
        .le(|x| Ok(x[0] + 2.0 * x[3] - 4.0))
        .le(|x| Ok(x[1] + x[4] - 4.0))
        .le(|x| Ok(x[2] + x[5] - 6.0))
}

fn tp1_objective(x: &[f64]) -> Result<f64, crate::error::DomainFault> {
    Ok(pow(x[0], 0.6)? + pow(x[1], 0.6)? + pow(x[2], 0.4)? - 4.0 * x[2] + 2.0 * x[3]
        + 5.0 * x[4]
        - x[5])
}

fn tp1(extended: bool) -> Result<ProblemSpec> {
    let id = if extended { "TP3" } else { "TP1" };
    let b = tp1_constraints(tp1_box(ProblemSpec::builder(id, 6)));
    let b = if extended {
        b.objective(|x| {
            Ok(tp1_objective(x)? + x[2] * x[2] / 16.0 - 2.0 * (2.0 * PI * x[1]).cos())
        })
    } else {
        b.objective(tp1_objective)
    };
    b.build()
}

fn tp4(p: usize) -> Result<ProblemSpec> {
    let mut b = tp1_constraints(tp1_box(ProblemSpec::builder("TP4", 6)))
        .vars(p, 1.0, 5.0)
        .scalable(p, 0)
        .objective(move |x| {
            let x1_06 = pow(x[0], 0.6)?;
            let ys: f64 = x[6..6 + p].iter().map(|y| y * x1_06).sum();
            Ok(tp1_objective(x)? + x[2] * x[2] / 16.0
                - x[1] * x[1] / 16.0
                - 2.0 * (2.0 * PI * x[2]).cos()
                - 2.0 * (2.0 * PI * x[1]).cos()
                + ys)
        });
    for k in 0..p {
        b = b.le(move |x| Ok(sqrt(x[0] + x[1] + x[2])? - x[6 + k]));
    }
    b.build()
}

fn tp2_box(b: ProblemBuilder) -> ProblemBuilder {
    b.var(0.0, 1000.0)
        .var(0.0, 40.0)
        .var(0.0, 40.0)
        .var(100.0, 300.0)
        .var(6.3, 6.7)
        .var(5.9, 6.4)
        .var(4.5, 6.25)
}

fn tp2_constraints(b: ProblemBuilder) -> ProblemBuilder {
    b.le(|x| Ok(35.0 * pow(x[1], 0.6)? + 35.0 * pow(x[2], 0.6)? - x[0]))
        .eq(|x| {
            Ok(-300.0 * x[2] + 7500.0 * x[4] - 7500.0 * x[5] - 25.0 * x[3] * x[4]
                + 25.0 * x[3] * x[5]
                + x[2] * x[3])
        })
        .eq(|x| {
            Ok(100.0 * x[1] + 155.365 * x[3] + 2500.0 * x[6]
                - x[1] * x[3]
                - 25.0 * x[3] * x[6]
                - 15536.5)
        })
        .eq(|x| Ok(-x[4] + ln(-x[3] + 900.0)?))
        .eq(|x| Ok(-x[5] + ln(x[3] + 300.0)?))
        .eq(|x| Ok(-x[6] + ln(-2.0 * x[3] + 700.0)?))
}

fn tp2() -> Result<ProblemSpec> {
    tp2_constraints(tp2_box(ProblemSpec::builder("TP2", 7)))
        .objective(|x| Ok(x[0]))
        .build()
}

fn tp5(p: usize) -> Result<ProblemSpec> {
    let mut b = tp2_constraints(tp2_box(ProblemSpec::builder("TP5", 7)))
        .vars(p, 10.0, 30.0)
        .scalable(p, 0)
        .objective(move |x| {
            let ys: f64 = x[7..7 + p].iter().map(|y| y * y / x[3]).sum();
            Ok(x[0] - 50.0 * (2.0 * PI * x[3]).cos() + ys)
        });
    for k in 0..p {
        b = b.le(move |x| Ok(pow(x[3], 0.2)? + x[4] + x[5] - x[7 + k]));
    }
    b.build()
}

fn tp6(p: usize, q: usize) -> Result<ProblemSpec> {
    let sq = |v: f64| v * v;
    let mut b = ProblemSpec::builder("TP6", 6)
        .var(0.0, 6.0)
        .var(0.0, 6.0)
        .var(1.0, 5.0)
        .var(0.0, 6.0)
        .var(1.0, 5.0)
        .var(0.0, 10.0)
        .vars(p, 0.0, 5.0)
        .vars(q, 0.0, 5.0)
        .scalable(p, q)
        .objective(move |x| {
            let ys: f64 = x[6..6 + p].iter().map(|y| sq(x[2] - y)).sum();
            let zs: f64 = x[6 + p..6 + p + q].iter().map(|z| sq(x[4] - z)).sum();
            Ok(-25.0 * sq(x[0] - 2.0)
                - sq(x[1] - 2.0)
                - sq(x[2] - 1.0)
                - sq(x[3] - 4.0)
                - sq(x[4] - 1.0)
                - sq(x[5] - 4.0)
                + ys
                - zs)
        })
        .le(move |x| Ok(-sq(x[2] - 3.0) - x[3] + 4.0))
        .le(move |x| Ok(-sq(x[4] - 3.0) - x[5] + 4.0))
        .le(|x| Ok(-x[0] - x[1] + 2.0))
        .le(|x| Ok(x[0] - 3.0 * x[1] - 2.0))
        .le(|x| Ok(x[1] - x[0] - 2.0))
        .le(|x| Ok(x[0] + x[1] - 6.0));
    for k in 0..p {
        b = b.le(move |x| Ok(x[6 + k] - x[2] + 1.0));
    }
    for k in 0..q {
        b = b.le(move |x| Ok(sq(x[6 + p + k]) - sq(x[2]) - sq(x[4])));
    }
    b.build()
}

fn tp7(p: usize, q: usize) -> Result<ProblemSpec> {
    let sq = |v: f64| v * v;
    let mut b = ProblemSpec::builder("TP7", 9)
        .var(0.0, 300.0)
        .var(0.0, 300.0)
        .var(0.0, 100.0)
        .var(0.0, 200.0)
        .var(0.0, 100.0)
        .var(0.0, 300.0)
        .var(0.0, 100.0)
        .var(0.0, 200.0)
        .var(0.01, 0.03)
        .vars(p, 0.0, 1.0)
        .vars(q, 1.0, 200.0)
        .scalable(p, q)
        .objective(move |x| {
            let ys: f64 = x[9..9 + p].iter().map(|y| sq(y - x[8])).sum();
            let zs: f64 = x[9 + p..9 + p + q].iter().map(|z| sq(z - x[7])).sum();
            Ok(6.0 * x[0] + 16.0 * x[1] - 9.0 * x[4] + 10.0 * (x[5] + x[6]) - 15.0 * x[7]
                + sq(x[8])
                + 50.0 * (PI * x[8]).cos()
                - 25.0 * (PI * x[7]).cos()
                - ln(x[7] - x[8])?
                - ys
                + zs)
        })
        .eq(|x| Ok(x[0] + x[1] - x[2] - x[3]))
        .eq(|x| Ok(x[2] + x[5] - x[4]))
        .eq(|x| Ok(x[3] + x[6] - x[7]))
        .eq(|x| Ok(0.03 * x[0] + 0.01 * x[1] - x[2] * x[8] - x[3] * x[8]))
        .le(|x| Ok(x[2] * x[8] + 0.02 * x[5] - 0.025 * x[4]))
        .le(|x| Ok(x[3] * x[8] + 0.02 * x[6] - 0.015 * x[7]));
    for k in 0..p {
        b = b.le(move |x| Ok(sq(x[8]) - sq(x[9 + k])));
    }
    for k in 0..q {
        b = b.le(move |x| Ok(sq(x[7]) - sq(x[9 + p + k])));
    }
    b.build()
}

fn tp8(p: usize) -> Result<ProblemSpec> {
    let cos_sum = |x: &[f64]| x[..4].iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>();
    let mut b = ProblemSpec::builder("TP8", 13)
        .vars(4, 0.0, 3.0)
        .vars(5, 0.0, 1.0)
        .vars(3, 0.0, 100.0)
        .var(0.0, 1.0)
        .vars(p, -5.0, 5.0)
        .scalable(p, 0)
        .objective(move |x| {
            let s1: f64 = x[..4].iter().sum();
            let s2: f64 = x[..4].iter().map(|v| v * v).sum();
            let rest: f64 = x[4..13].iter().sum();
            let c = cos_sum(x);
            let ys: f64 = x[13..13 + p].iter().map(|y| y * y + c).sum();
            Ok(5.0 * s1 - 5.0 * s2 - rest - 20.0 * (-0.1 * s2.sqrt()).exp() - (0.25 * c).exp()
                + ys)
        })
        .le(|x| Ok(2.0 * x[0] + 2.0 * x[1] + x[9] + x[10] - 10.0))
        .le(|x| Ok(2.0 * x[0] + 2.0 * x[2] + x[9] + x[11] - 10.0))
        .le(|x| Ok(2.0 * x[1] + 2.0 * x[2] + x[10] + x[11] - 10.0))
        .le(|x| Ok(x[9] - 8.0 * x[0]))
        .le(|x| Ok(x[10] - 8.0 * x[1]))
        .le(|x| Ok(x[11] - 8.0 * x[2]))
        .le(|x| Ok(x[9] - x[4] - 2.0 * x[3]))
        .le(|x| Ok(x[10] - x[6] - 2.0 * x[5]))
        .le(|x| Ok(x[11] - x[8] - 2.0 * x[7]));
    for k in 0..p {
        b = b.le(move |x| Ok(cos_sum(x) - x[13 + k]));
    }
    b.build()
}

fn tp9(p: usize) -> Result<ProblemSpec> {
    let mut b = ProblemSpec::builder("TP9", 8)
        .var(100.0, 10000.0)
        .vars(2, 1000.0, 10000.0)
        .vars(5, 10.0, 1000.0)
        .vars(p, -FRAC_PI_2, FRAC_PI_2)
        .scalable(p, 0)
        .objective(move |x| {
            let s = x[0] + x[1] + x[2];
            let wave = 15.0 * (2.0 * PI * s).cos();
            let ys: f64 = x[8..8 + p].iter().map(|y| (y.tan() - wave).powi(2)).sum();
            Ok(s + ys)
        })
        .le(|x| Ok(0.0025 * x[3] + 0.0025 * x[5] - 1.0))
        .le(|x| Ok(0.0025 * x[4] + 0.0025 * x[6] - 0.0025 * x[3] - 1.0))
        .le(|x| Ok(0.01 * x[7] - 0.01 * x[4] - 1.0))
        .le(|x| Ok(-x[0] * x[5] + 100.0 * x[0] + 833.33 * x[3] - 83333.33))
        .le(|x| Ok(-x[1] * x[6] + 1250.0 * x[4] - 1250.0 * x[3] + x[1] * x[3]))
        .le(|x| Ok(-x[2] * x[7] - 2500.0 * x[4] + x[2] * x[4] + 1_250_000.0));
    for k in 0..p {
        b = b.le(move |x| Ok(x[8 + k].tan() - ln(x[0] + x[1] + x[2])?));
    }
    for k in 0..p {
        b = b.le(move |x| Ok(-x[8 + k].tan() - ln(x[0] + x[1] + x[2])?));
    }
    b.build()
}

fn tp10(p: usize, q: usize) -> Result<ProblemSpec> {
    let mut b = ProblemSpec::builder("TP10", 5)
        .var(78.0, 102.0)
        .var(33.0, 45.0)
        .vars(3, 27.0, 45.0)
        .vars(p, 0.0, 5.0)
        .vars(q, -5.0, 5.0)
        .scalable(p, q)
        .objective(move |x| {
            let ys: f64 = x[5..5 + p].iter().map(|y| (y - x[0] - x[2]).powi(2)).sum();
            let zs: f64 = x[5 + p..5 + p + q]
                .iter()
                .map(|z| (2.0 * PI * z).cos())
                .sum();
            Ok(37.293239 * x[0] + 0.8356891 * x[0] * x[4] + 5.3578547 * x[2] * x[2]
                - 40792.14
                + ys
                - 150.0 * zs)
        })
        .le(|x| {
            Ok(0.0056858 * x[1] * x[4] - 0.0022053 * x[2] * x[4] + 0.0006262 * x[0] * x[3]
                - 6.665593)
        })
        .le(|x| {
            Ok(-0.0056858 * x[1] * x[4] + 0.0022053 * x[2] * x[4]
                - 0.0006262 * x[0] * x[3]
                - 85.334407)
        })
        .le(|x| {
            Ok(0.0071317 * x[1] * x[4] + 0.0021813 * x[2] * x[2] + 0.0029955 * x[0] * x[1]
                - 29.48751)
        })
        .le(|x| {
            Ok(-0.0071317 * x[1] * x[4] - 0.0021813 * x[2] * x[2] - 0.0029955 * x[0] * x[1]
                + 9.48751)
        })
        .le(|x| {
            Ok(0.0047026 * x[2] * x[4] + 0.0019085 * x[2] * x[3] + 0.0012547 * x[0] * x[2]
                - 15.699039)
        })
        .le(|x| {
            Ok(-0.0047026 * x[2] * x[4] - 0.0019085 * x[2] * x[3] - 0.0012547 * x[0] * x[2]
                + 10.699039)
        });
    for k in 0..p {
        b = b.le(move |x| Ok(x[5 + k] - ln(x[0] + x[2] + 1.0)?));
    }
    for k in 0..q {
        b = b.le(move |x| {
            Ok(x[5 + p + k].powi(3) - x[0].powi(3) - x[2].powi(3) - x[4].powi(3))
        });
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::DEFAULT_TOL;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PAPER_POINT: [f64; 6] = [0.1622, 1.9951, 4.0, 0.4998, 0.0002, 2.0088];

    fn random_point(spec: &ProblemSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
        spec.lower_bounds()
            .iter()
            .zip(spec.upper_bounds())
            .map(|(&lo, &hi)| if lo == hi { lo } else { rng.gen_range(lo..hi) })
            .collect()
    }

    #[test]
    fn tp1_published_point() {
        let tp1 = make_problem("TP1", 0, 0).unwrap();
        let r = tp1.spec.evaluate(&PAPER_POINT, DEFAULT_TOL).unwrap();
        assert!((r.f + 13.417).abs() <= 5e-3, "f = {}", r.f);
        assert!(r.h.iter().all(|h| h.abs() <= 1e-2));
        assert!(r.g.iter().all(|&g| g <= 1e-2));
        assert_eq!(r.violation, 0.0);
    }

    #[test]
    fn tp1_origin() {
        let tp1 = make_problem("TP1", 0, 0).unwrap();
        let r = tp1.spec.evaluate(&[0.0; 6], DEFAULT_TOL).unwrap();
        assert_eq!(r.f, 0.0);
        assert_eq!(r.h, vec![0.0, 0.0, 0.0]);
        assert!(r.g.iter().all(|&g| g <= 0.0));
        assert_eq!(r.violation, 0.0);
    }

    #[test]
    fn tp1_shape_and_partition() {
        let tp1 = make_problem("TP1", 0, 0).unwrap();
        assert_eq!(tp1.spec.dim(), 6);
        assert_eq!(tp1.spec.num_equalities(), 3);
        assert_eq!(tp1.spec.num_inequalities(), 3);
        assert_eq!(tp1.partition.upper(), &[0, 1, 2]);
        assert_eq!(tp1.partition.lower(), &[3, 4, 5]);
    }

    #[test]
    fn tp1_clip_upper_bound() {
        let tp1 = make_problem("TP1", 0, 0).unwrap();
        let x = tp1.spec.clip_to_bounds(&[5.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(x[0], 3.0);
    }

    #[test]
    fn tp9_clip_scalable_block() {
        let tp9 = make_problem("TP9", 1, 0).unwrap();
        let mut x = tp9.spec.lower_bounds().to_vec();
        x[8] = 2.0;
        assert_eq!(tp9.spec.clip_to_bounds(&x)[8], FRAC_PI_2);
    }

    #[test]
    fn tp6_scaled_shape() {
        let tp6 = make_problem("TP6", 10, 10).unwrap();
        assert_eq!(tp6.spec.dim(), 26);
        assert_eq!(tp6.spec.num_inequalities(), 26);
        assert_eq!(tp6.partition.upper(), &[2, 4]);
        let x: Vec<f64> = tp6
            .spec
            .lower_bounds()
            .iter()
            .zip(tp6.spec.upper_bounds())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let r = tp6.spec.evaluate(&x, DEFAULT_TOL).unwrap();
        // y_p - x3 + 1 at y = 2.5, x3 = 3
        for k in 0..10 {
            assert!((r.g[6 + k] - 0.5).abs() < 1e-12);
        }
        // z_q^2 - x3^2 - x5^2 at z = 2.5, x3 = x5 = 3
        for k in 0..10 {
            assert!((r.g[16 + k] - (6.25 - 18.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn tp8_shape() {
        let tp8 = make_problem("TP8", 0, 0).unwrap();
        assert_eq!(tp8.spec.dim(), 13);
        assert_eq!(tp8.spec.lower_bounds()[12], 0.0);
        assert_eq!(tp8.spec.upper_bounds()[12], 1.0);
        assert_eq!(tp8.spec.num_inequalities(), 9);
        assert_eq!(tp8.spec.num_equalities(), 0);
    }

    #[test]
    fn catalog_listing() {
        let cat = list_problems();
        assert_eq!(cat.len(), 10);
        let ids: Vec<_> = cat.iter().map(|e| e.id).collect();
        assert_eq!(ids, PROBLEM_IDS);
        let tp1 = &cat[0];
        assert!(tp1.references.contains(&Reference {
            value: -11.96,
            source: ReferenceSource::BestKnown
        }));
        assert!(tp1.references.contains(&Reference {
            value: -13.417,
            source: ReferenceSource::ReportedDecomposition
        }));
        assert_eq!(
            make_problem("TP10", 0, 0).unwrap().best_known(),
            Some(-30665.538)
        );
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(make_problem("TP11", 0, 0), Err(Error::UnknownProblem(_))));
        assert!(matches!(make_problem("TP1", 1, 0), Err(Error::Contract(_))));
        assert!(matches!(make_problem("TP8", 0, 2), Err(Error::Contract(_))));
        assert!(matches!(make_problem("TP3", 0, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn every_partition_is_well_formed() {
        for id in PROBLEM_IDS {
            let entry = catalog_entry(id).unwrap();
            let (p, q) = entry.scalable.allocate(7);
            for (p, q) in [(0, 0), (p, q)] {
                let inst = make_problem(id, p, q).unwrap();
                let dim = inst.spec.dim();
                assert_eq!(dim, entry.base_dim + p + q);
                let mut all: Vec<usize> = inst
                    .partition
                    .upper()
                    .iter()
                    .chain(inst.partition.lower())
                    .copied()
                    .collect();
                all.sort_unstable();
                assert_eq!(all, (0..dim).collect::<Vec<_>>());
                assert!(!inst.partition.upper().is_empty());
                assert!(!inst.partition.lower().is_empty());
                // scalable blocks live at the lower level
                for i in entry.base_dim..dim {
                    assert!(inst.partition.lower().contains(&i));
                }
            }
        }
    }

    #[test]
    fn split_allocation() {
        assert_eq!(make_problem_split("TP8", 20).unwrap().spec.dim(), 33);
        let tp6 = make_problem_split("TP6", 50).unwrap();
        assert_eq!((tp6.spec.scalable_p(), tp6.spec.scalable_q()), (25, 25));
        let tp7 = make_problem_split("TP7", 5).unwrap();
        assert_eq!((tp7.spec.scalable_p(), tp7.spec.scalable_q()), (3, 2));
        assert!(make_problem_split("TP2", 20).is_err());
    }

    #[test]
    fn tp3_extends_tp1() {
        let tp1 = make_problem("TP1", 0, 0).unwrap();
        let tp3 = make_problem("TP3", 0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = random_point(&tp1.spec, &mut rng);
            let d = tp3.spec.objective(&x).unwrap() - tp1.spec.objective(&x).unwrap();
            let expected = x[2] * x[2] / 16.0 - 2.0 * (2.0 * PI * x[1]).cos();
            assert!((d - expected).abs() < 1e-12);
        }
        let mut x = random_point(&tp1.spec, &mut rng);
        x[1] = 0.0;
        x[2] = 0.0;
        let d = tp3.spec.objective(&x).unwrap() - tp1.spec.objective(&x).unwrap();
        assert_eq!(d, -2.0);
    }

    /// Scaled instance with every scalable sum term removed by hand.
    fn strip_scalable(inst: &ProblemInstance, x: &[f64]) -> f64 {
        let base = &x[..inst.spec.base_dim()];
        let pi = PI;
        match inst.id() {
            "TP4" => {
                tp1_objective(base).unwrap() + base[2] * base[2] / 16.0
                    - base[1] * base[1] / 16.0
                    - 2.0 * (2.0 * pi * base[2]).cos()
                    - 2.0 * (2.0 * pi * base[1]).cos()
            }
            "TP5" => base[0] - 50.0 * (2.0 * pi * base[3]).cos(),
            "TP6" => {
                let s = |v: f64| v * v;
                -25.0 * s(base[0] - 2.0)
                    - s(base[1] - 2.0)
                    - s(base[2] - 1.0)
                    - s(base[3] - 4.0)
                    - s(base[4] - 1.0)
                    - s(base[5] - 4.0)
            }
            "TP7" => {
                6.0 * base[0] + 16.0 * base[1] - 9.0 * base[4] + 10.0 * (base[5] + base[6])
                    - 15.0 * base[7]
                    + base[8] * base[8]
                    + 50.0 * (pi * base[8]).cos()
                    - 25.0 * (pi * base[7]).cos()
                    - (base[7] - base[8]).ln()
            }
            "TP8" => {
                let s1: f64 = base[..4].iter().sum();
                let s2: f64 = base[..4].iter().map(|v| v * v).sum();
                let c: f64 = base[..4].iter().map(|v| (2.0 * pi * v).cos()).sum();
                5.0 * s1 - 5.0 * s2 - base[4..13].iter().sum::<f64>()
                    - 20.0 * (-0.1 * s2.sqrt()).exp()
                    - (0.25 * c).exp()
            }
            "TP9" => base[0] + base[1] + base[2],
            "TP10" => {
                37.293239 * base[0] + 0.8356891 * base[0] * base[4]
                    + 5.3578547 * base[2] * base[2]
                    - 40792.14
            }
            other => panic!("{other} is not scalable"),
        }
    }

    #[test]
    fn scaling_is_consistent_with_base_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for id in ["TP4", "TP5", "TP6", "TP7", "TP8", "TP9", "TP10"] {
            let base = make_problem(id, 0, 0).unwrap();
            let scaled = make_problem_split(id, 6).unwrap();
            for _ in 0..50 {
                let mut xs = random_point(&scaled.spec, &mut rng);
                if id == "TP7" {
                    xs[7] = xs[7].max(1.0);
                }
                let xb = &xs[..base.spec.dim()];
                let fb = base.spec.objective(xb).unwrap();
                assert!((fb - strip_scalable(&scaled, &xs)).abs() <= 1e-9 * (1.0 + fb.abs()));
                let rb = base.spec.evaluate(xb, DEFAULT_TOL).unwrap();
                let rs = scaled.spec.evaluate(&xs, DEFAULT_TOL).unwrap();
                assert_eq!(rb.g[..], rs.g[..rb.g.len()]);
                assert_eq!(rb.h, rs.h);
            }
        }
    }

    #[test]
    fn tp7_log_domain_is_reported() {
        let tp7 = make_problem("TP7", 0, 0).unwrap();
        let mut x = tp7.spec.lower_bounds().to_vec();
        x[7] = 0.0;
        x[8] = 0.02;
        assert!(matches!(
            tp7.spec.evaluate(&x, DEFAULT_TOL),
            Err(Error::Domain { site: crate::error::Site::Objective, .. })
        ));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for id in PROBLEM_IDS {
            let inst = make_problem(id, 0, 0).unwrap();
            let mut x = random_point(&inst.spec, &mut rng);
            if id == "TP7" {
                x[7] = 50.0;
            }
            let a = inst.spec.evaluate(&x, DEFAULT_TOL).unwrap();
            let b = inst.spec.evaluate(&x, DEFAULT_TOL).unwrap();
            assert_eq!(a.f.to_bits(), b.f.to_bits());
            assert_eq!(a, b);
        }
    }
}
