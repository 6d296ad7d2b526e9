//! Brute-force LP oracle: evaluates every vertex of the feasible polytope.
//!
//! Each vertex is the solution of `n` active constraints picked from the
//! rows and the box faces. Cost grows combinatorially, so this is only for
//! small problems.

use bobd_core::lower::LinearProgram;

/// Feasibility slack used when accepting a candidate vertex.
const FEAS: f64 = 1e-9;

/// Minimum objective and a minimizer, or `None` when no vertex is feasible.
pub fn enumerate_vertices(lp: &LinearProgram) -> Option<(f64, Vec<f64>)> {
    let n = lp.cost.len();
    if n == 0 {
        return Some((0.0, vec![]));
    }
    // Every constraint as a·x <= b, box faces included.
    let mut faces: Vec<(Vec<f64>, f64)> = lp.rows.iter().cloned().zip(lp.rhs.iter().copied()).collect();
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        faces.push((e.clone(), lp.upper[k]));
        e[k] = -1.0;
        faces.push((e, -lp.lower[k]));
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    let mut m = vec![0.0; n * (n + 1)];
    let mut x = vec![0.0; n];
    loop {
        if solve_square(&faces, &pick, &mut m, &mut x) {
            let ok = faces
                .iter()
                .all(|(a, b)| dot(a, &x) <= b + FEAS * (1.0 + b.abs()));
            if ok {
                let f = dot(&lp.cost, &x);
                if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                    best = Some((f, x.clone()));
                }
            }
        }
        if !next_combination(&mut pick, faces.len()) {
            return best;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn next_combination(pick: &mut [usize], m: usize) -> bool {
    let n = pick.len();
    let mut i = n;
    while i > 0 {
        i -= 1;
        if pick[i] < m - n + i {
            pick[i] += 1;
            for j in i + 1..n {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gauss-Jordan with partial pivoting on the picked faces, using `m` as an
/// `n x (n+1)` scratch matrix. Returns false when singular.
fn solve_square(faces: &[(Vec<f64>, f64)], pick: &[usize], m: &mut [f64], x: &mut [f64]) -> bool {
    let n = pick.len();
    let w = n + 1;
    for (r, &i) in pick.iter().enumerate() {
        m[r * w..r * w + n].copy_from_slice(&faces[i].0);
        m[r * w + n] = faces[i].1;
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * w + col].abs().total_cmp(&m[j * w + col].abs()))
            .expect("non-empty range");
        if m[piv * w + col].abs() < 1e-12 {
            return false;
        }
        if piv != col {
            for c in 0..w {
                m.swap(piv * w + c, col * w + c);
            }
        }
        for r in 0..n {
            if r != col {
                let factor = m[r * w + col] / m[col * w + col];
                if factor != 0.0 {
                    for c in col..w {
                        m[r * w + c] -= factor * m[col * w + c];
                    }
                }
            }
        }
    }
    for i in 0..n {
        x[i] = m[i * w + n] / m[i * w + i];
    }
    true
}
