//! Finite-difference gradients inside a box.

/// Relative/absolute step used for coordinate `v`.
pub fn step_for(v: f64) -> f64 {
    1e-6f64.max(1e-6 * v.abs())
}

/// Central-difference gradient of `f` at `x`, staying inside `[lo, hi]`.
///
/// Near a bound the probe switches to a one-sided difference. If a probe
/// fails (returns `None`), the step is shrunk tenfold up to three times
/// before the coordinate is reported as failing.
pub fn gradient<F>(f: &mut F, x: &[f64], fx: f64, lo: &[f64], hi: &[f64]) -> Option<Vec<f64>>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    gradient_with_step(f, x, fx, lo, hi, step_for)
}

pub fn gradient_with_step<F, S>(
    f: &mut F,
    x: &[f64],
    fx: f64,
    lo: &[f64],
    hi: &[f64],
    step: S,
) -> Option<Vec<f64>>
where
    F: FnMut(&[f64]) -> Option<f64>,
    S: Fn(f64) -> f64,
{
    let mut probe = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        if lo[i] == hi[i] {
            continue;
        }
        let mut h = step(x[i]);
        let mut done = false;
        for _ in 0..4 {
            let fwd = x[i] + h <= hi[i];
            let bwd = x[i] - h >= lo[i];
            let d = match (fwd, bwd) {
                (true, true) => {
                    probe[i] = x[i] + h;
                    let fp = f(&probe);
                    probe[i] = x[i] - h;
                    let fm = f(&probe);
                    match (fp, fm) {
                        (Some(fp), Some(fm)) => Some((fp - fm) / (2.0 * h)),
                        _ => None,
                    }
                }
                (true, false) => {
                    probe[i] = x[i] + h;
                    f(&probe).map(|fp| (fp - fx) / h)
                }
                (false, true) => {
                    probe[i] = x[i] - h;
                    f(&probe).map(|fm| (fx - fm) / h)
                }
                (false, false) => {
                    // Box narrower than the step: difference across it.
                    probe[i] = hi[i];
                    let fp = f(&probe);
                    probe[i] = lo[i];
                    let fm = f(&probe);
                    match (fp, fm) {
                        (Some(fp), Some(fm)) => Some((fp - fm) / (hi[i] - lo[i])),
                        _ => None,
                    }
                }
            };
            probe[i] = x[i];
            if let Some(d) = d {
                grad[i] = d;
                done = true;
                break;
            }
            h *= 0.1;
        }
        if !done {
            return None;
        }
    }
    Some(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_analytic_on_smooth_function() {
        let mut f = |x: &[f64]| Some(x[0].sin() * x[1].exp() + x[0] * x[0] * x[1]);
        let x = [0.7, -0.3];
        let fx = f(&x).unwrap();
        let g = gradient(&mut f, &x, fx, &[-5.0; 2], &[5.0; 2]).unwrap();
        let exact = [
            x[0].cos() * x[1].exp() + 2.0 * x[0] * x[1],
            x[0].sin() * x[1].exp() + x[0] * x[0],
        ];
        for (a, b) in g.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn one_sided_at_bounds_avoids_domain() {
        // sqrt is undefined left of 0; the probe must stay inside the box.
        let mut f = |x: &[f64]| if x[0] < 0.0 { None } else { Some(x[0].sqrt() + x[0]) };
        let g = gradient(&mut f, &[0.0], 0.0, &[0.0], &[1.0]).unwrap();
        assert!(g[0] > 100.0);
        let g = gradient(&mut f, &[1.0], 2.0, &[0.0], &[1.0]).unwrap();
        assert!((g[0] - 1.5).abs() < 1e-5);
    }

    #[test]
    fn persistent_failure_is_reported() {
        let mut f = |x: &[f64]| if x[0] > 0.5 { None } else { Some(x[0]) };
        assert!(gradient(&mut f, &[0.5], 0.5, &[0.0], &[1.0]).is_none());
    }
}
