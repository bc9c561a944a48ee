//! Derivative-free local search (Nelder-Mead with box constraints) used for
//! barycenters on parametric curve spaces and for parameter fitting.

/// Minimizes `f` starting at `x0`, clamping every iterate to `bounds`.
/// Returns (argmin, min value).
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    bounds: &[(f64, f64)],
    scale: f64,
    max_iters: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let clamp = |x: &mut [f64]| {
        for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
            *xi = xi.clamp(lo, hi);
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        let span = (bounds[i].1 - bounds[i].0).min(1.0);
        let step = if span.is_finite() {
            scale * span.max(1e-3)
        } else {
            scale
        };
        v[i] += if v[i] + step <= bounds[i].1 {
            step
        } else {
            -step
        };
        clamp(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        if (values[worst] - values[best]).abs() <= tol * (1.0 + values[best].abs()) {
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, &x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }

        let reflect = |coef: f64| -> Vec<f64> {
            let mut v: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(&c, &w)| c + coef * (c - w))
                .collect();
            clamp(&mut v);
            v
        };

        let xr = reflect(1.0);
        let fr = f(&xr);
        if fr < values[best] {
            let xe = reflect(2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = xr;
            values[worst] = fr;
        } else {
            let xc = reflect(-0.5);
            let fc = f(&xc);
            if fc < values[worst] {
                simplex[worst] = xc;
                values[worst] = fc;
            } else {
                // shrink toward the best vertex
                let anchor = simplex[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    for (x, &a) in simplex[i].iter_mut().zip(&anchor) {
                        *x = a + 0.5 * (*x - a);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_shifted_quadratic() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + (x[1] + 0.5).powi(2);
        let bounds = [(-10.0, 10.0), (-10.0, 10.0)];
        let (x, v) = nelder_mead(f, &[0.0, 0.0], &bounds, 0.5, 500, 1e-14);
        assert!(v < 1e-10);
        assert!((x[0] - 1.5).abs() < 1e-5);
        assert!((x[1] + 0.5).abs() < 1e-5);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] - 5.0).powi(2);
        let (x, _) = nelder_mead(f, &[0.0], &[(-1.0, 1.0)], 0.5, 200, 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-6);
    }
}
