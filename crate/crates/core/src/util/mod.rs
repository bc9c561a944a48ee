pub mod optim;
pub mod par;
pub mod stats;

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            rho = i + 1;
            theta = t;
        }
    }
    let _ = rho;
    let _ = n;
    v.iter().map(|&vi| (vi - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_is_on_simplex() {
        let p = project_to_simplex(&[0.5, -1.0, 3.0, 0.2]);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn simplex_projection_fixes_simplex_points() {
        let p = project_to_simplex(&[0.25, 0.25, 0.5]);
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[2] - 0.5).abs() < 1e-12);
    }
}
