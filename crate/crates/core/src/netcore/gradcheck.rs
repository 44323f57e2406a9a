/// Central-difference gradient check.
///
/// Returns the maximum over `coords` of
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn gradient_check<F>(f: F, params: &[f64], analytic: &[f64], eps: f64, coords: &[usize]) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "gradient length must match parameters");
    let mut p = params.to_vec();
    let mut worst = 0.0f64;
    for &i in coords {
        let orig = p[i];
        p[i] = orig + eps;
        let plus = f(&p);
        p[i] = orig - eps;
        let minus = f(&p);
        p[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(p: &[f64]) -> f64 {
        p.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v + 0.5 * v).sum()
    }

    fn quad_grad(p: &[f64]) -> Vec<f64> {
        p.iter().enumerate().map(|(i, v)| 2.0 * (i as f64 + 1.0) * v + 0.5).collect()
    }

    #[test]
    fn quadratic_is_exact() {
        let p = [0.3, -1.2, 2.5, 0.0];
        let err = gradient_check(quad, &p, &quad_grad(&p), 1e-5, &[0, 1, 2, 3]);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let p = [0.3, -1.2, 2.5, 0.0];
        let mut g = quad_grad(&p);
        g[2] *= 1.1;
        let err = gradient_check(quad, &p, &g, 1e-5, &[0, 1, 2, 3]);
        assert!(err > 1e-2, "{err}");
    }
}
