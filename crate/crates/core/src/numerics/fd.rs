//! Central finite differences, used throughout the test suites as the
//! independent gradient oracle.

/// `(f(x + h e_i) - f(x - h e_i)) / (2h)` for every coordinate.
pub fn finite_diff_grad<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "step must be positive");
    let mut out = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        out.push((up - down) / (2.0 * h));
    }
    out
}
