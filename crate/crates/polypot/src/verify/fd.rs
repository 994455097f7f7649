/// Fourth-order five-point Laplacian, Richardson-extrapolated from steps
/// `h` and `h/2`.
pub fn fd_laplacian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let lap = |h: f64| -> f64 {
        let f0 = f(x);
        let mut acc = 0.0;
        for k in 0..x.len() {
            let at = |t: f64| {
                let mut y = x.to_vec();
                y[k] += t;
                f(&y)
            };
            acc += (-at(2.0 * h) + 16.0 * at(h) - 30.0 * f0 + 16.0 * at(-h) - at(-2.0 * h)) / (12.0 * h * h);
        }
        acc
    };
    (16.0 * lap(h / 2.0) - lap(h)) / 15.0
}

/// Fourth-order central gradient, Richardson-extrapolated.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let at = |t: f64| {
                let mut y = x.to_vec();
                y[k] += t;
                f(&y)
            };
            let d = |h: f64| (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
            (16.0 * d(h / 2.0) - d(h)) / 15.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r2(x: &[f64]) -> f64 {
        x.iter().map(|c| c * c).sum()
    }

    #[test]
    fn exact_on_polynomials() {
        assert!((fd_laplacian(&r2, &[0.3, -0.2, 0.5], 0.1) - 6.0).abs() < 1e-9);
        assert!(fd_laplacian(&|x| x[0], &[0.3, -0.2, 0.5], 0.1).abs() < 1e-12);
        let g = fd_gradient(&r2, &[0.3, -0.2, 0.5], 0.1);
        for (a, b) in g.iter().zip([0.6, -0.4, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn power_identity() {
        // Δ(x₁|x|^{−1}) = α_{−1} x₁ |x|^{−3} with α_{−1} = −1·(−1 + 3) = −2 in ℝ³
        let f = |x: &[f64]| x[0] / r2(x).sqrt();
        let x = [1.0, 1.0, 0.0];
        let want = -2.0 * 1.0 / 2f64.sqrt().powi(3);
        let got = fd_laplacian(&f, &x, 0.01);
        assert!((got - want).abs() < 1e-9 * want.abs(), "{got} vs {want}");
    }
}
