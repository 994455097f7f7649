//! Ultraspherical (Gegenbauer) polynomials `P_l^(λ)` and their negated
//! λ-derivatives `Q_l^(λ) = -∂P_l^(λ)/∂λ`.
//!
//! Both families are evaluated by three-term recurrences that are polynomial
//! in λ, so non-positive integer and half-integer parameters need no special
//! handling: the values are the continuous limits in λ.

use crate::error::KernelError;

/// A single `(l, λ, ξ)` evaluation request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltrasphericalQuery {
    degree: usize,
    lambda: f64,
    xi: f64,
}

impl UltrasphericalQuery {
    /// Builds a query, rejecting `|ξ| > 1` and non-finite parameters.
    pub fn new(degree: usize, lambda: f64, xi: f64) -> Result<Self, KernelError> {
        if !lambda.is_finite() || !xi.is_finite() || xi.abs() > 1.0 {
            return Err(KernelError::ArgumentOutOfRange { xi });
        }
        Ok(Self { degree, lambda, xi })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
}

/// `P_l^(λ)(ξ)`.
pub fn gegenbauer_p(q: UltrasphericalQuery) -> f64 {
    let (mut p_prev, mut p) = (1.0, 2.0 * q.lambda * q.xi);
    if q.degree == 0 {
        return p_prev;
    }
    for l in 2..=q.degree {
        let lf = l as f64;
        let next = (2.0 * (lf + q.lambda - 1.0) * q.xi * p - (lf + 2.0 * q.lambda - 2.0) * p_prev) / lf;
        p_prev = p;
        p = next;
    }
    p
}

/// `Q_l^(λ)(ξ) = -d/dλ P_l^(λ)(ξ)`.
pub fn gegenbauer_q(q: UltrasphericalQuery) -> f64 {
    let mut p = [0.0; 2];
    let mut qq = [0.0; 2];
    let n = q.degree + 1;
    if n <= 2 {
        gegenbauer_pq_table(q.lambda, q.xi, &mut p[..n], &mut qq[..n]);
        return qq[n - 1];
    }
    let mut p_all = alloc::vec![0.0; n];
    let mut q_all = alloc::vec![0.0; n];
    gegenbauer_pq_table(q.lambda, q.xi, &mut p_all, &mut q_all);
    q_all[n - 1]
}

/// Fills `p[l] = P_l^(λ)(ξ)` for `l < p.len()`.
pub fn gegenbauer_p_table(lambda: f64, xi: f64, p: &mut [f64]) {
    let len = p.len();
    if len == 0 {
        return;
    }
    p[0] = 1.0;
    if len == 1 {
        return;
    }
    p[1] = 2.0 * lambda * xi;
    for l in 2..len {
        let lf = l as f64;
        p[l] = (2.0 * (lf + lambda - 1.0) * xi * p[l - 1] - (lf + 2.0 * lambda - 2.0) * p[l - 2]) / lf;
    }
}

/// Fills `p[l] = P_l^(λ)(ξ)` and `q[l] = Q_l^(λ)(ξ)` for `l < p.len()`.
///
/// The `Q` recurrence is the λ-derivative of the `P` recurrence:
/// `l Q_l = -2ξ P_{l-1} + 2(l+λ-1)ξ Q_{l-1} + 2 P_{l-2} - (l+2λ-2) Q_{l-2}`.
pub fn gegenbauer_pq_table(lambda: f64, xi: f64, p: &mut [f64], q: &mut [f64]) {
    assert_eq!(p.len(), q.len(), "P and Q tables must have equal length");
    let len = p.len();
    if len == 0 {
        return;
    }
    p[0] = 1.0;
    q[0] = 0.0;
    if len == 1 {
        return;
    }
    p[1] = 2.0 * lambda * xi;
    q[1] = -2.0 * xi;
    for l in 2..len {
        let lf = l as f64;
        let a = 2.0 * (lf + lambda - 1.0) * xi;
        let b = lf + 2.0 * lambda - 2.0;
        p[l] = (a * p[l - 1] - b * p[l - 2]) / lf;
        q[l] = (-2.0 * xi * p[l - 1] + a * q[l - 1] + 2.0 * p[l - 2] - b * q[l - 2]) / lf;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Explicit finite sum for `P_l^(λ)`, valid away from non-positive integer λ.
    fn p_explicit(l: usize, lambda: f64, xi: f64) -> f64 {
        let mut sum = 0.0;
        for j in 0..=l / 2 {
            // Γ(l-j+λ)/Γ(λ) as a rising factorial (λ)_{l-j}
            let mut rising = 1.0;
            for k in 0..(l - j) {
                rising *= lambda + k as f64;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * rising / (factorial(j) * factorial(l - 2 * j)) * (2.0 * xi).powi((l - 2 * j) as i32);
        }
        sum
    }

    /// Explicit double sum for `Q_l^(λ)`, valid away from non-positive integer λ.
    fn q_explicit(l: usize, lambda: f64, xi: f64) -> f64 {
        let mut sum = 0.0;
        for j in 0..=l / 2 {
            let mut rising = 1.0;
            for k in 0..(l - j) {
                rising *= lambda + k as f64;
            }
            let base = rising / (factorial(j) * factorial(l - 2 * j)) * (2.0 * xi).powi((l - 2 * j) as i32);
            let sign = if (j + 1) % 2 == 0 { 1.0 } else { -1.0 };
            for k in 0..(l - j) {
                sum += sign * base / (lambda + k as f64);
            }
        }
        sum
    }

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|i| i as f64).product()
    }

    fn p(l: usize, lambda: f64, xi: f64) -> f64 {
        gegenbauer_p(UltrasphericalQuery::new(l, lambda, xi).unwrap())
    }

    fn q(l: usize, lambda: f64, xi: f64) -> f64 {
        gegenbauer_q(UltrasphericalQuery::new(l, lambda, xi).unwrap())
    }

    #[test]
    fn degree_zero_is_one() {
        assert_eq!(p(0, -1.5, 0.7), 1.0);
        assert_eq!(q(0, 2.5, 0.9), 0.0);
    }

    #[test]
    fn low_degree_values() {
        assert!((p(1, 0.5, 0.3) - 0.3).abs() < 1e-15);
        assert!(p(2, 1.0, 0.5).abs() < 1e-15);
        assert!((q(1, 0.5, 0.3) + 0.6).abs() < 1e-15);
        assert!((q(2, 1.0, 0.5) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn q_matches_richardson_difference() {
        // central difference in λ with step h and h/2, Richardson-combined
        let lambda = 1.0;
        let (xi, h) = (0.5, 1e-5);
        let d = |h: f64| -(p(2, lambda + h, xi) - p(2, lambda - h, xi)) / (2.0 * h);
        let extrap = (4.0 * d(h / 2.0) - d(h)) / 3.0;
        assert!((extrap - (-0.5)).abs() < 1e-8);
        assert!((q(2, lambda, xi) - extrap).abs() < 1e-8);
    }

    #[test]
    fn rejects_argument_outside_unit_interval() {
        assert!(UltrasphericalQuery::new(3, 0.5, 1.0 + 1e-9).is_err());
        assert!(UltrasphericalQuery::new(3, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn recurrence_agrees_with_explicit_sums() {
        for &lambda in &[0.5, 1.5, 2.25, -0.5, -1.5, -2.5, 3.0, 0.1] {
            for l in 0..14 {
                for &xi in &[-1.0, -0.4, 0.0, 0.3, 0.95, 1.0] {
                    let scale = 1.0 + p_explicit(l, lambda, xi).abs();
                    assert!((p(l, lambda, xi) - p_explicit(l, lambda, xi)).abs() < 1e-11 * scale);
                    let qs = 1.0 + q_explicit(l, lambda, xi).abs();
                    assert!((q(l, lambda, xi) - q_explicit(l, lambda, xi)).abs() < 1e-10 * qs, "l={l} λ={lambda} ξ={xi}");
                }
            }
        }
    }

    #[test]
    fn nonpositive_integer_lambda_is_the_limit() {
        // (1-2rξ+r²)^0 = 1 and (1-2rξ+r²)^1 = 1 - 2rξ + r²
        for l in 1..10 {
            assert!(p(l, 0.0, 0.37).abs() < 1e-15);
        }
        assert!((p(1, -1.0, 0.37) + 2.0 * 0.37).abs() < 1e-15);
        assert!((p(2, -1.0, 0.37) - 1.0).abs() < 1e-15);
        for l in 3..12 {
            assert!(p(l, -1.0, 0.37).abs() < 1e-14);
        }
        // λ → 0 limit of the Q family is the log series: -log(1-2rξ+r²) coefficients are 2T_l(ξ)/l
        let xi: f64 = 0.37;
        for l in 1..10 {
            let t_l = (l as f64 * xi.acos()).cos();
            assert!((q(l, 0.0, xi) + 2.0 * t_l / l as f64).abs() < 1e-13, "l={l}");
        }
    }

    #[test]
    fn generating_functions_converge() {
        let r: f64 = 0.3;
        let mut pt = [0.0; 61];
        let mut qt = [0.0; 61];
        for &lambda in &[0.5, -1.5, 2.0, -0.25, 3.5] {
            for &xi in &[-1.0, -0.2, 0.6, 1.0] {
                gegenbauer_pq_table(lambda, xi, &mut pt, &mut qt);
                let base = 1.0 - 2.0 * r * xi + r * r;
                let want_p = base.powf(-lambda);
                let want_q = want_p * base.ln();
                let mut sp = 0.0;
                let mut sq = 0.0;
                for l in (0..=60).rev() {
                    sp = sp * r + pt[l];
                    sq = sq * r + qt[l];
                }
                assert!((sp - want_p).abs() < 1e-10, "λ={lambda} ξ={xi}");
                assert!((sq - want_q).abs() < 1e-10, "λ={lambda} ξ={xi}");
            }
        }
    }

    proptest! {
        #[test]
        fn three_term_recurrence_holds(l in 2usize..=40, lambda in -10.0f64..10.0, xi in -1.0f64..=1.0) {
            let (a, b, c) = (p(l, lambda, xi), p(l - 1, lambda, xi), p(l - 2, lambda, xi));
            let lf = l as f64;
            let lhs = lf * a;
            let rhs = 2.0 * (lf + lambda - 1.0) * xi * b - (lf + 2.0 * lambda - 2.0) * c;
            let scale = lhs.abs().max((2.0 * (lf + lambda - 1.0) * xi * b).abs()).max(((lf + 2.0 * lambda - 2.0) * c).abs()).max(1e-300);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn q_is_negative_lambda_derivative(l in 0usize..=20, lambda in -6.0f64..6.0, xi in -1.0f64..=1.0) {
            let h = 1e-3;
            let f = |d: f64| p(l, lambda + d, xi);
            let fd = -(f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h);
            let scale = 1.0 + q(l, lambda, xi).abs() + p(l, lambda, xi).abs();
            prop_assert!((q(l, lambda, xi) - fd).abs() < 1e-7 * scale);
        }
    }
}
