use polypot_core::math::{dot3, Vec3};

use crate::geometry::SurfaceMesh;
use crate::solvers::ProblemKind;

/// Closed-form polyharmonic functions in ℝ³ with their Laplacian chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Manufactured {
    /// `x₁`
    X1,
    /// `x₁x₂`
    X1X2,
    /// `|x|²`
    R2,
    /// `x₁|x|²`
    X1R2,
    /// `|x|² + x₁`
    R2PlusX1,
    /// `|x|⁴`
    R4,
}

pub fn manufactured_catalog() -> Vec<Manufactured> {
    use Manufactured::*;
    vec![X1, X1X2, R2, X1R2, R2PlusX1, R4]
}

impl Manufactured {
    pub fn name(self) -> &'static str {
        match self {
            Self::X1 => "x1",
            Self::X1X2 => "x1x2",
            Self::R2 => "r2",
            Self::X1R2 => "x1r2",
            Self::R2PlusX1 => "r2+x1",
            Self::R4 => "r4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        manufactured_catalog().into_iter().find(|s| s.name() == name)
    }

    /// Smallest `m` with `Δᵐu = 0`.
    pub fn order(self) -> usize {
        match self {
            Self::X1 | Self::X1X2 => 1,
            Self::R2 | Self::X1R2 | Self::R2PlusX1 => 2,
            Self::R4 => 3,
        }
    }

    pub fn u(self, x: Vec3) -> f64 {
        self.laplacian(0, x)
    }

    pub fn gradient(self, x: Vec3) -> Vec3 {
        self.grad_laplacian(0, x)
    }

    /// `Δᵏu(x)`.
    pub fn laplacian(self, k: usize, x: Vec3) -> f64 {
        let r2 = dot3(x, x);
        match (self, k) {
            (Self::X1, 0) => x[0],
            (Self::X1X2, 0) => x[0] * x[1],
            (Self::R2, 0) => r2,
            (Self::R2, 1) => 6.0,
            (Self::X1R2, 0) => x[0] * r2,
            (Self::X1R2, 1) => 10.0 * x[0],
            (Self::R2PlusX1, 0) => r2 + x[0],
            (Self::R2PlusX1, 1) => 6.0,
            (Self::R4, 0) => r2 * r2,
            (Self::R4, 1) => 20.0 * r2,
            (Self::R4, 2) => 120.0,
            _ => 0.0,
        }
    }

    /// `∇Δᵏu(x)`.
    pub fn grad_laplacian(self, k: usize, x: Vec3) -> Vec3 {
        let r2 = dot3(x, x);
        let s = |c: f64| [c * x[0], c * x[1], c * x[2]];
        match (self, k) {
            (Self::X1, 0) => [1.0, 0.0, 0.0],
            (Self::X1X2, 0) => [x[1], x[0], 0.0],
            (Self::R2, 0) => s(2.0),
            (Self::X1R2, 0) => [r2 + 2.0 * x[0] * x[0], 2.0 * x[0] * x[1], 2.0 * x[0] * x[2]],
            (Self::X1R2, 1) => [10.0, 0.0, 0.0],
            (Self::R2PlusX1, 0) => [2.0 * x[0] + 1.0, 2.0 * x[1], 2.0 * x[2]],
            (Self::R4, 0) => s(4.0 * r2),
            (Self::R4, 1) => s(40.0),
            _ => [0.0; 3],
        }
    }

    /// Stage-`k` boundary datum at the collocation nodes. Dirichlet and
    /// regularity data are `Δᵏu`; Neumann data are `∂_N Δᵏu` with the panel
    /// normal.
    pub fn trace(self, kind: ProblemKind, mesh: &SurfaceMesh, k: usize) -> Vec<f64> {
        mesh.panels()
            .iter()
            .map(|p| match kind {
                ProblemKind::Dirichlet | ProblemKind::Regularity => self.laplacian(k, p.centroid()),
                ProblemKind::Neumann => dot3(self.grad_laplacian(k, p.centroid()), p.normal()),
            })
            .collect()
    }

    /// All `m` data vectors for an order-`m` problem.
    pub fn traces(self, kind: ProblemKind, mesh: &SurfaceMesh, m: usize) -> Vec<Vec<f64>> {
        (0..m).map(|k| self.trace(kind, mesh, k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{fd_gradient, fd_laplacian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_is_self_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in manufactured_catalog() {
            for _ in 0..10 {
                let x: Vec3 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                for k in 0..=s.order() {
                    let f = |y: &[f64]| s.laplacian(k, [y[0], y[1], y[2]]);
                    let want = s.laplacian(k + 1, x);
                    let got = fd_laplacian(&f, &x, 0.05);
                    assert!((got - want).abs() < 1e-8 * want.abs().max(1.0), "{} k={k}", s.name());
                    let g = fd_gradient(&f, &x, 0.05);
                    let want = s.grad_laplacian(k, x);
                    for c in 0..3 {
                        assert!((g[c] - want[c]).abs() < 1e-8, "{} grad k={k}", s.name());
                    }
                }
                assert_eq!(s.laplacian(s.order(), x), 0.0);
            }
        }
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(Manufactured::X1R2.laplacian(1, [1.0, 2.0, 0.0]), 10.0);
        assert_eq!(Manufactured::R4.laplacian(1, [0.6, 0.8, 0.0]), 20.0);
        assert_eq!(Manufactured::from_name("r2+x1"), Some(Manufactured::R2PlusX1));
        assert_eq!(Manufactured::from_name("nope"), None);
    }

    #[test]
    fn neumann_traces_on_the_sphere() {
        let mesh = crate::geometry::make_sphere_mesh(2, 1.0, [0.0; 3]).unwrap();
        let g = Manufactured::R2.traces(ProblemKind::Neumann, &mesh, 2);
        // ∂_N|x|² = 2 on the unit sphere, up to the inscribed-polyhedron offset
        assert!(g[0].iter().all(|v| (v - 2.0).abs() < 0.05));
        assert!(g[1].iter().all(|&v| v == 0.0));
    }
}
