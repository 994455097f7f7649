use polypot::geometry::{make_sphere_mesh, SurfaceMesh};
use polypot::operators::{assemble_many, integrate, Integration, OperatorKind};
use polypot::solvers::{solve, BvpProblem, ProblemKind, SolverOptions};
use polypot::verify::fd_gradient;
use polypot_core::math::{add3, dot3, scale3, Vec3};
use proptest::prelude::*;

/// Rotation about an axis by Rodrigues' formula.
fn rotate(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let k = scale3(1.0 / dot3(axis, axis).sqrt(), axis);
    let (s, c) = angle.sin_cos();
    let kxv = [k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]];
    add3(add3(scale3(c, v), scale3(s, kxv)), scale3(dot3(k, v) * (1.0 - c), k))
}

fn transformed(level: u32, scale: f64, axis: Vec3, angle: f64, shift: Vec3) -> SurfaceMesh {
    let base = make_sphere_mesh(level, 1.0, [0.0; 3]).unwrap();
    let vertices = base.vertices().iter().map(|&v| add3(scale3(scale, rotate(v, axis, angle)), shift)).collect();
    SurfaceMesh::new(vertices, base.faces().collect()).unwrap()
}

fn axis() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-1.0f64..1.0).prop_filter("nonzero axis", |a| dot3(*a, *a) > 1e-2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn similarity_transforms_scale_area_and_volume(
        scale in 0.2f64..5.0, axis in axis(), angle in 0.0f64..6.3, shift in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let base = make_sphere_mesh(2, 1.0, [0.0; 3]).unwrap();
        let m = transformed(2, scale, axis, angle, shift);
        prop_assert!((m.total_area() / base.total_area() - scale * scale).abs() < 1e-10 * scale * scale);
        prop_assert!((m.volume() / base.volume() - scale.powi(3)).abs() < 1e-10 * scale.powi(3));
        let flux = m.panels().iter().fold([0.0; 3], |acc, p| add3(acc, scale3(p.area(), p.normal())));
        prop_assert!(dot3(flux, flux).sqrt() < 1e-12 * m.total_area());
        prop_assert!((m.winding_number(shift) - 1.0).abs() < 1e-10);
        prop_assert!(!m.contains(add3(shift, [2.0 * scale, 0.0, 0.0])));
    }

    #[test]
    fn starred_operators_are_area_weighted_adjoints(
        scale in 0.5f64..2.0, axis in axis(), angle in 0.0f64..6.3,
        f in prop::collection::vec(-1.0f64..1.0, 80), g in prop::collection::vec(-1.0f64..1.0, 80),
    ) {
        let m = transformed(1, scale, axis, angle, [0.1, 0.0, -0.2]);
        let kinds = [OperatorKind::T, OperatorKind::TStar, OperatorKind::Km(2), OperatorKind::KmStar(2)];
        let ops = assemble_many(&m, &kinds, Integration::Analytic).unwrap();
        let inner = |a: &[f64], b: &[f64]| {
            let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
            integrate(&m, &ab)
        };
        for pair in ops.chunks(2) {
            let lhs = inner(&pair[0].apply(&f), &g);
            let rhs = inner(&f, &pair[1].apply(&g));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn perturbing_the_lowest_datum_leaves_higher_densities_unchanged(
        data in prop::collection::vec(-1.0f64..1.0, 240), bump in prop::collection::vec(-1.0f64..1.0, 80),
        kind in prop::sample::select(vec![ProblemKind::Dirichlet, ProblemKind::Regularity]),
    ) {
        let m = make_sphere_mesh(1, 1.0, [0.0; 3]).unwrap();
        let stages: Vec<Vec<f64>> = data.chunks(80).map(|c| c.to_vec()).collect();
        let mut moved = stages.clone();
        for (a, b) in moved[0].iter_mut().zip(&bump) {
            *a += b;
        }
        let opts = SolverOptions::default();
        let a = solve(&BvpProblem::new(kind, &m, stages).unwrap(), &opts).unwrap();
        let b = solve(&BvpProblem::new(kind, &m, moved).unwrap(), &opts).unwrap();
        prop_assert_eq!(&a.densities()[1..], &b.densities()[1..]);
        prop_assert_ne!(&a.densities()[0], &b.densities()[0]);
    }

    #[test]
    fn neumann_gradients_ignore_the_additive_constant(
        c in -100.0f64..100.0, x in prop::array::uniform3(-0.4f64..0.4),
    ) {
        // data reconstructed from u and from u + c by differentiation
        let m = make_sphere_mesh(1, 1.0, [0.0; 3]).unwrap();
        let data = |shift: f64| -> Vec<Vec<f64>> {
            let u = |y: &[f64]| y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[0] + shift;
            let g0 = m.panels().iter().map(|p| {
                let g = fd_gradient(&u, &p.centroid(), 1e-2);
                dot3([g[0], g[1], g[2]], p.normal())
            }).collect();
            vec![g0, vec![0.0; m.len()]]
        };
        let opts = SolverOptions::default();
        let a = solve(&BvpProblem::new(ProblemKind::Neumann, &m, data(0.0)).unwrap(), &opts).unwrap();
        let b = solve(&BvpProblem::new(ProblemKind::Neumann, &m, data(c)).unwrap(), &opts).unwrap();
        let (ga, gb) = (a.evaluate(x).unwrap().gradient, b.evaluate(x).unwrap().gradient);
        for k in 0..3 {
            prop_assert!((ga[k] - gb[k]).abs() <= 1e-9, "{ga:?} vs {gb:?}");
        }
    }
}
