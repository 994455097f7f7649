//! Check suites. Each returns pass/fail with a one-line detail so the CLI and
//! the acceptance run can print them uniformly.

use std::time::Instant;

use polypot_core::math::Vec3;
use polypot_core::{DomainMode, KernelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{fd_gradient, fd_laplacian, jump_relation_sweep, probe_points, JumpQuantity};
use crate::error::Result;
use crate::geometry::{make_sphere_mesh, RayOptions, SurfaceMesh};
use crate::operators::{
    assemble_many, eval_m, lp_norm, newtonian_potential, EvalOptions, Integration, NewtonDomain, OperatorKind,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String, start: Instant) -> Self {
        Self { name: name.into(), passed, detail, seconds: start.elapsed().as_secs_f64() }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn radius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Pairs with `0.5 ≤ |x − v| ≤ 3`, both radii above 0.3 and differing by
/// more than 0.3.
pub fn separated_pairs(seed: u64, dim: usize, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let (r, rx, rv) = (dist(&x, &v), radius(&x), radius(&v));
        if (0.5..=3.0).contains(&r) && rx.min(rv) > 0.3 && (rx - rv).abs() > 0.3 {
            out.push((x, v));
        }
    }
    out
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// `Δ_x D_m = D_{m−1}` componentwise and `Δ_x 𝒟_m = 𝒟_{m−1}`, bounded mode.
pub fn kernel_recursion(seed: u64) -> Result<Check> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut at = String::new();
    for n in [2usize, 3] {
        for m in 2..=5 {
            let s = KernelSpec::bounded(n, m)?;
            let l = s.with_order(m - 1)?;
            for (x, v) in separated_pairs(seed + 10 * n as u64 + m as u64, n + 1, 25) {
                let h = 0.02 * dist(&x, &v);
                let want: Vec<f64> = (1..=n + 1).map(|j| l.eval_d(j, &x, &v)).collect::<Result<_, _>>()?;
                let scale = max_abs(want.iter().copied());
                for j in 1..=n + 1 {
                    let lap = fd_laplacian(&|y| s.eval_d(j, y, &v).unwrap_or(f64::NAN), &x, h);
                    let e = (lap - want[j - 1]).abs() / scale;
                    if !(e <= worst) {
                        worst = e;
                        at = format!("n={n} m={m} D^({j})");
                    }
                }
                let want = l.eval_dcal(&x, &v)?;
                let lap = fd_laplacian(&|y| s.eval_dcal(y, &v).unwrap_or(f64::NAN), &x, h);
                let e = (lap - want).abs() / want.abs();
                if !(e <= worst) {
                    worst = e;
                    at = format!("n={n} m={m} fundamental");
                }
            }
        }
    }
    Ok(Check::new("kernel recursion", worst <= 1e-6, format!("max rel err {worst:.2e} ({at})"), start))
}

/// `∇𝒦_m` against finite differences (bounded mode) and the gradient
/// identity for singular parts (graph mode).
pub fn gradient_identity(seed: u64) -> Result<Check> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut at = String::new();
    for n in [2usize, 3] {
        for m in 2..=5 {
            let s = KernelSpec::bounded(n, m)?;
            for (x, v) in separated_pairs(seed + 10 * n as u64 + m as u64, n + 1, 25) {
                let h = 0.02 * dist(&x, &v);
                let field = s.grad_kcal(&x, &v)?;
                let fd = fd_gradient(&|y| s.eval_kcal(y, &v).unwrap_or(f64::NAN), &x, h);
                let e = max_abs(fd.iter().zip(&field).map(|(a, b)| a - b)) / max_abs(field.iter().copied());
                if !(e <= worst) {
                    worst = e;
                    at = format!("n={n} m={m} gradient");
                }
            }
            let g = KernelSpec::graph(n, m)?;
            for (x, v) in separated_pairs(seed + 100 + 10 * n as u64 + m as u64, n + 1, 25) {
                let h = 0.01 * dist(&x, &v).min((radius(&x) - radius(&v)).abs());
                let want: Vec<f64> = (1..=n + 1).map(|j| g.eval_sp_d(j, &x, &v)).collect::<Result<_, _>>()?;
                // differentiate in the argument closer to the shift point
                let fd = if radius(&x) < radius(&v) {
                    fd_gradient(&|y| g.eval_sp_dcal(y, &v).unwrap_or(f64::NAN), &x, h)
                } else {
                    fd_gradient(&|y| -g.eval_sp_dcal(&x, y).unwrap_or(f64::NAN), &v, h)
                };
                let e = max_abs(fd.iter().zip(&want).map(|(a, b)| a - b)) / max_abs(want.iter().copied());
                if !(e <= worst) {
                    worst = e;
                    at = format!("n={n} m={m} singular part");
                }
            }
        }
    }
    Ok(Check::new("gradient identity", worst <= 1e-6, format!("max rel err {worst:.2e} ({at})"), start))
}

/// `K_m(x, v) = −K_m(v, x)` and `𝒦_m(x, v) = 𝒦_m(v, x)` in both modes.
pub fn symmetry(seed: u64) -> Result<Check> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut at = String::new();
    for mode in [DomainMode::Bounded, DomainMode::Graph] {
        for n in [2usize, 3] {
            for m in 1..=5 {
                let s = KernelSpec::new(n, m, mode)?;
                let mut done = 0;
                while done < 100 {
                    let x: Vec<f64> = (0..=n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let v: Vec<f64> = (0..=n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let (rx, rv) = (radius(&x), radius(&v));
                    if dist(&x, &v) < 1e-3 || rx.min(rv) < 1e-3 || (rx - rv).abs() < 1e-3 {
                        continue;
                    }
                    done += 1;
                    for j in 1..=n + 1 {
                        let a = s.eval_k(j, &x, &v)?;
                        let e = (a + s.eval_k(j, &v, &x)?).abs() / a.abs().max(1.0);
                        if !(e <= worst) {
                            worst = e;
                            at = format!("{mode:?} n={n} m={m} K^({j})");
                        }
                    }
                    let a = s.eval_kcal(&x, &v)?;
                    let e = (a - s.eval_kcal(&v, &x)?).abs() / a.abs().max(1.0);
                    if !(e <= worst) {
                        worst = e;
                        at = format!("{mode:?} n={n} m={m} fundamental");
                    }
                }
            }
        }
    }
    let detail = if at.is_empty() { "exact in every case".to_string() } else { format!("max rel err {worst:.2e} ({at})") };
    Ok(Check::new("kernel symmetry", worst <= 1e-12, detail, start))
}

pub fn kernel_suite(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![kernel_recursion(seed)?, gradient_identity(seed)?, symmetry(seed)?])
}

/// Largest change of `f` between a centroid and the vertices of its panel.
pub fn interpolation_error(mesh: &SurfaceMesh, f: impl Fn(Vec3) -> f64) -> f64 {
    mesh.panels()
        .iter()
        .map(|p| {
            let c = f(p.centroid());
            max_abs(p.vertices().iter().map(|&v| f(v) - c))
        })
        .fold(0.0, f64::max)
}

/// Gauss identities and jump relations on the unit sphere at `level`.
pub fn gauss_jump(level: u32) -> Result<Vec<Check>> {
    let mesh = make_sphere_mesh(level, 1.0, [0.0; 3])?;
    let n = mesh.len();
    let mut out = Vec::new();

    let start = Instant::now();
    let ones = vec![1.0; n];
    let mut worst = 0.0f64;
    for x in probe_points([0.0; 3], 1.0) {
        worst = worst.max((eval_m(&mesh, 1, &ones, x, &EvalOptions::default())? - 1.0).abs());
    }
    out.push(Check::new("Gauss interior M_1 1 = 1", worst <= 1e-3, format!("max err {worst:.2e}"), start));

    let start = Instant::now();
    let ops = assemble_many(&mesh, &[OperatorKind::T, OperatorKind::SingleLayer], Integration::Analytic)?;
    let (t, s) = (&ops[0], &ops[1]);
    let worst = max_abs(t.apply_accurate(&ones).iter().map(|v| v - 0.5));
    out.push(Check::new("T 1 = 1/2", worst <= 1e-12, format!("max err {worst:.2e}"), start));

    let start = Instant::now();
    let x1: Vec<f64> = mesh.panels().iter().map(|p| p.centroid()[0]).collect();
    let tx = t.apply_accurate(&x1);
    let worst = max_abs(tx.iter().zip(&x1).map(|(a, b)| a - b / 6.0)) / max_abs(x1.iter().map(|b| b / 6.0));
    out.push(Check::new("T x1 = x1/6", worst <= 2e-2, format!("max rel err {worst:.2e}"), start));

    let start = Instant::now();
    let worst = max_abs(s.apply_accurate(&ones).iter().map(|v| v - 1.0));
    out.push(Check::new("single layer 1 = 1 on the boundary", worst <= 1e-2, format!("max err {worst:.2e}"), start));

    let start = Instant::now();
    let panels: Vec<usize> = (0..n).step_by((n / 40).max(1)).collect();
    let rows = jump_relation_sweep(&mesh, &x1, 1, JumpQuantity::NormalDerivative, &panels, &RayOptions::default())?;
    // the innermost sample of each ray is the boundary limit estimate
    let mut worst = 0.0f64;
    for &p in &panels {
        if let Some(r) = rows.iter().filter(|r| r.panel == p).min_by(|a, b| a.t.total_cmp(&b.t)) {
            worst = worst.max(r.error);
        }
    }
    let interp = interpolation_error(&mesh, |x| x[0]);
    out.push(Check::new(
        "normal-derivative jump",
        worst <= 3.0 * interp,
        format!("max err {worst:.2e}, interpolation err {interp:.2e}, {} rays", panels.len()),
        start,
    ));
    Ok(out)
}

/// Projects a random density onto `∫𝒩_{m−1} f dσ = 0` and measures
/// `|∫K*_m f dσ| / (‖f‖₂·|∂D|)`.
pub fn compatibility(level: u32, m: usize, seed: u64) -> Result<Check> {
    let start = Instant::now();
    let mesh = make_sphere_mesh(level, 1.0, [0.0; 3])?;
    let areas = mesh.areas();
    let newton: Vec<f64> = mesh
        .panels()
        .iter()
        .map(|p| newtonian_potential(NewtonDomain::Mesh(&mesh), m - 1, p.centroid()))
        .collect::<Result<_>>()?;
    let w: Vec<f64> = newton.iter().zip(&areas).map(|(a, b)| a * b).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f: Vec<f64> = (0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c = f.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / w.iter().map(|b| b * b).sum::<f64>();
    for (fi, wi) in f.iter_mut().zip(&w) {
        *fi -= c * wi;
    }
    let kstar = assemble_many(&mesh, &[OperatorKind::KmStar(m)], Integration::Analytic)?.pop().expect("one operator");
    let integral: f64 = kstar.apply_accurate(&f).iter().zip(&areas).map(|(a, b)| a * b).sum();
    let normalized = integral.abs() / (lp_norm(&mesh, &f, 2.0) * mesh.total_area());
    Ok(Check::new(
        &format!("compatibility m={m}"),
        normalized <= 1e-6,
        format!("normalized |int K*_m f| = {normalized:.2e} at level {level}"),
        start,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_suites_pass() {
        for c in kernel_suite(1).unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn gauss_jump_on_a_coarse_sphere() {
        let checks = gauss_jump(2).unwrap();
        let by = |name: &str| checks.iter().find(|c| c.name.starts_with(name)).unwrap().clone();
        assert!(by("Gauss interior").passed, "{:?}", by("Gauss interior"));
        assert!(by("T 1").passed);
        assert!(by("normal-derivative").passed, "{:?}", by("normal-derivative"));
    }

    #[test]
    fn compatibility_holds_on_a_coarse_sphere() {
        let c = compatibility(1, 2, 4).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn interpolation_error_of_a_linear_function() {
        let mesh = make_sphere_mesh(0, 1.0, [0.0; 3]).unwrap();
        let e = interpolation_error(&mesh, |x| x[0]);
        assert!(e > 0.3 && e < 1.0);
        assert_eq!(interpolation_error(&mesh, |_| 2.0), 0.0);
    }
}
