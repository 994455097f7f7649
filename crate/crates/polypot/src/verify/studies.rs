use std::fmt::Write as _;
use std::sync::Arc;

use polypot_core::math::{dot3, norm3, sub3, Vec3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PolypotError, Result};
use crate::geometry::{make_sphere_mesh, nontangential_samples_with, RayOptions, SurfaceMesh};
use crate::operators::{assemble_many, eval_grad_mcal, eval_m, EvalOptions, Integration, OperatorKind};
use crate::solvers::{solve, BvpProblem, CascadeSolution, ProblemKind, SolveReport, SolverOptions};

use super::Manufactured;

pub const CSV_HEADER: &str = "level,probe,quantity,value,reference,abs_err,rel_err";

/// Ten interior probes: the center and `{0.3, 0.5, 0.7}·radius` along three
/// fixed unit directions.
pub fn probe_points(center: Vec3, radius: f64) -> Vec<Vec3> {
    const DIRECTIONS: [Vec3; 3] = [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [-0.48, 0.6, -0.64]];
    let mut out = vec![center];
    for d in DIRECTIONS {
        for s in [0.3, 0.5, 0.7] {
            out.push([center[0] + s * radius * d[0], center[1] + s * radius * d[1], center[2] + s * radius * d[2]]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JumpQuantity {
    /// Limits of `M_m f`.
    Value,
    /// Limits of `∂_N 𝓜_m f`.
    NormalDerivative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpRow {
    pub panel: usize,
    /// Distance along the inward normal.
    pub t: f64,
    pub value: f64,
    pub target: f64,
    pub error: f64,
}

/// Interior values along non-tangential rays compared with the boundary
/// limit predicted by the jump relations. Values of `M_m f` tend to
/// `½f + Tf` for `m = 1` and `K_m f` otherwise; normal derivatives of
/// `𝓜_m f` tend to `½f − T*f` for `m = 1` and `−K*_m f` otherwise.
pub fn jump_relation_sweep(
    mesh: &SurfaceMesh,
    density: &[f64],
    m: usize,
    quantity: JumpQuantity,
    panels: &[usize],
    rays: &RayOptions,
) -> Result<Vec<JumpRow>> {
    if density.len() != mesh.len() {
        return Err(PolypotError::InvalidArgument(format!(
            "density has {} values for {} panels",
            density.len(),
            mesh.len()
        )));
    }
    let kind = match (quantity, m) {
        (JumpQuantity::Value, 1) => OperatorKind::T,
        (JumpQuantity::Value, _) => OperatorKind::Km(m),
        (JumpQuantity::NormalDerivative, 1) => OperatorKind::TStar,
        (JumpQuantity::NormalDerivative, _) => OperatorKind::KmStar(m),
    };
    let op = assemble_many(mesh, &[kind], Integration::Analytic)?.pop().expect("one operator");
    let applied = op.apply_accurate(density);
    let target: Vec<f64> = match (quantity, m) {
        (JumpQuantity::Value, 1) => density.iter().zip(&applied).map(|(f, t)| 0.5 * f + t).collect(),
        (JumpQuantity::Value, _) => applied,
        (JumpQuantity::NormalDerivative, 1) => density.iter().zip(&applied).map(|(f, t)| 0.5 * f - t).collect(),
        (JumpQuantity::NormalDerivative, _) => applied.iter().map(|t| -t).collect(),
    };
    let free = EvalOptions::unrestricted();
    let rows: Vec<Result<Vec<JumpRow>>> = panels
        .par_iter()
        .map(|&panel| {
            let ray = nontangential_samples_with(mesh, panel, rays)?;
            let normal = mesh.panels()[panel].normal();
            ray.samples
                .iter()
                .map(|&(t, x)| {
                    let value = match quantity {
                        JumpQuantity::Value => eval_m(mesh, m, density, x, &free)?,
                        JumpQuantity::NormalDerivative => dot3(eval_grad_mcal(mesh, m, density, x, &free)?, normal),
                    };
                    let target = target[panel];
                    Ok(JumpRow { panel, t, value, target, error: (value - target).abs() })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Sampled non-tangential maximal function; a lower bound for the true
/// supremum over each cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalFunction {
    pub panels: Vec<usize>,
    pub values: Vec<f64>,
    pub samples_per_ray: usize,
    pub rejected: usize,
}

impl MaximalFunction {
    /// Area-weighted `L²(∂D)` norm, extrapolated from the sampled panels.
    pub fn l2_norm(&self, mesh: &SurfaceMesh) -> f64 {
        let areas = mesh.areas();
        let (mut acc, mut covered) = (0.0, 0.0);
        for (&p, v) in self.panels.iter().zip(&self.values) {
            acc += areas[p] * v * v;
            covered += areas[p];
        }
        if covered == 0.0 {
            return 0.0;
        }
        (acc * mesh.total_area() / covered).sqrt()
    }
}

/// `sup |field|` over the ray samples of every `stride`-th panel.
pub fn nontangential_max(
    field: &(dyn Fn(Vec3) -> Result<f64> + Sync),
    mesh: &SurfaceMesh,
    rays: &RayOptions,
    stride: usize,
) -> Result<MaximalFunction> {
    let panels: Vec<usize> = (0..mesh.len()).step_by(stride.max(1)).collect();
    let per: Vec<Result<(f64, usize)>> = panels
        .par_iter()
        .map(|&p| {
            let ray = nontangential_samples_with(mesh, p, rays)?;
            let mut sup = 0.0f64;
            for &(_, x) in &ray.samples {
                sup = sup.max(field(x)?.abs());
            }
            Ok((sup, ray.rejected))
        })
        .collect();
    let mut values = Vec::with_capacity(panels.len());
    let mut rejected = 0;
    for r in per {
        let (v, rej) = r?;
        values.push(v);
        rejected += rej;
    }
    Ok(MaximalFunction { panels, values, samples_per_ray: rays.count, rejected })
}

pub type DataFn = Arc<dyn Fn(&SurfaceMesh) -> Vec<Vec<f64>> + Send + Sync>;

/// What the boundary data of a family are built from.
#[derive(Clone)]
pub enum FamilyData {
    /// Traces of the reference solution.
    Traces,
    Zero,
    Custom(DataFn),
}

/// A boundary value problem posed on the unit sphere at several levels.
#[derive(Clone)]
pub struct ProblemFamily {
    pub name: String,
    pub kind: ProblemKind,
    pub order: usize,
    /// Exact solution; `None` means `u ≡ 0`.
    pub reference: Option<Manufactured>,
    pub data: FamilyData,
}

impl ProblemFamily {
    pub fn manufactured(kind: ProblemKind, reference: Manufactured, order: usize) -> Self {
        Self { name: reference.name().into(), kind, order, reference: Some(reference), data: FamilyData::Traces }
    }

    pub fn zero(kind: ProblemKind, order: usize) -> Self {
        Self { name: "zero".into(), kind, order, reference: None, data: FamilyData::Zero }
    }

    pub fn custom(kind: ProblemKind, order: usize, reference: Manufactured, data: DataFn) -> Self {
        Self { name: reference.name().into(), kind, order, reference: Some(reference), data: FamilyData::Custom(data) }
    }

    pub fn data(&self, mesh: &SurfaceMesh) -> Vec<Vec<f64>> {
        match &self.data {
            FamilyData::Traces => {
                self.reference.expect("traces need a reference").traces(self.kind, mesh, self.order)
            }
            FamilyData::Zero => vec![vec![0.0; mesh.len()]; self.order],
            FamilyData::Custom(f) => f(mesh),
        }
    }

    /// Quantities compared at the probes. Neumann solutions are unique up to
    /// constants at every stage, so only the gradient is compared there.
    pub fn quantities(&self) -> Vec<String> {
        match self.kind {
            ProblemKind::Neumann => vec!["grad".into()],
            _ => {
                let mut q = vec!["u".to_string(), "grad".to_string()];
                q.extend((1..self.order).map(|k| format!("lap{k}")));
                q
            }
        }
    }

    fn reference_value(&self, quantity: &str, x: Vec3) -> (f64, Option<Vec3>) {
        let Some(s) = self.reference else { return (0.0, (quantity == "grad").then_some([0.0; 3])) };
        match quantity {
            "u" => (s.u(x), None),
            "grad" => {
                let g = s.gradient(x);
                (norm3(g), Some(g))
            }
            lap => (s.laplacian(lap[3..].parse().expect("lapK"), x), None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub level: u32,
    pub probe: usize,
    pub quantity: String,
    pub value: f64,
    pub reference: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantityErrors {
    pub quantity: String,
    /// Largest probe error per level, absolute.
    pub abs: Vec<f64>,
    /// The same, divided by the largest reference magnitude over the probes.
    pub rel: Vec<f64>,
    pub fitted_order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRecord {
    pub family: String,
    pub kind: ProblemKind,
    pub order: usize,
    pub levels: Vec<u32>,
    pub h: Vec<f64>,
    pub quantities: Vec<QuantityErrors>,
    pub reports: Vec<SolveReport>,
    #[serde(skip)]
    pub rows: Vec<CsvRow>,
    #[serde(skip)]
    pub solutions: Vec<CascadeSolution>,
}

impl ConvergenceRecord {
    pub fn quantity(&self, name: &str) -> Option<&QuantityErrors> {
        self.quantities.iter().find(|q| q.quantity == name)
    }
}

/// Least-squares slope of `log err` against `log h`; `None` with fewer than
/// two positive errors.
pub fn fit_order(h: &[f64], err: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = h.iter().zip(err).filter(|(_, &e)| e > 0.0).map(|(h, e)| (h.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Solves `family` on unit-sphere meshes at each level and records probe
/// errors.
pub fn convergence_study(family: &ProblemFamily, levels: &[u32], opts: &SolverOptions) -> Result<ConvergenceRecord> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PolypotError::InvalidArgument(format!("levels must be nonempty and strictly increasing: {levels:?}")));
    }
    if let Some(&l) = levels.iter().find(|&&l| l > 5) {
        return Err(PolypotError::LevelCap(l));
    }
    let probes = probe_points([0.0; 3], 1.0);
    let names = family.quantities();
    let mut quantities: Vec<QuantityErrors> = names
        .iter()
        .map(|q| QuantityErrors { quantity: q.clone(), abs: vec![], rel: vec![], fitted_order: None })
        .collect();
    let mut rec = ConvergenceRecord {
        family: family.name.clone(),
        kind: family.kind,
        order: family.order,
        levels: levels.to_vec(),
        h: vec![],
        quantities: vec![],
        reports: vec![],
        rows: vec![],
        solutions: vec![],
    };
    for &level in levels {
        let mesh = make_sphere_mesh(level, 1.0, [0.0; 3])?;
        let problem = BvpProblem::new(family.kind, &mesh, family.data(&mesh))?;
        let sol = solve(&problem, opts)?;
        let evals = probes.iter().map(|&x| sol.evaluate(x)).collect::<Result<Vec<_>>>()?;
        for (qe, name) in quantities.iter_mut().zip(&names) {
            let mut level_rows = Vec::with_capacity(probes.len());
            for (probe, (&x, e)) in probes.iter().zip(&evals).enumerate() {
                let (reference, ref_vec) = family.reference_value(name, x);
                let (value, abs_err) = match name.as_str() {
                    "u" => (e.u, (e.u - reference).abs()),
                    "grad" => (norm3(e.gradient), norm3(sub3(e.gradient, ref_vec.expect("gradient")))),
                    lap => {
                        let v = e.laplacians[lap[3..].parse::<usize>().expect("lapK") - 1];
                        (v, (v - reference).abs())
                    }
                };
                level_rows.push((probe, value, reference, abs_err));
            }
            let scale = level_rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
            let max_abs = level_rows.iter().map(|r| r.3).fold(0.0, f64::max);
            let rel = |a: f64| if scale > 0.0 { a / scale } else { a };
            qe.abs.push(max_abs);
            qe.rel.push(rel(max_abs));
            rec.rows.extend(level_rows.into_iter().map(|(probe, value, reference, abs_err)| CsvRow {
                level,
                probe,
                quantity: name.clone(),
                value,
                reference,
                abs_err,
                rel_err: rel(abs_err),
            }));
        }
        rec.h.push(mesh.h_max());
        rec.reports.push(sol.report().clone());
        rec.solutions.push(sol);
    }
    for q in &mut quantities {
        q.fitted_order = fit_order(&rec.h, &q.rel);
    }
    rec.quantities = quantities;
    Ok(rec)
}

/// Writes the rows with [`CSV_HEADER`]; numbers use a fixed format so equal
/// runs give identical bytes.
pub fn write_csv(rows: &[CsvRow], out: &mut dyn std::io::Write) -> std::io::Result<()> {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.15e},{:.15e},{:.6e},{:.6e}",
            r.level, r.probe, r.quantity, r.value, r.reference, r.abs_err, r.rel_err
        );
    }
    out.write_all(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_stay_inside_the_ball() {
        let p = probe_points([0.0; 3], 1.0);
        assert_eq!(p.len(), 10);
        assert!(p.iter().all(|x| norm3(*x) <= 0.7 + 1e-12));
        assert!(p.contains(&[0.5, 0.0, 0.0]));
    }

    #[test]
    fn order_fit_recovers_a_power_law() {
        let h = [0.4, 0.2, 0.1];
        let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h).collect();
        assert!((fit_order(&h, &e).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_order(&h, &[0.0, 0.0, 1.0]), None);
    }

    #[test]
    fn zero_family_has_zero_errors() {
        let fam = ProblemFamily::zero(ProblemKind::Dirichlet, 2);
        let rec = convergence_study(&fam, &[1, 2], &SolverOptions::default());
        // level 1 is too coarse for the outer probes
        assert!(matches!(rec, Err(PolypotError::TooClose { .. })));
        let rec = convergence_study(&fam, &[2], &SolverOptions::default()).unwrap();
        assert!(rec.quantities.iter().all(|q| q.abs.iter().all(|&e| e <= 1e-12)));
        assert_eq!(rec.rows.len(), 10 * 3);
    }

    #[test]
    fn study_rejects_bad_levels() {
        let fam = ProblemFamily::zero(ProblemKind::Dirichlet, 1);
        assert!(convergence_study(&fam, &[3, 2], &SolverOptions::default()).is_err());
        assert!(matches!(convergence_study(&fam, &[6], &SolverOptions::default()), Err(PolypotError::LevelCap(6))));
    }

    #[test]
    fn dirichlet_harmonic_converges() {
        let fam = ProblemFamily::manufactured(ProblemKind::Dirichlet, Manufactured::X1, 1);
        let rec = convergence_study(&fam, &[2, 3], &SolverOptions::default()).unwrap();
        let u = rec.quantity("u").unwrap();
        assert!(u.rel[1] < u.rel[0], "{:?}", u.rel);
        assert!(u.fitted_order.unwrap() >= 1.0, "{:?}", u.fitted_order);
        let mut a = Vec::new();
        write_csv(&rec.rows, &mut a).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 1 + rec.rows.len());
    }

    #[test]
    fn gauss_sweep_tends_to_one() {
        let mesh = make_sphere_mesh(2, 1.0, [0.0; 3]).unwrap();
        let ones = vec![1.0; mesh.len()];
        let rows =
            jump_relation_sweep(&mesh, &ones, 1, JumpQuantity::Value, &[0, 17, 99], &RayOptions::default()).unwrap();
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| (r.target - 1.0).abs() < 1e-12 && r.error < 1e-10), "{rows:?}");
    }

    #[test]
    fn maximal_function_of_a_constant() {
        let mesh = make_sphere_mesh(1, 1.0, [0.0; 3]).unwrap();
        let mf = nontangential_max(&|_| Ok(-2.5), &mesh, &RayOptions::default(), 3).unwrap();
        assert!(mf.values.iter().all(|&v| v == 2.5));
        let want = 2.5 * mesh.total_area().sqrt();
        assert!((mf.l2_norm(&mesh) - want).abs() < 0.1 * want);
    }
}
