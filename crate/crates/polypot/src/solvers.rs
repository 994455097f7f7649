//! Triangular cascades for the polyharmonic Dirichlet, Neumann and
//! regularity problems.
//!
//! Each cascade determines densities from the top layer down, one dense
//! solve per stage with corrections from the layers already known:
//!
//! * Dirichlet: `(½I + T) f̃_l = f_l − Σ_{j=l+2}^{m} K_{j−l} f̃_{j−1}`,
//!   `u = Σ_j M_j f̃_{j−1}`;
//! * Neumann: `(½I − T*) g̃_l = g_l + Σ_{j=l+2}^{m} K*_{j−l} g̃_{j−1}`,
//!   `u = Σ_j 𝓜_j g̃_{j−1}`;
//! * regularity: `𝓜_1 h̃_l = h_l − Σ_{j=l+2}^{m} 𝓜_{j−l} h̃_{j−1}`,
//!   `u = Σ_j 𝓜_j h̃_{j−1}`.

use std::time::Instant;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Col, Mat};
use polypot_core::math::{add3, scale3, Vec3};
use polypot_core::KernelError;
use serde::Serialize;

use crate::error::{PolypotError, Result};
use crate::geometry::SurfaceMesh;
use crate::operators::{
    assemble_many, fundamental_coefficient, grad_double_layer, mean, poisson_coefficient, solid_angle_gradient,
    DenseOperator, EvalOptions, Integration, OperatorKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProblemKind {
    Dirichlet,
    Neumann,
    Regularity,
}

impl std::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            "regularity" => Ok(Self::Regularity),
            other => Err(format!("unknown problem kind `{other}`")),
        }
    }
}

/// A boundary value problem of order `m = data.len()`; `data[k]` is the
/// trace of `Δᵏu` (Dirichlet, regularity) or of `∂_n Δᵏu` (Neumann).
#[derive(Debug, Clone)]
pub struct BvpProblem<'a> {
    kind: ProblemKind,
    mesh: &'a SurfaceMesh,
    data: Vec<Vec<f64>>,
}

impl<'a> BvpProblem<'a> {
    pub fn new(kind: ProblemKind, mesh: &'a SurfaceMesh, data: Vec<Vec<f64>>) -> Result<Self> {
        if data.is_empty() {
            return Err(KernelError::InvalidOrder(0).into());
        }
        for d in &data {
            if d.len() != mesh.len() {
                return Err(KernelError::DimensionMismatch { expected: mesh.len(), got: d.len() }.into());
            }
            if d.iter().any(|v| !v.is_finite()) {
                return Err(KernelError::NonFinite.into());
            }
        }
        Ok(Self { kind, mesh, data })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.data.len()
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        self.mesh
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub integration: Integration,
    /// Relative stage residual above which a stage is flagged.
    pub residual_tolerance: f64,
    pub refinement_steps: usize,
    /// Relative tolerance on the mean of the top Neumann datum.
    pub compatibility_tolerance: f64,
    /// Condition estimate above which a second-kind system is treated as
    /// singular.
    pub singular_condition: f64,
    /// Drop singular values below this fraction of the largest in the
    /// first-kind regularity solve.
    pub spectral_cutoff: Option<f64>,
    pub eval: EvalOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            integration: Integration::Analytic,
            residual_tolerance: 1e-10,
            refinement_steps: 2,
            compatibility_tolerance: 1e-8,
            singular_condition: 1e14,
            spectral_cutoff: None,
            eval: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: usize,
    /// `‖A x − b‖ / ‖b‖` after refinement (0 for zero data).
    pub residual: f64,
    pub rhs_norm: f64,
    pub refinement_steps: usize,
    pub flagged: bool,
    /// Neumann only: area-weighted mean of the stage right-hand side before
    /// any correction.
    pub compatibility: Option<f64>,
    /// Neumann only: multiple of the null vector added to the density one
    /// stage up to make this stage solvable.
    pub null_correction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub assembly_s: f64,
    pub factorization_s: f64,
    pub solve_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regularization {
    pub cutoff: f64,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub kind: ProblemKind,
    pub order: usize,
    pub panels: usize,
    pub stages: Vec<StageReport>,
    /// 1-norm condition estimate of the stage matrix.
    pub condition_estimate: f64,
    pub timing: Timing,
    pub compatibility_satisfied: bool,
    pub unique_modulo_constants: bool,
    pub regularization: Option<Regularization>,
}

impl SolveReport {
    pub fn max_residual(&self) -> f64 {
        self.stages.iter().map(|s| s.residual).fold(0.0, f64::max)
    }

    pub fn all_stages_converged(&self) -> bool {
        self.stages.iter().all(|s| !s.flagged)
    }
}

/// Densities of a solved cascade together with their evaluators.
#[derive(Debug, Clone)]
pub struct CascadeSolution {
    kind: ProblemKind,
    mesh: SurfaceMesh,
    densities: Vec<Vec<f64>>,
    eval: EvalOptions,
    report: SolveReport,
}

/// `u`, `Δᵏu` for `k = 1..m−1`, and `∇u` at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub u: f64,
    pub laplacians: Vec<f64>,
    pub gradient: Vec3,
}

impl CascadeSolution {
    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.densities.len()
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    /// `densities()[l]` is the tilded density of stage `l`.
    pub fn densities(&self) -> &[Vec<f64>] {
        &self.densities
    }

    pub fn report(&self) -> &SolveReport {
        &self.report
    }

    pub fn eval_options(&self) -> EvalOptions {
        self.eval
    }

    pub fn with_eval_options(mut self, eval: EvalOptions) -> Self {
        self.eval = eval;
        self
    }

    /// Layer sums at `x`: `Δᵏu = Σ_{j>k} L_{j−k} σ_{j−1}` with `L = M` for
    /// Dirichlet and `L = 𝓜` otherwise.
    pub fn evaluate(&self, x: Vec3) -> Result<Evaluation> {
        self.eval.check(&self.mesh, x)?;
        let m = self.order();
        let double = self.kind == ProblemKind::Dirichlet;
        let coef: Vec<f64> = (1..=m)
            .map(|j| if double { poisson_coefficient(j) } else { fundamental_coefficient(j) })
            .collect::<Result<_>>()?;
        let grad_coef: Vec<f64> = (1..=m).map(poisson_coefficient).collect::<Result<_>>()?;
        let q_max = (2 * m as i32 - 3).max(-1);
        let mut lap = vec![0.0; m];
        let mut gradient = [0.0; 3];
        let mut value = vec![0.0; m];
        let mut grad = vec![[0.0; 3]; m];
        for (k, p) in self.mesh.panels().iter().enumerate() {
            let pi = p.flat().integrals(x, q_max);
            for i in 1..=m {
                let q = 2 * i as i32;
                if double {
                    value[i - 1] = coef[i - 1] * pi.normal_flux(q - 5);
                    grad[i - 1] = if i == 1 {
                        scale3(grad_coef[0], solid_angle_gradient(p.flat(), x))
                    } else {
                        scale3(grad_coef[i - 1], grad_double_layer(&pi, q - 5))
                    };
                } else {
                    value[i - 1] = coef[i - 1] * pi.surface(q - 3);
                    grad[i - 1] = scale3(grad_coef[i - 1], pi.field(q - 5));
                }
            }
            for j in 1..=m {
                let sigma = self.densities[j - 1][k];
                if sigma == 0.0 {
                    continue;
                }
                for (order, l) in lap.iter_mut().enumerate().take(j) {
                    *l += value[j - order - 1] * sigma;
                }
                gradient = add3(gradient, scale3(sigma, grad[j - 1]));
            }
        }
        Ok(Evaluation { u: lap[0], laplacians: lap[1..].to_vec(), gradient })
    }
}

/// Dense LU of a stage matrix with refinement and condition estimation.
struct StageSystem {
    matrix: DenseOperator,
    lu: PartialPivLu<f64>,
}

impl StageSystem {
    fn new(matrix: DenseOperator) -> Self {
        let n = matrix.size();
        let lu = {
            let a = Mat::from_fn(n, n, |i, j| matrix.get(i, j));
            a.partial_piv_lu()
        };
        Self { matrix, lu }
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut c = Col::from_fn(b.len(), |i| b[i]);
        self.lu.solve_in_place(&mut c);
        (0..b.len()).map(|i| c[i]).collect()
    }

    fn raw_solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut c = Col::from_fn(b.len(), |i| b[i]);
        self.lu.solve_transpose_in_place(&mut c);
        (0..b.len()).map(|i| c[i]).collect()
    }

    fn solve(&self, stage: usize, b: &[f64], opts: &SolverOptions) -> (Vec<f64>, StageReport) {
        let rhs_norm = norm2(b);
        let mut x = self.raw_solve(b);
        let residual = |x: &[f64]| -> Vec<f64> {
            self.matrix.apply_accurate(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
        };
        let mut r = residual(&x);
        let mut steps = 0;
        while steps < opts.refinement_steps && norm2(&r) > 1e-3 * opts.residual_tolerance * rhs_norm {
            let dx = self.raw_solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
            r = residual(&x);
            steps += 1;
        }
        let rel = if rhs_norm > 0.0 { norm2(&r) / rhs_norm } else { norm2(&r) };
        let flagged = !(rel <= opts.residual_tolerance);
        let report = StageReport {
            stage,
            residual: rel,
            rhs_norm,
            refinement_steps: steps,
            flagged,
            compatibility: None,
            null_correction: None,
        };
        (x, report)
    }

    /// Hager's estimate of `‖A‖₁·‖A⁻¹‖₁`.
    fn condition_estimate(&self) -> f64 {
        let n = self.matrix.size();
        let norm_a = (0..n).map(|j| (0..n).map(|i| self.matrix.get(i, j).abs()).sum::<f64>()).fold(0.0, f64::max);
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.raw_solve(&x);
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.raw_solve_transpose(&xi);
            let (jmax, zmax) = z.iter().enumerate().fold((0, 0.0f64), |(bj, bv), (j, v)| {
                if v.abs() > bv {
                    (j, v.abs())
                } else {
                    (bj, bv)
                }
            });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[jmax] = 1.0;
        }
        if est.is_finite() {
            norm_a * est
        } else {
            f64::INFINITY
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn elapsed(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Adds `s·I` to a square operator.
fn shift_diagonal(op: DenseOperator, s: f64) -> DenseOperator {
    let (n, kind) = (op.size(), op.kind());
    let mut data = op.into_data();
    for i in 0..n {
        data[i * n + i] += s;
    }
    DenseOperator::from_row_major(kind, n, data).expect("square")
}

pub fn solve_dirichlet(problem: &BvpProblem<'_>, opts: &SolverOptions) -> Result<CascadeSolution> {
    expect_kind(problem, ProblemKind::Dirichlet)?;
    let mesh = problem.mesh;
    let m = problem.order();
    let t0 = Instant::now();
    let mut kinds = vec![OperatorKind::T];
    kinds.extend((2..=m).map(OperatorKind::Km));
    let mut ops = assemble_many(mesh, &kinds, opts.integration)?;
    let k_ops = ops.split_off(1);
    let t = ops.pop().expect("T");
    let assembly_s = elapsed(t0);

    let t1 = Instant::now();
    let system = StageSystem::new(shift_diagonal(t, 0.5));
    let condition = system.condition_estimate();
    let factorization_s = elapsed(t1);
    if !(condition < opts.singular_condition) {
        return Err(PolypotError::SingularSystem { stage: m - 1, condition });
    }

    let t2 = Instant::now();
    let mut dens: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut stages = Vec::with_capacity(m);
    for l in (0..m).rev() {
        let mut rhs = problem.data[l].clone();
        for j in l + 2..=m {
            let corr = k_ops[j - l - 2].apply(&dens[j - 1]);
            for (r, c) in rhs.iter_mut().zip(corr) {
                *r -= c;
            }
        }
        let (x, rep) = system.solve(l, &rhs, opts);
        dens[l] = x;
        stages.push(rep);
    }
    let report = SolveReport {
        kind: ProblemKind::Dirichlet,
        order: m,
        panels: mesh.len(),
        stages,
        condition_estimate: condition,
        timing: Timing { assembly_s, factorization_s, solve_s: elapsed(t2) },
        compatibility_satisfied: true,
        unique_modulo_constants: false,
        regularization: None,
    };
    Ok(CascadeSolution { kind: ProblemKind::Dirichlet, mesh: mesh.clone(), densities: dens, eval: opts.eval, report })
}

/// The Neumann cascade with the interior normal-derivative limit
/// `⟨∇𝓜_1 g, n⟩ → ½g − T*g`.
///
/// `½I − T*` annihilates one null vector `φ` and maps onto mean-zero
/// vectors. Stages are solved in the deflated form
/// `(½I − T* + 𝟙aᵀ/|∂D|) g̃ = b`, which pins the mean of `g̃` to zero. A stage
/// right-hand side with nonzero mean is made solvable by adding `c·φ` to
/// the density one stage up, which leaves that stage's equation intact.
pub fn solve_neumann(problem: &BvpProblem<'_>, opts: &SolverOptions) -> Result<CascadeSolution> {
    expect_kind(problem, ProblemKind::Neumann)?;
    let mesh = problem.mesh;
    let m = problem.order();
    let top = &problem.data[m - 1];
    let top_mean = mean(mesh, top);
    let top_scale = top.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if top_mean.abs() > opts.compatibility_tolerance * top_scale {
        return Err(PolypotError::Compatibility { stage: m - 1, magnitude: top_mean });
    }

    let t0 = Instant::now();
    let mut kinds = vec![OperatorKind::TStar];
    kinds.extend((2..=m).map(OperatorKind::KmStar));
    let mut ops = assemble_many(mesh, &kinds, opts.integration)?;
    let k_ops = ops.split_off(1);
    let tstar = ops.pop().expect("T*");
    let assembly_s = elapsed(t0);

    let t1 = Instant::now();
    let n = mesh.len();
    let areas = mesh.areas();
    let total = mesh.total_area();
    let mut data = tstar.into_data();
    for i in 0..n {
        for (j, v) in data[i * n..(i + 1) * n].iter_mut().enumerate() {
            *v = -*v + areas[j] / total;
        }
        data[i * n + i] += 0.5;
    }
    let system = StageSystem::new(DenseOperator::from_row_major(OperatorKind::TStar, n, data)?);
    let condition = system.condition_estimate();
    let factorization_s = elapsed(t1);
    if !(condition < opts.singular_condition) {
        return Err(PolypotError::SingularSystem { stage: m - 1, condition });
    }

    let t2 = Instant::now();
    // deflated B̃ maps the null vector to 𝟙 (with mean(φ) = 1)
    let phi = if m > 1 { system.raw_solve(&vec![1.0; n]) } else { Vec::new() };
    let k2_phi_mean = if m > 1 { mean(mesh, &k_ops[0].apply(&phi)) } else { 0.0 };

    let mut dens: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut stages: Vec<StageReport> = Vec::with_capacity(m);
    let mut compatible = true;
    for l in (0..m).rev() {
        let rhs_with = |dens: &[Vec<f64>]| -> Vec<f64> {
            let mut rhs = problem.data[l].clone();
            for j in l + 2..=m {
                let corr = k_ops[j - l - 2].apply(&dens[j - 1]);
                for (r, c) in rhs.iter_mut().zip(corr) {
                    *r += c;
                }
            }
            rhs
        };
        let mut rhs = rhs_with(&dens);
        let raw_mean = mean(mesh, &rhs);
        let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut correction = None;
        if l + 1 < m && raw_mean.abs() > opts.compatibility_tolerance * scale {
            if k2_phi_mean.abs() > 1e-12 {
                let c = -raw_mean / k2_phi_mean;
                for (d, p) in dens[l + 1].iter_mut().zip(&phi) {
                    *d += c * p;
                }
                correction = Some(c);
                rhs = rhs_with(&dens);
            } else {
                compatible = false;
            }
        }
        // remove the residual mean (rounding, or an uncorrectable violation)
        let left = mean(mesh, &rhs);
        if left.abs() > opts.compatibility_tolerance * scale.max(f64::MIN_POSITIVE) {
            compatible = false;
        }
        for r in rhs.iter_mut() {
            *r -= left;
        }
        let (x, mut rep) = system.solve(l, &rhs, opts);
        rep.compatibility = Some(raw_mean);
        rep.null_correction = correction;
        dens[l] = x;
        stages.push(rep);
    }
    let report = SolveReport {
        kind: ProblemKind::Neumann,
        order: m,
        panels: n,
        stages,
        condition_estimate: condition,
        timing: Timing { assembly_s, factorization_s, solve_s: elapsed(t2) },
        compatibility_satisfied: compatible,
        unique_modulo_constants: true,
        regularization: None,
    };
    Ok(CascadeSolution { kind: ProblemKind::Neumann, mesh: mesh.clone(), densities: dens, eval: opts.eval, report })
}

pub fn solve_regularity(problem: &BvpProblem<'_>, opts: &SolverOptions) -> Result<CascadeSolution> {
    expect_kind(problem, ProblemKind::Regularity)?;
    let mesh = problem.mesh;
    let m = problem.order();
    let n = mesh.len();
    let t0 = Instant::now();
    let kinds: Vec<OperatorKind> = (1..=m).map(OperatorKind::Mcal).collect();
    let mut ops = assemble_many(mesh, &kinds, opts.integration)?;
    let corr_ops = ops.split_off(1);
    let single = ops.pop().expect("single layer");
    let assembly_s = elapsed(t0);

    let t1 = Instant::now();
    let (pseudo, regularization) = match opts.spectral_cutoff {
        Some(cut) => {
            let a = Mat::from_fn(n, n, |i, j| single.get(i, j));
            let svd = a.thin_svd().map_err(|e| PolypotError::InvalidArgument(format!("SVD failed: {e:?}")))?;
            let s = svd.S().column_vector();
            let smax = (0..n).map(|i| s[i]).fold(0.0, f64::max);
            let keep: Vec<bool> = (0..n).map(|i| s[i] >= cut * smax).collect();
            let dropped = keep.iter().filter(|k| !**k).count();
            let (u, v) = (svd.U().to_owned(), svd.V().to_owned());
            let sv: Vec<f64> = (0..n).map(|i| s[i]).collect();
            (Some((u, v, sv, keep)), Some(Regularization { cutoff: cut, dropped }))
        }
        None => (None, None),
    };
    let system = StageSystem::new(single);
    let condition = system.condition_estimate();
    let factorization_s = elapsed(t1);
    if !condition.is_finite() {
        return Err(PolypotError::SingularSystem { stage: m - 1, condition });
    }

    let t2 = Instant::now();
    let mut dens: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut stages = Vec::with_capacity(m);
    for l in (0..m).rev() {
        let mut rhs = problem.data[l].clone();
        for j in l + 2..=m {
            let corr = corr_ops[j - l - 2].apply(&dens[j - 1]);
            for (r, c) in rhs.iter_mut().zip(corr) {
                *r -= c;
            }
        }
        let (x, rep) = match &pseudo {
            None => system.solve(l, &rhs, opts),
            Some((u, v, s, keep)) => {
                // x = V Σ⁺ Uᵀ b over the retained singular triplets
                let mut coeff = vec![0.0; n];
                for k in 0..n {
                    if keep[k] {
                        coeff[k] = (0..n).map(|i| u[(i, k)] * rhs[i]).sum::<f64>() / s[k];
                    }
                }
                let x: Vec<f64> = (0..n).map(|i| (0..n).map(|k| v[(i, k)] * coeff[k]).sum()).collect();
                let r: Vec<f64> = system.matrix.apply_accurate(&x).iter().zip(&rhs).map(|(a, b)| b - a).collect();
                let rhs_norm = norm2(&rhs);
                let rel = if rhs_norm > 0.0 { norm2(&r) / rhs_norm } else { norm2(&r) };
                let rep = StageReport {
                    stage: l,
                    residual: rel,
                    rhs_norm,
                    refinement_steps: 0,
                    flagged: !(rel <= opts.residual_tolerance),
                    compatibility: None,
                    null_correction: None,
                };
                (x, rep)
            }
        };
        dens[l] = x;
        stages.push(rep);
    }
    let report = SolveReport {
        kind: ProblemKind::Regularity,
        order: m,
        panels: n,
        stages,
        condition_estimate: condition,
        timing: Timing { assembly_s, factorization_s, solve_s: elapsed(t2) },
        compatibility_satisfied: true,
        unique_modulo_constants: false,
        regularization,
    };
    Ok(CascadeSolution { kind: ProblemKind::Regularity, mesh: mesh.clone(), densities: dens, eval: opts.eval, report })
}

/// Dispatches on the problem kind.
pub fn solve(problem: &BvpProblem<'_>, opts: &SolverOptions) -> Result<CascadeSolution> {
    match problem.kind {
        ProblemKind::Dirichlet => solve_dirichlet(problem, opts),
        ProblemKind::Neumann => solve_neumann(problem, opts),
        ProblemKind::Regularity => solve_regularity(problem, opts),
    }
}

fn expect_kind(problem: &BvpProblem<'_>, kind: ProblemKind) -> Result<()> {
    if problem.kind != kind {
        return Err(PolypotError::InvalidArgument(format!(
            "expected a {kind:?} problem, got {:?}",
            problem.kind
        )));
    }
    Ok(())
}
