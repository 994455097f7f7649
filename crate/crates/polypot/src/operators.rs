//! Dense boundary operators and volume potentials for piecewise-constant
//! densities on flat panels (`n = 2`).
//!
//! With `d = ⟨X − Q, n_Q⟩` and `R = |X − Q|`, every kernel needed here is a
//! radial power, so panel integrals come in closed form from
//! [`polypot_core::panel`]:
//!
//! * `⟨K_j(X,Q), n_Q⟩ = a_j·d·R^{2j−5}`,
//! * `𝒦_j(X,Q) = b_j·R^{2j−3}`,
//! * `K_j(X,Q) = a_j·(X − Q)·R^{2j−5} = ∇_X 𝒦_j`.
//!
//! [`Integration::Quadrature`] replaces the closed forms by panel quadrature
//! through the kernel module and serves as an independent oracle.

use std::io::{Read as _, Write as _};
use std::path::Path;

use polypot_core::math::{add3, cross3, dot3, norm3, scale3, sub3, Vec3};
use polypot_core::panel::{PanelIntegrals, MAX_POWER};
use polypot_core::quadrature::{duffy_interior, gauss_legendre, map_rule, subdivide, triangle_area, RADON7, STRANG3};
use polypot_core::{KernelError, KernelSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PolypotError, Result};
use crate::geometry::SurfaceMesh;

/// Boundary operator tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OperatorKind {
    T,
    TStar,
    Km(usize),
    KmStar(usize),
    SingleLayer,
    /// Boundary values of the `j`th-layer `𝒮`-potential (`Mcal(1)` is the
    /// single layer).
    Mcal(usize),
}

impl OperatorKind {
    /// Stable numeric code used in the binary export header.
    pub fn code(self) -> u64 {
        match self {
            Self::T => 1,
            Self::TStar => 2,
            Self::SingleLayer => 3,
            Self::Km(m) => 100 + m as u64,
            Self::KmStar(m) => 200 + m as u64,
            Self::Mcal(j) => 300 + j as u64,
        }
    }

    pub fn from_code(code: u64) -> Option<Self> {
        Some(match code {
            1 => Self::T,
            2 => Self::TStar,
            3 => Self::SingleLayer,
            101..=199 => Self::Km((code - 100) as usize),
            201..=299 => Self::KmStar((code - 200) as usize),
            301..=399 => Self::Mcal((code - 300) as usize),
            _ => return None,
        })
    }
}

/// How panel integrals are computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Integration {
    #[default]
    Analytic,
    /// Three-point rule, subdivided on nearby panels, Duffy on self panels.
    Quadrature,
}

/// One real value per panel centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDensity {
    values: Vec<f64>,
}

impl BoundaryDensity {
    pub fn new(mesh: &SurfaceMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(KernelError::DimensionMismatch { expected: mesh.len(), got: values.len() }.into());
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::NonFinite.into());
        }
        Ok(Self { values })
    }

    pub fn zeros(mesh: &SurfaceMesh) -> Self {
        Self { values: vec![0.0; mesh.len()] }
    }

    /// Samples `f` at the collocation nodes.
    pub fn from_fn(mesh: &SurfaceMesh, f: impl Fn(Vec3) -> f64) -> Result<Self> {
        Self::new(mesh, mesh.panels().iter().map(|p| f(p.centroid())).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Area-weighted integral `∫ f dσ`.
pub fn integrate(mesh: &SurfaceMesh, f: &[f64]) -> f64 {
    mesh.panels().iter().zip(f).map(|(p, v)| p.area() * v).sum()
}

/// Area-weighted mean.
pub fn mean(mesh: &SurfaceMesh, f: &[f64]) -> f64 {
    integrate(mesh, f) / mesh.total_area()
}

/// Discrete `L^p(∂D)` norm.
pub fn lp_norm(mesh: &SurfaceMesh, f: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return f.iter().fold(0.0, |a, v| a.max(v.abs()));
    }
    mesh.panels().iter().zip(f).map(|(q, v)| q.area() * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// A dense `N × N` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    kind: OperatorKind,
    n: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn from_row_major(kind: OperatorKind, n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(KernelError::DimensionMismatch { expected: n * n, got: data.len() }.into());
        }
        Ok(Self { kind, n, data })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        self.data.par_chunks(self.n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// `A·x` with accumulation in compensated summation, used for residuals.
    pub fn apply_accurate(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .par_chunks(self.n)
            .map(|row| {
                let (mut s, mut c) = (0.0f64, 0.0f64);
                for (a, b) in row.iter().zip(x) {
                    let y = a * b - c;
                    let t = s + y;
                    c = (t - s) - y;
                    s = t;
                }
                s
            })
            .collect()
    }

    /// The operator adjoint in the area-weighted inner product:
    /// `B[j][i] = area_i·A[i][j] / area_j`.
    pub fn weighted_adjoint(&self, areas: &[f64], kind: OperatorKind) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = areas[i] * self.data[i * n + j] / areas[j];
            }
        });
        Self { kind, n, data }
    }

    /// Writes a 16-byte header (`N`, kind code; little-endian `u64`)
    /// followed by the entries as little-endian `f64`, row-major.
    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |source| PolypotError::Io { path: path.into(), source };
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        w.write_all(&(self.n as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&self.kind.code().to_le_bytes()).map_err(io)?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn import(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let io = |source| PolypotError::Io { path: path.into(), source };
        let mut bytes = Vec::new();
        std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io)?;
        let bad = |message: String| PolypotError::Parse { path: path.into(), line: 0, message };
        if bytes.len() < 16 {
            return Err(bad("file shorter than its header".into()));
        }
        let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
        let n = word(0) as usize;
        let kind = OperatorKind::from_code(word(1)).ok_or_else(|| bad(format!("unknown kind code {}", word(1))))?;
        if bytes.len() != 16 + 8 * n * n {
            return Err(bad(format!("expected {} bytes for N = {n}, found {}", 16 + 8 * n * n, bytes.len())));
        }
        let data = bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { kind, n, data })
    }
}

/// `a_j` with `K_j(X,Q) = a_j (X − Q) R^{2j−5}` in ℝ³.
pub fn poisson_coefficient(j: usize) -> Result<f64> {
    let spec = KernelSpec::bounded(2, j)?;
    Ok(spec.d_power_law().expect("n = 2 kernels are pure powers").0)
}

/// `b_j` with `𝒦_j(X,Q) = b_j R^{2j−3}` in ℝ³.
pub fn fundamental_coefficient(j: usize) -> Result<f64> {
    let spec = KernelSpec::bounded(2, j)?;
    Ok(spec.dcal_power_law().expect("n = 2 kernels are pure powers").0)
}

fn check_layer(j: usize) -> Result<()> {
    if j == 0 || 2 * j as i32 - 1 > MAX_POWER {
        return Err(KernelError::InvalidOrder(j).into());
    }
    Ok(())
}

/// The operators with their own kernel; starred ones are derived.
#[derive(Clone, Copy)]
enum Base {
    DoubleLayer(usize),
    Mcal(usize),
}

impl Base {
    fn of(kind: OperatorKind) -> Result<(Self, bool)> {
        Ok(match kind {
            OperatorKind::T => (Self::DoubleLayer(1), false),
            OperatorKind::TStar => (Self::DoubleLayer(1), true),
            OperatorKind::Km(m) | OperatorKind::KmStar(m) => {
                if m < 2 {
                    return Err(KernelError::InvalidOrder(m).into());
                }
                check_layer(m)?;
                (Self::DoubleLayer(m), matches!(kind, OperatorKind::KmStar(_)))
            }
            OperatorKind::SingleLayer => (Self::Mcal(1), false),
            OperatorKind::Mcal(j) => {
                check_layer(j)?;
                (Self::Mcal(j), false)
            }
        })
    }

    fn q_max(self) -> i32 {
        match self {
            Self::DoubleLayer(j) => (2 * j as i32 - 5).max(-1),
            Self::Mcal(j) => 2 * j as i32 - 3,
        }
    }

    fn coefficient(self) -> Result<f64> {
        match self {
            Self::DoubleLayer(j) => poisson_coefficient(j),
            Self::Mcal(j) => fundamental_coefficient(j),
        }
    }

    fn closed_form(self, pi: &PanelIntegrals) -> f64 {
        match self {
            Self::DoubleLayer(j) => pi.normal_flux(2 * j as i32 - 5),
            Self::Mcal(j) => pi.surface(2 * j as i32 - 3),
        }
    }
}

/// Quadrature entry through the kernel module: row `i`, source panel `k`.
fn numeric_entry(base: Base, spec: &KernelSpec, mesh: &SurfaceMesh, i: usize, k: usize) -> f64 {
    let target = &mesh.panels()[i];
    let source = &mesh.panels()[k];
    let x = target.centroid();
    let n = source.normal();
    let v = source.vertices();
    let kernel = |q: Vec3| -> f64 {
        match base {
            Base::DoubleLayer(_) => spec.poisson_normal(&x, &q, &n).unwrap_or(0.0),
            Base::Mcal(_) => spec.eval_kcal(&x, &q).unwrap_or(0.0),
        }
    };
    if i == k {
        // the double-layer kernel is orthogonal to the flat self panel
        return match base {
            Base::DoubleLayer(_) => 0.0,
            Base::Mcal(_) => duffy_interior(v, x, 8).iter().map(|(q, w)| w * kernel(*q)).sum(),
        };
    }
    let near = norm3(sub3(x, source.centroid())) < 2.0 * source.diameter()
        || target.indices().iter().any(|a| source.indices().contains(a));
    if near {
        let mut tris = vec![*v];
        for _ in 0..2 {
            tris = tris.iter().flat_map(subdivide).collect();
        }
        tris.iter().flat_map(|t| map_rule(&STRANG3, t)).map(|(q, w)| w * kernel(q)).sum()
    } else {
        source.quadrature().map(|(q, w)| w * kernel(q)).sum()
    }
}

/// Assembles several operators in one sweep over the rows. With analytic
/// integration each panel pair is integrated once for all requested kinds.
pub fn assemble_many(
    mesh: &SurfaceMesh,
    kinds: &[OperatorKind],
    integration: Integration,
) -> Result<Vec<DenseOperator>> {
    let n = mesh.len();
    let mut bases = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let (base, starred) = Base::of(kind)?;
        let spec = match base {
            Base::DoubleLayer(j) | Base::Mcal(j) => KernelSpec::bounded(2, j)?,
        };
        bases.push((base, base.coefficient()?, spec, starred));
    }
    let q_max = bases.iter().map(|b| b.0.q_max()).max().unwrap_or(-1);
    let mut out: Vec<DenseOperator> =
        kinds.iter().map(|&kind| DenseOperator { kind, n, data: vec![0.0; n * n] }).collect();

    let fill = |i: usize| -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; n]; bases.len()];
        match integration {
            Integration::Analytic => {
                let x = mesh.panels()[i].centroid();
                for (k, p) in mesh.panels().iter().enumerate() {
                    let pi = p.flat().integrals(x, q_max);
                    for (row, (base, coef, _, _)) in rows.iter_mut().zip(&bases) {
                        row[k] = coef * base.closed_form(&pi);
                    }
                }
            }
            Integration::Quadrature => {
                for (row, (base, _, spec, _)) in rows.iter_mut().zip(&bases) {
                    for (k, v) in row.iter_mut().enumerate() {
                        *v = numeric_entry(*base, spec, mesh, i, k);
                    }
                }
            }
        }
        for (row, &kind) in rows.iter_mut().zip(kinds) {
            if matches!(kind, OperatorKind::T | OperatorKind::TStar) {
                // Gauss identity: T·1 = 1/2
                row[i] = 0.0;
                row[i] = 0.5 - row.iter().sum::<f64>();
            }
        }
        rows
    };

    const CHUNK: usize = 32;
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let rows: Vec<Vec<Vec<f64>>> = (start..end).into_par_iter().map(fill).collect();
        for (r, per_kind) in rows.into_iter().enumerate() {
            let i = start + r;
            for (op, row) in out.iter_mut().zip(per_kind) {
                op.data[i * n..(i + 1) * n].copy_from_slice(&row);
            }
        }
    }
    let areas = mesh.areas();
    for (op, (_, _, _, starred)) in out.iter_mut().zip(&bases) {
        if *starred {
            *op = op.weighted_adjoint(&areas, op.kind);
        }
    }
    Ok(out)
}

fn assemble_one(mesh: &SurfaceMesh, kind: OperatorKind, integration: Integration) -> Result<DenseOperator> {
    Ok(assemble_many(mesh, &[kind], integration)?.pop().expect("one operator"))
}

/// Principal-value double layer at the collocation nodes, diagonal fixed by
/// `T·1 = 1/2`.
pub fn assemble_t(mesh: &SurfaceMesh, integration: Integration) -> Result<DenseOperator> {
    assemble_one(mesh, OperatorKind::T, integration)
}

/// Area-weighted adjoint of [`assemble_t`].
pub fn assemble_tstar(mesh: &SurfaceMesh, integration: Integration) -> Result<DenseOperator> {
    assemble_one(mesh, OperatorKind::TStar, integration)
}

pub fn assemble_km(mesh: &SurfaceMesh, m: usize, integration: Integration) -> Result<DenseOperator> {
    assemble_one(mesh, OperatorKind::Km(m), integration)
}

pub fn assemble_kmstar(mesh: &SurfaceMesh, m: usize, integration: Integration) -> Result<DenseOperator> {
    assemble_one(mesh, OperatorKind::KmStar(m), integration)
}

pub fn assemble_single_layer(mesh: &SurfaceMesh, integration: Integration) -> Result<DenseOperator> {
    assemble_one(mesh, OperatorKind::SingleLayer, integration)
}

/// Boundary values of `𝓜_j` at the collocation nodes.
pub fn assemble_mcal(mesh: &SurfaceMesh, j: usize, integration: Integration) -> Result<DenseOperator> {
    assemble_one(mesh, OperatorKind::Mcal(j), integration)
}

/// Near-boundary policy for volume potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Minimum distance to the boundary in units of the mean panel
    /// diameter; `0` disables both the distance and the inside check.
    pub exclusion: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { exclusion: 0.5 }
    }
}

impl EvalOptions {
    pub fn unrestricted() -> Self {
        Self { exclusion: 0.0 }
    }

    /// Checks that `x` is inside and outside the exclusion band.
    pub fn check(&self, mesh: &SurfaceMesh, x: Vec3) -> Result<()> {
        if x.iter().any(|c| !c.is_finite()) {
            return Err(KernelError::NonFinite.into());
        }
        if self.exclusion <= 0.0 {
            return Ok(());
        }
        let band = self.exclusion * mesh.h_mean();
        let distance = mesh.distance(x);
        if distance < band {
            return Err(PolypotError::TooClose { distance, band });
        }
        if !mesh.contains(x) {
            return Err(PolypotError::InvalidArgument(format!("point {x:?} lies outside the domain")));
        }
        Ok(())
    }
}

/// Calls `visit(k, integrals)` for every panel, with powers up to `q_max`.
pub fn for_each_panel(mesh: &SurfaceMesh, x: Vec3, q_max: i32, mut visit: impl FnMut(usize, &PanelIntegrals)) {
    for (k, p) in mesh.panels().iter().enumerate() {
        visit(k, &p.flat().integrals(x, q_max));
    }
}

/// `∇_X` of `∫_T ⟨X − Q, n⟩/R³ dσ`, as a sum over edges.
pub fn solid_angle_gradient(panel: &polypot_core::panel::FlatPanel, x: Vec3) -> Vec3 {
    let v = panel.vertices();
    let mut g = [0.0; 3];
    for k in 0..3 {
        let a = v[k];
        let e = sub3(v[(k + 1) % 3], a);
        let len = norm3(e);
        let t = scale3(1.0 / len, e);
        let w = sub3(x, a);
        let s0 = -dot3(w, t);
        let s1 = s0 + len;
        let r0sq = (dot3(w, w) - dot3(w, t).powi(2)).max(0.0);
        let r_at = |s: f64| (s * s + r0sq).sqrt();
        let line = s1 / (r0sq * r_at(s1)) - s0 / (r0sq * r_at(s0));
        g = add3(g, scale3(line, cross3(w, t)));
    }
    g
}

/// `M_j f(X) = Σ_k f_k ∫ ⟨K_j(X,Q), n_Q⟩ dσ`.
pub fn eval_m(mesh: &SurfaceMesh, j: usize, f: &[f64], x: Vec3, opts: &EvalOptions) -> Result<f64> {
    check_layer(j)?;
    check_density(mesh, f)?;
    opts.check(mesh, x)?;
    let a = poisson_coefficient(j)?;
    let q = 2 * j as i32 - 5;
    let mut s = 0.0;
    for_each_panel(mesh, x, q.max(-1), |k, pi| s += f[k] * pi.normal_flux(q));
    Ok(a * s)
}

/// `∇M_j f(X)`.
pub fn eval_grad_m(mesh: &SurfaceMesh, j: usize, f: &[f64], x: Vec3, opts: &EvalOptions) -> Result<Vec3> {
    check_layer(j)?;
    check_density(mesh, f)?;
    opts.check(mesh, x)?;
    let a = poisson_coefficient(j)?;
    let mut g = [0.0; 3];
    if j == 1 {
        for (p, fk) in mesh.panels().iter().zip(f) {
            g = add3(g, scale3(*fk, solid_angle_gradient(p.flat(), x)));
        }
    } else {
        let q = 2 * j as i32 - 5;
        for_each_panel(mesh, x, q.max(-1), |k, pi| {
            g = add3(g, scale3(f[k], grad_double_layer(pi, q)));
        });
    }
    Ok(scale3(a, g))
}

/// `∇_X ∫_T d·R^q dσ = n S_q + q d F_{q−2}` for `q ≥ −1`.
pub(crate) fn grad_double_layer(pi: &PanelIntegrals, q: i32) -> Vec3 {
    let n = pi.normal();
    add3(scale3(pi.surface(q), n), scale3(q as f64 * pi.height(), pi.field(q - 2)))
}

/// `𝓜_j f(X) = Σ_k f_k ∫ 𝒦_j(X,Q) dσ`.
pub fn eval_mcal(mesh: &SurfaceMesh, j: usize, f: &[f64], x: Vec3, opts: &EvalOptions) -> Result<f64> {
    check_layer(j)?;
    check_density(mesh, f)?;
    opts.check(mesh, x)?;
    let b = fundamental_coefficient(j)?;
    let q = 2 * j as i32 - 3;
    let mut s = 0.0;
    for_each_panel(mesh, x, q, |k, pi| s += f[k] * pi.surface(q));
    Ok(b * s)
}

/// `∇𝓜_j f(X)` through the Poisson field, without differentiation.
pub fn eval_grad_mcal(mesh: &SurfaceMesh, j: usize, f: &[f64], x: Vec3, opts: &EvalOptions) -> Result<Vec3> {
    check_layer(j)?;
    check_density(mesh, f)?;
    opts.check(mesh, x)?;
    let a = poisson_coefficient(j)?;
    let q = 2 * j as i32 - 5;
    let mut g = [0.0; 3];
    for_each_panel(mesh, x, q + 2, |k, pi| g = add3(g, scale3(f[k], pi.field(q))));
    Ok(scale3(a, g))
}

fn check_density(mesh: &SurfaceMesh, f: &[f64]) -> Result<()> {
    if f.len() != mesh.len() {
        return Err(KernelError::DimensionMismatch { expected: mesh.len(), got: f.len() }.into());
    }
    Ok(())
}

/// Domain of a Newtonian potential.
#[derive(Debug, Clone, Copy)]
pub enum NewtonDomain<'a> {
    Ball { center: Vec3, radius: f64 },
    Mesh(&'a SurfaceMesh),
}

/// `𝒩_m(Y) = ∫_D 𝒟_m(X, Y) dX`, for `Y` in the closure of `D`.
///
/// The ball route integrates in spherical coordinates about `Y`. The mesh
/// route uses the divergence theorem about `Y`,
/// `∫_D ψ(|X−Y|) dX = ∫_∂D G(ρ)⟨Q−Y, n⟩/ρ³ dσ` with `G(ρ) = ∫_0^ρ ψ(r) r² dr`,
/// integrated by adaptive panel quadrature.
pub fn newtonian_potential(domain: NewtonDomain<'_>, m: usize, y: Vec3) -> Result<f64> {
    let spec = KernelSpec::bounded(2, m)?;
    let (rx, rw) = gauss_legendre(m + 6);
    let radial = |rho: f64| -> f64 {
        rx.iter().zip(&rw).map(|(t, w)| w * rho * spec.dcal_radial(t * rho) * (t * rho).powi(2)).sum()
    };
    match domain {
        NewtonDomain::Ball { center, radius } => {
            let c = sub3(y, center);
            let cc = dot3(c, c);
            if cc > radius * radius * (1.0 + 1e-12) {
                return Err(PolypotError::InvalidArgument(format!("point {y:?} lies outside the ball")));
            }
            let (mu, mw) = gauss_legendre(48);
            let nphi = 96;
            let mut total = 0.0;
            for (u, wu) in mu.iter().zip(&mw) {
                let ct = 2.0 * u - 1.0;
                let st = (1.0 - ct * ct).sqrt();
                for k in 0..nphi {
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / nphi as f64;
                    let dir = [st * phi.cos(), st * phi.sin(), ct];
                    // |c + ρ dir| = radius
                    let b = dot3(c, dir);
                    let rho = -b + (b * b + radius * radius - cc).max(0.0).sqrt();
                    total += 2.0 * wu * (2.0 * std::f64::consts::PI / nphi as f64) * radial(rho);
                }
            }
            Ok(total)
        }
        NewtonDomain::Mesh(mesh) => {
            let scale = mesh.total_area() * radial(mesh.h_max()).abs().max(f64::MIN_POSITIVE)
                / mesh.h_max().powi(2);
            let integrand = |q: Vec3, n: Vec3| -> f64 {
                let d = sub3(q, y);
                let rho = norm3(d);
                if rho == 0.0 {
                    return 0.0;
                }
                radial(rho) * dot3(d, n) / rho.powi(3)
            };
            let mut total = 0.0;
            for p in mesh.panels() {
                let n = p.normal();
                total += adaptive(p.vertices(), &|q| integrand(q, n), 1e-10 * scale / mesh.len() as f64, 10);
            }
            Ok(total)
        }
    }
}

fn adaptive(t: &[Vec3; 3], f: &dyn Fn(Vec3) -> f64, tol: f64, depth: u32) -> f64 {
    let whole: f64 = map_rule(&RADON7, t).map(|(q, w)| w * f(q)).sum();
    let kids = subdivide(t);
    let parts: [f64; 4] = std::array::from_fn(|k| map_rule(&RADON7, &kids[k]).map(|(q, w)| w * f(q)).sum());
    let sum: f64 = parts.iter().sum();
    // below this the difference is rounding, not truncation
    let floor = 1e-14 * parts.iter().map(|p| p.abs()).sum::<f64>();
    if (sum - whole).abs() <= tol.max(floor) || depth == 0 || triangle_area(t) == 0.0 {
        return sum;
    }
    kids.iter().map(|k| adaptive(k, f, tol / 4.0, depth - 1)).sum()
}
