//! Closed triangulated surfaces in ℝ³.

use std::collections::HashMap;
use std::f64::consts::PI;

use polypot_core::math::{add3, cross3, dot3, norm3, scale3, sub3, Vec3};
use polypot_core::panel::FlatPanel;
use polypot_core::quadrature::{map_rule, STRANG3};
use serde::Serialize;

use crate::error::{PolypotError, Result};

/// Largest accepted icosphere refinement level.
pub const MAX_SPHERE_LEVEL: u32 = 7;

/// One triangle of a [`SurfaceMesh`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    indices: [usize; 3],
    flat: FlatPanel,
}

impl Panel {
    pub fn indices(&self) -> [usize; 3] {
        self.indices
    }

    pub fn flat(&self) -> &FlatPanel {
        &self.flat
    }

    pub fn vertices(&self) -> &[Vec3; 3] {
        self.flat.vertices()
    }

    pub fn centroid(&self) -> Vec3 {
        self.flat.centroid()
    }

    /// Outward unit normal.
    pub fn normal(&self) -> Vec3 {
        self.flat.normal()
    }

    pub fn area(&self) -> f64 {
        self.flat.area()
    }

    pub fn diameter(&self) -> f64 {
        self.flat.diameter()
    }

    /// Three-point symmetric rule on the panel.
    pub fn quadrature(&self) -> impl Iterator<Item = (Vec3, f64)> + 'static {
        map_rule(&STRANG3, self.flat.vertices())
    }
}

/// An immutable, validated, outward-oriented closed surface.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    panels: Vec<Panel>,
    total_area: f64,
    volume: f64,
    h_max: f64,
    h_mean: f64,
}

impl SurfaceMesh {
    /// Builds and validates a mesh: indices in range, no degenerate faces,
    /// every edge shared by exactly two faces traversing it in opposite
    /// directions, and positive enclosed volume.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(PolypotError::InvalidArgument("mesh has no faces".into()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(PolypotError::Kernel(polypot_core::KernelError::NonFinite));
        }
        let mut panels = Vec::with_capacity(faces.len());
        for (f, idx) in faces.iter().enumerate() {
            for &i in idx {
                if i >= vertices.len() {
                    return Err(PolypotError::IndexOutOfRange { face: f, index: i, vertices: vertices.len() });
                }
            }
            if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
                return Err(PolypotError::DegenerateFace(f));
            }
            let flat = FlatPanel::new([vertices[idx[0]], vertices[idx[1]], vertices[idx[2]]])
                .ok_or(PolypotError::DegenerateFace(f))?;
            panels.push(Panel { indices: *idx, flat });
        }

        let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
        for idx in &faces {
            for k in 0..3 {
                let (a, b) = (idx[k], idx[(k + 1) % 3]);
                *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut bad: Vec<_> = undirected.iter().filter(|(_, &c)| c != 2).collect();
        bad.sort();
        if let Some((&(a, b), &c)) = bad.first() {
            return Err(PolypotError::NonManifold(a, b, c));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (f, idx) in faces.iter().enumerate() {
            for k in 0..3 {
                let e = (idx[k], idx[(k + 1) % 3]);
                if let Some(g) = directed.insert(e, f) {
                    return Err(PolypotError::Orientation(format!(
                        "faces {g} and {f} traverse edge ({}, {}) in the same direction",
                        e.0, e.1
                    )));
                }
            }
        }

        let volume: f64 = panels
            .iter()
            .map(|p| {
                let v = p.vertices();
                dot3(v[0], cross3(v[1], v[2])) / 6.0
            })
            .sum();
        if !(volume > 0.0) {
            return Err(PolypotError::Orientation(format!("signed volume {volume:.6e} is not positive")));
        }
        let total_area = panels.iter().map(Panel::area).sum();
        let h_max = panels.iter().map(Panel::diameter).fold(0.0, f64::max);
        let h_mean = panels.iter().map(Panel::diameter).sum::<f64>() / panels.len() as f64;
        Ok(Self { vertices, panels, total_area, volume, h_max, h_mean })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn faces(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.panels.iter().map(Panel::indices)
    }

    /// Number of panels, which is also the number of collocation nodes.
    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    /// Panel centroids.
    pub fn collocation_nodes(&self) -> Vec<Vec3> {
        self.panels.iter().map(Panel::centroid).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.panels.iter().map(Panel::area).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    /// Enclosed signed volume (positive for outward orientation).
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Largest panel diameter.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Mean panel diameter.
    pub fn h_mean(&self) -> f64 {
        self.h_mean
    }

    /// Splits every panel into four through edge midpoints.
    pub fn refine(&self) -> Result<Self> {
        let (v, f) = midpoint_split(self.vertices.clone(), self.faces().collect(), |p| p);
        Self::new(v, f)
    }

    /// Euclidean distance from `x` to the surface.
    pub fn distance(&self, x: Vec3) -> f64 {
        self.panels
            .iter()
            .map(|p| norm3(sub3(x, closest_point_on_triangle(x, p.vertices()))))
            .fold(f64::INFINITY, f64::min)
    }

    /// Generalized winding number: 1 inside, 0 outside, 1/2 on smooth parts
    /// of the surface.
    pub fn winding_number(&self, x: Vec3) -> f64 {
        self.panels.iter().map(|p| solid_angle(x, p.vertices())).sum::<f64>() / (4.0 * PI)
    }

    pub fn contains(&self, x: Vec3) -> bool {
        self.winding_number(x) > 0.5
    }

    /// Negative inside, positive outside.
    pub fn signed_distance(&self, x: Vec3) -> f64 {
        let d = self.distance(x);
        if self.contains(x) {
            -d
        } else {
            d
        }
    }

    pub fn statistics(&self) -> MeshStatistics {
        let mut adjacency: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (f, p) in self.panels.iter().enumerate() {
            let idx = p.indices;
            for k in 0..3 {
                let (a, b) = (idx[k], idx[(k + 1) % 3]);
                adjacency.entry((a.min(b), a.max(b))).or_default().push(f);
            }
        }
        let max_normal_deviation = adjacency
            .values()
            .filter(|fs| fs.len() == 2)
            .map(|fs| {
                let c = dot3(self.panels[fs[0]].normal(), self.panels[fs[1]].normal()).clamp(-1.0, 1.0);
                c.acos()
            })
            .fold(0.0, f64::max);
        let max_aspect_ratio = self
            .panels
            .iter()
            .map(|p| {
                // longest edge over the inscribed-circle diameter
                let v = p.vertices();
                let perimeter: f64 = (0..3).map(|k| norm3(sub3(v[(k + 1) % 3], v[k]))).sum();
                p.diameter() * perimeter / (4.0 * p.area())
            })
            .fold(0.0, f64::max);
        MeshStatistics {
            vertices: self.vertices.len(),
            panels: self.panels.len(),
            total_area: self.total_area,
            volume: self.volume,
            h_max: self.h_max,
            h_min: self.panels.iter().map(Panel::diameter).fold(f64::INFINITY, f64::min),
            h_mean: self.h_mean,
            max_aspect_ratio,
            max_normal_deviation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshStatistics {
    pub vertices: usize,
    pub panels: usize,
    pub total_area: f64,
    pub volume: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub h_mean: f64,
    pub max_aspect_ratio: f64,
    /// Largest angle (radians) between normals of adjacent panels.
    pub max_normal_deviation: f64,
}

/// Solid angle subtended by a triangle at `x`, positive when `x` sees the
/// back (inner) side.
fn solid_angle(x: Vec3, v: &[Vec3; 3]) -> f64 {
    let a = sub3(v[0], x);
    let b = sub3(v[1], x);
    let c = sub3(v[2], x);
    let (la, lb, lc) = (norm3(a), norm3(b), norm3(c));
    let det = dot3(a, cross3(b, c));
    let den = la * lb * lc + dot3(a, b) * lc + dot3(a, c) * lb + dot3(b, c) * la;
    2.0 * det.atan2(den)
}

/// Closest point to `p` on the triangle `v`.
pub fn closest_point_on_triangle(p: Vec3, v: &[Vec3; 3]) -> Vec3 {
    let [a, b, c] = *v;
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(p, a);
    let d1 = dot3(ab, ap);
    let d2 = dot3(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub3(p, b);
    let d3 = dot3(ab, bp);
    let d4 = dot3(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return add3(a, scale3(d1 / (d1 - d3), ab));
    }
    let cp = sub3(p, c);
    let d5 = dot3(ab, cp);
    let d6 = dot3(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return add3(a, scale3(d2 / (d2 - d6), ac));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return add3(b, scale3(w, sub3(c, b)));
    }
    let denom = 1.0 / (va + vb + vc);
    add3(a, add3(scale3(vb * denom, ab), scale3(vc * denom, ac)))
}

fn midpoint_split(
    mut vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    place: impl Fn(Vec3) -> Vec3,
) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
        *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
            vertices.push(place(scale3(0.5, add3(vertices[a], vertices[b]))));
            vertices.len() - 1
        })
    };
    let mut out = Vec::with_capacity(4 * faces.len());
    for [a, b, c] in faces {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        out.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    (vertices, out)
}

/// Icosahedron subdivided `level` times with vertices projected onto the
/// sphere; `20·4^level` panels.
pub fn make_sphere_mesh(level: u32, radius: f64, center: Vec3) -> Result<SurfaceMesh> {
    if level > MAX_SPHERE_LEVEL {
        return Err(PolypotError::LevelCap(level));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(PolypotError::InvalidArgument(format!("sphere radius must be positive, got {radius}")));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [Vec3; 12] = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let unit = |p: Vec3| scale3(1.0 / norm3(p), p);
    let mut vertices: Vec<Vec3> = raw.iter().map(|&p| unit(p)).collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        (vertices, faces) = midpoint_split(vertices, faces, unit);
    }
    let vertices = vertices.into_iter().map(|p| add3(center, scale3(radius, p))).collect();
    SurfaceMesh::new(vertices, faces)
}

/// Sampling parameters for [`nontangential_samples_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayOptions {
    pub gamma: f64,
    pub count: usize,
    /// Largest sample distance; defaults to a quarter of the cube root of
    /// the enclosed volume.
    pub t_max: Option<f64>,
    /// Ratio between consecutive sample distances.
    pub ratio: f64,
}

impl Default for RayOptions {
    fn default() -> Self {
        Self { gamma: 2.0, count: 24, t_max: None, ratio: 0.7 }
    }
}

/// Interior samples approaching a boundary point inside the cone
/// `|X − P| < γ·dist(X, ∂D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NontangentialRay {
    pub panel: usize,
    pub point: Vec3,
    /// Unit vector pointing into the domain.
    pub direction: Vec3,
    pub gamma: f64,
    /// `(t, X)` with `X = P + t·direction`, `t` strictly decreasing.
    pub samples: Vec<(f64, Vec3)>,
    /// Candidates dropped because they violated the cone condition.
    pub rejected: usize,
}

/// Samples along the inward normal at the centroid of `panel`.
pub fn nontangential_samples(mesh: &SurfaceMesh, panel: usize, gamma: f64, count: usize) -> Result<NontangentialRay> {
    nontangential_samples_with(mesh, panel, &RayOptions { gamma, count, ..RayOptions::default() })
}

pub fn nontangential_samples_with(mesh: &SurfaceMesh, panel: usize, opts: &RayOptions) -> Result<NontangentialRay> {
    if !(opts.gamma > 1.0) {
        return Err(PolypotError::InvalidArgument(format!("aperture must exceed 1, got {}", opts.gamma)));
    }
    if !(opts.ratio > 0.0 && opts.ratio < 1.0) {
        return Err(PolypotError::InvalidArgument(format!("ray ratio must lie in (0, 1), got {}", opts.ratio)));
    }
    let p = mesh
        .panels
        .get(panel)
        .ok_or_else(|| PolypotError::InvalidArgument(format!("panel {panel} out of range ({} panels)", mesh.len())))?;
    let n = p.normal();
    if !((norm3(n) - 1.0).abs() < 1e-12) {
        return Err(PolypotError::InvalidArgument(format!("panel {panel} has a degenerate normal")));
    }
    let point = p.centroid();
    let direction = scale3(-1.0, n);
    let t_max = opts.t_max.unwrap_or(0.25 * mesh.volume.cbrt());
    let mut samples = Vec::with_capacity(opts.count);
    let mut rejected = 0;
    let mut t = t_max;
    for _ in 0..opts.count {
        let x = add3(point, scale3(t, direction));
        let dist = mesh.distance(x);
        if t < opts.gamma * dist && mesh.contains(x) {
            samples.push((t, x));
        } else {
            rejected += 1;
        }
        t *= opts.ratio;
    }
    Ok(NontangentialRay { panel, point, direction, gamma: opts.gamma, samples, rejected })
}

/// Where a nodal density lives.
#[derive(Debug, Clone, Copy)]
pub enum NodalValues<'a> {
    Vertices(&'a [f64]),
    Centroids(&'a [f64]),
}

/// Per-panel gradient of the piecewise-linear interpolant. Centroid values
/// are first averaged to vertices with area weights.
pub fn tangential_gradient(mesh: &SurfaceMesh, values: NodalValues<'_>) -> Result<Vec<Vec3>> {
    let owned;
    let at_vertices: &[f64] = match values {
        NodalValues::Vertices(v) => {
            check_len(v.len(), mesh.vertices.len())?;
            v
        }
        NodalValues::Centroids(c) => {
            check_len(c.len(), mesh.len())?;
            let mut acc = vec![0.0; mesh.vertices.len()];
            let mut weight = vec![0.0; mesh.vertices.len()];
            for (p, &f) in mesh.panels.iter().zip(c) {
                for i in p.indices {
                    acc[i] += p.area() * f;
                    weight[i] += p.area();
                }
            }
            owned = acc.iter().zip(&weight).map(|(a, w)| a / w).collect::<Vec<_>>();
            &owned
        }
    };
    Ok(mesh
        .panels
        .iter()
        .map(|p| {
            let v = p.vertices();
            let n = p.normal();
            let mut g = [0.0; 3];
            for k in 0..3 {
                // the opposite edge rotated in-plane gives the barycentric gradient
                let e = sub3(v[(k + 2) % 3], v[(k + 1) % 3]);
                g = add3(g, scale3(at_vertices[p.indices[k]] / (2.0 * p.area()), cross3(n, e)));
            }
            g
        })
        .collect())
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(polypot_core::KernelError::DimensionMismatch { expected, got }.into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn octahedron() -> SurfaceMesh {
        let v = vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        let f = vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
        SurfaceMesh::new(v, f).unwrap()
    }

    #[test]
    fn octahedron_volume_and_area() {
        let m = octahedron();
        assert!((m.volume() - 4.0 / 3.0).abs() < 1e-14);
        assert!((m.total_area() - 4.0 * 3f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn sphere_panel_counts_and_area() {
        for level in 0..4 {
            let m = make_sphere_mesh(level, 1.0, [0.0; 3]).unwrap();
            assert_eq!(m.len(), 20 * 4usize.pow(level));
            assert_eq!(m.vertices().len(), 10 * 4usize.pow(level) + 2);
        }
        // the inscribed polyhedron loses area at second order: about 0.47%
        // at level 3 and 0.12% at level 4
        let err = |l| (make_sphere_mesh(l, 1.0, [0.0; 3]).unwrap().total_area() - 4.0 * PI).abs() / (4.0 * PI);
        assert!(err(3) < 5e-3, "{}", err(3));
        assert!(err(4) < 1e-3 * 1.25, "{}", err(4));
        let ratio = err(3) / err(4);
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }

    #[test]
    fn sphere_volume_converges_at_second_order() {
        let exact = 4.0 / 3.0 * PI * 8.0;
        let err: Vec<f64> = (2..5)
            .map(|l| (make_sphere_mesh(l, 2.0, [0.5, -1.0, 2.0]).unwrap().volume() - exact).abs() / exact)
            .collect();
        for w in err.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.5 && ratio < 4.5, "{err:?}");
        }
    }

    #[test]
    fn level_cap_and_radius_are_checked() {
        assert!(matches!(make_sphere_mesh(8, 1.0, [0.0; 3]), Err(PolypotError::LevelCap(8))));
        assert!(make_sphere_mesh(0, -1.0, [0.0; 3]).is_err());
    }

    #[test]
    fn refinement_halves_diameter() {
        // projecting the first subdivision stretches edges, so start at level 1
        for l in 1..5 {
            let a = make_sphere_mesh(l, 1.0, [0.0; 3]).unwrap().h_max();
            let b = make_sphere_mesh(l + 1, 1.0, [0.0; 3]).unwrap().h_max();
            let r = b / a;
            assert!((0.45..=0.55).contains(&r), "level {l}: {r}");
        }
        let o = octahedron();
        let r = o.refine().unwrap();
        assert_eq!(r.len(), 32);
        assert!((r.volume() - o.volume()).abs() < 1e-14);
        assert!((r.h_max() / o.h_max() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn closed_surface_normals_integrate_to_zero() {
        let m = make_sphere_mesh(3, 1.3, [0.1, 0.2, 0.3]).unwrap();
        let mut s = [0.0; 3];
        for p in m.panels() {
            s = add3(s, scale3(p.area(), p.normal()));
        }
        assert!(norm3(s) < 1e-10, "{s:?}");
    }

    #[test]
    fn panel_quadrature_is_exact_for_linear_functions() {
        let m = make_sphere_mesh(1, 1.0, [0.0; 3]).unwrap();
        for p in m.panels() {
            let w: f64 = p.quadrature().map(|(_, w)| w).sum();
            assert!((w - p.area()).abs() < 1e-12 * p.area());
            let lin = |x: Vec3| 1.0 + 2.0 * x[0] - x[1] + 3.0 * x[2];
            let q: f64 = p.quadrature().map(|(x, w)| w * lin(x)).sum();
            assert!((q - p.area() * lin(p.centroid())).abs() < 1e-12);
            assert!((norm3(p.normal()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn open_surface_is_non_manifold() {
        let o = octahedron();
        let mut f: Vec<_> = o.faces().collect();
        f.pop();
        assert!(matches!(SurfaceMesh::new(o.vertices().to_vec(), f), Err(PolypotError::NonManifold(..))));
    }

    #[test]
    fn flipped_face_and_inverted_mesh_are_orientation_errors() {
        let o = octahedron();
        let mut f: Vec<_> = o.faces().collect();
        f[0].swap(1, 2);
        assert!(matches!(SurfaceMesh::new(o.vertices().to_vec(), f.clone()), Err(PolypotError::Orientation(_))));
        let inverted: Vec<_> = o.faces().map(|[a, b, c]| [a, c, b]).collect();
        assert!(matches!(SurfaceMesh::new(o.vertices().to_vec(), inverted), Err(PolypotError::Orientation(_))));
    }

    #[test]
    fn bad_indices_are_rejected() {
        let o = octahedron();
        let mut f: Vec<_> = o.faces().collect();
        f[3][1] = 17;
        assert!(matches!(SurfaceMesh::new(o.vertices().to_vec(), f), Err(PolypotError::IndexOutOfRange { .. })));
    }

    #[test]
    fn distance_and_winding() {
        let o = octahedron();
        // the face x+y+z=1 lies 1/√3 from the origin
        assert!((o.distance([0.0; 3]) - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((o.winding_number([0.1, 0.2, -0.1]) - 1.0).abs() < 1e-12);
        assert!(o.winding_number([2.0, 0.3, 0.0]).abs() < 1e-12);
        assert!(o.signed_distance([0.0; 3]) < 0.0);
        assert!((o.signed_distance([3.0, 0.0, 0.0]) - 2.0).abs() < 1e-14);
        // closest point on an edge
        let tri = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert_eq!(closest_point_on_triangle([0.5, -1.0, 2.0], &tri), [0.5, 0.0, 0.0]);
        assert_eq!(closest_point_on_triangle([2.0, 2.0, 0.0], &tri), [0.5, 0.5, 0.0]);
    }

    #[test]
    fn rays_on_the_sphere() {
        let m = make_sphere_mesh(2, 1.0, [0.0; 3]).unwrap();
        let empty = nontangential_samples(&m, 0, 2.0, 0).unwrap();
        assert!(empty.samples.is_empty());
        let ray = nontangential_samples(&m, 7, 2.0, 24).unwrap();
        assert_eq!(ray.samples.len() + ray.rejected, 24);
        assert!(ray.samples.len() >= 20);
        for w in ray.samples.windows(2) {
            assert!(w[1].0 < w[0].0);
        }
        for &(t, x) in &ray.samples {
            assert!(m.signed_distance(x) < 0.0);
            assert!(t < 2.0 * m.distance(x));
        }
        assert!(nontangential_samples(&m, 0, 1.0, 4).is_err());
    }

    #[test]
    fn tangential_gradient_of_coordinate() {
        let m = make_sphere_mesh(3, 1.0, [0.0; 3]).unwrap();
        let ones = vec![1.0; m.vertices().len()];
        for g in tangential_gradient(&m, NodalValues::Vertices(&ones)).unwrap() {
            assert!(norm3(g) < 1e-12);
        }
        let x1: Vec<f64> = m.vertices().iter().map(|v| v[0]).collect();
        let grads = tangential_gradient(&m, NodalValues::Vertices(&x1)).unwrap();
        let mut err: f64 = 0.0;
        for (g, p) in grads.iter().zip(m.panels()) {
            let n = p.normal();
            let want = sub3([1.0, 0.0, 0.0], scale3(n[0], n));
            err = err.max(norm3(sub3(*g, want)));
        }
        assert!(err < 1e-12, "{err}");
        let c: Vec<f64> = m.collocation_nodes().iter().map(|c| c[0]).collect();
        let gc = tangential_gradient(&m, NodalValues::Centroids(&c)).unwrap();
        let err = gc
            .iter()
            .zip(m.panels())
            .map(|(g, p)| norm3(sub3(*g, sub3([1.0, 0.0, 0.0], scale3(p.normal()[0], p.normal())))))
            .fold(0.0, f64::max);
        assert!(err < 2.0 * m.h_max(), "{err}");
    }

    #[test]
    fn statistics_are_sensible() {
        let s = make_sphere_mesh(2, 1.0, [0.0; 3]).unwrap().statistics();
        assert_eq!(s.panels, 320);
        assert!(s.h_min <= s.h_mean && s.h_mean <= s.h_max);
        assert!(s.max_normal_deviation > 0.0 && s.max_normal_deviation < 0.4);
        assert!(s.max_aspect_ratio >= 3f64.sqrt() - 1e-12);
    }
}
