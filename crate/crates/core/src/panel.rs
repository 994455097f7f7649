//! Closed-form integrals of radial powers over flat triangles in ℝ³.
//!
//! For an observation point `X`, a triangle `T` with unit normal `n` and
//! `R = |X − Q|`, this module evaluates
//!
//! * `Ω = ∫_T d/R³ dσ` with `d = ⟨X − Q, n⟩` constant over `T`,
//! * `S_q = ∫_T R^q dσ` for odd `q ≥ −1`,
//! * `F_q = ∫_T (X − Q) R^q dσ` for odd `q ≥ −3`,
//!
//! through edge integrals and the in-plane divergence theorem. Piecewise
//! constant layer potentials of the `n = 2` kernels are linear combinations
//! of these.

use crate::math::{atan2, cross3, dot3, ln, norm3, scale3, sqrt, sub3, Vec3};

/// Largest odd power `q` supported by [`PanelIntegrals`].
pub const MAX_POWER: i32 = 17;
const SLOTS: usize = (MAX_POWER as usize + 1) / 2 + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Edge {
    start: Vec3,
    tangent: Vec3,
    outward: Vec3,
    length: f64,
}

/// A non-degenerate flat triangle with counter-clockwise vertices seen from
/// the side the normal points to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatPanel {
    vertices: [Vec3; 3],
    normal: Vec3,
    area: f64,
    centroid: Vec3,
    diameter: f64,
    edges: [Edge; 3],
}

impl FlatPanel {
    /// Returns `None` for a degenerate triangle.
    pub fn new(vertices: [Vec3; 3]) -> Option<Self> {
        let c = cross3(sub3(vertices[1], vertices[0]), sub3(vertices[2], vertices[0]));
        let twice_area = norm3(c);
        let diameter = (0..3).map(|k| norm3(sub3(vertices[(k + 1) % 3], vertices[k]))).fold(0.0, f64::max);
        if !(twice_area > 1e-14 * diameter * diameter) {
            return None;
        }
        let normal = scale3(1.0 / twice_area, c);
        let edges = core::array::from_fn(|k| {
            let a = vertices[k];
            let b = vertices[(k + 1) % 3];
            let e = sub3(b, a);
            let length = norm3(e);
            let tangent = scale3(1.0 / length, e);
            Edge { start: a, tangent, outward: cross3(tangent, normal), length }
        });
        let centroid = scale3(
            1.0 / 3.0,
            [
                vertices[0][0] + vertices[1][0] + vertices[2][0],
                vertices[0][1] + vertices[1][1] + vertices[2][1],
                vertices[0][2] + vertices[1][2] + vertices[2][2],
            ],
        );
        Some(Self { vertices, normal, area: 0.5 * twice_area, centroid, diameter, edges })
    }

    pub fn vertices(&self) -> &[Vec3; 3] {
        &self.vertices
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Vec3 {
        self.centroid
    }

    /// Longest edge.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Signed height `⟨X − V₀, n⟩` of `x` above the panel plane.
    pub fn height(&self, x: Vec3) -> f64 {
        dot3(sub3(x, self.vertices[0]), self.normal)
    }

    /// Integrals up to power `q_max` (odd, `−1 ≤ q_max ≤ MAX_POWER`).
    pub fn integrals(&self, x: Vec3, q_max: i32) -> PanelIntegrals {
        PanelIntegrals::compute(self, x, q_max)
    }
}

/// `∫_{s⁻}^{s⁺} ds / sqrt(s² + R₀²)` in a cancellation-free form.
fn log_edge(sm: f64, sp: f64, rm: f64, rp: f64, r0sq: f64) -> f64 {
    if sm >= 0.0 {
        ln((sp + rp) / (sm + rm))
    } else if sp <= 0.0 {
        ln((rm - sm) / (rp - sp))
    } else {
        // (s + R)(R − s) = R₀² for the negative endpoint
        ln((sp + rp) * (rm - sm) / r0sq)
    }
}

/// Closed-form panel integrals for one observation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelIntegrals {
    q_max: i32,
    height: f64,
    omega: f64,
    normal: Vec3,
    /// `S_q` at slot `(q + 1)/2`.
    s: [f64; SLOTS],
    /// `Σ_i m_i E_{q,i}` at slot `(q + 1)/2`.
    edge_moment: [Vec3; SLOTS],
}

impl PanelIntegrals {
    fn compute(p: &FlatPanel, x: Vec3, q_max: i32) -> Self {
        assert!(q_max >= -1 && q_max <= MAX_POWER && q_max % 2 != 0, "unsupported power {q_max}");
        let top = ((q_max + 1) / 2) as usize;
        let mut d = p.height(x);
        if d.abs() <= 1e-12 * p.diameter {
            d = 0.0;
        }
        let omega = if d == 0.0 {
            0.0
        } else {
            let a = sub3(p.vertices[0], x);
            let b = sub3(p.vertices[1], x);
            let c = sub3(p.vertices[2], x);
            let (la, lb, lc) = (norm3(a), norm3(b), norm3(c));
            let det = dot3(a, cross3(b, c));
            let den = la * lb * lc + dot3(a, b) * lc + dot3(a, c) * lb + dot3(b, c) * la;
            -2.0 * atan2(det, den)
        };
        let rho = sub3(x, scale3(d, p.normal));
        let d2 = d * d;

        let mut s = [0.0; SLOTS];
        let mut edge_moment = [[0.0; 3]; SLOTS];
        let mut t_e = [[0.0; SLOTS]; 3];
        for (k, e) in p.edges.iter().enumerate() {
            let w = sub3(e.start, rho);
            let t = dot3(w, e.outward);
            let sm = dot3(w, e.tangent);
            let sp = sm + e.length;
            let r0sq = t * t + d2;
            let rm = sqrt(sm * sm + r0sq);
            let rp = sqrt(sp * sp + r0sq);
            let mut eq = log_edge(sm, sp, rm, rp, r0sq);
            let (mut rm_q, mut rp_q) = (1.0 / rm, 1.0 / rp);
            for slot in 0..=top {
                if slot > 0 {
                    let q = (2 * slot - 1) as f64;
                    rm_q *= rm * rm;
                    rp_q *= rp * rp;
                    eq = (sp * rp_q - sm * rm_q + q * r0sq * eq) / (q + 1.0);
                }
                t_e[k][slot] = t * eq;
                for c in 0..3 {
                    edge_moment[slot][c] += e.outward[c] * eq;
                }
            }
        }
        for slot in 0..=top {
            let q = (2 * slot) as f64 - 1.0;
            let boundary = t_e[0][slot] + t_e[1][slot] + t_e[2][slot];
            let inner = if slot == 0 { -d * omega } else { q * d2 * s[slot - 1] };
            s[slot] = (boundary + inner) / (q + 2.0);
        }
        Self { q_max, height: d, omega, normal: p.normal, s, edge_moment }
    }

    /// Unit normal of the panel.
    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    /// `d = ⟨X − Q, n⟩`.
    pub fn height(&self) -> f64 {
        self.height
    }

    /// `Ω = ∫_T d/R³ dσ`; zero when `X` lies in the panel plane.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `S_q = ∫_T R^q dσ` for odd `−1 ≤ q ≤ q_max`.
    pub fn surface(&self, q: i32) -> f64 {
        assert!(q >= -1 && q <= self.q_max && q % 2 != 0, "power {q} not computed");
        self.s[((q + 1) / 2) as usize]
    }

    /// `∫_T ⟨X − Q, n⟩ R^q dσ = d·S_q` for odd `−3 ≤ q ≤ q_max`.
    pub fn normal_flux(&self, q: i32) -> f64 {
        if q == -3 {
            self.omega
        } else {
            self.height * self.surface(q)
        }
    }

    /// `F_q = ∫_T (X − Q) R^q dσ` for odd `−3 ≤ q ≤ q_max − 2`.
    pub fn field(&self, q: i32) -> Vec3 {
        assert!(q >= -3 && q + 2 <= self.q_max && q % 2 != 0, "power {q} not computed");
        let m = self.edge_moment[((q + 3) / 2) as usize];
        let a = self.normal_flux(q);
        let b = -1.0 / (q as f64 + 2.0);
        [a * self.normal[0] + b * m[0], a * self.normal[1] + b * m[1], a * self.normal[2] + b * m[2]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{duffy_interior, map_rule, subdivide, RADON7};
    use alloc::vec;
    use alloc::vec::Vec;

    fn distance_power(x: Vec3, q: Vec3, power: i32) -> f64 {
        crate::math::powi(norm3(sub3(x, q)), power)
    }

    const TRI: [Vec3; 3] = [[0.1, 0.0, 0.2], [1.3, 0.4, -0.1], [0.2, 0.9, 0.5]];

    fn refined(v: [Vec3; 3], levels: usize) -> Vec<[Vec3; 3]> {
        let mut tris = vec![v];
        for _ in 0..levels {
            tris = tris.iter().flat_map(subdivide).collect();
        }
        tris
    }

    fn numeric(f: impl Fn(Vec3) -> [f64; 4], levels: usize) -> [f64; 4] {
        let mut acc = [0.0; 4];
        for t in refined(TRI, levels) {
            for (q, w) in map_rule(&RADON7, &t) {
                let v = f(q);
                for k in 0..4 {
                    acc[k] += w * v[k];
                }
            }
        }
        acc
    }

    fn check_point(x: Vec3, levels: usize, tol: f64) {
        let p = FlatPanel::new(TRI).unwrap();
        let n = p.normal();
        let pi = p.integrals(x, 5);
        for q in [-1, 1, 3, 5] {
            let num = numeric(|y| [distance_power(x, y, q), 0.0, 0.0, 0.0], levels)[0];
            assert!((pi.surface(q) - num).abs() < tol * num.abs(), "S_{q} at {x:?}: {} vs {num}", pi.surface(q));
        }
        for q in [-3, -1, 1, 3] {
            let num = numeric(
                |y| {
                    let r = distance_power(x, y, q);
                    let dx = sub3(x, y);
                    [dx[0] * r, dx[1] * r, dx[2] * r, dot3(dx, n) * r]
                },
                levels,
            );
            let f = pi.field(q);
            let scale = num.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for c in 0..3 {
                assert!((f[c] - num[c]).abs() < tol * scale, "F_{q}[{c}] at {x:?}: {} vs {}", f[c], num[c]);
            }
            assert!((pi.normal_flux(q) - num[3]).abs() < tol * scale);
        }
    }

    #[test]
    fn far_point_matches_quadrature() {
        check_point([3.0, -2.0, 4.0], 4, 1e-11);
    }

    #[test]
    fn near_points_match_refined_quadrature() {
        let p = FlatPanel::new(TRI).unwrap();
        let c = p.centroid();
        let n = p.normal();
        check_point([c[0] + 0.3 * n[0], c[1] + 0.3 * n[1], c[2] + 0.3 * n[2]], 5, 1e-8);
        // below the plane, projecting outside the triangle
        check_point([1.5 - 0.2 * n[0], 1.0 - 0.2 * n[1], 0.3 - 0.2 * n[2]], 5, 1e-8);
    }

    #[test]
    fn solid_angle_of_a_face_seen_from_inside() {
        // one face of the unit cube seen from its centre subtends 4π/6
        let face = [[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0]];
        let face2 = [[0.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]];
        let x = [0.5, 0.5, 0.5];
        let total: f64 = [face, face2].iter().map(|f| FlatPanel::new(*f).unwrap().integrals(x, -1).omega()).sum();
        assert!((total + 4.0 * core::f64::consts::PI / 6.0).abs() < 1e-14);
    }

    #[test]
    fn in_plane_self_integrals() {
        let p = FlatPanel::new(TRI).unwrap();
        let c = p.centroid();
        let pi = p.integrals(c, 3);
        assert_eq!(pi.omega(), 0.0);
        assert_eq!(pi.normal_flux(-1), 0.0);
        for q in [-1, 1, 3] {
            let num: f64 = duffy_interior(&TRI, c, 48).iter().map(|(y, w)| w * distance_power(c, *y, q)).sum();
            assert!((pi.surface(q) - num).abs() < 1e-12 * num, "S_{q}: {} vs {num}", pi.surface(q));
        }
    }

    #[test]
    fn degenerate_panel_is_rejected() {
        assert!(FlatPanel::new([[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).is_none());
    }
}
