//! Triangle and interval quadrature rules.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math::{add3, cross3, norm3, scale3, sub3, Vec3};

/// A rule on the reference triangle: barycentric nodes and weights summing
/// to one (multiply by the panel area).
#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub nodes: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

pub const CENTROID: TriangleRule = TriangleRule { nodes: &[[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]], weights: &[1.0] };

/// Symmetric three-point rule, exact for quadratics.
pub const STRANG3: TriangleRule = TriangleRule {
    nodes: &[[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

const R7_A1: f64 = 0.059_715_871_789_769_82;
const R7_B1: f64 = 0.470_142_064_105_115_1;
const R7_A2: f64 = 0.797_426_985_353_087_3;
const R7_B2: f64 = 0.101_286_507_323_456_34;
const R7_W1: f64 = 0.132_394_152_788_506_18;
const R7_W2: f64 = 0.125_939_180_544_827_15;

/// Radon's seven-point rule, exact for quintics.
pub const RADON7: TriangleRule = TriangleRule {
    nodes: &[
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [R7_A1, R7_B1, R7_B1],
        [R7_B1, R7_A1, R7_B1],
        [R7_B1, R7_B1, R7_A1],
        [R7_A2, R7_B2, R7_B2],
        [R7_B2, R7_A2, R7_B2],
        [R7_B2, R7_B2, R7_A2],
    ],
    weights: &[0.225, R7_W1, R7_W1, R7_W1, R7_W2, R7_W2, R7_W2],
};

/// Physical nodes and weights of `rule` on triangle `v`.
pub fn map_rule(rule: &TriangleRule, v: &[Vec3; 3]) -> impl Iterator<Item = (Vec3, f64)> + 'static {
    let area = triangle_area(v);
    let v = *v;
    rule.nodes.iter().zip(rule.weights).map(move |(b, w)| (barycentric(&v, *b), w * area))
}

pub fn barycentric(v: &[Vec3; 3], b: [f64; 3]) -> Vec3 {
    add3(add3(scale3(b[0], v[0]), scale3(b[1], v[1])), scale3(b[2], v[2]))
}

pub fn triangle_area(v: &[Vec3; 3]) -> f64 {
    0.5 * norm3(cross3(sub3(v[1], v[0]), sub3(v[2], v[0])))
}

/// Splits a triangle into its four midpoint children.
pub fn subdivide(v: &[Vec3; 3]) -> [[Vec3; 3]; 4] {
    let m01 = scale3(0.5, add3(v[0], v[1]));
    let m12 = scale3(0.5, add3(v[1], v[2]));
    let m20 = scale3(0.5, add3(v[2], v[0]));
    [[v[0], m01, m20], [m01, v[1], m12], [m20, m12, v[2]], [m01, m12, m20]]
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(order);
    let mut w = Vec::with_capacity(order);
    for i in 0..order {
        // Newton iteration from the Chebyshev-like initial guess
        let mut z = libm::cos(PI * (i as f64 + 0.75) / (order as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 0 { 1.0 } else { p1 };
            dp = order as f64 * (z * p - p0) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x.push(0.5 * (1.0 - z));
        w.push(1.0 / ((1.0 - z * z) * dp * dp));
    }
    (x, w)
}

/// Duffy rule for an integrand singular at vertex `v[0]`: the square
/// `(u, s)` maps to `v0 + u(v1 − v0) + us(v2 − v1)` with Jacobian `2·area·u`.
pub fn duffy_vertex(v: &[Vec3; 3], order: usize) -> Vec<(Vec3, f64)> {
    let (x, w) = gauss_legendre(order);
    let area = triangle_area(v);
    let e1 = sub3(v[1], v[0]);
    let e2 = sub3(v[2], v[1]);
    let mut out = Vec::with_capacity(order * order);
    for (&u, &wu) in x.iter().zip(&w) {
        for (&s, &ws) in x.iter().zip(&w) {
            let p = add3(v[0], add3(scale3(u, e1), scale3(u * s, e2)));
            out.push((p, wu * ws * 2.0 * area * u));
        }
    }
    out
}

/// Duffy rule for an integrand singular at an interior point `x` of the
/// triangle, by splitting into three sub-triangles that share `x`.
pub fn duffy_interior(v: &[Vec3; 3], x: Vec3, order: usize) -> Vec<(Vec3, f64)> {
    let mut out = Vec::with_capacity(3 * order * order);
    for k in 0..3 {
        let sub = [x, v[k], v[(k + 1) % 3]];
        if triangle_area(&sub) > 0.0 {
            out.extend(duffy_vertex(&sub, order));
        }
    }
    out
}
