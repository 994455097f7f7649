//! Point evaluation of the kernel families `D_m^{(j)}`, `K_m^{(j)}`, `𝒟_m`,
//! `𝒦_m`, their singular parts, and the dimensional constants behind them.
//!
//! Ambient space is `ℝ^{n+1}`; points are slices of length `n + 1` and the
//! component index `j` runs over `1..=n+1`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::KernelError;
use crate::math::{dot, ln, powi, sqrt};

/// Whether kernels carry their singular-part subtraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomainMode {
    /// `K_m = D_m`, `𝒦_m = 𝒟_m`.
    #[default]
    Bounded,
    /// `K_m = D_m − S.P.[D_m]`, `𝒦_m = 𝒟_m − S.P.[𝒟_m]`.
    Graph,
}

/// Constants depending only on the boundary dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConstants {
    n: usize,
    omega_n: f64,
}

impl KernelConstants {
    pub fn new(n: usize) -> Result<Self, KernelError> {
        if n < 2 {
            return Err(KernelError::InvalidDimension(n));
        }
        // ω_k = 2π/(k−1)·ω_{k−2}, seeded by ω_0 = 2 and ω_1 = 2π
        let mut omega = if n % 2 == 0 { 2.0 } else { 2.0 * PI };
        let mut k = if n % 2 == 0 { 2 } else { 3 };
        while k <= n {
            omega *= 2.0 * PI / (k - 1) as f64;
            k += 2;
        }
        Ok(Self { n, omega_n: omega })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Surface area of the unit sphere `Sⁿ ⊂ ℝ^{n+1}`.
    pub fn omega_n(&self) -> f64 {
        self.omega_n
    }

    /// `C_n = 1/ω_n`.
    pub fn big_c_n(&self) -> f64 {
        1.0 / self.omega_n
    }

    /// `c_n = −C_n`.
    pub fn c_n(&self) -> f64 {
        -1.0 / self.omega_n
    }

    /// `𝒞_n = 1/((n−1)ω_n)`.
    pub fn ccal_n(&self) -> f64 {
        1.0 / ((self.n - 1) as f64 * self.omega_n)
    }

    /// `α_s = s(s+n+1)`, with the convention `α_0 = 1`.
    pub fn alpha(&self, s: i64) -> f64 {
        if s == 0 {
            return 1.0;
        }
        (s * (s + self.n as i64 + 1)) as f64
    }

    /// `β_k = α_{2k−n−1}`.
    pub fn beta(&self, k: i64) -> f64 {
        self.alpha(2 * k - self.n as i64 - 1)
    }

    /// `δ_s = s(s+n−1)`.
    pub fn delta(&self, s: i64) -> f64 {
        (s * (s + self.n as i64 - 1)) as f64
    }

    /// `γ_k = δ_{2k−n+1}`.
    pub fn gamma(&self, k: i64) -> f64 {
        self.delta(2 * k - self.n as i64 + 1)
    }

    fn beta_product(&self, upto: i64) -> f64 {
        (1..=upto)
            .map(|k| {
                debug_assert_ne!(2 * k - self.n as i64 - 1, 0, "α_0 reached in a β product");
                self.beta(k)
            })
            .product()
    }

    fn gamma_product(&self, upto: i64) -> f64 {
        (1..=upto).map(|k| self.gamma(k)).product()
    }
}

/// Radial profile `pref · r^exponent · (ln r − log_shift)` (log factor only on
/// log branches).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Profile {
    pref: f64,
    exponent: i32,
    log_shift: Option<f64>,
}

impl Profile {
    #[inline]
    fn eval(&self, r: f64) -> f64 {
        let p = self.pref * powi(r, self.exponent);
        match self.log_shift {
            None => p,
            Some(s) => p * (ln(r) - s),
        }
    }

    /// `pref · rmax^e · [ΣP_l t^l]` or the log analogue
    /// `pref · rmax^e · [½ΣQ_l t^l + (ln rmax − shift)ΣP_l t^l]`.
    #[inline]
    fn series(&self, rmax: f64, sums: (f64, f64)) -> f64 {
        let scale = self.pref * powi(rmax, self.exponent);
        match self.log_shift {
            None => scale * sums.0,
            Some(s) => scale * (0.5 * sums.1 + (ln(rmax) - s) * sums.0),
        }
    }
}

fn d_profile(c: &KernelConstants, m: usize) -> Profile {
    let n = c.n as i64;
    let m = m as i64;
    let exponent = (2 * m - n - 3) as i32;
    if n % 2 == 0 || 2 * m <= n + 1 {
        return Profile { pref: c.c_n() / c.beta_product(m - 1), exponent, log_shift: None };
    }
    let alphas: f64 = (1..).map(|i| 2 * i).take_while(|&s| s <= 2 * m - n - 3).map(|s| c.alpha(s)).product();
    let pref = c.c_n() / ((n + 1) as f64 * c.beta_product((n + 1) / 2 - 1) * alphas);
    let shift: f64 = (1..=m - (n + 3) / 2).map(|t| 1.0 / (2 * t) as f64 + 1.0 / (2 * t + n + 1) as f64).sum();
    Profile { pref, exponent, log_shift: Some(shift) }
}

fn dcal_profile(c: &KernelConstants, m: usize) -> Profile {
    let n = c.n as i64;
    let m = m as i64;
    let exponent = (2 * m - n - 1) as i32;
    if n % 2 == 0 || 2 * m <= n - 1 {
        return Profile { pref: c.ccal_n() / c.gamma_product(m - 1), exponent, log_shift: None };
    }
    let deltas: f64 = (1..).map(|i| 2 * i).take_while(|&s| s <= 2 * m - n - 1).map(|s| c.delta(s)).product();
    let pref = c.ccal_n() / ((n - 1) as f64 * c.gamma_product((n - 1) / 2 - 1) * deltas);
    let sum: f64 = (1..=m - (n + 1) / 2).map(|t| 1.0 / (2 * t) as f64 + 1.0 / (2 * t + n - 1) as f64).sum();
    Profile { pref, exponent, log_shift: Some(sum - 1.0 / (n + 1) as f64) }
}

/// Partial sums `(Σ_{l≤L} P_l^{(λ)}(ξ) t^l, Σ_{l≤L} Q_l^{(λ)}(ξ) t^l)` at
/// the two cut-offs `stops[0] ≤ stops[1]`.
fn partial_sums(lambda: f64, xi: f64, t: f64, stops: [usize; 2]) -> [(f64, f64); 2] {
    let mut out = [(0.0, 0.0); 2];
    let (mut p2, mut q2) = (0.0, 0.0);
    let (mut p1, mut q1) = (1.0, 0.0);
    let (mut sp, mut sq) = (1.0, 0.0);
    let mut tl = 1.0;
    for (slot, &stop) in stops.iter().enumerate() {
        if stop == 0 {
            out[slot] = (sp, sq);
        }
    }
    for l in 1..=stops[1] {
        let (p, q) = if l == 1 {
            (2.0 * lambda * xi, -2.0 * xi)
        } else {
            let lf = l as f64;
            let a = 2.0 * (lf + lambda - 1.0) * xi;
            let b = lf + 2.0 * lambda - 2.0;
            ((a * p1 - b * p2) / lf, (-2.0 * xi * p1 + a * q1 + 2.0 * p2 - b * q2) / lf)
        };
        tl *= t;
        sp += p * tl;
        sq += q * tl;
        p2 = p1;
        q2 = q1;
        p1 = p;
        q1 = q;
        for (slot, &stop) in stops.iter().enumerate() {
            if stop == l {
                out[slot] = (sp, sq);
            }
        }
    }
    out
}

/// Geometry of a pair relative to the shift point.
struct RadialPair {
    rx: f64,
    rv: f64,
    xi: f64,
}

/// Kernel order, dimension, domain mode and shift point, with the radial
/// prefactors precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    consts: KernelConstants,
    m: usize,
    mode: DomainMode,
    shift: Vec<f64>,
    d: Profile,
    dcal: Profile,
}

impl KernelSpec {
    pub fn new(n: usize, m: usize, mode: DomainMode) -> Result<Self, KernelError> {
        let consts = KernelConstants::new(n)?;
        if m < 1 {
            return Err(KernelError::InvalidOrder(m));
        }
        Ok(Self { consts, m, mode, shift: vec![0.0; n + 1], d: d_profile(&consts, m), dcal: dcal_profile(&consts, m) })
    }

    pub fn bounded(n: usize, m: usize) -> Result<Self, KernelError> {
        Self::new(n, m, DomainMode::Bounded)
    }

    pub fn graph(n: usize, m: usize) -> Result<Self, KernelError> {
        Self::new(n, m, DomainMode::Graph)
    }

    /// Recenters singular parts at `x0`.
    pub fn with_shift(mut self, x0: &[f64]) -> Result<Self, KernelError> {
        self.check_point(x0)?;
        self.shift = x0.to_vec();
        Ok(self)
    }

    /// Same dimension, mode and shift at another order.
    pub fn with_order(&self, m: usize) -> Result<Self, KernelError> {
        let mut s = Self::new(self.consts.n, m, self.mode)?;
        s.shift.clone_from(&self.shift);
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.consts.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Ambient dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.consts.n + 1
    }

    pub fn mode(&self) -> DomainMode {
        self.mode
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn constants(&self) -> &KernelConstants {
        &self.consts
    }

    /// True when `D_m` uses the logarithmic branch.
    pub fn d_is_log(&self) -> bool {
        self.d.log_shift.is_some()
    }

    /// True when `𝒟_m` uses the logarithmic branch.
    pub fn dcal_is_log(&self) -> bool {
        self.dcal.log_shift.is_some()
    }

    /// `(pref, e)` with `D_m^{(j)} = pref·(x_j − v_j)·r^e`, on power branches.
    pub fn d_power_law(&self) -> Option<(f64, i32)> {
        self.d.log_shift.is_none().then_some((self.d.pref, self.d.exponent))
    }

    /// `(pref, e)` with `𝒟_m = pref·r^e`, on power branches.
    pub fn dcal_power_law(&self) -> Option<(f64, i32)> {
        self.dcal.log_shift.is_none().then_some((self.dcal.pref, self.dcal.exponent))
    }

    /// `φ(r)` with `D_m^{(j)}(x,v) = (x_j − v_j)·φ(|x − v|)`.
    #[inline]
    pub fn d_radial(&self, r: f64) -> f64 {
        self.d.eval(r)
    }

    /// `𝒟_m(x,v)` as a function of `r = |x − v|`.
    #[inline]
    pub fn dcal_radial(&self, r: f64) -> f64 {
        self.dcal.eval(r)
    }

    /// Number of terms in the `S.P.[𝒟_m]` sum.
    pub fn sp_dcal_term_count(&self) -> usize {
        2 * self.m + 1
    }

    fn check_point(&self, p: &[f64]) -> Result<(), KernelError> {
        if p.len() != self.dim() {
            return Err(KernelError::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(KernelError::NonFinite);
        }
        Ok(())
    }

    fn check_j(&self, j: usize) -> Result<usize, KernelError> {
        if j == 0 || j > self.dim() {
            return Err(KernelError::ComponentOutOfRange { j, dim: self.dim() });
        }
        Ok(j - 1)
    }

    fn distance(&self, x: &[f64], v: &[f64]) -> Result<f64, KernelError> {
        self.check_point(x)?;
        self.check_point(v)?;
        let r = sqrt(x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum());
        if r == 0.0 {
            return Err(KernelError::CoincidentPoints);
        }
        Ok(r)
    }

    fn radial_pair(&self, x: &[f64], v: &[f64]) -> Result<RadialPair, KernelError> {
        self.check_point(x)?;
        self.check_point(v)?;
        let (mut xx, mut vv, mut xv) = (0.0, 0.0, 0.0);
        for ((a, b), o) in x.iter().zip(v).zip(&self.shift) {
            let (a, b) = (a - o, b - o);
            xx += a * a;
            vv += b * b;
            xv += a * b;
        }
        let (rx, rv) = (sqrt(xx), sqrt(vv));
        if rx == 0.0 || rv == 0.0 {
            return Err(KernelError::ZeroRadius);
        }
        Ok(RadialPair { rx, rv, xi: (xv / (rx * rv)).clamp(-1.0, 1.0) })
    }

    /// `S.P.[D_m^{(j)}](x,v) = x'_j·A − v'_j·B` with primes relative to the
    /// shift point; returns `(A, B)`.
    ///
    /// The smaller-radius argument's coefficient is summed to degree `2m−2`
    /// and the larger-radius argument's to `2m−1`. This keeps the singular
    /// part a derivative of `S.P.[𝒟_m]` and closed under the Laplacian.
    fn sp_d_coefficients(&self, g: &RadialPair) -> Result<(f64, f64), KernelError> {
        if g.rx == g.rv {
            return Err(KernelError::EqualRadii(g.rx));
        }
        let (rmin, rmax) = if g.rx < g.rv { (g.rx, g.rv) } else { (g.rv, g.rx) };
        let lambda = (self.consts.n as f64 + 3.0) / 2.0 - self.m as f64;
        let sums = partial_sums(lambda, g.xi, rmin / rmax, [2 * self.m - 2, 2 * self.m - 1]);
        let short = self.d.series(rmax, sums[0]);
        let long = self.d.series(rmax, sums[1]);
        Ok(if g.rx < g.rv { (short, long) } else { (long, short) })
    }

    /// `D_m^{(j)}(x, v)`.
    pub fn eval_d(&self, j: usize, x: &[f64], v: &[f64]) -> Result<f64, KernelError> {
        let j = self.check_j(j)?;
        let r = self.distance(x, v)?;
        Ok((x[j] - v[j]) * self.d.eval(r))
    }

    /// `S.P.[D_m^{(j)}](x, v)`; identically zero for `m = 1`.
    pub fn eval_sp_d(&self, j: usize, x: &[f64], v: &[f64]) -> Result<f64, KernelError> {
        let j = self.check_j(j)?;
        let g = self.radial_pair(x, v)?;
        if self.m == 1 {
            return Ok(0.0);
        }
        let (a, b) = self.sp_d_coefficients(&g)?;
        Ok((x[j] - self.shift[j]) * a - (v[j] - self.shift[j]) * b)
    }

    /// `K_m^{(j)}(x, v)`.
    pub fn eval_k(&self, j: usize, x: &[f64], v: &[f64]) -> Result<f64, KernelError> {
        let d = self.eval_d(j, x, v)?;
        if self.mode == DomainMode::Bounded || self.m == 1 {
            return Ok(d);
        }
        let g = self.radial_pair(x, v)?;
        if g.rx == g.rv {
            return Ok(d);
        }
        let (a, b) = self.sp_d_coefficients(&g)?;
        let j = j - 1;
        Ok(d - ((x[j] - self.shift[j]) * a - (v[j] - self.shift[j]) * b))
    }

    /// The Poisson field `K_m(x, v) = (K_m^{(1)}, …, K_m^{(n+1)})`.
    pub fn poisson_field(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>, KernelError> {
        let mut out = vec![0.0; self.dim()];
        self.poisson_field_into(x, v, &mut out)?;
        Ok(out)
    }

    /// [`poisson_field`](Self::poisson_field) into a caller buffer.
    pub fn poisson_field_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<(), KernelError> {
        let r = self.distance(x, v)?;
        if out.len() != self.dim() {
            return Err(KernelError::DimensionMismatch { expected: self.dim(), got: out.len() });
        }
        let phi = self.d.eval(r);
        for ((o, a), b) in out.iter_mut().zip(x).zip(v) {
            *o = (a - b) * phi;
        }
        if self.mode == DomainMode::Bounded || self.m == 1 {
            return Ok(());
        }
        let g = self.radial_pair(x, v)?;
        if g.rx == g.rv {
            return Ok(());
        }
        let (a, b) = self.sp_d_coefficients(&g)?;
        for (j, o) in out.iter_mut().enumerate() {
            *o -= (x[j] - self.shift[j]) * a - (v[j] - self.shift[j]) * b;
        }
        Ok(())
    }

    /// `𝒟_m(x, v)`.
    pub fn eval_dcal(&self, x: &[f64], v: &[f64]) -> Result<f64, KernelError> {
        Ok(self.dcal.eval(self.distance(x, v)?))
    }

    /// `S.P.[𝒟_m](x, v)`, summed over degrees `0..=2m`; zero for `m = 1`.
    pub fn eval_sp_dcal(&self, x: &[f64], v: &[f64]) -> Result<f64, KernelError> {
        let g = self.radial_pair(x, v)?;
        if self.m == 1 {
            return Ok(0.0);
        }
        self.sp_dcal_from(&g)
    }

    fn sp_dcal_from(&self, g: &RadialPair) -> Result<f64, KernelError> {
        if g.rx == g.rv {
            return Err(KernelError::EqualRadii(g.rx));
        }
        let (rmin, rmax) = if g.rx < g.rv { (g.rx, g.rv) } else { (g.rv, g.rx) };
        let lambda = (self.consts.n as f64 + 1.0) / 2.0 - self.m as f64;
        let top = 2 * self.m;
        let sums = partial_sums(lambda, g.xi, rmin / rmax, [top, top]);
        Ok(self.dcal.series(rmax, sums[1]))
    }

    /// `𝒦_m(x, v)`.
    pub fn eval_kcal(&self, x: &[f64], v: &[f64]) -> Result<f64, KernelError> {
        let d = self.eval_dcal(x, v)?;
        if self.mode == DomainMode::Bounded || self.m == 1 {
            return Ok(d);
        }
        let g = self.radial_pair(x, v)?;
        if g.rx == g.rv {
            return Ok(d);
        }
        Ok(d - self.sp_dcal_from(&g)?)
    }

    /// Gradient of `𝒦_m`, returned as the Poisson field `K_m(x, v)`.
    ///
    /// In bounded mode this is `∇_x 𝒦_m`. In graph mode it is `∇_x 𝒦_m`
    /// while `|x − x0| < |v − x0|` and `−∇_v 𝒦_m` otherwise, i.e. the
    /// derivative is always taken in the argument closer to the shift point.
    pub fn grad_kcal(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>, KernelError> {
        self.poisson_field(x, v)
    }

    /// Dot product of the Poisson field with `normal`, without allocation.
    #[inline]
    pub fn poisson_normal(&self, x: &[f64], v: &[f64], normal: &[f64]) -> Result<f64, KernelError> {
        if self.mode == DomainMode::Bounded || self.m == 1 {
            let r = self.distance(x, v)?;
            let diff: f64 = x.iter().zip(v).zip(normal).map(|((a, b), nn)| (a - b) * nn).sum();
            return Ok(diff * self.d.eval(r));
        }
        let field = self.poisson_field(x, v)?;
        Ok(dot(&field, normal))
    }
}
