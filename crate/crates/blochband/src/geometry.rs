//! Unit cells, star-shaped holes, and radial perturbation families.
//!
//! A planar Bravais lattice is described by two period vectors `p1, p2`.
//! The unit cell carries one hole whose boundary is a trigonometric graph
//! over the angle around its center,
//!
//! ```text
//!     r(theta) = r0 + sum_m ( a_m cos(m theta) + b_m sin(m theta) ),
//! ```
//!
//! and hole deformations are realised by the radial map
//!
//! ```text
//!     h_t : (r, theta) -> (r + t rho(theta) chi(r), theta)
//! ```
//!
//! which displaces the boundary by `t rho(theta)` and is the identity
//! outside an annulus around the hole. The cutoff `chi` is a polynomial
//! smoothstep, so the Jacobian of `h_t` is available in closed form and
//! every map quantity is smooth (in fact polynomial * trigonometric) in
//! the parameter `t`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Number of boundary samples used for the conservative radius bounds.
const RADIUS_SCAN: usize = 2048;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("lattice basis is degenerate or left-handed: det = {det:.3e}")]
    DegenerateBasis { det: f64 },
    #[error("hole radius must stay positive: certified lower bound {bound:.6} at theta = {theta:.4}")]
    NonpositiveRadius { bound: f64, theta: f64 },
    #[error("fourier coefficient for mode {m} is not usable: {reason}")]
    BadCoefficient { m: u32, reason: String },
    #[error(
        "annulus ({r_inner:.4}, {r_outer:.4}) must satisfy max r(theta) = {max_radius:.4} < r_inner < r_outer"
    )]
    BadAnnulus { r_inner: f64, r_outer: f64, max_radius: f64 },
    #[error("cutoff smoothness must be at least 2, got {0}")]
    BadSmoothness(u32),
    #[error("hole does not fit in the cell: reach {reach:.4} >= boundary distance {clearance:.4}")]
    HoleExitsCell { reach: f64, clearance: f64 },
    #[error("deformation degenerates at x = ({x:.5}, {y:.5}), t = {t:.4}: det J = {det:.3e}")]
    DegenerateMap { x: f64, y: f64, t: f64, det: f64 },
    #[error("validity scan needs at least 100 samples, got {0}")]
    TooFewSamples(usize),
}

// ---------------------------------------------------------------------------
// Lattice
// ---------------------------------------------------------------------------

/// A 2D Bravais lattice given by two period vectors (columns of `basis`).
///
/// Fractional coordinates `y` relate to physical points by `x = B y`,
/// so `basis[r][c]` is the r-th component of period vector `p_c`. The
/// cached `gram_inverse` is `(B^T B)^-1`, the inverse Gram matrix of the
/// periods; it is the metric that turns fractional gradients back into
/// physical ones.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "LatticeRaw", into = "LatticeRaw")]
pub struct Lattice2 {
    basis: [[f64; 2]; 2],
    gram_inverse: [[f64; 2]; 2],
    det: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct LatticeRaw {
    basis: [[f64; 2]; 2],
}

impl From<Lattice2> for LatticeRaw {
    fn from(l: Lattice2) -> Self {
        LatticeRaw { basis: l.basis }
    }
}

impl TryFrom<LatticeRaw> for Lattice2 {
    type Error = GeometryError;
    fn try_from(raw: LatticeRaw) -> Result<Self, GeometryError> {
        Lattice2::new(raw.basis)
    }
}

impl Lattice2 {
    /// Builds a lattice from the basis matrix whose columns are the
    /// period vectors. The pair must be right-handed and non-degenerate.
    pub fn new(basis: [[f64; 2]; 2]) -> Result<Self, GeometryError> {
        let det = basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0];
        if !(det > 1e-12) || !det.is_finite() {
            return Err(GeometryError::DegenerateBasis { det });
        }
        let p = [[basis[0][0], basis[1][0]], [basis[0][1], basis[1][1]]];
        let gram = [
            [dot(p[0], p[0]), dot(p[0], p[1])],
            [dot(p[1], p[0]), dot(p[1], p[1])],
        ];
        let gdet = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
        let gram_inverse = [
            [gram[1][1] / gdet, -gram[0][1] / gdet],
            [-gram[1][0] / gdet, gram[0][0] / gdet],
        ];
        Ok(Lattice2 { basis, gram_inverse, det })
    }

    /// Builds a lattice from its two period vectors.
    pub fn from_periods(p1: [f64; 2], p2: [f64; 2]) -> Result<Self, GeometryError> {
        Lattice2::new([[p1[0], p2[0]], [p1[1], p2[1]]])
    }

    /// The unit square cell, periods `(1,0)` and `(0,1)`.
    pub fn unit_square() -> Self {
        Lattice2::new([[1.0, 0.0], [0.0, 1.0]]).unwrap()
    }

    /// Rectangular cell with side lengths `a` and `b`.
    pub fn rectangular(a: f64, b: f64) -> Result<Self, GeometryError> {
        Lattice2::from_periods([a, 0.0], [0.0, b])
    }

    /// Hexagonal cell with lattice constant `a`.
    pub fn hexagonal(a: f64) -> Result<Self, GeometryError> {
        Lattice2::from_periods([a, 0.0], [a / 2.0, a * 3f64.sqrt() / 2.0])
    }

    pub fn basis(&self) -> [[f64; 2]; 2] {
        self.basis
    }

    /// Period vector `c` (column of the basis).
    pub fn period(&self, c: usize) -> [f64; 2] {
        [self.basis[0][c], self.basis[1][c]]
    }

    /// Inverse Gram matrix of the period vectors.
    pub fn gram_inverse(&self) -> [[f64; 2]; 2] {
        self.gram_inverse
    }

    /// Cell area, `det B`.
    pub fn det(&self) -> f64 {
        self.det
    }

    /// Inverse of the basis matrix, rows ready for `B^-1 x`.
    pub fn basis_inverse(&self) -> [[f64; 2]; 2] {
        [
            [self.basis[1][1] / self.det, -self.basis[0][1] / self.det],
            [-self.basis[1][0] / self.det, self.basis[0][0] / self.det],
        ]
    }

    /// Physical point of a fractional coordinate, `x = B y`.
    pub fn to_physical(&self, y: [f64; 2]) -> [f64; 2] {
        [
            self.basis[0][0] * y[0] + self.basis[0][1] * y[1],
            self.basis[1][0] * y[0] + self.basis[1][1] * y[1],
        ]
    }

    /// Fractional coordinate of a physical point, `y = B^-1 x`.
    pub fn to_fractional(&self, x: [f64; 2]) -> [f64; 2] {
        let inv = self.basis_inverse();
        [
            inv[0][0] * x[0] + inv[0][1] * x[1],
            inv[1][0] * x[0] + inv[1][1] * x[1],
        ]
    }

    /// Reciprocal basis `[g1, g2]` with `g_i . p_j = 2 pi delta_ij`.
    pub fn dual_basis(&self) -> [[f64; 2]; 2] {
        let inv = self.basis_inverse();
        [
            [TAU * inv[0][0], TAU * inv[0][1]],
            [TAU * inv[1][0], TAU * inv[1][1]],
        ]
    }

    /// Fractional quasimomentum `kappa = B^T k = (k.p1, k.p2)`.
    pub fn fractional_k(&self, k: [f64; 2]) -> [f64; 2] {
        [dot(k, self.period(0)), dot(k, self.period(1))]
    }

    /// Physical dual-lattice vector `2 pi B^-T m`.
    pub fn dual_mode(&self, m: [i64; 2]) -> [f64; 2] {
        let g = self.dual_basis();
        [
            m[0] as f64 * g[0][0] + m[1] as f64 * g[1][0],
            m[0] as f64 * g[0][1] + m[1] as f64 * g[1][1],
        ]
    }

    /// Distance from a fractional interior point to the cell boundary.
    pub fn boundary_distance(&self, y: [f64; 2]) -> f64 {
        // The face y_a = const has physical unit normal along row a of
        // B^-1; the row norm converts fractional offsets into physical
        // distances.
        let inv = self.basis_inverse();
        let mut dist = f64::INFINITY;
        for a in 0..2 {
            let n = (inv[a][0] * inv[a][0] + inv[a][1] * inv[a][1]).sqrt();
            dist = dist.min(y[a].min(1.0 - y[a]) / n);
        }
        dist
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

// ---------------------------------------------------------------------------
// Hole shapes
// ---------------------------------------------------------------------------

/// A star-shaped hole: boundary `r(theta)` around a fractional center.
///
/// Radii are physical lengths; the center is a fractional cell coordinate.
/// Construction certifies `min_theta r(theta) > 0` with a sampled bound
/// that accounts for the derivative of the truncated Fourier series.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "HoleShapeRaw", into = "HoleShapeRaw")]
pub struct HoleShape {
    center: [f64; 2],
    r0: f64,
    fourier_coeffs: Vec<(u32, f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HoleShapeRaw {
    center: [f64; 2],
    r0: f64,
    #[serde(default)]
    fourier_coeffs: Vec<(u32, f64, f64)>,
}

impl From<HoleShape> for HoleShapeRaw {
    fn from(h: HoleShape) -> Self {
        HoleShapeRaw { center: h.center, r0: h.r0, fourier_coeffs: h.fourier_coeffs }
    }
}

impl TryFrom<HoleShapeRaw> for HoleShape {
    type Error = GeometryError;
    fn try_from(raw: HoleShapeRaw) -> Result<Self, GeometryError> {
        HoleShape::new(raw.center, raw.r0, raw.fourier_coeffs)
    }
}

/// Conservative min/max of a radius-like trigonometric series.
fn scan_bounds(f: impl Fn(f64) -> f64, lipschitz: f64) -> (f64, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut arg_lo = 0.0;
    for i in 0..RADIUS_SCAN {
        let theta = TAU * i as f64 / RADIUS_SCAN as f64;
        let v = f(theta);
        if v < lo {
            lo = v;
            arg_lo = theta;
        }
        hi = hi.max(v);
    }
    let slack = lipschitz * PI / RADIUS_SCAN as f64;
    (lo - slack, hi + slack, arg_lo)
}

impl HoleShape {
    /// Builds and validates a hole shape.
    ///
    /// `fourier_coeffs` holds `(m, a_m, b_m)` with `m >= 1`; the mean
    /// radius lives in `r0`.
    pub fn new(
        center: [f64; 2],
        r0: f64,
        fourier_coeffs: Vec<(u32, f64, f64)>,
    ) -> Result<Self, GeometryError> {
        for &(m, a, b) in &fourier_coeffs {
            if m == 0 {
                return Err(GeometryError::BadCoefficient {
                    m,
                    reason: "constant terms belong in r0".into(),
                });
            }
            if !a.is_finite() || !b.is_finite() {
                return Err(GeometryError::BadCoefficient { m, reason: "non-finite value".into() });
            }
        }
        if !r0.is_finite() || r0 <= 0.0 {
            return Err(GeometryError::NonpositiveRadius { bound: r0, theta: 0.0 });
        }
        let shape = HoleShape { center, r0, fourier_coeffs };
        let (lo, _, arg_lo) = scan_bounds(|t| shape.radius(t), shape.radius_lipschitz());
        if lo <= 0.0 {
            return Err(GeometryError::NonpositiveRadius { bound: lo, theta: arg_lo });
        }
        Ok(shape)
    }

    /// Circular hole of radius `r0`.
    pub fn disk(center: [f64; 2], r0: f64) -> Result<Self, GeometryError> {
        HoleShape::new(center, r0, Vec::new())
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn fourier_coeffs(&self) -> &[(u32, f64, f64)] {
        &self.fourier_coeffs
    }

    /// Boundary radius at angle `theta`.
    pub fn radius(&self, theta: f64) -> f64 {
        let mut r = self.r0;
        for &(m, a, b) in &self.fourier_coeffs {
            let (s, c) = (m as f64 * theta).sin_cos();
            r += a * c + b * s;
        }
        r
    }

    /// d r / d theta.
    pub fn radius_deriv(&self, theta: f64) -> f64 {
        let mut d = 0.0;
        for &(m, a, b) in &self.fourier_coeffs {
            let (s, c) = (m as f64 * theta).sin_cos();
            d += m as f64 * (b * c - a * s);
        }
        d
    }

    fn radius_lipschitz(&self) -> f64 {
        self.fourier_coeffs.iter().map(|&(m, a, b)| m as f64 * (a.abs() + b.abs())).sum()
    }

    /// Certified upper bound on `max_theta r(theta)`.
    pub fn max_radius_bound(&self) -> f64 {
        scan_bounds(|t| self.radius(t), self.radius_lipschitz()).1
    }

    /// Certified lower bound on `min_theta r(theta)`.
    pub fn min_radius_bound(&self) -> f64 {
        scan_bounds(|t| self.radius(t), self.radius_lipschitz()).0
    }

    /// Hole center in physical coordinates.
    pub fn center_physical(&self, lattice: &Lattice2) -> [f64; 2] {
        lattice.to_physical(self.center)
    }

    /// True iff the physical point lies strictly inside the hole.
    ///
    /// `x` is expected in the canonical cell (fractional preimage in
    /// `[0,1)^2`); holes never touch the cell boundary, so no periodic
    /// folding is required.
    pub fn contains(&self, lattice: &Lattice2, x: [f64; 2]) -> bool {
        let c = self.center_physical(lattice);
        let d = [x[0] - c[0], x[1] - c[1]];
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        r < self.radius(d[1].atan2(d[0]))
    }

    /// Checks that the hole (enlarged by `margin`) stays strictly inside
    /// the unit cell of `lattice`.
    pub fn fits_within_cell(&self, lattice: &Lattice2, margin: f64) -> Result<(), GeometryError> {
        let reach = self.max_radius_bound() + margin;
        let clearance = lattice.boundary_distance(self.center);
        if reach >= clearance {
            return Err(GeometryError::HoleExitsCell { reach, clearance });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Cutoff polynomial
// ---------------------------------------------------------------------------

/// Polynomial smoothstep used as the radial cutoff of the deformation.
///
/// On `[r_inner, r_outer]` this is the unique degree `2s+1` polynomial
/// with `chi(r_inner) = 1`, `chi(r_outer) = 0`, and vanishing derivatives
/// up to order `s` at both ends; outside it continues with the constant
/// values 1 and 0, so the glued function is `C^s`.
#[derive(Debug, Clone)]
struct CutoffPoly {
    r_inner: f64,
    r_outer: f64,
    s: u32,
    /// Coefficients of `integral_0^u v^s (1-v)^s dv` in the monomial basis,
    /// divided by the full integral: entry j multiplies `u^(s+1+j)`.
    ramp: Vec<f64>,
    /// 1 / B(s+1, s+1), the normalizer of the derivative `u^s (1-u)^s`.
    deriv_scale: f64,
}

impl CutoffPoly {
    fn new(r_inner: f64, r_outer: f64, s: u32) -> Self {
        // integral_0^u v^s(1-v)^s dv = sum_j C(s,j) (-1)^j u^(s+j+1)/(s+j+1)
        let s_us = s as usize;
        let mut raw = Vec::with_capacity(s_us + 1);
        let mut binom = 1.0f64;
        for j in 0..=s_us {
            if j > 0 {
                binom *= (s_us - j + 1) as f64 / j as f64;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            raw.push(sign * binom / (s_us + j + 1) as f64);
        }
        let total: f64 = raw.iter().sum();
        let ramp = raw.iter().map(|c| c / total).collect();
        CutoffPoly { r_inner, r_outer, s, ramp, deriv_scale: 1.0 / total }
    }

    fn eval(&self, r: f64) -> f64 {
        if r <= self.r_inner {
            return 1.0;
        }
        if r >= self.r_outer {
            return 0.0;
        }
        let u = (r - self.r_inner) / (self.r_outer - self.r_inner);
        let us = u.powi(self.s as i32 + 1);
        let mut acc = 0.0;
        for (j, c) in self.ramp.iter().enumerate() {
            acc += c * us * u.powi(j as i32);
        }
        1.0 - acc
    }

    fn deriv(&self, r: f64) -> f64 {
        if r <= self.r_inner || r >= self.r_outer {
            return 0.0;
        }
        let w = self.r_outer - self.r_inner;
        let u = (r - self.r_inner) / w;
        -(u.powi(self.s as i32) * (1.0 - u).powi(self.s as i32)) * self.deriv_scale / w
    }
}

// ---------------------------------------------------------------------------
// Shape families
// ---------------------------------------------------------------------------

/// Closed-form Jacobian data of the radial deformation at one point.
#[derive(Debug, Clone, Copy)]
pub struct Jacobian2 {
    /// The 2x2 Jacobian matrix of `h_t` in physical coordinates.
    pub j: [[f64; 2]; 2],
    /// `det j`, positive on the validity region.
    pub det: f64,
    /// Transported gradient coefficient `|det J| J^-1 J^-T`.
    pub a: [[f64; 2]; 2],
}

/// A one-parameter family of hole deformations along a fixed direction.
///
/// The direction is a boundary velocity `rho(theta)` in the same
/// trigonometric format as the hole itself, with `m = 0` allowed for the
/// homothetic (constant) component. The deformation acts inside the
/// annulus `r < r_outer` and is the identity outside.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ShapeFamilyRaw", into = "ShapeFamilyRaw")]
pub struct ShapeFamily {
    base: HoleShape,
    direction: Vec<(u32, f64, f64)>,
    annulus: (f64, f64),
    cutoff_smoothness: u32,
    #[serde(skip)]
    cutoff: CutoffPoly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ShapeFamilyRaw {
    base: HoleShape,
    direction: Vec<(u32, f64, f64)>,
    annulus: (f64, f64),
    cutoff_smoothness: u32,
}

impl From<ShapeFamily> for ShapeFamilyRaw {
    fn from(f: ShapeFamily) -> Self {
        ShapeFamilyRaw {
            base: f.base,
            direction: f.direction,
            annulus: f.annulus,
            cutoff_smoothness: f.cutoff_smoothness,
        }
    }
}

impl TryFrom<ShapeFamilyRaw> for ShapeFamily {
    type Error = GeometryError;
    fn try_from(raw: ShapeFamilyRaw) -> Result<Self, GeometryError> {
        ShapeFamily::new(raw.base, raw.direction, raw.annulus, raw.cutoff_smoothness)
    }
}

/// Report of a sampled validity scan over the deformation annulus.
#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub t_max: f64,
    pub samples: usize,
    /// Minimum of `det J` over all sampled `(x, t)`.
    pub min_det: f64,
    /// Where the minimum was attained: `(t, x)`.
    pub min_det_at: (f64, [f64; 2]),
    /// True iff every sampled Jacobian determinant stayed positive.
    pub ok: bool,
}

impl ShapeFamily {
    pub fn new(
        base: HoleShape,
        direction: Vec<(u32, f64, f64)>,
        annulus: (f64, f64),
        cutoff_smoothness: u32,
    ) -> Result<Self, GeometryError> {
        if cutoff_smoothness < 2 {
            return Err(GeometryError::BadSmoothness(cutoff_smoothness));
        }
        for &(m, a, b) in &direction {
            if !a.is_finite() || !b.is_finite() {
                return Err(GeometryError::BadCoefficient { m, reason: "non-finite value".into() });
            }
            if m == 0 && b != 0.0 {
                return Err(GeometryError::BadCoefficient {
                    m,
                    reason: "sin(0 theta) carries no shape".into(),
                });
            }
        }
        let (r_inner, r_outer) = annulus;
        let max_radius = base.max_radius_bound();
        if !(max_radius < r_inner && r_inner < r_outer) {
            return Err(GeometryError::BadAnnulus { r_inner, r_outer, max_radius });
        }
        let cutoff = CutoffPoly::new(r_inner, r_outer, cutoff_smoothness);
        Ok(ShapeFamily { base, direction, annulus, cutoff_smoothness, cutoff })
    }

    pub fn base(&self) -> &HoleShape {
        &self.base
    }

    pub fn direction(&self) -> &[(u32, f64, f64)] {
        &self.direction
    }

    pub fn annulus(&self) -> (f64, f64) {
        self.annulus
    }

    pub fn cutoff_smoothness(&self) -> u32 {
        self.cutoff_smoothness
    }

    /// Boundary velocity at angle `theta`.
    pub fn rho(&self, theta: f64) -> f64 {
        let mut r = 0.0;
        for &(m, a, b) in &self.direction {
            let (s, c) = (m as f64 * theta).sin_cos();
            r += a * c + b * s;
        }
        r
    }

    /// d rho / d theta.
    pub fn rho_deriv(&self, theta: f64) -> f64 {
        let mut d = 0.0;
        for &(m, a, b) in &self.direction {
            let (s, c) = (m as f64 * theta).sin_cos();
            d += m as f64 * (b * c - a * s);
        }
        d
    }

    /// Radial cutoff value at radius `r`.
    pub fn chi(&self, r: f64) -> f64 {
        self.cutoff.eval(r)
    }

    /// d chi / d r.
    pub fn chi_deriv(&self, r: f64) -> f64 {
        self.cutoff.deriv(r)
    }

    /// Boundary radius of the deformed hole at parameter `t`.
    pub fn perturbed_radius(&self, theta: f64, t: f64) -> f64 {
        self.base.radius(theta) + t * self.rho(theta)
    }

    /// The deformed hole as a plain shape (for re-classification).
    pub fn perturbed_shape(&self, t: f64) -> Result<HoleShape, GeometryError> {
        let mut coeffs: Vec<(u32, f64, f64)> = self.base.fourier_coeffs().to_vec();
        let mut r0 = self.base.r0();
        for &(m, a, b) in &self.direction {
            if m == 0 {
                r0 += t * a;
            } else if let Some(entry) = coeffs.iter_mut().find(|e| e.0 == m) {
                entry.1 += t * a;
                entry.2 += t * b;
            } else {
                coeffs.push((m, t * a, t * b));
            }
        }
        HoleShape::new(self.base.center(), r0, coeffs)
    }

    /// Applies the deformation `h_t` to a physical point.
    ///
    /// Errors with `DegenerateMap` when the radial map folds at `x`.
    pub fn displace(
        &self,
        lattice: &Lattice2,
        x: [f64; 2],
        t: f64,
    ) -> Result<[f64; 2], GeometryError> {
        let c = self.base.center_physical(lattice);
        let d = [x[0] - c[0], x[1] - c[1]];
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if r == 0.0 {
            // The center is a fixed point by convention; it always lies
            // strictly inside the hole, outside the physical domain.
            return Ok(x);
        }
        let theta = d[1].atan2(d[0]);
        let shift = t * self.rho(theta) * self.cutoff.eval(r);
        if shift == 0.0 {
            // Covers t = 0 and the region beyond the annulus; returning the
            // input directly keeps the identity exact to the last bit.
            return Ok(x);
        }
        let phi = r + shift;
        if phi <= 0.0 {
            return Err(GeometryError::DegenerateMap { x: x[0], y: x[1], t, det: phi / r });
        }
        let scale = phi / r;
        Ok([c[0] + d[0] * scale, c[1] + d[1] * scale])
    }

    /// Jacobian of `h_t` at a physical point, with determinant and the
    /// transported gradient coefficient.
    ///
    /// In the rotated frame `(e_r, e_theta)` the Jacobian is upper
    /// triangular with entries `d phi/d r`, `(d phi/d theta)/r` and
    /// `phi/r`, where `phi(r, theta) = r + t rho(theta) chi(r)`.
    pub fn jacobian(
        &self,
        lattice: &Lattice2,
        x: [f64; 2],
        t: f64,
    ) -> Result<Jacobian2, GeometryError> {
        let c = self.base.center_physical(lattice);
        let d = [x[0] - c[0], x[1] - c[1]];
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if r == 0.0 {
            let id = [[1.0, 0.0], [0.0, 1.0]];
            return Ok(Jacobian2 { j: id, det: 1.0, a: id });
        }
        let theta = d[1].atan2(d[0]);
        let (chi, dchi) = (self.cutoff.eval(r), self.cutoff.deriv(r));
        let rho = self.rho(theta);
        let shift = t * rho * chi;
        let slope = t * rho * dchi;
        let phi_t = t * self.rho_deriv(theta) * chi;
        if shift == 0.0 && slope == 0.0 && phi_t == 0.0 {
            let id = [[1.0, 0.0], [0.0, 1.0]];
            return Ok(Jacobian2 { j: id, det: 1.0, a: id });
        }
        let phi_r = 1.0 + slope;
        let stretch = (r + shift) / r;
        let det = phi_r * stretch;
        if phi_r <= 0.0 || stretch <= 0.0 {
            return Err(GeometryError::DegenerateMap { x: x[0], y: x[1], t, det });
        }
        // J = R [[phi_r, phi_t / r], [0, stretch]] R^T with R = [e_r e_theta].
        let (er, et) = ([d[0] / r, d[1] / r], [-d[1] / r, d[0] / r]);
        let col0 = [phi_r * er[0], phi_r * er[1]];
        let col1 = [
            (phi_t / r) * er[0] + stretch * et[0],
            (phi_t / r) * er[1] + stretch * et[1],
        ];
        let j = [
            [col0[0] * er[0] + col1[0] * et[0], col0[0] * er[1] + col1[0] * et[1]],
            [col0[1] * er[0] + col1[1] * et[0], col0[1] * er[1] + col1[1] * et[1]],
        ];
        // A = det J * J^-1 J^-T, assembled from the polar factorization so
        // the t = 0 case reduces to the exact identity.
        let jinv = [
            [j[1][1] / det, -j[0][1] / det],
            [-j[1][0] / det, j[0][0] / det],
        ];
        let a = [
            [
                det * (jinv[0][0] * jinv[0][0] + jinv[0][1] * jinv[0][1]),
                det * (jinv[0][0] * jinv[1][0] + jinv[0][1] * jinv[1][1]),
            ],
            [
                det * (jinv[1][0] * jinv[0][0] + jinv[1][1] * jinv[0][1]),
                det * (jinv[1][0] * jinv[1][0] + jinv[1][1] * jinv[1][1]),
            ],
        ];
        Ok(Jacobian2 { j, det, a })
    }

    /// Scans `det J` over the annulus and `t in [-t_max, t_max]`.
    ///
    /// `samples` controls the number of `(theta, r)` pairs; each pair is
    /// tested at 21 parameter values. Needs at least 100 samples.
    pub fn validate(
        &self,
        lattice: &Lattice2,
        t_max: f64,
        samples: usize,
    ) -> Result<ValidityReport, GeometryError> {
        if samples < 100 {
            return Err(GeometryError::TooFewSamples(samples));
        }
        let n_theta = 64usize;
        let n_r = samples.div_ceil(n_theta).max(4);
        let n_t = 21usize;
        let c = self.base.center_physical(lattice);
        // Degeneracy can come from the radial slope (only inside the
        // cutoff ramp) or from the total stretch (anywhere the cutoff is
        // active), so the radial samples are split between the core
        // region and the ramp rather than spread uniformly.
        let r_lo = 0.85 * self.base.min_radius_bound();
        let (r_inner, r_outer) = self.annulus;
        let n_core = n_r / 2;
        let n_ramp = n_r - n_core;
        let mut radii = Vec::with_capacity(n_r);
        for ir in 0..n_core {
            radii.push(r_lo + (r_inner - r_lo) * (ir as f64 + 0.5) / n_core as f64);
        }
        for ir in 0..n_ramp {
            radii.push(r_inner + (r_outer - r_inner) * (ir as f64 + 0.5) / n_ramp as f64);
        }
        let mut min_det = f64::INFINITY;
        let mut min_at = (0.0, [0.0, 0.0]);
        for it in 0..n_t {
            let t = t_max * (2.0 * it as f64 / (n_t - 1) as f64 - 1.0);
            for ith in 0..n_theta {
                let theta = TAU * ith as f64 / n_theta as f64;
                for &r in &radii {
                    let x = [c[0] + r * theta.cos(), c[1] + r * theta.sin()];
                    let det = match self.jacobian(lattice, x, t) {
                        Ok(jac) => jac.det,
                        Err(GeometryError::DegenerateMap { det, .. }) => det,
                        Err(e) => return Err(e),
                    };
                    if det < min_det {
                        min_det = det;
                        min_at = (t, x);
                    }
                }
            }
        }
        Ok(ValidityReport {
            t_max,
            samples: n_theta * radii.len() * n_t,
            min_det,
            min_det_at: min_at,
            ok: min_det > 0.0,
        })
    }
}

impl Default for CutoffPoly {
    fn default() -> Self {
        CutoffPoly::new(0.0, 1.0, 2)
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_family() -> (Lattice2, ShapeFamily) {
        let lat = Lattice2::unit_square();
        let base = HoleShape::disk([0.5, 0.5], 0.25).unwrap();
        let fam = ShapeFamily::new(base, vec![(0, 0.25, 0.0)], (0.30, 0.45), 2).unwrap();
        (lat, fam)
    }

    #[test]
    fn gram_inverse_is_inverse_of_gram() {
        for lat in [
            Lattice2::unit_square(),
            Lattice2::rectangular(2.0, 0.7).unwrap(),
            Lattice2::hexagonal(1.3).unwrap(),
        ] {
            let (p1, p2) = (lat.period(0), lat.period(1));
            let g = [
                [dot(p1, p1), dot(p1, p2)],
                [dot(p2, p1), dot(p2, p2)],
            ];
            let gi = lat.gram_inverse();
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    let got = gi[i][0] * g[0][j] + gi[i][1] * g[1][j];
                    assert!((got - want).abs() < 1e-12, "entry ({i},{j}) = {got}");
                }
            }
        }
    }

    #[test]
    fn fractional_roundtrip_and_dual_pairing() {
        let lat = Lattice2::hexagonal(1.0).unwrap();
        let y = [0.3, 0.8];
        let x = lat.to_physical(y);
        let back = lat.to_fractional(x);
        assert!((back[0] - y[0]).abs() < 1e-14 && (back[1] - y[1]).abs() < 1e-14);
        let g = lat.dual_basis();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { TAU } else { 0.0 };
                assert!((dot(g[i], lat.period(j)) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_basis_is_rejected() {
        assert!(Lattice2::new([[1.0, 0.0], [2.0, 0.0]]).is_err());
        assert!(Lattice2::new([[0.0, 1.0], [1.0, 0.0]]).is_err(), "left-handed pair");
    }

    #[test]
    fn radius_positivity_is_enforced() {
        // r0 = 0.2 with |a_1| = 0.25 dips below zero.
        let err = HoleShape::new([0.5, 0.5], 0.2, vec![(1, 0.25, 0.0)]);
        assert!(err.is_err());
        // A mild perturbation passes.
        assert!(HoleShape::new([0.5, 0.5], 0.2, vec![(1, 0.05, 0.0)]).is_ok());
    }

    #[test]
    fn contains_flips_across_boundary_on_rays() {
        let lat = Lattice2::unit_square();
        let shape = HoleShape::new([0.5, 0.5], 0.25, vec![(2, 0.03, 0.0), (3, 0.0, 0.02)]).unwrap();
        let c = shape.center_physical(&lat);
        for i in 0..64 {
            let theta = TAU * i as f64 / 64.0;
            let r = shape.radius(theta);
            let eps = 1e-9;
            let inside = [c[0] + (r - eps) * theta.cos(), c[1] + (r - eps) * theta.sin()];
            let outside = [c[0] + (r + eps) * theta.cos(), c[1] + (r + eps) * theta.sin()];
            assert!(shape.contains(&lat, inside), "ray {i}: inside point escaped");
            assert!(!shape.contains(&lat, outside), "ray {i}: outside point captured");
        }
    }

    #[test]
    fn cutoff_matches_boundary_conditions() {
        for s in [2u32, 3, 4] {
            let chi = CutoffPoly::new(0.3, 0.45, s);
            assert_eq!(chi.eval(0.3), 1.0);
            assert_eq!(chi.eval(0.45), 0.0);
            assert_eq!(chi.eval(0.2), 1.0);
            assert_eq!(chi.eval(0.5), 0.0);
            // The derivative vanishes at the seams and grows like the
            // s-th power of the distance into the ramp.
            assert_eq!(chi.deriv(0.3), 0.0);
            assert_eq!(chi.deriv(0.45), 0.0);
            let peak = chi.deriv(0.375).abs();
            for r in [0.3 + 1e-3, 0.45 - 1e-3] {
                let near = chi.deriv(r).abs();
                assert!(near < 1e-2 * peak, "s={s}, r={r}: |chi'| = {near:.2e}");
            }
            // Monotone decreasing inside.
            let mut prev = 1.0;
            for i in 1..=100 {
                let v = chi.eval(0.3 + 0.15 * i as f64 / 100.0);
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn cutoff_derivative_matches_finite_difference() {
        let chi = CutoffPoly::new(0.3, 0.45, 3);
        for i in 0..20 {
            let r = 0.3 + 0.15 * (i as f64 + 0.5) / 20.0;
            let h = 1e-6;
            let fd = (chi.eval(r + h) - chi.eval(r - h)) / (2.0 * h);
            assert!(
                (fd - chi.deriv(r)).abs() < 1e-7,
                "r={r}: fd={fd:.10} analytic={:.10}",
                chi.deriv(r)
            );
        }
    }

    #[test]
    fn smoothness_below_two_is_rejected() {
        let base = HoleShape::disk([0.5, 0.5], 0.25).unwrap();
        let err = ShapeFamily::new(base, vec![(0, 1.0, 0.0)], (0.3, 0.45), 1);
        assert!(matches!(err, Err(GeometryError::BadSmoothness(1))));
    }

    #[test]
    fn deformation_is_identity_at_t_zero_and_outside_annulus() {
        let (lat, fam) = disk_family();
        for x in [[0.61, 0.52], [0.97, 0.11], [0.5, 0.96], [0.2, 0.2]] {
            let moved = fam.displace(&lat, x, 0.0).unwrap();
            assert_eq!(moved, x, "t = 0 must fix {x:?} bitwise");
            let jac = fam.jacobian(&lat, x, 0.0).unwrap();
            assert_eq!(jac.j, [[1.0, 0.0], [0.0, 1.0]]);
            assert_eq!(jac.det, 1.0);
            assert_eq!(jac.a, [[1.0, 0.0], [0.0, 1.0]]);
        }
        // Outside the annulus the map is the identity for every t.
        let far = [0.97, 0.11];
        let moved = fam.displace(&lat, far, 0.37).unwrap();
        assert_eq!(moved, far);
        let jac = fam.jacobian(&lat, far, 0.37).unwrap();
        assert_eq!(jac.j, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let lat = Lattice2::unit_square();
        let base = HoleShape::new([0.5, 0.5], 0.25, vec![(2, 0.02, 0.01)]).unwrap();
        let fam =
            ShapeFamily::new(base, vec![(0, 0.2, 0.0), (2, 0.1, 0.05)], (0.30, 0.45), 2).unwrap();
        let t = 0.07;
        let eps = 1e-5;
        // Points spread over the ramp region and the rigid inner region.
        for (rr, th) in [(0.28, 0.3), (0.33, 1.1), (0.40, 2.9), (0.435, 4.2), (0.31, 5.5)] {
            let x = [0.5 + rr * f64::cos(th), 0.5 + rr * f64::sin(th)];
            let jac = fam.jacobian(&lat, x, t).unwrap();
            for col in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[col] += eps;
                xm[col] -= eps;
                let fp = fam.displace(&lat, xp, t).unwrap();
                let fm = fam.displace(&lat, xm, t).unwrap();
                for row in 0..2 {
                    let fd = (fp[row] - fm[row]) / (2.0 * eps);
                    assert!(
                        (fd - jac.j[row][col]).abs() < 1e-6,
                        "entry ({row},{col}) at r={rr}, th={th}: fd={fd:.9} vs {:.9}",
                        jac.j[row][col]
                    );
                }
            }
            // det consistency and the coefficient matrix identity
            // A J^T J = det J * I.
            let j = jac.j;
            let jtj = [
                [j[0][0] * j[0][0] + j[1][0] * j[1][0], j[0][0] * j[0][1] + j[1][0] * j[1][1]],
                [j[0][1] * j[0][0] + j[1][1] * j[1][0], j[0][1] * j[0][1] + j[1][1] * j[1][1]],
            ];
            for i in 0..2 {
                for l in 0..2 {
                    let got: f64 = (0..2).map(|q| jac.a[i][q] * jtj[q][l]).sum();
                    let want = if i == l { jac.det } else { 0.0 };
                    assert!((got - want).abs() < 1e-12, "A J^T J mismatch at ({i},{l})");
                }
            }
        }
    }

    #[test]
    fn fold_over_is_detected_by_the_scan() {
        let lat = Lattice2::unit_square();
        let base = HoleShape::disk([0.5, 0.5], 0.25).unwrap();
        // Steep cutoff ramp: max |chi'| = 15/8 / width. With rho = 1 the
        // radial derivative 1 + t rho chi' first vanishes at
        // t_fold = (r_outer - r_inner) * 8 / 15.
        let fam = ShapeFamily::new(base, vec![(0, 1.0, 0.0)], (0.30, 0.42), 2).unwrap();
        let t_fold = 0.12 * 8.0 / 15.0;
        let report = fam.validate(&lat, 1.3 * t_fold, 2500).unwrap();
        assert!(!report.ok, "scan past the fold must fail: min det = {}", report.min_det);
        assert!(report.min_det <= 0.0);
        let safe = fam.validate(&lat, 0.8 * t_fold, 2500).unwrap();
        assert!(safe.ok, "scan inside the fold limit: min det = {}", safe.min_det);
        assert!(safe.min_det > 0.0);
    }

    #[test]
    fn displace_reports_degeneracy_pointwise() {
        let lat = Lattice2::unit_square();
        let base = HoleShape::disk([0.5, 0.5], 0.25).unwrap();
        let fam = ShapeFamily::new(base, vec![(0, 1.0, 0.0)], (0.30, 0.42), 2).unwrap();
        // Middle of the ramp, where chi' is steepest.
        let x = [0.5 + 0.36, 0.5];
        let t = 0.2;
        assert!(fam.jacobian(&lat, x, t).is_err(), "fold expected at t = {t}");
        assert!(fam.jacobian(&lat, x, 0.05).is_ok());
    }

    #[test]
    fn perturbed_radius_tracks_direction() {
        let (_, fam) = disk_family();
        let t = 0.1;
        for i in 0..8 {
            let theta = TAU * i as f64 / 8.0;
            let want = 0.25 + t * 0.25;
            assert!((fam.perturbed_radius(theta, t) - want).abs() < 1e-15);
        }
        let shape = fam.perturbed_shape(t).unwrap();
        assert!((shape.r0() - 0.275).abs() < 1e-15);
    }

    #[test]
    fn hole_must_fit_in_cell() {
        let lat = Lattice2::unit_square();
        let big = HoleShape::disk([0.5, 0.5], 0.6).unwrap();
        assert!(matches!(
            big.fits_within_cell(&lat, 0.0),
            Err(GeometryError::HoleExitsCell { .. })
        ));
        let ok = HoleShape::disk([0.5, 0.5], 0.25).unwrap();
        assert!(ok.fits_within_cell(&lat, 0.0).is_ok());
    }
}
