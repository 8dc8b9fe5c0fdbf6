//! Torus grids, hole classification, and Q1 assembly of Bloch operators.
//!
//! The unit cell is meshed by an N x N uniform grid in fractional
//! coordinates; nodes inside the hole are eliminated (Dirichlet), and
//! elements buried entirely inside the hole are dropped since none of
//! their corners carry degrees of freedom. Elements straddling the
//! staircase boundary stay in the loop: their eliminated corners are what
//! pin the discrete solution to zero there. The shifted sesquilinear form
//! of `(D + k)^2 + V` on fractional coordinates reads
//!
//! ```text
//!     S[p,q] = det B * integral( grad(phi_q)' A grad(phi_p)
//!              + i w . (phi_q grad(phi_p) - phi_p grad(phi_q))
//!              + c0 phi_q phi_p ) dy
//! ```
//!
//! with `A = det J * B^-1 J^-1 J^-T B^-T`, `w = det J * B^-1 J^-1 k`,
//! `c0 = det J (k.k + V)` and mass density `det J`, where `J` is the
//! Jacobian of the active deformation (the identity outside pullback
//! mode). Entries are polynomial in `k`, so the assembly doubles as the
//! analytic continuation to complex quasimomenta.

use crate::fourier::{mode, Fft2};
use crate::geometry::{GeometryError, HoleShape, Jacobian2, Lattice2, ShapeFamily};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiscretizeError {
    #[error("grid needs at least 8 nodes per side, got {0}")]
    GridTooCoarse(usize),
    #[error("hole too large for the cell: reach {reach:.4} >= boundary clearance {clearance:.4}")]
    HoleTooLarge { reach: f64, clearance: f64 },
    #[error(
        "deformation annulus exits the cell: r_outer = {r_outer:.4} >= clearance {clearance:.4}"
    )]
    AnnulusExitsCell { r_outer: f64, clearance: f64 },
    #[error("free node ({0}, {1}) touches no retained element; refine the grid")]
    IsolatedNode(usize, usize),
    #[error("hole swallows the cell: no free nodes remain")]
    NoFreeNodes,
    #[error("gauge assembly needs a fixed-domain grid, not pullback mode")]
    GaugeNeedsFixedDomain,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

// ---------------------------------------------------------------------------
// Sparse matrices
// ---------------------------------------------------------------------------

/// Compressed sparse row matrix over complex entries.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl Csr {
    /// Builds from unsorted triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut trip: Vec<(u32, u32, Complex64)>) -> Self {
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<u32> = Vec::with_capacity(trip.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(trip.len());
        let mut last = None;
        for &(r, c, v) in &trip {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
            row_ptr[r as usize + 1] = cols.len();
        }
        // Rows with no entries inherit the previous offset.
        for r in 1..=n {
            row_ptr[r] = row_ptr[r].max(row_ptr[r - 1]);
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for r in 0..self.n {
            let mut acc = Complex64::default();
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * x[self.cols[idx] as usize];
            }
            y[r] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Dense column-major copy (for LAPACK).
    pub fn to_dense_colmajor(&self) -> Vec<Complex64> {
        let mut a = vec![Complex64::default(); self.n * self.n];
        for r in 0..self.n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                a[self.cols[idx] as usize * self.n + r] = self.vals[idx];
            }
        }
        a
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |idx| (r, self.cols[idx] as usize, self.vals[idx]))
        })
    }

    /// Writes "row col re im" lines, 0-based, sorted by (row, col).
    pub fn write_coo(&self, out: &mut impl Write) -> std::io::Result<()> {
        for (r, c, v) in self.entries() {
            writeln!(out, "{} {} {:.16e} {:.16e}", r, c, v.re, v.im)?;
        }
        Ok(())
    }

    /// Largest entrywise deviation from the conjugate transpose,
    /// relative to the largest entry magnitude.
    pub fn hermitian_defect(&self) -> f64 {
        let mut lookup = std::collections::HashMap::new();
        let mut scale = 0.0f64;
        for (r, c, v) in self.entries() {
            lookup.insert((r, c), v);
            scale = scale.max(v.norm());
        }
        let mut worst = 0.0f64;
        for (&(r, c), &v) in &lookup {
            let vt = lookup.get(&(c, r)).copied().unwrap_or_default();
            worst = worst.max((v - vt.conj()).norm());
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }
}

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

/// One cosine term `c * cos(2 pi m . y + phase)` of a periodic potential.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PotentialTerm {
    pub c: f64,
    pub m: [i32; 2],
    #[serde(default)]
    pub phase: f64,
}

/// A real periodic potential: constant plus a finite cosine sum.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct PotentialSpec {
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub terms: Vec<PotentialTerm>,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec::default()
    }

    pub fn constant(c0: f64) -> Self {
        PotentialSpec { c0, terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.c0 == 0.0 && self.terms.is_empty()
    }

    /// Value at a fractional point (any representative; V is periodic).
    pub fn eval(&self, y: [f64; 2]) -> f64 {
        let mut v = self.c0;
        for t in &self.terms {
            v += t.c * (TAU * (t.m[0] as f64 * y[0] + t.m[1] as f64 * y[1]) + t.phase).cos();
        }
        v
    }

    /// Triangle-inequality bound on `sup |V|`.
    pub fn sup_bound(&self) -> f64 {
        self.c0.abs() + self.terms.iter().map(|t| t.c.abs()).sum::<f64>()
    }
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// How the hole deviates from its base shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeformKind {
    /// Physically perturb the hole and re-classify the grid against it.
    Regrid,
    /// Keep the base grid and transport the operator coefficients.
    Pullback,
}

#[derive(Debug, Clone)]
enum Deformation {
    None,
    Active { family: ShapeFamily, t: f64, kind: DeformKind },
}

/// Uniform periodic N x N grid with Dirichlet hole nodes eliminated.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    lattice: Lattice2,
    n: usize,
    h: f64,
    node_dof: Vec<Option<u32>>,
    dof_node: Vec<u32>,
    elements: Vec<u32>,
    deform: Deformation,
    class_shape: Option<HoleShape>,
}

impl TorusGrid {
    /// Grid for a fixed domain: no hole, or a hole of fixed shape.
    pub fn build(
        lattice: &Lattice2,
        n: usize,
        hole: Option<&HoleShape>,
    ) -> Result<Self, DiscretizeError> {
        Self::build_impl(lattice, n, hole.cloned(), Deformation::None)
    }

    /// Grid for a deformed domain at parameter `t`.
    ///
    /// Regrid mode classifies nodes against the perturbed boundary;
    /// pullback mode keeps the base classification for every `t` and
    /// defers the deformation to the assembly coefficients.
    pub fn build_deformed(
        lattice: &Lattice2,
        n: usize,
        family: &ShapeFamily,
        t: f64,
        kind: DeformKind,
    ) -> Result<Self, DiscretizeError> {
        let clearance = lattice.boundary_distance(family.base().center());
        let r_outer = family.annulus().1;
        if r_outer >= clearance {
            return Err(DiscretizeError::AnnulusExitsCell { r_outer, clearance });
        }
        let shape = match kind {
            DeformKind::Regrid => family.perturbed_shape(t)?,
            DeformKind::Pullback => family.base().clone(),
        };
        Self::build_impl(
            lattice,
            n,
            Some(shape),
            Deformation::Active { family: family.clone(), t, kind },
        )
    }

    fn build_impl(
        lattice: &Lattice2,
        n: usize,
        shape: Option<HoleShape>,
        deform: Deformation,
    ) -> Result<Self, DiscretizeError> {
        if n < 8 {
            return Err(DiscretizeError::GridTooCoarse(n));
        }
        if let Some(s) = &shape {
            if let Err(GeometryError::HoleExitsCell { reach, clearance }) =
                s.fits_within_cell(lattice, 0.0)
            {
                return Err(DiscretizeError::HoleTooLarge { reach, clearance });
            }
        }
        let h = 1.0 / n as f64;
        let mut inside = vec![false; n * n];
        if let Some(s) = &shape {
            for i1 in 0..n {
                for i2 in 0..n {
                    let x = lattice.to_physical([i1 as f64 * h, i2 as f64 * h]);
                    inside[i1 * n + i2] = s.contains(lattice, x);
                }
            }
        }
        let mut retained = vec![false; n * n];
        let mut elements = Vec::new();
        for e1 in 0..n {
            for e2 in 0..n {
                let keep = !(0..4).all(|l| {
                    let (a, b) = CORNERS[l];
                    inside[((e1 + a) % n) * n + (e2 + b) % n]
                });
                if keep {
                    retained[e1 * n + e2] = true;
                    elements.push((e1 * n + e2) as u32);
                }
            }
        }
        let mut node_dof = vec![None; n * n];
        let mut dof_node = Vec::new();
        for i1 in 0..n {
            for i2 in 0..n {
                if inside[i1 * n + i2] {
                    continue;
                }
                let touched = (0..4).any(|l| {
                    let (a, b) = CORNERS[l];
                    retained[((i1 + n - a) % n) * n + (i2 + n - b) % n]
                });
                if !touched {
                    return Err(DiscretizeError::IsolatedNode(i1, i2));
                }
                node_dof[i1 * n + i2] = Some(dof_node.len() as u32);
                dof_node.push((i1 * n + i2) as u32);
            }
        }
        if dof_node.is_empty() {
            return Err(DiscretizeError::NoFreeNodes);
        }
        Ok(TorusGrid {
            lattice: *lattice,
            n,
            h,
            node_dof,
            dof_node,
            elements,
            deform,
            class_shape: shape,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lattice(&self) -> &Lattice2 {
        &self.lattice
    }

    pub fn n_free(&self) -> usize {
        self.dof_node.len()
    }

    pub fn n_dirichlet(&self) -> usize {
        self.n * self.n - self.dof_node.len()
    }

    /// Degree of freedom at node `(i1, i2)`, if the node is free.
    pub fn dof(&self, i1: usize, i2: usize) -> Option<u32> {
        self.node_dof[i1 * self.n + i2]
    }

    /// Grid node of a degree of freedom.
    pub fn node_of_dof(&self, dof: usize) -> (usize, usize) {
        let idx = self.dof_node[dof] as usize;
        (idx / self.n, idx % self.n)
    }

    pub fn n_retained_elements(&self) -> usize {
        self.elements.len()
    }

    /// The hole shape the classification used, if any.
    pub fn classification_shape(&self) -> Option<&HoleShape> {
        self.class_shape.as_ref()
    }

    pub fn is_pullback(&self) -> bool {
        matches!(self.deform, Deformation::Active { kind: DeformKind::Pullback, .. })
    }

    /// Deformation parameter of the grid, 0 for fixed domains.
    pub fn t(&self) -> f64 {
        match &self.deform {
            Deformation::None => 0.0,
            Deformation::Active { t, .. } => *t,
        }
    }

    /// Extends a free-node vector by zero to the full N x N grid.
    pub fn zero_extend(&self, u: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(u.len(), self.n_free(), "free vector length mismatch");
        let mut full = vec![Complex64::default(); self.n * self.n];
        for (dof, &node) in self.dof_node.iter().enumerate() {
            full[node as usize] = u[dof];
        }
        full
    }

    /// Restricts a full-grid vector to the free nodes.
    pub fn restrict(&self, full: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(full.len(), self.n * self.n, "grid vector length mismatch");
        self.dof_node.iter().map(|&node| full[node as usize]).collect()
    }
}

const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Assembled generalized eigenproblem `S v = lambda M v` at one k.
#[derive(Debug, Clone)]
pub struct BlochOperator {
    pub stiffness: Csr,
    pub mass: Csr,
    pub k: [Complex64; 2],
    pub n_free: usize,
}

/// Lifts a real quasimomentum into the complex-k assembly interface.
pub fn real_k(k: [f64; 2]) -> [Complex64; 2] {
    [Complex64::new(k[0], 0.0), Complex64::new(k[1], 0.0)]
}

struct QuadRule {
    /// Gauss point coordinates on the reference square.
    pts: [[f64; 2]; 4],
    /// Shape function values, `phi[gp][local]`.
    phi: [[f64; 4]; 4],
    /// Reference gradients (before the 1/h scale), `dphi[gp][local][dim]`.
    dphi: [[[f64; 2]; 4]; 4],
}

fn quad_rule() -> QuadRule {
    let g0 = 0.5 - 0.5 / 3f64.sqrt();
    let g1 = 0.5 + 0.5 / 3f64.sqrt();
    let pts = [[g0, g0], [g1, g0], [g0, g1], [g1, g1]];
    let mut phi = [[0.0; 4]; 4];
    let mut dphi = [[[0.0; 2]; 4]; 4];
    for (gp, &[x, y]) in pts.iter().enumerate() {
        let lx = [1.0 - x, x];
        let ly = [1.0 - y, y];
        let dx = [-1.0, 1.0];
        for (l, &(a, b)) in CORNERS.iter().enumerate() {
            phi[gp][l] = lx[a] * ly[b];
            dphi[gp][l] = [dx[a] * ly[b], lx[a] * dx[b]];
        }
    }
    QuadRule { pts, phi, dphi }
}

/// Coefficients of the form at one quadrature point.
struct Coeff {
    a: [[f64; 2]; 2],
    w: [Complex64; 2],
    c0: Complex64,
    d: f64,
}

fn coefficients(
    grid: &TorusGrid,
    v: &PotentialSpec,
    k: [Complex64; 2],
    kk: Complex64,
    y: [f64; 2],
) -> Result<Coeff, DiscretizeError> {
    const ID: Jacobian2 =
        Jacobian2 { j: [[1.0, 0.0], [0.0, 1.0]], det: 1.0, a: [[1.0, 0.0], [0.0, 1.0]] };
    let (jac, img_y) = match &grid.deform {
        Deformation::Active { family, t, kind: DeformKind::Pullback } => {
            let x = grid.lattice.to_physical(y);
            let jac = family.jacobian(&grid.lattice, x, *t)?;
            let xi = family.displace(&grid.lattice, x, *t)?;
            // Identity points keep the exact fractional coordinate so the
            // t = 0 assembly reproduces the fixed-domain one bitwise.
            let img_y = if xi == x { y } else { grid.lattice.to_fractional(xi) };
            (jac, img_y)
        }
        _ => (ID, y),
    };
    let binv = grid.lattice.basis_inverse();
    // A = B^-1 (det J * J^-1 J^-T) B^-T, with the inner factor already in
    // the Jacobian record.
    let ja = jac.a;
    let tmp = [
        [
            binv[0][0] * ja[0][0] + binv[0][1] * ja[1][0],
            binv[0][0] * ja[0][1] + binv[0][1] * ja[1][1],
        ],
        [
            binv[1][0] * ja[0][0] + binv[1][1] * ja[1][0],
            binv[1][0] * ja[0][1] + binv[1][1] * ja[1][1],
        ],
    ];
    let a = [
        [
            tmp[0][0] * binv[0][0] + tmp[0][1] * binv[0][1],
            tmp[0][0] * binv[1][0] + tmp[0][1] * binv[1][1],
        ],
        [
            tmp[1][0] * binv[0][0] + tmp[1][1] * binv[0][1],
            tmp[1][0] * binv[1][0] + tmp[1][1] * binv[1][1],
        ],
    ];
    let jinv = [
        [jac.j[1][1] / jac.det, -jac.j[0][1] / jac.det],
        [-jac.j[1][0] / jac.det, jac.j[0][0] / jac.det],
    ];
    let wp = [
        jinv[0][0] * k[0] + jinv[0][1] * k[1],
        jinv[1][0] * k[0] + jinv[1][1] * k[1],
    ];
    let w = [
        (binv[0][0] * wp[0] + binv[0][1] * wp[1]) * jac.det,
        (binv[1][0] * wp[0] + binv[1][1] * wp[1]) * jac.det,
    ];
    let c0 = (kk + v.eval(img_y)) * jac.det;
    Ok(Coeff { a, w, c0, d: jac.det })
}

fn assemble_impl(
    grid: &TorusGrid,
    v: &PotentialSpec,
    k: [Complex64; 2],
    gauge_kappa: Option<[f64; 2]>,
) -> Result<BlochOperator, DiscretizeError> {
    let n = grid.n;
    let h = grid.h;
    let rule = quad_rule();
    let det_b = grid.lattice.det();
    let wq = det_b * h * h / 4.0;
    let kk = k[0] * k[0] + k[1] * k[1];
    let nnz_guess = grid.elements.len() * 16;
    let mut s_trip = Vec::with_capacity(nnz_guess);
    let mut m_trip = Vec::with_capacity(nnz_guess);
    for &e in &grid.elements {
        let (e1, e2) = (e as usize / n, e as usize % n);
        let mut s_loc = [[Complex64::default(); 4]; 4];
        let mut m_loc = [[Complex64::default(); 4]; 4];
        for gp in 0..4 {
            let y = [
                (e1 as f64 + rule.pts[gp][0]) * h,
                (e2 as f64 + rule.pts[gp][1]) * h,
            ];
            let co = coefficients(grid, v, k, kk, y)?;
            let phi = &rule.phi[gp];
            // Physical fractional gradients carry the 1/h scale.
            let mut grad = [[0.0f64; 2]; 4];
            for l in 0..4 {
                grad[l] = [rule.dphi[gp][l][0] / h, rule.dphi[gp][l][1] / h];
            }
            let mut wdot = [Complex64::default(); 4];
            for l in 0..4 {
                wdot[l] = co.w[0] * grad[l][0] + co.w[1] * grad[l][1];
            }
            for p in 0..4 {
                for q in 0..4 {
                    let ag = co.a[0][0] * grad[q][0] * grad[p][0]
                        + co.a[0][1] * grad[q][1] * grad[p][0]
                        + co.a[1][0] * grad[q][0] * grad[p][1]
                        + co.a[1][1] * grad[q][1] * grad[p][1];
                    let cross = Complex64::i() * (wdot[p] * phi[q] - wdot[q] * phi[p]);
                    s_loc[p][q] += (ag + cross + co.c0 * phi[q] * phi[p]) * wq;
                    m_loc[p][q] += Complex64::from(co.d * phi[q] * phi[p] * wq);
                }
            }
        }
        // Scatter with optional diagonal Bloch phases from the canonical
        // node positions (a congruence, so spectra are untouched).
        let mut dofs = [None; 4];
        let mut tau = [Complex64::new(1.0, 0.0); 4];
        for (l, &(a, b)) in CORNERS.iter().enumerate() {
            let (i1, i2) = ((e1 + a) % n, (e2 + b) % n);
            dofs[l] = grid.node_dof[i1 * n + i2];
            if let Some(kappa) = gauge_kappa {
                let arg = kappa[0] * (i1 as f64 * h) + kappa[1] * (i2 as f64 * h);
                tau[l] = Complex64::new(0.0, arg).exp();
            }
        }
        for p in 0..4 {
            let Some(dp) = dofs[p] else { continue };
            for q in 0..4 {
                let Some(dq) = dofs[q] else { continue };
                let phase = tau[p] * tau[q].conj();
                s_trip.push((dp, dq, phase * s_loc[p][q]));
                m_trip.push((dp, dq, phase * m_loc[p][q]));
            }
        }
    }
    let nf = grid.n_free();
    Ok(BlochOperator {
        stiffness: Csr::from_triplets(nf, s_trip),
        mass: Csr::from_triplets(nf, m_trip),
        k,
        n_free: nf,
    })
}

/// Assembles the shifted form of `(D + k)^2 + V` (pullback-weighted on
/// deformed grids). Entries are polynomial in `k`; for real `k` the
/// stiffness is Hermitian, and in general `S(conj k) = S(k)^H`.
pub fn assemble(
    grid: &TorusGrid,
    v: &PotentialSpec,
    k: [Complex64; 2],
) -> Result<BlochOperator, DiscretizeError> {
    assemble_impl(grid, v, k, None)
}

/// Assembles the Bloch-phase gauge of the same operator at real `k`:
/// every coupling carries the phase `exp(i kappa . (y_p - y_q))` of its
/// endpoint positions, so eigenvectors are quasiperiodic amplitudes and
/// the spectrum matches `assemble` exactly.
pub fn assemble_gauge(
    grid: &TorusGrid,
    v: &PotentialSpec,
    k: [f64; 2],
) -> Result<BlochOperator, DiscretizeError> {
    if grid.is_pullback() {
        return Err(DiscretizeError::GaugeNeedsFixedDomain);
    }
    let kappa = grid.lattice.fractional_k(k);
    assemble_impl(grid, v, real_k(k), Some(kappa))
}

// ---------------------------------------------------------------------------
// Thomas multipliers
// ---------------------------------------------------------------------------

/// Real multiplier of the symmetric part: `|2 pi m|^2 + a^2 - b^2 + 4 pi a m1`.
pub fn multiplier_a(m: [i64; 2], alpha: f64, beta: f64) -> f64 {
    let m2 = TAU * TAU * (m[0] * m[0] + m[1] * m[1]) as f64;
    m2 + alpha * alpha - beta * beta + 2.0 * TAU * alpha * m[0] as f64
}

/// Purely imaginary multiplier of the skew part: `2 i b (a - 2 pi m1)`.
pub fn multiplier_b(m: [i64; 2], alpha: f64, beta: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * beta * (alpha - TAU * m[0] as f64))
}

pub(crate) fn apply_multiplier(
    grid: &TorusGrid,
    u: &[Complex64],
    sym: impl FnMut(i64, i64) -> Complex64,
) -> Vec<Complex64> {
    let mut full = grid.zero_extend(u);
    let mut fft = Fft2::new(grid.n);
    fft.apply_symbol(&mut full, sym);
    full
}

/// Applies the symmetric Thomas operator to a zero-extended free vector,
/// returning the full-grid result.
pub fn apply_multiplier_a(
    grid: &TorusGrid,
    u: &[Complex64],
    alpha: f64,
    beta: f64,
) -> Vec<Complex64> {
    apply_multiplier(grid, u, |m1, m2| Complex64::from(multiplier_a([m1, m2], alpha, beta)))
}

/// Applies the skew Thomas operator to a zero-extended free vector,
/// returning the full-grid result.
pub fn apply_multiplier_b(
    grid: &TorusGrid,
    u: &[Complex64],
    alpha: f64,
    beta: f64,
) -> Vec<Complex64> {
    apply_multiplier(grid, u, |m1, _| multiplier_b([m1, 0], alpha, beta))
}

/// Smallest `|multiplier_b|` over the modes of an N-periodic grid; the
/// separation floor of the skew part.
pub fn multiplier_b_floor(n: usize, alpha: f64, beta: f64) -> f64 {
    (0..n)
        .map(|i| multiplier_b([mode(n, i), 0], alpha, beta).norm())
        .fold(f64::INFINITY, f64::min)
}
