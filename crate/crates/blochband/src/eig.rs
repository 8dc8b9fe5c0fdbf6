//! Generalized Hermitian eigensolvers for the assembled cell problems.
//!
//! Two routes to the lowest eigenpairs of `S v = lambda M v`: a dense one
//! through LAPACK (Cholesky reduction to a standard Hermitian problem)
//! for moderate sizes, and a blocked preconditioned iteration (LOBPCG
//! with a Fourier-space smoother) that scales to finer grids. Both return
//! M-orthonormal eigenvectors and per-pair residuals, and both are held
//! to the same residual bound.

use crate::discretize::{BlochOperator, Csr, PotentialSpec, TorusGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::os::raw::c_char;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EigError {
    #[error("mass matrix is not positive definite (Cholesky pivot {0})")]
    MassNotPositive(i32),
    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error(
        "eigensolver stalled after {iters} iterations; residuals reached {achieved:?} (tol {tol:.1e})"
    )]
    ConvergenceFailure { iters: usize, achieved: Vec<f64>, tol: f64 },
    #[error("requested {nev} eigenpairs from a problem of dimension {n}")]
    TooManyBands { nev: usize, n: usize },
}

/// Solver knobs, all with working defaults.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolveOptions {
    /// Problems up to this dimension use the dense path.
    pub dense_threshold: usize,
    /// Residual bound `|S v - lambda M v| / |M v|` per reported pair.
    pub tol: f64,
    /// Iteration budget of the blocked solver.
    pub max_iters: usize,
    /// Seed of the iterative starting block.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { dense_threshold: 6000, tol: 1e-9, max_iters: 600, seed: 0x0b10c4 }
    }
}

/// Lowest eigenpairs with their residuals.
#[derive(Debug, Clone)]
pub struct EigResult {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors, column-major `n x nev`.
    pub vectors: Vec<Complex64>,
    /// `|S v - lambda M v| / |M v|` per pair.
    pub residuals: Vec<f64>,
    pub used_dense: bool,
    pub iterations: usize,
}

// ---------------------------------------------------------------------------
// LAPACK / BLAS bindings (OpenBLAS carries both)
// ---------------------------------------------------------------------------

extern "C" {
    fn zpotrf_(
        uplo: *const c_char,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        info: *mut i32,
    );
    fn zhegst_(
        itype: *const i32,
        uplo: *const c_char,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        b: *const Complex64,
        ldb: *const i32,
        info: *mut i32,
    );
    #[allow(clippy::too_many_arguments)]
    fn zheevr_(
        jobz: *const c_char,
        range: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        vl: *const f64,
        vu: *const f64,
        il: *const i32,
        iu: *const i32,
        abstol: *const f64,
        m: *mut i32,
        w: *mut f64,
        z: *mut Complex64,
        ldz: *const i32,
        isuppz: *mut i32,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn ztrsm_(
        side: *const c_char,
        uplo: *const c_char,
        transa: *const c_char,
        diag: *const c_char,
        m: *const i32,
        n: *const i32,
        alpha: *const Complex64,
        a: *const Complex64,
        lda: *const i32,
        b: *mut Complex64,
        ldb: *const i32,
    );
    fn zgbtrf_(
        m: *const i32,
        n: *const i32,
        kl: *const i32,
        ku: *const i32,
        ab: *mut Complex64,
        ldab: *const i32,
        ipiv: *mut i32,
        info: *mut i32,
    );
    #[allow(clippy::too_many_arguments)]
    fn zgbtrs_(
        trans: *const c_char,
        n: *const i32,
        kl: *const i32,
        ku: *const i32,
        nrhs: *const i32,
        ab: *const Complex64,
        ldab: *const i32,
        ipiv: *const i32,
        b: *mut Complex64,
        ldb: *const i32,
        info: *mut i32,
    );
    #[allow(clippy::too_many_arguments)]
    fn zgemm_(
        transa: *const c_char,
        transb: *const c_char,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        alpha: *const Complex64,
        a: *const Complex64,
        lda: *const i32,
        b: *const Complex64,
        ldb: *const i32,
        beta: *const Complex64,
        c: *mut Complex64,
        ldc: *const i32,
    );
}

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `C = op(A) op(B)` for column-major buffers.
fn gemm(
    ta: u8,
    tb: u8,
    m: usize,
    n: usize,
    k: usize,
    a: &[Complex64],
    lda: usize,
    b: &[Complex64],
    ldb: usize,
    c: &mut [Complex64],
    ldc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    let (mm, nn, kk) = (m as i32, n as i32, k as i32);
    let (ilda, ildb, ildc) = (lda as i32, ldb as i32, ldc as i32);
    unsafe {
        zgemm_(
            &(ta as c_char),
            &(tb as c_char),
            &mm,
            &nn,
            &kk,
            &ONE,
            a.as_ptr(),
            &ilda,
            b.as_ptr(),
            &ildb,
            &ZERO,
            c.as_mut_ptr(),
            &ildc,
        );
    }
}

/// Lowest `nev` eigenpairs of a standard Hermitian problem; `a` is
/// destroyed. Column-major `n x n`.
fn heevr_lowest(a: &mut [Complex64], n: usize, nev: usize) -> Result<(Vec<f64>, Vec<Complex64>), EigError> {
    assert!(nev >= 1 && nev <= n);
    let ni = n as i32;
    let (il, iu) = (1i32, nev as i32);
    let range = if nev == n { b'A' } else { b'I' };
    let mut m_found = 0i32;
    let mut w = vec![0.0f64; n];
    let mut z = vec![ZERO; n * nev];
    let mut isuppz = vec![0i32; 2 * n];
    let mut info = 0i32;
    let abstol = 0.0f64;
    let (vl, vu) = (0.0f64, 0.0f64);
    let mut work_q = [ZERO];
    let mut rwork_q = [0.0f64];
    let mut iwork_q = [0i32];
    let m1 = -1i32;
    unsafe {
        zheevr_(
            &(b'V' as c_char),
            &(range as c_char),
            &(b'L' as c_char),
            &ni,
            a.as_mut_ptr(),
            &ni,
            &vl,
            &vu,
            &il,
            &iu,
            &abstol,
            &mut m_found,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &ni,
            isuppz.as_mut_ptr(),
            work_q.as_mut_ptr(),
            &m1,
            rwork_q.as_mut_ptr(),
            &m1,
            iwork_q.as_mut_ptr(),
            &m1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(EigError::Lapack { routine: "zheevr (workspace)", info });
    }
    let lwork = work_q[0].re as i32;
    let lrwork = rwork_q[0] as i32;
    let liwork = iwork_q[0];
    let mut work = vec![ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        zheevr_(
            &(b'V' as c_char),
            &(range as c_char),
            &(b'L' as c_char),
            &ni,
            a.as_mut_ptr(),
            &ni,
            &vl,
            &vu,
            &il,
            &iu,
            &abstol,
            &mut m_found,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &ni,
            isuppz.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(EigError::Lapack { routine: "zheevr", info });
    }
    w.truncate(nev);
    Ok((w, z))
}

/// Lowest `nev` eigenpairs of the generalized dense problem. Both inputs
/// are column-major `n x n` and are destroyed.
pub(crate) fn dense_generalized_lowest(
    s: &mut [Complex64],
    m: &mut [Complex64],
    n: usize,
    nev: usize,
) -> Result<(Vec<f64>, Vec<Complex64>), EigError> {
    let ni = n as i32;
    let mut info = 0i32;
    unsafe {
        zpotrf_(&(b'L' as c_char), &ni, m.as_mut_ptr(), &ni, &mut info);
    }
    if info > 0 {
        return Err(EigError::MassNotPositive(info));
    }
    if info < 0 {
        return Err(EigError::Lapack { routine: "zpotrf", info });
    }
    let itype = 1i32;
    unsafe {
        zhegst_(
            &itype,
            &(b'L' as c_char),
            &ni,
            s.as_mut_ptr(),
            &ni,
            m.as_ptr(),
            &ni,
            &mut info,
        );
    }
    if info != 0 {
        return Err(EigError::Lapack { routine: "zhegst", info });
    }
    let (w, mut z) = heevr_lowest(s, n, nev)?;
    // Back-transform x = L^-H z; the result is M-orthonormal.
    let nevi = nev as i32;
    unsafe {
        ztrsm_(
            &(b'L' as c_char),
            &(b'L' as c_char),
            &(b'C' as c_char),
            &(b'N' as c_char),
            &ni,
            &nevi,
            &ONE,
            m.as_ptr(),
            &ni,
            z.as_mut_ptr(),
            &ni,
        );
    }
    Ok((w, z))
}

// ---------------------------------------------------------------------------
// Preconditioner
// ---------------------------------------------------------------------------

/// Position of grid line `i` in the folded ordering `0, n-1, 1, n-2, ...`
/// that turns cyclic adjacency into band adjacency of width 2.
fn folded_pos(i: usize, n: usize) -> usize {
    if 2 * i < n {
        2 * i
    } else {
        2 * (n - 1 - i) + 1
    }
}

/// Exact solver for the shifted pencil `P = S + sigma M`, used as the
/// LOBPCG preconditioner.
///
/// Free nodes are reordered by folding both grid directions, which bounds
/// the bandwidth of the periodic stencil by O(N); the band factorization
/// then costs O(n_free N^2) once per quasimomentum.
struct ShiftedBandSolver {
    nf: usize,
    kl: i32,
    ku: i32,
    ldab: i32,
    ab: Vec<Complex64>,
    ipiv: Vec<i32>,
    /// free dof -> banded position
    perm: Vec<u32>,
}

impl ShiftedBandSolver {
    fn new(op: &BlochOperator, grid: &TorusGrid, sigma: f64) -> Result<Self, EigError> {
        let nf = op.n_free;
        let n = grid.n();
        let mut order: Vec<u32> = (0..nf as u32).collect();
        let key = |dof: u32| {
            let (i1, i2) = grid.node_of_dof(dof as usize);
            folded_pos(i1, n) * n + folded_pos(i2, n)
        };
        order.sort_by_key(|&d| key(d));
        let mut perm = vec![0u32; nf];
        for (pos, &dof) in order.iter().enumerate() {
            perm[dof as usize] = pos as u32;
        }
        let mut band = 0i64;
        for (r, c, _) in op.stiffness.entries() {
            band = band.max((perm[r] as i64 - perm[c] as i64).abs());
        }
        let (kl, ku) = (band as i32, band as i32);
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![ZERO; ldab as usize * nf];
        let mut scatter = |r: usize, c: usize, v: Complex64| {
            let (i, j) = (perm[r] as i64, perm[c] as i64);
            let row = (kl + ku) as i64 + i - j;
            ab[(row + j * ldab as i64) as usize] += v;
        };
        for (r, c, v) in op.stiffness.entries() {
            scatter(r, c, v);
        }
        for (r, c, v) in op.mass.entries() {
            scatter(r, c, v * sigma);
        }
        let mut ipiv = vec![0i32; nf];
        let mut info = 0i32;
        let nfi = nf as i32;
        unsafe {
            zgbtrf_(&nfi, &nfi, &kl, &ku, ab.as_mut_ptr(), &ldab, ipiv.as_mut_ptr(), &mut info);
        }
        if info != 0 {
            return Err(EigError::Lapack { routine: "zgbtrf", info });
        }
        Ok(ShiftedBandSolver { nf, kl, ku, ldab, ab, ipiv, perm })
    }

    /// Solves `P w = r` for a column-major block of right-hand sides.
    fn apply_block(&self, r: &[Complex64], cols: usize) -> Vec<Complex64> {
        let nf = self.nf;
        let mut b = vec![ZERO; nf * cols];
        for c in 0..cols {
            for i in 0..nf {
                b[c * nf + self.perm[i] as usize] = r[c * nf + i];
            }
        }
        let mut info = 0i32;
        let nfi = nf as i32;
        let nrhs = cols as i32;
        unsafe {
            zgbtrs_(
                &(b'N' as c_char),
                &nfi,
                &self.kl,
                &self.ku,
                &nrhs,
                self.ab.as_ptr(),
                &self.ldab,
                self.ipiv.as_ptr(),
                b.as_mut_ptr(),
                &nfi,
                &mut info,
            );
        }
        debug_assert_eq!(info, 0);
        let mut w = vec![ZERO; nf * cols];
        for c in 0..cols {
            for i in 0..nf {
                w[c * nf + i] = b[c * nf + self.perm[i] as usize];
            }
        }
        w
    }
}

// ---------------------------------------------------------------------------
// Blocked iteration
// ---------------------------------------------------------------------------

fn spmm(a: &Csr, x: &[Complex64], n: usize, cols: usize, y: &mut Vec<Complex64>) {
    y.resize(n * cols, ZERO);
    for c in 0..cols {
        a.matvec(&x[c * n..(c + 1) * n], &mut y[c * n..(c + 1) * n]);
    }
}

/// `A^H B` for two column-major `n x p`, `n x q` blocks.
fn gram(a: &[Complex64], b: &[Complex64], n: usize, p: usize, q: usize) -> Vec<Complex64> {
    let mut g = vec![ZERO; p * q];
    gemm(b'C', b'N', p, q, n, a, n, b, n, &mut g, p.max(1));
    g
}

/// `Z C` for a column-major `n x m` block and `m x p` coefficient matrix.
fn mul_coeff(z: &[Complex64], c: &[Complex64], n: usize, m: usize, p: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; n * p];
    gemm(b'N', b'N', n, p, m, z, n, c, m.max(1), &mut out, n);
    out
}

/// Removes the M-projection onto an M-orthonormal block `x` from `w`:
/// `w -= x (x^H M w)`, with `mx = M x` supplied by the caller.
fn project_out(
    x: &[Complex64],
    mx: &[Complex64],
    w: &mut [Complex64],
    n: usize,
    p: usize,
    q: usize,
) {
    if p == 0 || q == 0 {
        return;
    }
    let g = gram(mx, w, n, p, q);
    let corr = mul_coeff(x, &g, n, p, q);
    for (wv, cv) in w.iter_mut().zip(&corr) {
        *wv -= cv;
    }
}

/// M-orthonormalizes a block in place through its Gram eigendecomposition,
/// dropping near-null directions. Returns the surviving column count;
/// `mw = M w` must match the incoming block.
fn orthonormalize_block(
    w: &mut Vec<Complex64>,
    mw: &[Complex64],
    n: usize,
    q: usize,
    rel_drop: f64,
) -> Result<usize, EigError> {
    if q == 0 {
        return Ok(0);
    }
    let mut g = gram(w, mw, n, q, q);
    let (d, qv) = heevr_lowest(&mut g, q, q)?;
    let dmax = d.last().copied().unwrap_or(0.0).abs();
    let mut f = Vec::new();
    let mut kept = 0;
    for (i, &di) in d.iter().enumerate() {
        if di > dmax * rel_drop {
            let s = 1.0 / di.sqrt();
            f.extend(qv[i * q..(i + 1) * q].iter().map(|&v| v * s));
            kept += 1;
        }
    }
    *w = mul_coeff(w, &f, n, q, kept);
    Ok(kept)
}

fn column_residuals(
    sx: &[Complex64],
    mx: &[Complex64],
    lam: &[f64],
    n: usize,
    count: usize,
) -> (Vec<f64>, Vec<Complex64>) {
    let cols = lam.len();
    let mut r = vec![ZERO; n * cols];
    let mut res = vec![0.0f64; count];
    for c in 0..cols {
        let mut rn = 0.0f64;
        let mut mn = 0.0f64;
        for i in 0..n {
            let v = sx[c * n + i] - mx[c * n + i] * lam[c];
            r[c * n + i] = v;
            rn += v.norm_sqr();
            mn += mx[c * n + i].norm_sqr();
        }
        if c < count {
            res[c] = (rn / mn.max(f64::MIN_POSITIVE)).sqrt();
        }
    }
    (res, r)
}

fn lobpcg(
    op: &BlochOperator,
    grid: &TorusGrid,
    v: &PotentialSpec,
    nev: usize,
    opts: &SolveOptions,
) -> Result<EigResult, EigError> {
    let n = op.n_free;
    let bs = (nev + (nev / 2).max(3)).min(n);
    let sigma = 1.0 + v.sup_bound();
    let solver = ShiftedBandSolver::new(op, grid, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Complex64> = (0..n * bs)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let (mut sx, mut mx) = (Vec::new(), Vec::new());
    spmm(&op.mass, &x, n, bs, &mut mx);
    let mut xc = orthonormalize_block(&mut x, &mx, n, bs, 1e-10)?;
    let mut lam = vec![0.0f64; xc];
    let mut p: Vec<Complex64> = Vec::new();
    let mut pc = 0usize;
    let mut last_res = vec![f64::INFINITY; nev];
    let trace = std::env::var_os("BLOCHBAND_TRACE").is_some();
    for iter in 0..opts.max_iters {
        // Fresh products every iteration: cached transforms of S X and
        // M X lose digits precisely when the basis gets stiff.
        spmm(&op.stiffness, &x, n, xc, &mut sx);
        spmm(&op.mass, &x, n, xc, &mut mx);
        if iter == 0 {
            // Rayleigh quotients of the starting block.
            let a = gram(&x, &sx, n, xc, xc);
            for (i, l) in lam.iter_mut().enumerate() {
                *l = a[i * xc + i].re;
            }
        }
        let (res, r) = column_residuals(&sx, &mx, &lam, n, nev.min(xc));
        last_res = res.clone();
        if trace {
            eprintln!(
                "lobpcg iter {iter}: lam[0..3] {:?} res[0..3] {:?}",
                &lam[..3.min(lam.len())],
                &res[..3.min(res.len())]
            );
        }
        if xc >= nev && res.iter().all(|&e| e <= opts.tol) {
            return Ok(EigResult {
                values: lam[..nev].to_vec(),
                vectors: x[..n * nev].to_vec(),
                residuals: res,
                used_dense: false,
                iterations: iter,
            });
        }
        // New search directions: preconditioned residuals, cleaned
        // against X twice and orthonormalized among themselves.
        let mut w = solver.apply_block(&r, xc);
        let mut tmp = Vec::new();
        project_out(&x, &mx, &mut w, n, xc, xc);
        project_out(&x, &mx, &mut w, n, xc, xc);
        spmm(&op.mass, &w, n, xc, &mut tmp);
        let wc = orthonormalize_block(&mut w, &tmp, n, xc, 1e-10)?;
        // Previous directions get the same treatment, also against W.
        let mut mw = Vec::new();
        spmm(&op.mass, &w, n, wc, &mut mw);
        if pc > 0 {
            project_out(&x, &mx, &mut p, n, xc, pc);
            project_out(&w, &mw, &mut p, n, wc, pc);
            project_out(&x, &mx, &mut p, n, xc, pc);
            project_out(&w, &mw, &mut p, n, wc, pc);
            spmm(&op.mass, &p, n, pc, &mut tmp);
            pc = orthonormalize_block(&mut p, &tmp, n, pc, 1e-8)?;
        }
        let m = xc + wc + pc;
        if m < nev {
            return Err(EigError::ConvergenceFailure {
                iters: iter,
                achieved: last_res,
                tol: opts.tol,
            });
        }
        let mut z = Vec::with_capacity(n * m);
        z.extend_from_slice(&x[..n * xc]);
        z.extend_from_slice(&w[..n * wc]);
        z.extend_from_slice(&p[..n * pc]);
        let (mut sz, mut mz) = (Vec::new(), Vec::new());
        spmm(&op.stiffness, &z, n, m, &mut sz);
        spmm(&op.mass, &z, n, m, &mut mz);
        // Small generalized Rayleigh-Ritz; the Gram of the cleaned basis
        // is within roundoff of the identity, so it is safely definite.
        let mut a = gram(&z, &sz, n, m, m);
        let mut b = gram(&z, &mz, n, m, m);
        let keep = bs.min(m);
        let (wv, y) = dense_generalized_lowest(&mut a, &mut b, m, keep)?;
        lam = wv;
        x = mul_coeff(&z, &y, n, m, keep);
        // Conjugate directions: the Ritz combination minus its X part.
        // The basis kept block order, so those are the leading rows.
        let mut yp = y.clone();
        for c in 0..keep {
            for row in 0..xc {
                yp[c * m + row] = ZERO;
            }
        }
        p = mul_coeff(&z, &yp, n, m, keep);
        pc = keep;
        xc = keep;
    }
    Err(EigError::ConvergenceFailure {
        iters: opts.max_iters,
        achieved: last_res,
        tol: opts.tol,
    })
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

fn dense_path(op: &BlochOperator, nev: usize) -> Result<EigResult, EigError> {
    let n = op.n_free;
    let mut s = op.stiffness.to_dense_colmajor();
    let mut m = op.mass.to_dense_colmajor();
    let (values, vectors) = dense_generalized_lowest(&mut s, &mut m, n, nev)?;
    drop(s);
    drop(m);
    let mut sx = Vec::new();
    let mut mx = Vec::new();
    spmm(&op.stiffness, &vectors, n, nev, &mut sx);
    spmm(&op.mass, &vectors, n, nev, &mut mx);
    let (residuals, _) = column_residuals(&sx, &mx, &values, n, nev);
    Ok(EigResult { values, vectors, residuals, used_dense: true, iterations: 0 })
}

/// Lowest `nev` eigenpairs of the assembled pencil with default options.
pub fn eigs_lowest(
    op: &BlochOperator,
    grid: &TorusGrid,
    v: &PotentialSpec,
    nev: usize,
) -> Result<EigResult, EigError> {
    eigs_lowest_with(op, grid, v, nev, &SolveOptions::default())
}

/// Lowest `nev` eigenpairs, ascending, with M-orthonormal vectors.
///
/// Dispatches on problem size: dense Cholesky reduction up to
/// `dense_threshold`, the blocked preconditioned iteration above it.
pub fn eigs_lowest_with(
    op: &BlochOperator,
    grid: &TorusGrid,
    v: &PotentialSpec,
    nev: usize,
    opts: &SolveOptions,
) -> Result<EigResult, EigError> {
    let n = op.n_free;
    if nev == 0 || nev > n {
        return Err(EigError::TooManyBands { nev, n });
    }
    assert!(
        op.k[0].im == 0.0 && op.k[1].im == 0.0,
        "eigensolvers need a Hermitian pencil: quasimomentum must be real"
    );
    if n <= opts.dense_threshold {
        dense_path(op, nev)
    } else {
        lobpcg(op, grid, v, nev, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble, assemble_gauge, real_k, TorusGrid};
    use crate::geometry::{HoleShape, Lattice2};
    use std::f64::consts::PI;

    fn free_eigenvalues(k: [f64; 2], count: usize) -> Vec<f64> {
        let mut vals = Vec::new();
        for m1 in -6i64..=6 {
            for m2 in -6i64..=6 {
                let q1 = k[0] + 2.0 * PI * m1 as f64;
                let q2 = k[1] + 2.0 * PI * m2 as f64;
                vals.push(q1 * q1 + q2 * q2);
            }
        }
        vals.sort_by(f64::total_cmp);
        vals.truncate(count);
        vals
    }

    #[test]
    fn dense_solver_handles_a_two_by_two_pencil() {
        // S = diag(2, 6), M = diag(1, 2): eigenvalues 2 and 3.
        let s = Csr::from_triplets(
            2,
            vec![(0, 0, ONE * 2.0), (1, 1, ONE * 6.0)],
        );
        let m = Csr::from_triplets(2, vec![(0, 0, ONE), (1, 1, ONE * 2.0)]);
        let mut sd = s.to_dense_colmajor();
        let mut md = m.to_dense_colmajor();
        let (w, z) = dense_generalized_lowest(&mut sd, &mut md, 2, 2).unwrap();
        assert!((w[0] - 2.0).abs() < 1e-14 && (w[1] - 3.0).abs() < 1e-14);
        // M-orthonormality of the returned vectors.
        let x0 = [z[0], z[1]];
        let n0 = x0[0].norm_sqr() + 2.0 * x0[1].norm_sqr();
        assert!((n0 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn free_operator_spectrum_matches_the_dense_path() {
        let lat = Lattice2::unit_square();
        let grid = TorusGrid::build(&lat, 16, None).unwrap();
        let v = PotentialSpec::zero();
        for k in [[0.0, 0.0], [PI / 2.0, 0.0]] {
            let op = assemble(&grid, &v, real_k(k)).unwrap();
            let out = eigs_lowest(&op, &grid, &v, 5).unwrap();
            assert!(out.used_dense);
            let exact = free_eigenvalues(k, 5);
            for (got, want) in out.values.iter().zip(&exact) {
                let denom = want.max(1.0);
                assert!(
                    (got - want).abs() / denom < 0.03,
                    "k {k:?}: {got} vs {want}"
                );
            }
            for r in &out.residuals {
                assert!(*r <= 1e-9, "dense residual {r:.2e}");
            }
        }
    }

    #[test]
    fn iterative_path_agrees_with_dense_on_a_perforated_grid() {
        let lat = Lattice2::unit_square();
        let hole = HoleShape::disk([0.5, 0.5], 0.25).unwrap();
        let grid = TorusGrid::build(&lat, 24, Some(&hole)).unwrap();
        let v = PotentialSpec::constant(1.5);
        let op = assemble(&grid, &v, real_k([0.4, -0.7])).unwrap();
        let dense = eigs_lowest(&op, &grid, &v, 6).unwrap();
        let opts = SolveOptions { dense_threshold: 1, ..SolveOptions::default() };
        let iterative = eigs_lowest_with(&op, &grid, &v, 6, &opts).unwrap();
        assert!(dense.used_dense && !iterative.used_dense);
        for (a, b) in dense.values.iter().zip(&iterative.values) {
            assert!(
                (a - b).abs() <= 1e-8 * a.abs().max(1.0),
                "dense {a} vs iterative {b}"
            );
        }
        for r in &iterative.residuals {
            assert!(*r <= 1e-9, "iterative residual {r:.2e}");
        }
    }

    #[test]
    fn eigenvectors_come_back_mass_orthonormal() {
        let lat = Lattice2::unit_square();
        let hole = HoleShape::disk([0.5, 0.5], 0.2).unwrap();
        let grid = TorusGrid::build(&lat, 16, Some(&hole)).unwrap();
        let v = PotentialSpec::zero();
        let op = assemble(&grid, &v, real_k([1.0, 0.3])).unwrap();
        let out = eigs_lowest(&op, &grid, &v, 4).unwrap();
        let n = op.n_free;
        let mut mx = Vec::new();
        spmm(&op.mass, &out.vectors, n, 4, &mut mx);
        let g = gram(&out.vectors, &mx, n, 4, 4);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g[j * 4 + i] - want).norm() < 1e-10,
                    "gram[{i},{j}] = {}",
                    g[j * 4 + i]
                );
            }
        }
    }

    #[test]
    fn gauge_assembly_is_isospectral() {
        let lat = Lattice2::unit_square();
        let hole = HoleShape::disk([0.5, 0.5], 0.25).unwrap();
        let grid = TorusGrid::build(&lat, 16, Some(&hole)).unwrap();
        let v = PotentialSpec::constant(0.4);
        let k = [1.3, -0.8];
        let a = assemble(&grid, &v, real_k(k)).unwrap();
        let b = assemble_gauge(&grid, &v, k).unwrap();
        let ea = eigs_lowest(&a, &grid, &v, 5).unwrap();
        let eb = eigs_lowest(&b, &grid, &v, 5).unwrap();
        for (x, y) in ea.values.iter().zip(&eb.values) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn single_pair_request_matches_the_block_request() {
        let lat = Lattice2::unit_square();
        let hole = HoleShape::disk([0.5, 0.5], 0.25).unwrap();
        let grid = TorusGrid::build(&lat, 16, Some(&hole)).unwrap();
        let v = PotentialSpec::zero();
        let op = assemble(&grid, &v, real_k([0.0, 0.0])).unwrap();
        let one = eigs_lowest(&op, &grid, &v, 1).unwrap();
        let three = eigs_lowest(&op, &grid, &v, 3).unwrap();
        assert!(
            (one.values[0] - three.values[0]).abs() < 1e-10,
            "nev=1 gave {}, nev=3 gave {}",
            one.values[0],
            three.values[0]
        );
        assert!(one.values[0] > 1.0, "perforated ground state must be positive");
    }

    #[test]
    fn band_count_above_dimension_is_rejected() {
        let lat = Lattice2::unit_square();
        let grid = TorusGrid::build(&lat, 8, None).unwrap();
        let v = PotentialSpec::zero();
        let op = assemble(&grid, &v, real_k([0.0, 0.0])).unwrap();
        assert!(matches!(
            eigs_lowest(&op, &grid, &v, 100),
            Err(EigError::TooManyBands { .. })
        ));
    }
}
