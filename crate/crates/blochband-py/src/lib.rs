//! Python bindings for the band-structure library.
//!
//! The classes wrap the validated core types one to one; the functions
//! mirror the high-level operations and return plain lists and dicts so
//! the results drop straight into numpy or matplotlib.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::blochband::analysis::{
    analyticity_probe, free_dispersion, run_validation, thomas_certificate,
    thomas_operator_bound, ProbeRequest, THOMAS_ALPHA,
};
use ::blochband::discretize::{real_k, assemble, DeformKind, PotentialSpec, PotentialTerm, TorusGrid};
use ::blochband::eig::{eigs_lowest_with, SolveOptions};
use ::blochband::geometry::{HoleShape, Lattice2, ShapeFamily};
use ::blochband::spectral::{
    band_structure, dispersion_surface, spectrum_report, KPath, KVertex,
};
use ::blochband::svg::path_ticks;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Planar period lattice; columns of `basis` are the period vectors.
#[pyclass(frozen, name = "Lattice", module = "blochband")]
struct PyLattice {
    inner: Lattice2,
}

#[pymethods]
impl PyLattice {
    #[new]
    fn new(basis: [[f64; 2]; 2]) -> PyResult<Self> {
        Ok(PyLattice { inner: Lattice2::new(basis).map_err(value_err)? })
    }

    /// The unit square lattice.
    #[staticmethod]
    fn unit_square() -> Self {
        PyLattice { inner: Lattice2::unit_square() }
    }

    #[getter]
    fn basis(&self) -> [[f64; 2]; 2] {
        self.inner.basis()
    }

    /// Dual basis vectors; `dual[i] . basis[j] = 2 pi delta_ij`.
    #[getter]
    fn dual_basis(&self) -> [[f64; 2]; 2] {
        self.inner.dual_basis()
    }

    fn __repr__(&self) -> String {
        let b = self.inner.basis();
        format!("Lattice(basis=[[{}, {}], [{}, {}]])", b[0][0], b[0][1], b[1][0], b[1][1])
    }
}

/// Star-shaped hole described by a radius Fourier series around `center`.
#[pyclass(frozen, name = "Hole", module = "blochband")]
struct PyHole {
    inner: HoleShape,
}

#[pymethods]
impl PyHole {
    /// `harmonics` holds `(m, cos_coeff, sin_coeff)` with `m >= 1`.
    #[new]
    #[pyo3(signature = (center, r0, harmonics = Vec::new()))]
    fn new(center: [f64; 2], r0: f64, harmonics: Vec<(u32, f64, f64)>) -> PyResult<Self> {
        Ok(PyHole { inner: HoleShape::new(center, r0, harmonics).map_err(value_err)? })
    }

    /// Circular hole of radius `r0`.
    #[staticmethod]
    fn disk(center: [f64; 2], r0: f64) -> PyResult<Self> {
        Ok(PyHole { inner: HoleShape::disk(center, r0).map_err(value_err)? })
    }

    #[getter]
    fn center(&self) -> [f64; 2] {
        self.inner.center()
    }

    #[getter]
    fn r0(&self) -> f64 {
        self.inner.r0()
    }

    /// Boundary radius at polar angle `theta`.
    fn radius(&self, theta: f64) -> f64 {
        self.inner.radius(theta)
    }

    fn __repr__(&self) -> String {
        let c = self.inner.center();
        format!(
            "Hole(center=[{}, {}], r0={}, harmonics={})",
            c[0],
            c[1],
            self.inner.r0(),
            self.inner.fourier_coeffs().len()
        )
    }
}

/// One-parameter family of hole shapes around a base hole.
///
/// The perturbation `direction` is a radius Fourier series like the
/// hole's own; the deformation acts inside the `annulus = (r_inner,
/// r_outer)` and fades to the identity with `smoothness` continuous
/// derivatives.
#[pyclass(frozen, name = "Family", module = "blochband")]
struct PyFamily {
    inner: ShapeFamily,
}

#[pymethods]
impl PyFamily {
    #[new]
    #[pyo3(signature = (base, direction, annulus, smoothness = 3))]
    fn new(
        base: &PyHole,
        direction: Vec<(u32, f64, f64)>,
        annulus: (f64, f64),
        smoothness: u32,
    ) -> PyResult<Self> {
        let fam = ShapeFamily::new(base.inner.clone(), direction, annulus, smoothness)
            .map_err(value_err)?;
        Ok(PyFamily { inner: fam })
    }
}

/// Trigonometric potential `c0 + sum c cos(2 pi m . x + phase)`.
#[pyclass(frozen, name = "Potential", module = "blochband")]
struct PyPotential {
    inner: PotentialSpec,
}

#[pymethods]
impl PyPotential {
    /// `terms` holds `(c, (m1, m2), phase)`.
    #[new]
    #[pyo3(signature = (c0 = 0.0, terms = Vec::new()))]
    fn new(c0: f64, terms: Vec<(f64, (i32, i32), f64)>) -> Self {
        let terms = terms
            .into_iter()
            .map(|(c, (m1, m2), phase)| PotentialTerm { c, m: [m1, m2], phase })
            .collect();
        PyPotential { inner: PotentialSpec { c0, terms } }
    }

    fn __repr__(&self) -> String {
        format!("Potential(c0={}, terms={})", self.inner.c0, self.inner.terms.len())
    }
}

fn potential_of(v: Option<&PyPotential>) -> PotentialSpec {
    v.map(|p| p.inner.clone()).unwrap_or_default()
}

/// Periodicity-cell grid with the hole nodes eliminated.
#[pyclass(frozen, name = "Grid", module = "blochband")]
struct PyGrid {
    inner: TorusGrid,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (lattice, n, hole = None))]
    fn new(lattice: &PyLattice, n: usize, hole: Option<&PyHole>) -> PyResult<Self> {
        let grid =
            TorusGrid::build(&lattice.inner, n, hole.map(|h| &h.inner)).map_err(value_err)?;
        Ok(PyGrid { inner: grid })
    }

    /// Grid for a deformed domain at parameter `t`.
    ///
    /// `mode` is "regrid" (classify nodes against the perturbed hole) or
    /// "pullback" (keep the base grid, transport the coefficients).
    #[staticmethod]
    #[pyo3(signature = (lattice, n, family, t, mode = "regrid"))]
    fn deformed(
        lattice: &PyLattice,
        n: usize,
        family: &PyFamily,
        t: f64,
        mode: &str,
    ) -> PyResult<Self> {
        let kind = match mode {
            "regrid" => DeformKind::Regrid,
            "pullback" => DeformKind::Pullback,
            other => {
                return Err(PyValueError::new_err(format!(
                    "mode must be 'regrid' or 'pullback', got '{other}'"
                )))
            }
        };
        let grid = TorusGrid::build_deformed(&lattice.inner, n, &family.inner, t, kind)
            .map_err(value_err)?;
        Ok(PyGrid { inner: grid })
    }

    /// Nodes per period in each direction.
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Degrees of freedom after hole elimination.
    #[getter]
    fn n_free(&self) -> usize {
        self.inner.n_free()
    }

    /// Deformation parameter, 0 on fixed domains.
    #[getter]
    fn t(&self) -> f64 {
        self.inner.t()
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={}, n_free={}, t={})", self.inner.n(), self.inner.n_free(), self.inner.t())
    }
}

fn solve_options(dense_threshold: Option<usize>) -> SolveOptions {
    let mut opts = SolveOptions::default();
    if let Some(d) = dense_threshold {
        opts.dense_threshold = d;
    }
    opts
}

/// Exact free eigenvalues `|k + g|^2` over the dual lattice, ascending.
#[pyfunction]
#[pyo3(signature = (lattice, k, count = 5))]
fn free_bands(lattice: &PyLattice, k: [f64; 2], count: usize) -> Vec<f64> {
    free_dispersion(&lattice.inner, k, count)
}

/// Lowest eigenvalues of the Bloch operator at one k-point, ascending.
#[pyfunction]
#[pyo3(signature = (grid, k, n_bands = 5, potential = None, dense_threshold = None))]
fn bands(
    grid: &PyGrid,
    k: [f64; 2],
    n_bands: usize,
    potential: Option<&PyPotential>,
    dense_threshold: Option<usize>,
) -> PyResult<Vec<f64>> {
    let v = potential_of(potential);
    let op = assemble(&grid.inner, &v, real_k(k)).map_err(value_err)?;
    let res = eigs_lowest_with(&op, &grid.inner, &v, n_bands, &solve_options(dense_threshold))
        .map_err(runtime_err)?;
    Ok(res.values)
}

/// Band structure along a piecewise-linear path of labeled vertices.
///
/// `vertices` holds `(label, (k1, k2))` pairs. Returns a dict with the
/// path positions, one eigenvalue list per band, the labeled tick
/// positions, and the worst solver residual.
#[pyfunction]
#[pyo3(signature = (grid, vertices, points_per_segment = 30, n_bands = 5, potential = None, dense_threshold = None))]
fn band_path<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    vertices: Vec<(String, [f64; 2])>,
    points_per_segment: usize,
    n_bands: usize,
    potential: Option<&PyPotential>,
    dense_threshold: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let verts = vertices
        .into_iter()
        .map(|(label, k)| KVertex { label, k })
        .collect();
    let path = KPath::new(verts, points_per_segment).map_err(value_err)?;
    let v = potential_of(potential);
    let bs = band_structure(&grid.inner, &v, &path, n_bands, &solve_options(dense_threshold))
        .map_err(runtime_err)?;
    let out = PyDict::new_bound(py);
    let xs: Vec<f64> = bs.k_points.iter().map(|p| p.arclength).collect();
    out.set_item("arclength", xs)?;
    out.set_item("bands", &bs.bands)?;
    out.set_item("ticks", path_ticks(&path))?;
    out.set_item("max_residual", bs.max_residual())?;
    Ok(out)
}

/// Band ranges, spectrum components, and gaps over a rectangular
/// Brillouin-zone sample.
#[pyfunction]
#[pyo3(signature = (grid, dims = (9, 9), n_bands = 5, potential = None, dense_threshold = None))]
fn spectrum<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    dims: (usize, usize),
    n_bands: usize,
    potential: Option<&PyPotential>,
    dense_threshold: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let v = potential_of(potential);
    let bs = dispersion_surface(&grid.inner, &v, dims, n_bands, &solve_options(dense_threshold))
        .map_err(runtime_err)?;
    let report = spectrum_report(&bs).map_err(runtime_err)?;
    let out = PyDict::new_bound(py);
    out.set_item("bands", report.bands)?;
    out.set_item("spectrum", report.spectrum)?;
    out.set_item("gaps", report.gaps)?;
    out.set_item("k_grid", report.k_grid)?;
    out.set_item("N", report.n)?;
    out.set_item("warnings", report.warnings)?;
    Ok(out)
}

/// Separation certificate of the shifted multiplier pair on `grid`.
///
/// Measures the smallest singular value of the skew part over
/// hole-vanishing vectors and checks it against the floor `2 beta pi`;
/// `beta` defaults to `C / 6` with twenty percent headroom.
#[pyfunction]
#[pyo3(signature = (grid, c = 10.0, beta = None))]
fn certificate<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    c: f64,
    beta: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cert = thomas_certificate(&grid.inner, c, beta).map_err(runtime_err)?;
    let out = PyDict::new_bound(py);
    out.set_item("C", cert.c)?;
    out.set_item("alpha", cert.alpha)?;
    out.set_item("beta", cert.beta)?;
    out.set_item("sigma_min_B", cert.sigma_min_b)?;
    out.set_item("floor", cert.theoretical_floor)?;
    out.set_item("pass", cert.pass)?;
    out.set_item("N", cert.n)?;
    out.set_item("hole", cert.shape)?;
    Ok(out)
}

/// Smallest singular value of the full shifted operator over
/// hole-vanishing vectors; never below the certificate's skew floor.
#[pyfunction]
#[pyo3(signature = (grid, c = 10.0, beta = None))]
fn operator_bound(grid: &PyGrid, c: f64, beta: Option<f64>) -> PyResult<f64> {
    thomas_operator_bound(&grid.inner, c, beta).map_err(runtime_err)
}

/// Samples one eigenvalue branch along a deformation family and
/// estimates its first two t-derivatives at 0.
#[pyfunction]
#[pyo3(signature = (lattice, n, family, k0 = [0.0, 0.0], band = 1, t_max = 0.1, n_steps = 9, potential = None, dense_threshold = None))]
fn probe<'py>(
    py: Python<'py>,
    lattice: &PyLattice,
    n: usize,
    family: &PyFamily,
    k0: [f64; 2],
    band: usize,
    t_max: f64,
    n_steps: usize,
    potential: Option<&PyPotential>,
    dense_threshold: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let v = potential_of(potential);
    let req = ProbeRequest { k0, band, t_max, n_steps };
    let result = analyticity_probe(
        &lattice.inner,
        n,
        &family.inner,
        &v,
        &req,
        &solve_options(dense_threshold),
    )
    .map_err(runtime_err)?;
    let out = PyDict::new_bound(py);
    out.set_item("d1", result.d1.value)?;
    out.set_item("d2", result.d2.value)?;
    out.set_item("orders", [result.d1.order, result.d2.order])?;
    out.set_item("fit_residual", result.fit.max_residual)?;
    out.set_item("samples", result.samples)?;
    out.set_item("values", result.values)?;
    out.set_item("gaps", result.gaps)?;
    Ok(out)
}

/// Runs the built-in self checks; returns `(name, passed, detail)` rows.
#[pyfunction]
fn validate() -> PyResult<Vec<(String, bool, String)>> {
    let checks = run_validation().map_err(runtime_err)?;
    Ok(checks.into_iter().map(|c| (c.name.to_string(), c.pass, c.detail)).collect())
}

#[pymodule]
fn blochband(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyHole>()?;
    m.add_class::<PyFamily>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(free_bands, m)?)?;
    m.add_function(wrap_pyfunction!(bands, m)?)?;
    m.add_function(wrap_pyfunction!(band_path, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(certificate, m)?)?;
    m.add_function(wrap_pyfunction!(operator_bound, m)?)?;
    m.add_function(wrap_pyfunction!(probe, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add("THOMAS_ALPHA", THOMAS_ALPHA)?;
    Ok(())
}
