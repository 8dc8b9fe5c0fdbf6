//! Configuration loading, command dispatch, and artifact persistence.
//!
//! An experiment is described by one JSON file: lattice, hole, potential,
//! grid resolution, deformation family, k-samples, and solver knobs.
//! Flags select the command and may override the output directory, grid
//! resolution, and band count; everything else lives in the config so the
//! file doubles as the record of the run.
//!
//! Commands write CSV/JSON artifacts (and SVG diagrams for the band
//! plots) into the output directory. Data files carry no timestamps, so
//! identical configs produce byte-identical artifacts; wall-clock
//! metadata goes into a `*.meta.json` sidecar instead.

use crate::analysis::{
    analyticity_probe, run_validation, shape_sweep, thomas_certificate, thomas_operator_bound,
    AnalysisError, ProbeRequest,
};
use crate::discretize::{DeformKind, DiscretizeError, PotentialSpec, TorusGrid};
use crate::eig::SolveOptions;
use crate::geometry::{HoleShape, Lattice2, ShapeFamily};
use crate::spectral::{
    band_structure, dispersion_surface, spectrum_report, BandStructure, KPath, SpectralError,
};
use crate::svg;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },
    #[error("config parse error: {message}")]
    Parse { message: String, line: usize, column: usize },
    #[error("config field '{field}': {constraint} (value {value})")]
    Validation { field: String, constraint: String, value: String },
}

fn invalid(field: &str, constraint: impl ToString, value: impl ToString) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        constraint: constraint.to_string(),
        value: value.to_string(),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("writing {path}: {err}")]
    Write { path: PathBuf, err: std::io::Error },
}

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

/// Domain construction mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Ignore the hole and discretize the full torus.
    NoHole,
    /// Classify nodes against the hole at parameter `t` on a fresh grid.
    Regrid,
    /// Pull the deformed metric back to the base grid.
    Pullback,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct HarmonicCfg {
    m: u32,
    #[serde(default)]
    cos: f64,
    #[serde(default)]
    sin: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HoleCfg {
    #[serde(default = "center_default")]
    center: [f64; 2],
    r0: f64,
    #[serde(default)]
    harmonics: Vec<HarmonicCfg>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyCfg {
    direction: Vec<HarmonicCfg>,
    annulus: [f64; 2],
    #[serde(default = "smoothness_default")]
    smoothness: u32,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridCfg {
    #[serde(rename = "N")]
    n: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThomasCfg {
    #[serde(rename = "C")]
    c: f64,
    #[serde(default)]
    beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeCfg {
    #[serde(default)]
    k0: [f64; 2],
    #[serde(default = "one")]
    band: usize,
    #[serde(default = "tenth")]
    t_max: f64,
    #[serde(default = "nine")]
    n_steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepCfg {
    #[serde(default)]
    ts: Option<Vec<f64>>,
    #[serde(default)]
    t_min: f64,
    #[serde(default = "tenth")]
    t_max: f64,
    #[serde(default = "five")]
    steps: usize,
}

fn center_default() -> [f64; 2] {
    [0.5, 0.5]
}
fn smoothness_default() -> u32 {
    3
}
fn one() -> usize {
    1
}
fn five() -> usize {
    5
}
fn nine() -> usize {
    9
}
fn tenth() -> f64 {
    0.1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    lattice: Option<[[f64; 2]; 2]>,
    hole: Option<HoleCfg>,
    potential: Option<PotentialSpec>,
    grid: Option<GridCfg>,
    mode: Option<Mode>,
    t: Option<f64>,
    family: Option<FamilyCfg>,
    kpath: Option<KPath>,
    kgrid: Option<[usize; 2]>,
    n_bands: Option<usize>,
    solver: Option<SolveOptions>,
    thomas: Option<ThomasCfg>,
    probe: Option<ProbeCfg>,
    sweep: Option<SweepCfg>,
    out_dir: Option<PathBuf>,
}

/// Separation-bound inputs: the potential bound `C` and the optional
/// shift parameter (`None` picks `1.2 * C/6`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThomasParams {
    #[serde(rename = "C")]
    pub c: f64,
    pub beta: Option<f64>,
}

/// A fully validated experiment description with every default filled.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub lattice: Lattice2,
    pub hole: Option<HoleShape>,
    pub potential: PotentialSpec,
    /// Nodes per period direction.
    pub n: usize,
    pub mode: Mode,
    /// Deformation parameter for bands/surface/gaps/thomas on a deformed
    /// domain; sweep and probe scan their own parameter lists.
    pub t: f64,
    pub family: Option<ShapeFamily>,
    pub kpath: KPath,
    pub kgrid: [usize; 2],
    pub n_bands: usize,
    pub solver: SolveOptions,
    pub thomas: ThomasParams,
    pub probe: ProbeRequest,
    pub sweep_ts: Vec<f64>,
    pub out_dir: PathBuf,
}

/// Loads and validates a JSON experiment description.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|err| ConfigError::Io { path: path.to_path_buf(), err })?;
    let raw: RawConfig = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        message: e.to_string(),
        line: e.line(),
        column: e.column(),
    })?;
    validate(raw)
}

/// The all-defaults config: free square lattice, zero potential, N = 48.
pub fn default_config() -> RunConfig {
    validate(RawConfig::default()).expect("defaults are valid")
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let basis = raw.lattice.unwrap_or([[1.0, 0.0], [0.0, 1.0]]);
    let lattice =
        Lattice2::new(basis).map_err(|e| invalid("lattice", e, format!("{basis:?}")))?;

    let hole = match &raw.hole {
        Some(hc) => {
            let coeffs: Vec<(u32, f64, f64)> =
                hc.harmonics.iter().map(|h| (h.m, h.cos, h.sin)).collect();
            let shape = HoleShape::new(hc.center, hc.r0, coeffs)
                .map_err(|e| invalid("hole", e, format!("r0 = {}", hc.r0)))?;
            shape
                .fits_within_cell(&lattice, 0.0)
                .map_err(|e| invalid("hole", e, format!("r0 = {}", hc.r0)))?;
            Some(shape)
        }
        None => None,
    };

    let mode = raw.mode.unwrap_or(if hole.is_some() { Mode::Regrid } else { Mode::NoHole });
    if mode != Mode::NoHole && hole.is_none() {
        return Err(invalid("mode", "needs a hole to perforate the cell", "no hole given"));
    }

    let family = match &raw.family {
        Some(fc) => {
            let base = hole
                .clone()
                .ok_or_else(|| invalid("family", "needs a hole as its base shape", "no hole"))?;
            let dir: Vec<(u32, f64, f64)> =
                fc.direction.iter().map(|h| (h.m, h.cos, h.sin)).collect();
            let fam = ShapeFamily::new(base, dir, (fc.annulus[0], fc.annulus[1]), fc.smoothness)
                .map_err(|e| invalid("family", e, format!("annulus {:?}", fc.annulus)))?;
            Some(fam)
        }
        None => None,
    };
    if mode == Mode::Pullback && family.is_none() {
        return Err(invalid("family", "is required by pullback mode", "null"));
    }

    let t = raw.t.unwrap_or(0.0);
    if t != 0.0 && family.is_none() {
        return Err(invalid("t", "a deformation parameter needs a family", t));
    }

    let n = raw.grid.map(|g| g.n).unwrap_or(48);
    if n < 8 {
        return Err(invalid("grid.N", "needs at least 8 nodes per side", n));
    }

    let n_bands = raw.n_bands.unwrap_or(5);
    if n_bands == 0 {
        return Err(invalid("n_bands", "must be at least 1", n_bands));
    }

    let kpath = raw.kpath.clone().unwrap_or_else(|| KPath::square_default(30));
    let kgrid = raw.kgrid.unwrap_or([9, 9]);
    if kgrid[0] == 0 || kgrid[1] == 0 {
        return Err(invalid("kgrid", "both dimensions must be positive", format!("{kgrid:?}")));
    }

    let solver = raw.solver.clone().unwrap_or_default();
    if !(solver.tol > 0.0) {
        return Err(invalid("solver.tol", "must be positive", solver.tol));
    }
    if solver.max_iters == 0 {
        return Err(invalid("solver.max_iters", "must be at least 1", solver.max_iters));
    }

    let thomas = match raw.thomas {
        Some(tc) => {
            if !(tc.c > 0.0) {
                return Err(invalid("thomas.C", "must be positive", tc.c));
            }
            if let Some(b) = tc.beta {
                if !(b > tc.c / 6.0) {
                    return Err(invalid(
                        "thomas.beta",
                        format!("must exceed C/6 = {}", tc.c / 6.0),
                        b,
                    ));
                }
            }
            ThomasParams { c: tc.c, beta: tc.beta }
        }
        None => ThomasParams { c: 10.0, beta: None },
    };

    let pc = raw.probe.unwrap_or(ProbeCfg { k0: [0.0, 0.0], band: 1, t_max: 0.1, n_steps: 9 });
    if pc.band == 0 {
        return Err(invalid("probe.band", "bands are numbered from 1", pc.band));
    }
    if !(pc.t_max > 0.0) {
        return Err(invalid("probe.t_max", "must be positive", pc.t_max));
    }
    let probe = ProbeRequest { k0: pc.k0, band: pc.band, t_max: pc.t_max, n_steps: pc.n_steps };

    let sweep_ts = match raw.sweep {
        Some(sc) => match sc.ts {
            Some(ts) => {
                if ts.is_empty() {
                    return Err(invalid("sweep.ts", "must not be empty", "[]"));
                }
                ts
            }
            None => {
                if sc.steps == 0 {
                    return Err(invalid("sweep.steps", "must be at least 1", sc.steps));
                }
                linspace(sc.t_min, sc.t_max, sc.steps)
            }
        },
        None => linspace(0.0, 0.1, 5),
    };

    Ok(RunConfig {
        lattice,
        hole,
        potential: raw.potential.unwrap_or_default(),
        n,
        mode,
        t,
        family,
        kpath,
        kgrid,
        n_bands,
        solver,
        thomas,
        probe,
        sweep_ts,
        out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
    })
}

fn linspace(a: f64, b: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![a];
    }
    (0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect()
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bands,
    Surface,
    Gaps,
    Sweep,
    Thomas,
    Probe,
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::Surface => "surface",
            Command::Gaps => "gaps",
            Command::Sweep => "sweep",
            Command::Thomas => "thomas",
            Command::Probe => "probe",
            Command::Validate => "validate",
        }
    }
}

/// Flag-level overrides applied after the config loads.
#[derive(Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid_n: Option<usize>,
    pub bands: Option<usize>,
}

/// Loads the config (or the defaults), applies overrides, and runs one
/// command. Returns the process exit code; every error path is `Err` and
/// the caller maps it to a nonzero exit.
pub fn run(
    cmd: Command,
    config: Option<&Path>,
    overrides: &Overrides,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut cfg = match config {
        Some(p) => load_config(p)?,
        None => default_config(),
    };
    if let Some(n) = overrides.grid_n {
        cfg.n = n;
    }
    if let Some(b) = overrides.bands {
        cfg.n_bands = b;
    }
    if let Some(o) = &overrides.out {
        cfg.out_dir = o.clone();
    }
    match cmd {
        Command::Bands => cmd_bands(&cfg, stdout),
        Command::Surface => cmd_surface(&cfg, stdout),
        Command::Gaps => cmd_gaps(&cfg, stdout),
        Command::Sweep => cmd_sweep(&cfg, stdout),
        Command::Thomas => cmd_thomas(&cfg, stdout),
        Command::Probe => cmd_probe(&cfg, stdout),
        Command::Validate => cmd_validate(stdout),
    }
}

fn build_grid(cfg: &RunConfig) -> Result<TorusGrid, CliError> {
    let grid = match (cfg.mode, &cfg.family) {
        (Mode::NoHole, _) => TorusGrid::build(&cfg.lattice, cfg.n, None)?,
        (Mode::Regrid, Some(f)) => {
            TorusGrid::build_deformed(&cfg.lattice, cfg.n, f, cfg.t, DeformKind::Regrid)?
        }
        (Mode::Regrid, None) => TorusGrid::build(&cfg.lattice, cfg.n, cfg.hole.as_ref())?,
        (Mode::Pullback, Some(f)) => {
            TorusGrid::build_deformed(&cfg.lattice, cfg.n, f, cfg.t, DeformKind::Pullback)?
        }
        (Mode::Pullback, None) => {
            return Err(invalid("family", "is required by pullback mode", "null").into())
        }
    };
    Ok(grid)
}

fn require_family<'a>(cfg: &'a RunConfig, cmd: &str) -> Result<&'a ShapeFamily, CliError> {
    cfg.family
        .as_ref()
        .ok_or_else(|| invalid("family", format!("is required by the {cmd} command"), "null").into())
}

// ---------------------------------------------------------------------------
// Artifact writing
// ---------------------------------------------------------------------------

fn out_path(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|err| CliError::Write { path: cfg.out_dir.clone(), err })?;
    Ok(cfg.out_dir.join(name))
}

fn write_bytes(cfg: &RunConfig, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let path = out_path(cfg, name)?;
    fs::write(&path, bytes).map_err(|err| CliError::Write { path: path.clone(), err })?;
    Ok(path)
}

fn write_json<T: Serialize>(cfg: &RunConfig, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable artifact");
    s.push('\n');
    write_bytes(cfg, name, s.as_bytes())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    command: &'static str,
    created_unix_seconds: u64,
    threads: usize,
    config: &'a RunConfig,
}

/// Wall-clock and provenance metadata; kept out of the data files so
/// those stay byte-identical across reruns.
fn write_sidecar(cfg: &RunConfig, cmd: Command) -> Result<(), CliError> {
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = Sidecar {
        command: cmd.name(),
        created_unix_seconds: created,
        threads: rayon::current_num_threads(),
        config: cfg,
    };
    write_json(cfg, &format!("{}.meta.json", cmd.name()), &meta)?;
    Ok(())
}

fn csv_bytes(bs: &BandStructure) -> Vec<u8> {
    let mut v = Vec::new();
    bs.write_csv(&mut v).expect("vec write cannot fail");
    v
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_bands(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let grid = build_grid(cfg)?;
    let bs = band_structure(&grid, &cfg.potential, &cfg.kpath, cfg.n_bands, &cfg.solver)?;
    write_bytes(cfg, "bands.csv", &csv_bytes(&bs))?;
    let ticks = svg::path_ticks(&cfg.kpath);
    write_bytes(cfg, "bands.svg", svg::band_diagram(&bs, &ticks).as_bytes())?;
    write_sidecar(cfg, Command::Bands)?;
    writeln!(
        stdout,
        "bands: {} k-points, {} bands, N = {}, max residual {:.3e} -> {}",
        bs.k_points.len(),
        bs.n_bands(),
        bs.n,
        bs.max_residual(),
        cfg.out_dir.display(),
    )
    .ok();
    Ok(0)
}

fn cmd_surface(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let grid = build_grid(cfg)?;
    let dims = (cfg.kgrid[0], cfg.kgrid[1]);
    let bs = dispersion_surface(&grid, &cfg.potential, dims, cfg.n_bands, &cfg.solver)?;
    write_bytes(cfg, "surface.csv", &csv_bytes(&bs))?;
    write_bytes(cfg, "surface.svg", svg::band_diagram(&bs, &[]).as_bytes())?;
    write_sidecar(cfg, Command::Surface)?;
    writeln!(
        stdout,
        "surface: {} x {} k-grid, {} bands, N = {}, max residual {:.3e} -> {}",
        dims.0,
        dims.1,
        bs.n_bands(),
        bs.n,
        bs.max_residual(),
        cfg.out_dir.display(),
    )
    .ok();
    Ok(0)
}

fn cmd_gaps(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let grid = build_grid(cfg)?;
    let dims = (cfg.kgrid[0], cfg.kgrid[1]);
    let bs = dispersion_surface(&grid, &cfg.potential, dims, cfg.n_bands, &cfg.solver)?;
    let report = spectrum_report(&bs)?;
    write_json(cfg, "gaps.json", &report)?;
    write_sidecar(cfg, Command::Gaps)?;
    writeln!(
        stdout,
        "gaps: {} bands -> {} spectrum component(s), {} gap(s) -> {}",
        report.bands.len(),
        report.spectrum.len(),
        report.gaps.len(),
        cfg.out_dir.display(),
    )
    .ok();
    Ok(0)
}

fn cmd_sweep(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let family = require_family(cfg, "sweep")?;
    let runs = shape_sweep(
        &cfg.lattice,
        cfg.n,
        family,
        &cfg.potential,
        &cfg.kpath,
        &cfg.sweep_ts,
        cfg.n_bands,
        &cfg.solver,
    )?;
    let mut csv = String::from("t,segment,arclength,k1,k2,band,lambda,residual\n");
    for (t, bs) in &runs {
        for (i, kp) in bs.k_points.iter().enumerate() {
            for j in 0..bs.bands.len() {
                let _ = writeln!(
                    csv,
                    "{:.16e},{},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e}",
                    t,
                    kp.segment,
                    kp.arclength,
                    kp.k[0],
                    kp.k[1],
                    j + 1,
                    bs.bands[j][i],
                    bs.residuals[j][i],
                );
            }
        }
    }
    write_bytes(cfg, "sweep.csv", csv.as_bytes())?;
    let ticks = svg::path_ticks(&cfg.kpath);
    write_bytes(cfg, "sweep.svg", svg::sweep_diagram(&runs, &ticks).as_bytes())?;
    write_sidecar(cfg, Command::Sweep)?;
    writeln!(
        stdout,
        "sweep: {} deformation value(s), {} bands each, N = {} -> {}",
        runs.len(),
        cfg.n_bands,
        cfg.n,
        cfg.out_dir.display(),
    )
    .ok();
    Ok(0)
}

/// JSON shape of `thomas.json`; records both the skew floor and the full
/// operator bound so either reading of the estimate can be audited.
#[derive(Serialize)]
struct ThomasExport<'a> {
    #[serde(rename = "C")]
    c: f64,
    alpha: f64,
    beta: f64,
    #[serde(rename = "sigma_min_B")]
    sigma_min_b: f64,
    floor: f64,
    operator_bound: f64,
    pass: bool,
    #[serde(rename = "N")]
    n: usize,
    hole: &'a str,
}

fn cmd_thomas(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let grid = build_grid(cfg)?;
    let cert = thomas_certificate(&grid, cfg.thomas.c, cfg.thomas.beta)?;
    let bound = thomas_operator_bound(&grid, cfg.thomas.c, Some(cert.beta))?;
    let export = ThomasExport {
        c: cert.c,
        alpha: cert.alpha,
        beta: cert.beta,
        sigma_min_b: cert.sigma_min_b,
        floor: cert.theoretical_floor,
        operator_bound: bound,
        pass: cert.pass,
        n: cert.n,
        hole: &cert.shape,
    };
    write_json(cfg, "thomas.json", &export)?;
    write_sidecar(cfg, Command::Thomas)?;
    writeln!(
        stdout,
        "thomas: sigma_min(B) = {:.6}, floor = {:.6}, operator bound = {:.6}, C = {} -> {}",
        cert.sigma_min_b,
        cert.theoretical_floor,
        bound,
        cert.c,
        if cert.pass { "pass" } else { "FAIL" },
    )
    .ok();
    Ok(0)
}

/// JSON shape of `probe.json`.
#[derive(Serialize)]
struct ProbeSummary {
    d1: f64,
    d2: f64,
    orders: [Option<f64>; 2],
    fit_residual: f64,
}

fn cmd_probe(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let family = require_family(cfg, "probe")?;
    let probe =
        analyticity_probe(&cfg.lattice, cfg.n, family, &cfg.potential, &cfg.probe, &cfg.solver)?;
    let mut csv = String::from("t,lambda,gap\n");
    for i in 0..probe.samples.len() {
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e}",
            probe.samples[i], probe.values[i], probe.gaps[i],
        );
    }
    write_bytes(cfg, "probe.csv", csv.as_bytes())?;
    let summary = ProbeSummary {
        d1: probe.d1.value,
        d2: probe.d2.value,
        orders: [probe.d1.order, probe.d2.order],
        fit_residual: probe.fit.max_residual,
    };
    write_json(cfg, "probe.json", &summary)?;
    write_sidecar(cfg, Command::Probe)?;
    writeln!(
        stdout,
        "probe: band {} at k = ({}, {}), d1 = {:.6e}, d2 = {:.6e}, fit residual {:.3e} -> {}",
        probe.band,
        probe.k0[0],
        probe.k0[1],
        summary.d1,
        summary.d2,
        summary.fit_residual,
        cfg.out_dir.display(),
    )
    .ok();
    Ok(0)
}

fn cmd_validate(stdout: &mut dyn Write) -> Result<i32, CliError> {
    let checks = run_validation()?;
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        writeln!(
            stdout,
            "{:<width$}  {}  {}",
            c.name,
            if c.pass { "pass" } else { "FAIL" },
            c.detail,
        )
        .ok();
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    writeln!(stdout, "{passed}/{} checks passed", checks.len()).ok();
    Ok(if passed == checks.len() { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
