//! Band structures of periodically perforated planar domains.
//!
//! The Laplacian (plus a periodic potential) on a plane with a lattice of
//! holes, Dirichlet conditions on the hole boundaries, decomposes into a
//! family of cell problems indexed by quasimomentum. This crate builds the
//! cell problems on a uniform grid, solves for the low bands, and layers
//! analysis passes on top: gap detection, flat-band screening, parameter
//! sweeps along hole deformations, perturbation-theoretic probes of band
//! edges, and a certificate that rules out embedded flat pieces for
//! potentials below an explicit size threshold.

pub mod analysis;
pub mod cli;
pub mod discretize;
pub mod eig;
pub mod fourier;
pub mod geometry;
pub mod spectral;
pub mod svg;
