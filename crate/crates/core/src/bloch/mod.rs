//! Bloch eigenproblem for the periodic parts `u_{n,k}` in a plane-wave
//! (Fourier collocation) basis on the real-space grid.
//!
//! With `u = e^{-ik·x} ψ` the operator acting on `u` is
//! `H_k = ½|-i∇ + k|² + V`, diagonal in frequency for the kinetic part and
//! diagonal on the grid for the potential.
//!
//! Internally the solvers work on Fourier coefficients `c_m` with
//! `u(x) = Σ_m c_m e^{2πi m·x}`; the Euclidean norm of `c` equals the
//! grid-weighted norm `(1/N_grid) Σ_x |u(x)|²` of `u`.

pub mod lobpcg;

use std::f64::consts::PI;
use std::io::Write;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::GridFft;
use crate::lattice::{build_grid, kpoint_mesh, submesh_indices, BandPath, KPoint, LatticeConfig, RealGrid};
use crate::potential::SampledPotential;
use crate::rng;

/// Grid, frequencies and FFT plans shared by every k-point.
pub struct PlaneWaveBasis {
    pub lattice: LatticeConfig,
    pub grid: RealGrid,
    fft: GridFft,
}

impl PlaneWaveBasis {
    pub fn new(lattice: &LatticeConfig) -> Result<Self> {
        let grid = build_grid(lattice)?;
        Ok(PlaneWaveBasis {
            lattice: *lattice,
            fft: GridFft::new(lattice.dim, lattice.n_per_dim),
            grid,
        })
    }

    pub fn n_grid(&self) -> usize {
        self.grid.len()
    }

    pub fn fft(&self) -> &GridFft {
        &self.fft
    }

    /// `½‖2πm + k‖²` for every frequency slot.
    pub fn kinetic(&self, k: &KPoint) -> Vec<f64> {
        self.grid
            .freq
            .iter()
            .map(|m| {
                0.5 * m
                    .iter()
                    .zip(&k.coords)
                    .map(|(&mi, ki)| {
                        let q = 2.0 * PI * mi as f64 + ki;
                        q * q
                    })
                    .sum::<f64>()
            })
            .collect()
    }

    /// Grid values `u(x) = Σ_m c_m e^{2πi m·x}`.
    pub fn to_grid(&self, coeffs: ArrayView1<Complex64>) -> Vec<Complex64> {
        let mut buf = coeffs.to_vec();
        self.fft.inverse(&mut buf);
        buf
    }

    fn check_k(&self, k: &KPoint) -> Result<()> {
        if k.dim() != self.lattice.dim {
            return Err(Error::Dimension {
                expected: self.lattice.dim,
                got: k.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Lobpcg,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub method: SolverMethod,
    pub max_iter: usize,
    pub residual_tol: f64,
    /// Shift `τ` of the inverse-Laplacian preconditioner `(½‖2πm+k‖² + τ)⁻¹`.
    pub precond_shift: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: SolverMethod::Lobpcg,
            max_iter: 500,
            residual_tol: 1e-9,
            precond_shift: 1.0,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config("residual_tol must be > 0".into()));
        }
        if !(self.precond_shift > 0.0) {
            return Err(Error::Config("precond_shift must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// `H_k` on one k-point.
pub struct BlochHamiltonian<'a> {
    basis: &'a PlaneWaveBasis,
    kinetic: Vec<f64>,
    potential: &'a [f64],
}

impl<'a> BlochHamiltonian<'a> {
    pub fn new(basis: &'a PlaneWaveBasis, k: &KPoint, v: &'a SampledPotential) -> Result<Self> {
        basis.check_k(k)?;
        if v.len() != basis.n_grid() {
            return Err(Error::Dimension {
                expected: basis.n_grid(),
                got: v.len(),
            });
        }
        Ok(BlochHamiltonian {
            basis,
            kinetic: basis.kinetic(k),
            potential: &v.values,
        })
    }

    /// `H_k u` for grid values `u`.
    pub fn apply_grid(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.basis.n_grid();
        if u.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: u.len(),
            });
        }
        let fft = self.basis.fft();
        let mut buf = u.to_vec();
        fft.forward(&mut buf);
        let scale = 1.0 / n as f64;
        for (z, t) in buf.iter_mut().zip(&self.kinetic) {
            *z *= t * scale;
        }
        fft.inverse(&mut buf);
        for ((z, ui), vi) in buf.iter_mut().zip(u).zip(self.potential) {
            *z += ui * vi;
        }
        Ok(buf)
    }

    /// `H_k` on Fourier coefficient rows.
    fn apply_coeffs(&self, block: &Array2<Complex64>) -> Array2<Complex64> {
        let fft = self.basis.fft();
        let scale = 1.0 / self.basis.n_grid() as f64;
        let mut out = block.clone();
        let mut buf = vec![Complex64::default(); block.ncols()];
        for (row_in, mut row_out) in block.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
            for (b, c) in buf.iter_mut().zip(row_in.iter()) {
                *b = *c;
            }
            fft.inverse(&mut buf);
            for (b, v) in buf.iter_mut().zip(self.potential) {
                *b *= v * scale;
            }
            fft.forward(&mut buf);
            for ((o, b), t) in row_out.iter_mut().zip(&buf).zip(&self.kinetic) {
                *o = *o * t + b;
            }
        }
        out
    }

    /// Dense plane-wave matrix `H_{mm'} = kin_m δ_{mm'} + V̂(m - m')`.
    pub fn dense_matrix(&self) -> Array2<Complex64> {
        let basis = self.basis;
        let n = basis.n_grid();
        let npd = basis.lattice.n_per_dim;
        let dim = basis.lattice.dim;
        let mut vhat: Vec<Complex64> = self.potential.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        basis.fft().forward(&mut vhat);
        let scale = 1.0 / n as f64;
        let idx: Vec<Vec<usize>> = (0..n).map(|j| basis.grid.multi_index(j)).collect();
        let mut h = Array2::<Complex64>::zeros((n, n));
        let mut diff = vec![0usize; dim];
        for a in 0..n {
            for b in 0..n {
                for d in 0..dim {
                    diff[d] = (idx[a][d] + npd - idx[b][d]) % npd;
                }
                h[[a, b]] = vhat[crate::lattice::flat_index(&diff, npd)] * scale;
            }
            h[[a, a]] += self.kinetic[a];
        }
        h
    }
}

/// `H_k u` on grid values.
pub fn apply_hamiltonian(
    basis: &PlaneWaveBasis,
    k: &KPoint,
    u: &[Complex64],
    v: &SampledPotential,
) -> Result<Vec<Complex64>> {
    BlochHamiltonian::new(basis, k, v)?.apply_grid(u)
}

/// Lowest bands at one k-point.
#[derive(Debug, Clone)]
pub struct BandSolution {
    pub energies: Vec<f64>,
    /// Orbital grid values `u_n(x)`, one row per band, with
    /// `(1/N_grid) Σ_x |u_n(x)|² = 1`.
    pub orbitals: Array2<Complex64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn guard_block(n_bands: usize, n_grid: usize) -> usize {
    (n_bands + n_bands.min(10)).min(n_grid)
}

fn starting_block(kinetic: &[f64], nb: usize, seed: u64) -> Array2<Complex64> {
    let mut order: Vec<usize> = (0..kinetic.len()).collect();
    order.sort_by(|&a, &b| kinetic[a].total_cmp(&kinetic[b]).then(a.cmp(&b)));
    let mut r = rng::stream(seed, rng::STREAM_SOLVER);
    let mut x = Array2::<Complex64>::zeros((nb, kinetic.len()));
    for (i, mut row) in x.axis_iter_mut(Axis(0)).enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            let damp = 1e-2 / (1.0 + kinetic[j]);
            *z = Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5) * damp;
        }
        row[order[i]] += Complex64::new(1.0, 0.0);
    }
    x
}

/// Lowest `n_bands` eigenpairs of `H_k`.
pub fn solve_bands(
    basis: &PlaneWaveBasis,
    k: &KPoint,
    n_bands: usize,
    v: &SampledPotential,
    opts: &SolverOptions,
) -> Result<BandSolution> {
    opts.validate()?;
    let n = basis.n_grid();
    if n_bands == 0 || n_bands >= n {
        return Err(Error::Config(format!(
            "n_bands must be in 1..{n}, got {n_bands}"
        )));
    }
    let h = BlochHamiltonian::new(basis, k, v)?;

    let (energies, coeffs, residuals, iterations) = match opts.method {
        SolverMethod::Dense => {
            let (lam, vecs) = lobpcg::hermitian_eigh(&h.dense_matrix())?;
            let coeffs = vecs
                .slice(ndarray::s![.., ..n_bands])
                .t()
                .to_owned();
            (lam.slice(ndarray::s![..n_bands]).to_vec(), coeffs, vec![0.0; n_bands], 0)
        }
        SolverMethod::Lobpcg => {
            let nb = guard_block(n_bands, n);
            let x0 = starting_block(&h.kinetic, nb, opts.seed);
            let shift = opts.precond_shift;
            let precond_diag: Vec<f64> = h.kinetic.iter().map(|t| 1.0 / (t + shift)).collect();
            let out = lobpcg::lobpcg(
                |b| h.apply_coeffs(b),
                |w| {
                    for mut row in w.axis_iter_mut(Axis(0)) {
                        row.iter_mut().zip(&precond_diag).for_each(|(z, p)| *z *= *p);
                    }
                },
                x0,
                n_bands,
                opts.residual_tol,
                opts.max_iter,
            )?;
            (out.eigenvalues, out.vectors, out.residuals, out.iterations)
        }
    };

    let mut orbitals = Array2::<Complex64>::zeros((n_bands, n));
    for (c, mut row) in coeffs.axis_iter(Axis(0)).zip(orbitals.axis_iter_mut(Axis(0))) {
        row.assign(&Array1::from(basis.to_grid(c)));
    }
    Ok(BandSolution {
        energies,
        orbitals,
        residuals,
        iterations,
    })
}

/// Periodic orbital parts `u_{n,k}` for every k of a mesh, as the
/// `(N·K) × N_grid` matrix `U` with row `α = kidx·N + n` (band index fastest).
#[derive(Debug, Clone)]
pub struct BlochOrbitalSet {
    pub u: Array2<Complex64>,
    /// `energies[[n, kidx]]`.
    pub energies: Array2<f64>,
    pub lattice: LatticeConfig,
    pub kmesh: Vec<KPoint>,
    pub n_bands: usize,
}

impl BlochOrbitalSet {
    pub fn n_kpoints(&self) -> usize {
        self.kmesh.len()
    }

    pub fn n_grid(&self) -> usize {
        self.u.ncols()
    }

    pub fn n_orbitals(&self) -> usize {
        self.u.nrows()
    }

    pub fn row(&self, n: usize, kidx: usize) -> Result<usize> {
        if n >= self.n_bands || kidx >= self.n_kpoints() {
            return Err(Error::Index(format!(
                "orbital (n={n}, k={kidx}) outside {} bands x {} k-points",
                self.n_bands,
                self.n_kpoints()
            )));
        }
        Ok(kidx * self.n_bands + n)
    }

    pub fn orbital(&self, n: usize, kidx: usize) -> Result<ArrayView1<'_, Complex64>> {
        Ok(self.u.row(self.row(n, kidx)?))
    }

    /// Pair density `conj(u_{n,k}) u_{m,l}` on the grid.
    pub fn pair_density(&self, n: usize, kidx: usize, m: usize, lidx: usize) -> Result<Array1<Complex64>> {
        let a = self.orbital(n, kidx)?;
        let b = self.orbital(m, lidx)?;
        Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).collect())
    }

    /// The lowest `n_bands` bands on the sub-mesh with `k_per_dim` points per
    /// dimension. `k_per_dim` must divide the current mesh resolution.
    pub fn slice(&self, n_bands: usize, k_per_dim: usize) -> Result<BlochOrbitalSet> {
        if n_bands == 0 || n_bands > self.n_bands {
            return Err(Error::Config(format!(
                "cannot slice {n_bands} bands out of {}",
                self.n_bands
            )));
        }
        let kidx = submesh_indices(self.lattice.dim, self.lattice.k_per_dim, k_per_dim)?;
        let rows: Vec<usize> = kidx
            .iter()
            .flat_map(|&k| (0..n_bands).map(move |n| k * self.n_bands + n))
            .collect();
        let energies = Array2::from_shape_fn((n_bands, kidx.len()), |(n, j)| {
            self.energies[[n, kidx[j]]]
        });
        Ok(BlochOrbitalSet {
            u: self.u.select(Axis(0), &rows),
            energies,
            lattice: self.lattice.with_k_per_dim(k_per_dim),
            kmesh: kidx.iter().map(|&k| self.kmesh[k].clone()).collect(),
            n_bands,
        })
    }
}

/// Solves every k-point of the mesh of `cfg`. Per-k seeds are derived from
/// `opts.seed` and the k index, so the result does not depend on scheduling.
pub fn solve_all(
    cfg: &LatticeConfig,
    n_bands: usize,
    v: &SampledPotential,
    opts: &SolverOptions,
) -> Result<BlochOrbitalSet> {
    let basis = PlaneWaveBasis::new(cfg)?;
    let kmesh = kpoint_mesh(cfg)?;
    let solutions: Vec<BandSolution> = kmesh
        .par_iter()
        .enumerate()
        .map(|(kidx, k)| {
            let mut o = *opts;
            o.seed = rng::derive_seed(opts.seed, kidx as u64);
            solve_bands(&basis, k, n_bands, v, &o).map_err(|e| match e {
                Error::Convergence {
                    iterations,
                    residuals,
                    ..
                } => Error::Convergence {
                    kidx: Some(kidx),
                    iterations,
                    residuals,
                },
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    let n = basis.n_grid();
    let mut u = Array2::<Complex64>::zeros((n_bands * kmesh.len(), n));
    let mut energies = Array2::<f64>::zeros((n_bands, kmesh.len()));
    for (kidx, sol) in solutions.iter().enumerate() {
        u.slice_mut(ndarray::s![kidx * n_bands..(kidx + 1) * n_bands, ..])
            .assign(&sol.orbitals);
        for (nb, e) in sol.energies.iter().enumerate() {
            energies[[nb, kidx]] = *e;
        }
    }
    Ok(BlochOrbitalSet {
        u,
        energies,
        lattice: *cfg,
        kmesh,
        n_bands,
    })
}

#[derive(Debug, Clone)]
pub struct BandRow {
    pub segment: usize,
    pub arclength: f64,
    pub k: KPoint,
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BandTable {
    pub dim: usize,
    pub n_bands: usize,
    pub rows: Vec<BandRow>,
}

impl BandTable {
    /// CSV with columns `seg,arclen,k1..kd,E1..EN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["seg".to_string(), "arclen".to_string()];
        header.extend((1..=self.dim).map(|i| format!("k{i}")));
        header.extend((1..=self.n_bands).map(|i| format!("E{i}")));
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let mut fields = vec![row.segment.to_string(), format!("{}", row.arclength)];
            fields.extend(row.k.coords.iter().map(|c| format!("{c}")));
            fields.extend(row.energies.iter().map(|e| format!("{e}")));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

pub fn bands_along_path(
    basis: &PlaneWaveBasis,
    path: &BandPath,
    n_bands: usize,
    v: &SampledPotential,
    opts: &SolverOptions,
) -> Result<BandTable> {
    let rows = path
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut o = *opts;
            o.seed = rng::derive_seed(opts.seed, i as u64);
            let sol = solve_bands(basis, &p.k, n_bands, v, &o)?;
            Ok(BandRow {
                segment: p.segment,
                arclength: p.arclength,
                k: p.k.clone(),
                energies: sol.energies,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BandTable {
        dim: basis.lattice.dim,
        n_bands,
        rows,
    })
}
