//! Error metrics for fitted pair densities and electron repulsion integrals.
//!
//! The Coulomb metric uses the zero-mean periodic Green's function solving
//! `-ΔG = 4π(δ - 1)` on the unit torus, whose Fourier multiplier is
//! `ĝ(m) = 4π / ‖2πm‖² = 1 / (π‖m‖²)` with `ĝ(0) = 0`, in 2D and 3D alike.
//!
//! For a pair with crystal momenta `k, l` the ERI kernel carries the phase
//! `exp(-i(k-l)·(x-y))`; it is applied by modulating the density with
//! `exp(-i(k-l)·x)` before the grid transform ("shifted" Coulomb norm).

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bloch::BlochOrbitalSet;
use crate::dfcore::{reconstruct_pair, FittingResult};
use crate::error::{Error, Result};
use crate::fft::GridFft;
use crate::lattice::{build_grid, LatticeConfig, RealGrid};
use crate::rng;

/// `sqrt((1/N_grid) Σ_x |f(x)|²)`.
pub fn l2_norm(f: &[Complex64]) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    (f.iter().map(|z| z.norm_sqr()).sum::<f64>() / f.len() as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct GreenMultiplier {
    /// `ĝ` in FFT slot order.
    pub ghat: Vec<f64>,
}

impl GreenMultiplier {
    pub fn new(grid: &RealGrid) -> Self {
        let ghat = grid
            .freq
            .iter()
            .map(|m| {
                let m2: i64 = m.iter().map(|&c| c * c).sum();
                if m2 == 0 {
                    0.0
                } else {
                    1.0 / (PI * m2 as f64)
                }
            })
            .collect();
        GreenMultiplier { ghat }
    }
}

/// Coulomb-metric evaluator bound to one grid.
pub struct CoulombMetric {
    grid: RealGrid,
    fft: GridFft,
    green: GreenMultiplier,
}

impl CoulombMetric {
    pub fn new(lattice: &LatticeConfig) -> Result<Self> {
        let grid = build_grid(lattice)?;
        Ok(CoulombMetric {
            fft: GridFft::new(lattice.dim, lattice.n_per_dim),
            green: GreenMultiplier::new(&grid),
            grid,
        })
    }

    pub fn grid(&self) -> &RealGrid {
        &self.grid
    }

    pub fn ghat(&self) -> &[f64] {
        &self.green.ghat
    }

    fn check(&self, f: &[Complex64]) -> Result<()> {
        if f.len() != self.grid.len() {
            return Err(Error::Dimension {
                expected: self.grid.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    fn weighted_energy(&self, coeffs: &[Complex64]) -> f64 {
        let n2 = (self.grid.len() as f64).powi(2);
        coeffs
            .iter()
            .zip(&self.green.ghat)
            .map(|(c, g)| g * c.norm_sqr())
            .sum::<f64>()
            / n2
    }

    /// `sqrt(Σ_{m≠0} ĝ(m) |f̂(m)|²)` with `f̂(0)` the grid mean of `f`.
    pub fn coulomb_norm(&self, f: &[Complex64]) -> Result<f64> {
        self.check(f)?;
        let mut buf = f.to_vec();
        self.fft.forward(&mut buf);
        Ok(self.weighted_energy(&buf).sqrt())
    }

    /// Coulomb norm of `f` under the kernel `G(x-y) exp(-iq·(x-y))`.
    pub fn shifted_coulomb_norm(&self, f: &[Complex64], q: &[f64]) -> Result<f64> {
        Ok(self.shifted_energy(f, q)?.sqrt())
    }

    /// `Σ_m ĝ(m) |F(m)|²`, `F(m) = (1/N_grid) Σ_x f(x) e^{-iq·x} e^{2πi m·x}`.
    pub fn shifted_energy(&self, f: &[Complex64], q: &[f64]) -> Result<f64> {
        self.check(f)?;
        if q.len() != self.grid.dim {
            return Err(Error::Dimension {
                expected: self.grid.dim,
                got: q.len(),
            });
        }
        let mut buf: Vec<Complex64> = f
            .iter()
            .zip(&self.grid.points)
            .map(|(v, x)| {
                let phase: f64 = q.iter().zip(x).map(|(a, b)| a * b).sum();
                v * Complex64::from_polar(1.0, -phase)
            })
            .collect();
        self.fft.inverse(&mut buf);
        Ok(self.weighted_energy(&buf))
    }
}

/// Index quadruple `(n, k, m, l)` of the pair density `conj(u_{n,k}) u_{m,l}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadruple {
    pub n: usize,
    pub kidx: usize,
    pub m: usize,
    pub lidx: usize,
}

impl Quadruple {
    pub fn new(n: usize, kidx: usize, m: usize, lidx: usize) -> Self {
        Quadruple { n, kidx, m, lidx }
    }

    pub fn swapped(&self) -> Self {
        Quadruple::new(self.m, self.lidx, self.n, self.kidx)
    }

    pub fn momentum_transfer(&self, orbitals: &BlochOrbitalSet) -> Result<Vec<f64>> {
        let k = orbitals
            .kmesh
            .get(self.kidx)
            .ok_or_else(|| Error::Index(format!("k index {}", self.kidx)))?;
        let l = orbitals
            .kmesh
            .get(self.lidx)
            .ok_or_else(|| Error::Index(format!("k index {}", self.lidx)))?;
        Ok(k.coords.iter().zip(&l.coords).map(|(a, b)| a - b).collect())
    }

    fn pair(&self, orbitals: &BlochOrbitalSet) -> Result<Vec<Complex64>> {
        Ok(orbitals.pair_density(self.n, self.kidx, self.m, self.lidx)?.to_vec())
    }

    fn fitted_pair(&self, orbitals: &BlochOrbitalSet, result: &FittingResult) -> Result<Vec<Complex64>> {
        Ok(reconstruct_pair(self.n, self.kidx, self.m, self.lidx, orbitals, result)?.to_vec())
    }
}

/// `E_{nkml}` by grid quadrature of the phase-shifted Coulomb kernel.
pub fn eri(q: Quadruple, orbitals: &BlochOrbitalSet, metric: &CoulombMetric) -> Result<f64> {
    let rho = q.pair(orbitals)?;
    metric.shifted_energy(&rho, &q.momentum_transfer(orbitals)?)
}

/// `Ẽ_{nkml}`: the same integral on the separable fitted density.
pub fn eri_fitted(
    q: Quadruple,
    orbitals: &BlochOrbitalSet,
    result: &FittingResult,
    metric: &CoulombMetric,
) -> Result<f64> {
    let rho = q.fitted_pair(orbitals, result)?;
    metric.shifted_energy(&rho, &q.momentum_transfer(orbitals)?)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ErrorSample {
    pub quad: Quadruple,
    pub err_l2_rel: f64,
    pub err_coulomb_rel: f64,
    /// True when `‖ρ‖_C` vanished and the L² norm was used as the Coulomb denominator.
    pub coulomb_fallback: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub samples: Vec<ErrorSample>,
    pub l2_max: f64,
    pub l2_mean: f64,
    pub coulomb_max: f64,
    pub coulomb_mean: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub tol: f64,
}

#[derive(Serialize)]
struct ErrorSummary<'a> {
    sample_count: usize,
    seed: u64,
    tol: f64,
    l2_max: f64,
    l2_mean: f64,
    coulomb_max: f64,
    coulomb_mean: f64,
    coulomb_fallbacks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'a str>,
}

impl ErrorReport {
    fn from_samples(samples: Vec<ErrorSample>, seed: u64, tol: f64) -> Self {
        let count = samples.len().max(1) as f64;
        let fold = |f: fn(&ErrorSample) -> f64| {
            let max = samples.iter().map(f).fold(0.0_f64, f64::max);
            let mean = samples.iter().map(f).sum::<f64>() / count;
            (max, mean)
        };
        let (l2_max, l2_mean) = fold(|s| s.err_l2_rel);
        let (coulomb_max, coulomb_mean) = fold(|s| s.err_coulomb_rel);
        ErrorReport {
            sample_count: samples.len(),
            samples,
            l2_max,
            l2_mean,
            coulomb_max,
            coulomb_mean,
            seed,
            tol,
        }
    }

    /// CSV with columns `n,kidx,m,lidx,err_l2,err_coulomb`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,kidx,m,lidx,err_l2,err_coulomb")?;
        for s in &self.samples {
            writeln!(
                w,
                "{},{},{},{},{:e},{:e}",
                s.quad.n, s.quad.kidx, s.quad.m, s.quad.lidx, s.err_l2_rel, s.err_coulomb_rel
            )?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, w: W, label: Option<&str>) -> Result<()> {
        let summary = ErrorSummary {
            sample_count: self.sample_count,
            seed: self.seed,
            tol: self.tol,
            l2_max: self.l2_max,
            l2_mean: self.l2_mean,
            coulomb_max: self.coulomb_max,
            coulomb_mean: self.coulomb_mean,
            coulomb_fallbacks: self.samples.iter().filter(|s| s.coulomb_fallback).count(),
            label,
        };
        serde_json::to_writer_pretty(w, &summary)?;
        Ok(())
    }
}

/// Relative L² and Coulomb errors of one fitted pair density.
pub fn pair_errors(
    q: Quadruple,
    orbitals: &BlochOrbitalSet,
    result: &FittingResult,
    metric: &CoulombMetric,
) -> Result<Option<ErrorSample>> {
    let rho = q.pair(orbitals)?;
    let fit = q.fitted_pair(orbitals, result)?;
    let l2 = l2_norm(&rho);
    if l2 == 0.0 {
        return Ok(None);
    }
    let diff: Vec<Complex64> = rho.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let c = metric.coulomb_norm(&rho)?;
    let fallback = c <= 1e-14 * l2;
    let c_den = if fallback { l2 } else { c };
    Ok(Some(ErrorSample {
        quad: q,
        err_l2_rel: l2_norm(&diff) / l2,
        err_coulomb_rel: metric.coulomb_norm(&diff)? / c_den,
        coulomb_fallback: fallback,
    }))
}

fn draw_quadruple<R: Rng>(rng: &mut R, n_bands: usize, n_k: usize) -> Quadruple {
    Quadruple::new(
        rng.random_range(0..n_bands),
        rng.random_range(0..n_k),
        rng.random_range(0..n_bands),
        rng.random_range(0..n_k),
    )
}

/// Uniformly drawn quadruples (with replacement) and their relative errors.
pub fn sample_quadruples(orbitals: &BlochOrbitalSet, count: usize, seed: u64) -> Vec<Quadruple> {
    let mut r = rng::stream(seed, rng::STREAM_SAMPLES);
    (0..count)
        .map(|_| draw_quadruple(&mut r, orbitals.n_bands, orbitals.n_kpoints()))
        .collect()
}

pub fn sample_errors(
    orbitals: &BlochOrbitalSet,
    result: &FittingResult,
    metric: &CoulombMetric,
    sample_count: usize,
    seed: u64,
) -> Result<ErrorReport> {
    if sample_count == 0 {
        return Err(Error::Config("sample_count must be >= 1".into()));
    }
    let mut r = rng::stream(seed, rng::STREAM_SAMPLES);
    let mut samples = Vec::with_capacity(sample_count);
    let mut redraws = 0usize;
    while samples.len() < sample_count {
        let q = draw_quadruple(&mut r, orbitals.n_bands, orbitals.n_kpoints());
        match pair_errors(q, orbitals, result, metric)? {
            Some(s) => samples.push(s),
            None => {
                redraws += 1;
                if redraws > 100 * sample_count {
                    return Err(Error::Config("every sampled pair density vanishes".into()));
                }
            }
        }
    }
    Ok(ErrorReport::from_samples(samples, seed, result.tol))
}

/// Both sides of the ERI error bound for one quadruple.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EriBoundSample {
    pub quad: Quadruple,
    pub eri: f64,
    pub eri_fitted: f64,
    /// `‖ρ-ρ̃‖ (‖ρ‖ + ‖ρ̃‖)` with phase-shifted Coulomb norms.
    pub shifted_bound: f64,
    /// `|E - Ẽ| / (‖ρ-ρ̃‖_C (‖ρ‖_C + ‖ρ̃‖_C))` with unshifted norms; `None`
    /// when the unshifted right-hand side vanishes.
    pub unshifted_constant: Option<f64>,
}

impl EriBoundSample {
    pub fn abs_error(&self) -> f64 {
        (self.eri - self.eri_fitted).abs()
    }

    /// The shifted bound with `C = 1`, allowing for round-off in both sides.
    pub fn shifted_bound_holds(&self) -> bool {
        let slack = 1e-12 * (self.eri.abs() + self.eri_fitted.abs());
        self.abs_error() <= self.shifted_bound + slack
    }
}

pub fn eri_bound_check(
    q: Quadruple,
    orbitals: &BlochOrbitalSet,
    result: &FittingResult,
    metric: &CoulombMetric,
) -> Result<EriBoundSample> {
    let shift = q.momentum_transfer(orbitals)?;
    let rho = q.pair(orbitals)?;
    let fit = q.fitted_pair(orbitals, result)?;
    let diff: Vec<Complex64> = rho.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let e = metric.shifted_energy(&rho, &shift)?;
    let e_fit = metric.shifted_energy(&fit, &shift)?;
    let shifted_bound = metric.shifted_coulomb_norm(&diff, &shift)?
        * (e.sqrt() + e_fit.sqrt());
    let unshifted = metric.coulomb_norm(&diff)?
        * (metric.coulomb_norm(&rho)? + metric.coulomb_norm(&fit)?);
    Ok(EriBoundSample {
        quad: q,
        eri: e,
        eri_fitted: e_fit,
        shifted_bound,
        unshifted_constant: (unshifted > 0.0).then(|| (e - e_fit).abs() / unshifted),
    })
}
