//! Separable density fitting of Bloch pair densities.
//!
//! All pair densities are approximated in one auxiliary basis `P_μ` attached
//! to selected grid points `x_μ`:
//!
//! ```text
//! conj(u_{n,k}(x)) u_{m,l}(x) ≈ Σ_μ conj(u_{n,k}(x_μ)) u_{m,l}(x_μ) P_μ(x)
//! ```
//!
//! The points are found by pivoted-QR column selection ([`qr`]) on a random
//! Fourier sketch of the orbitals ([`sketch`]) instead of on the full
//! `N²K² × N_grid` pair-density matrix.

pub mod io;
pub mod qr;
pub mod sketch;

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::BlochOrbitalSet;
use crate::error::{Error, Result};

pub use qr::{pivoted_qr_select, ColumnSelection};
pub use sketch::{random_fourier_compress, SketchMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FittingConfig {
    /// Relative truncation level on `|R_kk| / |R_11|`.
    pub tol: f64,
    /// Oversampling constant `c` in `r = round(c·√N)`.
    pub c_oversample: f64,
    pub seed: u64,
    /// Upper bound on `N_col`; `None` means `min(N_grid, 100·N)`.
    pub max_cols: Option<usize>,
    /// Required `r² / N_col`. Below it the sketch is redrawn with `r²`
    /// doubled, up to `r = N·K`. Zero disables the check.
    pub min_sketch_ratio: f64,
}

impl Default for FittingConfig {
    fn default() -> Self {
        FittingConfig {
            tol: 1e-5,
            c_oversample: 6.0,
            seed: 0,
            max_cols: None,
            min_sketch_ratio: 2.0,
        }
    }
}

impl FittingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("tol must lie in (0,1), got {}", self.tol)));
        }
        if !(self.c_oversample >= 1.0 && self.c_oversample.is_finite()) {
            return Err(Error::Config(format!(
                "c_oversample must be >= 1, got {}",
                self.c_oversample
            )));
        }
        if !(self.min_sketch_ratio >= 0.0 && self.min_sketch_ratio.is_finite()) {
            return Err(Error::Config(format!(
                "min_sketch_ratio must be >= 0, got {}",
                self.min_sketch_ratio
            )));
        }
        Ok(())
    }

    /// Number of kept Fourier rows for `n_bands` bands and `n_orbitals = N·K`
    /// rows: `round(c·√N)`, clamped to `1..=N·K`.
    pub fn sketch_rows(&self, n_bands: usize, n_orbitals: usize) -> usize {
        let r = (self.c_oversample * (n_bands as f64).sqrt()).round() as usize;
        r.clamp(1, n_orbitals.max(1))
    }

    pub fn column_cap(&self, n_bands: usize, n_grid: usize) -> usize {
        self.max_cols.unwrap_or_else(|| n_grid.min(100 * n_bands))
    }
}

/// Wall-clock seconds spent in the selection stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionTiming {
    pub compress_s: f64,
    pub qr_s: f64,
}

impl SelectionTiming {
    pub fn total_s(&self) -> f64 {
        self.compress_s + self.qr_s
    }
}

#[derive(Debug, Clone)]
pub struct FittingResult {
    /// Grid flat indices `x_μ`, in pivot order.
    pub selected: Vec<usize>,
    /// Auxiliary basis `P_μ(x)`, `N_col × N_grid`.
    pub interp: Array2<Complex64>,
    pub diag_r: Vec<f64>,
    pub next_pivot: Option<f64>,
    pub tol: f64,
    pub seed: u64,
    pub c_oversample: f64,
    /// Final `r`, after any redraws.
    pub sketch_rows: usize,
    /// Number of sketches drawn.
    pub sketch_rounds: usize,
    pub timing: SelectionTiming,
}

impl FittingResult {
    pub fn n_col(&self) -> usize {
        self.selected.len()
    }

    pub fn n_grid(&self) -> usize {
        self.interp.ncols()
    }

    fn from_selection(
        sel: ColumnSelection,
        cfg: &FittingConfig,
        r: usize,
        rounds: usize,
        timing: SelectionTiming,
    ) -> Self {
        FittingResult {
            selected: sel.selected,
            interp: sel.interp,
            diag_r: sel.diag_r,
            next_pivot: sel.next_pivot,
            tol: cfg.tol,
            seed: cfg.seed,
            c_oversample: cfg.c_oversample,
            sketch_rows: r,
            sketch_rounds: rounds,
            timing,
        }
    }
}

/// Random Fourier compression followed by column selection on an orbital
/// matrix with `n_bands` bands per k-point.
///
/// A sketch with fewer than `min_sketch_ratio · N_col` rows has too little
/// room to expose the numerical rank of the pair densities (the selection
/// then runs into the row count), so it is redrawn with `r` grown by `√2`.
/// Reported times cover every round.
pub fn density_fit_matrix(
    u: ArrayView2<Complex64>,
    n_bands: usize,
    cfg: &FittingConfig,
) -> Result<FittingResult> {
    cfg.validate()?;
    let (n_orb, n_grid) = u.dim();
    if n_bands == 0 || n_orb % n_bands != 0 {
        return Err(Error::Config(format!(
            "{n_orb} orbital rows are not a whole number of {n_bands}-band k-points"
        )));
    }
    let cap = cfg.column_cap(n_bands, n_grid);
    let mut r = cfg.sketch_rows(n_bands, n_orb);
    let mut timing = SelectionTiming::default();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let t0 = Instant::now();
        let sketch = random_fourier_compress(u, r, cfg.seed)?;
        let t1 = Instant::now();
        let sel = pivoted_qr_select(sketch.m.view(), cfg.tol, Some(cap))?;
        let t2 = Instant::now();
        timing.compress_s += (t1 - t0).as_secs_f64();
        timing.qr_s += (t2 - t1).as_secs_f64();
        if (r * r) as f64 >= cfg.min_sketch_ratio * sel.n_col() as f64 || r == n_orb {
            return Ok(FittingResult::from_selection(sel, cfg, r, rounds, timing));
        }
        r = ((r as f64 * std::f64::consts::SQRT_2).ceil() as usize).min(n_orb);
    }
}

pub fn density_fit(orbitals: &BlochOrbitalSet, cfg: &FittingConfig) -> Result<FittingResult> {
    density_fit_matrix(orbitals.u.view(), orbitals.n_bands, cfg)
}

fn check_fit(orbitals: &BlochOrbitalSet, result: &FittingResult) -> Result<()> {
    if result.n_grid() != orbitals.n_grid() {
        return Err(Error::Dimension {
            expected: orbitals.n_grid(),
            got: result.n_grid(),
        });
    }
    if let Some(&bad) = result.selected.iter().find(|&&x| x >= orbitals.n_grid()) {
        return Err(Error::Index(format!(
            "selected point {bad} outside a grid of {}",
            orbitals.n_grid()
        )));
    }
    Ok(())
}

/// `C[α][μ] = u_α(x_μ)`.
pub fn fit_coefficients(orbitals: &BlochOrbitalSet, result: &FittingResult) -> Result<Array2<Complex64>> {
    check_fit(orbitals, result)?;
    Ok(orbitals.u.select(ndarray::Axis(1), &result.selected))
}

/// `ρ̃_{nkml}(x) = Σ_μ conj(u_{n,k}(x_μ)) u_{m,l}(x_μ) P_μ(x)`.
pub fn reconstruct_pair(
    n: usize,
    kidx: usize,
    m: usize,
    lidx: usize,
    orbitals: &BlochOrbitalSet,
    result: &FittingResult,
) -> Result<Array1<Complex64>> {
    check_fit(orbitals, result)?;
    let a = orbitals.orbital(n, kidx)?;
    let b = orbitals.orbital(m, lidx)?;
    let coeff: Array1<Complex64> = result
        .selected
        .iter()
        .map(|&x| a[x].conj() * b[x])
        .collect();
    Ok(coeff.dot(&result.interp))
}

/// Relative size of `ρ̃_{nkml} - conj(ρ̃_{mlnk})` in the grid L² norm. It
/// vanishes when `P` is real; with complex orbitals it is only a diagnostic.
pub fn hermitian_asymmetry(
    n: usize,
    kidx: usize,
    m: usize,
    lidx: usize,
    orbitals: &BlochOrbitalSet,
    result: &FittingResult,
) -> Result<f64> {
    let a = reconstruct_pair(n, kidx, m, lidx, orbitals, result)?;
    let b = reconstruct_pair(m, lidx, n, kidx, orbitals, result)?;
    let diff: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y.conj()).norm_sqr()).sum();
    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    Ok(if scale > 0.0 { (diff / scale).sqrt() } else { diff.sqrt() })
}
