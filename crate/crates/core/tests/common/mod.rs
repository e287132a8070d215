//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the FFT, sketch or selection code under test.

#![allow(dead_code)]

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use periodic_df::bloch::{solve_all, BlochOrbitalSet, SolverOptions};
use periodic_df::dfcore::{pivoted_qr_select, FittingResult};
use periodic_df::lattice::{build_grid, LatticeConfig};
use periodic_df::potential::{paper_potential, sample_potential, ExampleId};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Orbitals of one of the model setups on a small grid.
pub fn orbitals(id: ExampleId, n_per_dim: usize, k_per_dim: usize, n_bands: usize) -> BlochOrbitalSet {
    let lattice = LatticeConfig::new(id.dim(), n_per_dim, k_per_dim).unwrap();
    let grid = build_grid(&lattice).unwrap();
    let v = sample_potential(&paper_potential(id), &grid).unwrap();
    solve_all(&lattice, n_bands, &v, &SolverOptions::default()).unwrap()
}

/// Every pair density `conj(u_α) u_β` as a row, `α` major.
pub fn full_pair_matrix(set: &BlochOrbitalSet) -> Array2<Complex64> {
    let (nk, ng) = set.u.dim();
    Array2::from_shape_fn((nk * nk, ng), |(ab, x)| {
        set.u[[ab / nk, x]].conj() * set.u[[ab % nk, x]]
    })
}

fn grid_l2(v: impl Iterator<Item = Complex64>) -> f64 {
    v.map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max relative L² error over the rows of `rho` of `rho[:, sel] · P`.
pub fn max_row_error(rho: &Array2<Complex64>, selected: &[usize], interp: &Array2<Complex64>) -> f64 {
    let approx = rho.select(Axis(1), selected).dot(interp);
    rho.axis_iter(Axis(0))
        .zip(approx.axis_iter(Axis(0)))
        .filter_map(|(a, b)| {
            let den = grid_l2(a.iter().copied());
            (den > 0.0).then(|| grid_l2(a.iter().zip(b.iter()).map(|(x, y)| x - y)) / den)
        })
        .fold(0.0, f64::max)
}

/// Max pair error of the column selection run directly on the full pair matrix.
pub fn full_rho_max_error(set: &BlochOrbitalSet, tol: f64) -> (usize, f64) {
    let rho = full_pair_matrix(set);
    let sel = pivoted_qr_select(rho.view(), tol, None).unwrap();
    (sel.n_col(), max_row_error(&rho, &sel.selected, &sel.interp))
}

/// Max pair error of a fit obtained from the sketch.
pub fn fit_max_error(set: &BlochOrbitalSet, res: &FittingResult) -> f64 {
    max_row_error(&full_pair_matrix(set), &res.selected, &res.interp)
}

/// Signed integer frequency of FFT slot `i` on `n` points.
pub fn freq(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Grid points `x = i/n` in lexicographic order, last axis fastest.
pub fn points(dim: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n.pow(dim as u32))
        .map(|mut flat| {
            let mut x = vec![0.0; dim];
            for d in (0..dim).rev() {
                x[d] = (flat % n) as f64 / n as f64;
                flat /= n;
            }
            x
        })
        .collect()
}

/// `(1/N²) Σ_x Σ_y conj(f(x)) K(x-y) f(y)` with the shifted Coulomb kernel
/// `K(d) = Σ_{m≠0} e^{i(q - 2πm)·d} / (π|m|²)` summed over the grid frequencies.
pub fn eri_double_sum(f: &[Complex64], q: &[f64], dim: usize, n: usize) -> f64 {
    let pts = points(dim, n);
    let ng = pts.len();
    let modes: Vec<Vec<i64>> = (0..ng)
        .map(|mut flat| {
            let mut m = vec![0; dim];
            for d in (0..dim).rev() {
                m[d] = freq(flat % n, n);
                flat /= n;
            }
            m
        })
        .filter(|m| m.iter().any(|&c| c != 0))
        .collect();
    let kernel = |a: &[f64], b: &[f64]| -> Complex64 {
        let mut s = Complex64::default();
        for m in &modes {
            let m2: i64 = m.iter().map(|c| c * c).sum();
            let phase: f64 = (0..dim)
                .map(|d| (q[d] - 2.0 * PI * m[d] as f64) * (a[d] - b[d]))
                .sum();
            s += Complex64::from_polar(1.0 / (PI * m2 as f64), phase);
        }
        s
    };
    let mut total = Complex64::default();
    for (x, px) in pts.iter().enumerate() {
        for (y, py) in pts.iter().enumerate() {
            total += f[x].conj() * kernel(px, py) * f[y];
        }
    }
    total.re / (ng * ng) as f64
}
