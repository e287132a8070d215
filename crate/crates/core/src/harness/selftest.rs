//! Quick built-in checks for a fresh build: analytic free bands, column
//! selection on an identity, the Coulomb norm of `cos(2πx₁)`, and a small
//! end-to-end fit.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::bloch::{solve_all, solve_bands, PlaneWaveBasis, SolverOptions};
use crate::dfcore::{density_fit, pivoted_qr_select, FittingConfig};
use crate::error::Result;
use crate::lattice::{build_grid, KPoint, LatticeConfig};
use crate::metrics::{sample_errors, CoulombMetric};
use crate::potential::{paper_potential, sample_potential, ExampleId, SampledPotential};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    match f() {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn free_bands() -> Result<(bool, String)> {
    let lattice = LatticeConfig::new(2, 12, 1)?;
    let basis = PlaneWaveBasis::new(&lattice)?;
    let k = KPoint::new(vec![0.3, -1.1]);
    let sol = solve_bands(&basis, &k, 5, &SampledPotential::zero(basis.n_grid()), &SolverOptions::default())?;
    let mut exact: Vec<f64> = basis.kinetic(&k);
    exact.sort_by(f64::total_cmp);
    let err = sol
        .energies
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((err < 1e-8, format!("max |E - E_exact| = {err:.2e}")))
}

fn identity_selection() -> Result<(bool, String)> {
    let n = 6;
    let m = Array2::from_shape_fn((n, n), |(i, j)| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
    let sel = pivoted_qr_select(m.view(), 1e-5, None)?;
    let ok = sel.selected == (0..n).collect::<Vec<_>>() && sel.interp == m;
    Ok((ok, format!("selected {:?}", sel.selected)))
}

fn coulomb_cosine() -> Result<(bool, String)> {
    let lattice = LatticeConfig::new(2, 16, 1)?;
    let metric = CoulombMetric::new(&lattice)?;
    let f: Vec<Complex64> = metric
        .grid()
        .points
        .iter()
        .map(|x| Complex64::new((2.0 * PI * x[0]).cos(), 0.0))
        .collect();
    let got = metric.coulomb_norm(&f)?;
    let want = (1.0 / (2.0 * PI)).sqrt();
    Ok(((got - want).abs() < 1e-10, format!("{got:.12} vs {want:.12}")))
}

fn small_pipeline() -> Result<(bool, String)> {
    let lattice = LatticeConfig::new(2, 12, 2)?;
    let v = sample_potential(&paper_potential(ExampleId::Gauss2d), &build_grid(&lattice)?)?;
    let set = solve_all(&lattice, 3, &v, &SolverOptions::default())?;
    let res = density_fit(&set, &FittingConfig::default())?;
    let metric = CoulombMetric::new(&lattice)?;
    let rep = sample_errors(&set, &res, &metric, 50, 0)?;
    let ok = rep.l2_max <= 1e-3 && rep.coulomb_max <= 1e-3;
    Ok((
        ok,
        format!(
            "N_col={} max L2 {:.2e} max Coulomb {:.2e}",
            res.n_col(),
            rep.l2_max,
            rep.coulomb_max
        ),
    ))
}

pub fn run_selftest() -> Vec<CheckOutcome> {
    vec![
        check("free_bands", free_bands),
        check("identity_selection", identity_selection),
        check("coulomb_cosine", coulomb_cosine),
        check("small_pipeline", small_pipeline),
    ]
}
