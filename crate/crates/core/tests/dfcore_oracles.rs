mod common;

use std::f64::consts::PI;

use common::{c, fit_max_error, full_pair_matrix, full_rho_max_error, max_row_error, orbitals};
use ndarray::{Array2, Axis};
use ndarray_linalg::SVD;
use num_complex::Complex64;
use periodic_df::dfcore::{
    density_fit, fit_coefficients, io, pivoted_qr_select, random_fourier_compress, reconstruct_pair,
    FittingConfig,
};
use periodic_df::potential::ExampleId;
use periodic_df::rng;
use rand::Rng;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<Complex64> {
    let mut r = rng::stream(seed, 99);
    Array2::from_shape_fn((rows, cols), |_| c(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
}

#[test]
fn rank_five_product_matches_svd_rank() {
    let m = random_matrix(30, 5, 1).dot(&random_matrix(5, 60, 2));
    let (_, sv, _) = m.svd(false, false).unwrap();
    let rank = sv.iter().filter(|&&s| s > 1e-10 * sv[0]).count();
    assert_eq!(rank, 5, "singular values {sv:?}");

    let sel = pivoted_qr_select(m.view(), 1e-5, None).unwrap();
    assert_eq!(sel.n_col(), rank);
    let approx = m.select(Axis(1), &sel.selected).dot(&sel.interp);
    let fro = |a: &Array2<Complex64>| a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let rel = fro(&(&m - &approx)) / fro(&m);
    assert!(rel <= 1e-5, "relative error {rel:e}");
}

#[test]
fn truncation_error_tracks_singular_values() {
    // graded spectrum: the pivot diagonal decays with the singular values
    let (u, _, vt) = random_matrix(40, 40, 3).svd(true, true).unwrap();
    let (u, vt) = (u.unwrap(), vt.unwrap());
    let sigma: Vec<f64> = (0..40).map(|i| 10f64.powf(-0.25 * i as f64)).collect();
    let mut us = u.clone();
    for (j, s) in sigma.iter().enumerate() {
        us.column_mut(j).mapv_inplace(|z| z * *s);
    }
    let m = us.dot(&vt);
    let tol = 1e-4;
    let sel = pivoted_qr_select(m.view(), tol, None).unwrap();
    let k = sel.n_col();
    // R_kk is at most sigma_k and no selection of k columns beats the
    // best rank-k error sigma_{k+1}
    assert!(sel.diag_r[k - 1] <= sigma[k - 1] * (1.0 + 1e-10));
    let err = {
        let a = m.select(Axis(1), &sel.selected).dot(&sel.interp);
        let (_, sv, _) = (&m - &a).svd(false, false).unwrap();
        sv[0]
    };
    assert!(err >= sigma[k] * (1.0 - 1e-8));
    assert!(err <= 1e3 * tol * sigma[0], "interpolation error {err:e}");
}

#[test]
fn sketch_rows_are_bilinear_in_pair_densities() {
    let (nk, ng, r) = (6, 16, 3);
    let u = random_matrix(nk, ng, 4);
    let sk = random_fourier_compress(u.view(), r, 17).unwrap();
    assert_eq!(sk.m.dim(), (r * r, ng));
    for i in 0..r {
        for j in 0..r {
            for x in 0..ng {
                let mut want = Complex64::default();
                for a in 0..nk {
                    for b in 0..nk {
                        let ph = 2.0 * PI * (a * sk.xi[i]) as f64 / nk as f64
                            - 2.0 * PI * (b * sk.xi[j]) as f64 / nk as f64;
                        want += Complex64::from_polar(1.0, ph)
                            * sk.eta[a].conj()
                            * sk.eta[b]
                            * u[[a, x]].conj()
                            * u[[b, x]];
                    }
                }
                let got = sk.m[[i * r + j, x]];
                assert!((got - want).norm() < 1e-12 * (1.0 + want.norm()), "({i},{j}) x={x}");
            }
        }
        assert!(sk.eta.iter().all(|e| (e.norm() - 1.0).abs() < 1e-14));
    }
}

#[test]
fn sketch_fit_close_to_full_pair_selection() {
    let set = orbitals(ExampleId::Gauss2d, 12, 1, 4);
    let (_, oracle) = full_rho_max_error(&set, 1e-5);
    let res = density_fit(&set, &FittingConfig::default()).unwrap();
    let got = fit_max_error(&set, &res);
    assert!(got <= 3.0 * oracle.max(1e-16), "sketch {got:e} vs full {oracle:e}");
}

#[test]
fn interpolation_is_exact_at_selected_points() {
    let set = orbitals(ExampleId::Flattop2d, 12, 2, 3);
    let res = density_fit(&set, &FittingConfig::default()).unwrap();
    let ncol = res.n_col();
    let block = res.interp.select(Axis(1), &res.selected);
    for i in 0..ncol {
        for j in 0..ncol {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((block[[i, j]] - want).norm() < 1e-12);
        }
    }
    let coeff = fit_coefficients(&set, &res).unwrap();
    assert_eq!(coeff.dim(), (set.n_orbitals(), ncol));
    let nk = set.n_kpoints();
    for a in 0..set.n_bands * nk {
        for b in 0..set.n_bands * nk {
            let (n, k) = (a % set.n_bands, a / set.n_bands);
            let (m, l) = (b % set.n_bands, b / set.n_bands);
            let fit = reconstruct_pair(n, k, m, l, &set, &res).unwrap();
            let exact = set.pair_density(n, k, m, l).unwrap();
            let scale = exact.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for &x in &res.selected {
                assert!((fit[x] - exact[x]).norm() <= 1e-12 * scale.max(1.0));
            }
        }
    }
}

#[test]
fn diagonal_is_monotone_and_threshold_rule_holds() {
    let set = orbitals(ExampleId::Gauss2d, 12, 2, 3);
    for tol in [1e-2, 1e-3, 1e-5] {
        let res = density_fit(&set, &FittingConfig { tol, ..Default::default() }).unwrap();
        assert!(res.diag_r.windows(2).all(|w| w[1] <= w[0]));
        assert!(*res.diag_r.last().unwrap() >= tol * res.diag_r[0]);
        if let Some(next) = res.next_pivot {
            assert!(next < tol * res.diag_r[0]);
        }
        let mut sorted = res.selected.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), res.n_col());
    }
}

#[test]
fn looser_tolerance_selects_a_prefix() {
    let set = orbitals(ExampleId::Gauss2d, 12, 2, 3);
    // a fixed sketch gives one pivot sequence for both thresholds
    let fixed = FittingConfig { min_sketch_ratio: 0.0, ..Default::default() };
    let fine = density_fit(&set, &fixed).unwrap();
    let coarse = density_fit(&set, &FittingConfig { tol: 1e-3, ..fixed }).unwrap();
    assert!(coarse.n_col() <= fine.n_col());
    assert_eq!(coarse.selected[..], fine.selected[..coarse.n_col()]);
}

#[test]
fn undersized_sketch_is_redrawn() {
    let set = orbitals(ExampleId::Gauss2d, 12, 2, 3);
    let once = density_fit(&set, &FittingConfig { min_sketch_ratio: 0.0, ..Default::default() }).unwrap();
    assert_eq!((once.sketch_rows, once.sketch_rounds), (10, 1));
    // 10 rows leave fewer than two sketch rows per selected column
    assert!(100 < 2 * once.n_col());
    let grown = density_fit(&set, &FittingConfig::default()).unwrap();
    assert!(grown.sketch_rounds > 1);
    let nk = set.n_orbitals();
    assert!(grown.sketch_rows == nk || grown.sketch_rows.pow(2) >= 2 * grown.n_col());
    // at r = N·K the sketch is a unitary transform of the full pair matrix
    let (ncol, oracle) = full_rho_max_error(&set, 1e-5);
    assert_eq!(grown.sketch_rows, nk);
    assert!(fit_max_error(&set, &grown) <= 3.0 * oracle, "full-rho N_col {ncol}");
}

#[test]
fn reruns_are_bit_identical_and_seeds_matter() {
    let set = orbitals(ExampleId::Gauss2d, 12, 2, 3);
    let cfg = FittingConfig { seed: 5, ..Default::default() };
    let a = density_fit(&set, &cfg).unwrap();
    let b = density_fit(&set, &cfg).unwrap();
    assert_eq!(a.selected, b.selected);
    assert_eq!(a.interp, b.interp);
    assert_eq!(a.diag_r, b.diag_r);
    let (mut ja, mut jb) = (Vec::new(), Vec::new());
    io::write_fit(&a, &mut ja).unwrap();
    io::write_fit(&b, &mut jb).unwrap();
    assert_eq!(ja, jb);
    let back = io::read_fit(ja.as_slice()).unwrap();
    assert_eq!(back.interp, a.interp);

    let other = density_fit(&set, &FittingConfig { seed: 6, ..Default::default() }).unwrap();
    assert_ne!(other.diag_r, a.diag_r);
}

#[test]
fn sketch_size_grows_linearly_in_bands() {
    let cfg = FittingConfig::default();
    for n in [1usize, 4, 9, 16, 25, 36] {
        let r = cfg.sketch_rows(n, 1000);
        assert_eq!(r * r, 36 * n);
    }
    let set = orbitals(ExampleId::Gauss2d, 12, 2, 4);
    let u = set.u.view();
    let r = cfg.sketch_rows(4, set.n_orbitals());
    let sk = random_fourier_compress(u, r, 0).unwrap();
    assert_eq!(sk.m.nrows(), 144);
    assert!(random_fourier_compress(u, set.n_orbitals() + 1, 0).is_err());
}

#[test]
fn row_phases_leave_fixed_fit_errors_unchanged() {
    let set = orbitals(ExampleId::Gauss2d, 12, 2, 3);
    let res = density_fit(&set, &FittingConfig::default()).unwrap();
    let rho = full_pair_matrix(&set);
    let before = max_row_error(&rho, &res.selected, &res.interp);

    let mut phased = set.clone();
    for (a, mut row) in phased.u.axis_iter_mut(Axis(0)).enumerate() {
        let ph = Complex64::from_polar(1.0, 0.7 * a as f64 + 0.3);
        row.mapv_inplace(|z| z * ph);
    }
    let rho2 = full_pair_matrix(&phased);
    let after = max_row_error(&rho2, &res.selected, &res.interp);
    assert!((before - after).abs() <= 1e-12 * before.max(1e-300) + 1e-15);

    // phases on the rows act like a redraw of η, so a fresh fit stays as good
    let refit = density_fit(&phased, &FittingConfig::default()).unwrap();
    let err = max_row_error(&rho2, &refit.selected, &refit.interp);
    assert!(err <= 3.0 * before.max(1e-5), "{err:e} vs {before:e}");
}
