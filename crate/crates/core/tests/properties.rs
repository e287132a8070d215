mod common;

use std::f64::consts::PI;

use common::c;
use ndarray::Array2;
use num_complex::Complex64;
use periodic_df::bloch::{apply_hamiltonian, PlaneWaveBasis};
use periodic_df::dfcore::{pivoted_qr_select, random_fourier_compress};
use periodic_df::lattice::{build_grid, kpoint_mesh, KPoint, LatticeConfig};
use periodic_df::metrics::{l2_norm, CoulombMetric};
use periodic_df::potential::{paper_potential, sample_potential, ExampleId};
use proptest::prelude::*;

fn cvec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b)), len)
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() / a.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mesh_points_lie_in_the_zone(dim in 2usize..=3, k in 1usize..=6) {
        let cfg = LatticeConfig::new(dim, 4, k).unwrap();
        let mesh = kpoint_mesh(&cfg).unwrap();
        prop_assert_eq!(mesh.len(), k.pow(dim as u32));
        for p in mesh {
            prop_assert!(p.coords.iter().all(|&x| (-PI..PI).contains(&x)));
        }
    }

    #[test]
    fn grid_indexing_is_a_bijection(dim in 2usize..=3, half in 2usize..=5) {
        let cfg = LatticeConfig::new(dim, 2 * half, 1).unwrap();
        let grid = build_grid(&cfg).unwrap();
        for flat in 0..grid.len() {
            prop_assert_eq!(grid.flat_index(&grid.multi_index(flat)), flat);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian(
        u in cvec(64),
        w in cvec(64),
        k1 in -PI..PI,
        k2 in -PI..PI,
    ) {
        let lattice = LatticeConfig::new(2, 8, 1).unwrap();
        let basis = PlaneWaveBasis::new(&lattice).unwrap();
        let v = sample_potential(&paper_potential(ExampleId::Flattop2d), &basis.grid).unwrap();
        let k = KPoint::new(vec![k1, k2]);
        let hu = apply_hamiltonian(&basis, &k, &u, &v).unwrap();
        let hw = apply_hamiltonian(&basis, &k, &w, &v).unwrap();
        let lhs = inner(&w, &hu);
        let rhs = inner(&u, &hw).conj();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));

        // linearity
        let s = c(0.3, -1.2);
        let mix: Vec<Complex64> = u.iter().zip(&w).map(|(a, b)| a + s * b).collect();
        let hmix = apply_hamiltonian(&basis, &k, &mix, &v).unwrap();
        for i in 0..64 {
            prop_assert!((hmix[i] - (hu[i] + s * hw[i])).norm() <= 1e-9 * (1.0 + hmix[i].norm()));
        }
    }

    #[test]
    fn norms_are_absolutely_homogeneous(f in cvec(64), re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let metric = CoulombMetric::new(&LatticeConfig::new(2, 8, 1).unwrap()).unwrap();
        let s = c(re, im);
        let sf: Vec<Complex64> = f.iter().map(|z| s * z).collect();
        let l2 = l2_norm(&f);
        prop_assert!((l2_norm(&sf) - s.norm() * l2).abs() <= 1e-12 * (1.0 + s.norm() * l2));
        let cn = metric.coulomb_norm(&f).unwrap();
        prop_assert!((metric.coulomb_norm(&sf).unwrap() - s.norm() * cn).abs() <= 1e-12 * (1.0 + s.norm() * cn));
        let q = [0.4, -1.3];
        let sh = metric.shifted_coulomb_norm(&f, &q).unwrap();
        prop_assert!((metric.shifted_coulomb_norm(&sf, &q).unwrap() - s.norm() * sh).abs() <= 1e-12 * (1.0 + s.norm() * sh));
    }

    #[test]
    fn coulomb_norm_vanishes_only_on_constants(f in cvec(64), z in cvec(1)) {
        let metric = CoulombMetric::new(&LatticeConfig::new(2, 8, 1).unwrap()).unwrap();
        let constant = vec![z[0]; 64];
        prop_assert!(metric.coulomb_norm(&constant).unwrap() <= 1e-12);
        let mean = f.iter().sum::<Complex64>() / 64.0;
        let centered: Vec<Complex64> = f.iter().map(|x| x - mean).collect();
        if l2_norm(&centered) > 1e-6 {
            prop_assert!(metric.coulomb_norm(&f).unwrap() > 1e-12);
        }
    }

    #[test]
    fn column_selection_properties(
        rank in 1usize..6,
        rows in 6usize..14,
        cols in 8usize..24,
        seed in any::<u64>(),
        tol_exp in 2i32..8,
    ) {
        let mut r = periodic_df::rng::stream(seed, 0);
        use rand::Rng;
        let mut rand_mat = |m: usize, n: usize| {
            Array2::from_shape_fn((m, n), |_| c(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
        };
        let m = rand_mat(rows, rank).dot(&rand_mat(rank, cols));
        let tol = 10f64.powi(-tol_exp);
        let sel = pivoted_qr_select(m.view(), tol, None).unwrap();
        let k = sel.n_col();
        prop_assert!(k >= 1 && k <= rank);
        let mut uniq = sel.selected.clone();
        uniq.sort_unstable();
        uniq.dedup();
        prop_assert_eq!(uniq.len(), k);
        prop_assert!(sel.diag_r.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(sel.diag_r[k - 1] >= tol * sel.diag_r[0]);
        if let Some(next) = sel.next_pivot {
            prop_assert!(next < tol * sel.diag_r[0]);
        }
        for (i, &s) in sel.selected.iter().enumerate() {
            for j in 0..k {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((sel.interp[[j, s]] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sketch_diagonal_rows_are_moduli(u in cvec(5 * 16), seed in any::<u64>(), r in 1usize..=5) {
        let u = Array2::from_shape_vec((5, 16), u).unwrap();
        let sk = random_fourier_compress(u.view(), r, seed).unwrap();
        for i in 0..r {
            for x in 0..16 {
                let z = sk.m[[i * r + i, x]];
                prop_assert!(z.im.abs() <= 1e-15 * (1.0 + z.re.abs()));
                prop_assert!(z.re >= 0.0);
            }
        }
    }
}
