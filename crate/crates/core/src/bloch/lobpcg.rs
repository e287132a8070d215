//! Block LOBPCG for the lowest eigenpairs of a Hermitian operator.
//!
//! Vectors are stored as rows. Every Rayleigh–Ritz step works on an
//! explicitly orthonormalized basis `[X; W; P]`, so the projected problem is
//! a standard Hermitian eigenproblem.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative eigenvalue floor of the Gram matrix below which a direction is dropped.
const GRAM_DROP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LobpcgOutcome {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as rows, orthonormal in the Euclidean inner product.
    pub vectors: Array2<Complex64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Eigenpairs of a Hermitian matrix, ascending, eigenvectors as columns.
///
/// LAPACK is handed a column-major copy: for row-major complex input the
/// binding returns conjugated eigenvectors.
pub(crate) fn hermitian_eigh(a: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let mut af = Array2::zeros(a.dim().f());
    af.assign(a);
    Ok(af.eigh(UPLO::Upper)?)
}

/// `<rows of a, rows of b>` Gram matrix: `G_ij = Σ conj(a_i) b_j`.
pub(crate) fn gram(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    a.mapv(|z| z.conj()).dot(&b.t())
}

fn hermitize(a: &mut Array2<Complex64>) {
    let n = a.nrows();
    for i in 0..n {
        a[[i, i]].im = 0.0;
        for j in (i + 1)..n {
            let avg = 0.5 * (a[[i, j]] + a[[j, i]].conj());
            a[[i, j]] = avg;
            a[[j, i]] = avg.conj();
        }
    }
}

/// Removes the components of the rows of `v` along the (orthonormal) rows of
/// each basis in `against`, then orthonormalizes what remains. Rank-deficient
/// directions are dropped, so the result may have fewer rows.
pub(crate) fn orthonormalize(
    mut v: Array2<Complex64>,
    against: &[&Array2<Complex64>],
) -> Result<Array2<Complex64>> {
    for _ in 0..2 {
        for b in against {
            if b.nrows() == 0 || v.nrows() == 0 {
                continue;
            }
            let coeff = v.dot(&b.mapv(|z| z.conj()).t());
            v = v - coeff.dot(*b);
        }
        if v.nrows() == 0 {
            return Ok(v);
        }
        let mut g = gram(&v, &v);
        hermitize(&mut g);
        let (lam, vecs) = hermitian_eigh(&g)?;
        let lmax = lam.iter().cloned().fold(0.0_f64, f64::max);
        if lmax <= f64::MIN_POSITIVE {
            return Ok(Array2::zeros((0, v.ncols())));
        }
        let keep: Vec<usize> = (0..lam.len())
            .filter(|&i| lam[i] > GRAM_DROP * lmax)
            .collect();
        let mut a = Array2::<Complex64>::zeros((v.nrows(), keep.len()));
        for (c, &i) in keep.iter().enumerate() {
            let scale = 1.0 / lam[i].sqrt();
            for r in 0..v.nrows() {
                a[[r, c]] = vecs[[r, i]] * scale;
            }
        }
        v = a.t().dot(&v);
    }
    Ok(v)
}

fn stack(blocks: &[&Array2<Complex64>]) -> Array2<Complex64> {
    let views: Vec<ArrayView2<Complex64>> = blocks
        .iter()
        .filter(|b| b.nrows() > 0)
        .map(|b| b.view())
        .collect();
    ndarray::concatenate(Axis(0), &views).expect("blocks share a row length")
}

fn rayleigh_ritz(
    basis: &Array2<Complex64>,
    h_basis: &Array2<Complex64>,
) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let mut a = gram(basis, h_basis);
    hermitize(&mut a);
    hermitian_eigh(&a)
}

/// Lowest `nev` eigenpairs of the Hermitian operator `apply`, starting from
/// the block `x0` (rows, block size ≥ nev). `precond` is applied in place to
/// residual blocks.
pub fn lobpcg<A, T>(
    apply: A,
    precond: T,
    x0: Array2<Complex64>,
    nev: usize,
    tol: f64,
    max_iter: usize,
) -> Result<LobpcgOutcome>
where
    A: Fn(&Array2<Complex64>) -> Array2<Complex64>,
    T: Fn(&mut Array2<Complex64>),
{
    let nb = x0.nrows();
    assert!(nev <= nb, "block smaller than requested eigenpairs");

    let mut x = orthonormalize(x0, &[])?;
    if x.nrows() < nb {
        return Err(Error::Linalg("starting block is rank deficient".into()));
    }
    let hx0 = apply(&x);
    let (lam0, c0) = rayleigh_ritz(&x, &hx0)?;
    x = c0.t().dot(&x);
    let mut lambda = lam0.to_vec();
    let mut p: Array2<Complex64> = Array2::zeros((0, x.ncols()));
    let mut residuals = vec![f64::INFINITY; nb];

    for it in 0..max_iter {
        let hx = apply(&x);
        let mut r = hx.clone();
        for (i, mut row) in r.axis_iter_mut(Axis(0)).enumerate() {
            let xi = x.row(i);
            row.zip_mut_with(&xi, |ri, &xv| *ri -= xv * lambda[i]);
        }
        residuals = r
            .axis_iter(Axis(0))
            .map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        if residuals[..nev].iter().all(|&res| res <= tol) {
            return Ok(LobpcgOutcome {
                eigenvalues: lambda[..nev].to_vec(),
                vectors: x.slice(s![..nev, ..]).to_owned(),
                residuals: residuals[..nev].to_vec(),
                iterations: it,
            });
        }

        let active: Vec<usize> = (0..nb).filter(|&i| residuals[i] > tol).collect();
        let mut w = r.select(Axis(0), &active);
        precond(&mut w);
        let w = orthonormalize(w, &[&x])?;
        let pp = if p.nrows() > 0 {
            orthonormalize(p, &[&x, &w])?
        } else {
            p
        };

        let basis = stack(&[&x, &w, &pp]);
        let h_basis = stack(&[&hx, &apply(&w), &apply(&pp)]);
        let (lam, c) = rayleigh_ritz(&basis, &h_basis)?;
        let c_low = c.slice(s![.., ..nb]);
        let x_new = c_low.t().dot(&basis);
        p = c_low
            .slice(s![nb.., ..])
            .t()
            .dot(&basis.slice(s![nb.., ..]));
        x = x_new;
        lambda = lam.slice(s![..nb]).to_vec();
    }

    Err(Error::Convergence {
        kidx: None,
        iterations: max_iter,
        residuals: residuals[..nev].to_vec(),
    })
}
