//! Column selection by column-pivoted Householder QR.
//!
//! The factorization is `M E = Q R` with greedy max-norm pivoting, stopped at
//! the first pivot with `|R_kk| < tol · |R_11|`. The interpolation matrix is
//! `P = R₁₁⁻¹ [R₁₁ R₁₂] E⁻¹`, obtained by back-substitution, so that
//! `M ≈ M[:, selected] · P` and `P[:, selected] = I`.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ColumnSelection {
    /// Selected column indices in pivot order.
    pub selected: Vec<usize>,
    /// Interpolation matrix, `selected.len() × ncols`.
    pub interp: Array2<Complex64>,
    /// `|R_kk|` of the accepted pivots, nonincreasing.
    pub diag_r: Vec<f64>,
    /// `|R_{N_col+1,N_col+1}|`, the first rejected pivot, when one exists.
    pub next_pivot: Option<f64>,
}

impl ColumnSelection {
    pub fn n_col(&self) -> usize {
        self.selected.len()
    }
}

#[inline]
fn sign_of(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / r
    }
}

#[inline]
fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.re * z.re + z.im * z.im).sum()
}

/// Applies `I - 2 v vᴴ / (vᴴv)` to `y` and returns `‖y[1..]‖²` afterwards.
#[inline]
fn reflect(v: &[Complex64], vnorm2: f64, y: &mut [Complex64]) -> f64 {
    let mut dot = Complex64::default();
    for (a, b) in v.iter().zip(y.iter()) {
        dot.re += a.re * b.re + a.im * b.im;
        dot.im += a.re * b.im - a.im * b.re;
    }
    let f = dot * (2.0 / vnorm2);
    let mut tail = 0.0;
    for (i, (a, b)) in v.iter().zip(y.iter_mut()).enumerate() {
        *b -= f * a;
        if i > 0 {
            tail += b.re * b.re + b.im * b.im;
        }
    }
    tail
}

pub fn pivoted_qr_select(
    m: ArrayView2<Complex64>,
    tol: f64,
    max_cols: Option<usize>,
) -> Result<ColumnSelection> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config(format!("tol must lie in (0,1), got {tol}")));
    }
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::Config("column selection on an empty matrix".into()));
    }

    // Column-major working copy; R overwrites its upper triangle.
    let mut work = vec![Complex64::default(); rows * cols];
    for j in 0..cols {
        for i in 0..rows {
            work[j * rows + i] = m[[i, j]];
        }
    }
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut norms: Vec<f64> = (0..cols)
        .map(|j| norm_sqr(&work[j * rows..(j + 1) * rows]).sqrt())
        .collect();

    let steps = rows.min(cols);
    let mut diag_r: Vec<f64> = Vec::new();
    let mut next_pivot = None;
    let mut v = vec![Complex64::default(); rows];

    for k in 0..steps {
        // Largest remaining column; ties go to the lowest original index.
        let mut p = k;
        for j in (k + 1)..cols {
            if norms[j] > norms[p] || (norms[j] == norms[p] && perm[j] < perm[p]) {
                p = j;
            }
        }
        if k == 0 && norms[p] == 0.0 {
            return Err(Error::DegenerateInput);
        }
        if k > 0 && norms[p] < tol * diag_r[0] {
            next_pivot = Some(norms[p]);
            break;
        }
        if let Some(cap) = max_cols {
            if k == cap {
                return Err(Error::CapExceeded {
                    cap,
                    achieved: norms[p] / diag_r[0],
                });
            }
        }

        if p != k {
            let (a, b) = work.split_at_mut(p * rows);
            a[k * rows..(k + 1) * rows].swap_with_slice(&mut b[..rows]);
            perm.swap(k, p);
            norms.swap(k, p);
        }

        let col = &mut work[k * rows + k..(k + 1) * rows];
        let xnorm = norm_sqr(col).sqrt();
        let beta = -sign_of(col[0]) * xnorm;
        let len = rows - k;
        v[..len].copy_from_slice(col);
        v[0] -= beta;
        let vnorm2 = norm_sqr(&v[..len]);
        col[0] = beta;
        col[1..].iter_mut().for_each(|z| *z = Complex64::default());
        diag_r.push(xnorm);

        if vnorm2 > 0.0 {
            for j in (k + 1)..cols {
                let y = &mut work[j * rows + k..(j + 1) * rows];
                norms[j] = reflect(&v[..len], vnorm2, y).sqrt();
            }
        } else {
            for j in (k + 1)..cols {
                norms[j] = norm_sqr(&work[j * rows + k + 1..(j + 1) * rows]).sqrt();
            }
        }
    }

    let n_col = diag_r.len();
    let mut interp = Array2::<Complex64>::zeros((n_col, cols));
    for i in 0..n_col {
        interp[[i, perm[i]]] = Complex64::new(1.0, 0.0);
    }
    let mut z = vec![Complex64::default(); n_col];
    for j in n_col..cols {
        z.copy_from_slice(&work[j * rows..j * rows + n_col]);
        for l in (0..n_col).rev() {
            let r_ll = work[l * rows + l];
            z[l] /= r_ll;
            let zl = z[l];
            let rcol = &work[l * rows..l * rows + l];
            for (zi, r) in z[..l].iter_mut().zip(rcol) {
                *zi -= r * zl;
            }
        }
        for (i, zi) in z.iter().enumerate() {
            interp[[i, perm[j]]] = *zi;
        }
    }

    Ok(ColumnSelection {
        selected: perm[..n_col].to_vec(),
        interp,
        diag_r,
        next_pivot,
    })
}
