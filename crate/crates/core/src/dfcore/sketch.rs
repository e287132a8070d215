//! Random Fourier compression of the orbital matrix.
//!
//! The rows of `U` (one per orbital `α`) are scaled by random unit phases
//! `η_α`, transformed by a length-`NK` DFT down every grid column,
//!
//! ```text
//! Û_ξ(x) = Σ_α exp(-2πi αξ / NK) η_α U_α(x),
//! ```
//!
//! and `r` rows `ξ_1..ξ_r` are kept. The sketch is the `r² × N_grid` matrix
//! `M_(i,j)(x) = conj(Û_ξi(x)) Û_ξj(x)`, a random bilinear mixing of the pair
//! density rows `conj(U_α) U_β`.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2, ShapeBuilder};
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone)]
pub struct SketchMatrix {
    /// Number of kept Fourier rows `r`.
    pub r: usize,
    /// `r² × N_grid`, row `(i, j)` at `i·r + j`, stored column-major.
    pub m: Array2<Complex64>,
    /// Kept frequencies `ξ_i` (0-based).
    pub xi: Vec<usize>,
    /// Row phases `η_α`.
    pub eta: Vec<Complex64>,
}

/// Unit phases `η_α = e^{iθ_α}` and `r` distinct rows `ξ`, drawn from
/// separate streams of `seed`.
pub fn draw_projection(nk: usize, r: usize, seed: u64) -> (Vec<Complex64>, Vec<usize>) {
    let mut phase_rng = rng::stream(seed, rng::STREAM_PHASES);
    let eta = (0..nk)
        .map(|_| Complex64::from_polar(1.0, 2.0 * PI * phase_rng.random::<f64>()))
        .collect();
    let mut row_rng = rng::stream(seed, rng::STREAM_ROWS);
    let xi = rand::seq::index::sample(&mut row_rng, nk, r).into_vec();
    (eta, xi)
}

pub fn random_fourier_compress(u: ArrayView2<Complex64>, r: usize, seed: u64) -> Result<SketchMatrix> {
    let (nk, ng) = u.dim();
    if nk == 0 || ng == 0 {
        return Err(Error::Config("empty orbital matrix".into()));
    }
    if r == 0 || r > nk {
        return Err(Error::Config(format!(
            "sketch rows r={r} must lie in 1..={nk} (number of orbitals)"
        )));
    }
    let (eta, xi) = draw_projection(nk, r, seed);
    let fft = FftPlanner::new().plan_fft_forward(nk);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::default(); nk];
    let mut kept = vec![Complex64::default(); r];
    let r2 = r * r;
    let mut data = vec![Complex64::default(); r2 * ng];

    for x in 0..ng {
        for (a, l) in line.iter_mut().enumerate() {
            *l = eta[a] * u[[a, x]];
        }
        fft.process_with_scratch(&mut line, &mut scratch);
        for (k, &f) in kept.iter_mut().zip(&xi) {
            *k = line[f];
        }
        let col = &mut data[x * r2..(x + 1) * r2];
        for i in 0..r {
            let ci = kept[i].conj();
            for j in 0..r {
                col[i * r + j] = ci * kept[j];
            }
        }
    }
    let m = Array2::from_shape_vec((r2, ng).f(), data).expect("sketch buffer has r² · N_grid entries");
    Ok(SketchMatrix { r, m, xi, eta })
}
