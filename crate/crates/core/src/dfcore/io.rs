//! JSON container for [`FittingResult`].
//!
//! ```text
//! {
//!   "format": "periodic-df-fit", "version": 1,
//!   "header": { "n_grid", "n_col", "tol", "seed", "c_oversample", "sketch_rows", "sketch_rounds" },
//!   "selected": [x_μ ...],
//!   "p_re": [...], "p_im": [...],      // P row-major, N_col × N_grid
//!   "diag_r": [...], "next_pivot": f64 | null
//! }
//! ```
//!
//! Timings are not stored, so reruns with the same inputs write identical bytes.

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FittingResult, SelectionTiming};
use crate::error::{Error, Result};

pub const FORMAT: &str = "periodic-df-fit";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct FitHeader {
    pub n_grid: usize,
    pub n_col: usize,
    pub tol: f64,
    pub seed: u64,
    pub c_oversample: f64,
    pub sketch_rows: usize,
    pub sketch_rounds: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct FitFile {
    format: String,
    version: u32,
    header: FitHeader,
    selected: Vec<usize>,
    p_re: Vec<f64>,
    p_im: Vec<f64>,
    diag_r: Vec<f64>,
    next_pivot: Option<f64>,
}

pub fn write_fit<W: Write>(result: &FittingResult, w: W) -> Result<()> {
    let file = FitFile {
        format: FORMAT.into(),
        version: VERSION,
        header: FitHeader {
            n_grid: result.n_grid(),
            n_col: result.n_col(),
            tol: result.tol,
            seed: result.seed,
            c_oversample: result.c_oversample,
            sketch_rows: result.sketch_rows,
            sketch_rounds: result.sketch_rounds,
        },
        selected: result.selected.clone(),
        p_re: result.interp.iter().map(|z| z.re).collect(),
        p_im: result.interp.iter().map(|z| z.im).collect(),
        diag_r: result.diag_r.clone(),
        next_pivot: result.next_pivot,
    };
    serde_json::to_writer(w, &file)?;
    Ok(())
}

pub fn read_fit<R: Read>(r: R) -> Result<FittingResult> {
    let file: FitFile = serde_json::from_reader(r)?;
    if file.format != FORMAT || file.version != VERSION {
        return Err(Error::Config(format!(
            "unsupported fit container {} v{}",
            file.format, file.version
        )));
    }
    let h = &file.header;
    let len = h.n_col * h.n_grid;
    if file.selected.len() != h.n_col || file.p_re.len() != len || file.p_im.len() != len {
        return Err(Error::Config("fit container sizes disagree with its header".into()));
    }
    let data = file
        .p_re
        .iter()
        .zip(&file.p_im)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    let interp = Array2::from_shape_vec((h.n_col, h.n_grid), data).expect("length checked above");
    Ok(FittingResult {
        selected: file.selected,
        interp,
        diag_r: file.diag_r,
        next_pivot: file.next_pivot,
        tol: h.tol,
        seed: h.seed,
        c_oversample: h.c_oversample,
        sketch_rows: h.sketch_rows,
        sketch_rounds: h.sketch_rounds,
        timing: SelectionTiming::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_round_trip() {
        let res = FittingResult {
            selected: vec![2, 0],
            interp: Array2::from_shape_fn((2, 3), |(i, j)| Complex64::new(i as f64 + 0.1, -(j as f64) / 3.0)),
            diag_r: vec![1.0, 1e-3],
            next_pivot: Some(1e-7),
            tol: 1e-5,
            seed: 42,
            c_oversample: 6.0,
            sketch_rows: 4,
            sketch_rounds: 1,
            timing: SelectionTiming::default(),
        };
        let mut buf = Vec::new();
        write_fit(&res, &mut buf).unwrap();
        let back = read_fit(buf.as_slice()).unwrap();
        assert_eq!(back.selected, res.selected);
        assert_eq!(back.interp, res.interp);
        assert_eq!(back.diag_r, res.diag_r);
        assert_eq!(back.next_pivot, res.next_pivot);
        let mut again = Vec::new();
        write_fit(&back, &mut again).unwrap();
        assert_eq!(buf, again);

        let broken = String::from_utf8(buf).unwrap().replace("\"n_col\":2", "\"n_col\":3");
        assert!(read_fit(broken.as_bytes()).is_err());
    }
}
