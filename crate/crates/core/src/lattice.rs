//! Unit cell, real-space grids, k-point meshes and band paths for the
//! simple square (2D) and simple cubic (3D) lattice with unit spacing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub dim: usize,
    /// Real-space grid points per dimension.
    pub n_per_dim: usize,
    /// k samples per dimension.
    pub k_per_dim: usize,
}

impl LatticeConfig {
    pub fn new(dim: usize, n_per_dim: usize, k_per_dim: usize) -> Result<Self> {
        let cfg = LatticeConfig {
            dim,
            n_per_dim,
            k_per_dim,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Config(format!(
                "dim must be 2 or 3, got {}",
                self.dim
            )));
        }
        if self.n_per_dim < 4 || self.n_per_dim % 2 != 0 {
            return Err(Error::Config(format!(
                "n_per_dim must be even and >= 4, got {}",
                self.n_per_dim
            )));
        }
        if self.k_per_dim < 1 {
            return Err(Error::Config("k_per_dim must be >= 1".into()));
        }
        Ok(())
    }

    /// Total number of real-space grid points, `n_per_dim^dim`.
    pub fn n_grid(&self) -> usize {
        self.n_per_dim.pow(self.dim as u32)
    }

    /// Total number of k-points, `k_per_dim^dim`.
    pub fn n_kpoints(&self) -> usize {
        self.k_per_dim.pow(self.dim as u32)
    }

    pub fn with_k_per_dim(&self, k_per_dim: usize) -> Self {
        LatticeConfig { k_per_dim, ..*self }
    }
}

/// Signed Fourier frequency of FFT output slot `i` on an axis of length `n`,
/// in `[-n/2, n/2)`.
pub fn fft_frequency(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Uniform grid on `[0,1)^d`, lexicographic with the last axis fastest.
#[derive(Debug, Clone)]
pub struct RealGrid {
    pub dim: usize,
    pub n_per_dim: usize,
    /// `points[j]` is the j-th multi-index divided by `n_per_dim`.
    pub points: Vec<Vec<f64>>,
    /// Fourier frequency attached to flat index `j` of a transformed array.
    pub freq: Vec<Vec<i64>>,
}

impl RealGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        multi_index(flat, self.dim, self.n_per_dim)
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        flat_index(idx, self.n_per_dim)
    }
}

pub fn multi_index(mut flat: usize, dim: usize, n: usize) -> Vec<usize> {
    let mut idx = vec![0; dim];
    for slot in idx.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
    idx
}

pub fn flat_index(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

pub fn build_grid(cfg: &LatticeConfig) -> Result<RealGrid> {
    cfg.validate()?;
    let n = cfg.n_per_dim;
    let total = cfg.n_grid();
    let mut points = Vec::with_capacity(total);
    let mut freq = Vec::with_capacity(total);
    for j in 0..total {
        let idx = multi_index(j, cfg.dim, n);
        points.push(idx.iter().map(|&i| i as f64 / n as f64).collect());
        freq.push(idx.iter().map(|&i| fft_frequency(i, n)).collect());
    }
    Ok(RealGrid {
        dim: cfg.dim,
        n_per_dim: n,
        points,
        freq,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KPoint {
    pub coords: Vec<f64>,
}

impl KPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        KPoint { coords }
    }

    pub fn gamma(dim: usize) -> Self {
        KPoint {
            coords: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Uniform mesh `k_j = -π + 2π j / k_per_dim` per axis, lexicographic order.
pub fn kpoint_mesh(cfg: &LatticeConfig) -> Result<Vec<KPoint>> {
    cfg.validate()?;
    let nk = cfg.k_per_dim;
    let axis: Vec<f64> = (0..nk)
        .map(|j| -PI + 2.0 * PI * j as f64 / nk as f64)
        .collect();
    Ok((0..cfg.n_kpoints())
        .map(|flat| {
            let idx = multi_index(flat, cfg.dim, nk);
            KPoint::new(idx.iter().map(|&j| axis[j]).collect())
        })
        .collect())
}

/// Flat mesh indices of the sub-mesh with `coarse` points per dimension
/// inside a mesh with `fine` points per dimension (every `fine/coarse`-th point).
pub fn submesh_indices(dim: usize, fine: usize, coarse: usize) -> Result<Vec<usize>> {
    if coarse == 0 || fine % coarse != 0 {
        return Err(Error::Config(format!(
            "k_per_dim {coarse} does not divide the finest mesh {fine}"
        )));
    }
    let stride = fine / coarse;
    Ok((0..coarse.pow(dim as u32))
        .map(|flat| {
            let idx: Vec<usize> = multi_index(flat, dim, coarse)
                .into_iter()
                .map(|j| j * stride)
                .collect();
            flat_index(&idx, fine)
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct PathSegment {
    pub label: String,
    /// True when the segment starts after a discontinuity (`|`) in the path.
    pub after_break: bool,
}

#[derive(Debug, Clone)]
pub struct PathPoint {
    pub segment: usize,
    pub arclength: f64,
    pub k: KPoint,
}

#[derive(Debug, Clone)]
pub struct BandPath {
    pub segments: Vec<PathSegment>,
    pub points: Vec<PathPoint>,
}

fn vertex(name: char, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    let filled = match name {
        'G' => 0,
        'X' => 1,
        'M' => 2,
        'R' => 3,
        _ => unreachable!("unknown vertex {name}"),
    };
    for c in v.iter_mut().take(filled) {
        *c = PI;
    }
    v
}

fn vertex_label(name: char) -> &'static str {
    match name {
        'G' => "Γ",
        'X' => "X",
        'M' => "M",
        _ => "R",
    }
}

/// Standard high-symmetry paths: Γ-X-M-Γ (square) and Γ-X-M-Γ-R-X|M-R (cubic).
/// Each segment carries `pts_per_segment` samples including both ends; the
/// shared vertex of consecutive segments appears once.
pub fn band_path(dim: usize, pts_per_segment: usize) -> Result<BandPath> {
    if pts_per_segment < 2 {
        return Err(Error::Config("pts_per_segment must be >= 2".into()));
    }
    // (from, to, starts after a break)
    let legs: Vec<(char, char, bool)> = match dim {
        2 => vec![('G', 'X', false), ('X', 'M', false), ('M', 'G', false)],
        3 => vec![
            ('G', 'X', false),
            ('X', 'M', false),
            ('M', 'G', false),
            ('G', 'R', false),
            ('R', 'X', false),
            ('M', 'R', true),
        ],
        _ => {
            return Err(Error::Config(format!(
                "band paths exist for dim 2 or 3, got {dim}"
            )))
        }
    };

    let mut segments = Vec::with_capacity(legs.len());
    let mut points: Vec<PathPoint> = Vec::new();
    let mut arclength = 0.0;
    for (s, &(from, to, after_break)) in legs.iter().enumerate() {
        segments.push(PathSegment {
            label: format!("{}-{}", vertex_label(from), vertex_label(to)),
            after_break,
        });
        let a = vertex(from, dim);
        let b = vertex(to, dim);
        let length = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (y - x) * (y - x))
            .sum::<f64>()
            .sqrt();
        let start = if s == 0 || after_break { 0 } else { 1 };
        for i in start..pts_per_segment {
            let t = i as f64 / (pts_per_segment - 1) as f64;
            let coords = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (1.0 - t) * x + t * y)
                .collect();
            points.push(PathPoint {
                segment: s,
                arclength: arclength + t * length,
                k: KPoint::new(coords),
            });
        }
        arclength += length;
    }
    Ok(BandPath { segments, points })
}
