//! Periodized model wells sampled on the real-space grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::RealGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    /// `depth · exp(-|x|² / 2σ²)`
    Gaussian,
    /// `depth · exp(-max(|x| - 1/4, 0)² / 2σ²)`
    Flattop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub depth: f64,
    pub sigma: f64,
    /// Lattice images summed per dimension on each side of the minimum image.
    #[serde(default = "default_image_cutoff")]
    pub image_cutoff: usize,
}

fn default_image_cutoff() -> usize {
    2
}

pub const FLATTOP_RADIUS: f64 = 0.25;

impl PotentialSpec {
    pub fn new(kind: PotentialKind, depth: f64, sigma: f64) -> Self {
        PotentialSpec {
            kind,
            depth,
            sigma,
            image_cutoff: default_image_cutoff(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !self.depth.is_finite() {
            return Err(Error::Config("depth must be finite".into()));
        }
        if self.image_cutoff < 1 {
            return Err(Error::Config("image_cutoff must be >= 1".into()));
        }
        Ok(())
    }

    /// The localized well `V_c` as a function of the distance to its center.
    pub fn radial(&self, r: f64) -> f64 {
        let s2 = 2.0 * self.sigma * self.sigma;
        match self.kind {
            PotentialKind::Gaussian => self.depth * (-r * r / s2).exp(),
            PotentialKind::Flattop => {
                let d = (r - FLATTOP_RADIUS).max(0.0);
                self.depth * (-d * d / s2).exp()
            }
        }
    }
}

/// The four model setups of the 2D and 3D experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExampleId {
    #[serde(rename = "2d_gauss")]
    Gauss2d,
    #[serde(rename = "2d_flattop")]
    Flattop2d,
    #[serde(rename = "3d_gauss")]
    Gauss3d,
    #[serde(rename = "3d_flattop")]
    Flattop3d,
}

impl ExampleId {
    pub const ALL: [ExampleId; 4] = [
        ExampleId::Gauss2d,
        ExampleId::Flattop2d,
        ExampleId::Gauss3d,
        ExampleId::Flattop3d,
    ];

    pub fn dim(&self) -> usize {
        match self {
            ExampleId::Gauss2d | ExampleId::Flattop2d => 2,
            ExampleId::Gauss3d | ExampleId::Flattop3d => 3,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ExampleId::Gauss2d => "2d_gauss",
            ExampleId::Flattop2d => "2d_flattop",
            ExampleId::Gauss3d => "3d_gauss",
            ExampleId::Flattop3d => "3d_flattop",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown example id '{s}'")))
    }
}

pub fn paper_potential(id: ExampleId) -> PotentialSpec {
    let (kind, sigma) = match id {
        ExampleId::Gauss2d => (PotentialKind::Gaussian, 0.1333),
        ExampleId::Flattop2d => (PotentialKind::Flattop, 0.0667),
        ExampleId::Gauss3d => (PotentialKind::Gaussian, 0.1667),
        ExampleId::Flattop3d => (PotentialKind::Flattop, 0.0833),
    };
    PotentialSpec::new(kind, -144.0, sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    pub values: Vec<f64>,
}

impl SampledPotential {
    pub fn zero(n_grid: usize) -> Self {
        SampledPotential {
            values: vec![0.0; n_grid],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Periodized potential with the well centered at the origin.
pub fn sample_potential(spec: &PotentialSpec, grid: &RealGrid) -> Result<SampledPotential> {
    sample_potential_centered(spec, grid, &vec![0.0; grid.dim])
}

/// Periodized potential with the well centered at `center`.
pub fn sample_potential_centered(
    spec: &PotentialSpec,
    grid: &RealGrid,
    center: &[f64],
) -> Result<SampledPotential> {
    spec.validate()?;
    if center.len() != grid.dim {
        return Err(Error::Dimension {
            expected: grid.dim,
            got: center.len(),
        });
    }
    let dim = grid.dim;
    let c = spec.image_cutoff as i64;
    let side = (2 * c + 1) as usize;
    let images: Vec<Vec<f64>> = (0..side.pow(dim as u32))
        .map(|flat| {
            crate::lattice::multi_index(flat, dim, side)
                .into_iter()
                .map(|i| (i as i64 - c) as f64)
                .collect()
        })
        .collect();

    let values = grid
        .points
        .iter()
        .map(|x| {
            // Minimum image of x - center in [-1/2, 1/2)^d.
            let d: Vec<f64> = x
                .iter()
                .zip(center)
                .map(|(xi, ci)| {
                    let t = xi - ci;
                    t - (t + 0.5).floor()
                })
                .collect();
            images
                .iter()
                .map(|n| {
                    let r2: f64 = d.iter().zip(n).map(|(a, b)| (a - b) * (a - b)).sum();
                    spec.radial(r2.sqrt())
                })
                .sum()
        })
        .collect();
    Ok(SampledPotential { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_grid, LatticeConfig};

    fn grid(dim: usize, n: usize) -> RealGrid {
        build_grid(&LatticeConfig::new(dim, n, 1).unwrap()).unwrap()
    }

    #[test]
    fn example_parameters() {
        assert_eq!(paper_potential(ExampleId::Gauss2d).sigma, 0.1333);
        assert_eq!(paper_potential(ExampleId::Flattop2d).sigma, 0.0667);
        assert_eq!(paper_potential(ExampleId::Gauss3d).sigma, 0.1667);
        assert_eq!(paper_potential(ExampleId::Flattop3d).sigma, 0.0833);
        for id in ExampleId::ALL {
            assert_eq!(paper_potential(id).depth, -144.0);
            assert_eq!(id.as_str().parse::<ExampleId>().unwrap(), id);
        }
        assert!("2d_square".parse::<ExampleId>().is_err());
    }

    #[test]
    fn gaussian_center_is_depth_plus_tails() {
        let g = grid(2, 16);
        let v = sample_potential(&paper_potential(ExampleId::Gauss2d), &g).unwrap();
        // Four nearest images at distance 1 dominate the tail.
        let tail = 4.0 * 144.0 * (-1.0 / (2.0 * 0.1333f64.powi(2))).exp();
        assert!((v.values[0] + 144.0 + tail).abs() < 1e-3 * tail);
    }

    #[test]
    fn flattop_plateau_is_exact() {
        let spec = paper_potential(ExampleId::Flattop2d);
        assert_eq!(spec.radial(0.125), -144.0);
        let g = grid(2, 16);
        let v = sample_potential(&spec, &g).unwrap();
        // (2/16, 0) lies at distance 1/8 from the well.
        assert_eq!(v.values[g.flat_index(&[2, 0])], -144.0);
    }

    #[test]
    fn values_bounded_below_by_depth_up_to_tails() {
        for id in ExampleId::ALL {
            let g = grid(id.dim(), 8);
            let v = sample_potential(&paper_potential(id), &g).unwrap();
            let min = v.values.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -144.0 * (1.0 + 1e-6), "{id}: {min}");
            assert!(v.values.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn radial_symmetry_on_grid() {
        let g = grid(2, 16);
        let v = sample_potential(&paper_potential(ExampleId::Gauss2d), &g).unwrap();
        let at = |i: usize, j: usize| v.values[g.flat_index(&[i, j])];
        assert!((at(3, 1) - at(1, 3)).abs() < 1e-12);
        assert!((at(3, 1) - at(13, 15)).abs() < 1e-12);
        assert!((at(5, 0) - at(0, 11)).abs() < 1e-12);
    }

    #[test]
    fn periodic_under_lattice_shift() {
        let g = grid(2, 8);
        let spec = paper_potential(ExampleId::Gauss2d);
        let v = sample_potential(&spec, &g).unwrap();
        let shifted = sample_potential_centered(&spec, &g, &[1.0, -1.0]).unwrap();
        for (a, b) in v.values.iter().zip(&shifted.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn image_cutoff_convergence() {
        let g = grid(3, 8);
        let mut spec = paper_potential(ExampleId::Gauss3d);
        spec.image_cutoff = 1;
        let v1 = sample_potential(&spec, &g).unwrap();
        spec.image_cutoff = 2;
        let v2 = sample_potential(&spec, &g).unwrap();
        let added = (5usize.pow(3) - 3usize.pow(3)) as f64;
        let bound = (-(0.5f64).powi(2) / (2.0 * spec.sigma * spec.sigma)).exp() * 144.0 * added;
        for (a, b) in v1.values.iter().zip(&v2.values) {
            assert!((a - b).abs() <= bound);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let g = grid(2, 8);
        let spec = paper_potential(ExampleId::Gauss2d);
        assert!(matches!(
            sample_potential_centered(&spec, &g, &[0.0, 0.0, 0.0]),
            Err(Error::Dimension { .. })
        ));
    }
}
