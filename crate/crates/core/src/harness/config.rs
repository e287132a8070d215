//! Experiment configuration, read from TOML and overridable from the CLI.
//!
//! ```toml
//! n_bands = 10
//! seed = 7
//! output_dir = "out"
//!
//! [lattice]
//! dim = 2
//! n_per_dim = 48
//! k_per_dim = 4
//!
//! [potential]
//! example = "2d_gauss"   # or kind = "gaussian" / "flattop" with sigma, depth
//!
//! [fitting]
//! tol = 1e-5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bloch::{SolverMethod, SolverOptions};
use crate::dfcore::FittingConfig;
use crate::error::{Error, Result};
use crate::lattice::LatticeConfig;
use crate::potential::{paper_potential, ExampleId, PotentialKind, PotentialSpec};

/// Either one of the named model setups or an explicit well, with optional
/// field overrides on top of the named setup.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub example: Option<ExampleId>,
    pub kind: Option<PotentialKind>,
    pub depth: Option<f64>,
    pub sigma: Option<f64>,
    pub image_cutoff: Option<usize>,
}

pub const DEFAULT_DEPTH: f64 = -144.0;

impl PotentialConfig {
    pub fn example(id: ExampleId) -> Self {
        PotentialConfig {
            example: Some(id),
            ..Default::default()
        }
    }

    pub fn resolve(&self) -> Result<PotentialSpec> {
        let mut spec = match (self.example, self.kind) {
            (Some(id), _) => paper_potential(id),
            (None, Some(kind)) => {
                let sigma = self
                    .sigma
                    .ok_or_else(|| Error::Config("potential.sigma is required with potential.kind".into()))?;
                PotentialSpec::new(kind, DEFAULT_DEPTH, sigma)
            }
            (None, None) => {
                return Err(Error::Config(
                    "potential needs either an example id or a kind".into(),
                ))
            }
        };
        if let Some(kind) = self.kind {
            spec.kind = kind;
        }
        if let Some(d) = self.depth {
            spec.depth = d;
        }
        if let Some(s) = self.sigma {
            spec.sigma = s;
        }
        if let Some(c) = self.image_cutoff {
            spec.image_cutoff = c;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    pub potential: PotentialConfig,
    pub n_bands: usize,
    /// Master seed. It replaces the solver and fitting seeds and drives
    /// quadruple sampling.
    pub seed: u64,
    pub solver: SolverOptions,
    pub fitting: FittingConfig,
    pub error_samples: usize,
    /// Quadruples used for the ERI bound check.
    pub eri_samples: usize,
    pub output_dir: PathBuf,
    /// Refuse runs whose estimated working set exceeds this many GiB.
    pub max_memory_gb: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lattice: LatticeConfig {
                dim: 2,
                n_per_dim: 48,
                k_per_dim: 2,
            },
            potential: PotentialConfig::example(ExampleId::Gauss2d),
            n_bands: 10,
            seed: 0,
            solver: SolverOptions::default(),
            fitting: FittingConfig::default(),
            error_samples: 200,
            eri_samples: 50,
            output_dir: PathBuf::from("out"),
            max_memory_gb: 8.0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config serialization: {e}")))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            seed: self.seed,
            ..self.solver
        }
    }

    pub fn fitting_config(&self) -> FittingConfig {
        FittingConfig {
            seed: self.seed,
            ..self.fitting
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.potential.resolve()?;
        if let Some(id) = self.potential.example {
            if id.dim() != self.lattice.dim {
                return Err(Error::Config(format!(
                    "example {id} is {}-dimensional but the lattice has dim {}",
                    id.dim(),
                    self.lattice.dim
                )));
            }
        }
        self.solver.validate()?;
        self.fitting.validate()?;
        let half = self.lattice.n_grid() / 2;
        if self.n_bands == 0 || self.n_bands > half {
            return Err(Error::Config(format!(
                "n_bands must lie in 1..={half} for this grid, got {}",
                self.n_bands
            )));
        }
        if self.error_samples == 0 {
            return Err(Error::Config("error_samples must be >= 1".into()));
        }
        if !(self.max_memory_gb > 0.0) {
            return Err(Error::Config("max_memory_gb must be > 0".into()));
        }
        Ok(())
    }

    /// Rough peak working set of a solve + fit at `n_bands` bands on the
    /// configured mesh: orbitals, the sketch and `P`, all complex. A redrawn
    /// sketch stops once `r²` passes twice the column count, so its rows are
    /// bounded by `4·cap` as well as by `(N·K)²`.
    pub fn estimated_bytes(&self, n_bands: usize) -> f64 {
        let c = 16.0;
        let n_orb = n_bands * self.lattice.n_kpoints();
        let fit = self.fitting_config();
        let cap = fit.column_cap(n_bands, self.lattice.n_grid());
        let r0 = fit.sketch_rows(n_bands, n_orb);
        let rows = (r0 * r0).max(4 * cap).min(n_orb * n_orb) as f64;
        c * self.lattice.n_grid() as f64 * (2.0 * n_orb as f64 + 2.0 * rows + cap as f64)
    }

    pub fn check_resources(&self, n_bands: usize) -> Result<()> {
        let gib = self.estimated_bytes(n_bands) / (1u64 << 30) as f64;
        if gib > self.max_memory_gb {
            return Err(Error::Resource(format!(
                "estimated working set {gib:.1} GiB exceeds the {:.1} GiB limit \
                 (n_per_dim={}, k_per_dim={}, N={n_bands}); raise --max-memory-gb \
                 on a larger machine or reduce --ngrid, --nk or --nbands",
                self.max_memory_gb, self.lattice.n_per_dim, self.lattice.k_per_dim
            )));
        }
        Ok(())
    }
}

/// Command-line overrides, applied after the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dim: Option<usize>,
    pub ngrid: Option<usize>,
    pub nk: Option<usize>,
    pub nbands: Option<usize>,
    pub potential: Option<ExampleId>,
    pub sigma: Option<f64>,
    pub depth: Option<f64>,
    pub tol: Option<f64>,
    pub oversample: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub solver: Option<SolverMethod>,
    pub max_memory_gb: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.dim {
            cfg.lattice.dim = v;
        }
        if let Some(v) = self.ngrid {
            cfg.lattice.n_per_dim = v;
        }
        if let Some(v) = self.nk {
            cfg.lattice.k_per_dim = v;
        }
        if let Some(v) = self.nbands {
            cfg.n_bands = v;
        }
        if let Some(v) = self.potential {
            cfg.potential = PotentialConfig::example(v);
        }
        if let Some(v) = self.sigma {
            cfg.potential.sigma = Some(v);
        }
        if let Some(v) = self.depth {
            cfg.potential.depth = Some(v);
        }
        if let Some(v) = self.tol {
            cfg.fitting.tol = v;
        }
        if let Some(v) = self.oversample {
            cfg.fitting.c_oversample = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.samples {
            cfg.error_samples = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.solver {
            cfg.solver.method = v;
        }
        if let Some(v) = self.max_memory_gb {
            cfg.max_memory_gb = v;
        }
    }
}
