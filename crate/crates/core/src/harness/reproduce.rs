//! Preset reproduction runs for the four model setups.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Overrides, PotentialConfig};
use super::run::{
    bench_on, fit_orbitals, run_bands, solve_orbitals, write_bench_csv, write_fit_artifacts,
    write_potential_csv, BenchRecord, FitOutcome, Sweep,
};
use crate::error::Result;
use crate::lattice::LatticeConfig;
use crate::potential::ExampleId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub example: ExampleId,
    pub full: bool,
    /// Config of the fit run; its `n_bands` and `k_per_dim` are the largest
    /// sweep point, so one solve serves the fit and the whole sweep.
    pub config: ExperimentConfig,
    pub sweep: Sweep,
    pub points_per_segment: usize,
}

/// Scaled presets keep the 2D grid at `48²` with `N ≤ 20` and `k_per_dim ≤ 4`
/// and shrink 3D to a `16³` grid with `N = 8`, `k_per_dim = 2`. Full presets
/// use the complete sweeps up to `N = 41`.
pub fn preset(example: ExampleId, full: bool) -> Preset {
    let (n_per_dim, n_bands, k_per_dim) = match (example.dim(), full) {
        (2, false) => (48, vec![5, 10, 15, 20], vec![2, 4]),
        (2, true) => (48, vec![5, 10, 20, 30, 41], vec![2, 4, 8, 16]),
        (_, false) => (16, vec![4, 8], vec![2]),
        (_, true) => (24, vec![5, 10, 20, 41], vec![3, 6, 12]),
    };
    let sweep = Sweep {
        n_bands,
        k_per_dim,
    };
    let config = ExperimentConfig {
        lattice: LatticeConfig {
            dim: example.dim(),
            n_per_dim,
            k_per_dim: sweep.finest_k(),
        },
        potential: PotentialConfig::example(example),
        n_bands: sweep.max_bands(),
        output_dir: PathBuf::from(format!("out/{example}")),
        ..Default::default()
    };
    Preset {
        example,
        full,
        config,
        sweep,
        points_per_segment: if example.dim() == 2 { 16 } else { 8 },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub master: u64,
    pub solver: u64,
    pub fitting: u64,
    pub samples: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub fit_format_version: u32,
    pub example: ExampleId,
    pub preset: &'static str,
    pub config: ExperimentConfig,
    pub sweep: Sweep,
    pub seeds: Seeds,
    pub n_col: usize,
    pub files: Vec<FileEntry>,
}

pub fn hash_file(path: &Path) -> Result<FileEntry> {
    let mut f = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        hasher.update(&buf[..n]);
    }
    Ok(FileEntry {
        name: path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        bytes,
        sha256: hex::encode(hasher.finalize()),
    })
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub manifest: Manifest,
    pub fit: FitOutcome,
    pub bench: Vec<BenchRecord>,
    pub dir: PathBuf,
}

/// Runs the preset (with `overrides` on top) and writes `potential.csv`,
/// `bands.csv`, `bench.csv`, the fit artifacts and `manifest.json`.
pub fn cmd_reproduce(example: ExampleId, full: bool, overrides: &Overrides) -> Result<Reproduction> {
    let p = preset(example, full);
    let mut cfg = p.config.clone();
    overrides.apply(&mut cfg);
    let mut sweep = p.sweep.clone();
    // band count and mesh overrides redefine the largest sweep point
    if let Some(n) = overrides.nbands {
        sweep.n_bands.retain(|&x| x < n);
        sweep.n_bands.push(n);
    }
    if let Some(k) = overrides.nk {
        sweep.k_per_dim.retain(|&x| k % x == 0 && x < k);
        sweep.k_per_dim.push(k);
    }
    cfg.validate()?;
    sweep.validate()?;
    cfg.check_resources(cfg.n_bands)?;

    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut paths = Vec::new();

    let path = dir.join("potential.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    write_potential_csv(&cfg, &mut w)?;
    w.flush()?;
    paths.push(path);

    let table = run_bands(&cfg, p.points_per_segment)?;
    let path = dir.join("bands.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    table.write_csv(&mut w)?;
    w.flush()?;
    paths.push(path);

    let (orbitals, t_solve) = solve_orbitals(&cfg)?;
    let bench = bench_on(&cfg, &orbitals, t_solve, &sweep)?;
    let path = dir.join("bench.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    write_bench_csv(&bench, &mut w)?;
    w.flush()?;
    paths.push(path);

    let fit = fit_orbitals(&cfg, &orbitals, t_solve)?;
    paths.extend(write_fit_artifacts(&dir, &fit, Some(example.as_str()))?);

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        fit_format_version: crate::dfcore::io::VERSION,
        example,
        preset: if full { "full" } else { "scaled" },
        seeds: Seeds {
            master: cfg.seed,
            solver: cfg.solver_options().seed,
            fitting: cfg.fitting_config().seed,
            samples: cfg.seed,
        },
        config: cfg,
        sweep,
        n_col: fit.result.n_col(),
        files: paths.iter().map(|p| hash_file(p)).collect::<Result<_>>()?,
    };
    let mut w = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.flush()?;

    Ok(Reproduction {
        manifest,
        fit,
        bench,
        dir,
    })
}
