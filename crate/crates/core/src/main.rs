use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use periodic_df::bloch::SolverMethod;
use periodic_df::harness::{self, ExperimentConfig, Overrides, Sweep};
use periodic_df::potential::ExampleId;
use periodic_df::{Error, Result};

#[derive(Parser)]
#[command(name = "periodic-df", version, about = "Bloch orbitals and separable periodic density fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Band structure along the high-symmetry path, written to bands.csv.
    Bands {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16)]
        points_per_segment: usize,
    },
    /// Solve, fit and sample errors on one configuration.
    Fit {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep over band counts and k-meshes, written to bench.csv.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 15, 20])]
        sweep_n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 4])]
        sweep_k: Vec<usize>,
    },
    /// Preset reproduction of one model setup, with a hashed manifest.
    Reproduce {
        /// 2d_gauss, 2d_flattop, 3d_gauss or 3d_flattop
        example: ExampleId,
        #[command(flatten)]
        common: Common,
        /// Run the full-size preset instead of the scaled one.
        #[arg(long)]
        full: bool,
    },
    /// Built-in consistency checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    /// Grid points per dimension.
    #[arg(long)]
    ngrid: Option<usize>,
    /// k-points per dimension.
    #[arg(long)]
    nk: Option<usize>,
    #[arg(long)]
    nbands: Option<usize>,
    #[arg(long)]
    potential: Option<ExampleId>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    depth: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    oversample: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_solver)]
    solver: Option<SolverMethod>,
    #[arg(long)]
    max_memory_gb: Option<f64>,
}

fn parse_solver(s: &str) -> std::result::Result<SolverMethod, String> {
    match s {
        "lobpcg" => Ok(SolverMethod::Lobpcg),
        "dense" => Ok(SolverMethod::Dense),
        _ => Err(format!("unknown solver '{s}' (lobpcg or dense)")),
    }
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            dim: self.dim,
            ngrid: self.ngrid,
            nk: self.nk,
            nbands: self.nbands,
            potential: self.potential,
            sigma: self.sigma,
            depth: self.depth,
            tol: self.tol,
            oversample: self.oversample,
            seed: self.seed,
            samples: self.samples,
            out: self.out.clone(),
            solver: self.solver,
            max_memory_gb: self.max_memory_gb,
        }
    }

    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        self.overrides().apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Bands {
            common,
            points_per_segment,
        } => {
            let path = harness::cmd_bands(&common.config()?, points_per_segment)?;
            println!("{}", path.display());
        }
        Command::Fit { common } => {
            let (out, paths) = harness::cmd_fit(&common.config()?)?;
            println!(
                "N_col={} t_select={:.3}s err_l2 max={:.3e} mean={:.3e} err_c max={:.3e} mean={:.3e}",
                out.result.n_col(),
                out.result.timing.total_s(),
                out.errors.l2_max,
                out.errors.l2_mean,
                out.errors.coulomb_max,
                out.errors.coulomb_mean
            );
            for p in paths {
                println!("{}", p.display());
            }
        }
        Command::Bench {
            common,
            sweep_n,
            sweep_k,
        } => {
            let sweep = Sweep {
                n_bands: sweep_n,
                k_per_dim: sweep_k,
            };
            let (records, path) = harness::cmd_bench(&common.config()?, &sweep)?;
            for r in &records {
                println!(
                    "N={:>3} k={:>2} N_col={:>4} t_select={:.3}s err_l2_max={:.2e}",
                    r.n, r.k_per_dim, r.n_col, r.t_select_s, r.err_l2_max
                );
            }
            println!("{}", path.display());
        }
        Command::Reproduce {
            example,
            common,
            full,
        } => {
            let mut overrides = common.overrides();
            if let Some(p) = &common.config {
                return Err(Error::Config(format!(
                    "reproduce runs a preset; pass individual flags instead of --config {}",
                    p.display()
                )));
            }
            overrides.out.get_or_insert_with(|| PathBuf::from(format!("out/{example}")));
            let rep = harness::cmd_reproduce(example, full, &overrides)?;
            for f in &rep.manifest.files {
                println!("{}  {}", f.sha256, f.name);
            }
            println!("{}", rep.dir.join("manifest.json").display());
        }
        Command::Selftest => {
            let checks = harness::run_selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.to_string(), "kind": e.kind() }));
            ExitCode::FAILURE
        }
    }
}
