//! `mmuav` experiment runner.
//!
//! Every subcommand resolves a JSON config (file values, then flag
//! overrides), validates it, writes the experiment CSV and a `.json` sidecar
//! holding the resolved config. Feeding the sidecar back with `--config`
//! reproduces the CSV byte for byte.

pub mod error;
pub mod experiments;
pub mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mmuav_core::codebook::CodebookKind;
use mmuav_core::sdma::LfExpectation;

pub use error::CliError;
use experiments::*;
pub use sweep::Sweep;

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "MMUAV_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "mmuav", version, about = "mmWave UAV cellular simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV output path; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory used when --out is absent.
    #[arg(long, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Beam pattern of one codeword.
    Pattern {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        codebook: Option<CodebookKind>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        layer: Option<usize>,
        #[arg(long)]
        index: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Union, constant-amplitude and deep-sink report of a codebook.
    CodebookCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        codebook: Option<CodebookKind>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        ripple_db: Option<f64>,
    },
    /// Training-slot counts of exhaustive vs. hierarchical search.
    Complexity {
        #[command(flatten)]
        common: Common,
        #[arg(long = "n", value_delimiter = ',')]
        n_antennas: Option<Vec<usize>>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Monte-Carlo success rate of hierarchical beam search.
    SearchSim {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        nlos_offset_db: Option<f64>,
        /// SNR sweep in dB, `start:step:stop`.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<Sweep>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Repeat or comma-separate to compare codebooks.
        #[arg(long = "codebook", value_delimiter = ',')]
        codebooks: Option<Vec<CodebookKind>>,
        #[arg(long)]
        shared_bs_aoa: Option<bool>,
    },
    /// Multi-user uplink sum rate with MMSE-SIC vs. the interference-free bound.
    SdmaSim {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_bs: Option<usize>,
        #[arg(long)]
        n_ms: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        nlos_offset_db: Option<f64>,
        #[arg(long)]
        codebook: Option<CodebookKind>,
        #[arg(long)]
        min_group_separation: Option<usize>,
        #[arg(long)]
        grid_aligned: Option<bool>,
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<Sweep>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// mmWave vs. low-frequency multi-user capacity over transmit power.
    Capacity {
        #[command(flatten)]
        common: Common,
        /// Reset both link budgets and the sweep to a named parameter set.
        #[arg(long, value_parser = ["fig4-right"])]
        preset: Option<String>,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        tx_power_dbm: Option<Sweep>,
        #[arg(long)]
        distance_m: Option<f64>,
        /// Use Monte-Carlo with this many samples instead of quadrature.
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Coherence time and Doppler spread.
    Doppler {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        speed_mps: Option<Sweep>,
        #[arg(long)]
        wavelength_m: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        angle_rad: Option<f64>,
        #[arg(long, allow_negative_numbers = true, conflicts_with = "angle_rad")]
        angle_deg: Option<f64>,
    },
    /// Iterative user discovery and UAV repositioning.
    DeploySim {
        #[command(flatten)]
        common: Common,
        /// Scene JSON file.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Gbit/s; `inf` keeps the UAV in place.
        #[arg(long)]
        signaling_cost: Option<f64>,
        #[arg(long)]
        discovery_range_m: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Reads `path` into `E`, reporting the offending field path on failure.
pub fn load_config<E: Experiment>(path: &Path) -> Result<E, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

fn output_paths(common: &Common, name: &str) -> Result<Outcome, CliError> {
    let csv = match &common.out {
        Some(p) => p.clone(),
        None => common
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("."))
            .join(format!("{name}.csv")),
    };
    if csv.extension().is_some_and(|e| e == "json") {
        return Err(CliError::field("out", "CSV output must not use the .json extension"));
    }
    let sidecar = csv.with_extension("json");
    Ok(Outcome { csv, sidecar })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Loads, overrides, validates, runs and writes one experiment.
pub fn execute<E: Experiment>(
    common: &Common,
    overrides: impl FnOnce(&mut E) -> Result<(), CliError>,
) -> Result<Outcome, CliError> {
    let mut cfg = match &common.config {
        Some(p) => {
            let mut c: E = load_config(p)?;
            c.resolve(p.parent().unwrap_or(Path::new(".")))?;
            c
        }
        None => E::default(),
    };
    overrides(&mut cfg)?;
    cfg.validate()?;
    let paths = output_paths(common, E::NAME)?;
    let csv = cfg.run()?;
    let sidecar = serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
    write(&paths.csv, &csv)?;
    write(&paths.sidecar, &sidecar)?;
    Ok(paths)
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Pattern { common, codebook, n, m, layer, index, grid } => {
            execute(&common, |c: &mut PatternConfig| {
                set(&mut c.codebook, codebook);
                set(&mut c.n, n);
                set(&mut c.m, m);
                set(&mut c.layer, layer);
                set(&mut c.index, index);
                set(&mut c.grid, grid);
                Ok(())
            })
        }
        Command::CodebookCheck { common, codebook, n, m, grid, ripple_db } => {
            execute(&common, |c: &mut CodebookCheckConfig| {
                set(&mut c.codebook, codebook);
                set(&mut c.n, n);
                set(&mut c.m, m);
                set(&mut c.grid, grid);
                set(&mut c.ripple_db, ripple_db);
                Ok(())
            })
        }
        Command::Complexity { common, n_antennas, m } => execute(&common, |c: &mut ComplexityConfig| {
            set(&mut c.n_antennas, n_antennas);
            set(&mut c.m, m);
            Ok(())
        }),
        Command::SearchSim {
            common,
            n,
            m,
            l,
            nlos_offset_db,
            snr,
            trials,
            seed,
            codebooks,
            shared_bs_aoa,
        } => execute(&common, |c: &mut SearchSimConfig| {
            set(&mut c.n, n);
            set(&mut c.m, m);
            set(&mut c.l, l);
            set(&mut c.nlos_offset_db, nlos_offset_db);
            set(&mut c.snr, snr);
            set(&mut c.trials, trials);
            set(&mut c.seed, seed);
            set(&mut c.codebooks, codebooks);
            set(&mut c.shared_bs_aoa, shared_bs_aoa);
            Ok(())
        }),
        Command::SdmaSim {
            common,
            n_bs,
            n_ms,
            m,
            users,
            l,
            nlos_offset_db,
            codebook,
            min_group_separation,
            grid_aligned,
            snr,
            trials,
            seed,
        } => execute(&common, |c: &mut SdmaSimConfig| {
            set(&mut c.n_bs, n_bs);
            set(&mut c.n_ms, n_ms);
            set(&mut c.m, m);
            set(&mut c.users, users);
            set(&mut c.l, l);
            set(&mut c.nlos_offset_db, nlos_offset_db);
            set(&mut c.codebook, codebook);
            set(&mut c.min_group_separation, min_group_separation);
            set(&mut c.grid_aligned, grid_aligned);
            set(&mut c.snr, snr);
            set(&mut c.trials, trials);
            set(&mut c.seed, seed);
            Ok(())
        }),
        Command::Capacity {
            common,
            preset,
            users,
            tx_power_dbm,
            distance_m,
            mc_samples,
            seed,
        } => execute(&common, |c: &mut CapacityConfig| {
            if preset.is_some() {
                let keep_method = c.lf_method;
                *c = CapacityConfig::reference_sweep();
                c.lf_method = keep_method;
            }
            set(&mut c.n_users, users);
            set(&mut c.tx_power_dbm, tx_power_dbm);
            if let Some(d) = distance_m {
                c.mm.distance_m = d;
                c.lf.distance_m = d;
            }
            if let Some(samples) = mc_samples {
                c.lf_method = LfExpectation::MonteCarlo {
                    samples,
                    seed: seed.unwrap_or(7),
                };
            } else if let (Some(s), LfExpectation::MonteCarlo { seed, .. }) = (seed, &mut c.lf_method) {
                *seed = s;
            }
            Ok(())
        }),
        Command::Doppler {
            common,
            speed_mps,
            wavelength_m,
            angle_rad,
            angle_deg,
        } => execute(&common, |c: &mut DopplerConfig| {
            set(&mut c.speed_mps, speed_mps);
            set(&mut c.wavelength_m, wavelength_m);
            set(&mut c.angle_rad, angle_rad);
            set(&mut c.angle_rad, angle_deg.map(f64::to_radians));
            Ok(())
        }),
        Command::DeploySim {
            common,
            scene,
            max_iters,
            signaling_cost,
            discovery_range_m,
        } => execute(&common, |c: &mut DeploySimConfig| {
            if let Some(p) = scene {
                c.scene = SceneSource::load(&p)?;
            }
            set(&mut c.max_iters, max_iters);
            let s = c.scene_mut()?;
            set(&mut s.signaling_cost, signaling_cost);
            set(&mut s.discovery_range_m, discovery_range_m);
            Ok(())
        }),
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(o) => {
            println!("{}", o.csv.display());
            println!("{}", o.sidecar.display());
            0
        }
        Err(e) => {
            eprintln!("mmuav: {e}");
            e.exit_code()
        }
    }
}
