use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qerc_core::dataset::ThinningVariant;
use qerc_core::experiment::RunConfig;
use qerc_core::featurizer::ComponentSelection;
use qerc_core::reservoir::Variant;
use qerc_core::Result;

#[derive(Debug, Parser)]
#[command(name = "qerc", version, about = "Block-copolymer phase classification with a quantum extreme reservoir")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand. Precedence: flags > config file > preset.
#[derive(Debug, Args)]
pub struct Global {
    /// TOML file with RunConfig keys
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Start from the laptop preset (5x4 grid, 6/3 seeds, 32x32 images)
    #[arg(long, global = true)]
    pub desk_scale: bool,
    /// Working directory holding the dataset and run outputs
    #[arg(long, global = true, env = "QERC_WORKDIR", value_name = "DIR")]
    pub workdir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub qubits: Option<usize>,
    #[arg(long, global = true, value_name = "clifford-t|clifford-only|t-only")]
    pub variant: Option<Variant>,
    /// Reservoir seed of the first repetition
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shots per sample, 0 for exact probabilities
    #[arg(long, global = true)]
    pub shots: Option<u32>,
    #[arg(long, global = true)]
    pub repetitions: Option<usize>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Print the resolved configuration as TOML and exit
    #[arg(long, global = true)]
    pub print_config: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the SCFT dataset (resumable)
    Generate {
        /// Jobs between checkpoints
        #[arg(long)]
        chunk: Option<usize>,
    },
    /// Ground-truth labels: the full diagram, or one point
    Label {
        /// Label a single state point
        #[arg(long, num_args = 2, value_names = ["F", "CHIN"])]
        point: Option<Vec<f64>>,
    },
    /// Featurize, reservoir, readout for one configuration
    Run {
        /// Comma-separated shot counts, one run each
        #[arg(long, value_delimiter = ',')]
        shots_list: Option<Vec<u32>>,
        /// 1-based PCA components to encode, e.g. 1-12,15-16
        #[arg(long)]
        select: Option<ComponentSelection>,
        /// Re-execute the command recorded in a records.jsonl and compare checksums
        #[arg(long, value_name = "RECORDS")]
        replay: Option<PathBuf>,
    },
    /// Accuracy against qubit count, with both linear baselines
    SweepQubits {
        /// Inclusive qubit range, e.g. 2-9
        #[arg(long, value_parser = parse_range)]
        range: Option<[usize; 2]>,
    },
    /// Compare Clifford+T, Clifford-only and T-only reservoirs
    Ablate,
    /// Encode a shifted component selection and compare with the identity one
    ShiftComponents {
        #[arg(long)]
        select: ComponentSelection,
    },
    /// Train on a thinned grid and predict the full diagram
    Generalize {
        /// Thinning pattern, A or B
        #[arg(long, default_value = "A")]
        thinning: ThinningVariant,
        /// Keep the thinned set unbalanced
        #[arg(long)]
        no_balance: bool,
    },
    /// Render a diagram CSV (f,chiN,...) or accuracy CSV (series,...) to SVG or PNG
    Render {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value = "")]
        title: String,
    },
}

fn parse_range(s: &str) -> std::result::Result<[usize; 2], String> {
    let (a, b) = s
        .split_once(['-', ':'])
        .ok_or_else(|| format!("expected LO-HI, got `{s}`"))?;
    let lo = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad range end `{b}`"))?;
    Ok([lo, hi])
}

impl Global {
    pub fn resolve(&self) -> Result<RunConfig> {
        let base = RunConfig::preset(self.desk_scale);
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(&base, path)?,
            None => base,
        };
        if let Some(w) = &self.workdir {
            cfg.paths.workdir = w.clone();
        }
        if let Some(n) = self.qubits {
            cfg.n_qubits = n;
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(s) = self.seed {
            cfg.reservoir_seed = s;
        }
        if let Some(s) = self.shots {
            cfg.shots = s;
        }
        if let Some(r) = self.repetitions {
            cfg.repetitions = r;
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        Ok(cfg)
    }
}
