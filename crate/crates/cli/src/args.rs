use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 0xF8A3E;

#[derive(Debug, Parser)]
#[command(name = "oframe", version, about = "Operator frames, Auerbach bases and sequence-space norms")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "OFRAME_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long = "rank-tol", global = true, default_value_t = 1e-10)]
    pub rank_tol: f64,
    /// Auerbach sweep budget per start.
    #[arg(long, global = true, default_value_t = 200)]
    pub budget: usize,
    #[arg(long, global = true, default_value_t = 100)]
    pub samples: usize,
    /// Accept uncertified norm estimates instead of failing.
    #[arg(long = "allow-estimates", global = true)]
    pub allow_estimates: bool,
    /// Longest sequence enumerated exhaustively over signs; defaults to 20
    /// for u-norms and 16 where each pattern costs an operator norm.
    #[arg(long = "max-exact", global = true)]
    pub max_exact: Option<usize>,
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    #[arg(long, global = true)]
    pub csv: bool,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
}

/// The configuration echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub tol: f64,
    pub rank_tol: f64,
    pub auerbach_budget: usize,
    pub auerbach_restarts: usize,
    pub allow_estimates: bool,
    pub samples: usize,
    pub max_exact_signs: Option<usize>,
}

impl RunConfig {
    pub fn u_norm_exact(&self) -> usize {
        self.max_exact_signs.unwrap_or(20)
    }

    pub fn pattern_exact(&self) -> usize {
        self.max_exact_signs.unwrap_or(16)
    }
}

impl GlobalArgs {
    pub fn config(&self) -> Result<RunConfig, String> {
        for (name, v) in [("tol", self.tol), ("rank-tol", self.rank_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("--{name} must be positive, got {v}"));
            }
        }
        Ok(RunConfig {
            seed: self.seed,
            tol: self.tol,
            rank_tol: self.rank_tol,
            auerbach_budget: self.budget,
            auerbach_restarts: oframe_core::AuerbachOptions::default().restarts,
            allow_estimates: self.allow_estimates,
            samples: self.samples,
            max_exact_signs: self.max_exact,
        })
    }
}

/// JSON arguments are either inline JSON text or a path to a JSON file.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Norm of a vector, or dual norm of a functional.
    Norm {
        #[arg(long)]
        vector: String,
        /// Treat the input as a functional and report its dual norm.
        #[arg(long)]
        dual: bool,
    },
    /// Operator norm.
    Opnorm {
        #[arg(long)]
        operator: String,
    },
    /// Auerbach basis of the column span of a subspace matrix.
    Auerbach {
        #[arg(long)]
        space: String,
        /// Row-major `n × m` matrix whose columns span the subspace.
        #[arg(long)]
        subspace: String,
    },
    /// Rank-one splitting of a finite-rank operator.
    Split {
        #[arg(long)]
        operator: String,
    },
    /// Frame from a chain of approximants `S_1, …, S_L` converging to `T`.
    BuildFrame {
        #[arg(long)]
        operator: String,
        /// Array of operators; defaults to the single-step chain `[T]`.
        #[arg(long, conflicts_with = "blocks")]
        chain: Option<String>,
        /// Array of blocks summing to `T`.
        #[arg(long)]
        blocks: Option<String>,
    },
    /// Verifies the frame identity and constant of a frame or build report.
    FrameCheck {
        #[arg(long)]
        frame: String,
    },
    /// Dual frame.
    Dual {
        #[arg(long)]
        frame: String,
    },
    /// Tail profile of a frame.
    Profile {
        #[arg(long)]
        frame: String,
        #[arg(long, value_enum)]
        kind: ProfileKind,
    },
    /// `sup_N ‖Σ_{k≤N} a_k w_k‖`.
    Tnorm(SeqArgs),
    /// `sup_{N,ε} ‖Σ_{k≤N} ε_k a_k w_k‖`.
    Unorm(SeqArgs),
    /// Factorization of a frame's operator through its sequence space.
    Factorize {
        #[arg(long)]
        frame: String,
        #[arg(long, value_enum, default_value_t = ModeArg::T)]
        mode: ModeArg,
    },
    /// Finite-rank approximation certificate.
    Bap {
        #[arg(long)]
        operator: String,
        /// Array of source coordinate vectors; defaults to the unit vectors.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        eps: f64,
        #[arg(long = "C", alias = "c", default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Unconditional constant of a finite system.
    Uncond {
        /// `haar` or a JSON array of coordinate vectors.
        #[arg(long)]
        system: String,
        /// Highest Haar level; one row per level `1..=levels`.
        #[arg(long, default_value_t = 4)]
        levels: u32,
        /// Exponent of the grid space for the Haar system.
        #[arg(long, default_value = "1")]
        p: String,
        /// Ambient space for an explicit system.
        #[arg(long)]
        space: Option<String>,
    },
    /// Canned experiments.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SeqArgs {
    #[arg(long)]
    pub space: String,
    /// Array of generator coordinate vectors.
    #[arg(long)]
    pub generators: String,
    /// Array of coefficients.
    #[arg(long)]
    pub coeffs: String,
}

#[derive(Debug, Subcommand)]
pub enum Demo {
    /// Unconditional constants of the Haar system on the L1 grid.
    HaarGrowth {
        #[arg(long, default_value_t = 4)]
        levels: u32,
    },
    /// Tail profiles of the ℓ1 basis against the ℓ2 basis.
    Shrinking {
        #[arg(long, default_value_t = 12)]
        max_size: usize,
    },
    /// Frame constants of frames built from random telescoped chains.
    Stress {
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProfileKind {
    Shrinking,
    Bc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    T,
    U,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Norm { .. } => "norm".into(),
            Command::Opnorm { .. } => "opnorm".into(),
            Command::Auerbach { .. } => "auerbach".into(),
            Command::Split { .. } => "split".into(),
            Command::BuildFrame { .. } => "build-frame".into(),
            Command::FrameCheck { .. } => "frame-check".into(),
            Command::Dual { .. } => "dual".into(),
            Command::Profile { .. } => "profile".into(),
            Command::Tnorm(_) => "tnorm".into(),
            Command::Unorm(_) => "unorm".into(),
            Command::Factorize { .. } => "factorize".into(),
            Command::Bap { .. } => "bap".into(),
            Command::Uncond { .. } => "uncond".into(),
            Command::Demo { which } => match which {
                Demo::HaarGrowth { .. } => "demo haar-growth".into(),
                Demo::Shrinking { .. } => "demo shrinking".into(),
                Demo::Stress { .. } => "demo stress".into(),
            },
        }
    }
}
