use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "multiboltz", version, about = "Boltzmann sampling of context-free languages with composition control")]
pub struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit timing fields so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

/// A grammar file, or one of `binary`, `dyck`, `motzkin`, `tetris:<width>`.
pub type GrammarArg = String;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a grammar and report its structure.
    Validate { grammar: GrammarArg },
    /// Evaluate the generating function at `(z, w)`.
    Eval(EvalArgs),
    /// Locate and classify the dominant singularity.
    Sing {
        grammar: GrammarArg,
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Tune letter weights towards a target composition.
    Tune(TuneArgs),
    /// Draw words of a given size, optionally with a target composition.
    Sample(SampleArgs),
    /// Count words of size n exactly.
    Count {
        grammar: GrammarArg,
        #[arg(long)]
        n: usize,
        /// Comma-separated letter counts; counts only words with this profile.
        #[arg(long)]
        profile: Option<String>,
        /// Weighted count instead of a plain one.
        #[arg(long)]
        weights: Option<String>,
    },
    /// Expected number of free draws per word of size exactly n.
    PredictTrials {
        grammar: GrammarArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        weights: Option<String>,
    },
    /// Tetromino tessellations of a fixed-width well.
    #[command(subcommand)]
    Tetris(TetrisCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Newton,
    FixedPoint,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub grammar: GrammarArg,
    #[arg(long)]
    pub z: f64,
    /// Comma-separated weights, one per letter (all 1 by default).
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, value_enum, default_value_t = Method::Newton)]
    pub method: Method,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    pub grammar: GrammarArg,
    /// Comma-separated frequencies summing to 1.
    #[arg(long)]
    pub target: String,
    /// Target size; required unless `--asymptotic`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Starting weights.
    #[arg(long)]
    pub weights: Option<String>,
    /// Tune the limiting frequencies instead of the expectations at size n.
    #[arg(long)]
    pub asymptotic: bool,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    pub grammar: GrammarArg,
    #[arg(long)]
    pub n: usize,
    /// Relative size tolerance.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Composition tolerance; used with `--target`.
    #[arg(long, default_value_t = 0.1)]
    pub comp_eps: f64,
    /// Window exponent in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Target composition; without it words are drawn by size only.
    #[arg(long)]
    pub target: Option<String>,
    /// Weights for size-only sampling, or starting weights for tuning.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; worker j uses seed + j.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum TetrisCommand {
    /// Build the disassembly automaton and report its size.
    Build {
        #[arg(long)]
        width: usize,
    },
    /// Exact piece frequencies and number of tessellations.
    Stats {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        n: usize,
    },
    /// Draw full boards with a controlled piece distribution.
    Sample(TetrisSampleArgs),
    /// Render a board as SVG.
    Render(TetrisRenderArgs),
}

#[derive(Debug, Args)]
pub struct TetrisSampleArgs {
    #[arg(long)]
    pub width: usize,
    /// Number of pieces.
    #[arg(long)]
    pub n: usize,
    /// Target piece frequencies in Z,O,L,J,I,S,T order (uniform by default).
    #[arg(long)]
    pub target: Option<String>,
    /// Composition tolerance (7/n by default, a window of about ±1 piece).
    #[arg(long)]
    pub comp_eps: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Also write each board as `<prefix><index>.svg`.
    #[arg(long)]
    pub svg_prefix: Option<String>,
}

#[derive(Debug, Args)]
pub struct TetrisRenderArgs {
    /// JSON file holding a tessellation or the output of `tetris sample`.
    #[arg(long, conflicts_with_all = ["width", "n"])]
    pub input: Option<PathBuf>,
    /// Which sample of a `tetris sample` file to draw.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Sample a fresh uniform-target board of this width instead.
    #[arg(long, requires = "n")]
    pub width: Option<usize>,
    #[arg(long, requires = "width")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the SVG document here; otherwise it is embedded in the JSON.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}
