use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spilloverfree::{MethodChoice, Tolerances};

#[derive(Debug, Parser)]
#[command(
    name = "spilloverfree",
    version,
    about = "No-spillover eigenvalue embedding for pencils λ·diag(M_u, 0) + K",
    long_about = "Replaces selected finite eigenvalues of a symmetric pencil \
                  λ·diag(M_u, 0) + K while keeping every other eigenpair. \
                  Verbosity is controlled by SPILLOVERFREE_LOG (error, warn, info, debug)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random problem: matrices, replaced eigendata and targets.
    Gen(GenArgs),
    /// Compute the finite spectrum of a stored pencil.
    Solve(SolveArgs),
    /// Update the pencil with Θ and Γ̃₁ = Γ₁ (or a seed) and report residuals.
    Embed(EmbedArgs),
    /// Update the pencil with Γ̃₁ chosen to minimize Rec.MK.
    Optimize(OptimizeArgs),
    /// Re-check residuals and artifact hashes of a stored update.
    Verify(VerifyArgs),
    /// Generate, embed and optimize one of the two reference scenarios.
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TolArgs {
    /// Minimum reciprocal condition number of M_u and K_phi.
    #[arg(long, default_value_t = Tolerances::default().nonsingular_rcond)]
    pub tol_nonsingular: f64,
    /// Minimum reciprocal condition number of any inverted matrix.
    #[arg(long, default_value_t = Tolerances::default().ill_defined_rcond)]
    pub tol_ill_defined: f64,
    /// Largest relative asymmetry of an input matrix that is symmetrized.
    #[arg(long, default_value_t = Tolerances::default().symmetry)]
    pub tol_symmetry: f64,
    /// Relative gap below which eigenvalues count as equal or zero.
    #[arg(long, default_value_t = Tolerances::default().degenerate_rel)]
    pub tol_degenerate: f64,
    /// Relative distance at which a requested eigenvalue matches a computed one.
    #[arg(long, default_value_t = Tolerances::default().matching_rel)]
    pub tol_matching: f64,
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, default_value_t = Tolerances::default().rank_rel)]
    pub tol_rank: f64,
    /// Relative tolerance on the Γ₁ block pattern.
    #[arg(long, default_value_t = Tolerances::default().structure)]
    pub tol_structure: f64,
}

impl TolArgs {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            nonsingular_rcond: self.tol_nonsingular,
            ill_defined_rcond: self.tol_ill_defined,
            symmetry: self.tol_symmetry,
            degenerate_rel: self.tol_degenerate,
            matching_rel: self.tol_matching,
            rank_rel: self.tol_rank,
            structure: self.tol_structure,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Direct,
    Smw,
    Auto,
}

impl From<MethodArg> for MethodChoice {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Direct => MethodChoice::Direct,
            MethodArg::Smw => MethodChoice::Smw,
            MethodArg::Auto => MethodChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThetaArg {
    /// Θ = I.
    Identity,
    /// Θ read from theta.mtx in the input directory.
    Input,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Order of the structural block M_u.
    #[arg(long, default_value_t = 100)]
    pub nu: usize,
    /// Order of the electric block K_phi.
    #[arg(long, default_value_t = 40)]
    pub nphi: usize,
    /// Number of eigenvalues replaced.
    #[arg(long, default_value_t = 6)]
    pub p: usize,
    /// Conjugate pairs among the replaced eigenvalues.
    #[arg(long, default_value_t = 2)]
    pub s: usize,
    /// Conjugate pairs among the targets.
    #[arg(long, default_value_t = 2)]
    pub stilde: usize,
    /// Bound on |λ̃ − λ| when the pair count is unchanged.
    #[arg(long, default_value_t = 0.3)]
    pub max_perturb: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Directory containing m_u.mtx and k.mtx.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Directory with m_u.mtx, k.mtx, old.spec and optionally target.spec and theta.mtx.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = ThetaArg::Identity)]
    pub theta: ThetaArg,
    /// Weight of the mass term in Rec.MK.
    #[arg(long, default_value_t = 1.0)]
    pub tau1: f64,
    /// Weight of the stiffness term in Rec.MK.
    #[arg(long, default_value_t = 1.0)]
    pub tau2: f64,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub embed: EmbedArgs,
    /// Objective evaluations per optimizer run (default 200·p).
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Sign-flipped restarts after the first run.
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Directory written by `embed` or `optimize` (and holding its inputs).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Largest acceptable relative residual.
    #[arg(long, default_value_t = 1e-10)]
    pub tol_residual: f64,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// 1: same pair count; 2: two pairs replaced by one pair and reals.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub example: u8,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub nu: usize,
    #[arg(long, default_value_t = 40)]
    pub nphi: usize,
    #[arg(long, default_value_t = 0.3)]
    pub max_perturb: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1.0)]
    pub tau1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau2: f64,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
