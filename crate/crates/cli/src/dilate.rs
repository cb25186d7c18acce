use std::path::PathBuf;

use clap::Args;
use qsd_core::dilation::{
    build_isometry, build_isometry_generic, decompose_rank1, truncate, verify_dilation, verify_dilation_on,
    DEFAULT_RANK_TOL,
};
use serde::Serialize;

use crate::error::CliResult;
use crate::files::{read_json, write_json, IsometryFile, Meta, PovmFile, ProblemFile};

#[derive(Debug, Clone, Args)]
pub struct DilateArgs {
    /// POVM file (JSON).
    #[arg(long)]
    pub povm: PathBuf,
    /// Drop rank-1 terms with weight below this threshold.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Eigenvalues at or below this count as zero.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Build the √Π baseline dilation instead of the minimal one.
    #[arg(long)]
    pub generic: bool,
    /// Number of random states used for verification.
    #[arg(long, default_value_t = 10)]
    pub verify_states: usize,
    /// Seed for the random verification states.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also verify on the states of this problem file.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Output isometry file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct DilateReport {
    pub meta: Meta,
    pub mode: &'static str,
    pub domain_qubits: usize,
    pub target_qubits: usize,
    pub ancilla_qubits: usize,
    pub total_rank: usize,
    /// Per-element ranks after truncation (minimal mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_element_rank: Option<Vec<usize>>,
    pub discarded_terms: usize,
    pub discarded_weight: f64,
    /// Target qubits the √Π baseline would need.
    pub generic_target_qubits: usize,
    pub isometry_error: f64,
    pub max_probability_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem_probability_deviation: Option<f64>,
    pub max_residual: f64,
    pub isometry_file: PathBuf,
}

pub fn run_dilate(args: &DilateArgs) -> CliResult<DilateReport> {
    let povm = read_json::<PovmFile>(&args.povm)?.to_povm()?;
    let generic = build_isometry_generic(&povm)?;
    let (dil, per_element_rank, discarded_terms, discarded_weight) = if args.generic {
        (generic.clone(), None, 0, 0.0)
    } else {
        let full = decompose_rank1(&povm, args.rank_tol)?;
        let cut = truncate(&full, args.delta)?;
        let discarded = full
            .terms
            .iter()
            .filter(|t| t.sigma < args.delta)
            .fold(0.0, |acc, t| acc + t.sigma);
        let mut dil = build_isometry(&cut)?;
        dil.delta = args.delta;
        let dropped = full.total_rank() - cut.total_rank();
        (dil, Some(cut.per_element_rank), dropped, discarded)
    };
    let report = verify_dilation(&dil, &povm, args.verify_states, args.seed)?;
    let problem_probability_deviation = match &args.problem {
        Some(path) => {
            let states = read_json::<ProblemFile>(path)?.density_matrices()?;
            Some(verify_dilation_on(&dil, &povm, &states)?.max_probability_deviation)
        }
        None => None,
    };
    let meta = Meta::new(Some(args.seed), &[("rank_tol", args.rank_tol), ("delta", args.delta)]);
    write_json(&args.out, &IsometryFile::from_dilation(&dil, Some(meta.clone())))?;
    Ok(DilateReport {
        meta,
        mode: if args.generic { "generic" } else { "minimal" },
        domain_qubits: dil.domain_qubits(),
        target_qubits: dil.target_qubits,
        ancilla_qubits: dil.ancilla_qubits(),
        total_rank: dil.total_rank,
        per_element_rank,
        discarded_terms,
        discarded_weight,
        generic_target_qubits: generic.target_qubits,
        isometry_error: report.isometry_error,
        max_probability_deviation: report.max_probability_deviation,
        problem_probability_deviation,
        max_residual: report.max_residual,
        isometry_file: args.out.clone(),
    })
}
