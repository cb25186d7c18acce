use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use qsd_core::dilation::{build_isometry, complete_to_unitary, decompose_rank1, DEFAULT_RANK_TOL};
use qsd_core::schemes::solve_scheme;
use qsd_core::states::{make_coherent_triple, ProblemSpec};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::files::{write_json, Meta};
use crate::solve::{scheme_config, SchemeName, SchemeParams, SolverParams};

pub const BENCH_SCHEMA: &str = include_str!("../schema/bench.schema.json");

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 2)]
    pub min_qubits: usize,
    #[arg(long, default_value_t = 3)]
    pub max_qubits: usize,
    /// Noise level assumed by the noise-aware schemes.
    #[arg(long, default_value_t = 0.01)]
    pub lambda_eval: f64,
    /// Per-scheme wall-clock budget in seconds; a scheme whose three tasks
    /// exceed it is skipped at larger qubit counts.
    #[arg(long, default_value_t = 600.0)]
    pub budget: f64,
    #[command(flatten)]
    pub solver: SolverParams,
    /// Output file for the timing report; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the report JSON schema and exit.
    #[arg(long)]
    pub print_schema: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Task {
    #[serde(rename = "I")]
    Solve,
    #[serde(rename = "II")]
    Decompose,
    #[serde(rename = "III")]
    Isometry,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingRow {
    pub scheme: SchemeName,
    pub qubits: usize,
    pub task: Task,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedRow {
    pub scheme: SchemeName,
    pub qubits: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub meta: Meta,
    pub lambda_eval: f64,
    pub rows: Vec<TimingRow>,
    pub skipped: Vec<SkippedRow>,
}

/// The three truncated coherent states `α = 1, e^{2πi/3}, e^{4πi/3}` with
/// equal priors.
pub fn bench_problem(qubits: usize) -> CliResult<ProblemSpec> {
    let states = make_coherent_triple(2.0 * std::f64::consts::PI / 3.0, qubits)?;
    Ok(ProblemSpec::from_pure(&states, vec![1.0 / 3.0; 3])?)
}

fn bench_params(lambda_eval: f64) -> SchemeParams {
    SchemeParams {
        lambda_eval,
        ..SchemeParams::default()
    }
}

pub fn run_bench(args: &BenchArgs) -> CliResult<BenchReport> {
    if args.min_qubits == 0 || args.min_qubits > args.max_qubits {
        return Err(CliError::Usage(format!(
            "need 1 <= --min-qubits <= --max-qubits, got {}..{}",
            args.min_qubits, args.max_qubits
        )));
    }
    let settings = args.solver.settings();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut over_budget = BTreeSet::new();
    for qubits in args.min_qubits..=args.max_qubits {
        let spec = bench_problem(qubits)?;
        for name in SchemeName::ALL {
            if over_budget.contains(&name.as_str()) {
                skipped.push(SkippedRow {
                    scheme: name,
                    qubits,
                    reason: "budget exceeded at a smaller size".into(),
                });
                continue;
            }
            let params = bench_params(if name == SchemeName::Uqsd || name == SchemeName::Med {
                0.0
            } else {
                args.lambda_eval
            });
            // Reference distributions are prepared outside the timed region.
            let config = scheme_config(name, &params, &spec, &settings)?;

            let t = Instant::now();
            let sol = match solve_scheme(&spec, &config, &settings) {
                Ok(sol) => sol,
                Err(err) => {
                    skipped.push(SkippedRow {
                        scheme: name,
                        qubits,
                        reason: err.to_string(),
                    });
                    continue;
                }
            };
            let t1 = t.elapsed().as_secs_f64();

            let t = Instant::now();
            let dec = decompose_rank1(&sol.povm, DEFAULT_RANK_TOL)?;
            let t2 = t.elapsed().as_secs_f64();

            let t = Instant::now();
            let dil = build_isometry(&dec)?;
            complete_to_unitary(&dil)?;
            let t3 = t.elapsed().as_secs_f64();

            for (task, seconds) in [(Task::Solve, t1), (Task::Decompose, t2), (Task::Isometry, t3)] {
                rows.push(TimingRow {
                    scheme: name,
                    qubits,
                    task,
                    seconds,
                });
            }
            if t1 + t2 + t3 > args.budget {
                over_budget.insert(name.as_str());
            }
        }
    }
    Ok(BenchReport {
        meta: Meta::new(None, &[("solver_tol", settings.tol), ("rank_tol", DEFAULT_RANK_TOL)]),
        lambda_eval: args.lambda_eval,
        rows,
        skipped,
    })
}

pub fn emit_bench(args: &BenchArgs, report: &BenchReport) -> CliResult<String> {
    if let Some(path) = &args.out {
        write_json(path, report)?;
    }
    Ok(crate::files::to_canonical_json(report))
}
