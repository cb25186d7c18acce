use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qsd_core::metrics::{confidences, joint_distribution, outcome_stats, JointDistribution};
use qsd_core::schemes::{noiseless_uqsd_reference, solve_scheme, FrioBound, Scheme, SchemeConfig, SchemeSolution};
use qsd_core::solver::{SolveStatus, SolverSettings};
use qsd_core::states::ProblemSpec;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::files::{read_json, write_json, Meta, PovmFile, ProblemFile, ReferenceFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Med,
    MedPlus,
    Uqsd,
    Frio,
    Crossqsd,
    FitMinL1,
    FitMinSs,
    FitMeco,
    Hybrid,
}

impl SchemeName {
    pub const ALL: [SchemeName; 9] = [
        SchemeName::Uqsd,
        SchemeName::Med,
        SchemeName::MedPlus,
        SchemeName::Frio,
        SchemeName::Crossqsd,
        SchemeName::FitMinL1,
        SchemeName::FitMinSs,
        SchemeName::FitMeco,
        SchemeName::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeName::Med => "med",
            SchemeName::MedPlus => "med-plus",
            SchemeName::Uqsd => "uqsd",
            SchemeName::Frio => "frio",
            SchemeName::Crossqsd => "crossqsd",
            SchemeName::FitMinL1 => "fit-min-l1",
            SchemeName::FitMinSs => "fit-min-ss",
            SchemeName::FitMeco => "fit-meco",
            SchemeName::Hybrid => "hybrid",
        }
    }

    pub fn needs_reference(self) -> bool {
        matches!(
            self,
            SchemeName::FitMinL1 | SchemeName::FitMinSs | SchemeName::FitMeco | SchemeName::Hybrid
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    AtLeast,
    AtMost,
}

/// Scheme parameters. Unused ones are ignored by schemes that do not take
/// them.
#[derive(Debug, Clone, Args)]
pub struct SchemeParams {
    /// Noise level assumed while solving.
    #[arg(long = "lambda-eval", visible_alias = "lambda", default_value_t = 0.0)]
    pub lambda_eval: f64,
    /// FRIO inconclusive rate.
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    /// FRIO bound direction.
    #[arg(long, value_enum, default_value_t = BoundArg::AtLeast)]
    pub bound: BoundArg,
    /// CrossQSD false-positive bounds: one value for all states or a comma
    /// separated list.
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    pub alpha: Vec<f64>,
    /// CrossQSD false-negative bounds, same format as --alpha.
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    pub beta: Vec<f64>,
    /// Hybrid norm order (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub ell: u8,
    /// Hybrid trade-off weight.
    #[arg(long, default_value_t = 0.3)]
    pub w: f64,
    /// Reference joint distribution for FitQSD and hybrid schemes. Defaults
    /// to the noiseless optimal UQSD distribution.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self {
            lambda_eval: 0.0,
            rate: 0.1,
            bound: BoundArg::AtLeast,
            alpha: vec![0.1],
            beta: vec![0.1],
            ell: 1,
            w: 0.3,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverParams {
    /// Solver stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Solver iteration budget.
    #[arg(long, default_value_t = 200_000)]
    pub max_iters: usize,
}

impl SolverParams {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings::default()
            .with_tol(self.tol)
            .with_max_iters(self.max_iters)
    }
}

fn broadcast(name: &str, values: &[f64], k: usize) -> CliResult<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; k]),
        n if n == k => Ok(values.to_vec()),
        n => Err(CliError::Usage(format!("--{name} needs 1 or {k} values, got {n}"))),
    }
}

/// Builds the scheme configuration, solving for the default reference when
/// one is needed and none was supplied.
pub fn scheme_config(
    name: SchemeName,
    params: &SchemeParams,
    spec: &ProblemSpec,
    settings: &SolverSettings,
) -> CliResult<SchemeConfig> {
    let reference = || -> CliResult<JointDistribution> {
        match &params.reference {
            Some(path) => read_json::<ReferenceFile>(path)?.to_joint(),
            None => Ok(noiseless_uqsd_reference(spec, settings)?),
        }
    };
    let k = spec.num_states();
    let scheme = match name {
        SchemeName::Med => Scheme::Med,
        SchemeName::MedPlus => Scheme::MedPlus,
        SchemeName::Uqsd => Scheme::Uqsd,
        SchemeName::Frio => Scheme::Frio {
            rate: params.rate,
            bound: match params.bound {
                BoundArg::AtLeast => FrioBound::AtLeast,
                BoundArg::AtMost => FrioBound::AtMost,
            },
        },
        SchemeName::Crossqsd => Scheme::CrossQsd {
            alpha: broadcast("alpha", &params.alpha, k)?,
            beta: broadcast("beta", &params.beta, k)?,
        },
        SchemeName::FitMinL1 => Scheme::FitMinLp {
            ell: 1,
            reference: reference()?,
        },
        SchemeName::FitMinSs => Scheme::FitMinLp {
            ell: 2,
            reference: reference()?,
        },
        SchemeName::FitMeco => Scheme::FitMeco {
            reference: reference()?,
        },
        SchemeName::Hybrid => Scheme::Hybrid {
            w: params.w,
            ell: params.ell,
            reference: reference()?,
        },
    };
    Ok(SchemeConfig::new(scheme, params.lambda_eval))
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Problem file (JSON).
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_enum)]
    pub scheme: SchemeName,
    #[command(flatten)]
    pub params: SchemeParams,
    #[command(flatten)]
    pub solver: SolverParams,
    /// Output POVM file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the metrics report to this file.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    pub status: &'static str,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub lambda: f64,
    pub p_succ: f64,
    pub p_err: f64,
    pub p_inc: f64,
    pub error_to_success: f64,
    /// `p_i Tr(E_λ(ρ_i) Π_j)`, inconclusive column last.
    pub joint: Vec<Vec<f64>>,
    /// `p(Π_j | ρ_i)`.
    pub conditional: Vec<Vec<f64>>,
    pub confidence_given_state: Vec<f64>,
    pub confidence_given_outcome: Vec<f64>,
}

pub fn metrics_at(spec: &ProblemSpec, sol: &SchemeSolution, lambda: f64) -> CliResult<Metrics> {
    let jd = joint_distribution(spec, &sol.povm, lambda)?;
    let stats = outcome_stats(&jd);
    let (given_state, given_outcome) = confidences(spec, &sol.povm, lambda)?;
    let cond = jd.conditional(spec.priors());
    Ok(Metrics {
        lambda,
        p_succ: stats.p_succ,
        p_err: stats.p_err,
        p_inc: stats.p_inc,
        error_to_success: stats.error_to_success(),
        joint: jd.rows(),
        conditional: cond.row_iter().map(|r| r.iter().copied().collect()).collect(),
        confidence_given_state: given_state,
        confidence_given_outcome: given_outcome,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub meta: Meta,
    pub scheme: SchemeName,
    pub lambda_eval: f64,
    /// Optimal value of the scheme's own objective.
    pub value: f64,
    pub metrics: Metrics,
    pub solver: SolverReport,
    pub povm_file: PathBuf,
}

pub fn solver_report(sol: &SchemeSolution) -> SolverReport {
    let s = &sol.solution;
    SolverReport {
        status: match s.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIters => "max-iters",
            SolveStatus::Infeasible => "infeasible",
        },
        iterations: s.iterations,
        primal_residual: s.primal_residual,
        dual_residual: s.dual_residual,
        gap: s.gap,
        objective: s.objective,
    }
}

pub fn run_solve(args: &SolveArgs) -> CliResult<SolveReport> {
    let spec = read_json::<ProblemFile>(&args.problem)?.to_spec()?;
    let settings = args.solver.settings();
    let config = scheme_config(args.scheme, &args.params, &spec, &settings)?;
    let sol = solve_scheme(&spec, &config, &settings)?;
    let meta = Meta::new(None, &[("solver_tol", settings.tol)]);
    write_json(&args.out, &PovmFile::from_povm(&sol.povm, Some(meta.clone())))?;
    let report = SolveReport {
        meta,
        scheme: args.scheme,
        lambda_eval: config.lambda_eval,
        value: sol.value,
        metrics: metrics_at(&spec, &sol, config.lambda_eval)?,
        solver: solver_report(&sol),
        povm_file: args.out.clone(),
    };
    if let Some(path) = &args.metrics {
        write_json(path, &report)?;
    }
    Ok(report)
}
