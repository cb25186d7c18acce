use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use qsd_core::dilation::{simulate_measurement, DilationResult, Outcome, OutcomeCounts};
use qsd_core::povm::Label;
use qsd_core::states::ProblemSpec;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::files::{read_json, write_json, IsometryFile, Meta, ProblemFile};

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Isometry file produced by `dilate`.
    #[arg(long)]
    pub isometry: PathBuf,
    /// Problem file supplying the input states and priors.
    #[arg(long)]
    pub problem: PathBuf,
    /// Simulate only this state (one-based); all states by default.
    #[arg(long)]
    pub state: Option<usize>,
    /// Depolarizing noise applied to the input states.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Number of sampled shots; 0 reports exact probabilities only.
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    /// Sampling seed. State `i` (one-based) uses `seed + i - 1`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise sweep `start:end:points[:log|:lin]` (log spacing by default);
    /// writes CSV rows `lambda,p_succ,p_err,p_inc,ratio`.
    #[arg(long)]
    pub lambda_sweep: Option<String>,
    /// Output file (JSON, or CSV in sweep mode); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeRow {
    pub label: String,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateResult {
    /// One-based state index.
    pub state: usize,
    pub seed: u64,
    pub outcomes: Vec<OutcomeRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub meta: Meta,
    pub lambda: f64,
    pub shots: u64,
    pub results: Vec<StateResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub p_succ: f64,
    pub p_err: f64,
    /// Inconclusive plus residual (truncation) probability.
    pub p_inc: f64,
    pub ratio: f64,
}

pub enum SimulateOutput {
    Outcomes(SimulateReport),
    Sweep { rows: Vec<SweepRow>, csv: String },
}

fn load(args: &SimulateArgs) -> CliResult<(DilationResult, ProblemSpec)> {
    let dil = read_json::<IsometryFile>(&args.isometry)?.to_dilation()?;
    let spec = read_json::<ProblemFile>(&args.problem)?.to_spec()?;
    if spec.dim() != dil.domain_dim {
        return Err(qsd_core::QsdError::DimensionMismatch {
            expected: dil.domain_dim,
            found: spec.dim(),
        }
        .into());
    }
    Ok((dil, spec))
}

/// Parses `start:end:points[:log|:lin]`.
pub fn parse_sweep(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("invalid sweep {text:?}; expected start:end:points[:log|:lin]"));
    if parts.len() < 3 || parts.len() > 4 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let end: f64 = parts[1].parse().map_err(|_| bad())?;
    let points: usize = parts[2].parse().map_err(|_| bad())?;
    let log = match parts.get(3) {
        None | Some(&"log") => true,
        Some(&"lin") => false,
        Some(_) => return Err(bad()),
    };
    if points == 0 || !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) || (log && start <= 0.0) {
        return Err(bad());
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    Ok((0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            if log {
                (start.ln() + t * (end.ln() - start.ln())).exp()
            } else {
                start + t * (end - start)
            }
        })
        .map(|v: f64| v.clamp(0.0, 1.0))
        .collect())
}

/// Prior-weighted success, error, and inconclusive rates of the dilated
/// measurement on the depolarized input states.
pub fn sweep_row(dil: &DilationResult, spec: &ProblemSpec, lambda: f64) -> CliResult<SweepRow> {
    let noisy = spec.noisy_states(lambda)?;
    let (mut p_succ, mut p_err, mut p_inc) = (0.0, 0.0, 0.0);
    for (i, (rho, &p)) in noisy.iter().zip(spec.priors()).enumerate() {
        let sim = simulate_measurement(dil, rho, 0, 0)?;
        for (o, q) in sim.outcomes.iter().zip(&sim.probabilities) {
            match o {
                Outcome::Element(Label::Conclusive(j)) if *j == i => p_succ += p * q,
                Outcome::Element(Label::Conclusive(_)) => p_err += p * q,
                _ => p_inc += p * q,
            }
        }
    }
    let ratio = if p_succ <= 1e-15 { f64::INFINITY } else { p_err / p_succ };
    Ok(SweepRow {
        lambda,
        p_succ,
        p_err,
        p_inc,
        ratio,
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda,p_succ,p_err,p_inc,ratio\n");
    for r in rows {
        let ratio = if r.ratio.is_finite() {
            format!("{:.16e}", r.ratio)
        } else {
            "inf".into()
        };
        writeln!(
            out,
            "{:.6e},{:.16e},{:.16e},{:.16e},{ratio}",
            r.lambda, r.p_succ, r.p_err, r.p_inc
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn outcome_rows(sim: &OutcomeCounts) -> Vec<OutcomeRow> {
    sim.outcomes
        .iter()
        .enumerate()
        .map(|(idx, o)| OutcomeRow {
            label: o.to_string(),
            probability: sim.probabilities[idx],
            count: sim.counts.get(idx).copied(),
        })
        .collect()
}

pub fn run_simulate(args: &SimulateArgs) -> CliResult<SimulateOutput> {
    let (dil, spec) = load(args)?;
    if let Some(text) = &args.lambda_sweep {
        let rows = parse_sweep(text)?
            .into_iter()
            .map(|lambda| sweep_row(&dil, &spec, lambda))
            .collect::<CliResult<Vec<_>>>()?;
        let csv = sweep_csv(&rows);
        return Ok(SimulateOutput::Sweep { rows, csv });
    }
    let noisy = spec.noisy_states(args.lambda)?;
    let indices: Vec<usize> = match args.state {
        Some(s) if s >= 1 && s <= noisy.len() => vec![s - 1],
        Some(s) => return Err(CliError::Usage(format!("--state {s} out of range 1..={}", noisy.len()))),
        None => (0..noisy.len()).collect(),
    };
    let results = indices
        .into_iter()
        .map(|i| {
            let seed = args.seed.wrapping_add(i as u64);
            let sim = simulate_measurement(&dil, &noisy[i], args.shots, seed)?;
            Ok(StateResult {
                state: i + 1,
                seed,
                outcomes: outcome_rows(&sim),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(SimulateOutput::Outcomes(SimulateReport {
        meta: Meta::new(Some(args.seed), &[]),
        lambda: args.lambda,
        shots: args.shots,
        results,
    }))
}

/// Writes the result to `--out` (if given) and returns the text for stdout.
pub fn emit_simulate(args: &SimulateArgs, output: &SimulateOutput) -> CliResult<String> {
    match output {
        SimulateOutput::Outcomes(report) => {
            if let Some(path) = &args.out {
                write_json(path, report)?;
            }
            Ok(crate::files::to_canonical_json(report))
        }
        SimulateOutput::Sweep { rows, csv } => match &args.out {
            Some(path) => {
                std::fs::write(path, csv).map_err(|source| CliError::Write {
                    path: path.clone(),
                    source,
                })?;
                #[derive(Serialize)]
                struct Summary<'a> {
                    meta: Meta,
                    points: usize,
                    csv_file: &'a PathBuf,
                }
                Ok(crate::files::to_canonical_json(&Summary {
                    meta: Meta::new(Some(args.seed), &[]),
                    points: rows.len(),
                    csv_file: path,
                }))
            }
            None => Ok(csv.clone()),
        },
    }
}
