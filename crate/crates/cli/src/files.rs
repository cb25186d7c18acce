//! JSON file formats. Complex numbers are `[re, im]` pairs; floats are
//! written with 17 significant digits so files reread bit-identically.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use num_complex::Complex64;
use qsd_core::dilation::{DilationResult, Outcome};
use qsd_core::linalg::{CMatrix, CVector};
use qsd_core::metrics::JointDistribution;
use qsd_core::povm::{Label, Povm};
use qsd_core::states::{make_benchmark_two_qubit_states, make_coherent_state, DensityMatrix, ProblemSpec, PureState};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{CliError, CliResult};

pub const MAX_QUBITS: usize = 20;

pub type Pair = [f64; 2];
pub type MatrixRows = Vec<Vec<Pair>>;

/// Provenance block embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl Meta {
    pub fn new(seed: Option<u64>, tolerances: &[(&str, f64)]) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            tolerances: tolerances.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Compact JSON with 17-significant-digit floats and a trailing newline.
/// Non-finite floats become `null`.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter);
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    std::fs::write(path, to_canonical_json(value)).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn matrix_to_rows(m: &CMatrix) -> MatrixRows {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn rows_to_matrix(rows: &MatrixRows, nrows: usize, ncols: usize) -> Result<CMatrix, String> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(format!("expected a {nrows}x{ncols} matrix"));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StateEntry {
    Pure {
        amplitudes: Vec<Pair>,
    },
    Density {
        matrix: MatrixRows,
    },
    Coherent {
        alpha: Pair,
    },
    /// Expands to the three benchmark states, one per coefficient.
    #[serde(rename = "benchmark2q")]
    Benchmark2q {
        a: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub num_qubits: usize,
    pub states: Vec<StateEntry>,
    /// Uniform when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<Vec<f64>>,
}

impl ProblemFile {
    pub fn density_matrices(&self) -> CliResult<Vec<DensityMatrix>> {
        let n = self.num_qubits;
        if !(1..=MAX_QUBITS).contains(&n) {
            return Err(CliError::Invalid(format!(
                "num_qubits must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        let dim = 1usize << n;
        let mut out = Vec::new();
        for entry in &self.states {
            match entry {
                StateEntry::Pure { amplitudes } => {
                    let v =
                        CVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|p| Complex64::new(p[0], p[1])));
                    out.push(PureState::new(n, v)?.density());
                }
                StateEntry::Density { matrix } => {
                    let m = rows_to_matrix(matrix, dim, dim).map_err(CliError::Invalid)?;
                    out.push(DensityMatrix::new(m)?);
                }
                StateEntry::Coherent { alpha } => {
                    out.push(make_coherent_state(Complex64::new(alpha[0], alpha[1]), n)?.density());
                }
                StateEntry::Benchmark2q { a } => {
                    if n != 2 {
                        return Err(CliError::Invalid("benchmark2q states need num_qubits = 2".into()));
                    }
                    let coeffs: [f64; 3] = a
                        .as_slice()
                        .try_into()
                        .map_err(|_| CliError::Invalid("benchmark2q needs exactly three coefficients".into()))?;
                    out.extend(make_benchmark_two_qubit_states(coeffs).iter().map(PureState::density));
                }
            }
        }
        Ok(out)
    }

    pub fn to_spec(&self) -> CliResult<ProblemSpec> {
        let states = self.density_matrices()?;
        let priors = match &self.priors {
            Some(p) => p.clone(),
            None => vec![1.0 / states.len().max(1) as f64; states.len()],
        };
        Ok(ProblemSpec::new(states, priors, 0.0)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementEntry {
    pub label: String,
    pub matrix: MatrixRows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmFile {
    pub dim: usize,
    pub elements: Vec<ElementEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

impl PovmFile {
    pub fn from_povm(povm: &Povm, meta: Option<Meta>) -> Self {
        Self {
            dim: povm.dim(),
            elements: povm
                .iter()
                .map(|(label, m)| ElementEntry {
                    label: label.to_string(),
                    matrix: matrix_to_rows(m),
                })
                .collect(),
            meta,
        }
    }

    pub fn to_povm(&self) -> CliResult<Povm> {
        let mut elements = Vec::with_capacity(self.elements.len());
        let mut labels = Vec::with_capacity(self.elements.len());
        for e in &self.elements {
            labels.push(e.label.parse::<Label>()?);
            elements.push(rows_to_matrix(&e.matrix, self.dim, self.dim).map_err(CliError::Invalid)?);
        }
        Ok(Povm::new(elements, labels)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryFile {
    pub domain_dim: usize,
    pub target_qubits: usize,
    pub delta: f64,
    pub outcome_map: Vec<String>,
    pub matrix: MatrixRows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

fn parse_outcome(s: &str) -> CliResult<Outcome> {
    if s == "residual" {
        Ok(Outcome::Residual)
    } else {
        Ok(Outcome::Element(s.parse::<Label>()?))
    }
}

impl IsometryFile {
    pub fn from_dilation(dil: &DilationResult, meta: Option<Meta>) -> Self {
        Self {
            domain_dim: dil.domain_dim,
            target_qubits: dil.target_qubits,
            delta: dil.delta,
            outcome_map: dil.outcome_map.iter().map(Outcome::to_string).collect(),
            matrix: matrix_to_rows(&dil.isometry),
            meta,
        }
    }

    pub fn to_dilation(&self) -> CliResult<DilationResult> {
        if self.target_qubits >= usize::BITS as usize - 1 {
            return Err(CliError::Invalid(format!(
                "target_qubits {} too large",
                self.target_qubits
            )));
        }
        let rows = 1usize << self.target_qubits;
        if self.outcome_map.len() != rows {
            return Err(CliError::Invalid(format!(
                "outcome_map has {} entries for {rows} target indices",
                self.outcome_map.len()
            )));
        }
        if !self.domain_dim.is_power_of_two() || self.domain_dim < 2 || self.domain_dim > rows {
            return Err(CliError::Invalid(format!("invalid domain_dim {}", self.domain_dim)));
        }
        let outcome_map = self
            .outcome_map
            .iter()
            .map(|s| parse_outcome(s))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(DilationResult {
            domain_dim: self.domain_dim,
            total_rank: outcome_map.iter().filter(|o| **o != Outcome::Residual).count(),
            target_qubits: self.target_qubits,
            isometry: rows_to_matrix(&self.matrix, rows, self.domain_dim).map_err(CliError::Invalid)?,
            outcome_map,
            delta: self.delta,
        })
    }
}

/// Joint distribution file used to inject a FitQSD / hybrid reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFile {
    /// `k` rows of `k + 1` joint probabilities, inconclusive column last.
    pub rows: Vec<Vec<f64>>,
}

impl ReferenceFile {
    pub fn to_joint(&self) -> CliResult<JointDistribution> {
        Ok(JointDistribution::from_rows(&self.rows)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_floats_round_trip() {
        let values = vec![
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            1e300,
            0.0,
            f64::MIN_POSITIVE,
            123_456_789.123_456_79,
        ];
        let text = to_canonical_json(&values);
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(to_canonical_json(&back), text);
        assert_eq!(to_canonical_json(&vec![f64::INFINITY]), "[null]\n");
    }

    #[test]
    fn labels_and_outcomes_parse() {
        assert_eq!(parse_outcome("residual").unwrap(), Outcome::Residual);
        assert_eq!(
            parse_outcome("conclusive:3").unwrap(),
            Outcome::Element(Label::Conclusive(2))
        );
        assert!(parse_outcome("other").is_err());
    }

    #[test]
    fn problem_entries_expand() {
        let text = r#"{"num_qubits":2,"states":[{"type":"benchmark2q","a":[0.2,0.5,0.7]}]}"#;
        let file: ProblemFile = serde_json::from_str(text).unwrap();
        let spec = file.to_spec().unwrap();
        assert_eq!(spec.num_states(), 3);
        assert!((spec.priors()[0] - 1.0 / 3.0).abs() < 1e-15);

        let text = r#"{"num_qubits":1,"states":[{"type":"pure","amplitudes":[[1,0],[0,0]]},
            {"type":"density","matrix":[[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}],"priors":[0.25,0.75]}"#;
        let spec: ProblemSpec = serde_json::from_str::<ProblemFile>(text).unwrap().to_spec().unwrap();
        assert_eq!(spec.priors(), &[0.25, 0.75]);

        let bad = r#"{"num_qubits":1,"states":[{"type":"pure","amplitudes":[[1,0],[1,0]]}]}"#;
        assert!(serde_json::from_str::<ProblemFile>(bad).unwrap().to_spec().is_err());
    }
}
