use std::fmt;

use crate::error::{QsdError, Result};
use crate::linalg::{hermitize, identity, min_eigenvalue, CMatrix};

pub const PSD_TOL: f64 = 1e-7;
pub const COMPLETENESS_TOL: f64 = 1e-7;

/// Tag of a POVM element. Conclusive indices are zero-based state indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Conclusive(usize),
    Inconclusive,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Conclusive(i) => write!(f, "conclusive:{}", i + 1),
            Label::Inconclusive => f.write_str("inconclusive"),
        }
    }
}

impl std::str::FromStr for Label {
    type Err = QsdError;

    /// Inverse of `Display`: `conclusive:N` (one-based) or `inconclusive`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "inconclusive" {
            return Ok(Label::Inconclusive);
        }
        s.strip_prefix("conclusive:")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .map(|n| Label::Conclusive(n - 1))
            .ok_or_else(|| QsdError::InvalidPovm(format!("unknown label {s:?}")))
    }
}

/// A measurement: PSD elements summing to the identity, one per label.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<CMatrix>,
    labels: Vec<Label>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>, labels: Vec<Label>) -> Result<Self> {
        let povm = Self::new_unchecked(elements, labels)?;
        povm.validate()?;
        Ok(povm)
    }

    /// Checks shapes and labels only; PSD and completeness are not verified.
    pub fn new_unchecked(elements: Vec<CMatrix>, labels: Vec<Label>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(QsdError::InvalidPovm("no elements".into()));
        };
        let dim = first.nrows();
        for e in &elements {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(QsdError::DimensionMismatch {
                    expected: dim,
                    found: e.nrows().max(e.ncols()),
                });
            }
        }
        if labels.len() != elements.len() {
            return Err(QsdError::InvalidPovm(format!(
                "{} labels for {} elements",
                labels.len(),
                elements.len()
            )));
        }
        let inconclusive = labels.iter().filter(|l| **l == Label::Inconclusive).count();
        if inconclusive > 1 {
            return Err(QsdError::InvalidPovm("more than one inconclusive element".into()));
        }
        let k = labels.len() - inconclusive;
        let mut seen = vec![false; k];
        for l in &labels {
            if let Label::Conclusive(i) = *l {
                if i >= k || seen[i] {
                    return Err(QsdError::InvalidPovm(format!(
                        "conclusive labels must cover 1..={k} exactly once"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(Self {
            dim,
            elements: elements.iter().map(hermitize).collect(),
            labels,
        })
    }

    /// A POVM with only conclusive elements, labelled in order.
    pub fn conclusive(elements: Vec<CMatrix>) -> Result<Self> {
        let labels = (0..elements.len()).map(Label::Conclusive).collect();
        Self::new(elements, labels)
    }

    pub fn validate(&self) -> Result<()> {
        for (e, l) in self.elements.iter().zip(&self.labels) {
            let lo = min_eigenvalue(e)?;
            if lo < -PSD_TOL {
                return Err(QsdError::InvalidPovm(format!(
                    "element {l} not PSD (min eigenvalue {lo:.3e})"
                )));
            }
        }
        let dev = self.completeness_error();
        if dev > COMPLETENESS_TOL {
            return Err(QsdError::InvalidPovm(format!(
                "elements do not sum to identity (||sum - I||_F = {dev:.3e})"
            )));
        }
        Ok(())
    }

    /// `||Σ Π - I||_F`.
    pub fn completeness_error(&self) -> f64 {
        (self.sum() - identity(self.dim)).norm()
    }

    pub fn sum(&self) -> CMatrix {
        self.elements
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, e| acc + e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Number of conclusive elements.
    pub fn num_conclusive(&self) -> usize {
        self.labels.iter().filter(|l| matches!(l, Label::Conclusive(_))).count()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn element(&self, label: Label) -> Option<&CMatrix> {
        self.labels.iter().position(|l| *l == label).map(|i| &self.elements[i])
    }

    pub fn inconclusive(&self) -> Option<&CMatrix> {
        self.element(Label::Inconclusive)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, &CMatrix)> {
        self.labels.iter().copied().zip(self.elements.iter())
    }
}
