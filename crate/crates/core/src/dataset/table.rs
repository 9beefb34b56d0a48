//! Count tables, the raw experiment record, stored as JSON or as a CSV
//! laid out like the hyperfine count table.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::NORM_TOL;
use crate::error::{Error, Result};
use crate::linalg::ComplexVector;

/// How a row's input state was prepared. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PreparedState {
    Basis { index: usize },
    Uniform,
    Pair { i: usize, j: usize },
    Amplitudes { re: Vec<f64>, im: Vec<f64> },
}

impl PreparedState {
    pub fn state(&self, dim: usize) -> Result<ComplexVector> {
        let label_ok = |k: usize| (1..=dim).contains(&k);
        let v = match *self {
            PreparedState::Basis { index } => {
                if !label_ok(index) {
                    return Err(Error::Contract(format!("basis state {index} outside 1..={dim}")));
                }
                ComplexVector::basis(dim, index - 1)
            }
            PreparedState::Uniform => {
                if dim == 0 {
                    return Err(Error::Contract("uniform state needs dim >= 1".into()));
                }
                ComplexVector::from_real(&vec![1.0 / (dim as f64).sqrt(); dim])
            }
            PreparedState::Pair { i, j } => {
                if !label_ok(i) || !label_ok(j) || i == j {
                    return Err(Error::Contract(format!(
                        "pair state ({i}, {j}) needs two distinct labels in 1..={dim}"
                    )));
                }
                let mut re = vec![0.0; dim];
                re[i - 1] = FRAC_1_SQRT_2;
                re[j - 1] = FRAC_1_SQRT_2;
                ComplexVector::from_real(&re)
            }
            PreparedState::Amplitudes { ref re, ref im } => {
                let v = ComplexVector::from_parts(re, im)?;
                if v.dim() != dim {
                    return Err(Error::dim("prepared amplitudes", dim, v.dim()));
                }
                v
            }
        };
        if !v.is_normalized(NORM_TOL) {
            return Err(Error::Contract(format!("prepared state has norm {}", v.norm())));
        }
        Ok(v)
    }

    /// Human-readable label, as used in the CSV format.
    pub fn label(&self) -> String {
        match self {
            PreparedState::Basis { index } => format!("State {index}"),
            PreparedState::Uniform => "Uniform Superposition".into(),
            PreparedState::Pair { i, j } => format!("Pair {i} {j}"),
            PreparedState::Amplitudes { .. } => "Amplitudes".into(),
        }
    }

    fn parse_label(label: &str) -> Option<Self> {
        let lower = label.trim().to_ascii_lowercase();
        if lower.starts_with("uniform") {
            return Some(PreparedState::Uniform);
        }
        let numbers: Vec<usize> = lower
            .split(|c: char| !c.is_ascii_digit())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().ok())
            .collect::<Option<_>>()?;
        match numbers.as_slice() {
            [index] => Some(PreparedState::Basis { index: *index }),
            [i, j] => Some(PreparedState::Pair { i: *i, j: *j }),
            _ => None,
        }
    }
}

/// Complex amplitudes split into parts for JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitudes {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Amplitudes {
    pub fn to_vector(&self) -> Result<ComplexVector> {
        ComplexVector::from_parts(&self.re, &self.im)
    }
}

impl From<&ComplexVector> for Amplitudes {
    fn from(v: &ComplexVector) -> Self {
        Self { re: v.re(), im: v.im() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountRow {
    pub prepared: PreparedState,
    pub counts: Vec<u64>,
    pub shots: u64,
    pub t: f64,
    /// Exact output amplitudes, present only for noise-free simulated data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Amplitudes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountTable {
    pub dim: usize,
    pub rows: Vec<CountRow>,
}

impl CountTable {
    /// Checks every row; errors name the 1-based row.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Contract("count table dim must be positive".into()));
        }
        for (r, row) in self.rows.iter().enumerate() {
            let fail = |message: String| Error::InvalidRow { row: r + 1, message };
            if row.counts.len() != self.dim {
                return Err(fail(format!(
                    "expected {} counts, found {}",
                    self.dim,
                    row.counts.len()
                )));
            }
            if row.shots == 0 {
                return Err(fail("shots must be positive".into()));
            }
            let total: u64 = row.counts.iter().sum();
            if total != row.shots {
                return Err(fail(format!("counts sum to {total} but shots is {}", row.shots)));
            }
            if !(row.t >= 0.0) || !row.t.is_finite() {
                return Err(fail(format!("time must be finite and >= 0, got {}", row.t)));
            }
            row.prepared.state(self.dim).map_err(|e| fail(e.to_string()))?;
            if let Some(out) = &row.output {
                let v = out.to_vector().map_err(|e| fail(e.to_string()))?;
                if v.dim() != self.dim || !v.is_normalized(NORM_TOL) {
                    return Err(fail("output amplitudes must be a normalized dim-length vector".into()));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("count table, line {} column {}: {e}", e.line(), e.column()))
        })?;
        table.validate()?;
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    /// Reads a table shaped like the hyperfine count table: a header row,
    /// then one row per prepared state with a label column followed by `n`
    /// count columns. Time and shots are not part of the CSV; when `shots`
    /// is `None` each row's total is used.
    pub fn from_csv(text: &str, t: f64, shots: Option<u64>) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("CSV is empty (expected a header row)".into()))?;
        let dim = header.split(',').count().saturating_sub(1);
        if dim == 0 {
            return Err(Error::Parse("CSV header needs a label column and at least one count column".into()));
        }

        let mut rows = Vec::new();
        for (line_no, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let at = |msg: String| Error::Parse(format!("CSV line {}: {msg}", line_no + 1));
            if fields.len() != dim + 1 {
                return Err(at(format!("expected {} fields, found {}", dim + 1, fields.len())));
            }
            let prepared = PreparedState::parse_label(fields[0])
                .ok_or_else(|| at(format!("unrecognized prepared-state label {:?}", fields[0])))?;
            let counts = fields[1..]
                .iter()
                .map(|f| f.parse::<u64>().map_err(|e| at(format!("count {f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let total = counts.iter().sum();
            rows.push(CountRow {
                prepared,
                counts,
                shots: shots.unwrap_or(total),
                t,
                output: None,
            });
        }
        let table = Self { dim, rows };
        table.validate()?;
        Ok(table)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("Prepared initial state");
        for k in 1..=self.dim {
            out.push_str(&format!(",State {k}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.prepared.label());
            for c in &row.counts {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }

    /// Loads JSON, or CSV when the extension is `.csv` (`t` and `shots` are
    /// only consulted for CSV).
    pub fn read(path: &Path, t: f64, shots: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let parsed = if is_csv {
            Self::from_csv(&text, t, shots)
        } else {
            Self::from_json(&text)
        };
        parsed.map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// True when every prepared state and observed output is real-valued.
    pub fn all_real(&self) -> bool {
        self.rows.iter().all(|r| {
            let prepared_real = match &r.prepared {
                PreparedState::Amplitudes { im, .. } => im.iter().all(|&x| x == 0.0),
                _ => true,
            };
            prepared_real && r.output.as_ref().is_none_or(|o| o.im.iter().all(|&x| x == 0.0))
        })
    }
}
