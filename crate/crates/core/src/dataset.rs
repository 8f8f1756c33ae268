//! Tabular sample data shared by every model: attribute schema, CSV I/O,
//! deterministic splits, and min-max normalization.
//!
//! CSV layout: line 1 carries attribute names, line 2 the role tags (`in`
//! or `out`, one per column), an optional third line holds unit labels
//! behind a `#`, and any further `# key: value` lines are metadata. Data
//! lines are comma-separated with `.` as the decimal separator. Values are
//! emitted with 17 significant digits, so a save/load cycle is exact.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Role of an attribute: design variable or observed objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Input,
    Output,
}

/// Name, role and unit of one dataset column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    pub unit: String,
}

impl AttributeSpec {
    pub fn input(name: &str, unit: &str) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Input,
            unit: unit.into(),
        }
    }

    pub fn output(name: &str, unit: &str) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Output,
            unit: unit.into(),
        }
    }
}

/// Ordered samples over a fixed attribute schema.
///
/// Rows are immutable after construction; all values are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    attributes: Vec<AttributeSpec>,
    rows: Vec<Vec<T>>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset, enforcing the schema invariants: unique names, at
    /// least one input and one output, rectangular rows, finite values.
    pub fn new(attributes: Vec<AttributeSpec>, rows: Vec<Vec<T>>) -> Result<Self> {
        let d = Self::build(attributes, rows)?;
        if d.output_indices().is_empty() {
            return Err(Error::InvalidDataset(
                "dataset needs at least one output attribute".into(),
            ));
        }
        Ok(d)
    }

    /// Builds a dataset with input attributes only, e.g. a sampling plan
    /// whose outputs are still to be evaluated.
    pub fn inputs_only(attributes: Vec<AttributeSpec>, rows: Vec<Vec<T>>) -> Result<Self> {
        if attributes.iter().any(|a| a.kind == AttributeKind::Output) {
            return Err(Error::InvalidDataset(
                "inputs_only dataset must not declare output attributes".into(),
            ));
        }
        Self::build(attributes, rows)
    }

    fn build(attributes: Vec<AttributeSpec>, rows: Vec<Vec<T>>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidDataset("dataset has no attributes".into()));
        }
        for (i, a) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate attribute name `{}`",
                    a.name
                )));
            }
        }
        if !attributes.iter().any(|a| a.kind == AttributeKind::Input) {
            return Err(Error::InvalidDataset(
                "dataset needs at least one input attribute".into(),
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != attributes.len() {
                return Err(Error::InvalidDataset(format!(
                    "row {} has {} values for {} attributes",
                    i,
                    row.len(),
                    attributes.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("row {i} contains {v}")));
            }
        }
        Ok(Dataset {
            attributes,
            rows,
            metadata: BTreeMap::new(),
        })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: &str, value: &str) {
        self.metadata.insert(key.into(), value.into());
    }

    /// Marker set by the augmentation pass; guards double augmentation.
    pub fn is_augmented(&self) -> bool {
        self.metadata.get("augmented").map(String::as_str) == Some("true")
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn input_indices(&self) -> Vec<usize> {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind == AttributeKind::Input)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn output_indices(&self) -> Vec<usize> {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind == AttributeKind::Output)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn input_names(&self) -> Vec<String> {
        self.input_indices()
            .into_iter()
            .map(|i| self.attributes[i].name.clone())
            .collect()
    }

    pub fn output_names(&self) -> Vec<String> {
        self.output_indices()
            .into_iter()
            .map(|i| self.attributes[i].name.clone())
            .collect()
    }

    /// Values of one attribute in row order.
    pub fn column(&self, name: &str) -> Result<Vec<T>> {
        let idx = self
            .attribute_index(name)
            .ok_or_else(|| Error::UnknownAttribute(name.into()))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Input values of one row, in attribute order.
    pub fn input_row(&self, row: usize) -> Vec<T> {
        self.input_indices()
            .into_iter()
            .map(|i| self.rows[row][i])
            .collect()
    }

    /// New dataset holding the given rows (indices into `self`).
    pub fn select_rows(&self, indices: &[usize]) -> Dataset<T> {
        Dataset {
            attributes: self.attributes.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            metadata: self.metadata.clone(),
        }
    }

    /// Appends output columns to an inputs-only dataset.
    pub fn with_outputs(
        &self,
        outputs: Vec<AttributeSpec>,
        values: Vec<Vec<T>>,
    ) -> Result<Dataset<T>> {
        if values.len() != self.n_rows() {
            return Err(Error::LengthMismatch(values.len(), self.n_rows()));
        }
        let mut attributes = self.attributes.clone();
        attributes.extend(outputs);
        let rows = self
            .rows
            .iter()
            .zip(values)
            .map(|(row, extra)| {
                let mut r = row.clone();
                r.extend(extra);
                r
            })
            .collect();
        let mut d = Dataset::new(attributes, rows)?;
        d.metadata = self.metadata.clone();
        Ok(d)
    }

    /// SHA-256 of the canonical CSV content (schema, units and rows;
    /// metadata lines excluded).
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_csv_content(false).as_bytes());
        hex_string(&hasher.finalize())
    }

    pub fn to_csv_string(&self) -> String {
        self.to_csv_content(true)
    }

    fn to_csv_content(&self, with_metadata: bool) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self.attributes.iter().map(|a| a.name.as_str()).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        let roles: Vec<&str> = self
            .attributes
            .iter()
            .map(|a| match a.kind {
                AttributeKind::Input => "in",
                AttributeKind::Output => "out",
            })
            .collect();
        out.push_str(&roles.join(","));
        out.push('\n');
        if self.attributes.iter().any(|a| !a.unit.is_empty()) {
            let units: Vec<&str> = self.attributes.iter().map(|a| a.unit.as_str()).collect();
            out.push_str("# ");
            out.push_str(&units.join(","));
            out.push('\n');
        }
        if with_metadata {
            for (k, v) in &self.metadata {
                out.push_str(&format!("# {k}: {v}\n"));
            }
        }
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::parse_csv(text, false)
    }

    /// Parses a CSV that may declare no output columns.
    pub fn from_csv_str_inputs_allowed(text: &str) -> Result<Self> {
        Self::parse_csv(text, true)
    }

    fn parse_csv(text: &str, allow_inputs_only: bool) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Csv {
                line: 1,
                message: "missing header row".into(),
            })?;
        let all_names: Vec<String> = header
            .trim_end_matches('\r')
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        if all_names.iter().any(String::is_empty) {
            return Err(Error::Csv {
                line: 1,
                message: "empty attribute name".into(),
            });
        }
        // Columns whose name starts with `#` are annotations (for example
        // augmentation provenance); they are skipped entirely.
        let keep: Vec<bool> = all_names.iter().map(|n| !n.starts_with('#')).collect();
        let total_columns = all_names.len();
        let names: Vec<String> = all_names
            .into_iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(n, _)| n)
            .collect();
        if names.is_empty() {
            return Err(Error::Csv {
                line: 1,
                message: "no data columns".into(),
            });
        }
        let (_, role_line) = lines.next().ok_or_else(|| Error::Csv {
            line: 2,
            message: "missing role row (`in`/`out` per column)".into(),
        })?;
        let all_roles: Vec<&str> = role_line
            .trim_end_matches('\r')
            .split(',')
            .map(str::trim)
            .collect();
        if all_roles.len() != total_columns {
            return Err(Error::Csv {
                line: 2,
                message: format!("{} role tags for {} columns", all_roles.len(), total_columns),
            });
        }
        let mut kinds = Vec::with_capacity(names.len());
        for (r, &k) in all_roles.iter().zip(&keep) {
            if !k {
                continue;
            }
            match *r {
                "in" => kinds.push(AttributeKind::Input),
                "out" => kinds.push(AttributeKind::Output),
                other => {
                    return Err(Error::Csv {
                        line: 2,
                        message: format!("role tag must be `in` or `out`, got `{other}`"),
                    });
                }
            }
        }

        let mut units = vec![String::new(); names.len()];
        let mut metadata = BTreeMap::new();
        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut units_seen = false;
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some((key, value)) = comment.split_once(':') {
                    metadata.insert(key.trim().to_string(), value.trim().to_string());
                } else if !units_seen && rows.is_empty() {
                    let parts: Vec<&str> = comment.split(',').map(str::trim).collect();
                    if parts.len() != total_columns {
                        return Err(Error::Csv {
                            line: line_no,
                            message: format!(
                                "{} unit labels for {} columns",
                                parts.len(),
                                total_columns
                            ),
                        });
                    }
                    units = parts
                        .into_iter()
                        .zip(&keep)
                        .filter(|(_, &k)| k)
                        .map(|(u, _)| u.to_string())
                        .collect();
                    units_seen = true;
                }
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != total_columns {
                return Err(Error::Csv {
                    line: line_no,
                    message: format!("ragged row at line {line_no}"),
                });
            }
            let mut row = Vec::with_capacity(names.len());
            for (cell, &k) in cells.iter().zip(&keep) {
                if !k {
                    continue;
                }
                let value: f64 = cell.parse().map_err(|_| Error::Csv {
                    line: line_no,
                    message: format!("non-numeric cell `{cell}`"),
                })?;
                if !value.is_finite() {
                    return Err(Error::Csv {
                        line: line_no,
                        message: format!("non-finite cell `{cell}`"),
                    });
                }
                row.push(T::from_f(value));
            }
            rows.push(row);
        }

        let attributes: Vec<AttributeSpec> = names
            .into_iter()
            .zip(kinds)
            .zip(units)
            .map(|((name, kind), unit)| AttributeSpec { name, kind, unit })
            .collect();
        let mut d = if allow_inputs_only && !attributes.iter().any(|a| a.kind == AttributeKind::Output)
        {
            Dataset::inputs_only(attributes, rows)?
        } else {
            Dataset::new(attributes, rows)?
        };
        d.metadata = metadata;
        Ok(d)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv_str(&text)
    }

    /// Loads a CSV that may declare no output columns (a sampling plan).
    pub fn load_csv_inputs_allowed(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv_str_inputs_allowed(&text)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Splits into train/validation/test by a seeded permutation.
    ///
    /// Validation and test sizes are `round(f · N)`; the remainder goes to
    /// the training partition.
    pub fn split(&self, spec: &SplitSpec) -> Result<(Dataset<T>, Dataset<T>, Dataset<T>)> {
        spec.validate()?;
        let n = self.n_rows();
        if n < 3 {
            return Err(Error::NotEnoughRows { need: 3, have: n });
        }
        let n_val = ((spec.val_fraction * n as f64).round() as usize).min(n);
        let n_test = ((spec.test_fraction * n as f64).round() as usize).min(n - n_val);
        let n_train = n - n_val - n_test;

        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = rng::stream(spec.seed, "dataset.split");
        order.shuffle(&mut rng);

        let train = self.select_rows(&order[..n_train]);
        let val = self.select_rows(&order[n_train..n_train + n_val]);
        let test = self.select_rows(&order[n_train + n_val..]);
        Ok((train, val, test))
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// 17 significant digits: enough for an exact f64 round trip.
fn format_value<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.to_f())
}

/// Train/validation/test fractions and the permutation seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64, seed: u64) -> Self {
        SplitSpec {
            train_fraction: train,
            val_fraction: val,
            test_fraction: test,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [self.train_fraction, self.val_fraction, self.test_fraction];
        if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidSplit("fractions must be nonnegative".into()));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Per-attribute min/max mapping onto `[-1, 1]`.
///
/// Degenerate attributes (min == max) map to the interval midpoint 0 and
/// invert back to their constant value. Out-of-range values extrapolate
/// linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams<T> {
    entries: Vec<NormEntry<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEntry<T> {
    pub name: String,
    pub min: T,
    pub max: T,
}

impl<T: Scalar> NormalizationParams<T> {
    /// Fits per-attribute bounds over every attribute of `d`.
    pub fn fit(d: &Dataset<T>) -> Self {
        let entries = d
            .attributes()
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let mut min = T::infinity();
                let mut max = T::neg_infinity();
                for row in d.rows() {
                    min = min.min(row[idx]);
                    max = max.max(row[idx]);
                }
                if d.n_rows() == 0 {
                    min = T::zero();
                    max = T::zero();
                }
                NormEntry {
                    name: a.name.clone(),
                    min,
                    max,
                }
            })
            .collect();
        NormalizationParams { entries }
    }

    pub fn entries(&self) -> &[NormEntry<T>] {
        &self.entries
    }

    /// Restriction to a subset of attributes, in the given order.
    pub fn subset(&self, names: &[String]) -> Result<Self> {
        let entries = names
            .iter()
            .map(|n| {
                self.entries
                    .iter()
                    .find(|e| &e.name == n)
                    .cloned()
                    .ok_or_else(|| Error::UnknownAttribute(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NormalizationParams { entries })
    }

    fn entry(&self, name: &str) -> Result<&NormEntry<T>> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::UnknownAttribute(name.into()))
    }

    pub fn normalize_value(&self, name: &str, v: T) -> Result<T> {
        let e = self.entry(name)?;
        Ok(normalize_one(v, e.min, e.max))
    }

    pub fn denormalize_value(&self, name: &str, v: T) -> Result<T> {
        let e = self.entry(name)?;
        Ok(denormalize_one(v, e.min, e.max))
    }

    /// Normalizes a vector ordered like the params' own entries.
    pub fn normalize_vec(&self, values: &[T]) -> Result<Vec<T>> {
        if values.len() != self.entries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.len(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(&self.entries)
            .map(|(&v, e)| normalize_one(v, e.min, e.max))
            .collect())
    }

    pub fn denormalize_vec(&self, values: &[T]) -> Result<Vec<T>> {
        if values.len() != self.entries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.len(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(&self.entries)
            .map(|(&v, e)| denormalize_one(v, e.min, e.max))
            .collect())
    }

    /// Dataset with every covered attribute mapped onto `[-1, 1]`.
    pub fn apply(&self, d: &Dataset<T>) -> Result<Dataset<T>> {
        let mut rows = d.rows().to_vec();
        for (idx, a) in d.attributes().iter().enumerate() {
            let e = self.entry(&a.name)?;
            for row in &mut rows {
                row[idx] = normalize_one(row[idx], e.min, e.max);
            }
        }
        let mut out = Dataset {
            attributes: d.attributes().to_vec(),
            rows,
            metadata: d.metadata().clone(),
        };
        out.set_metadata("normalized", "true");
        Ok(out)
    }
}

fn normalize_one<T: Scalar>(v: T, min: T, max: T) -> T {
    if max == min {
        T::zero()
    } else {
        let two = T::from_f(2.0);
        -T::one() + two * (v - min) / (max - min)
    }
}

fn denormalize_one<T: Scalar>(v: T, min: T, max: T) -> T {
    if max == min {
        min
    } else {
        let two = T::from_f(2.0);
        min + (v + T::one()) * (max - min) / two
    }
}
