//! Validity measures and the model-comparison harness.
//!
//! Two RMSE flavors are exposed because they differ by a factor of √m and
//! are easy to confuse:
//!
//! * [`normalized_rmse`] — √(Σe²) / (m·ȳ): the sample count divides
//!   *outside* the root. This is the headline validity measure used in the
//!   reports.
//! * [`relative_rmse`] — √(Σe²/m) / ȳ: the conventional mean-normalized
//!   root-mean-square error, provided under its own name to avoid silent
//!   confusion.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::surrogate::Surrogate;

fn check_pair<T: Scalar>(reference: &[T], predicted: &[T]) -> Result<()> {
    if reference.len() != predicted.len() {
        return Err(Error::LengthMismatch(reference.len(), predicted.len()));
    }
    if reference.is_empty() {
        return Err(Error::InvalidParameter("empty metric input".into()));
    }
    Ok(())
}

fn mean<T: Scalar>(values: &[T]) -> T {
    let mut acc = T::zero();
    for v in values {
        acc = acc + *v;
    }
    acc / T::from_count(values.len())
}

fn squared_error_sum<T: Scalar>(reference: &[T], predicted: &[T]) -> T {
    let mut acc = T::zero();
    for (r, p) in reference.iter().zip(predicted) {
        let d = *r - *p;
        acc = acc + d * d;
    }
    acc
}

/// √(Σ(yᵢ − ŷᵢ)²) / (m·ȳ), with the count m outside the root.
pub fn normalized_rmse<T: Scalar>(reference: &[T], predicted: &[T]) -> Result<T> {
    check_pair(reference, predicted)?;
    let y_bar = mean(reference);
    if y_bar == T::zero() {
        return Err(Error::ZeroMeanReference);
    }
    let m = T::from_count(reference.len());
    Ok(squared_error_sum(reference, predicted).sqrt() / (m * y_bar))
}

/// Conventional mean-normalized RMSE: √(Σ(yᵢ − ŷᵢ)²/m) / ȳ.
pub fn relative_rmse<T: Scalar>(reference: &[T], predicted: &[T]) -> Result<T> {
    check_pair(reference, predicted)?;
    let y_bar = mean(reference);
    if y_bar == T::zero() {
        return Err(Error::ZeroMeanReference);
    }
    let m = T::from_count(reference.len());
    Ok((squared_error_sum(reference, predicted) / m).sqrt() / y_bar)
}

/// Coefficient of determination 1 − Σ(y−ŷ)²/Σ(y−ȳ)².
pub fn r_squared<T: Scalar>(reference: &[T], predicted: &[T]) -> Result<T> {
    check_pair(reference, predicted)?;
    if reference.len() < 2 {
        return Err(Error::NotEnoughRows {
            need: 2,
            have: reference.len(),
        });
    }
    let y_bar = mean(reference);
    let mut total = T::zero();
    for r in reference {
        let d = *r - y_bar;
        total = total + d * d;
    }
    if total == T::zero() {
        return Err(Error::ZeroVariance);
    }
    Ok(T::one() - squared_error_sum(reference, predicted) / total)
}

/// Mean absolute deviation of the predictions from the reference.
pub fn mean_absolute_error<T: Scalar>(reference: &[T], predicted: &[T]) -> Result<T> {
    check_pair(reference, predicted)?;
    let mut acc = T::zero();
    for (r, p) in reference.iter().zip(predicted) {
        acc = acc + (*p - *r).abs();
    }
    Ok(acc / T::from_count(reference.len()))
}

/// All four measures plus the per-sample deltas for one model/objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricEntry<T> {
    pub model: String,
    pub objective: String,
    pub normalized_rmse: T,
    pub relative_rmse: T,
    pub r_squared: T,
    pub mean_absolute_error: T,
    /// prediction − reference, one per test row.
    pub deltas: Vec<T>,
}

/// Provenance header carried by every report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub dataset_digest: String,
    pub config_digest: String,
    pub seed: u64,
    /// Derived stream seeds by stage label.
    #[serde(default)]
    pub stage_seeds: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport<T> {
    pub meta: ReportMeta,
    pub entries: Vec<MetricEntry<T>>,
}

impl<T: Scalar + Serialize + for<'de> Deserialize<'de>> ValidationReport<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl<T: Scalar> ValidationReport<T> {
    pub fn entry(&self, model: &str, objective: &str) -> Option<&MetricEntry<T>> {
        self.entries
            .iter()
            .find(|e| e.model == model && e.objective == objective)
    }

    /// Flat CSV with one row per model × objective.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "model,objective,normalized_rmse,relative_rmse,r_squared,mean_absolute_error\n",
        );
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                e.model,
                e.objective,
                e.normalized_rmse.to_f(),
                e.relative_rmse.to_f(),
                e.r_squared.to_f(),
                e.mean_absolute_error.to_f()
            ));
        }
        out
    }
}

/// Evaluates every named predictor on the test set.
///
/// Each predictor declares its own objective; the test dataset must carry
/// that output column and the predictor's input attributes.
pub fn compare<T: Scalar>(
    models: &[(String, &dyn Surrogate<T>)],
    test: &Dataset<T>,
    meta: ReportMeta,
) -> Result<ValidationReport<T>> {
    let mut entries = Vec::with_capacity(models.len());
    let test_inputs = test.input_names();
    for (name, predictor) in models {
        let reference = test.column(predictor.objective())?;
        // Map the predictor's input order onto the test columns.
        let index_map: Vec<usize> = predictor
            .input_names()
            .iter()
            .map(|n| {
                test_inputs
                    .iter()
                    .position(|t| t == n)
                    .ok_or_else(|| Error::UnknownAttribute(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut predicted = Vec::with_capacity(test.n_rows());
        for r in 0..test.n_rows() {
            let row = test.input_row(r);
            let x: Vec<T> = index_map.iter().map(|&i| row[i]).collect();
            predicted.push(predictor.predict(&x)?);
        }
        entries.push(MetricEntry {
            model: name.clone(),
            objective: predictor.objective().to_string(),
            normalized_rmse: normalized_rmse(&reference, &predicted)?,
            relative_rmse: relative_rmse(&reference, &predicted)?,
            r_squared: r_squared(&reference, &predicted)?,
            mean_absolute_error: mean_absolute_error(&reference, &predicted)?,
            deltas: predicted
                .iter()
                .zip(&reference)
                .map(|(&p, &r)| p - r)
                .collect(),
        });
    }
    Ok(ValidationReport { meta, entries })
}
