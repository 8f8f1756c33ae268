//! Nearest-gap data augmentation: every sample spawns two perturbed
//! copies, so the dataset triples without extra simulation runs.
//!
//! For each value of each attribute (inputs and outputs alike) the bias is
//! the interpolation factor times the smallest distance to any other value
//! in that column. Under the default `PlusMinus` pairing the first copy
//! shifts every attribute by +bias and the second by −bias; `Independent`
//! draws a seeded random sign per attribute for the first copy and negates
//! it for the second. Either way the attribute means are preserved
//! exactly.

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// How per-attribute perturbation signs combine into rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// +bias on every attribute of the first copy, −bias on the second.
    PlusMinus,
    /// Seeded random sign per attribute; the second copy negates them.
    Independent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentConfig<T> {
    /// Fraction of the nearest gap used as the bias (default 0.025).
    pub interpolation_factor: T,
    pub pairing: Pairing,
    /// Seed for the `Independent` pairing signs.
    pub seed: u64,
    /// Permits augmenting an already augmented dataset.
    pub force: bool,
}

impl<T: Scalar> Default for AugmentConfig<T> {
    fn default() -> Self {
        AugmentConfig {
            interpolation_factor: T::from_f(0.025),
            pairing: Pairing::PlusMinus,
            seed: 0,
            force: false,
        }
    }
}

impl<T: Scalar> AugmentConfig<T> {
    fn validate(&self) -> Result<()> {
        let f = self.interpolation_factor;
        if !(f.is_finite() && f >= T::zero() && f < T::from_f(0.5)) {
            return Err(Error::InvalidParameter(format!(
                "interpolation factor must lie in [0, 0.5), got {f}"
            )));
        }
        Ok(())
    }
}

/// Where a generated row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_row: usize,
    /// +1 for the first perturbed copy, -1 for the mirrored one.
    pub sign: i8,
}

/// Original rows followed by all `+` copies, then all `-` copies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentedDataset<T> {
    pub dataset: Dataset<T>,
    /// One entry per generated row, aligned with the rows after the
    /// originals.
    pub provenance: Vec<Provenance>,
}

/// Bias for one value: `IF × min_{j≠index} |values[index] − values[j]|`.
/// Duplicated values give a zero gap and hence zero bias.
pub fn attribute_bias<T: Scalar>(values: &[T], index: usize, interpolation_factor: T) -> Result<T> {
    if values.len() < 2 {
        return Err(Error::NotEnoughRows {
            need: 2,
            have: values.len(),
        });
    }
    if index >= values.len() {
        return Err(Error::InvalidParameter(format!(
            "index {index} out of range for column of {}",
            values.len()
        )));
    }
    let v = values[index];
    let mut gap = T::infinity();
    for (j, other) in values.iter().enumerate() {
        if j != index {
            gap = gap.min((v - *other).abs());
        }
    }
    Ok(interpolation_factor * gap)
}

/// Triples the dataset by adding two perturbed copies of every row.
pub fn augment<T: Scalar>(
    d: &Dataset<T>,
    config: &AugmentConfig<T>,
) -> Result<AugmentedDataset<T>> {
    config.validate()?;
    if d.n_rows() < 2 {
        return Err(Error::NotEnoughRows {
            need: 2,
            have: d.n_rows(),
        });
    }
    if d.is_augmented() && !config.force {
        return Err(Error::AlreadyAugmented);
    }

    let n_rows = d.n_rows();
    let n_attrs = d.attributes().len();

    // Per-attribute, per-row biases over the original columns.
    let mut biases = vec![vec![T::zero(); n_attrs]; n_rows];
    for (a, attr) in d.attributes().iter().enumerate() {
        let column = d.column(&attr.name)?;
        for (r, bias_row) in biases.iter_mut().enumerate() {
            bias_row[a] = attribute_bias(&column, r, config.interpolation_factor)?;
        }
    }

    // Sign of the first copy, per row and attribute.
    let signs: Vec<Vec<T>> = match config.pairing {
        Pairing::PlusMinus => vec![vec![T::one(); n_attrs]; n_rows],
        Pairing::Independent => {
            let mut stream = rng::stream(config.seed, "augment.signs");
            (0..n_rows)
                .map(|_| {
                    (0..n_attrs)
                        .map(|_| {
                            if stream.random::<f64>() < 0.5 {
                                T::one()
                            } else {
                                -T::one()
                            }
                        })
                        .collect()
                })
                .collect()
        }
    };

    let mut rows = d.rows().to_vec();
    let mut provenance = Vec::with_capacity(2 * n_rows);
    for (r, row) in d.rows().iter().enumerate() {
        let generated: Vec<T> = row
            .iter()
            .zip(&biases[r])
            .zip(&signs[r])
            .map(|((&v, &b), &s)| v + s * b)
            .collect();
        rows.push(generated);
        provenance.push(Provenance {
            source_row: r,
            sign: 1,
        });
    }
    for (r, row) in d.rows().iter().enumerate() {
        let generated: Vec<T> = row
            .iter()
            .zip(&biases[r])
            .zip(&signs[r])
            .map(|((&v, &b), &s)| v - s * b)
            .collect();
        rows.push(generated);
        provenance.push(Provenance {
            source_row: r,
            sign: -1,
        });
    }

    let mut dataset = if d.output_names().is_empty() {
        Dataset::inputs_only(d.attributes().to_vec(), rows)?
    } else {
        Dataset::new(d.attributes().to_vec(), rows)?
    };
    for (k, v) in d.metadata() {
        dataset.set_metadata(k, v);
    }
    dataset.set_metadata("augmented", "true");
    Ok(AugmentedDataset {
        dataset,
        provenance,
    })
}
