//! Complete quadratic response surface: constant, linear, pure quadratic
//! and pairwise cross terms, fitted by least squares. For d inputs the
//! basis has 1 + 2d + d(d-1)/2 terms (10 for the three key variables).

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NormalizationParams};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, lstsq};
use crate::scalar::Scalar;
use crate::surrogate::{Surrogate, SurrogateKind};

/// Quadratic response surface over the raw design variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsfModel<T> {
    pub input_names: Vec<String>,
    pub objective: String,
    /// Coefficients over the raw basis, ordered
    /// `[1, x_1..x_d, x_1^2..x_d^2, x_i*x_j for i<j]`.
    pub coefficients: Vec<T>,
    /// Input ranges seen during fitting (kept for provenance; prediction
    /// works on raw values).
    pub fit_ranges: NormalizationParams<T>,
}

pub(crate) fn basis_len(d: usize) -> usize {
    1 + 2 * d + d * (d - 1) / 2
}

/// Names of the basis terms, used in rank-deficiency diagnostics.
fn basis_names(input_names: &[String]) -> Vec<String> {
    let mut names = vec!["1".to_string()];
    names.extend(input_names.iter().cloned());
    names.extend(input_names.iter().map(|n| format!("{n}^2")));
    for i in 0..input_names.len() {
        for j in i + 1..input_names.len() {
            names.push(format!("{}*{}", input_names[i], input_names[j]));
        }
    }
    names
}

fn basis_row<T: Scalar>(x: &[T]) -> Vec<T> {
    let d = x.len();
    let mut row = Vec::with_capacity(basis_len(d));
    row.push(T::one());
    row.extend_from_slice(x);
    row.extend(x.iter().map(|&v| v * v));
    for i in 0..d {
        for j in i + 1..d {
            row.push(x[i] * x[j]);
        }
    }
    row
}

/// Fits the quadratic surface for one objective.
///
/// The regression is solved in box-normalized coordinates for conditioning
/// and the coefficients are mapped back to the raw basis exactly, so the
/// stored vector is the least-squares solution of the raw-basis system.
pub fn fit_rsf<T: Scalar>(train: &Dataset<T>, objective: &str) -> Result<RsfModel<T>> {
    let input_names = train.input_names();
    let d = input_names.len();
    let n_basis = basis_len(d);
    if train.n_rows() < n_basis {
        return Err(Error::NotEnoughRows {
            need: n_basis,
            have: train.n_rows(),
        });
    }
    let targets = train.column(objective)?;
    let all_ranges = NormalizationParams::fit(train);
    let norm = all_ranges.subset(&input_names)?;

    let rows: Vec<Vec<T>> = (0..train.n_rows())
        .map(|r| {
            let v = norm.normalize_vec(&train.input_row(r))?;
            Ok(basis_row(&v))
        })
        .collect::<Result<Vec<_>>>()?;
    let design = Matrix::from_rows(&rows)?;
    let solution = lstsq(&design, &targets).map_err(|e| match e {
        Error::RankDeficient { columns } => {
            let names = basis_names(&input_names);
            Error::RankDeficient {
                columns: columns
                    .iter()
                    .map(|c| {
                        c.parse::<usize>()
                            .ok()
                            .and_then(|i| names.get(i).cloned())
                            .unwrap_or_else(|| c.clone())
                    })
                    .collect(),
            }
        }
        other => other,
    })?;

    let coefficients = to_raw_basis(&solution.coefficients, &norm, d);
    Ok(RsfModel {
        input_names,
        objective: objective.to_string(),
        coefficients,
        fit_ranges: norm,
    })
}

/// Exact affine change of basis from normalized coordinates v = αx + β
/// back to the raw monomials.
fn to_raw_basis<T: Scalar>(c: &[T], norm: &NormalizationParams<T>, d: usize) -> Vec<T> {
    let two = T::from_f(2.0);
    let (alphas, betas): (Vec<T>, Vec<T>) = norm
        .entries()
        .iter()
        .map(|e| {
            if e.max == e.min {
                (T::zero(), T::zero())
            } else {
                let alpha = two / (e.max - e.min);
                (alpha, -(e.max + e.min) / (e.max - e.min))
            }
        })
        .unzip();

    let lin = |i: usize| c[1 + i];
    let quad = |i: usize| c[1 + d + i];
    let mut cross_index = vec![vec![0usize; d]; d];
    {
        let mut k = 1 + 2 * d;
        for i in 0..d {
            for j in i + 1..d {
                cross_index[i][j] = k;
                k += 1;
            }
        }
    }
    let cross = |i: usize, j: usize| c[cross_index[i.min(j)][i.max(j)]];

    let mut raw = vec![T::zero(); c.len()];
    // Constant term.
    let mut a0 = c[0];
    for i in 0..d {
        a0 = a0 + lin(i) * betas[i] + quad(i) * betas[i] * betas[i];
    }
    for i in 0..d {
        for j in i + 1..d {
            a0 = a0 + cross(i, j) * betas[i] * betas[j];
        }
    }
    raw[0] = a0;
    // Linear terms.
    for i in 0..d {
        let mut a = lin(i) * alphas[i] + two * quad(i) * alphas[i] * betas[i];
        for j in 0..d {
            if j != i {
                a = a + cross(i, j) * alphas[i] * betas[j];
            }
        }
        raw[1 + i] = a;
    }
    // Pure quadratic terms.
    for i in 0..d {
        raw[1 + d + i] = quad(i) * alphas[i] * alphas[i];
    }
    // Cross terms.
    for i in 0..d {
        for j in i + 1..d {
            raw[cross_index[i][j]] = cross(i, j) * alphas[i] * alphas[j];
        }
    }
    raw
}

impl<T: Scalar> RsfModel<T> {
    pub fn new(
        input_names: Vec<String>,
        objective: String,
        coefficients: Vec<T>,
        fit_ranges: NormalizationParams<T>,
    ) -> Result<Self> {
        let expected = basis_len(input_names.len());
        if coefficients.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("rsf coefficients".into()));
        }
        Ok(RsfModel {
            input_names,
            objective,
            coefficients,
            fit_ranges,
        })
    }
}

impl<T: Scalar> Surrogate<T> for RsfModel<T> {
    fn kind(&self) -> SurrogateKind {
        SurrogateKind::Rsf
    }

    fn objective(&self) -> &str {
        &self.objective
    }

    fn input_names(&self) -> &[String] {
        &self.input_names
    }

    fn predict(&self, x: &[T]) -> Result<T> {
        if x.len() != self.input_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_names.len(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rsf input".into()));
        }
        let basis = basis_row(x);
        let mut acc = T::zero();
        for (b, c) in basis.iter().zip(&self.coefficients) {
            acc = acc + *b * *c;
        }
        Ok(acc)
    }
}
