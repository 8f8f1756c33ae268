//! Gaussian radial basis surrogate: a weighted sum of isotropic Gaussian
//! kernels centered at selected design points, fitted by least squares on
//! box-normalized inputs.

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NormalizationParams};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, lstsq, squared_distance};
use crate::rng;
use crate::scalar::Scalar;
use crate::surrogate::{Surrogate, SurrogateKind};

/// How the Gaussian width σ is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthRule<T> {
    /// Median of all pairwise center distances (default).
    MedianPairwise,
    /// Mean distance from each center to its nearest neighbor.
    MeanNearestNeighbor,
    Fixed(T),
}

/// Gaussian RBF model for one objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfModel<T> {
    pub input_names: Vec<String>,
    pub objective: String,
    pub norm: NormalizationParams<T>,
    /// Kernel centers in normalized coordinates.
    pub centers: Vec<Vec<T>>,
    pub weights: Vec<T>,
    /// Gaussian width σ.
    pub width: T,
    /// Root-mean-square residual over the training rows.
    pub training_rmse: T,
}

/// Fits the RBF surrogate with `n_centers` kernels.
///
/// When `n_centers` equals the number of rows the centers are the training
/// points themselves (exact interpolation for distinct points); otherwise
/// they come from seeded k-means on the normalized inputs, run on
/// lexicographically sorted rows so the result ignores row order. The
/// weights solve `y = D·w` in the least-squares sense; a 1e-10 ridge is
/// added when `D` is ill-conditioned.
pub fn fit_rbf<T: Scalar>(
    train: &Dataset<T>,
    objective: &str,
    n_centers: usize,
    width_rule: WidthRule<T>,
    seed: u64,
) -> Result<RbfModel<T>> {
    let m = train.n_rows();
    if n_centers == 0 {
        return Err(Error::InvalidParameter("need at least one center".into()));
    }
    if n_centers > m {
        return Err(Error::NotEnoughRows {
            need: n_centers,
            have: m,
        });
    }
    let input_names = train.input_names();
    let norm = NormalizationParams::fit(train).subset(&input_names)?;
    let targets = train.column(objective)?;
    let points: Vec<Vec<T>> = (0..m)
        .map(|r| norm.normalize_vec(&train.input_row(r)))
        .collect::<Result<Vec<_>>>()?;

    let centers = if n_centers == m {
        points.clone()
    } else {
        k_means(&points, n_centers, seed)
    };
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if squared_distance(&centers[i], &centers[j]) <= T::epsilon() {
                return Err(Error::DuplicateCenters);
            }
        }
    }

    let width = match width_rule {
        WidthRule::Fixed(w) => {
            if !(w.is_finite() && w > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "fixed width must be positive, got {w}"
                )));
            }
            w
        }
        WidthRule::MedianPairwise => median_pairwise_distance(&centers),
        WidthRule::MeanNearestNeighbor => mean_nearest_neighbor_distance(&centers),
    };

    let kernel_rows: Vec<Vec<T>> = points
        .iter()
        .map(|p| kernel_row(p, &centers, width))
        .collect();
    let design = Matrix::from_rows(&kernel_rows)?;
    let weights = solve_with_optional_ridge(&design, &targets, &centers)?;

    let mut sse = T::zero();
    for (row, &y) in kernel_rows.iter().zip(&targets) {
        let mut pred = T::zero();
        for (k, w) in row.iter().zip(&weights) {
            pred = pred + *k * *w;
        }
        let d = pred - y;
        sse = sse + d * d;
    }
    let training_rmse = (sse / T::from_count(m)).sqrt();

    Ok(RbfModel {
        input_names,
        objective: objective.to_string(),
        norm,
        centers,
        weights,
        width,
        training_rmse,
    })
}

fn solve_with_optional_ridge<T: Scalar>(
    design: &Matrix<T>,
    targets: &[T],
    centers: &[Vec<T>],
) -> Result<Vec<T>> {
    let condition_limit = T::from_f(1e8);
    match lstsq(design, targets) {
        Ok(sol) if sol.diag_ratio <= condition_limit => Ok(sol.coefficients),
        Ok(_) | Err(Error::RankDeficient { .. }) => {
            let n = centers.len();
            let ridge = T::from_f(1e-10).sqrt();
            let mut rows: Vec<Vec<T>> = (0..design.nrows())
                .map(|r| design.row(r).to_vec())
                .collect();
            let mut rhs = targets.to_vec();
            for i in 0..n {
                let mut row = vec![T::zero(); n];
                row[i] = ridge;
                rows.push(row);
                rhs.push(T::zero());
            }
            let augmented = Matrix::from_rows(&rows)?;
            Ok(lstsq(&augmented, &rhs)?.coefficients)
        }
        Err(e) => Err(e),
    }
}

fn kernel_row<T: Scalar>(point: &[T], centers: &[Vec<T>], width: T) -> Vec<T> {
    let two_sigma_sq = T::from_f(2.0) * width * width;
    centers
        .iter()
        .map(|c| (-squared_distance(point, c) / two_sigma_sq).exp())
        .collect()
}

fn median_pairwise_distance<T: Scalar>(centers: &[Vec<T>]) -> T {
    let mut distances = Vec::new();
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            distances.push(squared_distance(&centers[i], &centers[j]).sqrt());
        }
    }
    if distances.is_empty() {
        return T::one();
    }
    distances.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mid = distances.len() / 2;
    if distances.len() % 2 == 1 {
        distances[mid]
    } else {
        (distances[mid - 1] + distances[mid]) / T::from_f(2.0)
    }
}

fn mean_nearest_neighbor_distance<T: Scalar>(centers: &[Vec<T>]) -> T {
    if centers.len() < 2 {
        return T::one();
    }
    let mut total = T::zero();
    for (i, c) in centers.iter().enumerate() {
        let mut best = T::infinity();
        for (j, other) in centers.iter().enumerate() {
            if i != j {
                best = best.min(squared_distance(c, other));
            }
        }
        total = total + best.sqrt();
    }
    total / T::from_count(centers.len())
}

/// Seeded k-means++ with Lloyd iterations. Input rows are sorted first so
/// the outcome does not depend on their original order; every tie breaks
/// by lowest index.
fn k_means<T: Scalar>(points: &[Vec<T>], k: usize, seed: u64) -> Vec<Vec<T>> {
    let mut sorted: Vec<Vec<T>> = points.to_vec();
    sorted.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            match x.partial_cmp(y) {
                Some(std::cmp::Ordering::Equal) | None => continue,
                Some(order) => return order,
            }
        }
        std::cmp::Ordering::Equal
    });

    let mut stream = rng::stream(seed, "rbf.kmeans");
    let mut centers: Vec<Vec<T>> = Vec::with_capacity(k);
    let first = (stream.random::<f64>() * sorted.len() as f64) as usize;
    centers.push(sorted[first.min(sorted.len() - 1)].clone());
    while centers.len() < k {
        // k-means++: sample proportionally to squared distance.
        let d2: Vec<T> = sorted
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| squared_distance(p, c))
                    .fold(T::infinity(), T::min)
            })
            .collect();
        let total: T = d2.iter().fold(T::zero(), |acc, &v| acc + v);
        if total <= T::zero() {
            // All points coincide with a center; duplicate-center check
            // downstream reports the degenerate data.
            centers.push(sorted[centers.len() % sorted.len()].clone());
            continue;
        }
        let mut target = T::from_f(stream.random::<f64>()) * total;
        let mut chosen = sorted.len() - 1;
        for (i, &v) in d2.iter().enumerate() {
            if target < v {
                chosen = i;
                break;
            }
            target = target - v;
        }
        centers.push(sorted[chosen].clone());
    }

    let dims = sorted[0].len();
    let mut assignment = vec![usize::MAX; sorted.len()];
    for _round in 0..100 {
        let mut changed = false;
        for (p_idx, p) in sorted.iter().enumerate() {
            let mut best = (T::infinity(), 0usize);
            for (c_idx, c) in centers.iter().enumerate() {
                let d = squared_distance(p, c);
                if d < best.0 {
                    best = (d, c_idx);
                }
            }
            if assignment[p_idx] != best.1 {
                assignment[p_idx] = best.1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![T::zero(); dims]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in sorted.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s = *s + *v;
            }
        }
        for (c_idx, center) in centers.iter_mut().enumerate() {
            if counts[c_idx] == 0 {
                // Reseed an empty cluster at the point farthest from its
                // current center.
                let far = sorted
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| {
                        let da = centers_distance(a, center);
                        let db = centers_distance(b, center);
                        da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                *center = sorted[far].clone();
            } else {
                let n = T::from_count(counts[c_idx]);
                for (slot, s) in center.iter_mut().zip(&sums[c_idx]) {
                    *slot = *s / n;
                }
            }
        }
    }
    centers
}

fn centers_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    squared_distance(a, b)
}

impl<T: Scalar> Surrogate<T> for RbfModel<T> {
    fn kind(&self) -> SurrogateKind {
        SurrogateKind::Rbf
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
        let v = self.norm.normalize_vec(x)?;
        let row = kernel_row(&v, &self.centers, self.width);
        let mut acc = T::zero();
        for (k, w) in row.iter().zip(&self.weights) {
            acc = acc + *k * *w;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::AttributeSpec;
    use crate::design::{DesignSpace, DesignVariable, lhs_sample};

    fn space3() -> DesignSpace<f64> {
        DesignSpace::new(
            (0..3)
                .map(|i| DesignVariable {
                    name: format!("x{}", i + 1),
                    lo: 0.0,
                    hi: 1.0,
                    unit: String::new(),
                    ratio_of: None,
                })
                .collect(),
        )
        .unwrap()
    }

    fn smooth_dataset(n: usize, seed: u64) -> Dataset<f64> {
        let points = lhs_sample(&space3(), &space3().names(), n, seed).unwrap();
        let mut attrs: Vec<AttributeSpec> = points.attributes().to_vec();
        attrs.push(AttributeSpec::output("y", ""));
        let rows = points
            .rows()
            .iter()
            .map(|r| {
                let mut row = r.clone();
                row.push((2.0 * r[0]).sin() + r[1] * r[1] - 0.5 * r[2]);
                row
            })
            .collect();
        Dataset::new(attrs, rows).unwrap()
    }

    #[test]
    fn full_center_fit_interpolates_training_points() {
        let data = smooth_dataset(25, 3);
        let model = fit_rbf(&data, "y", 25, WidthRule::MedianPairwise, 0).unwrap();
        let targets = data.column("y").unwrap();
        for (r, &y) in targets.iter().enumerate() {
            let pred = model.predict(&data.input_row(r)).unwrap();
            let scale = y.abs().max(1e-9);
            assert!(
                ((pred - y) / scale).abs() < 1e-6,
                "row {r}: {pred} vs {y}"
            );
        }
    }

    #[test]
    fn reduced_center_fit_reports_finite_training_rmse() {
        let data = smooth_dataset(60, 4);
        let model = fit_rbf(&data, "y", 30, WidthRule::MedianPairwise, 9).unwrap();
        assert_eq!(model.centers.len(), 30);
        assert!(model.training_rmse.is_finite());
        assert!(model.width > 0.0);
    }

    #[test]
    fn single_center_single_sample_weight_equals_target() {
        let data = Dataset::new(
            vec![AttributeSpec::input("x", ""), AttributeSpec::output("y", "")],
            vec![vec![0.4_f64, 3.0]],
        )
        .unwrap();
        let model = fit_rbf(&data, "y", 1, WidthRule::MedianPairwise, 0).unwrap();
        assert!((model.weights[0] - 3.0).abs() < 1e-12);
        assert!((model.predict(&[0.4]).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn prediction_decays_to_zero_far_away() {
        let data = smooth_dataset(12, 5);
        let model = fit_rbf(&data, "y", 12, WidthRule::MedianPairwise, 0).unwrap();
        let far = model.predict(&[1e6, 1e6, 1e6]).unwrap();
        assert!(far.abs() < 1e-30, "far prediction {far}");
    }

    #[test]
    fn predict_matches_direct_summation() {
        let data = smooth_dataset(20, 6);
        let model = fit_rbf(&data, "y", 10, WidthRule::MedianPairwise, 1).unwrap();
        let x = [0.3, 0.7, 0.2];
        let v = model.norm.normalize_vec(&x).unwrap();
        // Independent direct summation of the kernel expansion.
        let mut expected = 0.0;
        for (c, w) in model.centers.iter().zip(&model.weights) {
            let mut d2 = 0.0;
            for (a, b) in v.iter().zip(c) {
                d2 += (a - b) * (a - b);
            }
            expected += w * (-d2 / (2.0 * model.width * model.width)).exp();
        }
        assert!((model.predict(&x).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn kmeans_center_count_and_row_order_invariance() {
        let data = smooth_dataset(40, 7);
        let model = fit_rbf(&data, "y", 8, WidthRule::MedianPairwise, 2).unwrap();
        assert_eq!(model.centers.len(), 8);

        // Reversed row order yields the same centers and near-identical
        // predictions.
        let reversed = {
            let idx: Vec<usize> = (0..data.n_rows()).rev().collect();
            data.select_rows(&idx)
        };
        let model2 = fit_rbf(&reversed, "y", 8, WidthRule::MedianPairwise, 2).unwrap();
        assert_eq!(model.centers, model2.centers);
        let x = [0.25, 0.5, 0.75];
        assert!((model.predict(&x).unwrap() - model2.predict(&x).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn duplicate_points_with_full_centers_error() {
        let data = Dataset::new(
            vec![AttributeSpec::input("x", ""), AttributeSpec::output("y", "")],
            vec![vec![0.4, 3.0], vec![0.4, 2.0], vec![0.9, 1.0]],
        )
        .unwrap();
        assert!(matches!(
            fit_rbf(&data, "y", 3, WidthRule::MedianPairwise, 0),
            Err(Error::DuplicateCenters)
        ));
    }

    #[test]
    fn more_centers_than_rows_error() {
        let data = smooth_dataset(5, 8);
        assert!(matches!(
            fit_rbf(&data, "y", 6, WidthRule::MedianPairwise, 0),
            Err(Error::NotEnoughRows { .. })
        ));
    }

    #[test]
    fn width_rules_produce_positive_widths() {
        let data = smooth_dataset(15, 9);
        for rule in [
            WidthRule::MedianPairwise,
            WidthRule::MeanNearestNeighbor,
            WidthRule::Fixed(0.8),
        ] {
            let model = fit_rbf(&data, "y", 10, rule, 3).unwrap();
            assert!(model.width > 0.0);
        }
        assert!(fit_rbf(&data, "y", 10, WidthRule::Fixed(-1.0), 3).is_err());
    }
}
