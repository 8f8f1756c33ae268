//! Ordinary Kriging: constant trend plus a Gaussian-correlated process.
//!
//! The correlation between two points is Π_d exp(−θ_d |x_i^d − x_j^d|²)
//! (fixed exponent 2). θ is chosen per dimension by maximizing the
//! concentrated log-likelihood with a seeded multi-start compass search;
//! the trend coefficient and process variance follow by generalized least
//! squares. Inputs are box-normalized before fitting.

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NormalizationParams};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix, dot};
use crate::rng;
use crate::scalar::Scalar;
use crate::surrogate::{Surrogate, SurrogateKind};

#[derive(Debug, Clone)]
pub struct KrgOptions<T> {
    /// Search interval for every θ component (positive; may be degenerate
    /// to pin θ).
    pub theta_bounds: (T, T),
    /// Diagonal regularization of the correlation matrix.
    pub nugget: T,
    /// Multi-start count for the likelihood search.
    pub starts: usize,
    /// Evaluation budget per start.
    pub max_evals: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for KrgOptions<T> {
    fn default() -> Self {
        KrgOptions {
            theta_bounds: (T::from_f(1e-2), T::from_f(1e2)),
            nugget: T::from_f(1e-8),
            starts: 8,
            max_evals: 400,
            seed: 0,
        }
    }
}

/// Fitted ordinary-Kriging model for one objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrgModel<T> {
    pub input_names: Vec<String>,
    pub objective: String,
    pub norm: NormalizationParams<T>,
    /// Correlation rate per (normalized) dimension.
    pub theta: Vec<T>,
    pub nugget: T,
    /// Trend coefficient β̂ (generalized least squares).
    pub beta: T,
    /// Process variance σ̂².
    pub sigma2: T,
    /// Training inputs in normalized coordinates.
    pub centers: Vec<Vec<T>>,
    /// Cached R⁻¹(Y − β̂·1); prediction is β̂ + rᵀ(x)·weights.
    pub residual_weights: Vec<T>,
}

struct GlsFit<T> {
    log_likelihood: T,
    beta: T,
    sigma2: T,
    residual_weights: Vec<T>,
}

fn correlation_matrix<T: Scalar>(points: &[Vec<T>], theta: &[T], nugget: T) -> Matrix<T> {
    let n = points.len();
    let mut r = Matrix::zeros(n, n);
    for i in 0..n {
        *r.at_mut(i, i) = T::one() + nugget;
        for j in 0..i {
            let mut arg = T::zero();
            for ((&a, &b), &t) in points[i].iter().zip(&points[j]).zip(theta) {
                let d = a - b;
                arg = arg + t * d * d;
            }
            let v = (-arg).exp();
            *r.at_mut(i, j) = v;
            *r.at_mut(j, i) = v;
        }
    }
    r
}

fn gls_fit<T: Scalar>(points: &[Vec<T>], targets: &[T], theta: &[T], nugget: T) -> Option<GlsFit<T>> {
    let n = points.len();
    let r = correlation_matrix(points, theta, nugget);
    let chol = Cholesky::new(&r).ok()?;
    let ones = vec![T::one(); n];
    let r_inv_ones = chol.solve(&ones);
    let r_inv_y = chol.solve(targets);
    let denom = dot(&ones, &r_inv_ones);
    if denom <= T::zero() {
        return None;
    }
    let beta = dot(&ones, &r_inv_y) / denom;
    let residual_weights: Vec<T> = r_inv_y
        .iter()
        .zip(&r_inv_ones)
        .map(|(&a, &b)| a - beta * b)
        .collect();
    let mut sse = T::zero();
    for (i, w) in residual_weights.iter().enumerate() {
        sse = sse + (targets[i] - beta) * *w;
    }
    let sigma2 = (sse / T::from_count(n)).max(T::from_f(1e-300));
    let half = T::from_f(0.5);
    let log_likelihood = -half * (T::from_count(n) * sigma2.ln() + chol.log_det());
    if !log_likelihood.is_finite() {
        return None;
    }
    Some(GlsFit {
        log_likelihood,
        beta,
        sigma2,
        residual_weights,
    })
}

/// Fits ordinary Kriging for one objective.
pub fn fit_krg<T: Scalar>(
    train: &Dataset<T>,
    objective: &str,
    options: &KrgOptions<T>,
) -> Result<KrgModel<T>> {
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::NotEnoughRows { need: 2, have: n });
    }
    let (lo, hi) = options.theta_bounds;
    if !(lo.is_finite() && hi.is_finite() && lo > T::zero() && hi >= lo) {
        return Err(Error::InvalidParameter(format!(
            "theta bounds must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if options.nugget < T::zero() {
        return Err(Error::InvalidParameter("nugget must be nonnegative".into()));
    }

    let input_names = train.input_names();
    let norm = NormalizationParams::fit(train).subset(&input_names)?;
    let targets = train.column(objective)?;
    let points: Vec<Vec<T>> = (0..n)
        .map(|r| norm.normalize_vec(&train.input_row(r)))
        .collect::<Result<Vec<_>>>()?;

    for i in 0..n {
        for j in i + 1..n {
            if crate::linalg::squared_distance(&points[i], &points[j]) == T::zero() {
                return Err(Error::InvalidDataset(format!(
                    "duplicate input rows {j} and {i}"
                )));
            }
        }
    }

    let d = input_names.len();
    let theta = maximize_likelihood(&points, &targets, options, d);

    // Final fit at the chosen θ; escalate the nugget on factorization
    // failure up to 1e-6, then give up.
    let mut nugget = options.nugget;
    let fit = loop {
        if let Some(fit) = gls_fit(&points, &targets, &theta, nugget) {
            break fit;
        }
        let next = if nugget == T::zero() {
            T::from_f(1e-12)
        } else {
            nugget * T::from_f(10.0)
        };
        if next > T::from_f(1e-6) {
            return Err(Error::DegenerateCorrelation);
        }
        nugget = next;
    };

    Ok(KrgModel {
        input_names,
        objective: objective.to_string(),
        norm,
        theta,
        nugget,
        beta: fit.beta,
        sigma2: fit.sigma2,
        centers: points,
        residual_weights: fit.residual_weights,
    })
}

/// Multi-start compass search over log10 θ.
fn maximize_likelihood<T: Scalar>(
    points: &[Vec<T>],
    targets: &[T],
    options: &KrgOptions<T>,
    dims: usize,
) -> Vec<T> {
    let lo = options.theta_bounds.0.to_f().log10();
    let hi = options.theta_bounds.1.to_f().log10();
    let to_theta = |log: &[f64]| -> Vec<T> { log.iter().map(|&v| T::from_f(10f64.powf(v))).collect() };
    let objective = |log: &[f64]| -> Option<f64> {
        gls_fit(points, targets, &to_theta(log), options.nugget.max(T::from_f(1e-10)))
            .map(|f| f.log_likelihood.to_f())
    };

    if hi - lo <= 1e-12 {
        return to_theta(&vec![lo; dims]);
    }

    let mut stream = rng::stream(options.seed, "krg.mle");
    let center = vec![(lo + hi) / 2.0; dims];
    let mut starts: Vec<Vec<f64>> = vec![center];
    for _ in 1..options.starts.max(1) {
        starts.push(
            (0..dims)
                .map(|_| lo + stream.random::<f64>() * (hi - lo))
                .collect(),
        );
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let mut current = start;
        let mut value = match objective(&current) {
            Some(v) => v,
            None => continue,
        };
        let mut step = (hi - lo) / 4.0;
        let mut evals = 1usize;
        while step > 1e-3 && evals < options.max_evals {
            let mut improved = false;
            for dim in 0..dims {
                for sign in [1.0, -1.0] {
                    let mut probe = current.clone();
                    probe[dim] = (probe[dim] + sign * step).clamp(lo, hi);
                    if probe[dim] == current[dim] {
                        continue;
                    }
                    evals += 1;
                    if let Some(v) = objective(&probe) {
                        if v > value {
                            value = v;
                            current = probe;
                            improved = true;
                            break;
                        }
                    }
                    if evals >= options.max_evals {
                        break;
                    }
                }
                if evals >= options.max_evals {
                    break;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        match &best {
            Some((bv, _)) if *bv >= value => {}
            _ => best = Some((value, current)),
        }
    }

    match best {
        Some((_, log)) => to_theta(&log),
        // Every start failed to factorize; fall back to the upper bound,
        // where correlations are weakest.
        None => to_theta(&vec![hi; dims]),
    }
}

impl<T: Scalar> KrgModel<T> {
    fn correlation_vector(&self, v: &[T]) -> Vec<T> {
        self.centers
            .iter()
            .map(|c| {
                let mut arg = T::zero();
                for ((&a, &b), &t) in v.iter().zip(c).zip(&self.theta) {
                    let d = a - b;
                    arg = arg + t * d * d;
                }
                (-arg).exp()
            })
            .collect()
    }
}

impl<T: Scalar> Surrogate<T> for KrgModel<T> {
    fn kind(&self) -> SurrogateKind {
        SurrogateKind::Krg
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
        let r = self.correlation_vector(&v);
        Ok(self.beta + dot(&r, &self.residual_weights))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::AttributeSpec;
    use crate::design::{DesignSpace, DesignVariable, lhs_sample};

    fn one_d(rows: Vec<(f64, f64)>) -> Dataset<f64> {
        Dataset::new(
            vec![AttributeSpec::input("x", ""), AttributeSpec::output("y", "")],
            rows.into_iter().map(|(x, y)| vec![x, y]).collect(),
        )
        .unwrap()
    }

    fn fixed_theta_options(theta: f64, nugget: f64) -> KrgOptions<f64> {
        KrgOptions {
            theta_bounds: (theta, theta),
            nugget,
            ..KrgOptions::default()
        }
    }

    #[test]
    fn interpolates_training_points_with_zero_nugget() {
        let space = DesignSpace::new(
            (0..3)
                .map(|i| DesignVariable {
                    name: format!("x{}", i + 1),
                    lo: 0.0,
                    hi: 1.0,
                    unit: String::new(),
                    ratio_of: None,
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        for seed in 0..3u64 {
            let points = lhs_sample(&space, &space.names(), 30, seed).unwrap();
            let mut attrs = points.attributes().to_vec();
            attrs.push(AttributeSpec::output("y", ""));
            let rows: Vec<Vec<f64>> = points
                .rows()
                .iter()
                .map(|r| {
                    let mut row = r.clone();
                    row.push((3.0_f64 * r[0]).sin() + r[1] * r[2]);
                    row
                })
                .collect();
            let data = Dataset::new(attrs, rows).unwrap();
            let options = KrgOptions {
                nugget: 0.0,
                seed,
                ..KrgOptions::default()
            };
            let model = fit_krg(&data, "y", &options).unwrap();
            let targets = data.column("y").unwrap();
            for (r, &y) in targets.iter().enumerate() {
                let pred = model.predict(&data.input_row(r)).unwrap();
                let scale = y.abs().max(1e-9);
                assert!(((pred - y) / scale).abs() < 1e-6, "seed {seed} row {r}");
            }
        }
    }

    #[test]
    fn two_point_prediction_matches_hand_solved_system() {
        // Inputs already spanning [-1, 1], so normalization is identity.
        // With θ = 1 and nugget 0 the 2×2 system solves by hand.
        let data = one_d(vec![(-1.0, 0.0), (1.0, 1.0)]);
        let model = fit_krg(&data, "y", &fixed_theta_options(1.0, 0.0)).unwrap();

        let r12 = (-4.0f64).exp();
        let beta = 0.5;
        // R⁻¹(Y − β1) for Y = [0, 1]: residual [−½, ½] gives
        // weights [−½, ½] / (1 − r12).
        let w = 0.5 / (1.0 - r12);
        assert!((model.beta - beta).abs() < 1e-12);
        assert!((model.residual_weights[0] + w).abs() < 1e-10);
        assert!((model.residual_weights[1] - w).abs() < 1e-10);

        let x = -0.5;
        let expected = beta + (-0.25f64).exp() * (-w) + (-2.25f64).exp() * w;
        let pred = model.predict(&[x]).unwrap();
        assert!((pred - expected).abs() < 1e-10, "{pred} vs {expected}");
        // Midpoint is the trend value by symmetry.
        assert!((model.predict(&[0.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vanishing_theta_flattens_predictions_to_the_gls_mean() {
        // θ far below the nugget: correlations are all ≈ 1 and the
        // predictor collapses onto the trend. β̂ is checked against an
        // independent dense GLS solve of the 3×3 system.
        let xs = [-1.0, 0.0, 1.0];
        let ys = [1.0, 2.0, 6.0];
        let theta = 1e-6;
        let nugget = 1e-2;
        let data = one_d(xs.iter().copied().zip(ys).collect());
        let model = fit_krg(&data, "y", &fixed_theta_options(theta, nugget)).unwrap();

        // Hand GLS: solve R a = 1 and R b = y by elimination, then
        // β̂ = (1ᵀ b)/(1ᵀ a).
        let n = 3;
        let mut r = [[0.0f64; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                let d: f64 = xs[i] - xs[j];
                r[i][j] = (-theta * d * d).exp() + if i == j { nugget } else { 0.0 };
            }
        }
        let solve3 = |m: [[f64; 3]; 3], rhs: [f64; 3]| -> [f64; 3] {
            let mut a = [[0.0f64; 4]; 3];
            for i in 0..3 {
                a[i][..3].copy_from_slice(&m[i]);
                a[i][3] = rhs[i];
            }
            for c in 0..3 {
                let p = (c..3).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
                a.swap(c, p);
                for rr in c + 1..3 {
                    let f = a[rr][c] / a[c][c];
                    for k in c..4 {
                        a[rr][k] -= f * a[c][k];
                    }
                }
            }
            let mut x = [0.0f64; 3];
            for rr in (0..3).rev() {
                let mut acc = a[rr][3];
                for k in rr + 1..3 {
                    acc -= a[rr][k] * x[k];
                }
                x[rr] = acc / a[rr][rr];
            }
            x
        };
        let a = solve3(r, [1.0, 1.0, 1.0]);
        let b = solve3(r, ys);
        let beta_hand = b.iter().sum::<f64>() / a.iter().sum::<f64>();
        assert!((model.beta - beta_hand).abs() < 1e-10, "beta {}", model.beta);

        for x in [-0.7, -0.2, 0.4, 0.9] {
            let pred = model.predict(&[x]).unwrap();
            assert!((pred - model.beta).abs() < 1e-2, "pred {pred} at {x}");
        }
        // Far from the data the correlation vector vanishes entirely.
        let far = model.predict(&[1e4]).unwrap();
        assert!((far - model.beta).abs() < 1e-12);
    }

    #[test]
    fn far_points_revert_to_the_trend() {
        let data = one_d(vec![(-1.0, 4.0), (0.0, 5.5), (1.0, 2.0)]);
        let model = fit_krg(&data, "y", &fixed_theta_options(1.0, 0.0)).unwrap();
        let far = model.predict(&[1e4]).unwrap();
        assert!((far - model.beta).abs() < 1e-12);
    }

    #[test]
    fn cached_prediction_matches_dense_reference_solve() {
        let data = one_d(vec![
            (-1.0, 0.3),
            (-0.4, 1.1),
            (0.1, 0.7),
            (0.6, -0.2),
            (1.0, 0.9),
        ]);
        let theta = 2.5;
        let nugget = 1e-10;
        let model = fit_krg(&data, "y", &fixed_theta_options(theta, nugget)).unwrap();

        // Reference: fresh Gaussian elimination on the full system.
        let xs = [-1.0, -0.4, 0.1, 0.6, 1.0];
        let ys = [0.3, 1.1, 0.7, -0.2, 0.9];
        let n = xs.len();
        let mut a = vec![vec![0.0f64; n + 1]; n];
        for i in 0..n {
            for j in 0..n {
                let d = xs[i] - xs[j];
                a[i][j] = (-theta * d * d).exp() + if i == j { nugget } else { 0.0 };
            }
            a[i][n] = ys[i] - model.beta;
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
        let mut w = vec![0.0f64; n];
        for row in (0..n).rev() {
            let mut acc = a[row][n];
            for k in row + 1..n {
                acc -= a[row][k] * w[k];
            }
            w[row] = acc / a[row][row];
        }

        let x = 0.33;
        let mut expected = model.beta;
        for i in 0..n {
            let d = x - xs[i];
            expected += w[i] * (-theta * d * d).exp();
        }
        let pred = model.predict(&[x]).unwrap();
        assert!((pred - expected).abs() < 1e-12, "{pred} vs {expected}");
    }

    #[test]
    fn rejects_duplicates_and_tiny_sets() {
        let dup = one_d(vec![(0.5, 1.0), (0.5, 2.0), (1.0, 0.0)]);
        assert!(fit_krg(&dup, "y", &KrgOptions::default()).is_err());
        let tiny = one_d(vec![(0.5, 1.0)]);
        assert!(matches!(
            fit_krg(&tiny, "y", &KrgOptions::default()),
            Err(Error::NotEnoughRows { .. })
        ));
    }

    #[test]
    fn mle_recovers_a_sensible_theta_on_smooth_data() {
        let rows: Vec<(f64, f64)> = (0..25)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / 24.0;
                (x, (2.0 * x).sin())
            })
            .collect();
        let data = one_d(rows);
        let options = KrgOptions {
            nugget: 1e-8,
            seed: 5,
            ..KrgOptions::default()
        };
        let model = fit_krg(&data, "y", &options).unwrap();
        // Held-out accuracy on the smooth generator.
        for x in [-0.55, 0.05, 0.85] {
            let pred = model.predict(&[x]).unwrap();
            assert!((pred - (2.0 * x).sin()).abs() < 1e-3, "at {x}: {pred}");
        }
    }
}
