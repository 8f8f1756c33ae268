//! Bayesian-regularized Levenberg–Marquardt training.
//!
//! The trainer minimizes F = β·E_D + α·E_W with E_D = ½Σe² over all
//! training targets and E_W = ½Σw² over all weights and thresholds, taking
//! damped Gauss–Newton steps. After the gradient state is assembled each
//! epoch, α and β are re-estimated per the MacKay evidence framework:
//!
//! ```text
//! γ = N − α·tr(H⁻¹),  H = β·JᵀJ + α·I
//! α = γ / (2·E_W)
//! β = (n_targets − γ) / (2·E_D)
//! ```
//!
//! A validation set, when supplied, is monitored per epoch and never
//! influences the updates (the regularizer replaces early stopping).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Scalar;

use super::{MlpTopology, MlpWeights, forward_with_hidden, hidden_derivative};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig<T> {
    pub max_epochs: usize,
    /// Initial damping and its schedule: × `mu_increase` on a rejected
    /// step, × `mu_decrease` on an accepted one, stop above `mu_max`.
    pub mu_init: T,
    pub mu_increase: T,
    pub mu_decrease: T,
    pub mu_max: T,
    /// Stop when the objective gradient's infinity norm falls below this.
    pub grad_tol: T,
    /// Stop when the training MSE (normalized targets) reaches this goal;
    /// 0 disables the check.
    pub perf_goal: T,
    /// Epochs trained with α = 0, β = 1 before the evidence updates
    /// engage. Zero re-estimates from the first epoch.
    pub warmup_epochs: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 1000,
            mu_init: T::from_f(1e-3),
            mu_increase: T::from_f(10.0),
            mu_decrease: T::from_f(0.1),
            mu_max: T::from_f(1e10),
            grad_tol: T::from_f(1e-10),
            perf_goal: T::zero(),
            warmup_epochs: 0,
            seed: 0,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::InvalidParameter("max_epochs must be >= 1".into()));
        }
        if !(self.mu_increase > T::one()) {
            return Err(Error::InvalidParameter("mu_increase must be > 1".into()));
        }
        if !(self.mu_decrease < T::one() && self.mu_decrease > T::zero()) {
            return Err(Error::InvalidParameter("mu_decrease must be in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    GradientTolerance,
    PerformanceGoal,
    MuOverflow,
    NonFiniteObjective,
}

/// State recorded at the top of each epoch, before the step is taken.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord<T> {
    pub epoch: usize,
    /// Mean squared error over the normalized training targets.
    pub performance: T,
    /// Regularized objective F = β·E_D + α·E_W.
    pub objective: T,
    pub data_error: T,
    pub weight_error: T,
    /// Infinity norm of ∇F.
    pub gradient_norm: T,
    pub mu: T,
    pub alpha: T,
    pub beta: T,
    /// Effective number of parameters.
    pub gamma: T,
    /// True when the hyperparameter re-estimation raised the objective
    /// relative to the previous accepted value.
    pub objective_rose: bool,
    pub val_performance: Option<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport<T> {
    pub epochs: Vec<EpochRecord<T>>,
    pub stop: StopReason,
    pub final_performance: T,
    /// Pearson correlation between outputs and targets per output, over
    /// the training set.
    pub final_regression: Vec<T>,
}

struct Batch<'a, T> {
    inputs: &'a [Vec<T>],
    targets: &'a [Vec<T>],
}

impl<T: Scalar> Batch<'_, T> {
    fn n_targets(&self) -> usize {
        self.targets.len() * self.targets.first().map_or(0, Vec::len)
    }
}

fn check_batch<T: Scalar>(
    topology: &MlpTopology,
    inputs: &[Vec<T>],
    targets: &[Vec<T>],
) -> Result<()> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::InvalidParameter(format!(
            "batch needs matching nonempty inputs/targets, got {}/{}",
            inputs.len(),
            targets.len()
        )));
    }
    for (x, y) in inputs.iter().zip(targets) {
        if x.len() != topology.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: topology.n_inputs,
                got: x.len(),
            });
        }
        if y.len() != topology.n_outputs {
            return Err(Error::DimensionMismatch {
                expected: topology.n_outputs,
                got: y.len(),
            });
        }
    }
    Ok(())
}

/// Residuals ŷ − t in sample-major, output-minor order.
fn residuals<T: Scalar>(topology: &MlpTopology, weights: &MlpWeights<T>, batch: &Batch<T>) -> Vec<T> {
    let mut r = Vec::with_capacity(batch.n_targets());
    for (x, t) in batch.inputs.iter().zip(batch.targets) {
        let (_, out) = forward_with_hidden(topology, weights, x);
        for (o, target) in out.iter().zip(t) {
            r.push(*o - *target);
        }
    }
    r
}

fn half_squared_sum<T: Scalar>(v: &[T]) -> T {
    let mut acc = T::zero();
    for x in v {
        acc = acc + *x * *x;
    }
    acc / T::from_f(2.0)
}

/// Jacobian ∂(ŷ − t)/∂w, one row per (sample, output) pair, columns in
/// flat parameter order, together with the residual vector.
fn jacobian<T: Scalar>(
    topology: &MlpTopology,
    weights: &MlpWeights<T>,
    batch: &Batch<T>,
) -> (Matrix<T>, Vec<T>) {
    let n = topology.n_inputs;
    let h = topology.n_hidden;
    let n_out = topology.n_outputs;
    let n_params = topology.param_count();
    let hw = h * n;
    let hb = hw + h;
    let ow = hb + n_out * h;

    let mut j = Matrix::zeros(batch.inputs.len() * n_out, n_params);
    let mut r = Vec::with_capacity(batch.n_targets());
    for (s, (x, t)) in batch.inputs.iter().zip(batch.targets).enumerate() {
        let (hidden, out) = forward_with_hidden(topology, weights, x);
        let derivs: Vec<T> = hidden
            .iter()
            .map(|&a| hidden_derivative(topology, a))
            .collect();
        for o in 0..n_out {
            r.push(out[o] - t[o]);
            let row_idx = s * n_out + o;
            for jj in 0..h {
                let back = weights.output_weights[o * h + jj] * derivs[jj];
                for i in 0..n {
                    *j.at_mut(row_idx, jj * n + i) = back * x[i];
                }
                *j.at_mut(row_idx, hw + jj) = back;
                *j.at_mut(row_idx, hb + o * h + jj) = hidden[jj];
            }
            *j.at_mut(row_idx, ow + o) = T::one();
        }
    }
    (j, r)
}

/// Value of the regularized objective β·E_D + α·E_W.
pub fn objective_value<T: Scalar>(
    topology: &MlpTopology,
    weights: &MlpWeights<T>,
    inputs: &[Vec<T>],
    targets: &[Vec<T>],
    alpha: T,
    beta: T,
) -> Result<T> {
    check_batch(topology, inputs, targets)?;
    let batch = Batch { inputs, targets };
    let r = residuals(topology, weights, &batch);
    let e_d = half_squared_sum(&r);
    let e_w = half_squared_sum(&weights.to_flat());
    Ok(beta * e_d + alpha * e_w)
}

/// Analytic gradient of the regularized objective with respect to the
/// flat parameter vector: β·Jᵀe + α·w.
pub fn objective_gradient<T: Scalar>(
    topology: &MlpTopology,
    weights: &MlpWeights<T>,
    inputs: &[Vec<T>],
    targets: &[Vec<T>],
    alpha: T,
    beta: T,
) -> Result<Vec<T>> {
    check_batch(topology, inputs, targets)?;
    let batch = Batch { inputs, targets };
    let (j, r) = jacobian(topology, weights, &batch);
    let flat = weights.to_flat();
    let mut grad = vec![T::zero(); flat.len()];
    for (row_idx, residual) in r.iter().enumerate() {
        let row = j.row(row_idx);
        let scale = beta * *residual;
        if scale == T::zero() {
            continue;
        }
        for (g, v) in grad.iter_mut().zip(row) {
            *g = *g + scale * *v;
        }
    }
    for (g, w) in grad.iter_mut().zip(&flat) {
        *g = *g + alpha * *w;
    }
    Ok(grad)
}

/// Trains the network on normalized data.
pub fn train_bayesian_regularization<T: Scalar>(
    topology: &MlpTopology,
    train_inputs: &[Vec<T>],
    train_targets: &[Vec<T>],
    val: Option<(&[Vec<T>], &[Vec<T>])>,
    config: &TrainConfig<T>,
) -> Result<(MlpWeights<T>, TrainReport<T>)> {
    config.validate()?;
    check_batch(topology, train_inputs, train_targets)?;
    if let Some((vx, vy)) = val {
        if !vx.is_empty() {
            check_batch(topology, vx, vy)?;
        }
    }
    let batch = Batch {
        inputs: train_inputs,
        targets: train_targets,
    };
    let n_targets = batch.n_targets();
    let n_targets_t = T::from_count(n_targets);
    let n_params = topology.param_count();
    let n_params_t = T::from_count(n_params);
    let tiny = T::from_f(1e-30);
    let two = T::from_f(2.0);

    let mut weights = MlpWeights::<T>::init(topology, config.seed);
    let mut flat = weights.to_flat();

    // Hyperparameter bootstrap. Without warmup, a unit-information prior
    // on the initial weights; with warmup the prior stays off (α = 0)
    // while plain Levenberg–Marquardt drives the data error down, and the
    // evidence updates engage afterwards.
    let mut alpha = if config.warmup_epochs == 0 {
        n_params_t / (two * half_squared_sum(&flat).max(tiny))
    } else {
        T::zero()
    };
    let mut beta = T::one();
    let mut gamma = n_params_t;

    let mut mu = config.mu_init;
    let mut epochs: Vec<EpochRecord<T>> = Vec::with_capacity(config.max_epochs);
    let mut previous_objective: Option<T> = None;
    let mut stop = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        let (j, r) = jacobian(topology, &weights, &batch);
        let e_d = half_squared_sum(&r);
        let e_w = half_squared_sum(&flat);
        let mse = two * e_d / n_targets_t;
        if !(e_d.is_finite() && e_w.is_finite()) {
            stop = StopReason::NonFiniteObjective;
            break;
        }

        // Gauss–Newton normal matrix JᵀJ.
        let mut jtj = Matrix::zeros(n_params, n_params);
        for row_idx in 0..j.nrows() {
            jtj.rank1_update(j.row(row_idx), T::one());
        }

        // Evidence re-estimation (skipped during warmup).
        if epoch > config.warmup_epochs {
            let mut hessian = Matrix::zeros(n_params, n_params);
            for a in 0..n_params {
                for b in 0..n_params {
                    *hessian.at_mut(a, b) = beta * jtj.at(a, b);
                }
                *hessian.at_mut(a, a) = hessian.at(a, a) + alpha;
            }
            if alpha > T::zero() {
                if let Ok(chol) = Cholesky::new(&hessian) {
                    gamma = n_params_t - alpha * chol.inverse_trace();
                }
            }
            gamma = gamma.max(T::zero()).min(n_params_t);
            alpha = gamma / (two * e_w.max(tiny));
            let dof = n_targets_t - gamma;
            // When γ saturates the target count the evidence leaves no
            // noise degrees of freedom; the residual itself is then the
            // only noise estimate.
            beta = if dof > T::from_f(1e-3) {
                dof / (two * e_d.max(tiny))
            } else {
                n_targets_t / (two * e_d.max(tiny))
            };
        }

        let objective = beta * e_d + alpha * e_w;
        let objective_rose = previous_objective.map(|p| objective > p).unwrap_or(false);

        // Gradient under the updated hyperparameters.
        let mut grad = vec![T::zero(); n_params];
        for (row_idx, residual) in r.iter().enumerate() {
            let scale = beta * *residual;
            if scale == T::zero() {
                continue;
            }
            for (g, v) in grad.iter_mut().zip(j.row(row_idx)) {
                *g = *g + scale * *v;
            }
        }
        for (g, w) in grad.iter_mut().zip(&flat) {
            *g = *g + alpha * *w;
        }
        let grad_norm = grad.iter().fold(T::zero(), |acc, g| acc.max(g.abs()));

        let val_performance = val.and_then(|(vx, vy)| {
            if vx.is_empty() {
                return None;
            }
            let vb = Batch {
                inputs: vx,
                targets: vy,
            };
            let vr = residuals(topology, &weights, &vb);
            Some(two * half_squared_sum(&vr) / T::from_count(vb.n_targets()))
        });

        epochs.push(EpochRecord {
            epoch,
            performance: mse,
            objective,
            data_error: e_d,
            weight_error: e_w,
            gradient_norm: grad_norm,
            mu,
            alpha,
            beta,
            gamma,
            objective_rose,
            val_performance,
        });

        if config.perf_goal > T::zero() && mse <= config.perf_goal {
            stop = StopReason::PerformanceGoal;
            break;
        }
        if grad_norm <= config.grad_tol {
            stop = StopReason::GradientTolerance;
            break;
        }

        // Levenberg–Marquardt inner loop: raise μ until a step lowers F.
        let mut accepted = false;
        let mut fatal: Option<StopReason> = None;
        while !accepted {
            let mut damped = Matrix::zeros(n_params, n_params);
            for a in 0..n_params {
                for b in 0..n_params {
                    *damped.at_mut(a, b) = beta * jtj.at(a, b);
                }
                *damped.at_mut(a, a) = damped.at(a, a) + alpha + mu;
            }
            let step = match Cholesky::new(&damped) {
                Ok(chol) => {
                    let rhs: Vec<T> = grad.iter().map(|&g| -g).collect();
                    Some(chol.solve(&rhs))
                }
                Err(_) => None,
            };
            if let Some(delta) = step {
                let trial: Vec<T> = flat.iter().zip(&delta).map(|(&w, &d)| w + d).collect();
                let trial_weights = MlpWeights::from_flat(topology, &trial)?;
                let trial_r = residuals(topology, &trial_weights, &batch);
                let trial_obj =
                    beta * half_squared_sum(&trial_r) + alpha * half_squared_sum(&trial);
                if !trial_obj.is_finite() {
                    fatal = Some(StopReason::NonFiniteObjective);
                    break;
                }
                if trial_obj < objective {
                    flat = trial;
                    weights = trial_weights;
                    previous_objective = Some(trial_obj);
                    mu = (mu * config.mu_decrease).max(T::from_f(1e-20));
                    accepted = true;
                    continue;
                }
            }
            mu = mu * config.mu_increase;
            if mu > config.mu_max {
                fatal = Some(StopReason::MuOverflow);
                break;
            }
        }
        if let Some(reason) = fatal {
            stop = reason;
            break;
        }
    }

    let final_r = residuals(topology, &weights, &batch);
    let final_performance = two * half_squared_sum(&final_r) / n_targets_t;
    let final_regression = regression_coefficients(topology, &weights, &batch);

    Ok((
        weights,
        TrainReport {
            epochs,
            stop,
            final_performance,
            final_regression,
        },
    ))
}

/// Pearson correlation between network outputs and targets, per output.
fn regression_coefficients<T: Scalar>(
    topology: &MlpTopology,
    weights: &MlpWeights<T>,
    batch: &Batch<T>,
) -> Vec<T> {
    let m = batch.inputs.len();
    let m_t = T::from_count(m);
    let outputs: Vec<Vec<T>> = batch
        .inputs
        .iter()
        .map(|x| forward_with_hidden(topology, weights, x).1)
        .collect();
    (0..topology.n_outputs)
        .map(|o| {
            let mut mean_p = T::zero();
            let mut mean_t = T::zero();
            for s in 0..m {
                mean_p = mean_p + outputs[s][o];
                mean_t = mean_t + batch.targets[s][o];
            }
            mean_p = mean_p / m_t;
            mean_t = mean_t / m_t;
            let mut cov = T::zero();
            let mut var_p = T::zero();
            let mut var_t = T::zero();
            for s in 0..m {
                let dp = outputs[s][o] - mean_p;
                let dt = batch.targets[s][o] - mean_t;
                cov = cov + dp * dt;
                var_p = var_p + dp * dp;
                var_t = var_t + dt * dt;
            }
            let denom = (var_p * var_t).sqrt();
            if denom > T::zero() { cov / denom } else { T::zero() }
        })
        .collect()
}
