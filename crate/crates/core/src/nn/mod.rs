//! Single-hidden-layer feedforward network with a linear output layer,
//! trained by Bayesian-regularized Levenberg–Marquardt (see [`train`]).
//!
//! The network operates on `[-1, 1]`-normalized inputs and targets; the
//! fitted [`NnModel`] carries both normalizations and denormalizes its
//! predictions.

mod train;

pub use train::{
    EpochRecord, StopReason, TrainConfig, TrainReport, objective_gradient, objective_value,
    train_bayesian_regularization,
};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NormalizationParams};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;
use crate::surrogate::{Surrogate, SurrogateKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    Tanh,
    Logistic,
}

impl HiddenActivation {
    #[inline]
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            HiddenActivation::Tanh => x.tanh(),
            HiddenActivation::Logistic => T::one() / (T::one() + (-x).exp()),
        }
    }

    /// Derivative expressed through the activation value.
    #[inline]
    fn derivative_from_value<T: Scalar>(self, a: T) -> T {
        match self {
            HiddenActivation::Tanh => T::one() - a * a,
            HiddenActivation::Logistic => a * (T::one() - a),
        }
    }
}

/// Layer sizes and the hidden activation; the output layer is linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpTopology {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
    pub hidden_activation: HiddenActivation,
}

impl MlpTopology {
    pub fn new(n_inputs: usize, n_hidden: usize, n_outputs: usize) -> Result<Self> {
        if n_inputs == 0 || n_hidden == 0 || n_outputs == 0 {
            return Err(Error::InvalidParameter(
                "all layer sizes must be at least 1".into(),
            ));
        }
        Ok(MlpTopology {
            n_inputs,
            n_hidden,
            n_outputs,
            hidden_activation: HiddenActivation::Tanh,
        })
    }

    pub fn with_activation(mut self, a: HiddenActivation) -> Self {
        self.hidden_activation = a;
        self
    }

    /// Total number of weights and thresholds.
    pub fn param_count(&self) -> usize {
        self.n_hidden * (self.n_inputs + 1) + self.n_outputs * (self.n_hidden + 1)
    }
}

/// Connection weights and thresholds of both layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights<T> {
    /// hidden × inputs, row-major.
    pub hidden_weights: Vec<T>,
    pub hidden_bias: Vec<T>,
    /// outputs × hidden, row-major.
    pub output_weights: Vec<T>,
    pub output_bias: Vec<T>,
}

impl<T: Scalar> MlpWeights<T> {
    /// Every weight and threshold i.i.d. uniform in [-1, 1], deterministic
    /// per seed.
    pub fn init(topology: &MlpTopology, seed: u64) -> Self {
        use rand::RngExt;
        let mut stream = rng::stream(seed, "nn.init");
        let mut draw = |n: usize| -> Vec<T> {
            (0..n)
                .map(|_| T::from_f(2.0 * stream.random::<f64>() - 1.0))
                .collect()
        };
        MlpWeights {
            hidden_weights: draw(topology.n_hidden * topology.n_inputs),
            hidden_bias: draw(topology.n_hidden),
            output_weights: draw(topology.n_outputs * topology.n_hidden),
            output_bias: draw(topology.n_outputs),
        }
    }

    pub fn zeros(topology: &MlpTopology) -> Self {
        MlpWeights {
            hidden_weights: vec![T::zero(); topology.n_hidden * topology.n_inputs],
            hidden_bias: vec![T::zero(); topology.n_hidden],
            output_weights: vec![T::zero(); topology.n_outputs * topology.n_hidden],
            output_bias: vec![T::zero(); topology.n_outputs],
        }
    }

    pub fn matches(&self, topology: &MlpTopology) -> bool {
        self.hidden_weights.len() == topology.n_hidden * topology.n_inputs
            && self.hidden_bias.len() == topology.n_hidden
            && self.output_weights.len() == topology.n_outputs * topology.n_hidden
            && self.output_bias.len() == topology.n_outputs
    }

    /// Flat parameter vector ordered
    /// `[hidden_weights, hidden_bias, output_weights, output_bias]`.
    pub fn to_flat(&self) -> Vec<T> {
        let mut flat = Vec::with_capacity(
            self.hidden_weights.len()
                + self.hidden_bias.len()
                + self.output_weights.len()
                + self.output_bias.len(),
        );
        flat.extend_from_slice(&self.hidden_weights);
        flat.extend_from_slice(&self.hidden_bias);
        flat.extend_from_slice(&self.output_weights);
        flat.extend_from_slice(&self.output_bias);
        flat
    }

    pub fn from_flat(topology: &MlpTopology, flat: &[T]) -> Result<Self> {
        if flat.len() != topology.param_count() {
            return Err(Error::DimensionMismatch {
                expected: topology.param_count(),
                got: flat.len(),
            });
        }
        let hw = topology.n_hidden * topology.n_inputs;
        let hb = hw + topology.n_hidden;
        let ow = hb + topology.n_outputs * topology.n_hidden;
        Ok(MlpWeights {
            hidden_weights: flat[..hw].to_vec(),
            hidden_bias: flat[hw..hb].to_vec(),
            output_weights: flat[hb..ow].to_vec(),
            output_bias: flat[ow..].to_vec(),
        })
    }
}

/// Forward pass on normalized inputs.
pub fn forward<T: Scalar>(
    topology: &MlpTopology,
    weights: &MlpWeights<T>,
    x: &[T],
) -> Result<Vec<T>> {
    if x.len() != topology.n_inputs {
        return Err(Error::DimensionMismatch {
            expected: topology.n_inputs,
            got: x.len(),
        });
    }
    let (_, outputs) = forward_with_hidden(topology, weights, x);
    Ok(outputs)
}

/// Forward pass that also exposes the hidden activations (for the
/// Jacobian assembly).
pub(crate) fn forward_with_hidden<T: Scalar>(
    topology: &MlpTopology,
    weights: &MlpWeights<T>,
    x: &[T],
) -> (Vec<T>, Vec<T>) {
    let h = topology.n_hidden;
    let n = topology.n_inputs;
    let mut hidden = vec![T::zero(); h];
    for j in 0..h {
        let mut acc = weights.hidden_bias[j];
        let row = &weights.hidden_weights[j * n..(j + 1) * n];
        for (w, v) in row.iter().zip(x) {
            acc = acc + *w * *v;
        }
        hidden[j] = topology.hidden_activation.apply(acc);
    }
    let mut outputs = vec![T::zero(); topology.n_outputs];
    for o in 0..topology.n_outputs {
        let mut acc = weights.output_bias[o];
        let row = &weights.output_weights[o * h..(o + 1) * h];
        for (w, a) in row.iter().zip(&hidden) {
            acc = acc + *w * *a;
        }
        outputs[o] = acc;
    }
    (hidden, outputs)
}

pub(crate) fn hidden_derivative<T: Scalar>(topology: &MlpTopology, a: T) -> T {
    topology.hidden_activation.derivative_from_value(a)
}

/// Fitted network together with its normalization references.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NnModel<T> {
    pub topology: MlpTopology,
    pub weights: MlpWeights<T>,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub input_norm: NormalizationParams<T>,
    pub output_norm: NormalizationParams<T>,
    pub seed: u64,
    pub config_digest: String,
}

impl<T: Scalar> NnModel<T> {
    /// Denormalized predictions for a raw input point.
    pub fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        let v = self.input_norm.normalize_vec(x)?;
        let out = forward(&self.topology, &self.weights, &v)?;
        self.output_norm.denormalize_vec(&out)
    }

    pub fn predict_batch(&self, rows: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// View on one output as a scalar surrogate.
    pub fn objective_view(&self, objective: &str) -> Result<NnObjective<'_, T>> {
        let index = self
            .output_names
            .iter()
            .position(|n| n == objective)
            .ok_or_else(|| Error::UnknownAttribute(objective.into()))?;
        Ok(NnObjective { model: self, index })
    }
}

/// Scalar-surrogate adapter over one network output.
pub struct NnObjective<'a, T> {
    model: &'a NnModel<T>,
    index: usize,
}

impl<T: Scalar> Surrogate<T> for NnObjective<'_, T> {
    fn kind(&self) -> SurrogateKind {
        SurrogateKind::Nn
    }

    fn objective(&self) -> &str {
        &self.model.output_names[self.index]
    }

    fn input_names(&self) -> &[String] {
        &self.model.input_names
    }

    fn predict(&self, x: &[T]) -> Result<T> {
        Ok(self.model.predict(x)?[self.index])
    }
}

/// Options of the dataset-level fit.
#[derive(Debug, Clone)]
pub struct NnFitOptions<T> {
    pub hidden: usize,
    pub activation: HiddenActivation,
    pub train: TrainConfig<T>,
    /// Digest recorded into the model document.
    pub config_digest: String,
}

impl<T: Scalar> Default for NnFitOptions<T> {
    fn default() -> Self {
        NnFitOptions {
            hidden: 50,
            activation: HiddenActivation::Tanh,
            train: TrainConfig::default(),
            config_digest: String::new(),
        }
    }
}

/// Fits a network mapping the dataset's inputs to the given objectives.
///
/// Inputs and targets are normalized onto [-1, 1] using the training
/// data's ranges. The validation set, when given, is monitored per epoch
/// but never influences the weight updates.
pub fn fit_nn<T: Scalar>(
    train_data: &Dataset<T>,
    val_data: Option<&Dataset<T>>,
    objectives: &[String],
    options: &NnFitOptions<T>,
) -> Result<(NnModel<T>, TrainReport<T>)> {
    if objectives.is_empty() {
        return Err(Error::InvalidParameter("no objectives given".into()));
    }
    let input_names = train_data.input_names();
    let all_ranges = NormalizationParams::fit(train_data);
    let input_norm = all_ranges.subset(&input_names)?;
    let output_norm = all_ranges.subset(objectives)?;

    let normalize = |d: &Dataset<T>| -> Result<(Vec<Vec<T>>, Vec<Vec<T>>)> {
        let mut xs = Vec::with_capacity(d.n_rows());
        let mut ys = Vec::with_capacity(d.n_rows());
        let out_columns: Vec<Vec<T>> = objectives
            .iter()
            .map(|o| d.column(o))
            .collect::<Result<Vec<_>>>()?;
        for r in 0..d.n_rows() {
            xs.push(input_norm.normalize_vec(&d.input_row(r))?);
            let raw: Vec<T> = out_columns.iter().map(|c| c[r]).collect();
            ys.push(output_norm.normalize_vec(&raw)?);
        }
        Ok((xs, ys))
    };

    let (train_x, train_y) = normalize(train_data)?;
    let val_pair = match val_data {
        Some(d) if d.n_rows() > 0 => Some(normalize(d)?),
        _ => None,
    };

    let topology = MlpTopology::new(input_names.len(), options.hidden, objectives.len())?
        .with_activation(options.activation);
    let (weights, report) = train_bayesian_regularization(
        &topology,
        &train_x,
        &train_y,
        val_pair
            .as_ref()
            .map(|(x, y)| (x.as_slice(), y.as_slice())),
        &options.train,
    )?;

    Ok((
        NnModel {
            topology,
            weights,
            input_names,
            output_names: objectives.to_vec(),
            input_norm,
            output_norm,
            seed: options.train.seed,
            config_digest: options.config_digest.clone(),
        },
        report,
    ))
}
