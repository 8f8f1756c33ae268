//! Analytic stand-in for the flow simulation.
//!
//! Provides smooth, mildly nonlinear head/power/efficiency responses over
//! the design box so the whole pipeline can run without a CFD solver. The
//! closed form, per output, in box-normalized coordinates u ∈ [-1, 1]:
//!
//! ```text
//! f(u) = scale · (1 + Σᵢ lᵢ·uᵢ + Σᵢ qᵢ·uᵢ² + Σ cᵢⱼ·uᵢuⱼ + a·g(Σᵢ wᵢ·uᵢ))
//! ```
//!
//! where g is sin for the head and power curves and tanh for the
//! efficiency curve — the single non-quadratic interaction per output.
//! With the amplitude `a` scaled to zero every response is an exact
//! quadratic in the raw variables. The dominant coefficients sit on `D2`,
//! `b2` and `beta2` so those three lead any sensitivity ranking; the
//! remaining variables carry small linear terms. Optional multiplicative
//! Gaussian noise is drawn per call index from a seeded stream, emulating
//! solver scatter.

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeSpec, Dataset};
use crate::design::{DesignSpace, DutyPoint};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Head, shaft power and efficiency at one design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpResponse<T> {
    /// m
    pub head: T,
    /// kW
    pub power: T,
    /// %
    pub efficiency: T,
}

/// Shape of the single non-quadratic interaction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InteractionKind {
    /// Saturating ridge tanh(w·u).
    Ridge,
    /// Oscillatory wave sin(w·u).
    Wave,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OutputSurface<T> {
    scale: T,
    linear: Vec<T>,
    quadratic: Vec<T>,
    cross: Vec<(usize, usize, T)>,
    interaction: InteractionKind,
    interaction_amplitude: T,
    interaction_weights: Vec<T>,
}

impl<T: Scalar> OutputSurface<T> {
    fn eval(&self, u: &[T], interaction_scale: T) -> T {
        let mut acc = T::one();
        for ((&l, &q), &x) in self.linear.iter().zip(&self.quadratic).zip(u) {
            acc = acc + l * x + q * x * x;
        }
        for &(i, j, c) in &self.cross {
            acc = acc + c * u[i] * u[j];
        }
        let mut arg = T::zero();
        for (&w, &x) in self.interaction_weights.iter().zip(u) {
            arg = arg + w * x;
        }
        let bump = match self.interaction {
            InteractionKind::Ridge => arg.tanh(),
            InteractionKind::Wave => arg.sin(),
        };
        acc = acc + interaction_scale * self.interaction_amplitude * bump;
        self.scale * acc
    }
}

/// Deterministic analytic pump response over the duty-derived design box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticPumpOracle<T> {
    variables: Vec<String>,
    mids: Vec<T>,
    halves: Vec<T>,
    head: OutputSurface<T>,
    power: OutputSurface<T>,
    efficiency: OutputSurface<T>,
    /// Relative sigma of the multiplicative response noise; 0 disables it.
    pub noise_sigma: T,
    pub seed: u64,
    ridge_scale: T,
}

impl<T: Scalar> SyntheticPumpOracle<T> {
    pub fn new(duty: &DutyPoint<T>, noise_sigma: T, seed: u64) -> Result<Self> {
        if !(noise_sigma.is_finite() && noise_sigma >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be nonnegative, got {noise_sigma}"
            )));
        }
        let space = DesignSpace::from_duty(duty)?;
        let variables = space.names();
        let mids = space.midpoints();
        let halves: Vec<T> = space
            .variables()
            .iter()
            .map(|v| (v.hi - v.lo) / T::from_f(2.0))
            .collect();

        let idx = |name: &str| variables.iter().position(|v| v == name).unwrap();
        let (d2, b2, beta2) = (idx("D2"), idx("b2"), idx("beta2"));
        let n = variables.len();

        let table = |entries: &[(usize, f64)]| {
            let mut v = vec![T::zero(); n];
            for &(i, c) in entries {
                v[i] = T::from_f(c);
            }
            v
        };
        let minors = |values: [f64; 8]| {
            let order = ["Z", "beta1", "Ds", "Dh", "phi", "theta", "D3", "Y"];
            order
                .iter()
                .zip(values)
                .map(|(name, c)| (idx(name), c))
                .collect::<Vec<_>>()
        };

        // The outlet diameter dominates both characteristic curves, as on
        // a real impeller; the width and blade angle contribute smaller
        // monotone trends. Each curve carries one oscillatory interaction
        // so no quadratic fits it exactly and a handful of samples leaves
        // genuine approximation error.
        let mut head_linear = vec![(d2, 0.24), (b2, 0.045), (beta2, 0.025)];
        head_linear.extend(minors([
            -0.002, 0.0015, 0.002, -0.0015, 0.002, -0.001, 0.002, -0.002,
        ]));
        let head = OutputSurface {
            scale: duty.head,
            linear: table(&head_linear),
            quadratic: table(&[(d2, -0.035), (b2, -0.018), (beta2, -0.012)]),
            cross: vec![
                (d2, b2, T::from_f(0.020)),
                (b2, beta2, T::from_f(0.010)),
            ],
            interaction: InteractionKind::Wave,
            interaction_amplitude: T::from_f(0.03),
            interaction_weights: table(&[(d2, 4.0), (b2, 2.4), (beta2, 1.6)]),
        };

        let mut power_linear = vec![(d2, 0.22), (b2, 0.05), (beta2, 0.03)];
        power_linear.extend(minors([
            0.002, -0.001, 0.0015, 0.001, -0.002, 0.001, 0.0015, 0.002,
        ]));
        let power = OutputSurface {
            scale: if duty.rated_power > T::zero() {
                duty.rated_power
            } else {
                T::from_f(355.0)
            },
            linear: table(&power_linear),
            quadratic: table(&[(d2, 0.030), (b2, 0.010), (beta2, -0.006)]),
            cross: vec![
                (d2, b2, T::from_f(0.010)),
                (d2, beta2, T::from_f(0.006)),
            ],
            interaction: InteractionKind::Wave,
            interaction_amplitude: T::from_f(0.025),
            interaction_weights: table(&[(d2, 3.5), (b2, 1.8), (beta2, -1.1)]),
        };

        let mut eff_linear = vec![(d2, 0.020), (b2, 0.012), (beta2, 0.055)];
        eff_linear.extend(minors([
            -0.0008, 0.0006, -0.0005, -0.0006, 0.0008, -0.0005, 0.0008, -0.0008,
        ]));
        let efficiency = OutputSurface {
            scale: T::from_f(74.0),
            linear: table(&eff_linear),
            quadratic: table(&[(d2, -0.030), (b2, -0.020), (beta2, -0.045)]),
            cross: vec![(d2, beta2, T::from_f(0.010))],
            interaction: InteractionKind::Ridge,
            interaction_amplitude: T::from_f(0.02),
            interaction_weights: table(&[(d2, 0.7), (beta2, 0.9)]),
        };

        Ok(SyntheticPumpOracle {
            variables,
            mids,
            halves,
            head,
            power,
            efficiency,
            noise_sigma,
            seed,
            ridge_scale: T::one(),
        })
    }

    /// Scales the non-quadratic interaction of every output; 0 makes the
    /// oracle an exact quadratic.
    pub fn with_ridge_scale(mut self, scale: T) -> Self {
        self.ridge_scale = scale;
        self
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn output_names() -> Vec<String> {
        vec!["head".into(), "power".into(), "efficiency".into()]
    }

    fn normalized_point(&self, point: &[(&str, T)]) -> Result<Vec<T>> {
        let mut u = vec![T::zero(); self.variables.len()];
        for (name, value) in point {
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("input {name} = {value}")));
            }
            let i = self
                .variables
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::UnknownVariable((*name).to_string()))?;
            u[i] = (*value - self.mids[i]) / self.halves[i];
        }
        Ok(u)
    }

    fn surfaces(&self, u: &[T]) -> PumpResponse<T> {
        PumpResponse {
            head: self.head.eval(u, self.ridge_scale),
            power: self.power.eval(u, self.ridge_scale),
            efficiency: self.efficiency.eval(u, self.ridge_scale),
        }
    }

    /// Noise-free response; absent variables sit at their box midpoints.
    pub fn evaluate(&self, point: &[(&str, T)]) -> Result<PumpResponse<T>> {
        Ok(self.surfaces(&self.normalized_point(point)?))
    }

    /// Response with the call-indexed noise stream applied (when enabled).
    pub fn evaluate_indexed(&self, point: &[(&str, T)], call: u64) -> Result<PumpResponse<T>> {
        let mut r = self.evaluate(point)?;
        if self.noise_sigma > T::zero() {
            let mut stream = rng::stream(self.seed, &format!("oracle.noise.{call}"));
            let mut jitter = || {
                let z = standard_normal(&mut stream);
                T::one() + self.noise_sigma * z
            };
            r.head = r.head * jitter();
            r.power = r.power * jitter();
            r.efficiency = r.efficiency * jitter();
        }
        Ok(r)
    }

    /// Responses ordered like [`SyntheticPumpOracle::output_names`], for a
    /// point ordered like the design-space variables. Noise-free; suited
    /// to sensitivity probing.
    pub fn response_vector(&self, ordered_point: &[T]) -> Result<Vec<T>> {
        if ordered_point.len() != self.variables.len() {
            return Err(Error::DimensionMismatch {
                expected: self.variables.len(),
                got: ordered_point.len(),
            });
        }
        let pairs: Vec<(&str, T)> = self
            .variables
            .iter()
            .map(String::as_str)
            .zip(ordered_point.iter().copied())
            .collect();
        let r = self.evaluate(&pairs)?;
        Ok(vec![r.head, r.power, r.efficiency])
    }

    /// Appends head/power (optionally efficiency) columns for every input
    /// row, using the row index as the noise call index.
    pub fn evaluate_dataset(
        &self,
        inputs: &Dataset<T>,
        include_efficiency: bool,
    ) -> Result<Dataset<T>> {
        let names = inputs.input_names();
        let mut outputs = vec![
            AttributeSpec::output("head", "m"),
            AttributeSpec::output("power", "kW"),
        ];
        if include_efficiency {
            outputs.push(AttributeSpec::output("efficiency", "%"));
        }
        let mut values = Vec::with_capacity(inputs.n_rows());
        for row in 0..inputs.n_rows() {
            let point_values = inputs.input_row(row);
            let pairs: Vec<(&str, T)> = names
                .iter()
                .map(String::as_str)
                .zip(point_values.iter().copied())
                .collect();
            let r = self.evaluate_indexed(&pairs, row as u64)?;
            let mut out = vec![r.head, r.power];
            if include_efficiency {
                out.push(r.efficiency);
            }
            values.push(out);
        }
        inputs.with_outputs(outputs, values)
    }
}

/// Box-Muller draw from the given stream.
fn standard_normal<T: Scalar>(rng: &mut rand_chacha::ChaCha12Rng) -> T {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    T::from_f(z)
}
