//! Design space construction and screening: specific speed, recommended
//! design-variable ranges derived from a duty point, Latin Hypercube
//! sampling, and one-sided sensitivity analysis against a response oracle.

use rand::RngExt;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeSpec, Dataset};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Operating requirement of the pump stage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DutyPoint<T> {
    /// Flow in m³/s.
    pub flow: T,
    /// Head per stage in m.
    pub head: T,
    /// Rotational speed in r/min.
    pub speed: T,
    /// Rated output power in kW (informational).
    pub rated_power: T,
}

impl<T: Scalar> DutyPoint<T> {
    pub fn new(flow_m3_per_s: T, head_m: T, speed_rpm: T, rated_power_kw: T) -> Result<Self> {
        let d = DutyPoint {
            flow: flow_m3_per_s,
            head: head_m,
            speed: speed_rpm,
            rated_power: rated_power_kw,
        };
        d.validate()?;
        Ok(d)
    }

    /// Convenience constructor taking the flow in m³/h.
    pub fn from_flow_m3h(flow_m3h: T, head_m: T, speed_rpm: T, rated_power_kw: T) -> Result<Self> {
        Self::new(flow_m3h_to_m3s(flow_m3h), head_m, speed_rpm, rated_power_kw)
    }

    fn validate(&self) -> Result<()> {
        for (label, v) in [
            ("flow", self.flow),
            ("head", self.head),
            ("speed", self.speed),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "duty point {label} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

pub fn flow_m3h_to_m3s<T: Scalar>(q_m3h: T) -> T {
    q_m3h / T::from_f(3600.0)
}

/// n_s = 3.65 · n · √Q / H^(3/4), with Q in m³/s, n in r/min, H in m.
pub fn specific_speed<T: Scalar>(duty: &DutyPoint<T>) -> T {
    T::from_f(3.65) * duty.speed * duty.flow.sqrt() / duty.head.powf(T::from_f(0.75))
}

/// A variable whose range scales with another variable's sampled value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioBound<T> {
    pub base: String,
    pub lo: T,
    pub hi: T,
}

/// One design variable with resolved closed bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVariable<T> {
    pub name: String,
    pub lo: T,
    pub hi: T,
    pub unit: String,
    /// Present when the bounds are a ratio of another variable; `lo`/`hi`
    /// above are then resolved at that variable's midpoint.
    #[serde(default = "no_ratio", skip_serializing_if = "Option::is_none")]
    pub ratio_of: Option<RatioBound<T>>,
}

fn no_ratio<T>() -> Option<RatioBound<T>> {
    None
}

/// Ordered set of design variables with closed, finite bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace<T> {
    variables: Vec<DesignVariable<T>>,
}

impl<T: Scalar> DesignSpace<T> {
    pub fn new(variables: Vec<DesignVariable<T>>) -> Result<Self> {
        for v in &variables {
            if !(v.lo.is_finite() && v.hi.is_finite() && v.lo < v.hi) {
                return Err(Error::InvalidParameter(format!(
                    "variable {} needs finite bounds with lo < hi, got [{}, {}]",
                    v.name, v.lo, v.hi
                )));
            }
        }
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate design variable `{}`",
                    v.name
                )));
            }
        }
        Ok(DesignSpace { variables })
    }

    /// Recommended ranges for the middle-opening multistage pump variables,
    /// derived from the duty point by speed-coefficient design practice.
    /// Diameters are in meters, angles in degrees. The volute base diameter
    /// `D3` is bounded as a ratio of `D2`, resolved here at `D2`'s midpoint.
    pub fn from_duty(duty: &DutyPoint<T>) -> Result<Self> {
        Self::from_duty_with_d2(duty, None)
    }

    /// Same as [`DesignSpace::from_duty`] but resolving the `D3` ratio
    /// bounds at a supplied `D2` value.
    pub fn from_duty_with_d2(duty: &DutyPoint<T>, d2: Option<T>) -> Result<Self> {
        duty.validate()?;
        let ns = specific_speed(duty);
        let ns_ratio = ns / T::from_f(100.0);
        let cbrt_qn = (duty.flow / duty.speed).powf(T::from_f(1.0 / 3.0));
        let d2_factor = ns_ratio.powf(T::from_f(-0.5)) * cbrt_qn;
        let b2_factor = ns_ratio.powf(T::from_f(5.0 / 6.0)) * cbrt_qn;

        let d2_lo = T::from_f(10.4) * d2_factor;
        let d2_hi = T::from_f(11.1) * d2_factor;
        let d2_ref = d2.unwrap_or((d2_lo + d2_hi) / T::from_f(2.0));
        let d3_ratio = RatioBound {
            base: "D2".to_string(),
            lo: T::from_f(1.03),
            hi: T::from_f(1.06),
        };

        let plain = |name: &str, lo: f64, hi: f64, unit: &str| DesignVariable {
            name: name.to_string(),
            lo: T::from_f(lo),
            hi: T::from_f(hi),
            unit: unit.to_string(),
            ratio_of: None,
        };
        let derived = |name: &str, lo: T, hi: T, unit: &str| DesignVariable {
            name: name.to_string(),
            lo,
            hi,
            unit: unit.to_string(),
            ratio_of: None,
        };

        DesignSpace::new(vec![
            plain("Z", 3.0, 7.0, "-"),
            plain("beta1", 10.0, 35.0, "deg"),
            plain("beta2", 14.0, 24.0, "deg"),
            derived("D2", d2_lo, d2_hi, "m"),
            derived(
                "b2",
                T::from_f(0.85) * b2_factor,
                T::from_f(1.2) * b2_factor,
                "m",
            ),
            derived(
                "Ds",
                T::from_f(12.0) * cbrt_qn,
                T::from_f(15.0) * cbrt_qn,
                "m",
            ),
            derived(
                "Dh",
                T::from_f(8.5) * cbrt_qn,
                T::from_f(11.7) * cbrt_qn,
                "m",
            ),
            plain("phi", 140.0, 180.0, "deg"),
            plain("theta", 18.0, 28.0, "deg"),
            DesignVariable {
                name: "D3".to_string(),
                lo: d3_ratio.lo * d2_ref,
                hi: d3_ratio.hi * d2_ref,
                unit: "m".to_string(),
                ratio_of: Some(d3_ratio),
            },
            plain("Y", 0.8, 2.0, "-"),
        ])
    }

    pub fn variables(&self) -> &[DesignVariable<T>] {
        &self.variables
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&DesignVariable<T>> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.into()))
    }

    pub fn midpoint(&self, name: &str) -> Result<T> {
        let v = self.get(name)?;
        Ok((v.lo + v.hi) / T::from_f(2.0))
    }

    /// Midpoints of every variable, in declaration order.
    pub fn midpoints(&self) -> Vec<T> {
        self.variables
            .iter()
            .map(|v| (v.lo + v.hi) / T::from_f(2.0))
            .collect()
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(&self.variables)?)
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let variables: Vec<DesignVariable<T>> = serde_json::from_str(text)?;
        DesignSpace::new(variables)
    }
}

/// Latin Hypercube sample over a subset of the space's variables.
///
/// Every variable's range is cut into `count` equal-width bins holding
/// exactly one sample each; the position inside a bin is uniform and the
/// pairing across dimensions is a seeded permutation. Variables with ratio
/// bounds are stratified in ratio space and scaled by the base variable's
/// sampled value row-wise (or its midpoint when the base is not sampled).
pub fn lhs_sample<T: Scalar>(
    space: &DesignSpace<T>,
    subset: &[String],
    count: usize,
    seed: u64,
) -> Result<Dataset<T>> {
    if subset.is_empty() {
        return Err(Error::InvalidParameter("empty variable subset".into()));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let vars: Vec<&DesignVariable<T>> = subset
        .iter()
        .map(|n| space.get(n))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = rng::stream(seed, "lhs");
    let n_t = T::from_count(count);
    // Stratified unit-interval columns, one per variable, paired by shuffle.
    let mut unit_columns: Vec<Vec<T>> = Vec::with_capacity(vars.len());
    for _ in &vars {
        let mut column: Vec<T> = (0..count)
            .map(|bin| {
                let u: f64 = rng.random();
                (T::from_count(bin) + T::from_f(u)) / n_t
            })
            .collect();
        column.shuffle(&mut rng);
        unit_columns.push(column);
    }

    let rows: Vec<Vec<T>> = (0..count)
        .map(|r| {
            let mut row = vec![T::zero(); vars.len()];
            for (c, v) in vars.iter().enumerate() {
                let u = unit_columns[c][r];
                row[c] = match &v.ratio_of {
                    Some(ratio) => {
                        let ratio_value = ratio.lo + u * (ratio.hi - ratio.lo);
                        let base = match subset.iter().position(|n| n == &ratio.base) {
                            Some(base_col) => unit_columns[base_col][r]
                                .mul_add(vars[base_col].hi - vars[base_col].lo, vars[base_col].lo),
                            None => space.midpoint(&ratio.base)?,
                        };
                        ratio_value * base
                    }
                    None => v.lo + u * (v.hi - v.lo),
                };
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let attributes = vars
        .iter()
        .map(|v| AttributeSpec::input(&v.name, &v.unit))
        .collect();
    Dataset::inputs_only(attributes, rows)
}

/// Relative response change of each design variable under a one-sided
/// forward perturbation, for every oracle output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityResult<T> {
    pub outputs: Vec<String>,
    pub entries: Vec<SensitivityEntry<T>>,
    /// Variable names sorted by the aggregate |ε| descending.
    pub ranking: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityEntry<T> {
    pub variable: String,
    /// One ε per oracle output, same order as `outputs`.
    pub epsilon: Vec<T>,
    /// Set when the perturbed point had to be clamped to the bounds.
    pub clamped: bool,
}

impl<T: Scalar> SensitivityEntry<T> {
    fn aggregate(&self, indices: &[usize]) -> T {
        indices
            .iter()
            .map(|&i| self.epsilon[i].abs())
            .fold(T::zero(), T::max)
    }
}

#[derive(Debug, Clone)]
pub struct SensitivityOptions<T> {
    /// Forward perturbation ratio applied to each variable (default 2%).
    pub perturbation: T,
    /// Outputs whose |ε| feed the ranking aggregate; `None` means all.
    pub rank_outputs: Option<Vec<String>>,
}

impl<T: Scalar> Default for SensitivityOptions<T> {
    fn default() -> Self {
        SensitivityOptions {
            perturbation: T::from_f(0.02),
            rank_outputs: None,
        }
    }
}

/// One-sided sensitivity screen: ε = ((f₁ − f₀)/f₀) / perturbation, where
/// f₁ is the response after the variable grows by the perturbation ratio
/// and f₀ is the response at the default point (evaluated once).
///
/// The oracle receives points ordered like `space.variables()`. Perturbed
/// points leaving the bounds are clamped and flagged.
pub fn sensitivity<T, F>(
    oracle: F,
    output_names: &[String],
    space: &DesignSpace<T>,
    defaults: &[T],
    options: &SensitivityOptions<T>,
) -> Result<SensitivityResult<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let vars = space.variables();
    if defaults.len() != vars.len() {
        return Err(Error::DimensionMismatch {
            expected: vars.len(),
            got: defaults.len(),
        });
    }
    for (v, &x) in vars.iter().zip(defaults) {
        if x < v.lo || x > v.hi {
            return Err(Error::InvalidParameter(format!(
                "default for {} = {x} lies outside [{}, {}]",
                v.name, v.lo, v.hi
            )));
        }
    }
    if !(options.perturbation.is_finite() && options.perturbation > T::zero()) {
        return Err(Error::InvalidParameter(
            "perturbation ratio must be positive".into(),
        ));
    }

    let base = oracle(defaults)?;
    if base.len() != output_names.len() {
        return Err(Error::Oracle(format!(
            "oracle returned {} outputs, expected {}",
            base.len(),
            output_names.len()
        )));
    }
    for (name, &f0) in output_names.iter().zip(&base) {
        if !f0.is_finite() {
            return Err(Error::NonFinite(format!("baseline output {name} = {f0}")));
        }
        if f0 == T::zero() {
            return Err(Error::ZeroBaseline);
        }
    }

    let mut entries = Vec::with_capacity(vars.len());
    for (i, v) in vars.iter().enumerate() {
        let mut probe = defaults.to_vec();
        let mut x1 = probe[i] * (T::one() + options.perturbation);
        let mut clamped = false;
        if x1 > v.hi {
            x1 = v.hi;
            clamped = true;
        } else if x1 < v.lo {
            x1 = v.lo;
            clamped = true;
        }
        probe[i] = x1;
        let response = oracle(&probe)?;
        if response.len() != output_names.len() {
            return Err(Error::Oracle(format!(
                "oracle returned {} outputs, expected {}",
                response.len(),
                output_names.len()
            )));
        }
        let epsilon: Vec<T> = response
            .iter()
            .zip(&base)
            .map(|(&f1, &f0)| ((f1 - f0) / f0) / options.perturbation)
            .collect();
        if let Some(bad) = epsilon.iter().find(|e| !e.is_finite()) {
            return Err(Error::NonFinite(format!(
                "sensitivity of {} is {bad}",
                v.name
            )));
        }
        entries.push(SensitivityEntry {
            variable: v.name.clone(),
            epsilon,
            clamped,
        });
    }

    let rank_indices: Vec<usize> = match &options.rank_outputs {
        Some(names) => names
            .iter()
            .map(|n| {
                output_names
                    .iter()
                    .position(|o| o == n)
                    .ok_or_else(|| Error::UnknownAttribute(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?,
        None => (0..output_names.len()).collect(),
    };
    let mut ranking: Vec<usize> = (0..entries.len()).collect();
    ranking.sort_by(|&a, &b| {
        let fa = entries[a].aggregate(&rank_indices);
        let fb = entries[b].aggregate(&rank_indices);
        fb.partial_cmp(&fa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    Ok(SensitivityResult {
        outputs: output_names.to_vec(),
        ranking: ranking
            .into_iter()
            .map(|i| entries[i].variable.clone())
            .collect(),
        entries,
    })
}
