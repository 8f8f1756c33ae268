//! The closed-form surrogate families — quadratic response surface,
//! Gaussian radial basis functions, ordinary Kriging — behind one shared
//! fit/predict contract. One independent model is fitted per objective.

mod kriging;
mod rbf;
mod rsf;

pub use kriging::{KrgModel, KrgOptions, fit_krg};
pub use rbf::{RbfModel, WidthRule, fit_rbf};
pub use rsf::{RsfModel, fit_rsf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nn::NnModel;
use crate::scalar::Scalar;

/// Model family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    Rsf,
    Rbf,
    Krg,
    Nn,
}

impl std::fmt::Display for SurrogateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SurrogateKind::Rsf => "rsf",
            SurrogateKind::Rbf => "rbf",
            SurrogateKind::Krg => "krg",
            SurrogateKind::Nn => "nn",
        };
        f.write_str(s)
    }
}

/// Fitted predictor mapping a raw design point to one objective value.
///
/// Implementations are pure: `predict` never mutates the model, and
/// fitting never mutates the training dataset.
pub trait Surrogate<T: Scalar> {
    fn kind(&self) -> SurrogateKind;
    fn objective(&self) -> &str;
    fn input_names(&self) -> &[String];
    fn predict(&self, x: &[T]) -> Result<T>;
}

/// Serialized form of any fitted model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFile<T> {
    Rsf(RsfModel<T>),
    Rbf(RbfModel<T>),
    Krg(KrgModel<T>),
    Nn(NnModel<T>),
}

/// On-disk model document carrying run provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument<T> {
    pub config_digest: String,
    pub seed: u64,
    pub model: ModelFile<T>,
}

impl<T: Scalar + Serialize + for<'de> Deserialize<'de>> ModelDocument<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
