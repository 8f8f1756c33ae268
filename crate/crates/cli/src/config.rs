//! Run configuration: one TOML file describing the whole study. Every
//! field has a default, so a missing or partial file still yields the
//! reference protocol; command-line flags override file values.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use surropump::augment::Pairing;
use surropump::nn::HiddenActivation;
use surropump::surrogate::WidthRule;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub duty: DutySection,
    pub sampling: SamplingSection,
    pub oracle: OracleSection,
    pub split: SplitSection,
    pub models: ModelsSection,
    pub augment: AugmentSection,
    pub run: RunSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            duty: DutySection::default(),
            sampling: SamplingSection::default(),
            oracle: OracleSection::default(),
            split: SplitSection::default(),
            models: ModelsSection::default(),
            augment: AugmentSection::default(),
            run: RunSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DutySection {
    pub flow_m3h: f64,
    pub head_m: f64,
    pub speed_rpm: f64,
    pub rated_power_kw: f64,
}

impl Default for DutySection {
    fn default() -> Self {
        DutySection {
            flow_m3h: 100.0,
            head_m: 80.0,
            speed_rpm: 2950.0,
            rated_power_kw: 355.0,
        }
    }
}

impl DutySection {
    pub fn duty_point(&self) -> surropump::Result<surropump::DutyPoint64> {
        surropump::design::DutyPoint::from_flow_m3h(
            self.flow_m3h,
            self.head_m,
            self.speed_rpm,
            self.rated_power_kw,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub variables: Vec<String>,
    pub train_count: usize,
    pub test_count: usize,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            variables: vec!["D2".into(), "b2".into(), "beta2".into()],
            train_count: 60,
            test_count: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub noise_sigma: f64,
    pub include_efficiency: bool,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            noise_sigma: 0.0,
            include_efficiency: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsSection {
    pub enabled: Vec<String>,
    pub objectives: Vec<String>,
    pub rbf: RbfSection,
    pub krg: KrgSection,
    pub nn: NnSection,
}

impl Default for ModelsSection {
    fn default() -> Self {
        ModelsSection {
            enabled: vec!["rsf".into(), "rbf".into(), "krg".into(), "nn".into()],
            objectives: vec!["head".into(), "power".into()],
            rbf: RbfSection::default(),
            krg: KrgSection::default(),
            nn: NnSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfSection {
    pub centers: usize,
    /// `median-pairwise`, `mean-nearest-neighbor` or `fixed`.
    pub width_rule: String,
    pub fixed_width: f64,
}

impl Default for RbfSection {
    fn default() -> Self {
        RbfSection {
            centers: 30,
            width_rule: "median-pairwise".into(),
            fixed_width: 1.0,
        }
    }
}

impl RbfSection {
    pub fn rule(&self) -> Result<WidthRule<f64>, String> {
        match self.width_rule.as_str() {
            "median-pairwise" => Ok(WidthRule::MedianPairwise),
            "mean-nearest-neighbor" => Ok(WidthRule::MeanNearestNeighbor),
            "fixed" => Ok(WidthRule::Fixed(self.fixed_width)),
            other => Err(format!("unknown rbf width rule `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrgSection {
    pub theta_min: f64,
    pub theta_max: f64,
    pub nugget: f64,
    pub starts: usize,
}

impl Default for KrgSection {
    fn default() -> Self {
        KrgSection {
            theta_min: 1e-2,
            theta_max: 1e2,
            nugget: 1e-8,
            starts: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnSection {
    pub hidden: usize,
    /// `tanh` or `logistic`.
    pub activation: String,
    pub max_epochs: usize,
    pub grad_tol: f64,
    /// Training-MSE goal on normalized targets; 0 disables the check.
    pub perf_goal: f64,
    /// Epochs of plain Levenberg-Marquardt before the evidence updates
    /// engage.
    pub warmup_epochs: usize,
    /// One network for all objectives (default) or one per objective.
    pub joint_outputs: bool,
}

impl Default for NnSection {
    fn default() -> Self {
        NnSection {
            hidden: 50,
            activation: "tanh".into(),
            max_epochs: 1000,
            grad_tol: 1e-10,
            perf_goal: 0.0,
            warmup_epochs: 0,
            joint_outputs: false,
        }
    }
}

impl NnSection {
    pub fn hidden_activation(&self) -> Result<HiddenActivation, String> {
        match self.activation.as_str() {
            "tanh" => Ok(HiddenActivation::Tanh),
            "logistic" => Ok(HiddenActivation::Logistic),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub enabled: bool,
    pub interpolation_factor: f64,
    /// `plus-minus` or `independent`.
    pub pairing: String,
}

impl Default for AugmentSection {
    fn default() -> Self {
        AugmentSection {
            enabled: true,
            interpolation_factor: 0.025,
            pairing: "plus-minus".into(),
        }
    }
}

impl AugmentSection {
    pub fn pairing_mode(&self) -> Result<Pairing, String> {
        match self.pairing.as_str() {
            "plus-minus" => Ok(Pairing::PlusMinus),
            "independent" => Ok(Pairing::Independent),
            other => Err(format!("unknown pairing `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub output_dir: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 7,
            output_dir: "runs/out".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.duty.duty_point().map_err(anyhow::Error::from)?;
        if self.sampling.variables.is_empty() {
            anyhow::bail!("sampling.variables must not be empty");
        }
        if self.sampling.train_count == 0 || self.sampling.test_count == 0 {
            anyhow::bail!("sample counts must be positive");
        }
        if self.models.objectives.is_empty() {
            anyhow::bail!("models.objectives must not be empty");
        }
        for m in &self.models.enabled {
            if !matches!(m.as_str(), "rsf" | "rbf" | "krg" | "nn") {
                anyhow::bail!("unknown model `{m}` in models.enabled");
            }
        }
        self.models.rbf.rule().map_err(|e| anyhow::anyhow!(e))?;
        self.models
            .nn
            .hidden_activation()
            .map_err(|e| anyhow::anyhow!(e))?;
        self.augment
            .pairing_mode()
            .map_err(|e| anyhow::anyhow!(e))?;
        if !(self.models.krg.theta_min > 0.0 && self.models.krg.theta_max >= self.models.krg.theta_min)
        {
            anyhow::bail!("krg theta bounds must satisfy 0 < min <= max");
        }
        let frac_sum = self.split.train + self.split.val + self.split.test;
        if (frac_sum - 1.0).abs() > 1e-9 {
            anyhow::bail!("split fractions sum to {frac_sum}, expected 1");
        }
        Ok(())
    }

    /// Canonical digest of the effective configuration; recorded into
    /// every artifact the run produces.
    pub fn digest(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let out = hasher.finalize();
        let mut s = String::with_capacity(64);
        for b in out {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_digest_is_stable() {
        let config = RunConfig::default();
        config.validate().unwrap();
        assert_eq!(config.digest(), config.digest());
        assert_eq!(config.digest().len(), 64);
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let config: RunConfig = toml::from_str("[run]\nseed = 9\n").unwrap();
        assert_eq!(config.run.seed, 9);
        assert_eq!(config.sampling.train_count, 60);
        assert_eq!(config.models.nn.hidden, 50);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[run]\nbogus = 1\n").is_err());
    }

    #[test]
    fn flag_like_overrides_change_the_digest() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.run.seed = 8;
        assert_ne!(a.digest(), b.digest());
    }
}
