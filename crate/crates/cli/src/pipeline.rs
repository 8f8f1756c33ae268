//! Stage functions shared by the subcommands, plus the end-to-end study
//! pipeline. Every stage takes an explicit seed so a pipeline run can be
//! reproduced by composing the subcommands with the stage seeds listed in
//! the run summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use surropump::Dataset64;
use surropump::augment::{AugmentConfig, AugmentedDataset, augment};
use surropump::dataset::SplitSpec;
use surropump::design::{DesignSpace, lhs_sample};
use surropump::metrics::{ReportMeta, ValidationReport, compare};
use surropump::nn::{NnFitOptions, NnModel, TrainConfig, TrainReport, fit_nn};
use surropump::oracle::SyntheticPumpOracle;
use surropump::rng::child_seed;
use surropump::surrogate::{
    KrgModel, KrgOptions, ModelDocument, ModelFile, RbfModel, RsfModel, Surrogate, fit_krg,
    fit_rbf, fit_rsf,
};

use crate::config::RunConfig;

/// Root for relative output paths; the environment variable overrides the
/// current directory.
pub const OUT_ROOT_ENV: &str = "SURROPUMP_OUT";

pub fn resolve_out_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}

/// Draws the Latin Hypercube plan and stamps run provenance into the CSV
/// metadata.
pub fn stage_sample(
    config: &RunConfig,
    variables: &[String],
    count: usize,
    seed: u64,
) -> Result<Dataset64> {
    let duty = config.duty.duty_point()?;
    let space = DesignSpace::from_duty(&duty)?;
    let mut inputs = lhs_sample(&space, variables, count, seed)?;
    inputs.set_metadata("config_digest", &config.digest());
    inputs.set_metadata("seed", &seed.to_string());
    Ok(inputs)
}

/// Fills the oracle outputs for a sampling plan.
pub fn stage_evaluate_oracle(
    config: &RunConfig,
    inputs: &Dataset64,
    oracle_seed: u64,
) -> Result<Dataset64> {
    let duty = config.duty.duty_point()?;
    let oracle = SyntheticPumpOracle::new(&duty, config.oracle.noise_sigma, oracle_seed)?;
    let mut full = oracle.evaluate_dataset(inputs, config.oracle.include_efficiency)?;
    full.set_metadata("config_digest", &config.digest());
    full.set_metadata("seed", &oracle_seed.to_string());
    Ok(full)
}

/// Everything `train` produces: the split and one fitted model per
/// enabled family and objective.
pub struct TrainedBundle {
    pub train_split: Dataset64,
    pub val_split: Dataset64,
    pub test_split: Dataset64,
    pub rsf: Vec<RsfModel<f64>>,
    pub rbf: Vec<RbfModel<f64>>,
    pub krg: Vec<KrgModel<f64>>,
    /// One joint network, or one per objective when `joint_outputs` is
    /// off; each with its training report.
    pub nn: Vec<(NnModel<f64>, TrainReport<f64>)>,
}

/// Splits the design dataset and fits every enabled model.
///
/// The closed-form surrogates fit on the full dataset; the network trains
/// on the training split with the validation split monitored.
pub fn stage_train(config: &RunConfig, data: &Dataset64, seed: u64) -> Result<TrainedBundle> {
    let split_spec = SplitSpec::new(
        config.split.train,
        config.split.val,
        config.split.test,
        child_seed(seed, "split"),
    );
    let (train_split, val_split, test_split) = data.split(&split_spec)?;

    let objectives = &config.models.objectives;
    let enabled = |name: &str| config.models.enabled.iter().any(|m| m == name);

    let mut rsf = Vec::new();
    let mut rbf = Vec::new();
    let mut krg = Vec::new();
    if enabled("rsf") {
        for objective in objectives {
            rsf.push(fit_rsf(data, objective)?);
        }
    }
    if enabled("rbf") {
        let rule = config.models.rbf.rule().map_err(|e| anyhow::anyhow!(e))?;
        for objective in objectives {
            rbf.push(fit_rbf(
                data,
                objective,
                config.models.rbf.centers,
                rule,
                child_seed(seed, "rbf"),
            )?);
        }
    }
    if enabled("krg") {
        let options = KrgOptions {
            theta_bounds: (config.models.krg.theta_min, config.models.krg.theta_max),
            nugget: config.models.krg.nugget,
            starts: config.models.krg.starts,
            seed: child_seed(seed, "krg"),
            ..KrgOptions::default()
        };
        for objective in objectives {
            krg.push(fit_krg(data, objective, &options)?);
        }
    }

    let mut nn = Vec::new();
    if enabled("nn") {
        nn = fit_networks(
            config,
            &train_split,
            Some(&val_split),
            child_seed(seed, "nn"),
        )?;
    }

    Ok(TrainedBundle {
        train_split,
        val_split,
        test_split,
        rsf,
        rbf,
        krg,
        nn,
    })
}

/// Trains the configured network(s) on the given training split.
pub fn fit_networks(
    config: &RunConfig,
    train_split: &Dataset64,
    val_split: Option<&Dataset64>,
    seed: u64,
) -> Result<Vec<(NnModel<f64>, TrainReport<f64>)>> {
    let activation = config
        .models
        .nn
        .hidden_activation()
        .map_err(|e| anyhow::anyhow!(e))?;
    let options = NnFitOptions {
        hidden: config.models.nn.hidden,
        activation,
        train: TrainConfig {
            max_epochs: config.models.nn.max_epochs,
            grad_tol: config.models.nn.grad_tol,
            perf_goal: config.models.nn.perf_goal,
            warmup_epochs: config.models.nn.warmup_epochs,
            seed,
            ..TrainConfig::default()
        },
        config_digest: config.digest(),
    };
    let objectives = &config.models.objectives;
    let mut out = Vec::new();
    if config.models.nn.joint_outputs {
        out.push(fit_nn(train_split, val_split, objectives, &options)?);
    } else {
        for objective in objectives {
            out.push(fit_nn(
                train_split,
                val_split,
                std::slice::from_ref(objective),
                &options,
            )?);
        }
    }
    Ok(out)
}

/// Triples the dataset with the configured augmentation settings.
pub fn stage_augment(config: &RunConfig, data: &Dataset64, force: bool) -> Result<AugmentedDataset<f64>> {
    let augment_config = AugmentConfig {
        interpolation_factor: config.augment.interpolation_factor,
        pairing: config.augment.pairing_mode().map_err(|e| anyhow::anyhow!(e))?,
        seed: 0,
        force,
    };
    Ok(augment(data, &augment_config)?)
}

/// Named per-objective predictor list for the comparison harness.
pub fn comparison_entries<'a>(
    bundle: &'a TrainedBundle,
    objectives: &[String],
) -> Result<Vec<(String, Box<dyn Surrogate<f64> + 'a>)>> {
    let mut entries: Vec<(String, Box<dyn Surrogate<f64> + 'a>)> = Vec::new();
    for (i, _objective) in objectives.iter().enumerate() {
        if let Some(m) = bundle.rsf.get(i) {
            entries.push(("rsf".to_string(), Box::new(m.clone())));
        }
        if let Some(m) = bundle.rbf.get(i) {
            entries.push(("rbf".to_string(), Box::new(m.clone())));
        }
        if let Some(m) = bundle.krg.get(i) {
            entries.push(("krg".to_string(), Box::new(m.clone())));
        }
    }
    for (model, _) in &bundle.nn {
        for objective in &model.output_names {
            if objectives.contains(objective) {
                entries.push(("nn".to_string(), Box::new(model.objective_view(objective)?)));
            }
        }
    }
    Ok(entries)
}

/// Plot-ready table for one objective: sample index, reference, one
/// prediction and one delta column per model.
pub fn plot_csv(
    report: &ValidationReport<f64>,
    test: &Dataset64,
    objective: &str,
) -> Result<String> {
    let reference = test.column(objective)?;
    let models: Vec<&surropump::metrics::MetricEntry<f64>> = report
        .entries
        .iter()
        .filter(|e| e.objective == objective)
        .collect();
    let mut header = String::from("sample,reference");
    for e in &models {
        header.push_str(&format!(",{}", e.model));
    }
    for e in &models {
        header.push_str(&format!(",delta_{}", e.model));
    }
    let mut out = header;
    out.push('\n');
    for (i, &r) in reference.iter().enumerate() {
        out.push_str(&format!("{},{:.16e}", i, r));
        for e in &models {
            out.push_str(&format!(",{:.16e}", r + e.deltas[i]));
        }
        for e in &models {
            out.push_str(&format!(",{:.16e}", e.deltas[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

/// File layout of one pipeline run.
pub struct PipelineArtifacts {
    pub root: PathBuf,
    pub comparison: ValidationReport<f64>,
    pub nn_vs_nnda: Option<ValidationReport<f64>>,
}

fn write(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_model(path: &Path, config: &RunConfig, seed: u64, model: ModelFile<f64>) -> Result<()> {
    let doc = ModelDocument {
        config_digest: config.digest(),
        seed,
        model,
    };
    write(path, &doc.to_json()?)
}

/// Writes the split CSVs, model documents and training reports of one
/// training stage under `root`.
pub fn write_trained_bundle(
    root: &Path,
    config: &RunConfig,
    seed: u64,
    bundle: &TrainedBundle,
) -> Result<()> {
    write(
        &root.join("dataset/split_train.csv"),
        &bundle.train_split.to_csv_string(),
    )?;
    write(
        &root.join("dataset/split_val.csv"),
        &bundle.val_split.to_csv_string(),
    )?;
    write(
        &root.join("dataset/split_test.csv"),
        &bundle.test_split.to_csv_string(),
    )?;
    for (i, objective) in config.models.objectives.iter().enumerate() {
        if let Some(m) = bundle.rsf.get(i) {
            write_model(
                &root.join(format!("models/rsf_{objective}.json")),
                config,
                seed,
                ModelFile::Rsf(m.clone()),
            )?;
        }
        if let Some(m) = bundle.rbf.get(i) {
            write_model(
                &root.join(format!("models/rbf_{objective}.json")),
                config,
                seed,
                ModelFile::Rbf(m.clone()),
            )?;
        }
        if let Some(m) = bundle.krg.get(i) {
            write_model(
                &root.join(format!("models/krg_{objective}.json")),
                config,
                seed,
                ModelFile::Krg(m.clone()),
            )?;
        }
    }
    for (model, report) in &bundle.nn {
        let tag = if config.models.nn.joint_outputs {
            "nn".to_string()
        } else {
            format!("nn_{}", model.output_names[0])
        };
        write_model(
            &root.join(format!("models/{tag}.json")),
            config,
            seed,
            ModelFile::Nn(model.clone()),
        )?;
        write(
            &root.join(format!("reports/{tag}_training.json")),
            &serde_json::to_string_pretty(report)?,
        )?;
    }
    Ok(())
}

/// Runs the full study: sample, evaluate, split, fit the four models,
/// augment and retrain the network, and score everything on held-out
/// test samples.
pub fn run_pipeline(config: &RunConfig, out_root: &Path) -> Result<PipelineArtifacts> {
    config.validate()?;
    let root = resolve_out_path(out_root);
    let seed = config.run.seed;
    let digest = config.digest();

    let mut stage_seeds: BTreeMap<String, u64> = BTreeMap::new();
    let mut derive = |label: &str| -> u64 {
        let s = child_seed(seed, label);
        stage_seeds.insert(label.to_string(), s);
        s
    };
    let sample_train_seed = derive("sample.train");
    let sample_test_seed = derive("sample.test");
    let oracle_train_seed = derive("oracle.train");
    let oracle_test_seed = derive("oracle.test");
    let train_seed = derive("train");

    let duty = config.duty.duty_point()?;
    let space = DesignSpace::from_duty(&duty)?;
    write(&root.join("design_space.json"), &space.to_json()?)?;

    // Design dataset: LHS plan plus oracle responses.
    let train_inputs = stage_sample(
        config,
        &config.sampling.variables,
        config.sampling.train_count,
        sample_train_seed,
    )?;
    write(
        &root.join("dataset/train_inputs.csv"),
        &train_inputs.to_csv_string(),
    )?;
    let design = stage_evaluate_oracle(config, &train_inputs, oracle_train_seed)?;
    write(&root.join("dataset/design.csv"), &design.to_csv_string())?;

    // Fits.
    let bundle = stage_train(config, &design, train_seed)?;
    write_trained_bundle(&root, config, train_seed, &bundle)?;

    // Held-out test set.
    let test_inputs = stage_sample(
        config,
        &config.sampling.variables,
        config.sampling.test_count,
        sample_test_seed,
    )?;
    write(
        &root.join("dataset/test_inputs.csv"),
        &test_inputs.to_csv_string(),
    )?;
    let test = stage_evaluate_oracle(config, &test_inputs, oracle_test_seed)?;
    write(&root.join("dataset/test.csv"), &test.to_csv_string())?;

    // Four-model comparison.
    let meta = ReportMeta {
        dataset_digest: test.digest(),
        config_digest: digest.clone(),
        seed,
        stage_seeds: stage_seeds.clone(),
    };
    let entries = comparison_entries(&bundle, &config.models.objectives)?;
    let named: Vec<(String, &dyn Surrogate<f64>)> = entries
        .iter()
        .map(|(name, model)| (name.clone(), model.as_ref() as &dyn Surrogate<f64>))
        .collect();
    let comparison = compare(&named, &test, meta.clone())?;
    write(&root.join("reports/comparison.json"), &comparison.to_json()?)?;
    write(&root.join("plots/comparison.csv"), &comparison.to_csv())?;
    for objective in &config.models.objectives {
        write(
            &root.join(format!("plots/comparison_{objective}.csv")),
            &plot_csv(&comparison, &test, objective)?,
        )?;
    }

    // Augmented retraining of the network.
    let nn_enabled = config.models.enabled.iter().any(|m| m == "nn");
    let nn_vs_nnda = if config.augment.enabled && nn_enabled {
        let augmented = stage_augment(config, &bundle.train_split, false)?;
        write(
            &root.join("dataset/train_augmented.csv"),
            &augmented.dataset.to_csv_string(),
        )?;
        let nnda = fit_networks(
            config,
            &augmented.dataset,
            Some(&bundle.val_split),
            child_seed(train_seed, "nn"),
        )?;
        for (model, report) in &nnda {
            let tag = if config.models.nn.joint_outputs {
                "nnda".to_string()
            } else {
                format!("nnda_{}", model.output_names[0])
            };
            write_model(
                &root.join(format!("models/{tag}.json")),
                config,
                train_seed,
                ModelFile::Nn(model.clone()),
            )?;
            write(
                &root.join(format!("reports/{tag}_training.json")),
                &serde_json::to_string_pretty(report)?,
            )?;
        }

        let mut duel: Vec<(String, Box<dyn Surrogate<f64> + '_>)> = Vec::new();
        for (model, _) in &bundle.nn {
            for objective in &model.output_names {
                duel.push(("nn".to_string(), Box::new(model.objective_view(objective)?)));
            }
        }
        for (model, _) in &nnda {
            for objective in &model.output_names {
                duel.push(("nnda".to_string(), Box::new(model.objective_view(objective)?)));
            }
        }
        let named: Vec<(String, &dyn Surrogate<f64>)> = duel
            .iter()
            .map(|(name, model)| (name.clone(), model.as_ref() as &dyn Surrogate<f64>))
            .collect();
        let report = compare(&named, &test, meta.clone())?;
        write(&root.join("reports/nn_vs_nnda.json"), &report.to_json()?)?;
        for objective in &config.models.objectives {
            write(
                &root.join(format!("plots/nnda_{objective}.csv")),
                &plot_csv(&report, &test, objective)?,
            )?;
        }
        Some(report)
    } else {
        None
    };

    // Run summary: everything needed to reproduce the artifacts.
    let summary = serde_json::json!({
        "config_digest": digest,
        "seed": seed,
        "stage_seeds": stage_seeds,
        "design_digest": design.digest(),
        "test_digest": test.digest(),
        "augmented": nn_vs_nnda.is_some(),
        "effective_config": toml::to_string(config)?,
    });
    write(
        &root.join("reports/summary.json"),
        &serde_json::to_string_pretty(&summary)?,
    )?;

    Ok(PipelineArtifacts {
        root,
        comparison,
        nn_vs_nnda,
    })
}
