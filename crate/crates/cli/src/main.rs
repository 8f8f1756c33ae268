//! `surropump` — experiment driver for the pump surrogate-model study.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical
//! failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result, bail};
use clap::{Parser, Subcommand};

use surropump::Dataset64;
use surropump::dataset::AttributeSpec;
use surropump::design::{DesignSpace, SensitivityOptions, sensitivity};
use surropump::metrics::{ReportMeta, compare};
use surropump::oracle::SyntheticPumpOracle;
use surropump::surrogate::{ModelDocument, ModelFile, Surrogate};

use surropump_cli::config::RunConfig;
use surropump_cli::pipeline::{
    self, plot_csv, resolve_out_path, run_pipeline, stage_augment, stage_evaluate_oracle,
    stage_sample, stage_train,
};

#[derive(Parser)]
#[command(
    name = "surropump",
    version,
    about = "Surrogate-model experiments for centrifugal pump performance prediction"
)]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted; flags
    /// override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a Latin Hypercube sampling plan into a CSV.
    Sample {
        /// Number of samples.
        #[arg(long)]
        count: Option<usize>,
        /// Comma-separated design variable names.
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill head/power outputs for an input CSV via the synthetic oracle.
    EvaluateOracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Relative noise sigma; overrides the config value.
        #[arg(long)]
        noise_sigma: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also emit the efficiency column.
        #[arg(long)]
        include_efficiency: bool,
    },
    /// Rank design variables by one-sided perturbation response.
    Sensitivity {
        #[arg(long)]
        out: PathBuf,
        /// Probe around the box midpoints.
        #[arg(long)]
        midpoint: bool,
        /// Explicit default point, e.g. `D2=0.277,b2=0.0155,beta2=19`.
        /// Overrides midpoints per variable; without --midpoint it must
        /// cover every variable.
        #[arg(long)]
        defaults: Option<String>,
        /// Forward perturbation ratio.
        #[arg(long, default_value_t = 0.02)]
        perturbation: f64,
        /// Outputs aggregated for the ranking.
        #[arg(long, value_delimiter = ',', default_values_t = ["efficiency".to_string(), "head".to_string()])]
        rank_outputs: Vec<String>,
    },
    /// Split a dataset and fit the enabled models.
    Train {
        /// Dataset CSV with input and output columns.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a fitted model JSON on an input CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score fitted models against a test CSV.
    Compare {
        /// Model JSON files, comma separated.
        #[arg(long, value_delimiter = ',')]
        models: Vec<PathBuf>,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write plot-ready CSVs per objective into this directory.
        #[arg(long)]
        plots: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Triple a dataset by nearest-gap interpolation.
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        interpolation_factor: Option<f64>,
        /// `plus-minus` or `independent`.
        #[arg(long)]
        pairing: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Append provenance as trailing annotation columns.
        #[arg(long)]
        provenance: bool,
        /// Augment even if the dataset is already augmented.
        #[arg(long)]
        force: bool,
    },
    /// Run the full study end to end.
    Pipeline {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e
                .downcast_ref::<surropump::Error>()
                .map(surropump::Error::is_numerical)
                .unwrap_or(false)
            {
                3
            } else {
                2
            };
            std::process::exit(code);
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    let path = resolve_out_path(path);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli.config)?;
    match cli.command {
        Command::Sample {
            count,
            vars,
            seed,
            out,
        } => {
            if let Some(c) = count {
                if c == 0 {
                    bail!("--count must be at least 1");
                }
                config.sampling.train_count = c;
            }
            if !vars.is_empty() {
                config.sampling.variables = vars;
            }
            let seed = seed.unwrap_or(config.run.seed);
            let variables = config.sampling.variables.clone();
            let count = config.sampling.train_count;
            let inputs = stage_sample(&config, &variables, count, seed)?;
            write_text(&out, &inputs.to_csv_string())
        }
        Command::EvaluateOracle {
            input,
            out,
            noise_sigma,
            seed,
            include_efficiency,
        } => {
            if let Some(sigma) = noise_sigma {
                config.oracle.noise_sigma = sigma;
            }
            if include_efficiency {
                config.oracle.include_efficiency = true;
            }
            let seed = seed.unwrap_or(config.run.seed);
            let inputs = Dataset64::load_csv_inputs_allowed(&input)?;
            let full = stage_evaluate_oracle(&config, &inputs, seed)?;
            write_text(&out, &full.to_csv_string())
        }
        Command::Sensitivity {
            out,
            midpoint,
            defaults,
            perturbation,
            rank_outputs,
        } => {
            let duty = config.duty.duty_point()?;
            let space = DesignSpace::from_duty(&duty)?;
            let point = parse_default_point(&space, midpoint, defaults.as_deref())?;
            let oracle = SyntheticPumpOracle::new(&duty, 0.0, config.run.seed)?;
            let options = SensitivityOptions {
                perturbation,
                rank_outputs: Some(rank_outputs),
            };
            let result = sensitivity(
                |x: &[f64]| oracle.response_vector(x),
                &SyntheticPumpOracle::<f64>::output_names(),
                &space,
                &point,
                &options,
            )?;
            let document = serde_json::json!({
                "config_digest": config.digest(),
                "seed": config.run.seed,
                "defaults": space.names().iter().zip(&point).collect::<Vec<_>>(),
                "result": result,
            });
            write_text(&out, &serde_json::to_string_pretty(&document)?)
        }
        Command::Train { data, out, seed } => {
            let seed = seed.unwrap_or(config.run.seed);
            let dataset = Dataset64::load_csv(&data)?;
            let bundle = stage_train(&config, &dataset, seed)?;
            let root = resolve_out_path(&out);
            pipeline::write_trained_bundle(&root, &config, seed, &bundle)?;
            println!("wrote models under {}", root.display());
            Ok(())
        }
        Command::Predict { model, input, out } => {
            let text = std::fs::read_to_string(&model)
                .with_context(|| format!("reading {}", model.display()))?;
            let document = ModelDocument::<f64>::from_json(&text)?;
            let inputs = Dataset64::load_csv_inputs_allowed(&input)?;
            let predicted = predict_dataset(&document, &inputs)?;
            write_text(&out, &predicted.to_csv_string())
        }
        Command::Compare {
            models,
            test,
            out,
            plots,
            seed,
        } => {
            if models.is_empty() {
                bail!("--models needs at least one file");
            }
            let test_data = Dataset64::load_csv(&test)?;
            let mut documents = Vec::new();
            for path in &models {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "model".to_string());
                documents.push((name, ModelDocument::<f64>::from_json(&text)?));
            }
            let mut named: Vec<(String, Box<dyn Surrogate<f64>>)> = Vec::new();
            for (stem, document) in &documents {
                for (name, surrogate) in document_surrogates(stem, document)? {
                    named.push((name, surrogate));
                }
            }
            let borrowed: Vec<(String, &dyn Surrogate<f64>)> = named
                .iter()
                .map(|(n, s)| (n.clone(), s.as_ref() as &dyn Surrogate<f64>))
                .collect();
            let meta = ReportMeta {
                dataset_digest: test_data.digest(),
                config_digest: config.digest(),
                seed: seed.unwrap_or(config.run.seed),
                stage_seeds: BTreeMap::new(),
            };
            let report = compare(&borrowed, &test_data, meta)?;
            if let Some(dir) = plots {
                let objectives: Vec<String> = {
                    let mut seen = Vec::new();
                    for e in &report.entries {
                        if !seen.contains(&e.objective) {
                            seen.push(e.objective.clone());
                        }
                    }
                    seen
                };
                for objective in &objectives {
                    write_text(
                        &dir.join(format!("{objective}.csv")),
                        &plot_csv(&report, &test_data, objective)?,
                    )?;
                }
            }
            write_text(&out, &report.to_json()?)
        }
        Command::Augment {
            input,
            out,
            interpolation_factor,
            pairing,
            seed,
            provenance,
            force,
        } => {
            if let Some(f) = interpolation_factor {
                config.augment.interpolation_factor = f;
            }
            if let Some(p) = pairing {
                config.augment.pairing = p;
            }
            let mut data = Dataset64::load_csv(&input)?;
            data.set_metadata("config_digest", &config.digest());
            data.set_metadata("seed", &seed.unwrap_or(config.run.seed).to_string());
            let result = stage_augment(&config, &data, force)?;
            let content = if provenance {
                csv_with_provenance(&result)
            } else {
                result.dataset.to_csv_string()
            };
            write_text(&out, &content)
        }
        Command::Pipeline { seed, out } => {
            if let Some(s) = seed {
                config.run.seed = s;
            }
            if let Some(o) = out {
                config.run.output_dir = o.to_string_lossy().into_owned();
            }
            let out_dir = PathBuf::from(&config.run.output_dir);
            let artifacts = run_pipeline(&config, &out_dir)?;
            println!("pipeline complete under {}", artifacts.root.display());
            for entry in &artifacts.comparison.entries {
                println!(
                    "  {:<5} {:<6} normalized_rmse={:.6e} mean_abs_err={:.6e}",
                    entry.model, entry.objective, entry.normalized_rmse, entry.mean_absolute_error
                );
            }
            if let Some(duel) = &artifacts.nn_vs_nnda {
                for entry in &duel.entries {
                    println!(
                        "  {:<5} {:<6} normalized_rmse={:.6e} mean_abs_err={:.6e}",
                        entry.model,
                        entry.objective,
                        entry.normalized_rmse,
                        entry.mean_absolute_error
                    );
                }
            }
            Ok(())
        }
    }
}

/// Default point for the sensitivity screen: midpoints and/or explicit
/// `name=value` overrides.
fn parse_default_point(
    space: &DesignSpace<f64>,
    midpoint: bool,
    defaults: Option<&str>,
) -> Result<Vec<f64>> {
    let names = space.names();
    let mut values: Vec<Option<f64>> = if midpoint {
        space.midpoints().into_iter().map(Some).collect()
    } else {
        vec![None; names.len()]
    };
    if let Some(spec) = defaults {
        for pair in spec.split(',') {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| anyhow::anyhow!("bad default `{pair}`, expected name=value"))?;
            let idx = names
                .iter()
                .position(|n| n == name.trim())
                .ok_or_else(|| anyhow::anyhow!("unknown design variable `{name}`"))?;
            values[idx] = Some(value.trim().parse::<f64>()?);
        }
    } else if !midpoint {
        bail!("sensitivity needs an explicit default point: pass --midpoint and/or --defaults");
    }
    let missing: Vec<&String> = names
        .iter()
        .zip(&values)
        .filter(|(_, v)| v.is_none())
        .map(|(n, _)| n)
        .collect();
    if !missing.is_empty() {
        bail!("missing defaults for {missing:?}; add them or pass --midpoint");
    }
    Ok(values.into_iter().map(Option::unwrap).collect())
}

/// Per-objective surrogate adapters for one model document. Network
/// documents expand to one adapter per output; the display name strips a
/// redundant `_objective` suffix so composed reports match pipeline ones.
fn document_surrogates<'a>(
    stem: &str,
    document: &'a ModelDocument<f64>,
) -> Result<Vec<(String, Box<dyn Surrogate<f64> + 'a>)>> {
    let strip = |objective: &str| -> String {
        stem.strip_suffix(&format!("_{objective}"))
            .unwrap_or(stem)
            .to_string()
    };
    Ok(match &document.model {
        ModelFile::Rsf(m) => vec![(strip(&m.objective), Box::new(m.clone()) as _)],
        ModelFile::Rbf(m) => vec![(strip(&m.objective), Box::new(m.clone()) as _)],
        ModelFile::Krg(m) => vec![(strip(&m.objective), Box::new(m.clone()) as _)],
        ModelFile::Nn(m) => {
            let mut out: Vec<(String, Box<dyn Surrogate<f64>>)> = Vec::new();
            for objective in &m.output_names {
                out.push((strip(objective), Box::new(m.objective_view(objective)?)));
            }
            out
        }
    })
}

/// Inputs plus one output column per model objective.
fn predict_dataset(document: &ModelDocument<f64>, inputs: &Dataset64) -> Result<Dataset64> {
    let (names, columns): (Vec<String>, Vec<Vec<f64>>) = match &document.model {
        ModelFile::Nn(m) => {
            let mut columns = vec![Vec::with_capacity(inputs.n_rows()); m.output_names.len()];
            for r in 0..inputs.n_rows() {
                let x = aligned_row(inputs, &m.input_names, r)?;
                for (c, v) in m.predict(&x)?.into_iter().enumerate() {
                    columns[c].push(v);
                }
            }
            (m.output_names.clone(), columns)
        }
        ModelFile::Rsf(_) | ModelFile::Rbf(_) | ModelFile::Krg(_) => {
            let surrogate: &dyn Surrogate<f64> = match &document.model {
                ModelFile::Rsf(m) => m,
                ModelFile::Rbf(m) => m,
                ModelFile::Krg(m) => m,
                ModelFile::Nn(_) => unreachable!(),
            };
            let mut column = Vec::with_capacity(inputs.n_rows());
            for r in 0..inputs.n_rows() {
                let x = aligned_row(inputs, surrogate.input_names(), r)?;
                column.push(surrogate.predict(&x)?);
            }
            (vec![surrogate.objective().to_string()], vec![column])
        }
    };
    let specs: Vec<AttributeSpec> = names
        .iter()
        .map(|n| AttributeSpec::output(n, ""))
        .collect();
    let values: Vec<Vec<f64>> = (0..inputs.n_rows())
        .map(|r| columns.iter().map(|c| c[r]).collect())
        .collect();
    let mut out = inputs.with_outputs(specs, values)?;
    out.set_metadata("config_digest", &document.config_digest);
    out.set_metadata("seed", &document.seed.to_string());
    Ok(out)
}

fn aligned_row(inputs: &Dataset64, wanted: &[String], row: usize) -> Result<Vec<f64>> {
    let available = inputs.input_names();
    let values = inputs.input_row(row);
    wanted
        .iter()
        .map(|n| {
            available
                .iter()
                .position(|a| a == n)
                .map(|i| values[i])
                .ok_or_else(|| anyhow::anyhow!("input column `{n}` missing from dataset"))
        })
        .collect()
}

/// Serializes the augmented dataset with two trailing annotation columns
/// recording each generated row's source and sign.
fn csv_with_provenance(result: &surropump::augment::AugmentedDataset<f64>) -> String {
    let base = result.dataset.to_csv_string();
    let n_original = result.dataset.n_rows() - result.provenance.len();
    let mut out = String::with_capacity(base.len() + 8 * result.dataset.n_rows());
    let mut data_row = 0usize;
    for (i, line) in base.lines().enumerate() {
        if i == 0 {
            out.push_str(line);
            out.push_str(",#source_row,#sign");
        } else if i == 1 {
            out.push_str(line);
            out.push_str(",#,#");
        } else if line.starts_with('#') {
            out.push_str(line);
            // A units line must keep the column count; metadata lines
            // (with a colon) pass through unchanged.
            if !line.contains(':') {
                out.push_str(",,");
            }
        } else {
            out.push_str(line);
            if data_row < n_original {
                out.push_str(",-1,0");
            } else {
                let p = &result.provenance[data_row - n_original];
                out.push_str(&format!(",{},{}", p.source_row, p.sign));
            }
            data_row += 1;
        }
        out.push('\n');
    }
    out
}
