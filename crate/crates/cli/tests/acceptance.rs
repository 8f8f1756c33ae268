//! Study-level acceptance suite. Each test prints one PASS line for the
//! criterion it covers; tolerances are pinned in the assertions.
//!
//! The two replication criteria (06 network training, 09 directional
//! model comparison) retrain networks across ten seeds and take several
//! minutes in total.

use std::path::PathBuf;

use surropump::augment::{AugmentConfig, attribute_bias, augment};
use surropump::dataset::{AttributeSpec, Dataset, SplitSpec};
use surropump::design::{DesignSpace, DesignVariable, DutyPoint, lhs_sample, specific_speed};
use surropump::metrics::{mean_absolute_error, normalized_rmse, r_squared, relative_rmse};
use surropump::nn::{
    MlpTopology, MlpWeights, NnFitOptions, TrainConfig, fit_nn, objective_gradient,
    objective_value,
};
use surropump::oracle::SyntheticPumpOracle;
use surropump::rng::{child_seed, stream};
use surropump::surrogate::{KrgOptions, Surrogate, WidthRule, fit_krg, fit_rbf, fit_rsf};

use surropump_cli::config::RunConfig;
use surropump_cli::pipeline::run_pipeline;

fn reference_duty() -> DutyPoint<f64> {
    DutyPoint::from_flow_m3h(100.0, 80.0, 2950.0, 355.0).unwrap()
}

fn pass(tag: &str, detail: String) {
    println!("ACCEPT-{tag} PASS: {detail}");
}

/// 01 — specific speed at the reference duty point.
#[test]
fn accept_01_specific_speed() {
    let ns = specific_speed(&reference_duty());
    assert!(
        (ns - 67.09).abs() <= 0.01,
        "specific speed {ns} not within 67.09 ± 0.01"
    );
    pass("01", format!("specific speed = {ns:.4} (67.09 ± 0.01)"));
}

/// 02 — derived outlet-diameter interval, checked against an independent
/// direct evaluation of the design formulas.
#[test]
fn accept_02_outlet_diameter_bounds() {
    let space = DesignSpace::from_duty(&reference_duty()).unwrap();
    let d2 = space.get("D2").unwrap();

    // Independent evaluation: n_s = 3.65 n √Q / H^¾ with Q in m³/s, then
    // [10.4, 11.1] · (n_s/100)^(-1/2) · (Q/n)^(1/3).
    let q = 100.0f64 / 3600.0;
    let n = 2950.0f64;
    let ns = 3.65 * n * q.sqrt() / 80.0f64.powf(0.75);
    let lo = 10.4 * (ns / 100.0).powf(-0.5) * (q / n).cbrt();
    let hi = 11.1 * (ns / 100.0).powf(-0.5) * (q / n).cbrt();
    assert!((d2.lo - lo).abs() < 1e-12 && (d2.hi - hi).abs() < 1e-12);
    assert!((d2.lo - 0.2683).abs() <= 0.0005, "D2 lower bound {}", d2.lo);
    assert!((d2.hi - 0.2864).abs() <= 0.0005, "D2 upper bound {}", d2.hi);
    pass(
        "02",
        format!("D2 ∈ [{:.4}, {:.4}] m ([0.2683, 0.2864] ± 0.0005)", d2.lo, d2.hi),
    );
}

/// 03 — response-surface exactness on any quadratic generator.
#[test]
fn accept_03_rsf_exactness() {
    let space = DesignSpace::new(
        (0..3)
            .map(|i| DesignVariable {
                name: format!("x{}", i + 1),
                lo: -1.0,
                hi: 2.0,
                unit: String::new(),
                ratio_of: None,
            })
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let coeffs = [1.7, -2.0, 0.8, 3.1, -0.6, 1.2, 0.4, -1.5, 0.9, 2.2];
    let generator = |x: &[f64]| {
        coeffs[0]
            + coeffs[1] * x[0]
            + coeffs[2] * x[1]
            + coeffs[3] * x[2]
            + coeffs[4] * x[0] * x[0]
            + coeffs[5] * x[1] * x[1]
            + coeffs[6] * x[2] * x[2]
            + coeffs[7] * x[0] * x[1]
            + coeffs[8] * x[0] * x[2]
            + coeffs[9] * x[1] * x[2]
    };
    let points = lhs_sample(&space, &space.names(), 20, 42).unwrap();
    let mut attrs = points.attributes().to_vec();
    attrs.push(AttributeSpec::output("y", ""));
    let rows: Vec<Vec<f64>> = points
        .rows()
        .iter()
        .map(|r| {
            let mut row = r.clone();
            row.push(generator(r));
            row
        })
        .collect();
    let data = Dataset::new(attrs, rows).unwrap();
    let model = fit_rsf(&data, "y").unwrap();

    let mut coefficient_residual = 0.0f64;
    for (got, want) in model.coefficients.iter().zip(coeffs) {
        coefficient_residual = coefficient_residual.max((got - want).abs());
    }
    assert!(
        coefficient_residual < 1e-8,
        "coefficient residual {coefficient_residual}"
    );

    let probe = lhs_sample(&space, &space.names(), 20, 43).unwrap();
    let mut prediction_error = 0.0f64;
    for row in probe.rows() {
        prediction_error = prediction_error.max((model.predict(row).unwrap() - generator(row)).abs());
    }
    assert!(prediction_error < 1e-8, "held-out error {prediction_error}");
    pass(
        "03",
        format!(
            "quadratic recovery: coefficient residual {coefficient_residual:.2e}, held-out {prediction_error:.2e} (< 1e-8)"
        ),
    );
}

/// 04 — interpolation property of Kriging (nugget 0) and full-center RBF
/// on 30-point random sets, ten seeds.
#[test]
fn accept_04_interpolation_properties() {
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
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let points = lhs_sample(&space, &space.names(), 30, 100 + seed).unwrap();
        let mut attrs = points.attributes().to_vec();
        attrs.push(AttributeSpec::output("y", ""));
        let rows: Vec<Vec<f64>> = points
            .rows()
            .iter()
            .map(|r| {
                let mut row = r.clone();
                row.push((2.5_f64 * r[0]).sin() + r[1] * r[1] - 0.7 * r[2] + 1.5);
                row
            })
            .collect();
        let data = Dataset::new(attrs, rows).unwrap();
        let targets = data.column("y").unwrap();

        let krg = fit_krg(
            &data,
            "y",
            &KrgOptions {
                nugget: 0.0,
                seed,
                ..KrgOptions::default()
            },
        )
        .unwrap();
        let rbf = fit_rbf(&data, "y", 30, WidthRule::MedianPairwise, seed).unwrap();
        for (r, &y) in targets.iter().enumerate() {
            let x = data.input_row(r);
            let scale = y.abs().max(1e-12);
            worst = worst.max(((krg.predict(&x).unwrap() - y) / scale).abs());
            worst = worst.max(((rbf.predict(&x).unwrap() - y) / scale).abs());
        }
    }
    assert!(worst < 1e-6, "worst relative interpolation error {worst}");
    pass(
        "04",
        format!("KRG/RBF reproduce training targets, worst relative error {worst:.2e} (< 1e-6)"),
    );
}

/// 05 — analytic network gradient vs central finite differences over ten
/// random nets across three topologies.
#[test]
fn accept_05_gradient_check() {
    use rand::RngExt;
    let mut max_rel = 0.0f64;
    let mut net_index = 0u64;
    for (inputs, hidden, outputs) in [(3, 5, 2), (3, 50, 2), (5, 10, 1)] {
        let nets = if hidden == 50 { 2 } else { 4 };
        for _ in 0..nets {
            net_index += 1;
            let topology = MlpTopology::new(inputs, hidden, outputs).unwrap();
            let teacher = MlpWeights::<f64>::init(&topology, 500 + net_index);
            let student = MlpWeights::<f64>::init(&topology, 900 + net_index);
            let mut sampler = stream(700 + net_index, "acceptance.gradient");
            let xs: Vec<Vec<f64>> = (0..8)
                .map(|_| {
                    (0..inputs)
                        .map(|_| 2.0 * sampler.random::<f64>() - 1.0)
                        .collect()
                })
                .collect();
            let ys: Vec<Vec<f64>> = xs
                .iter()
                .map(|x| surropump::nn::forward(&topology, &teacher, x).unwrap())
                .collect();
            let (alpha, beta) = (0.2, 1.3);
            let grad = objective_gradient(&topology, &student, &xs, &ys, alpha, beta).unwrap();
            let flat = student.to_flat();
            let h = 1e-6;
            for k in 0..flat.len() {
                let mut plus = flat.clone();
                plus[k] += h;
                let mut minus = flat.clone();
                minus[k] -= h;
                let fp = objective_value(
                    &topology,
                    &MlpWeights::from_flat(&topology, &plus).unwrap(),
                    &xs,
                    &ys,
                    alpha,
                    beta,
                )
                .unwrap();
                let fm = objective_value(
                    &topology,
                    &MlpWeights::from_flat(&topology, &minus).unwrap(),
                    &xs,
                    &ys,
                    alpha,
                    beta,
                )
                .unwrap();
                let numeric = (fp - fm) / (2.0 * h);
                let scale = grad[k].abs().max(numeric.abs()).max(1e-8);
                max_rel = max_rel.max((grad[k] - numeric).abs() / scale);
            }
        }
    }
    assert!(max_rel < 1e-5, "max relative gradient error {max_rel}");
    pass(
        "05",
        format!("gradient vs central differences, max relative error {max_rel:.2e} (< 1e-5)"),
    );
}

/// 06 — training protocol: 3-50-2 on 48 noise-free training rows reaches
/// a training MSE below 1e-6 in at least 8 of 10 seeds.
#[test]
fn accept_06_training_convergence() {
    let config = RunConfig::default();
    let duty = config.duty.duty_point().unwrap();
    let space = DesignSpace::from_duty(&duty).unwrap();
    let vars: Vec<String> = config.sampling.variables.clone();
    let objectives: Vec<String> = config.models.objectives.clone();

    let mut successes = 0;
    let mut best_worst: Vec<f64> = Vec::new();
    for seed in 1..=10u64 {
        let oracle = SyntheticPumpOracle::new(&duty, 0.0, child_seed(seed, "oracle")).unwrap();
        let plan = lhs_sample(&space, &vars, 60, child_seed(seed, "sample")).unwrap();
        let design = oracle.evaluate_dataset(&plan, false).unwrap();
        let split = SplitSpec::new(0.8, 0.1, 0.1, child_seed(seed, "split"));
        let (train, val, _) = design.split(&split).unwrap();
        assert_eq!(train.n_rows(), 48);

        let options = NnFitOptions {
            hidden: 50,
            train: TrainConfig {
                max_epochs: 1000,
                perf_goal: 1e-8,
                seed: child_seed(seed, "nn"),
                ..TrainConfig::default()
            },
            ..NnFitOptions::default()
        };
        let (_, report) = fit_nn(&train, Some(&val), &objectives, &options).unwrap();
        best_worst.push(report.final_performance);
        if report.final_performance < 1e-6 {
            successes += 1;
        }
    }
    assert!(
        successes >= 8,
        "only {successes}/10 seeds reached 1e-6; performances {best_worst:?}"
    );
    pass(
        "06",
        format!("training MSE < 1e-6 in {successes}/10 seeds (need ≥ 8)"),
    );
}

/// 07 — augmentation arithmetic: tripling, hand-traced values, exact mean
/// preservation, bias bound.
#[test]
fn accept_07_augmentation() {
    use rand::RngExt;
    let mut sampler = stream(7, "acceptance.augment");
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|_| {
            vec![
                sampler.random::<f64>() * 4.0,
                sampler.random::<f64>() * 10.0 - 5.0,
                sampler.random::<f64>() + 0.5,
            ]
        })
        .collect();
    let d = Dataset::new(
        vec![
            AttributeSpec::input("a", ""),
            AttributeSpec::input("b", ""),
            AttributeSpec::output("y", ""),
        ],
        rows,
    )
    .unwrap();
    let config = AugmentConfig::default();
    let result = augment(&d, &config).unwrap();
    assert_eq!(result.dataset.n_rows(), 180, "60 rows must triple to 180");

    // Hand-traced single-column example.
    let column = [1.0, 2.0, 4.0];
    assert_eq!(attribute_bias(&column, 0, 0.025).unwrap(), 0.025);
    assert_eq!(attribute_bias(&column, 1, 0.025).unwrap(), 0.025);
    assert_eq!(attribute_bias(&column, 2, 0.025).unwrap(), 0.05);
    let tiny = Dataset::new(
        vec![AttributeSpec::input("x", ""), AttributeSpec::output("y", "")],
        column.iter().map(|&v| vec![v, v]).collect(),
    )
    .unwrap();
    let tiny_result = augment(&tiny, &config).unwrap();
    let xs = tiny_result.dataset.column("x").unwrap();
    assert_eq!(xs[3..6], [1.025, 2.025, 4.05]);
    assert_eq!(xs[6..9], [0.975, 1.975, 3.95]);

    // Mean preservation and the bias bound on the random table.
    for attr in d.attributes() {
        let before = d.column(&attr.name).unwrap();
        let after = result.dataset.column(&attr.name).unwrap();
        let mean_before: f64 = before.iter().sum::<f64>() / before.len() as f64;
        let mean_after: f64 = after.iter().sum::<f64>() / after.len() as f64;
        assert!(
            (mean_before - mean_after).abs() < 1e-12,
            "mean of {} drifted",
            attr.name
        );
    }
    let n = d.n_rows();
    for (g, p) in result.provenance.iter().enumerate() {
        let generated = &result.dataset.rows()[n + g];
        let original = &d.rows()[p.source_row];
        for (a, attr) in d.attributes().iter().enumerate() {
            let column = d.column(&attr.name).unwrap();
            let bias = attribute_bias(&column, p.source_row, config.interpolation_factor).unwrap();
            assert!(
                (generated[a] - original[a]).abs() <= bias * (1.0 + 1e-12) + 1e-15,
                "perturbation exceeds bias"
            );
        }
    }
    pass(
        "07",
        "60 → 180 rows; hand-traced biases exact; means preserved to 1e-12; |Δ| ≤ IF × nearest gap".to_string(),
    );
}

/// 08 — metric identities and invariances.
#[test]
fn accept_08_metrics() {
    use rand::RngExt;
    let reference = [2.0, 4.0];
    let predicted = [3.0, 3.0];
    let rmse = normalized_rmse(&reference, &predicted).unwrap();
    assert!((rmse - 2.0f64.sqrt() / 6.0).abs() < 1e-12);
    assert!((rmse - 0.235_702_260_395_516).abs() < 1e-12);
    let r2 = r_squared(&reference, &predicted).unwrap();
    assert!(r2.abs() < 1e-12);
    assert!((mean_absolute_error(&reference, &predicted).unwrap() - 1.0).abs() < 1e-12);

    let mut sampler = stream(8, "acceptance.metrics");
    for _ in 0..1000 {
        let n = 2 + (sampler.random::<f64>() * 6.0) as usize;
        let reference: Vec<f64> = (0..n).map(|_| sampler.random::<f64>() + 0.25).collect();
        let predicted: Vec<f64> = (0..n).map(|_| sampler.random::<f64>() + 0.25).collect();
        let c = 0.2 + 5.0 * sampler.random::<f64>();
        let ref_scaled: Vec<f64> = reference.iter().map(|v| c * v).collect();
        let pred_scaled: Vec<f64> = predicted.iter().map(|v| c * v).collect();
        let a = normalized_rmse(&reference, &predicted).unwrap();
        let b = normalized_rmse(&ref_scaled, &pred_scaled).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.max(1.0), "scale invariance broke");
        let a = relative_rmse(&reference, &predicted).unwrap();
        let b = relative_rmse(&ref_scaled, &pred_scaled).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }
    pass(
        "08",
        "hand values exact to 1e-12; scale invariance holds on 1000 random pairs".to_string(),
    );
}

fn pipeline_config(seed: u64, out: &std::path::Path) -> RunConfig {
    let mut config = RunConfig::default();
    config.run.seed = seed;
    config.run.output_dir = out.to_string_lossy().into_owned();
    config
}

/// 09 — directional replication over ten full pipeline runs: (a) the
/// augmented retraining matches or beats the plain network, per
/// objective, in at least 6 of 10 runs; (b) the network's mean error is
/// at or below every closed-form surrogate's in at least 6 of 10 runs.
#[test]
fn accept_09_directional_replication() {
    let root = std::env::temp_dir().join(format!("surropump-accept9-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&root);

    let objectives = ["head", "power"];
    let mut nnda_wins = [0usize; 2];
    let mut nn_wins = [0usize; 2];
    let runs = 10u64;
    for seed in 1..=runs {
        let out = root.join(format!("seed{seed}"));
        let config = pipeline_config(seed, &out);
        let artifacts = run_pipeline(&config, &out).unwrap();
        let duel = artifacts.nn_vs_nnda.as_ref().expect("augmented stage ran");
        for (k, objective) in objectives.iter().enumerate() {
            let nn = duel.entry("nn", objective).unwrap();
            let nnda = duel.entry("nnda", objective).unwrap();
            if nnda.normalized_rmse <= nn.normalized_rmse {
                nnda_wins[k] += 1;
            }
            let comparison = &artifacts.comparison;
            let nn_entry = comparison.entry("nn", objective).unwrap();
            let best_surrogate = ["rsf", "rbf", "krg"]
                .iter()
                .map(|m| comparison.entry(m, objective).unwrap().mean_absolute_error)
                .fold(f64::INFINITY, f64::min);
            if nn_entry.mean_absolute_error <= best_surrogate {
                nn_wins[k] += 1;
            }
        }
    }
    let _ = std::fs::remove_dir_all(&root);

    for (k, objective) in objectives.iter().enumerate() {
        assert!(
            nnda_wins[k] >= 6,
            "(a) augmented network won {}/{} runs for {objective}; need ≥ 6",
            nnda_wins[k],
            runs
        );
        assert!(
            nn_wins[k] >= 6,
            "(b) network beat every surrogate in {}/{} runs for {objective}; need ≥ 6",
            nn_wins[k],
            runs
        );
    }
    pass(
        "09",
        format!(
            "over {runs} runs: augmented net wins head {}/{runs}, power {}/{runs}; network beats all surrogates head {}/{runs}, power {}/{runs} (all ≥ 6)",
            nnda_wins[0], nnda_wins[1], nn_wins[0], nn_wins[1]
        ),
    );
}

/// 10 — byte-level determinism: the same seed yields identical artifacts.
#[test]
fn accept_10_determinism() {
    let root = std::env::temp_dir().join(format!("surropump-accept10-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&root);
    let a = root.join("a");
    let b = root.join("b");
    run_pipeline(&pipeline_config(3, &a), &a).unwrap();
    run_pipeline(&pipeline_config(3, &b), &b).unwrap();

    let mut checked = 0usize;
    let mut walk = vec![PathBuf::new()];
    while let Some(rel) = walk.pop() {
        for entry in std::fs::read_dir(a.join(&rel)).unwrap() {
            let entry = entry.unwrap();
            let rel_path = rel.join(entry.file_name());
            if entry.file_type().unwrap().is_dir() {
                walk.push(rel_path);
            } else {
                let left = std::fs::read(a.join(&rel_path)).unwrap();
                let right = std::fs::read(b.join(&rel_path)).unwrap();
                assert_eq!(
                    left,
                    right,
                    "artifact {} differs between identical runs",
                    rel_path.display()
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 15, "only {checked} files compared");
    let _ = std::fs::remove_dir_all(&root);
    pass(
        "10",
        format!("rerun with the same seed reproduced all {checked} artifacts byte for byte"),
    );
}
