//! Cross-module checks: the synthetic oracle feeding the model fits.

use surropump::dataset::SplitSpec;
use surropump::design::{DesignSpace, DutyPoint, lhs_sample};
use surropump::nn::{NnFitOptions, TrainConfig, fit_nn};
use surropump::oracle::SyntheticPumpOracle;
use surropump::surrogate::{
    KrgOptions, ModelDocument, ModelFile, Surrogate, WidthRule, fit_krg, fit_rbf, fit_rsf,
};

fn duty() -> DutyPoint<f64> {
    DutyPoint::from_flow_m3h(100.0, 80.0, 2950.0, 355.0).unwrap()
}

fn key_vars() -> Vec<String> {
    ["D2", "b2", "beta2"].iter().map(|s| s.to_string()).collect()
}

/// With the non-quadratic ridge switched off, the oracle restricted to the
/// key variables is an exact quadratic, so the fitted response surface
/// reproduces it on held-out points.
#[test]
fn quadratic_oracle_is_reproduced_exactly_by_rsf() {
    let oracle = SyntheticPumpOracle::new(&duty(), 0.0, 1).unwrap().with_ridge_scale(0.0);
    let space = DesignSpace::from_duty(&duty()).unwrap();
    let train_inputs = lhs_sample(&space, &key_vars(), 20, 7).unwrap();
    let train = oracle.evaluate_dataset(&train_inputs, false).unwrap();

    let test_inputs = lhs_sample(&space, &key_vars(), 10, 8).unwrap();
    let test = oracle.evaluate_dataset(&test_inputs, false).unwrap();

    for objective in ["head", "power"] {
        let model = fit_rsf(&train, objective).unwrap();
        let reference = test.column(objective).unwrap();
        for (r, &truth) in reference.iter().enumerate() {
            let pred = model.predict(&test.input_row(r)).unwrap();
            let rel = ((pred - truth) / truth).abs();
            assert!(rel < 1e-8, "{objective} row {r}: {pred} vs {truth}");
        }
    }
}

/// The full ridge makes the oracle strictly non-quadratic: the response
/// surface must now miss by far more than solver precision.
#[test]
fn ridge_term_breaks_exact_quadratic_fit() {
    let oracle = SyntheticPumpOracle::new(&duty(), 0.0, 1).unwrap();
    let space = DesignSpace::from_duty(&duty()).unwrap();
    let train_inputs = lhs_sample(&space, &key_vars(), 40, 7).unwrap();
    let train = oracle.evaluate_dataset(&train_inputs, false).unwrap();
    let test_inputs = lhs_sample(&space, &key_vars(), 20, 8).unwrap();
    let test = oracle.evaluate_dataset(&test_inputs, false).unwrap();

    let model = fit_rsf(&train, "head").unwrap();
    let reference = test.column("head").unwrap();
    let mut worst = 0.0f64;
    for (r, &truth) in reference.iter().enumerate() {
        let pred = model.predict(&test.input_row(r)).unwrap();
        worst = worst.max(((pred - truth) / truth).abs());
    }
    assert!(worst > 1e-5, "ridge should defeat the quadratic, worst {worst}");
}

#[test]
fn all_model_documents_round_trip_through_json() {
    let oracle = SyntheticPumpOracle::new(&duty(), 0.0, 2).unwrap();
    let space = DesignSpace::from_duty(&duty()).unwrap();
    let inputs = lhs_sample(&space, &key_vars(), 30, 3).unwrap();
    let data = oracle.evaluate_dataset(&inputs, false).unwrap();

    let rsf = fit_rsf(&data, "head").unwrap();
    let rbf = fit_rbf(&data, "head", 10, WidthRule::MedianPairwise, 4).unwrap();
    let krg = fit_krg(&data, "head", &KrgOptions { seed: 5, ..KrgOptions::default() }).unwrap();
    let (nn, _) = fit_nn(
        &data,
        None,
        &["head".to_string(), "power".to_string()],
        &NnFitOptions {
            hidden: 6,
            train: TrainConfig {
                max_epochs: 30,
                seed: 6,
                ..TrainConfig::default()
            },
            ..NnFitOptions::default()
        },
    )
    .unwrap();

    let probe = data.input_row(4);
    let expectations: Vec<(ModelFile<f64>, f64)> = vec![
        (ModelFile::Rsf(rsf.clone()), rsf.predict(&probe).unwrap()),
        (ModelFile::Rbf(rbf.clone()), rbf.predict(&probe).unwrap()),
        (ModelFile::Krg(krg.clone()), krg.predict(&probe).unwrap()),
        (
            ModelFile::Nn(nn.clone()),
            nn.objective_view("head").unwrap().predict(&probe).unwrap(),
        ),
    ];
    for (file, expected) in expectations {
        let doc = ModelDocument {
            config_digest: "test".into(),
            seed: 1,
            model: file,
        };
        let text = doc.to_json().unwrap();
        let back = ModelDocument::<f64>::from_json(&text).unwrap();
        let got = match &back.model {
            ModelFile::Rsf(m) => m.predict(&probe).unwrap(),
            ModelFile::Rbf(m) => m.predict(&probe).unwrap(),
            ModelFile::Krg(m) => m.predict(&probe).unwrap(),
            ModelFile::Nn(m) => m.objective_view("head").unwrap().predict(&probe).unwrap(),
        };
        assert_eq!(got, expected, "prediction changed across JSON round trip");
    }
}

/// End-to-end smoke of the protocol pieces: sample, evaluate, split, fit,
/// and check that the network beats a constant baseline on held-out data.
#[test]
fn network_learns_the_oracle_response() {
    let oracle = SyntheticPumpOracle::new(&duty(), 0.0, 9).unwrap();
    let space = DesignSpace::from_duty(&duty()).unwrap();
    let inputs = lhs_sample(&space, &key_vars(), 60, 10).unwrap();
    let data = oracle.evaluate_dataset(&inputs, false).unwrap();
    let (train, val, _) = data.split(&SplitSpec::new(0.8, 0.1, 0.1, 11)).unwrap();

    let (model, report) = fit_nn(
        &train,
        Some(&val),
        &["head".to_string(), "power".to_string()],
        &NnFitOptions {
            hidden: 12,
            train: TrainConfig {
                max_epochs: 200,
                perf_goal: 1e-9,
                seed: 12,
                ..TrainConfig::default()
            },
            ..NnFitOptions::default()
        },
    )
    .unwrap();
    assert!(report.final_performance < 1e-4, "mse {}", report.final_performance);

    let test_inputs = lhs_sample(&space, &key_vars(), 10, 13).unwrap();
    let test = oracle.evaluate_dataset(&test_inputs, false).unwrap();
    let reference = test.column("head").unwrap();
    let mean: f64 = reference.iter().sum::<f64>() / reference.len() as f64;
    let mut nn_sse = 0.0;
    let mut baseline_sse = 0.0;
    for (r, &truth) in reference.iter().enumerate() {
        let pred = model.predict(&test.input_row(r)).unwrap()[0];
        nn_sse += (pred - truth) * (pred - truth);
        baseline_sse += (mean - truth) * (mean - truth);
    }
    assert!(nn_sse < 0.05 * baseline_sse, "nn {nn_sse} vs baseline {baseline_sse}");
}
