//! Temporary experiment harness: NN vs NNDA across seeds and warmup
//! settings, skipping the surrogate fits and file writes.

use surropump::dataset::SplitSpec;
use surropump::design::{DesignSpace, DutyPoint, lhs_sample};
use surropump::metrics::normalized_rmse;
use surropump::nn::{NnFitOptions, TrainConfig, fit_nn};
use surropump::oracle::SyntheticPumpOracle;
use surropump::rng::child_seed;

fn main() {
    let warmup: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let seeds: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    // full60: NN trains on all 60 rows and NNDA on augment(60) = 180;
    // otherwise NN on the 48-row split and NNDA on augment(48) = 144.
    let full60: bool = std::env::args().nth(3).map(|s| s == "full").unwrap_or(false);
    let independent: bool = std::env::args().nth(4).map(|s| s == "ind").unwrap_or(false);
    let noise: f64 = std::env::args().nth(5).and_then(|s| s.parse().ok()).unwrap_or(0.005);
    let separate: bool = std::env::args().nth(6).map(|s| s == "sep").unwrap_or(false);
    let duty = DutyPoint::from_flow_m3h(100.0, 80.0, 2950.0, 355.0).unwrap();
    let space = DesignSpace::from_duty(&duty).unwrap();
    let vars: Vec<String> = ["D2", "b2", "beta2"].iter().map(|s| s.to_string()).collect();
    let objectives: Vec<String> = vec!["head".into(), "power".into()];

    let mut wins_head = 0;
    let mut wins_power = 0;
    for seed in 1..=seeds {
        let oracle_train =
            SyntheticPumpOracle::new(&duty, noise, child_seed(seed, "oracle.train")).unwrap();
        let oracle_test =
            SyntheticPumpOracle::new(&duty, noise, child_seed(seed, "oracle.test")).unwrap();
        let train_inputs = lhs_sample(&space, &vars, 60, child_seed(seed, "sample.train")).unwrap();
        let design = oracle_train.evaluate_dataset(&train_inputs, false).unwrap();
        let test_inputs = lhs_sample(&space, &vars, 10, child_seed(seed, "sample.test")).unwrap();
        let test = oracle_test.evaluate_dataset(&test_inputs, false).unwrap();

        let split = SplitSpec::new(0.8, 0.1, 0.1, child_seed(child_seed(seed, "train"), "split"));
        let (split48, val, _) = design.split(&split).unwrap();
        let train_split = if full60 { design.clone() } else { split48 };

        let nn_seed = child_seed(child_seed(seed, "train"), "nn");
        let options = NnFitOptions {
            hidden: 50,
            train: TrainConfig {
                max_epochs: 1000,
                warmup_epochs: warmup,
                seed: nn_seed,
                ..TrainConfig::default()
            },
            ..NnFitOptions::default()
        };
        let fit_all = |data: &surropump::Dataset64| -> Vec<surropump::NnModel64> {
            if separate {
                objectives
                    .iter()
                    .map(|o| {
                        fit_nn(data, Some(&val), std::slice::from_ref(o), &options)
                            .unwrap()
                            .0
                    })
                    .collect()
            } else {
                vec![fit_nn(data, Some(&val), &objectives, &options).unwrap().0]
            }
        };
        let (nn, nn_report) = fit_nn(&train_split, Some(&val), &objectives, &options).unwrap();
        let nn_models = if separate { fit_all(&train_split) } else { vec![nn.clone()] };

        let augment_config = surropump::augment::AugmentConfig {
            pairing: if independent {
                surropump::augment::Pairing::Independent
            } else {
                surropump::augment::Pairing::PlusMinus
            },
            seed: child_seed(seed, "augment"),
            ..surropump::augment::AugmentConfig::default()
        };
        let augmented = surropump::augment::augment(&train_split, &augment_config).unwrap();
        let (nnda, nnda_report) =
            fit_nn(&augmented.dataset, Some(&val), &objectives, &options).unwrap();
        let nnda_models = if separate { fit_all(&augmented.dataset) } else { vec![nnda.clone()] };

        let mut line = format!(
            "seed {seed}: train_mse nn={:.1e} nnda={:.1e} |",
            nn_report.final_performance, nnda_report.final_performance
        );
        for (_i, objective) in objectives.iter().enumerate() {
            let reference = test.column(objective).unwrap();
            let eval = |m: &surropump::NnModel64| -> f64 {
                let idx = m.output_names.iter().position(|n| n == objective).unwrap();
                let predicted: Vec<f64> = (0..test.n_rows())
                    .map(|r| m.predict(&test.input_row(r)).unwrap()[idx])
                    .collect();
                normalized_rmse(&reference, &predicted).unwrap()
            };
            let pick = |models: &[surropump::NnModel64]| -> f64 {
                let m = models
                    .iter()
                    .find(|m| m.output_names.iter().any(|n| n == objective))
                    .unwrap();
                eval(m)
            };
            let rmse_nn = if separate { pick(&nn_models) } else { eval(&nn) };
            let rmse_nnda = if separate { pick(&nnda_models) } else { eval(&nnda) };
            let win = rmse_nnda <= rmse_nn;
            if win && objective == "head" {
                wins_head += 1;
            }
            if win && objective == "power" {
                wins_power += 1;
            }
            line.push_str(&format!(
                " {objective}: nn={rmse_nn:.2e} nnda={rmse_nnda:.2e} {}",
                if win { "WIN" } else { "lose" }
            ));
        }
        println!("{line}");
    }
    println!("warmup={warmup}: nnda wins head {wins_head}/{seeds}, power {wins_power}/{seeds}");
}
