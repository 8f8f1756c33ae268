//! Temporary probe: geometry of the augmentation triplets relative to
//! the oracle surface.

use surropump::dataset::{NormalizationParams, SplitSpec};
use surropump::design::{DesignSpace, DutyPoint, lhs_sample};
use surropump::oracle::SyntheticPumpOracle;
use surropump::rng::child_seed;

fn main() {
    let seed = 1u64;
    let duty = DutyPoint::from_flow_m3h(100.0, 80.0, 2950.0, 355.0).unwrap();
    let space = DesignSpace::from_duty(&duty).unwrap();
    let vars: Vec<String> = ["D2", "b2", "beta2"].iter().map(|s| s.to_string()).collect();

    let oracle = SyntheticPumpOracle::new(&duty, 0.005, child_seed(seed, "oracle.train")).unwrap();
    let exact = SyntheticPumpOracle::new(&duty, 0.0, 0).unwrap();
    let train_inputs = lhs_sample(&space, &vars, 60, child_seed(seed, "sample.train")).unwrap();
    let design = oracle.evaluate_dataset(&train_inputs, false).unwrap();
    let split = SplitSpec::new(0.8, 0.1, 0.1, child_seed(child_seed(seed, "train"), "split"));
    let (train48, _, _) = design.split(&split).unwrap();

    let augmented =
        surropump::augment::augment(&train48, &surropump::augment::AugmentConfig::default())
            .unwrap();

    // Normalization over the training split, as the network sees it.
    let norm = NormalizationParams::fit(&train48);
    let names: Vec<String> = train48
        .attributes()
        .iter()
        .map(|a| a.name.clone())
        .collect();

    let n = train48.n_rows();
    let mut input_steps = Vec::new();
    let mut output_steps = Vec::new();
    let mut implied = Vec::new();
    let mut truth = Vec::new();
    for (g, p) in augmented.provenance.iter().enumerate().take(n) {
        let plus = &augmented.dataset.rows()[n + g];
        let orig = &train48.rows()[p.source_row];
        // Normalized deltas.
        let mut dx2 = 0.0f64;
        let mut dy_head = 0.0f64;
        for (idx, name) in names.iter().enumerate() {
            let a = norm.normalize_value(name, orig[idx]).unwrap();
            let b = norm.normalize_value(name, plus[idx]).unwrap();
            let d = b - a;
            if idx < 3 {
                dx2 += d * d;
            } else if name == "head" {
                dy_head = d;
            }
        }
        let dx = dx2.sqrt();
        input_steps.push(dx);
        output_steps.push(dy_head.abs());
        implied.push(dy_head / dx.max(1e-300));
        // True normalized head change along the raw step.
        let point = |row: &Vec<f64>| -> Vec<(&str, f64)> {
            vars.iter()
                .map(String::as_str)
                .zip(row.iter().copied())
                .collect()
        };
        let h0 = exact.evaluate(&point(orig)).unwrap().head;
        let h1 = exact.evaluate(&point(plus)).unwrap().head;
        let t = (norm.normalize_value("head", h1).unwrap()
            - norm.normalize_value("head", h0).unwrap())
            / dx.max(1e-300);
        truth.push(t);
    }
    let stats = |v: &[f64]| -> (f64, f64, f64) {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (s[0], s[s.len() / 2], s[s.len() - 1])
    };
    println!("normalized input step (min/med/max):  {:?}", stats(&input_steps));
    println!("normalized head step (min/med/max):   {:?}", stats(&output_steps));
    println!("implied slope dy/|dx| (min/med/max):   {:?}", stats(&implied));
    println!("true slope along step (min/med/max):   {:?}", stats(&truth));
    let mismatches: Vec<f64> = implied
        .iter()
        .zip(&truth)
        .map(|(i, t)| (i - t).abs())
        .collect();
    println!("|implied - true| (min/med/max):        {:?}", stats(&mismatches));
}
