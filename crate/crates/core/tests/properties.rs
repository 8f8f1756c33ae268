//! Property tests over the dataset plumbing and model invariants.

use proptest::collection::vec;
use proptest::prelude::*;

use surropump::augment::{AugmentConfig, augment};
use surropump::dataset::{AttributeSpec, Dataset, NormalizationParams, SplitSpec};

fn finite_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        -1.0..1.0f64,
        Just(0.0),
        Just(1.0),
        Just(-1e-12),
    ]
}

fn table(max_rows: usize) -> impl Strategy<Value = Dataset<f64>> {
    (1usize..4, 1usize..3, 2usize..=max_rows).prop_flat_map(|(n_in, n_out, n_rows)| {
        let width = n_in + n_out;
        vec(vec(finite_value(), width), n_rows).prop_map(move |rows| {
            let mut attrs = Vec::new();
            for i in 0..n_in {
                attrs.push(AttributeSpec::input(&format!("x{i}"), "m"));
            }
            for o in 0..n_out {
                attrs.push(AttributeSpec::output(&format!("y{o}"), "kW"));
            }
            Dataset::new(attrs, rows).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_preserves_everything(d in table(12)) {
        let text = d.to_csv_string();
        let back = Dataset::<f64>::from_csv_str(&text).unwrap();
        prop_assert_eq!(d.attributes(), back.attributes());
        prop_assert_eq!(d.rows(), back.rows());
        // A second save is byte-identical.
        prop_assert_eq!(text, back.to_csv_string());
    }

    #[test]
    fn split_partitions_rows_exactly(d in table(40), seed in 0u64..1000) {
        prop_assume!(d.n_rows() >= 3);
        let spec = SplitSpec::new(0.6, 0.25, 0.15, seed);
        let (train, val, test) = d.split(&spec).unwrap();
        prop_assert_eq!(train.n_rows() + val.n_rows() + test.n_rows(), d.n_rows());
        // Multiset equality via sorted row text.
        let mut original: Vec<String> = d.rows().iter().map(|r| format!("{r:?}")).collect();
        let mut combined: Vec<String> = train
            .rows()
            .iter()
            .chain(val.rows())
            .chain(test.rows())
            .map(|r| format!("{r:?}"))
            .collect();
        original.sort();
        combined.sort();
        prop_assert_eq!(original, combined);
    }

    #[test]
    fn normalization_round_trip_within_1e12(d in table(20)) {
        let params = NormalizationParams::fit(&d);
        for row in d.rows() {
            for (value, attr) in row.iter().zip(d.attributes()) {
                let norm = params.normalize_value(&attr.name, *value).unwrap();
                let back = params.denormalize_value(&attr.name, norm).unwrap();
                // The round trip is exact relative to the attribute range.
                let column = d.column(&attr.name).unwrap();
                let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let scale = value.abs().max(hi - lo).max(1.0);
                prop_assert!((back - value).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn augmentation_triples_and_stays_bounded(d in table(15)) {
        let config = AugmentConfig::<f64>::default();
        let result = augment(&d, &config).unwrap();
        prop_assert_eq!(result.dataset.n_rows(), 3 * d.n_rows());
        // Every generated value stays within IF × attribute range of its source.
        for (g, p) in result.provenance.iter().enumerate() {
            let generated = &result.dataset.rows()[d.n_rows() + g];
            let original = &d.rows()[p.source_row];
            for (a, attr) in d.attributes().iter().enumerate() {
                let column = d.column(&attr.name).unwrap();
                let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let range = hi - lo;
                let delta = (generated[a] - original[a]).abs();
                let bound = config.interpolation_factor * range;
                prop_assert!(delta <= bound * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}

mod rsf_recovery {
    use super::*;
    use surropump::design::{DesignSpace, DesignVariable, lhs_sample};
    use surropump::surrogate::fit_rsf;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Any function inside the quadratic basis is recovered exactly.
        #[test]
        fn quadratic_generators_are_recovered(
            coeffs in vec(-3.0..3.0f64, 10),
            seed in 0u64..500,
        ) {
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
            let points = lhs_sample(&space, &space.names(), 20, seed).unwrap();
            let generator = |x: &[f64]| -> f64 {
                coeffs[0]
                    + coeffs[1] * x[0] + coeffs[2] * x[1] + coeffs[3] * x[2]
                    + coeffs[4] * x[0] * x[0] + coeffs[5] * x[1] * x[1] + coeffs[6] * x[2] * x[2]
                    + coeffs[7] * x[0] * x[1] + coeffs[8] * x[0] * x[2] + coeffs[9] * x[1] * x[2]
            };
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
            let probe = lhs_sample(&space, &space.names(), 8, seed + 1).unwrap();
            for row in probe.rows() {
                let truth = generator(row);
                let pred = surropump::surrogate::Surrogate::predict(&model, row).unwrap();
                let scale = truth.abs().max(1.0);
                prop_assert!((pred - truth).abs() < 1e-8 * scale, "{} vs {}", pred, truth);
            }
        }
    }
}
