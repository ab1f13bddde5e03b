use super::*;
use crate::learners::cart::TreeNode;
use crate::learners::forest::{fit_forest, RfParams};
use crate::learners::krr::KernelSpec;
use crate::learners::mr::{Factor, MrModel, Term};
use crate::learners::svr::{fit_with as svr_fit_with, SvrParams};
use crate::rng::Stream;
use crate::space::NumericOption;
use nalgebra::{DMatrix, DVector};

fn space(bins: &[&str], numerics: &[(&str, &[f64])]) -> ConfigurationSpace {
    ConfigurationSpace::new(
        bins.iter().map(|n| n.to_string()).collect(),
        numerics
            .iter()
            .map(|(n, d)| NumericOption { name: n.to_string(), domain: d.to_vec() })
            .collect(),
        &[],
    )
    .unwrap()
}

fn labeled(space: &ConfigurationSpace, rows: &[(&[bool], &[f64], f64)]) -> LabeledSet {
    LabeledSet::new(
        rows.iter()
            .map(|(b, n, y)| (space.configuration(b.to_vec(), n.to_vec()).unwrap(), *y))
            .collect(),
    )
    .unwrap()
}

fn hp_with(learner: Learner, overrides: &[(&str, HpValue)]) -> HyperParams {
    let mut hp = default_hyper_params(learner);
    for (k, v) in overrides {
        hp.insert(k.to_string(), v.clone());
    }
    hp
}

/// Two binary and two numeric options with a smooth positive response.
fn demo_space() -> ConfigurationSpace {
    space(
        &["a", "b"],
        &[("n1", &[0.0, 10.0, 20.0, 30.0, 40.0]), ("n2", &[1.0, 2.0, 4.0, 8.0])],
    )
}

fn demo_data(sp: &ConfigurationSpace) -> LabeledSet {
    let pairs = [(0.0, 1.0), (10.0, 2.0), (20.0, 4.0), (40.0, 8.0)];
    let mut rows = Vec::new();
    for a in [false, true] {
        for b in [false, true] {
            for (n1, n2) in pairs {
                let y = 10.0
                    + 5.0 * (a as u8 as f64)
                    + 2.0 * (b as u8 as f64)
                    + 0.3 * n1
                    + n2;
                rows.push((space_config(sp, &[a, b], &[n1, n2]), y));
            }
        }
    }
    LabeledSet::new(rows).unwrap()
}

fn space_config(sp: &ConfigurationSpace, bins: &[bool], nums: &[f64]) -> Configuration {
    sp.configuration(bins.to_vec(), nums.to_vec()).unwrap()
}

// ---- labeled sets and the shared contract ----

#[test]
fn labeled_set_rejects_empty_and_nonpositive() {
    assert!(matches!(LabeledSet::new(vec![]), Err(Error::EmptyLearningSet)));
    let sp = space(&[], &[("n1", &[0.0, 1.0])]);
    let c = space_config(&sp, &[], &[0.0]);
    assert!(matches!(
        LabeledSet::new(vec![(c.clone(), 0.0)]),
        Err(Error::NonPositiveMeasurement { .. })
    ));
    assert!(matches!(
        LabeledSet::new(vec![(c, f64::NAN)]),
        Err(Error::NonPositiveMeasurement { .. })
    ));
}

#[test]
fn labeled_set_rejects_mixed_spaces() {
    let sp1 = space(&[], &[("n1", &[0.0, 1.0])]);
    let sp2 = space(&[], &[("n1", &[0.0, 2.0])]);
    let rows = vec![
        (space_config(&sp1, &[], &[0.0]), 1.0),
        (space_config(&sp2, &[], &[2.0]), 1.0),
    ];
    assert!(matches!(LabeledSet::new(rows), Err(Error::SpaceMismatch)));
}

#[test]
fn encoding_splits_binary_and_normalized_numeric() {
    let sp = demo_space();
    let enc = Encoding::from_space(&sp);
    assert_eq!(enc.width(), 4);
    assert_eq!(enc.feature_name(0), "a");
    assert_eq!(enc.feature_name(2), "n1");
    let c = space_config(&sp, &[true, false], &[20.0, 8.0]);
    assert_eq!(enc.raw(&c), vec![1.0, 0.0, 20.0, 8.0]);
    assert_eq!(enc.normalized(&c), vec![1.0, 0.0, 0.5, 1.0]);
    assert_eq!(encode(&sp, &c), enc.normalized(&c));
}

#[test]
fn default_hyper_params_expose_documented_keys() {
    let keys = |l| {
        default_hyper_params(l).keys().cloned().collect::<Vec<_>>()
    };
    assert_eq!(keys(Learner::Mr), ["functionTypes", "lossFunction", "minImprovement"]);
    assert_eq!(
        keys(Learner::Cart),
        ["max_features", "min_samples_leaf", "random_state", "splitter"]
    );
    assert_eq!(keys(Learner::Rf), ["max_features", "n_estimators", "random_state"]);
    assert_eq!(keys(Learner::Knn), ["algorithm", "n_neighbors", "p", "weights"]);
    assert_eq!(keys(Learner::Krr), ["alpha", "degree", "gamma", "kernel"]);
    assert_eq!(keys(Learner::Svr), ["C", "coef0", "epsilon", "shrinking", "tol"]);
}

#[test]
fn every_learner_rejects_unknown_keys() {
    let sp = demo_space();
    let data = demo_data(&sp);
    for learner in Learner::ALL {
        let hp = hp_with(learner, &[("no_such_knob", HpValue::Int(1))]);
        match train(learner, &sp, &data, &hp) {
            Err(Error::UnknownHyperParam { learner: l, key }) => {
                assert_eq!(l, learner.id());
                assert_eq!(key, "no_such_knob");
            }
            other => panic!("{learner}: expected unknown-key error, got {other:?}"),
        }
    }
}

#[test]
fn every_learner_trains_deterministically_on_defaults() {
    let sp = demo_space();
    let data = demo_data(&sp);
    let probes = [
        space_config(&sp, &[false, false], &[0.0, 1.0]),
        space_config(&sp, &[true, false], &[30.0, 2.0]),
        space_config(&sp, &[false, true], &[10.0, 8.0]),
        space_config(&sp, &[true, true], &[40.0, 4.0]),
    ];
    for learner in Learner::ALL {
        let hp = default_hyper_params(learner);
        let p1 = train(learner, &sp, &data, &hp).unwrap();
        let p2 = train(learner, &sp, &data, &hp).unwrap();
        for probe in &probes {
            let (a, b) = (p1.predict(probe).unwrap(), p2.predict(probe).unwrap());
            assert!(a.is_finite(), "{learner} produced {a}");
            assert_eq!(a.to_bits(), b.to_bits(), "{learner} is not deterministic");
        }
    }
}

#[test]
fn predictors_round_trip_through_json() {
    let sp = demo_space();
    let data = demo_data(&sp);
    let probes = [
        space_config(&sp, &[true, false], &[20.0, 2.0]),
        space_config(&sp, &[false, true], &[40.0, 8.0]),
    ];
    for learner in Learner::ALL {
        let p = train(learner, &sp, &data, &default_hyper_params(learner)).unwrap();
        let text = p.to_json().unwrap();
        let back = Predictor::from_json(&text).unwrap();
        assert_eq!(back.learner, learner);
        for probe in &probes {
            assert_eq!(
                p.predict(probe).unwrap().to_bits(),
                back.predict(probe).unwrap().to_bits(),
                "{learner} changed across serialization"
            );
        }
    }
}

#[test]
fn predictor_rejects_configurations_from_another_space() {
    let sp = demo_space();
    let other = space(&["a", "b"], &[("n1", &[0.0, 50.0]), ("n2", &[1.0, 2.0])]);
    let data = demo_data(&sp);
    let p = train(Learner::Cart, &sp, &data, &default_hyper_params(Learner::Cart)).unwrap();
    let foreign = space_config(&other, &[true, true], &[50.0, 2.0]);
    assert!(matches!(p.predict(&foreign), Err(Error::SpaceMismatch)));
    assert!(matches!(
        train(Learner::Cart, &other, &data, &default_hyper_params(Learner::Cart)),
        Err(Error::SpaceMismatch)
    ));
}

#[test]
fn interpolating_learners_stay_inside_the_label_range() {
    let sp = demo_space();
    let data = demo_data(&sp);
    let labels = data.labels();
    let (lo, hi) = (
        labels.iter().cloned().fold(f64::INFINITY, f64::min),
        labels.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let probes: Vec<Configuration> = sp.enumerate_valid().unwrap().collect();
    for learner in [Learner::Cart, Learner::Rf, Learner::Knn] {
        let p = train(learner, &sp, &data, &default_hyper_params(learner)).unwrap();
        for probe in &probes {
            let v = p.predict(probe).unwrap();
            assert!(
                v >= lo - 1e-9 && v <= hi + 1e-9,
                "{learner} predicted {v} outside [{lo}, {hi}]"
            );
        }
    }
}

// ---- stepwise linear regression ----

#[test]
fn mr_recovers_an_exact_linear_relation() {
    let sp = space(&["a"], &[("n1", &[1.0, 2.0, 3.0, 4.0, 5.0])]);
    let mut rows = Vec::new();
    for a in [false, true] {
        for n in 1..=5 {
            let y = 5.0 + 3.0 * (a as u8 as f64);
            rows.push((space_config(&sp, &[a], &[n as f64]), y));
        }
    }
    let data = LabeledSet::new(rows).unwrap();
    let p = train(Learner::Mr, &sp, &data, &default_hyper_params(Learner::Mr)).unwrap();
    let ModelState::Mr(model) = &p.state else { panic!("expected an mr model") };
    assert_eq!(
        model.terms,
        vec![Term { factors: vec![] }, Term { factors: vec![Factor::Binary { index: 0 }] }]
    );
    assert!((model.coefficients[0] - 5.0).abs() < 1e-9);
    assert!((model.coefficients[1] - 3.0).abs() < 1e-9);
    let probe = space_config(&sp, &[true], &[3.0]);
    assert!((p.predict(&probe).unwrap() - 8.0).abs() < 1e-9);
}

#[test]
fn mr_keeps_only_the_intercept_on_constant_labels() {
    let sp = space(&["a"], &[("n1", &[1.0, 2.0, 3.0, 4.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[false], &[1.0], 7.0),
        (&[false], &[2.0], 7.0),
        (&[true], &[3.0], 7.0),
        (&[true], &[4.0], 7.0),
        (&[false], &[4.0], 7.0),
        (&[true], &[1.0], 7.0),
    ];
    let data = labeled(&sp, &rows);
    let p = train(Learner::Mr, &sp, &data, &default_hyper_params(Learner::Mr)).unwrap();
    let ModelState::Mr(model) = &p.state else { panic!("expected an mr model") };
    assert_eq!(model.terms.len(), 1);
    assert!((model.coefficients[0] - 7.0).abs() < 1e-9);
}

#[test]
fn mr_reaches_interactions_through_products_of_selected_terms() {
    // y = 10 + 30*a*n1 cannot be written as intercept + a + powers of n1,
    // so an exact fit proves the product pool was used. The greedy path is
    // forced: the binary halves the score, the linear term then ties (which
    // a zero improvement floor accepts), and their product zeroes it.
    let sp = space(&["a"], &[("n1", &[1.0, 3.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[false], &[1.0], 10.0),
        (&[false], &[3.0], 10.0),
        (&[true], &[1.0], 40.0),
        (&[true], &[3.0], 100.0),
    ];
    let data = labeled(&sp, &rows);
    let hp = hp_with(
        Learner::Mr,
        &[
            ("minImprovement", HpValue::Float(0.0)),
            ("lossFunction", HpValue::Str("absolute".into())),
        ],
    );
    let p = train(Learner::Mr, &sp, &data, &hp).unwrap();
    let ModelState::Mr(model) = &p.state else { panic!("expected an mr model") };
    let product = Term {
        factors: vec![Factor::Binary { index: 0 }, Factor::Power { index: 0, degree: 1 }],
    };
    assert!(model.terms.contains(&product), "terms were {:?}", model.terms);
    for (b, n, y) in &rows {
        let probe = space_config(&sp, b, n);
        let pred = p.predict(&probe).unwrap();
        assert!((pred - y).abs() < 1e-8, "predicted {pred}, measured {y}");
    }
}

#[test]
fn mr_extended_pool_survives_logs_of_zero() {
    // n1 contains 0, so the log base term is unusable and must be dropped
    // without poisoning the fit.
    let sp = space(&[], &[("n1", &[0.0, 1.0, 2.0]), ("n2", &[1.0, 2.0, 4.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[], &[0.0, 1.0], 2.0),
        (&[], &[1.0, 2.0], 5.0),
        (&[], &[2.0, 4.0], 11.0),
        (&[], &[2.0, 1.0], 8.0),
        (&[], &[0.0, 4.0], 4.0),
        (&[], &[1.0, 1.0], 4.5),
    ];
    let data = labeled(&sp, &rows);
    let hp = hp_with(Learner::Mr, &[("functionTypes", HpValue::Str("extended".into()))]);
    let p = train(Learner::Mr, &sp, &data, &hp).unwrap();
    let probe = space_config(&sp, &[], &[1.0, 2.0]);
    assert!(p.predict(&probe).unwrap().is_finite());
}

#[test]
fn mr_term_strings_read_as_formulas() {
    let sp = space(&["a"], &[("n1", &[1.0, 2.0]), ("n2", &[1.0, 2.0])]);
    let enc = Encoding::from_space(&sp);
    let model = MrModel {
        terms: vec![
            Term { factors: vec![] },
            Term { factors: vec![Factor::Binary { index: 0 }] },
            Term {
                factors: vec![
                    Factor::Binary { index: 0 },
                    Factor::Power { index: 0, degree: 2 },
                ],
            },
        ],
        coefficients: vec![5.0, 3.0, 2.5],
        n_binary: 1,
    };
    assert_eq!(model.term_string(&enc), "5.0 + 3.0*a + 2.5*a*n1^2");

    let negated = MrModel {
        terms: vec![
            Term { factors: vec![] },
            Term { factors: vec![Factor::Log { index: 0 }] },
            Term { factors: vec![Factor::Ratio { num: 0, den: 1 }] },
        ],
        coefficients: vec![-1.5, 2.0, -0.5],
        n_binary: 1,
    };
    assert_eq!(negated.term_string(&enc), "-1.5 + 2.0*log(n1) - 0.5*n1/n2");
}

#[test]
fn mr_products_canonicalize() {
    let a = Term { factors: vec![Factor::Binary { index: 0 }] };
    let n2 = Term { factors: vec![Factor::Power { index: 0, degree: 2 }] };
    let an2 = a.product(&n2);
    // A binary squared is itself; powers of one option merge.
    assert_eq!(an2.product(&a), an2);
    assert_eq!(
        an2.product(&n2).factors,
        vec![Factor::Binary { index: 0 }, Factor::Power { index: 0, degree: 4 }]
    );
}

#[test]
fn mr_needs_two_rows() {
    let sp = space(&[], &[("n1", &[0.0, 1.0])]);
    let data = labeled(&sp, &[(&[], &[0.0], 1.0)]);
    assert!(matches!(
        train(Learner::Mr, &sp, &data, &default_hyper_params(Learner::Mr)),
        Err(Error::NotEnoughRows { context: "mr", needed: 2, got: 1 })
    ));
}

#[test]
fn mr_rejects_bad_values() {
    let sp = space(&[], &[("n1", &[0.0, 1.0])]);
    let data = labeled(&sp, &[(&[], &[0.0], 1.0), (&[], &[1.0], 2.0)]);
    for (key, value) in [
        ("lossFunction", HpValue::Str("squared".into())),
        ("functionTypes", HpValue::Str("fourier".into())),
        ("minImprovement", HpValue::Float(-0.1)),
    ] {
        let hp = hp_with(Learner::Mr, &[(key, value)]);
        assert!(matches!(
            train(Learner::Mr, &sp, &data, &hp),
            Err(Error::BadHyperParam { .. })
        ));
    }
}

// ---- regression trees ----

fn figure_tree_space() -> ConfigurationSpace {
    space(&["a"], &[("n", &[0.0, 10.0, 20.0, 30.0, 40.0])])
}

fn figure_tree_data(sp: &ConfigurationSpace) -> LabeledSet {
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[false], &[0.0], 100.0),
        (&[false], &[20.0], 100.0),
        (&[false], &[40.0], 100.0),
        (&[true], &[0.0], 200.0),
        (&[true], &[10.0], 200.0),
        (&[true], &[20.0], 200.0),
        (&[true], &[30.0], 250.0),
        (&[true], &[40.0], 250.0),
    ];
    labeled(sp, &rows)
}

#[test]
fn cart_grows_the_handworked_tree() {
    let sp = figure_tree_space();
    let data = figure_tree_data(&sp);
    let p = train(Learner::Cart, &sp, &data, &default_hyper_params(Learner::Cart)).unwrap();
    let ModelState::Cart(tree) = &p.state else { panic!("expected a cart model") };

    // Splitting on the binary option reduces the error most, then the
    // numeric option separates the two plateaus at its 20/30 midpoint.
    let TreeNode::Split { feature, threshold, left, right } = &tree.root else {
        panic!("root must split")
    };
    assert_eq!(*feature, 0);
    assert_eq!(*threshold, 0.5);
    assert!(matches!(**left, TreeNode::Leaf { value } if value == 100.0));
    let TreeNode::Split { feature, threshold, left, right } = &**right else {
        panic!("right child must split")
    };
    assert_eq!(*feature, 1);
    assert_eq!(*threshold, 25.0);
    assert!(matches!(**left, TreeNode::Leaf { value } if value == 200.0));
    assert!(matches!(**right, TreeNode::Leaf { value } if value == 250.0));

    for (bins, nums, want) in [
        (&[false][..], &[10.0][..], 100.0),
        (&[true], &[10.0], 200.0),
        (&[true], &[30.0], 250.0),
        (&[true], &[40.0], 250.0),
    ] {
        let probe = space_config(&sp, bins, nums);
        assert_eq!(p.predict(&probe).unwrap(), want);
    }
}

#[test]
fn cart_with_unit_leaves_interpolates_training_rows() {
    let sp = demo_space();
    let data = demo_data(&sp);
    let p = train(Learner::Cart, &sp, &data, &default_hyper_params(Learner::Cart)).unwrap();
    for (config, y) in data.rows() {
        assert_eq!(p.predict(config).unwrap(), *y);
    }
}

#[test]
fn cart_leaf_floor_collapses_to_the_mean() {
    let sp = figure_tree_space();
    let data = figure_tree_data(&sp);
    let hp = hp_with(Learner::Cart, &[("min_samples_leaf", HpValue::Int(8))]);
    let p = train(Learner::Cart, &sp, &data, &hp).unwrap();
    let mean = data.labels().iter().sum::<f64>() / data.len() as f64;
    let probe = space_config(&sp, &[true], &[40.0]);
    assert_eq!(p.predict(&probe).unwrap(), mean);
    let ModelState::Cart(tree) = &p.state else { panic!("expected a cart model") };
    assert_eq!(tree.depth(), 0);
}

#[test]
fn cart_random_splitter_is_reproducible_and_bounded() {
    let sp = demo_space();
    let data = demo_data(&sp);
    let hp = hp_with(
        Learner::Cart,
        &[
            ("splitter", HpValue::Str("random".into())),
            ("random_state", HpValue::Int(11)),
        ],
    );
    let p1 = train(Learner::Cart, &sp, &data, &hp).unwrap();
    let p2 = train(Learner::Cart, &sp, &data, &hp).unwrap();
    let labels = data.labels();
    let (lo, hi) = (
        labels.iter().cloned().fold(f64::INFINITY, f64::min),
        labels.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    for config in sp.enumerate_valid().unwrap() {
        let (a, b) = (p1.predict(&config).unwrap(), p2.predict(&config).unwrap());
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a >= lo && a <= hi);
    }
}

#[test]
fn cart_validates_max_features() {
    let sp = figure_tree_space();
    let data = figure_tree_data(&sp);
    for value in [HpValue::Int(0), HpValue::Float(1.5), HpValue::Str("most".into())] {
        let hp = hp_with(Learner::Cart, &[("max_features", value)]);
        assert!(matches!(
            train(Learner::Cart, &sp, &data, &hp),
            Err(Error::BadHyperParam { .. })
        ));
    }
    for value in [
        HpValue::Int(1),
        HpValue::Float(0.5),
        HpValue::Str("sqrt".into()),
        HpValue::Str("log2".into()),
    ] {
        let hp = hp_with(Learner::Cart, &[("max_features", value)]);
        assert!(train(Learner::Cart, &sp, &data, &hp).is_ok());
    }
}

// ---- random forests ----

#[test]
fn forest_of_one_unbootstrapped_tree_matches_cart() {
    // Every split in this data set is unique, so the tree is independent
    // of feature ordering and the single-tree forest must coincide with
    // the plain tree.
    let sp = figure_tree_space();
    let data = figure_tree_data(&sp);
    let enc = Encoding::from_space(&sp);
    let params = RfParams {
        n_estimators: 1,
        max_features: cart::MaxFeatures::All,
        random_state: 9,
    };
    let forest = fit_forest(&enc, &data, &params, false);
    let cart_p =
        train(Learner::Cart, &sp, &data, &default_hyper_params(Learner::Cart)).unwrap();
    for config in sp.enumerate_valid().unwrap() {
        let x = enc.raw(&config);
        assert_eq!(forest.predict(&x), cart_p.predict(&config).unwrap());
    }
}

#[test]
fn forest_prediction_is_the_mean_of_its_trees() {
    let sp = demo_space();
    let data = demo_data(&sp);
    let hp = hp_with(Learner::Rf, &[("n_estimators", HpValue::Int(5))]);
    let p = train(Learner::Rf, &sp, &data, &hp).unwrap();
    let ModelState::Rf(forest) = &p.state else { panic!("expected a forest") };
    assert_eq!(forest.trees.len(), 5);
    let probe = space_config(&sp, &[true, false], &[30.0, 4.0]);
    let x = p.encoding.raw(&probe);
    let mean = forest.trees.iter().map(|t| t.predict(&x)).sum::<f64>() / 5.0;
    assert_eq!(p.predict(&probe).unwrap(), mean);
}

#[test]
fn forest_bootstrap_depends_only_on_the_seed() {
    let sp = demo_space();
    let data = demo_data(&sp);
    let hp = hp_with(
        Learner::Rf,
        &[("n_estimators", HpValue::Int(20)), ("random_state", HpValue::Int(3))],
    );
    let p1 = train(Learner::Rf, &sp, &data, &hp).unwrap();
    let p2 = train(Learner::Rf, &sp, &data, &hp).unwrap();
    for config in sp.enumerate_valid().unwrap() {
        assert_eq!(
            p1.predict(&config).unwrap().to_bits(),
            p2.predict(&config).unwrap().to_bits()
        );
    }
}

// ---- nearest neighbors ----

#[test]
fn knn_five_uniform_neighbors_average_the_circle() {
    // Thirteen scattered points; the five nearest to (1.5, 1.5) carry
    // 10, 20, 30, 70, and 80, so the prediction is their mean.
    let n1_domain: &[f64] =
        &[0.4, 0.5, 0.7, 0.9, 1.0, 1.5, 1.6, 1.7, 1.9, 2.1, 2.3, 2.5, 2.7];
    let n2_domain: &[f64] = &[0.4, 0.5, 0.6, 0.8, 1.0, 1.4, 1.5, 1.9, 2.0, 2.3, 2.4, 2.8];
    let sp = space(&[], &[("n1", n1_domain), ("n2", n2_domain)]);
    let points = [
        (1.0, 1.0, 10.0),
        (1.6, 0.5, 20.0),
        (2.1, 1.9, 30.0),
        (0.4, 2.4, 40.0),
        (0.5, 2.4, 50.0),
        (0.7, 2.3, 60.0),
        (0.9, 1.4, 70.0),
        (1.7, 1.9, 80.0),
        (1.9, 0.4, 90.0),
        (2.3, 0.8, 100.0),
        (2.7, 0.6, 110.0),
        (2.5, 2.8, 120.0),
        (2.5, 2.0, 130.0),
    ];
    let rows: Vec<(Configuration, f64)> = points
        .iter()
        .map(|&(x, y, v)| (space_config(&sp, &[], &[x, y]), v))
        .collect();
    let data = LabeledSet::new(rows).unwrap();
    let p = train(Learner::Knn, &sp, &data, &default_hyper_params(Learner::Knn)).unwrap();
    let probe = space_config(&sp, &[], &[1.5, 1.5]);
    assert!((p.predict(&probe).unwrap() - 42.0).abs() < 1e-9);
}

#[test]
fn knn_single_neighbor_memorizes_training_rows() {
    let sp = demo_space();
    let data = demo_data(&sp);
    let hp = hp_with(Learner::Knn, &[("n_neighbors", HpValue::Int(1))]);
    let p = train(Learner::Knn, &sp, &data, &hp).unwrap();
    for (config, y) in data.rows() {
        assert_eq!(p.predict(config).unwrap(), *y);
    }
}

#[test]
fn knn_equidistant_neighbors_average_uniformly() {
    let sp = space(&[], &[("n1", &[0.0, 0.5, 1.0]), ("n2", &[0.0, 0.5, 1.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[], &[0.0, 0.5], 1.0),
        (&[], &[1.0, 0.5], 2.0),
        (&[], &[0.5, 0.0], 3.0),
    ];
    let data = labeled(&sp, &rows);
    let hp = hp_with(Learner::Knn, &[("n_neighbors", HpValue::Int(3))]);
    let p = train(Learner::Knn, &sp, &data, &hp).unwrap();
    let probe = space_config(&sp, &[], &[0.5, 0.5]);
    assert!((p.predict(&probe).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn knn_manhattan_metric_changes_the_nearest_neighbor() {
    let sp = space(&[], &[("n1", &[0.0, 0.5, 1.0]), ("n2", &[0.0, 0.5, 0.9, 1.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> =
        vec![(&[], &[0.5, 0.5], 100.0), (&[], &[0.0, 0.9], 200.0)];
    let data = labeled(&sp, &rows);
    let probe = space_config(&sp, &[], &[0.0, 0.0]);

    let euclid = hp_with(Learner::Knn, &[("n_neighbors", HpValue::Int(1))]);
    let p2 = train(Learner::Knn, &sp, &data, &euclid).unwrap();
    assert_eq!(p2.predict(&probe).unwrap(), 100.0);

    let manhattan = hp_with(
        Learner::Knn,
        &[("n_neighbors", HpValue::Int(1)), ("p", HpValue::Int(1))],
    );
    let p1 = train(Learner::Knn, &sp, &data, &manhattan).unwrap();
    assert_eq!(p1.predict(&probe).unwrap(), 200.0);
}

#[test]
fn knn_distance_weights_follow_inverse_distance() {
    let sp = space(&[], &[("n1", &[0.0, 0.25, 1.0]), ("n2", &[0.0, 1.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> =
        vec![(&[], &[0.0, 0.0], 10.0), (&[], &[1.0, 0.0], 40.0)];
    let data = labeled(&sp, &rows);
    let hp = hp_with(
        Learner::Knn,
        &[
            ("n_neighbors", HpValue::Int(2)),
            ("weights", HpValue::Str("distance".into())),
        ],
    );
    let p = train(Learner::Knn, &sp, &data, &hp).unwrap();
    // Distances 0.25 and 0.75 give weights 4 and 4/3.
    let probe = space_config(&sp, &[], &[0.25, 0.0]);
    assert!((p.predict(&probe).unwrap() - 17.5).abs() < 1e-12);
}

#[test]
fn knn_zero_distance_neighbors_short_circuit() {
    let sp = space(&[], &[("n1", &[0.0, 0.5, 1.0]), ("n2", &[0.0, 0.5, 1.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[], &[0.5, 0.5], 10.0),
        (&[], &[0.5, 0.5], 30.0),
        (&[], &[0.0, 0.0], 100.0),
        (&[], &[1.0, 1.0], 100.0),
    ];
    let data = labeled(&sp, &rows);
    let hp = hp_with(
        Learner::Knn,
        &[
            ("n_neighbors", HpValue::Int(3)),
            ("weights", HpValue::Str("distance".into())),
        ],
    );
    let p = train(Learner::Knn, &sp, &data, &hp).unwrap();
    let probe = space_config(&sp, &[], &[0.5, 0.5]);
    assert_eq!(p.predict(&probe).unwrap(), 20.0);
}

#[test]
fn knn_requires_enough_rows_for_k() {
    let sp = space(&[], &[("n1", &[0.0, 0.5, 1.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> =
        vec![(&[], &[0.0], 1.0), (&[], &[0.5], 2.0), (&[], &[1.0], 3.0)];
    let data = labeled(&sp, &rows);
    assert!(matches!(
        train(Learner::Knn, &sp, &data, &default_hyper_params(Learner::Knn)),
        Err(Error::NotEnoughRows { context: "knn", needed: 5, got: 3 })
    ));
}

// ---- kernel ridge regression ----

#[test]
fn krr_with_vanishing_ridge_matches_least_squares() {
    let sp = space(&[], &[("n1", &[0.0, 1.0, 2.0, 4.0]), ("n2", &[0.0, 1.0, 3.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[], &[1.0, 0.0], 1.2),
        (&[], &[2.0, 1.0], 2.3),
        (&[], &[4.0, 1.0], 3.1),
        (&[], &[0.0, 3.0], 2.9),
        (&[], &[1.0, 3.0], 3.8),
        (&[], &[4.0, 3.0], 5.2),
        (&[], &[2.0, 0.0], 1.4),
    ];
    let data = labeled(&sp, &rows);
    let hp = hp_with(Learner::Krr, &[("alpha", HpValue::Float(1e-8))]);
    let p = train(Learner::Krr, &sp, &data, &hp).unwrap();

    // Reference: ordinary least squares on the normalized features via the
    // normal equations (the linear kernel spans exactly these functions).
    let enc = Encoding::from_space(&sp);
    let n = rows.len();
    let mut x = DMatrix::zeros(n, 2);
    let mut y = DVector::zeros(n);
    for (i, (b, v, label)) in rows.iter().enumerate() {
        let f = enc.normalized(&space_config(&sp, b, v));
        x[(i, 0)] = f[0];
        x[(i, 1)] = f[1];
        y[i] = *label;
    }
    let xtx = x.transpose() * &x;
    let w = xtx.lu().solve(&(x.transpose() * &y)).unwrap();
    for (b, v, _) in &rows {
        let config = space_config(&sp, b, v);
        let f = enc.normalized(&config);
        let want = w[0] * f[0] + w[1] * f[1];
        assert!((p.predict(&config).unwrap() - want).abs() < 1e-5);
    }
    let fresh = space_config(&sp, &[], &[4.0, 0.0]);
    let want = w[0] * 1.0 + w[1] * 0.0;
    assert!((p.predict(&fresh).unwrap() - want).abs() < 1e-5);
}

#[test]
fn krr_heavy_ridge_shrinks_predictions_toward_zero() {
    let sp = space(&[], &[("n1", &[0.0, 1.0, 2.0, 4.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[], &[0.0], 4.0),
        (&[], &[1.0], 5.0),
        (&[], &[2.0], 6.0),
        (&[], &[4.0], 8.0),
    ];
    let data = labeled(&sp, &rows);
    let hp = hp_with(Learner::Krr, &[("alpha", HpValue::Float(1e9))]);
    let p = train(Learner::Krr, &sp, &data, &hp).unwrap();
    let probe = space_config(&sp, &[], &[4.0]);
    assert!(p.predict(&probe).unwrap().abs() < 1e-3);
}

#[test]
fn krr_rbf_without_ridge_interpolates() {
    let sp = space(&[], &[("n1", &[0.0, 1.0, 2.0, 3.0, 4.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[], &[0.0], 2.0),
        (&[], &[1.0], 3.5),
        (&[], &[2.0], 1.8),
        (&[], &[3.0], 4.2),
        (&[], &[4.0], 2.6),
    ];
    let data = labeled(&sp, &rows);
    let hp = hp_with(
        Learner::Krr,
        &[
            ("alpha", HpValue::Float(0.0)),
            ("kernel", HpValue::Str("rbf".into())),
            ("gamma", HpValue::Float(0.5)),
        ],
    );
    let p = train(Learner::Krr, &sp, &data, &hp).unwrap();
    for (b, v, y) in &rows {
        let config = space_config(&sp, b, v);
        assert!((p.predict(&config).unwrap() - y).abs() < 1e-6);
    }
}

#[test]
fn krr_reports_an_exactly_singular_system() {
    // With these rows the third kernel row is the sum of the first two,
    // exactly, so elimination hits a zero pivot.
    let sp = space(&[], &[("n1", &[0.0, 1.0]), ("n2", &[0.0, 1.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[], &[0.0, 1.0], 1.0),
        (&[], &[1.0, 0.0], 2.0),
        (&[], &[1.0, 1.0], 3.0),
    ];
    let data = labeled(&sp, &rows);
    let hp = hp_with(Learner::Krr, &[("alpha", HpValue::Float(0.0))]);
    assert!(matches!(
        train(Learner::Krr, &sp, &data, &hp),
        Err(Error::SingularKernel)
    ));
}

#[test]
fn krr_polynomial_kernel_pins_its_offset() {
    let sp = space(&[], &[("n1", &[0.0, 1.0, 2.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> =
        vec![(&[], &[0.0], 1.0), (&[], &[1.0], 2.0), (&[], &[2.0], 4.0)];
    let data = labeled(&sp, &rows);
    let hp = hp_with(
        Learner::Krr,
        &[
            ("kernel", HpValue::Str("polynomial".into())),
            ("degree", HpValue::Int(2)),
            ("gamma", HpValue::Float(1.0)),
        ],
    );
    let p = train(Learner::Krr, &sp, &data, &hp).unwrap();
    let ModelState::Krr(model) = &p.state else { panic!("expected a krr model") };
    assert_eq!(
        model.kernel,
        KernelSpec::Polynomial { gamma: 1.0, coef0: 1.0, degree: 2 }
    );
}

#[test]
fn kernel_evaluations_match_their_formulas() {
    let a = [1.0, 0.5];
    let b = [0.5, 1.0];
    assert_eq!(KernelSpec::Linear.eval(&a, &b), 1.0);
    let poly = KernelSpec::Polynomial { gamma: 2.0, coef0: 1.0, degree: 3 };
    assert!((poly.eval(&a, &b) - 27.0).abs() < 1e-12);
    let rbf = KernelSpec::Rbf { gamma: 0.5 };
    assert!((rbf.eval(&a, &b) - (-0.25f64).exp()).abs() < 1e-12);
}

// ---- support vector regression ----

#[test]
fn svr_fits_constant_labels_exactly() {
    let sp = space(&[], &[("n1", &[0.0, 1.0, 2.0, 3.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[], &[0.0], 5.0),
        (&[], &[1.0], 5.0),
        (&[], &[2.0], 5.0),
        (&[], &[3.0], 5.0),
    ];
    let data = labeled(&sp, &rows);
    let p = train(Learner::Svr, &sp, &data, &default_hyper_params(Learner::Svr)).unwrap();
    assert!(p.warnings.is_empty());
    let probe = space_config(&sp, &[], &[2.0]);
    assert!((p.predict(&probe).unwrap() - 5.0).abs() < 1e-6);
}

#[test]
fn svr_keeps_linear_data_inside_the_tube() {
    let rows: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 / 10.0]).collect();
    let y: Vec<f64> = rows.iter().map(|r| 2.0 + r[0]).collect();
    let params =
        SvrParams { c: 100.0, epsilon: 0.1, shrinking: true, tol: 1e-4 };
    let (model, warnings) =
        svr_fit_with(rows.clone(), y.clone(), &params, KernelSpec::Linear, 200_000);
    assert!(warnings.is_empty());
    assert!(model.beta.iter().sum::<f64>().abs() < 1e-8);
    for (r, want) in rows.iter().zip(&y) {
        let got = model.predict(r);
        assert!(
            (got - want).abs() <= params.epsilon + 1e-3,
            "residual {} exceeds the tube",
            (got - want).abs()
        );
    }
}

#[test]
fn svr_solution_satisfies_the_box_and_slackened_stationarity() {
    let mut rng = Stream::new(7);
    let rows: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.unit(), rng.unit()]).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| 2.0 + (3.0 * r[0]).sin() * (2.0 * r[1]).cos() + 0.1 * rng.unit())
        .collect();
    let c = 10.0;
    let epsilon = 0.05;
    let tol = 1e-4;
    let params = SvrParams { c, epsilon, shrinking: true, tol };
    let (model, warnings) =
        svr_fit_with(rows.clone(), y.clone(), &params, KernelSpec::Rbf { gamma: 1.0 }, 200_000);
    assert!(warnings.is_empty());

    assert!(model.beta.iter().sum::<f64>().abs() < 1e-8);
    for b in &model.beta {
        assert!(b.abs() <= c + 1e-12);
    }
    // Optimality conditions, slackened by the solver tolerance: interior
    // coefficients sit on the tube boundary, bound coefficients outside it,
    // zero coefficients inside it.
    let slack = 5e-3;
    let edge = 1e-8 * c;
    for i in 0..rows.len() {
        let r = y[i] - model.predict(&rows[i]);
        let b = model.beta[i];
        if b.abs() <= edge {
            assert!(r.abs() <= epsilon + slack, "row {i}: zero beta but residual {r}");
        } else if b >= c - edge {
            assert!(r >= epsilon - slack, "row {i}: beta at +C but residual {r}");
        } else if b <= -(c - edge) {
            assert!(r <= -epsilon + slack, "row {i}: beta at -C but residual {r}");
        } else if b > 0.0 {
            assert!((r - epsilon).abs() <= slack, "row {i}: free beta {b}, residual {r}");
        } else {
            assert!((r + epsilon).abs() <= slack, "row {i}: free beta {b}, residual {r}");
        }
    }
}

#[test]
fn svr_shrinking_does_not_change_the_solution() {
    let mut rng = Stream::new(99);
    let rows: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.unit(), rng.unit()]).collect();
    let y: Vec<f64> = rows.iter().map(|r| 1.0 + r[0] * r[0] + 0.5 * r[1]).collect();
    let base = SvrParams { c: 5.0, epsilon: 0.02, shrinking: true, tol: 1e-5 };
    let plain = SvrParams { shrinking: false, ..base };
    let kernel = KernelSpec::Rbf { gamma: 2.0 };
    let (with, _) = svr_fit_with(rows.clone(), y.clone(), &base, kernel.clone(), 200_000);
    let (without, _) = svr_fit_with(rows.clone(), y, &plain, kernel, 200_000);
    for r in &rows {
        assert!((with.predict(r) - without.predict(r)).abs() < 1e-3);
    }
}

#[test]
fn svr_iteration_cap_surfaces_as_a_warning() {
    let rows: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 / 10.0]).collect();
    let y: Vec<f64> = rows.iter().map(|r| 2.0 + (7.0 * r[0]).sin().abs() + 0.5).collect();
    let params = SvrParams { c: 100.0, epsilon: 1e-3, shrinking: false, tol: 1e-9 };
    let (model, warnings) = svr_fit_with(rows.clone(), y, &params, KernelSpec::Linear, 3);
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].contains("3 iterations"));
    assert!(model.predict(&rows[0]).is_finite());
}

#[test]
fn svr_default_kernel_width_follows_the_feature_variance() {
    let sp = space(&["a"], &[("n1", &[0.0, 10.0, 20.0])]);
    let rows: Vec<(&[bool], &[f64], f64)> = vec![
        (&[false], &[0.0], 1.0),
        (&[true], &[10.0], 2.0),
        (&[false], &[20.0], 3.0),
        (&[true], &[0.0], 4.0),
    ];
    let data = labeled(&sp, &rows);
    let p = train(Learner::Svr, &sp, &data, &default_hyper_params(Learner::Svr)).unwrap();
    let ModelState::Svr(model) = &p.state else { panic!("expected an svr model") };
    let enc = Encoding::from_space(&sp);
    let flat: Vec<f64> = data
        .rows()
        .iter()
        .flat_map(|(c, _)| enc.normalized(c))
        .collect();
    let mean = flat.iter().sum::<f64>() / flat.len() as f64;
    let var = flat.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / flat.len() as f64;
    match model.kernel {
        KernelSpec::Rbf { gamma } => {
            assert!((gamma - 1.0 / (2.0 * var)).abs() < 1e-12)
        }
        ref other => panic!("expected an rbf kernel, got {other:?}"),
    }
}

#[test]
fn svr_rejects_degenerate_settings() {
    let sp = space(&[], &[("n1", &[0.0, 1.0])]);
    let data = labeled(&sp, &[(&[], &[0.0], 1.0), (&[], &[1.0], 2.0)]);
    for (key, value) in [
        ("C", HpValue::Float(0.0)),
        ("epsilon", HpValue::Float(-0.5)),
        ("tol", HpValue::Float(0.0)),
    ] {
        let hp = hp_with(Learner::Svr, &[(key, value)]);
        assert!(matches!(
            train(Learner::Svr, &sp, &data, &hp),
            Err(Error::BadHyperParam { .. })
        ));
    }
}

#[test]
fn term_strings_exist_only_for_the_stepwise_learner() {
    let sp = demo_space();
    let data = demo_data(&sp);
    let mr = train(Learner::Mr, &sp, &data, &default_hyper_params(Learner::Mr)).unwrap();
    assert!(mr.term_string().is_some());
    let cart = train(Learner::Cart, &sp, &data, &default_hyper_params(Learner::Cart)).unwrap();
    assert!(cart.term_string().is_none());
}
