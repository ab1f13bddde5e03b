use super::*;

pub fn space_from(
    binary: &[&str],
    numeric: &[(&str, &[f64])],
    constraints: &[&str],
) -> ConfigurationSpace {
    ConfigurationSpace::new(
        binary.iter().map(|s| s.to_string()).collect(),
        numeric
            .iter()
            .map(|(n, d)| NumericOption { name: n.to_string(), domain: d.to_vec() })
            .collect(),
        &constraints.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
    )
    .unwrap()
}

#[test]
fn multigrid_fixture_has_expected_shape_and_count() {
    let space =
        ConfigurationSpace::from_json(include_str!("../../tests/data/dune_mgs.json")).unwrap();
    assert_eq!(space.binary_options().len(), 8);
    assert_eq!(space.numeric_options().len(), 3);
    assert_eq!(space.constraints().len(), 13);
    // 2 preconditioners x 4 solvers x 2 free binary = 32 binary combinations,
    // 6 * 6 * 2 = 72 numeric ones.
    assert_eq!(space.count_valid().unwrap(), 2304);
}

#[test]
fn hsmgp_fixture_counts() {
    let space =
        ConfigurationSpace::from_json(include_str!("../../tests/data/hsmgp.json")).unwrap();
    assert_eq!(space.binary_options().len(), 11);
    assert_eq!(space.numeric_options().len(), 3);
    assert_eq!(space.constraints().len(), 26);
    assert_eq!(space.count_valid().unwrap(), 3456);
}

#[test]
fn javagc_fixture_counts() {
    let space =
        ConfigurationSpace::from_json(include_str!("../../tests/data/javagc.json")).unwrap();
    assert_eq!(space.binary_options().len(), 5);
    assert_eq!(space.numeric_options().len(), 6);
    assert_eq!(space.constraints().len(), 0);
    assert_eq!(space.count_valid().unwrap(), 193_536);
}

#[test]
fn range_declaration_expands_inclusively() {
    let space = ConfigurationSpace::from_json(
        r#"{"numeric": [{"name": "n", "min": 0, "max": 10, "step": 2}]}"#,
    )
    .unwrap();
    assert_eq!(space.numeric_options()[0].domain, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
}

#[test]
fn fractional_step_expansion_lands_on_exact_members() {
    let space = ConfigurationSpace::from_json(
        r#"{"numeric": [{"name": "n", "min": 0.1, "max": 0.4, "step": 0.1}]}"#,
    )
    .unwrap();
    assert_eq!(space.numeric_options()[0].domain.len(), 4);
}

#[test]
fn duplicate_option_name_is_rejected() {
    let err = ConfigurationSpace::new(
        vec!["a".into(), "a".into()],
        vec![],
        &[],
    )
    .unwrap_err();
    assert!(matches!(err, Error::DuplicateOption(n) if n == "a"));

    let err = ConfigurationSpace::new(
        vec!["a".into()],
        vec![NumericOption { name: "a".into(), domain: vec![1.0, 2.0] }],
        &[],
    )
    .unwrap_err();
    assert!(matches!(err, Error::DuplicateOption(_)));
}

#[test]
fn degenerate_domains_are_rejected() {
    for domain in [vec![], vec![3.0], vec![2.0, 1.0], vec![1.0, 1.0]] {
        let err = ConfigurationSpace::new(
            vec![],
            vec![NumericOption { name: "n".into(), domain }],
            &[],
        )
        .unwrap_err();
        assert!(matches!(err, Error::BadDomain { .. }));
    }
}

#[test]
fn constraint_referencing_unknown_option_is_rejected() {
    let err = ConfigurationSpace::new(vec!["a".into()], vec![], &["a => ghost".into()])
        .unwrap_err();
    assert!(matches!(err, Error::UnknownOption(n) if n == "ghost"));
}

#[test]
fn validity_follows_constraints() {
    let space = space_from(&["max_clients", "compress"], &[], &["max_clients => !compress"]);
    let both = space.configuration(vec![true, true], vec![]).unwrap();
    let one = space.configuration(vec![true, false], vec![]).unwrap();
    assert!(!space.is_valid(&both));
    assert!(space.is_valid(&one));
}

#[test]
fn numeric_sum_constraint_excludes_zero_zero() {
    let dom: &[f64] = &[0.0, 1.0, 2.0];
    let space = space_from(&[], &[("pre", dom), ("post", dom)], &["pre + post > 0"]);
    let zeros = space.configuration(vec![], vec![0.0, 0.0]).unwrap();
    assert!(!space.is_valid(&zeros));
    assert_eq!(space.count_valid().unwrap(), 8);
}

#[test]
fn exactly_one_of_three_yields_three_configurations() {
    // Frozen expectation from brute force: of the 8 assignments of (a, b, c),
    // exactly {100, 010, 001} have a single bit set.
    let mut expected = 0;
    for bits in 0u8..8 {
        if bits.count_ones() == 1 {
            expected += 1;
        }
    }
    assert_eq!(expected, 3);

    let space = space_from(
        &["a", "b", "c"],
        &[],
        &["a | b | c", "!(a & b)", "!(a & c)", "!(b & c)"],
    );
    let configs: Vec<_> = space.enumerate_valid().unwrap().collect();
    assert_eq!(configs.len(), expected);
    for cfg in &configs {
        assert_eq!(cfg.binary_values().iter().filter(|&&b| b).count(), 1);
    }
}

#[test]
fn forbidding_all_zeros_leaves_fifteen() {
    let space = space_from(&["a", "b", "c", "d"], &[], &["a | b | c | d"]);
    assert_eq!(space.count_valid().unwrap(), 15);
}

#[test]
fn enumeration_is_lexicographic_and_duplicate_free() {
    let dom: &[f64] = &[1.0, 5.0];
    let space = space_from(&["a", "b"], &[("x", dom)], &["a | b"]);
    let configs: Vec<_> = space.enumerate_valid().unwrap().collect();
    assert_eq!(configs.len(), 6);

    let key = |c: &Configuration| {
        let mut k: Vec<u64> = c.binary_values().iter().map(|&b| b as u64).collect();
        k.extend(c.numeric_values().iter().map(|v| v.to_bits()));
        k
    };
    for w in configs.windows(2) {
        assert!(key(&w[0]) < key(&w[1]), "enumeration out of order");
    }
    // First valid configuration: a=0, b=1, x=1.
    assert_eq!(configs[0].binary_values(), &[false, true]);
    assert_eq!(configs[0].numeric_values(), &[1.0]);
}

#[test]
fn enumeration_matches_independent_nested_loops() {
    let dom: &[f64] = &[0.0, 1.0, 2.0];
    let space = space_from(
        &["a", "b", "c"],
        &[("x", dom), ("y", dom)],
        &["a => b", "x + y > 0", "c => x >= 1"],
    );
    let enumerated: Vec<_> = space.enumerate_valid().unwrap().collect();

    // Oracle: hand-rolled nested loops over the raw product, independent of
    // the odometer in the iterator.
    let mut expected = Vec::new();
    for a in [false, true] {
        for b in [false, true] {
            for c in [false, true] {
                for &x in dom {
                    for &y in dom {
                        let cfg = space.configuration(vec![a, b, c], vec![x, y]).unwrap();
                        if space.is_valid(&cfg) {
                            expected.push(cfg);
                        }
                    }
                }
            }
        }
    }
    assert_eq!(enumerated, expected);
}

#[test]
fn enumeration_cap_guards_huge_spaces() {
    let names: Vec<String> = (0..24).map(|i| format!("o{i}")).collect();
    let space = ConfigurationSpace::new(names, vec![], &[]).unwrap();
    match space.enumerate_valid() {
        Err(Error::EnumerationCap { .. }) => {}
        other => panic!("expected cap error, got {:?}", other.map(|_| "iterator")),
    }
    // A larger explicit cap lifts the restriction.
    assert!(space.enumerate_valid_capped(1 << 25).is_ok());
}

#[test]
fn sub_space_enumeration_skips_mixed_constraints() {
    let dom: &[f64] = &[0.0, 2.0, 4.0];
    let space = space_from(
        &["a", "b"],
        &[("x", dom)],
        &["a | b", "x > 0", "a => x >= 2"],
    );
    // Binary-only view: just `a | b`.
    assert_eq!(space.enumerate_valid_binary().unwrap().len(), 3);
    // Numeric-only view: just `x > 0`.
    assert_eq!(space.enumerate_valid_numeric().unwrap(), vec![vec![2.0], vec![4.0]]);
}

#[test]
fn configuration_requires_total_assignment_and_domain_membership() {
    let dom: &[f64] = &[1.0, 2.0];
    let space = space_from(&["a"], &[("x", dom)], &[]);
    assert!(space.configuration(vec![true], vec![]).is_err());
    assert!(space.configuration(vec![], vec![1.0]).is_err());
    let err = space.configuration(vec![true], vec![1.5]).unwrap_err();
    assert!(matches!(err, Error::BadDomain { .. }));
    assert!(space.configuration(vec![true], vec![2.0]).is_ok());
}

#[test]
fn serialise_parse_round_trip_preserves_the_space() {
    let space =
        ConfigurationSpace::from_json(include_str!("../../tests/data/dune_mgs.json")).unwrap();
    let round = ConfigurationSpace::from_json(&space.to_json()).unwrap();
    assert_eq!(space.fingerprint(), round.fingerprint());
    assert_eq!(space.constraints(), round.constraints());
    assert_eq!(space.binary_options(), round.binary_options());
    assert_eq!(space.numeric_options(), round.numeric_options());
    assert_eq!(space.count_valid().unwrap(), round.count_valid().unwrap());
}

#[test]
fn measurement_table_rejects_bad_rows() {
    let space = space_from(&["a"], &[], &[]);
    let mut table = MeasurementTable::new("sys", "runtime");
    let cfg = space.configuration(vec![true], vec![]).unwrap();
    table.insert(cfg.clone(), 1.5).unwrap();
    assert!(matches!(
        table.insert(cfg.clone(), 2.0).unwrap_err(),
        Error::InvalidInput(_)
    ));
    let other = space.configuration(vec![false], vec![]).unwrap();
    assert!(matches!(
        table.insert(other, 0.0).unwrap_err(),
        Error::NonPositiveMeasurement { .. }
    ));
    assert_eq!(table.len(), 1);
    assert_eq!(table.get(&cfg), Some(1.5));
}

#[test]
fn table_csv_lists_options_in_declared_order() {
    let dom: &[f64] = &[1.0, 2.5];
    let space = space_from(&["a", "b"], &[("x", dom)], &[]);
    let mut table = MeasurementTable::new("sys", "runtime");
    table
        .insert(space.configuration(vec![true, false], vec![2.5]).unwrap(), 10.0)
        .unwrap();
    let mut buf = Vec::new();
    table.write_csv(&space, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text, "a,b,x,performance\n1,0,2.5,10\n");
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_space() -> impl Strategy<Value = ConfigurationSpace> {
        // Up to 3 binary and 2 numeric options with one of a few constraint
        // shapes; small enough for exhaustive cross-checks.
        (0usize..=2, prop::collection::vec(1.0f64..100.0, 2..4)).prop_map(|(kind, dom)| {
            let mut domain: Vec<f64> = dom;
            domain.sort_by(|a, b| a.partial_cmp(b).unwrap());
            domain.dedup();
            if domain.len() < 2 {
                domain = vec![1.0, 2.0];
            }
            let constraints: &[&str] = match kind {
                0 => &["a | b"],
                1 => &["a => !b", "x >= 1"],
                _ => &["c => a & b"],
            };
            space_from(
                &["a", "b", "c"],
                &[("x", &domain)],
                constraints,
            )
        })
    }

    proptest! {
        #[test]
        fn enumerated_configurations_are_valid_unique_sorted(space in arb_space()) {
            let configs: Vec<_> = space.enumerate_valid().unwrap().collect();
            let key = |c: &Configuration| {
                let mut k: Vec<u64> = c.binary_values().iter().map(|&b| b as u64).collect();
                k.extend(c.numeric_values().iter().map(|v| v.to_bits()));
                k
            };
            for cfg in &configs {
                prop_assert!(space.is_valid(cfg));
            }
            for w in configs.windows(2) {
                prop_assert!(key(&w[0]) < key(&w[1]));
            }
            prop_assert_eq!(configs.len() as u64, space.count_valid().unwrap());
        }
    }
}
