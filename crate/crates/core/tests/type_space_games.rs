mod common;

use std::collections::BTreeSet;

use bgi_core::equilibrium::{
    best_response_witness, check, check_bgi, check_bgii, expected_utility, instantiate, solve_grid,
    solve_pure, DeviationSpec, EquilibriumError, SearchSpace, DEFAULT_SEARCH_CAP,
};
use bgi_core::model::beliefs_from_prior;
use bgi_core::{validate_model, FiniteDistribution, GameKind, Roster, Strategy, TypeStrategyMap};
use common::*;

const SP2_AB: &str = r#"{"1": {"x": "a", "x'": "b"}, "2": {"y": "*", "y'": "*"}}"#;
const SP2_AA: &str = r#"{"1": {"x": "a", "x'": "a"}, "2": {"y": "*", "y'": "*"}}"#;
const SP2_BB: &str = r#"{"1": {"x": "b", "x'": "b"}, "2": {"y": "*", "y'": "*"}}"#;

fn sp2_rules(x: usize, x2: usize) -> TypeStrategyMap {
    TypeStrategyMap(vec![pure(&[x, x2]), pure(&[0, 0])])
}

#[test]
fn every_fixture_validates() {
    for name in GAME_FIXTURES {
        assert!(validate_model(&game(name)).is_empty(), "{name}");
    }
}

#[test]
fn embarrassment_beliefs_come_from_the_uniform_prior() {
    let m = game("embarrassment.json");
    let t2 = m.type_index(1, "t2").unwrap();
    let t2p = m.type_index(1, "t2'").unwrap();
    let wy = m.state_index("w_y").unwrap();
    let wn = m.state_index("w_n").unwrap();
    let vy = m.state_index("v_y").unwrap();
    assert_eq!(
        *m.belief(1, t2),
        FiniteDistribution::uniform([wy, wn]).unwrap()
    );
    assert_eq!(*m.belief(1, t2p), FiniteDistribution::point(vy));
}

#[test]
fn prior_charging_nothing_to_a_type_is_rejected() {
    let m = game("embarrassment.json");
    let prior = FiniteDistribution::new([(0, r("1/2")), (1, r("1/2"))]).unwrap();
    let err = beliefs_from_prior(&prior, &m.signals, &m.players, &m.types).unwrap_err();
    assert_eq!(
        err.to_string(),
        "type t1' of player 1 is null under the prior"
    );
}

/// Payoff of player 1 in the embarrassment game, straight from the table.
fn embarrassment_payoff(action: &str, state: &str) -> i64 {
    match (action, state) {
        ("pass", _) => -2,
        ("yes", "w_y" | "v_y") | ("no", "w_n" | "v_n") => 5,
        ("yes", "w_n") | ("no", "w_y") => -5,
        _ => -15,
    }
}

#[test]
fn embarrassment_expected_utilities() {
    let m = game("embarrassment.json");
    let cases = [
        ("yes", "t1", 0),
        ("no", "t1", 0),
        ("pass", "t1", -2),
        ("yes", "t1'", -5),
        ("no", "t1'", -5),
        ("pass", "t1'", -2),
    ];
    for (action, ty, want) in cases {
        let a = m.action_index(0, action).unwrap();
        let t = m.type_index(0, ty).unwrap();
        let beta = TypeStrategyMap::constant(&pure(&[a, 0]), &m.type_counts());
        let got = expected_utility(&m, &beta, 0, t).unwrap();
        assert_eq!(got, int(want), "{action} at {ty}");
        let states: Vec<&str> = if ty == "t1" {
            vec!["w_y", "w_n"]
        } else {
            vec!["v_y", "v_n"]
        };
        let oracle: i64 = states.iter().map(|w| embarrassment_payoff(action, w)).sum();
        assert_eq!(got * int(2), int(oracle));
    }
}

#[test]
fn embarrassment_equilibria_match_the_table() {
    let m = game("embarrassment.json");
    let report = solve_pure(&m, DEFAULT_SEARCH_CAP).unwrap();
    assert!(report.exhaustive);
    assert_eq!(report.candidates, 9);

    let actions = ["yes", "no", "pass"];
    let eu = |a: &str, states: [&str; 2]| {
        states
            .iter()
            .map(|w| embarrassment_payoff(a, w))
            .sum::<i64>()
    };
    let mut oracle = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        for (j, b) in actions.iter().enumerate() {
            let best_t1 = actions
                .iter()
                .all(|c| eu(a, ["w_y", "w_n"]) >= eu(c, ["w_y", "w_n"]));
            let best_t1p = actions
                .iter()
                .all(|c| eu(b, ["v_y", "v_n"]) >= eu(c, ["v_y", "v_n"]));
            if best_t1 && best_t1p {
                oracle.push(TypeStrategyMap(vec![pure(&[i, j]), pure(&[0, 0, 0])]));
            }
        }
    }
    assert_eq!(report.equilibria, oracle);
    assert_eq!(oracle.len(), 2);
}

#[test]
fn constant_utility_gives_constant_expectations() {
    let mut m = game("embarrassment.json");
    m.utilities[0] = bgi_core::parse_expr("7/3").unwrap();
    for a in 0..3 {
        for b in 0..3 {
            let beta = TypeStrategyMap(vec![pure(&[a, b]), pure(&[0, 0, 0])]);
            for t in 0..2 {
                assert_eq!(expected_utility(&m, &beta, 0, t).unwrap(), r("7/3"));
            }
        }
    }
}

#[test]
fn sp2_instantiation_reads_back_its_intentions() {
    let bgi = game("sp2.json");
    let s = rules(&bgi, SP2_AB);
    let inst = instantiate(&bgi, &s).unwrap();
    assert_eq!(inst.kind, GameKind::Bgii);
    assert_eq!(inst.intentions.as_ref(), Some(&s));
    assert_eq!(inst, game("sp2-bgii.json"));

    let wrong = TypeStrategyMap(vec![pure(&[0, 0]), pure(&[1, 0])]);
    assert!(matches!(
        instantiate(&bgi, &wrong),
        Err(EquilibriumError::InvalidProfile(_))
    ));
}

#[test]
fn sp2_event_probabilities() {
    let bgi = game("sp2.json");
    let s = sp2_rules(0, 1);
    let y = bgi.type_index(1, "y").unwrap();
    let a_event: BTreeSet<usize> = (0..bgi.states.len())
        .filter(|&w| bgi.profile_at(&s, w)[0] == Strategy::Pure(0))
        .collect();
    assert_eq!(bgi.belief(1, y).event_probability(&a_event), int(0));
    let b_of = bgi
        .belief(1, y)
        .pushforward(|&w| Some(bgi.profile_at(&s, w)[0].clone()))
        .unwrap();
    assert_eq!(b_of, FiniteDistribution::point(Strategy::Pure(1)));
}

#[test]
fn sp2_witnesses() {
    let bgi = game("sp2.json");
    let aa = instantiate(&bgi, &sp2_rules(0, 0)).unwrap();
    let w = best_response_witness(&aa, &sp2_rules(0, 0), 0, 0, DeviationSpec::Pure).unwrap();
    assert_eq!(w, Some((Strategy::Pure(1), int(1))));

    let ab = instantiate(&bgi, &sp2_rules(0, 1)).unwrap();
    for t in 0..2 {
        assert_eq!(
            best_response_witness(&ab, &sp2_rules(0, 1), 0, t, DeviationSpec::Pure).unwrap(),
            None
        );
        assert_eq!(
            best_response_witness(&ab, &sp2_rules(0, 1), 1, t, DeviationSpec::Pure).unwrap(),
            None
        );
    }
}

#[test]
fn sp2_bgii_verdicts() {
    let m = game("sp2-bgii.json");
    let v = check_bgii(&m, &rules(&m, SP2_AB), DeviationSpec::Pure).unwrap();
    assert!(v.is_equilibrium);
    assert_eq!(v.checked_conditions.intentions_match, Some(true));

    let v = check_bgii(&m, &rules(&m, SP2_BB), DeviationSpec::Pure).unwrap();
    assert!(!v.is_equilibrium);
    assert_eq!(v.checked_conditions.intentions_match, Some(false));

    let report = solve_pure(&m, DEFAULT_SEARCH_CAP).unwrap();
    assert_eq!(report.equilibria, vec![rules(&m, SP2_AB)]);
    assert_eq!(report.candidates, 1);
}

/// Surprise game with player 2 of type y sure of player 1's type
/// `knows[y]`: type `t` of player 1 is sure player 2 has type `t`, so it
/// surprises exactly when playing something other than `s(knows[t])`.
fn surprise_oracle(knows: [usize; 2]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for x in 0..2 {
        for x2 in 0..2 {
            let s = [x, x2];
            let eu = |t: usize, a: usize| i64::from(a != s[knows[t]]);
            let stable = (0..2).all(|t| (0..2).all(|a| eu(t, s[t]) >= eu(t, a)));
            if stable {
                out.push((x, x2));
            }
        }
    }
    out
}

#[test]
fn sp2_bgi_search() {
    let bgi = game("sp2.json");
    let v = check_bgi(&bgi, &rules(&bgi, SP2_AB), DeviationSpec::Pure).unwrap();
    assert!(v.is_equilibrium);
    assert_eq!(v.checked_conditions.intentions_match, Some(true));

    let v = check_bgi(&bgi, &rules(&bgi, SP2_AA), DeviationSpec::Pure).unwrap();
    assert!(!v.is_equilibrium);
    let w = &v.witnesses[0];
    assert_eq!(
        (w.player, w.ty, &w.deviation, &w.gain),
        (0, Some(0), &Strategy::Pure(1), &int(1))
    );

    let report = solve_pure(&bgi, DEFAULT_SEARCH_CAP).unwrap();
    let oracle: Vec<TypeStrategyMap> = surprise_oracle([1, 0])
        .into_iter()
        .map(|(x, x2)| sp2_rules(x, x2))
        .collect();
    assert_eq!(report.equilibria, oracle);
    assert_eq!(report.equilibria, vec![sp2_rules(0, 1), sp2_rules(1, 0)]);
    assert_eq!(report.search_space, SearchSpace::Pure);
}

#[test]
fn pure_nonexistence() {
    let bgi = game("nonexistence-pure.json");
    assert!(surprise_oracle([0, 1]).is_empty());
    for x in 0..2 {
        for x2 in 0..2 {
            assert!(
                !check(&bgi, &sp2_rules(x, x2), DeviationSpec::Pure)
                    .unwrap()
                    .is_equilibrium
            );
        }
    }
    let report = solve_pure(&bgi, DEFAULT_SEARCH_CAP).unwrap();
    assert!(report.equilibria.is_empty());
    assert!(report.exhaustive);
    assert_eq!(report.candidates, 4);
    assert_eq!(report.search_space.coverage(), "complete");
}

#[test]
fn mixed_nonexistence_case_analysis() {
    let bgi = game("nonexistence-mixed.json");
    let half = rules(
        &bgi,
        r#"{"1": {"x": {"a": "1/2", "b": "1/2"}, "x'": "a"}, "2": {"y": "*", "y'": "*"}}"#,
    );
    let v = check_bgi(&bgi, &half, DeviationSpec::Pure).unwrap();
    let w = v.witness_for(0, Some(0)).unwrap();
    assert_eq!(w.deviation, Strategy::Pure(0));
    assert_eq!(w.gain, r("1/2"));

    for other in [r#""a""#, r#""b""#, r#"{"a": "1/3", "b": "2/3"}"#] {
        let json = format!(r#"{{"1": {{"x": "a", "x'": {other}}}, "2": {{"y": "*", "y'": "*"}}}}"#);
        let v = check_bgi(&bgi, &rules(&bgi, &json), DeviationSpec::Pure).unwrap();
        assert_eq!(
            v.witness_for(0, Some(0)).unwrap().deviation,
            Strategy::Pure(1)
        );
    }

    let report = solve_grid(&bgi, 10, DEFAULT_SEARCH_CAP).unwrap();
    assert!(report.equilibria.is_empty());
    assert_eq!(report.candidates, 121);
    assert_eq!(
        report.search_space.coverage(),
        "exhaustive-at-resolution-10"
    );
}

#[test]
fn search_cap_is_reported() {
    let m = game("auction.json");
    let err = solve_pure(&m, 1000).unwrap_err();
    assert_eq!(
        err,
        EquilibriumError::SearchSpaceTooLarge {
            size: "15625".into(),
            cap: 1000
        }
    );
}

#[test]
fn bravery_constant_rules() {
    for name in ["bravery.json", "bravery-uprime.json"] {
        let bgi = game(name);
        let timid = rules(&bgi, r#"{"1": {"t1": "timid"}, "2": {"t2": "*"}}"#);
        let bold = rules(&bgi, r#"{"1": {"t1": "bold"}, "2": {"t2": "*"}}"#);

        for (beta, own, dev, other) in [(&timid, 3, 2, &bold), (&bold, 1, 0, &timid)] {
            let v = check_bgi(&bgi, beta, DeviationSpec::Pure).unwrap();
            assert!(v.is_equilibrium, "{name}");
            assert_eq!(v.values[0].utility, int(own));
            let inst = instantiate(&bgi, beta).unwrap();
            let deviation = TypeStrategyMap(vec![other.0[0].clone(), beta.0[1].clone()]);
            assert_eq!(expected_utility(&inst, &deviation, 0, 0).unwrap(), int(dev));
        }
        let report = solve_pure(&bgi, DEFAULT_SEARCH_CAP).unwrap();
        assert_eq!(report.equilibria, vec![bold, timid], "{name}");
    }
}

#[test]
fn bravery_bgii_with_timid_intentions() {
    let bgi = game("bravery.json");
    let timid = rules(&bgi, r#"{"1": {"t1": "timid"}, "2": {"t2": "*"}}"#);
    let inst = instantiate(&bgi, &timid).unwrap();
    let v = check_bgii(&inst, &timid, DeviationSpec::Pure).unwrap();
    assert!(v.is_equilibrium);
    assert!(v.witnesses.is_empty());
}

/// Brute-force Bayesian Nash equilibria of the discretized auction, in
/// integer arithmetic scaled by the uniform conditional belief.
fn auction_oracle() -> Vec<[[usize; 3]; 2]> {
    let values = [0i64, 2, 4];
    let pay = |own_value: i64, own_bid: usize, other_bid: usize| {
        if own_bid >= other_bid {
            own_value - own_bid as i64
        } else {
            0
        }
    };
    let mut out = Vec::new();
    for code in 0..5usize.pow(6) {
        let mut digits = [0usize; 6];
        let mut c = code;
        for d in digits.iter_mut().rev() {
            *d = c % 5;
            c /= 5;
        }
        let rules = [
            [digits[0], digits[1], digits[2]],
            [digits[3], digits[4], digits[5]],
        ];
        let eu = |i: usize, t: usize, bid: usize| -> i64 {
            (0..3).map(|u| pay(values[t], bid, rules[1 - i][u])).sum()
        };
        let ok =
            (0..2).all(|i| (0..3).all(|t| (0..5).all(|b| eu(i, t, rules[i][t]) >= eu(i, t, b))));
        if ok {
            out.push(rules);
        }
    }
    out
}

#[test]
fn auction_equilibria_match_brute_force() {
    let m = game("auction.json");
    let report = solve_pure(&m, DEFAULT_SEARCH_CAP).unwrap();
    let oracle: Vec<TypeStrategyMap> = auction_oracle()
        .into_iter()
        .map(|r| TypeStrategyMap(vec![pure(&r[0]), pure(&r[1])]))
        .collect();
    assert!(!oracle.is_empty());
    assert_eq!(report.equilibria, oracle);
}
