use psg_core::fixtures::{self, ExpectedNe};
use psg_core::games::{self, DynamicsStatus, NeStatus, Solver};
use psg_core::{run_rule, StrategyProfile};

#[test]
fn every_expected_cell_matches() {
    for f in fixtures::all() {
        for rule in &f.rules {
            let solver = Solver::new(&f.game, rule.clone());
            for c in &f.expected {
                let u = solver.utilities(&c.profile).unwrap();
                assert_eq!(u, c.utilities, "{} / {rule} / {}", f.name, c.label);
            }
        }
    }
}

#[test]
fn expected_equilibria_match_brute_force() {
    for f in fixtures::all() {
        for rule in &f.rules {
            let solver = Solver::new(&f.game, rule.clone());
            let search = solver.ne_exists_bruteforce().unwrap();
            match &f.expected_ne {
                ExpectedNe::None => assert_eq!(search.status, NeStatus::None, "{} / {rule}", f.name),
                ExpectedNe::Witness(w) => {
                    assert_eq!(search.status, NeStatus::Found, "{} / {rule}", f.name);
                    assert!(solver.is_nash(w).unwrap(), "{} / {rule}", f.name);
                }
            }
        }
    }
}

#[test]
fn intro_dynamics_reach_the_equilibrium_in_two_steps() {
    let f = fixtures::intro_example();
    let start = games::full_profile(&f.game).unwrap();
    let d = games::br_dynamics(&f.game, &f.rules[0], &start, 10).unwrap();
    assert_eq!(d.status, DynamicsStatus::Converged);
    assert_eq!(d.iterations, 2);
    let ExpectedNe::Witness(ne) = &f.expected_ne else { panic!() };
    assert_eq!(&d.final_profile, ne);
    assert_eq!(d.trajectory[1], StrategyProfile::new([vec!["T2", "T3"], vec!["B1", "B2", "B3"]]));
}

#[test]
fn gadget_funded_sets() {
    let f = fixtures::three_proposer_gadget(fixtures::GadgetRule::Phragmen);
    let s = StrategyProfile::new([vec!["p1", "p2", "p3"], vec!["q1", "q2", "q3"], vec!["r1", "r2"]]);
    let e = psg_core::induced_election(&f.game, &s).unwrap();
    let out = run_rule(&e, &f.rules[0]).unwrap();
    assert_eq!(out.funded_set(), ["p1", "q1", "r1", "r2"].into_iter().map(Into::into).collect());

    let f = fixtures::cc_gadget();
    let s = StrategyProfile::new([vec!["p1", "p2", "p3", "p4"], vec!["q1", "q2", "q3", "q4"]]);
    let e = psg_core::induced_election(&f.game, &s).unwrap();
    let out = run_rule(&e, &f.rules[0]).unwrap();
    let funded: Vec<&str> = out.funded.iter().map(|p| p.as_str()).collect();
    assert_eq!(funded, ["p1", "q1", "p2", "q4"]);
}
