use proptest::prelude::*;
use psg_core::fixtures::{random_game, CostModel, RandomGameConfig};
use psg_core::games::{self, GameError, Limits, NeStatus};
use psg_core::{Mode, RuleSpec, StructureClass, WeightFunction};

fn config(m: usize, l: usize, voters: usize, seed: u64, structure: StructureClass, mode: Mode) -> RandomGameConfig {
    let mut cfg = RandomGameConfig::new(m, l.min(m), seed);
    cfg.voters = voters;
    cfg.structure = structure;
    cfg.mode = mode;
    cfg
}

fn thiele_rules() -> Vec<RuleSpec> {
    [WeightFunction::av(), WeightFunction::cc(), WeightFunction::pav(8)]
        .into_iter()
        .flat_map(|w| [RuleSpec::SeqThiele { weights: w.clone() }, RuleSpec::GlobalThiele { weights: w }])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basicav_full_profile_is_nash(m in 2usize..=7, l in 1usize..=4, n in 1usize..=10, seed in any::<u64>()) {
        let g = random_game(&config(m, l, n, seed, StructureClass::General, Mode::Psg)).unwrap();
        let s = games::constructive_ne_basicav_multiwinner(&g).unwrap();
        prop_assert!(games::is_nash(&g, &RuleSpec::BasicAv, &s).unwrap());
    }

    #[test]
    fn party_list_full_profile_is_nash(m in 2usize..=7, l in 1usize..=3, n in 1usize..=8, seed in any::<u64>()) {
        let g = random_game(&config(m, l, n, seed, StructureClass::PartyList, Mode::Psg)).unwrap();
        prop_assume!(!g.election().voters().is_empty());
        let mut rules = vec![RuleSpec::Phragmen, RuleSpec::mes()];
        rules.extend(thiele_rules());
        for spec in rules {
            let s = games::constructive_ne_partylist(&g, &spec).unwrap();
            prop_assert!(games::is_nash(&g, &spec, &s).unwrap(), "{}", spec);
        }
    }

    #[test]
    fn psg1_sequential_construction_is_nash(m in 2usize..=8, l in 1usize..=4, n in 1usize..=10, seed in any::<u64>()) {
        let cfg = config(m, l, n, seed, StructureClass::General, Mode::Psg1);
        let g = random_game(&cfg).unwrap();
        prop_assume!(!g.election().voters().is_empty());
        for spec in [RuleSpec::BasicAv, RuleSpec::Phragmen, RuleSpec::mes(), RuleSpec::seq_cc()] {
            let s = games::constructive_ne_psg1_sequential(&g, &spec).unwrap();
            prop_assert!(games::is_nash(&g, &spec, &s).unwrap(), "{} {}", spec, s);
            prop_assert_eq!(games::ne_exists_bruteforce(&g, &spec).unwrap().status, NeStatus::Found);
        }
    }

    #[test]
    fn psg1_global_thiele_construction_is_nash(m in 2usize..=7, l in 1usize..=3, n in 1usize..=8, seed in any::<u64>()) {
        let cfg = config(m, l, n, seed, StructureClass::Laminar, Mode::Psg1);
        let g = random_game(&cfg).unwrap();
        for w in [WeightFunction::av(), WeightFunction::cc()] {
            let s = games::constructive_ne_psg1_global_thiele(&g, &w, Limits::default()).unwrap();
            let spec = RuleSpec::GlobalThiele { weights: w };
            prop_assert!(games::is_nash(&g, &spec, &s).unwrap(), "{} {}", spec, s);
        }
    }
}

#[test]
fn preconditions_are_enforced() {
    let g = random_game(&config(5, 2, 6, 1, StructureClass::General, Mode::Psg)).unwrap();
    assert!(matches!(games::constructive_ne_psg1_sequential(&g, &RuleSpec::BasicAv), Err(GameError::WrongMode { .. })));
    let mut cfg = config(5, 2, 6, 1, StructureClass::General, Mode::Psg);
    cfg.costs = CostModel::Uniform { max: 9 };
    cfg.seed = 3;
    let g = random_game(&cfg).unwrap();
    if !g.election().has_unit_costs() {
        assert!(matches!(games::constructive_ne_basicav_multiwinner(&g), Err(GameError::Precondition(_))));
    }
    let g1 = g.with_mode(Mode::Psg1);
    let global = RuleSpec::GlobalThiele { weights: WeightFunction::cc() };
    assert!(games::constructive_ne_psg1_sequential(&g1, &global).is_err());
}

#[test]
fn single_proposer_global_thiele_picks_best_singleton() {
    let g = random_game(&config(5, 1, 9, 11, StructureClass::General, Mode::Psg1)).unwrap();
    let w = WeightFunction::av();
    let s = games::constructive_ne_psg1_global_thiele(&g, &w, Limits::default()).unwrap();
    let e = g.election();
    let chosen = s.strategies[0].iter().next().unwrap();
    let best = e.projects().iter().map(|p| e.support(&p.id).len()).max().unwrap();
    assert_eq!(e.support(chosen).len(), best);
}
