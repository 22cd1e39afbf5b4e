use rtamp::domains::{build_kitchen, build_nonmonotonic, load_bundle, validate_solution, write_bundle, DomainKind};
use rtamp::symbolic::replay;
use rtamp::tamp::{solve, Outcome, SearchParams, Variant};

#[test]
fn kitchen_one_is_solved_and_validates() {
    let inst = build_kitchen(1, 0).unwrap();
    let params = SearchParams::for_variant(Variant::Full, 0);
    let (outcome, stats) = solve(&inst.problem, &params).unwrap();
    let Outcome::Solved(sol) = outcome else {
        panic!("kitchen-1 unsolved: {stats:?}");
    };
    validate_solution(&inst.problem, &sol, &params.mp).unwrap();
    let actions: Vec<_> = sol.actions().iter().map(|a| inst.problem.task.parse_action(a).unwrap()).collect();
    let end = replay(&inst.problem.task, &inst.problem.init.s, &actions).unwrap();
    assert!(inst.problem.task.goal_satisfied(&end, &inst.problem.goal.atoms));
    assert!(sol.actions().iter().any(|a| a.starts_with("(wash")) && sol.actions().iter().any(|a| a.starts_with("(cook")));
}

#[test]
fn solutions_survive_the_bundle_format() {
    let dir = tempfile::tempdir().unwrap();
    for kind in DomainKind::ALL {
        let inst = kind.build(1, 4).unwrap();
        write_bundle(&inst, dir.path()).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        let params = SearchParams::for_variant(Variant::Full, 1);
        let a = solve(&inst.problem, &params).unwrap();
        let b = solve(&loaded.problem, &params).unwrap();
        assert_eq!(a.0, b.0, "{kind}");
        if let Outcome::Solved(sol) = &b.0 {
            let text = serde_json::to_string(sol).unwrap();
            let back = serde_json::from_str(&text).unwrap();
            validate_solution(&inst.problem, &back, &params.mp).unwrap();
        }
    }
}

#[test]
fn every_variant_is_sound_on_nonmonotonic_one() {
    let inst = build_nonmonotonic(1, 0).unwrap();
    for v in Variant::ALL {
        for seed in 0..3 {
            let params = SearchParams::for_variant(v, seed);
            let (a, sa) = solve(&inst.problem, &params).unwrap();
            let (b, sb) = solve(&inst.problem, &params).unwrap();
            assert_eq!(a, b);
            assert_eq!(sa.mp_calls, sb.mp_calls);
            if let Outcome::Solved(sol) = a {
                validate_solution(&inst.problem, &sol, &params.mp).unwrap_or_else(|e| panic!("{v} seed {seed}: {e}"));
            }
        }
    }
}
