mod common;

use std::collections::BTreeSet;

use common::*;
use datacheck_core::formula::{q, Domain, Formula, Q, VarId};
use datacheck_core::ltlf::{self, Ltl};
use datacheck_core::summary::{self, Engine, SummaryStrategy};
use datacheck_core::syntax::{parse_linked_property, parse_model, print_model, print_property};
use datacheck_core::{examples, oracle, solve};
use proptest::prelude::*;

fn ok(r: Result<(), String>) {
    if let Err(e) = r {
        panic!("{}", e);
    }
}

#[test]
fn qe_rational_is_sound() {
    ok(run_cases(150, lin_formula(), check_qe_rational));
}

#[test]
fn qe_gc_is_sound_over_integers() {
    ok(run_cases(150, gc_formula(), check_qe_gc));
}

#[test]
fn cutoff_preserves_satisfiability() {
    ok(run_cases(200, gc_formula(), check_cutoff));
}

#[test]
fn cutoff_is_idempotent() {
    ok(run_cases(100, gc_formula(), |phi| {
        let once = solve::cutoff(&phi, 4).map_err(|e| e.to_string())?;
        let twice = solve::cutoff(&once, 4).map_err(|e| e.to_string())?;
        (once == twice).then_some(()).ok_or(format!("{} vs {}", once, twice))
    }));
}

#[test]
fn atom_normalization_is_stable() {
    ok(run_cases(200, lin_atom(), |a| {
        let again = datacheck_core::syntax::parse_atom(&a.to_string()).map_err(|e| e.to_string())?;
        (again == a).then_some(()).ok_or(format!("{} reparsed as {}", a, again))
    }));
}

fn small_assignments() -> Vec<datacheck_core::formula::Assignment> {
    let g: Vec<Q> = (-2..=2).map(q).collect();
    let mut out = Vec::new();
    for x in &g {
        for y in &g {
            for z in &g {
                out.push(datacheck_core::formula::assignment(&[("x", x.clone()), ("y", y.clone()), ("z", z.clone())]));
            }
        }
    }
    out
}

#[test]
fn dnf_preserves_meaning() {
    let pts = small_assignments();
    ok(run_cases(100, lin_formula(), |phi| {
        let back = solve::dnf_to_formula(&solve::to_dnf(&phi).map_err(|e| e.to_string())?);
        for a in &pts {
            if phi.eval(a).unwrap() != back.eval(a).unwrap() {
                return Err(format!("{} vs {} at {:?}", phi, back, a));
            }
        }
        Ok(())
    }));
}

#[test]
fn models_satisfy_their_formula() {
    ok(run_cases(150, lin_formula(), |phi| {
        for dom in [Domain::Rat, Domain::Int] {
            match solve::is_sat(&phi, dom).map_err(|e| e.to_string())? {
                solve::SatResult::Sat(mut m) => {
                    for v in phi.free_vars() {
                        m.entry(v).or_insert_with(|| q(0));
                    }
                    if !phi.eval(&m).unwrap() {
                        return Err(format!("model {:?} fails {}", m, phi));
                    }
                    if dom == Domain::Int && !m.values().all(|v| v.is_integer()) {
                        return Err(format!("non-integer model {:?}", m));
                    }
                }
                solve::SatResult::Unsat => {
                    if small_assignments().iter().any(|a| phi.eval(a).unwrap()) {
                        return Err(format!("{} reported unsat", phi));
                    }
                }
            }
        }
        Ok(())
    }));
}

#[test]
fn equivalence_is_an_equivalence() {
    let pair = (lin_formula(), lin_formula());
    ok(run_cases(60, pair, |(a, b)| {
        let e = |x: &Formula, y: &Formula| solve::equivalent(x, y, Domain::Rat).unwrap();
        if !e(&a, &a) {
            return Err(format!("{} not equivalent to itself", a));
        }
        if e(&a, &b) != e(&b, &a) {
            return Err(format!("asymmetric on {} and {}", a, b));
        }
        let ab = Formula::and([a.clone(), b.clone()]);
        if !solve::implies(&ab, &a, Domain::Rat).unwrap() {
            return Err(format!("{} does not imply {}", ab, a));
        }
        Ok(())
    }));
}

#[test]
fn update_is_monotone() {
    let d = examples::b3();
    ok(run_cases(80, (gc_formula(), gc_formula()), |(a, b)| {
        let stronger = Formula::and([a.clone(), b]);
        for act in &d.actions {
            let ua = d.update(&a, act).map_err(|e| e.to_string())?;
            let us = d.update(&stronger, act).map_err(|e| e.to_string())?;
            if !solve::implies(&us, &ua, d.sorts.clone()).map_err(|e| e.to_string())? {
                return Err(format!("update({}) ⊄ update of weaker on {}", stronger, act));
            }
        }
        Ok(())
    }));
}

#[test]
fn history_constraints_match_oracle_runs() {
    for (name, d) in systems() {
        let runs = oracle::enumerate_runs(&d, 3, &int_grid(0, 4)).unwrap();
        let pool = constraint_pool(name);
        for (i, r) in runs.iter().enumerate().step_by(7) {
            let cs = holding_constraints(r, &pool, i);
            ok(check_history_realizability(&d, r, &cs).map_err(|e| format!("{}: {}", name, e)));
        }
    }
}

#[test]
fn nfa_agrees_with_semantics() {
    for name in ["B1", "B2", "B3", "B4"] {
        let d = system(name);
        let runs = oracle::enumerate_runs(&d, 3, &int_grid(0, 6)).unwrap();
        let runs: Vec<_> = runs.into_iter().step_by(5).collect();
        ok(run_cases(25, ltl_for(name), |psi| check_nfa(&d, &ltlf::preprocess(&psi), &runs)));
    }
}

#[test]
fn nfa_edges_are_well_formed() {
    ok(run_cases(60, ltl_for("B1"), |psi| {
        let n = ltlf::build_nfa(&ltlf::preprocess(&psi));
        if n.states.len() != n.states.iter().collect::<BTreeSet<_>>().len() {
            return Err("duplicate NFA states".into());
        }
        let end = n.index_of(&ltlf::NfaState::End);
        if let Some(e) = end {
            if n.out_edges(e).next().is_some() {
                return Err("q_e has outgoing edges".into());
            }
            if !n.is_final(e) {
                return Err("q_e is not final".into());
            }
        }
        if n.edges.iter().any(|(s, _, t)| *s >= n.states.len() || *t >= n.states.len()) {
            return Err("edge out of range".into());
        }
        Ok(())
    }));
}

#[test]
fn verify_agrees_with_oracle() {
    for (name, cases) in [("B1", 6), ("B2", 4), ("B3", 4), ("B4", 4)] {
        ok(run_cases(cases, ltl_for(name), |psi| check_verify_vs_oracle(name, &psi)));
    }
}

#[test]
fn property_printing_round_trips() {
    let d = examples::b1();
    ok(run_cases(100, ltl_for("B1"), |psi| {
        let s = print_property(&psi);
        let back = parse_linked_property(&s, &d).map_err(|e| format!("{}: {}", s, e))?;
        (back == psi).then_some(()).ok_or(format!("{} reparsed as {:?}", s, back))
    }));
}

#[test]
fn model_printing_round_trips() {
    for (name, d) in systems().into_iter().chain([("auction", examples::auction())]) {
        let back = parse_model(&print_model(&d)).unwrap();
        assert_eq!(back, d, "{}", name);
    }
}

#[test]
fn feedback_free_implies_bounded_lookback() {
    for (name, d) in systems() {
        let cs = constraint_pool(name);
        if summary::check_feedback_free(&d, &cs, 2).unwrap() {
            let k = 2 * d.vars.len();
            assert!(summary::check_bounded_lookback(&d, &cs, k, 2).unwrap(), "{}", name);
        }
    }
}

/// Every constraint-graph path of length ≤ 6 carries a formula equivalent to
/// the history constraint of its run (exact engine), or implied by it (cutoff).
#[test]
fn constraint_graph_matches_history() {
    for (name, strat) in [("B1", SummaryStrategy::Mc), ("B3", SummaryStrategy::Gc { k: 4 })] {
        let d = system(name);
        let engine = Engine::new(&d, &strat);
        let g = summary::constraint_graph(&engine, 1000).unwrap();
        let mut frontier = vec![(g.initial, Vec::<String>::new(), vec![d.initial.clone()])];
        for _ in 0..6 {
            let mut next = Vec::new();
            for (n, acts, states) in frontier {
                for (f, a, t) in &g.edges {
                    if *f != n {
                        continue;
                    }
                    let mut acts = acts.clone();
                    acts.push(a.clone());
                    let mut states = states.clone();
                    states.push(g.nodes[*t].0.clone());
                    let run = datacheck_core::ddsa::SymbolicRun { states: states.clone(), actions: acts.clone() };
                    let cs = vec![vec![]; run.states.len()];
                    let h = d.history_constraint(&run, &cs).unwrap();
                    assert!(engine.equiv(&h, &g.nodes[*t].1).unwrap(), "{} {:?}: {} vs {}", name, acts, h, g.nodes[*t].1);
                    next.push((*t, acts, states));
                }
            }
            frontier = next;
        }
    }
}

#[test]
fn state_and_action_vars_are_declared() {
    for (_, d) in systems() {
        assert!(d.validate().is_empty());
        let names: BTreeSet<VarId> = d.var_names();
        assert_eq!(names.len(), d.vars.len());
    }
}

#[test]
fn always_and_eventually_are_dual() {
    let d = examples::b1();
    let runs = oracle::enumerate_runs(&d, 3, &int_grid(0, 6)).unwrap();
    ok(run_cases(40, ltl_for("B1"), |psi| {
        let g = ltlf::preprocess(&Ltl::always(psi.clone()));
        for r in runs.iter().step_by(3) {
            let all = (0..=r.len()).all(|i| ltlf::run_models(&d, r, i, &ltlf::preprocess(&psi)));
            if ltlf::run_models(&d, r, 0, &g) != all {
                return Err(format!("□{} on {:?}", psi, r));
            }
        }
        Ok(())
    }));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gc_atoms_are_classified_gc(a in gc_atom()) {
        prop_assert_ne!(solve::classify_atom(&a), solve::ConstraintClass::GeneralLinear);
    }

    #[test]
    fn int_grid_is_sorted(lo in -5i64..5, w in 0i64..10) {
        let g = int_grid(lo, lo + w);
        prop_assert_eq!(g.len() as i64, w + 1);
        prop_assert!(g.windows(2).all(|p| p[0] < p[1]));
    }
}

