//! Generators and checks shared by the property tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;

use datacheck_core::ddsa::{ConcreteRun, Ddsa};
use datacheck_core::examples;
use datacheck_core::formula::{q, Atom, Domain, Formula, Q, Rel, Term, VarId};
use datacheck_core::ltlf::{self, Ltl};
use datacheck_core::product::{self, Verdict, VerifyOptions};
use datacheck_core::syntax::parse_atom;
use datacheck_core::{oracle, solve};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub fn runner(cases: u32) -> TestRunner {
    let cfg = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Runs `check` on `cases` generated values; the error names the first failing input.
pub fn run_cases<S: Strategy>(cases: u32, s: S, check: impl Fn(S::Value) -> Result<(), String>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases)
        .run(&s, |v| check(v).map_err(TestCaseError::fail))
        .map_err(|e| e.to_string())
}

fn rel() -> impl Strategy<Value = Rel> {
    prop_oneof![Just(Rel::Eq), Just(Rel::Ne), Just(Rel::Lt), Just(Rel::Le), Just(Rel::Gt), Just(Rel::Ge)]
}

pub const XYZ: [&str; 3] = ["x", "y", "z"];

/// `Σ cᵢ·vᵢ ⋈ k` with 1–3 variables, coefficients in ±1..2, `k` in −3..3.
pub fn lin_atom() -> impl Strategy<Value = Atom> {
    (proptest::collection::vec((0usize..3, -2i64..=2), 1..=3), rel(), -3i64..=3).prop_map(|(cs, r, k)| {
        let mut t = Term::constant(q(0));
        for (v, c) in cs {
            t.add_var(VarId::plain(XYZ[v]), &q(if c == 0 { 1 } else { c }));
        }
        Atom::new(t, r, Term::constant(q(k)))
    })
}

pub fn lin_formula() -> impl Strategy<Value = Formula> {
    let leaf = lin_atom().prop_map(Formula::Atom);
    leaf.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 1..=3).prop_map(Formula::and),
            proptest::collection::vec(inner, 1..=3).prop_map(Formula::or),
        ]
    })
}

/// Gap-order atoms over `x, y, z` with bound constants in `0..=3` and gaps up to 10.
pub fn gc_atom() -> impl Strategy<Value = Atom> {
    let v = || (0usize..3).prop_map(|i| Term::var(VarId::plain(XYZ[i])));
    prop_oneof![
        (v(), v(), 0i64..=10).prop_map(|(a, b, g)| Atom::new(a.minus(&b), Rel::Ge, Term::constant(q(g)))),
        (v(), 0i64..=3).prop_map(|(a, k)| Atom::new(a, Rel::Ge, Term::constant(q(k)))),
        (v(), 0i64..=3).prop_map(|(a, k)| Atom::new(a, Rel::Le, Term::constant(q(k)))),
        (v(), 0i64..=3).prop_map(|(a, k)| Atom::new(a, Rel::Eq, Term::constant(q(k)))),
        (v(), v()).prop_map(|(a, b)| Atom::new(a, Rel::Eq, b)),
        (v(), v()).prop_map(|(a, b)| Atom::new(a, Rel::Ne, b)),
    ]
}

pub fn gc_formula() -> impl Strategy<Value = Formula> {
    let conj = proptest::collection::vec(gc_atom().prop_map(Formula::Atom), 1..=4).prop_map(Formula::and).boxed();
    prop_oneof![conj.clone(), proptest::collection::vec(conj, 1..=2).prop_map(Formula::or)]
}

fn dense_grid() -> Vec<Q> {
    let mut g: Vec<Q> = (-4..=4).map(|i| q(i) / q(2)).collect();
    g.sort();
    g
}

fn with(a: &BTreeMap, v: &str, x: Q) -> BTreeMap {
    let mut m = a.clone();
    m.insert(VarId::plain(v), x);
    m
}

type BTreeMap = std::collections::BTreeMap<VarId, Q>;

/// Values of `v` at which some atom of `phi` changes truth, given the other values.
fn breakpoints(phi: &Formula, v: &str, a: &BTreeMap) -> Vec<Q> {
    let x = VarId::plain(v);
    let mut bs = Vec::new();
    for at in phi.atoms() {
        if let Some(c) = at.lhs.get(&x) {
            let mut rest = at.rhs.clone();
            for (w, d) in &at.lhs {
                if *w != x {
                    rest -= d * a.get(w).cloned().unwrap_or_default();
                }
            }
            bs.push(rest / c);
        }
    }
    bs.sort();
    bs.dedup();
    let mut out = bs.clone();
    for w in bs.windows(2) {
        out.push((&w[0] + &w[1]) / q(2));
    }
    if let (Some(lo), Some(hi)) = (bs.first(), bs.last()) {
        out.push(lo - q(1));
        out.push(hi + q(1));
    }
    out.push(q(0));
    out
}

/// `qe_rational(x, φ)` agrees with an existential check at breakpoints, on a grid for `y, z`.
pub fn check_qe_rational(phi: Formula) -> Result<(), String> {
    let out = solve::qe_rational(&[VarId::plain("x")], &phi);
    if out.free_vars().contains(&VarId::plain("x")) {
        return Err(format!("x still free in {}", out));
    }
    let g = dense_grid();
    for y in &g {
        for z in &g {
            let a = with(&with(&BTreeMap::new(), "y", y.clone()), "z", z.clone());
            let mut full = a.clone();
            for v in phi.free_vars() {
                full.entry(v).or_insert_with(|| q(0));
            }
            let expect = breakpoints(&phi, "x", &full)
                .into_iter()
                .any(|c| phi.eval(&with(&full, "x", c)).unwrap_or(false));
            let mut b = full.clone();
            b.remove(&VarId::plain("x"));
            let got = out.eval(&b).map_err(|e| e.to_string())?;
            if got != expect {
                return Err(format!("∃x.({}) gave {} at y={}, z={}: {} vs {}", phi, out, y, z, got, expect));
            }
        }
    }
    Ok(())
}

/// `qe_gc(x, φ)` agrees with integer search and stays gap-order.
pub fn check_qe_gc(phi: Formula) -> Result<(), String> {
    let out = solve::qe_gc(&[VarId::plain("x")], &phi).map_err(|e| e.to_string())?;
    if solve::classify(&out) == solve::ConstraintClass::GeneralLinear {
        return Err(format!("result {} is not gap-order", out));
    }
    for y in -2..=6 {
        for z in -2..=6 {
            let a = with(&with(&BTreeMap::new(), "y", q(y)), "z", q(z));
            let expect = (-30..=30).any(|c| phi.eval(&with(&a, "x", q(c))).unwrap_or(false));
            let got = out.eval(&a).map_err(|e| e.to_string())?;
            if got != expect {
                return Err(format!("∃x.({}) gave {} at y={}, z={}", phi, out, y, z));
            }
        }
    }
    Ok(())
}

/// Cutting gaps at `K = 4` keeps satisfiability over integers.
pub fn check_cutoff(phi: Formula) -> Result<(), String> {
    let cut = solve::cutoff(&phi, 4).map_err(|e| e.to_string())?;
    let a = solve::sat(&phi, Domain::Int).map_err(|e| e.to_string())?;
    let b = solve::sat(&cut, Domain::Int).map_err(|e| e.to_string())?;
    if a != b {
        return Err(format!("sat({}) = {} but sat({}) = {}", phi, a, cut, b));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Systems, runs and properties

pub fn systems() -> Vec<(&'static str, Ddsa)> {
    vec![("B1", examples::b1()), ("B2", examples::b2()), ("B3", examples::b3()), ("B4", examples::b4())]
}

pub fn atoms(xs: &[&str]) -> Vec<Atom> {
    xs.iter().map(|s| parse_atom(s).unwrap()).collect()
}

/// Constraint atoms for properties over each system, chosen within the system's fragment.
pub fn constraint_pool(name: &str) -> Vec<Atom> {
    match name {
        "B1" => atoms(&["y > 5", "x > y", "x >= 3", "y = 0"]),
        "B2" => atoms(&["x > 5", "y > 3", "y <= 2"]),
        "B3" => atoms(&["x >= 5", "y >= 3", "x - y >= 1", "y = 3"]),
        _ => atoms(&["s > 2", "a = 0", "b > 1"]),
    }
}

pub fn leaves(d: &Ddsa, name: &str) -> Vec<Ltl> {
    let mut out: Vec<Ltl> = constraint_pool(name).into_iter().map(Ltl::c).collect();
    out.extend(d.states.iter().map(|s| Ltl::State(s.clone())));
    out.extend(d.actions.iter().map(|a| Ltl::Action(a.clone())));
    out
}

pub fn ltl(leaves: Vec<Ltl>, actions: Vec<String>) -> impl Strategy<Value = Ltl> {
    let leaf = proptest::sample::select(leaves);
    leaf.prop_recursive(3, 12, 2, move |inner| {
        let acts = actions.clone();
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ltl::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ltl::or(a, b)),
            inner.clone().prop_map(Ltl::next),
            inner.clone().prop_map(Ltl::eventually),
            inner.clone().prop_map(Ltl::always),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ltl::until(a, b)),
            (proptest::sample::select(acts), inner).prop_map(|(a, f)| Ltl::action_next(&a, f)),
        ]
    })
}

pub fn system(name: &str) -> Ddsa {
    systems().into_iter().find(|(n, _)| *n == name).unwrap().1
}

pub fn ltl_for(name: &'static str) -> impl Strategy<Value = Ltl> {
    let d = system(name);
    ltl(leaves(&d, name), d.actions.clone())
}

/// The automaton accepts a word consistent with `ρ` iff `ρ ⊨ ψ`.
pub fn check_nfa(d: &Ddsa, psi: &Ltl, runs: &[ConcreteRun]) -> Result<(), String> {
    let nfa = ltlf::build_nfa(psi);
    for r in runs {
        let a = ltlf::accepts_run(&nfa, r);
        let m = ltlf::run_models(d, r, 0, psi);
        if a != m {
            return Err(format!("{}: automaton {} vs semantics {} on {:?}", psi, a, m, r));
        }
    }
    Ok(())
}

pub fn int_grid(lo: i64, hi: i64) -> Vec<Q> {
    oracle::int_grid(lo, hi)
}

/// Per-position constraints that hold on `r`, drawn from the pool by position.
pub fn holding_constraints(r: &ConcreteRun, pool: &[Atom], salt: usize) -> Vec<Vec<Atom>> {
    r.configs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let holds: Vec<Atom> = pool.iter().filter(|a| a.eval(&c.vals).unwrap_or(false)).cloned().collect();
            if holds.is_empty() || (i + salt).is_multiple_of(3) {
                vec![]
            } else {
                vec![holds[(i + salt) % holds.len()].clone()]
            }
        })
        .collect()
}

/// A run realizes its history constraint, and every model of it is realized by some run.
pub fn check_history_realizability(d: &Ddsa, r: &ConcreteRun, cs: &[Vec<Atom>]) -> Result<(), String> {
    let sigma = r.symbolic();
    let h = d.history_constraint(&sigma, cs).map_err(|e| e.to_string())?;
    if !h.eval(&r.last().vals).map_err(|e| e.to_string())? {
        return Err(format!("final values of {:?} violate {}", r, h));
    }
    let m = match solve::is_sat(&h, d.sorts.clone()).map_err(|e| e.to_string())? {
        solve::SatResult::Sat(mut m) => {
            for v in &d.vars {
                m.entry(v.clone()).or_insert_with(|| q(0));
            }
            m
        }
        solve::SatResult::Unsat => return Err(format!("{} unsat but realized", h)),
    };
    let run = product::concretize(d, &sigma, cs, Some(m.clone())).map_err(|e| e.to_string())?;
    if run.last().vals != m {
        return Err("concretized run misses the chosen model".into());
    }
    for (c, atoms) in run.configs.iter().zip(cs) {
        if !atoms.iter().all(|a| a.eval(&c.vals).unwrap_or(false)) {
            return Err("concretized run violates a position constraint".into());
        }
    }
    Ok(())
}

pub fn run_values(r: &ConcreteRun) -> BTreeSet<Q> {
    r.configs.iter().flat_map(|c| c.vals.values().cloned()).collect()
}

/// Oracle witness ⇒ verdict Witness; NoWitness ⇒ no oracle witness; a short extracted
/// witness is found again by the oracle on a grid containing its values.
pub fn check_verify_vs_oracle(name: &str, psi: &Ltl) -> Result<(), String> {
    let d = system(name);
    let psi = ltlf::preprocess(psi);
    let grid = int_grid(0, 8);
    let found = oracle::brute_force_witness(&d, &psi, 5, &grid).map_err(|e| e.to_string())?;
    let report = product::verify(&d, &psi, &VerifyOptions::default());
    match (&report.verdict, &found) {
        (Verdict::Witness(w), None) if w.run.len() <= 3 => {
            let mut g: BTreeSet<Q> = grid.into_iter().collect();
            g.extend(run_values(&w.run));
            let g: Vec<Q> = g.into_iter().collect();
            let again = oracle::brute_force_witness(&d, &psi, w.run.len(), &g).map_err(|e| e.to_string())?;
            if again.is_none() {
                return Err(format!("{} on {}: oracle cannot confirm extracted witness", psi, name));
            }
            Ok(())
        }
        (Verdict::Witness(_), _) => Ok(()),
        (v, Some(r)) => Err(format!("{} on {}: oracle found {:?} but verdict {:?}", psi, name, r, v)),
        (Verdict::NoWitness(_), None) => Ok(()),
        (Verdict::Inconclusive(why), None) => Err(format!("{} on {}: inconclusive ({})", psi, name, why)),
    }
}
