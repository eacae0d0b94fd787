//! Brute-force runs over finite value grids.

use std::collections::BTreeSet;

use num::{BigInt, One};

use crate::ddsa::{ConcreteRun, Ddsa};
use crate::formula::{Atom, Domain, Q};
use crate::ltlf::{run_models, Ltl};
use crate::Result;

/// `{0..8}`, the initial values, and the constants of guards and `cs`;
/// over rationals also the midpoints of consecutive values.
pub fn grid(d: &Ddsa, cs: &[Atom]) -> Vec<Q> {
    let mut g: BTreeSet<Q> = (0..=8).map(|i| Q::from_integer(BigInt::from(i))).collect();
    g.extend(d.init.values().cloned());
    let atoms = d.guards.values().flatten().chain(cs);
    for a in atoms {
        let c = a.lhs.values().next().cloned().unwrap_or_else(Q::one);
        g.insert(&a.rhs / &c);
    }
    let mut out: Vec<Q> = g.into_iter().collect();
    if d.vars.iter().any(|v| d.sorts.of(v) == Domain::Rat) {
        let mids: Vec<Q> = out.windows(2).map(|w| (&w[0] + &w[1]) / Q::from_integer(BigInt::from(2))).collect();
        out.extend(mids);
        out.sort();
    }
    out
}

/// `{lo..=hi}` as rationals.
pub fn int_grid(lo: i64, hi: i64) -> Vec<Q> {
    (lo..=hi).map(|i| Q::from_integer(BigInt::from(i))).collect()
}

/// Calls `f` on every run of length at most `max_len` whose written values lie in `grid`,
/// depth first, transitions in declaration order. Stops early when `f` returns `true`.
pub fn for_each_run(d: &Ddsa, max_len: usize, grid: &[Q], f: &mut dyn FnMut(&ConcreteRun) -> bool) -> Result<bool> {
    fn go(d: &Ddsa, run: &mut ConcreteRun, left: usize, grid: &[Q], f: &mut dyn FnMut(&ConcreteRun) -> bool) -> Result<bool> {
        if f(run) {
            return Ok(true);
        }
        if left == 0 {
            return Ok(false);
        }
        let here = run.last().clone();
        for t in d.outgoing(&here.state) {
            for c in d.successors(&here, &t.action, grid)? {
                debug_assert!(d.is_step(&here, &t.action, &c).unwrap_or(false));
                run.configs.push(c);
                run.actions.push(t.action.clone());
                let stop = go(d, run, left - 1, grid, f)?;
                run.configs.pop();
                run.actions.pop();
                if stop {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
    let mut run = ConcreteRun { configs: vec![d.initial_config()], actions: vec![] };
    go(d, &mut run, max_len, grid, f)
}

pub fn enumerate_runs(d: &Ddsa, max_len: usize, grid: &[Q]) -> Result<Vec<ConcreteRun>> {
    let mut out = Vec::new();
    for_each_run(d, max_len, grid, &mut |r| {
        out.push(r.clone());
        false
    })?;
    Ok(out)
}

/// First enumerated run that ends in a final state and satisfies `psi` (preprocessed).
pub fn brute_force_witness(d: &Ddsa, psi: &Ltl, max_len: usize, grid: &[Q]) -> Result<Option<ConcreteRun>> {
    let mut found = None;
    for_each_run(d, max_len, grid, &mut |r| {
        if d.is_final(&r.last().state) && run_models(d, r, 0, psi) {
            found = Some(r.clone());
            true
        } else {
            false
        }
    })?;
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::formula::q;
    use crate::ltlf::preprocess;
    use crate::syntax::parse_linked_property;

    #[test]
    fn enumerate_b1() {
        let d = examples::b1();
        let runs = enumerate_runs(&d, 1, &int_grid(0, 1)).unwrap();
        assert_eq!(runs.len(), 2);
        assert!(runs[0].is_empty());
        assert_eq!(runs[1].last().vals[&crate::formula::VarId::plain("x")], q(1));
        assert_eq!(enumerate_runs(&d, 0, &int_grid(0, 5)).unwrap().len(), 1);
    }

    #[test]
    fn witness_b1() {
        let d = examples::b1();
        let psi = preprocess(&parse_linked_property("F (y > 5)", &d).unwrap());
        let w = brute_force_witness(&d, &psi, 4, &int_grid(0, 9)).unwrap().unwrap();
        assert!(d.check_run(&w).unwrap());
        let none = preprocess(&parse_linked_property("F (y > 5 & y < 0)", &d).unwrap());
        assert!(brute_force_witness(&d, &none, 4, &int_grid(0, 9)).unwrap().is_none());
    }

    #[test]
    fn rational_grid_has_midpoints() {
        let g = grid(&examples::b1(), &[]);
        assert!(g.contains(&(q(1) / q(2))));
        let gi = grid(&examples::b3(), &[]);
        assert!(gi.iter().all(|x| x.is_integer()));
    }
}
