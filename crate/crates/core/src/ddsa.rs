//! Data-aware dynamic systems: model, step semantics, transition formulas,
//! the update operator and history constraints.

use crate::error::{Error, Result};
use crate::formula::{Assignment, Atom, Domain, Formula, Op, Q, Sorts, Term, VarId, VarKind};
use crate::solve;
use num::Zero;
use std::collections::{BTreeMap, BTreeSet};

pub type StateId = String;
pub type ActionId = String;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: StateId,
    pub action: ActionId,
    pub to: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ddsa {
    pub states: Vec<StateId>,
    pub initial: StateId,
    /// Actions in declaration order.
    pub actions: Vec<ActionId>,
    pub transitions: Vec<Transition>,
    pub finals: BTreeSet<StateId>,
    /// Plain variables in declaration order.
    pub vars: Vec<VarId>,
    pub init: Assignment,
    /// Conjunctive guard per action.
    pub guards: BTreeMap<ActionId, Vec<Atom>>,
    pub sorts: Sorts,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub state: StateId,
    pub vals: Assignment,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicRun {
    pub states: Vec<StateId>,
    pub actions: Vec<ActionId>,
}

impl SymbolicRun {
    pub fn empty(b0: &str) -> Self {
        SymbolicRun { states: vec![b0.to_string()], actions: vec![] }
    }
    pub fn len(&self) -> usize {
        self.actions.len()
    }
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
    pub fn last(&self) -> &StateId {
        self.states.last().expect("run has a state")
    }
    pub fn push(&mut self, a: &str, b: &str) {
        self.actions.push(a.to_string());
        self.states.push(b.to_string());
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteRun {
    pub configs: Vec<Config>,
    pub actions: Vec<ActionId>,
}

impl ConcreteRun {
    pub fn len(&self) -> usize {
        self.actions.len()
    }
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
    pub fn symbolic(&self) -> SymbolicRun {
        SymbolicRun {
            states: self.configs.iter().map(|c| c.state.clone()).collect(),
            actions: self.actions.clone(),
        }
    }
    pub fn last(&self) -> &Config {
        self.configs.last().expect("run has a configuration")
    }
}

/// Sequence of verification constraint sets, one per run position.
pub type ConstraintSeq = Vec<Vec<Atom>>;

/// Splits a guard in DNF into one conjunctive guard per cube. A single cube
/// keeps the action name; otherwise the copies are named `a#1`, `a#2`, ...
pub fn desugar_guard(action: &str, guard: &Formula) -> Result<Vec<(ActionId, Vec<Atom>)>> {
    let cubes = disjuncts_as_cubes(guard)?;
    if cubes.len() == 1 {
        return Ok(vec![(action.to_string(), cubes.into_iter().next().unwrap())]);
    }
    Ok(cubes
        .into_iter()
        .enumerate()
        .map(|(i, c)| (format!("{}#{}", action, i + 1), c))
        .collect())
}

fn disjuncts_as_cubes(guard: &Formula) -> Result<Vec<Vec<Atom>>> {
    match guard {
        Formula::Or(xs) => {
            let mut out = Vec::new();
            for x in xs {
                out.extend(disjuncts_as_cubes(x)?);
            }
            Ok(out)
        }
        Formula::True => Ok(vec![vec![]]),
        Formula::Atom(a) if a.op != Op::Ne => Ok(vec![vec![a.clone()]]),
        Formula::And(xs) if xs.iter().all(|x| matches!(x, Formula::Atom(a) if a.op != Op::Ne)) => {
            Ok(vec![xs.iter().flat_map(|x| x.atoms()).collect()])
        }
        other => Ok(solve::to_dnf(other)?),
    }
}

pub fn base_action(a: &str) -> &str {
    a.split('#').next().unwrap_or(a)
}

impl Ddsa {
    pub fn domain(&self) -> Domain {
        self.sorts.default
    }

    pub fn var_names(&self) -> BTreeSet<VarId> {
        self.vars.iter().cloned().collect()
    }

    pub fn is_final(&self, b: &str) -> bool {
        self.finals.contains(b)
    }

    pub fn target(&self, b: &str, a: &str) -> Option<&StateId> {
        self.transitions.iter().find(|t| t.from == b && t.action == a).map(|t| &t.to)
    }

    /// Outgoing transitions of `b` in declaration order.
    pub fn outgoing<'a>(&'a self, b: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.from == b)
    }

    pub fn guard_atoms(&self, a: &str) -> Result<&[Atom]> {
        self.guards.get(a).map(|g| g.as_slice()).ok_or_else(|| Error::UnknownAction(a.to_string()))
    }

    pub fn guard(&self, a: &str) -> Result<Formula> {
        Ok(Formula::conj_atoms(self.guard_atoms(a)?.iter().cloned()))
    }

    pub fn write_set(&self, a: &str) -> Result<BTreeSet<VarId>> {
        Ok(self
            .guard_atoms(a)?
            .iter()
            .flat_map(|x| x.vars())
            .filter(|v| v.kind == VarKind::Write)
            .map(|v| v.with_kind(VarKind::Plain))
            .collect())
    }

    /// Guard plus `v^w = v^r` for every variable the action does not write.
    pub fn transition_formula(&self, a: &str) -> Result<Formula> {
        let ws = self.write_set(a)?;
        let mut parts: Vec<Atom> = self.guard_atoms(a)?.to_vec();
        for v in &self.vars {
            if !ws.contains(v) {
                parts.push(Atom::new(
                    Term::var(v.with_kind(VarKind::Write)),
                    crate::formula::Rel::Eq,
                    Term::var(v.with_kind(VarKind::Read)),
                ));
            }
        }
        Ok(Formula::conj_atoms(parts))
    }

    /// `{ v = α₀(v) | v ∈ V }`.
    pub fn initial_atoms(&self) -> Vec<Atom> {
        self.vars
            .iter()
            .filter_map(|v| {
                self.init.get(v).map(|k| {
                    Atom::new(Term::var(v.clone()), crate::formula::Rel::Eq, Term::constant(k.clone()))
                })
            })
            .collect()
    }

    pub fn initial_constraint(&self) -> Formula {
        Formula::conj_atoms(self.initial_atoms())
    }

    /// `∃U. φ(U) ∧ Δa(U, V)` with the quantifier eliminated.
    pub fn update(&self, phi: &Formula, a: &str) -> Result<Formula> {
        self.update_with(phi, a, &self.sorts)
    }

    pub fn update_with(&self, phi: &Formula, a: &str, sorts: &Sorts) -> Result<Formula> {
        let delta = self.transition_formula(a)?;
        let idx = fresh_index(phi);
        let to_u = |v: &VarId| match v.kind {
            VarKind::Plain | VarKind::Read => VarId::indexed(&v.name, idx),
            _ => v.clone(),
        };
        let phi_u = phi.rename(&|v| if v.kind == VarKind::Plain { to_u(v) } else { v.clone() });
        let delta_uv = delta.rename(&|v| match v.kind {
            VarKind::Read => to_u(v),
            VarKind::Write => v.with_kind(VarKind::Plain),
            _ => v.clone(),
        });
        let us: Vec<VarId> = self.vars.iter().map(&to_u).collect();
        solve::qe(&us, &Formula::and([phi_u, delta_uv]), sorts)
    }

    /// History constraint of a symbolic run interleaved with `cs`.
    pub fn history_constraint(&self, run: &SymbolicRun, cs: &[Vec<Atom>]) -> Result<Formula> {
        if cs.len() != run.len() + 1 {
            return Err(Error::LengthMismatch { word: cs.len(), positions: run.len() + 1 });
        }
        let mut h = Formula::conj_atoms(self.initial_atoms().into_iter().chain(cs[0].iter().cloned()));
        for (i, a) in run.actions.iter().enumerate() {
            let u = self.update(&h, a)?;
            h = Formula::and([u, Formula::conj_atoms(cs[i + 1].iter().cloned())]);
        }
        Ok(h)
    }

    fn guard_assignment(&self, from: &Assignment, to: &Assignment) -> Assignment {
        let mut beta = Assignment::new();
        for v in &self.vars {
            if let Some(x) = from.get(v) {
                beta.insert(v.with_kind(VarKind::Read), x.clone());
            }
            if let Some(x) = to.get(v) {
                beta.insert(v.with_kind(VarKind::Write), x.clone());
            }
        }
        beta
    }

    /// Whether `(b, α) →a (b', α')` is a step.
    pub fn is_step(&self, c: &Config, a: &str, c2: &Config) -> Result<bool> {
        let delta = self.transition_formula(a)?;
        if self.target(&c.state, a) != Some(&c2.state) {
            return Ok(false);
        }
        if !self.respects_sorts(&c2.vals) {
            return Ok(false);
        }
        delta.eval(&self.guard_assignment(&c.vals, &c2.vals))
    }

    fn respects_sorts(&self, vals: &Assignment) -> bool {
        vals.iter().all(|(v, x)| !self.sorts.is_int(v) || x.is_integer())
    }

    /// Checks every step of a run and that it starts in `(b₀, α₀)`.
    pub fn check_run(&self, run: &ConcreteRun) -> Result<bool> {
        let first = match run.configs.first() {
            Some(c) => c,
            None => return Ok(false),
        };
        if run.configs.len() != run.actions.len() + 1 || first.state != self.initial {
            return Ok(false);
        }
        for v in &self.vars {
            if let Some(k) = self.init.get(v) {
                if first.vals.get(v) != Some(k) {
                    return Ok(false);
                }
            }
        }
        for (i, a) in run.actions.iter().enumerate() {
            if !self.is_step(&run.configs[i], a, &run.configs[i + 1])? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// All successors by `a` whose written values come from `grid`.
    pub fn successors(&self, c: &Config, a: &str, grid: &[Q]) -> Result<Vec<Config>> {
        let delta = self.transition_formula(a)?;
        let to = match self.target(&c.state, a) {
            Some(t) => t.clone(),
            None => return Ok(vec![]),
        };
        let ws: Vec<VarId> = self.vars.iter().filter(|v| self.write_set(a).is_ok_and(|s| s.contains(*v))).cloned().collect();
        let choices: Vec<Vec<Q>> = ws
            .iter()
            .map(|v| {
                let mut g: Vec<Q> = grid.iter().filter(|x| !self.sorts.is_int(v) || x.is_integer()).cloned().collect();
                g.sort();
                g.dedup();
                g
            })
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; ws.len()];
        if choices.iter().any(|c| c.is_empty()) {
            return Ok(out);
        }
        loop {
            let mut next = c.vals.clone();
            for (i, v) in ws.iter().enumerate() {
                next.insert(v.clone(), choices[i][idx[i]].clone());
            }
            if delta.eval(&self.guard_assignment(&c.vals, &next))? {
                out.push(Config { state: to.clone(), vals: next });
            }
            // odometer, first variable slowest
            let mut k = ws.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    pub fn initial_config(&self) -> Config {
        let mut vals = self.init.clone();
        for v in &self.vars {
            vals.entry(v.clone()).or_insert_with(Q::zero);
        }
        Config { state: self.initial.clone(), vals }
    }

    /// Human-readable violations of the model invariants.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let states: BTreeSet<&StateId> = self.states.iter().collect();
        if states.len() != self.states.len() {
            out.push("duplicate state names".to_string());
        }
        if !states.contains(&self.initial) {
            out.push(format!("initial state '{}' not in B", self.initial));
        }
        for f in &self.finals {
            if !states.contains(f) {
                out.push(format!("final state '{}' not in B", f));
            }
        }
        let mut seen = BTreeSet::new();
        for t in &self.transitions {
            if !states.contains(&t.from) {
                out.push(format!("transition source '{}' not in B", t.from));
            }
            if !states.contains(&t.to) {
                out.push(format!("transition target '{}' not in B", t.to));
            }
            if !self.guards.contains_key(&t.action) {
                out.push(format!("action '{}' has no guard", t.action));
            }
            if !seen.insert((t.from.clone(), t.action.clone())) {
                out.push(format!("two transitions from '{}' by '{}'", t.from, t.action));
            }
        }
        let vars = self.var_names();
        for v in &self.vars {
            if !self.init.contains_key(v) {
                out.push(format!("variable {} has no initial value", v));
            } else if self.sorts.is_int(v) && !self.init[v].is_integer() {
                out.push(format!("initial value of integer variable {} is not an integer", v));
            }
        }
        for (a, g) in &self.guards {
            for atom in g {
                for v in atom.vars() {
                    let ok = matches!(v.kind, VarKind::Read | VarKind::Write) && vars.contains(&v.with_kind(VarKind::Plain));
                    if !ok {
                        out.push(format!("guard of '{}' mentions {} outside V^r and V^w", a, v));
                    }
                }
                if atom.op == Op::Ne {
                    out.push(format!("guard of '{}' uses a disequality; split it into two transitions", a));
                }
            }
        }
        out
    }

    /// Conditions that are allowed but make verification trivial.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.finals.is_empty() {
            out.push("no final states: no run can be a witness".to_string());
        }
        out
    }

    /// Restriction to a subset of the variables; guards keep only atoms over them.
    pub fn restrict(&self, vars: &BTreeSet<VarId>) -> Ddsa {
        let mut d = self.clone();
        d.vars.retain(|v| vars.contains(v));
        d.init.retain(|v, _| vars.contains(v));
        for g in d.guards.values_mut() {
            g.retain(|a| a.vars().all(|v| vars.contains(&v.with_kind(VarKind::Plain))));
        }
        d
    }
}

fn fresh_index(phi: &Formula) -> u32 {
    phi.all_vars()
        .iter()
        .filter_map(|v| match v.kind {
            VarKind::Indexed(n) => Some(n + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}
