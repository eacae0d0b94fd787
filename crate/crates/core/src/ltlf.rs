//! Finite-trace temporal properties with arithmetic constraints: AST, the
//! transition function δ, the NFA construction and the direct semantics.

use crate::ddsa::{base_action, ConcreteRun, Ddsa};
use crate::error::{Error, Result};
use crate::formula::{Atom, Domain, Formula, Op, Q};
use crate::solve;
use num::Zero;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ltl {
    True,
    False,
    Constraint(Atom),
    State(String),
    Action(String),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    ActionNext(String, Box<Ltl>),
    Next(Box<Ltl>),
    Eventually(Box<Ltl>),
    Always(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
}

impl Ltl {
    /// `true` as written by users: the tautological constraint `0 = 0`.
    pub fn top() -> Ltl {
        Ltl::Constraint(Atom::from_parts(BTreeMap::new(), Op::Eq, Q::zero()))
    }

    pub fn bottom() -> Ltl {
        Ltl::Constraint(Atom::from_parts(BTreeMap::new(), Op::Lt, Q::zero()))
    }

    pub fn c(a: Atom) -> Ltl {
        Ltl::Constraint(a)
    }
    pub fn and(a: Ltl, b: Ltl) -> Ltl {
        Ltl::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Or(Box::new(a), Box::new(b))
    }
    pub fn next(a: Ltl) -> Ltl {
        Ltl::Next(Box::new(a))
    }
    pub fn eventually(a: Ltl) -> Ltl {
        Ltl::Eventually(Box::new(a))
    }
    pub fn always(a: Ltl) -> Ltl {
        Ltl::Always(Box::new(a))
    }
    pub fn until(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Until(Box::new(a), Box::new(b))
    }
    pub fn action_next(a: &str, f: Ltl) -> Ltl {
        Ltl::ActionNext(a.to_string(), Box::new(f))
    }

    /// Constraint atoms occurring in the formula, in first-occurrence order.
    pub fn constraints(&self) -> Vec<Atom> {
        fn go(f: &Ltl, out: &mut Vec<Atom>) {
            match f {
                Ltl::Constraint(a) => {
                    if !out.contains(a) {
                        out.push(a.clone());
                    }
                }
                Ltl::And(x, y) | Ltl::Or(x, y) | Ltl::Until(x, y) => {
                    go(x, out);
                    go(y, out);
                }
                Ltl::ActionNext(_, x) | Ltl::Next(x) | Ltl::Eventually(x) | Ltl::Always(x) => go(x, out),
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |x: &Ltl, f: &mut fmt::Formatter<'_>| {
            if matches!(x, Ltl::And(..) | Ltl::Or(..) | Ltl::Until(..)) {
                write!(f, "({})", x)
            } else {
                write!(f, "{}", x)
            }
        };
        let una = |x: &Ltl, f: &mut fmt::Formatter<'_>| {
            if matches!(x, Ltl::And(..) | Ltl::Or(..) | Ltl::Until(..) | Ltl::Constraint(..)) {
                write!(f, "({})", x)
            } else {
                write!(f, "{}", x)
            }
        };
        match self {
            Ltl::True => f.write_str("⊤"),
            Ltl::False => f.write_str("⊥"),
            Ltl::Constraint(a) => write!(f, "{}", a),
            Ltl::State(s) | Ltl::Action(s) => f.write_str(s),
            Ltl::And(x, y) | Ltl::Or(x, y) | Ltl::Until(x, y) => {
                let op = match self {
                    Ltl::And(..) => " ∧ ",
                    Ltl::Or(..) => " ∨ ",
                    _ => " U ",
                };
                sub(x, f)?;
                f.write_str(op)?;
                sub(y, f)
            }
            Ltl::ActionNext(a, x) => {
                write!(f, "⟨{}⟩", a)?;
                una(x, f)
            }
            Ltl::Next(x) => {
                f.write_str("⟨·⟩")?;
                una(x, f)
            }
            Ltl::Eventually(x) => {
                f.write_str("◇")?;
                una(x, f)
            }
            Ltl::Always(x) => {
                f.write_str("□")?;
                una(x, f)
            }
        }
    }
}

/// Replaces every `⟨a⟩ψ` by `⟨·⟩(a ∧ ψ)`.
pub fn preprocess(f: &Ltl) -> Ltl {
    let p = |x: &Ltl| Box::new(preprocess(x));
    match f {
        Ltl::ActionNext(a, x) => Ltl::Next(Box::new(Ltl::And(Box::new(Ltl::Action(a.clone())), p(x)))),
        Ltl::And(x, y) => Ltl::And(p(x), p(y)),
        Ltl::Or(x, y) => Ltl::Or(p(x), p(y)),
        Ltl::Until(x, y) => Ltl::Until(p(x), p(y)),
        Ltl::Next(x) => Ltl::Next(p(x)),
        Ltl::Eventually(x) => Ltl::Eventually(p(x)),
        Ltl::Always(x) => Ltl::Always(p(x)),
        _ => f.clone(),
    }
}

// ---------------------------------------------------------------------------
// Symbols and δ

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    State(String),
    Action(String),
    Constraint(Atom),
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::State(s) | Sym::Action(s) => f.write_str(s),
            Sym::Constraint(a) => write!(f, "{}", a),
        }
    }
}

pub type Symbol = BTreeSet<Sym>;

pub fn fmt_symbol(s: &Symbol) -> String {
    if s.is_empty() {
        return "∅".to_string();
    }
    let parts: Vec<String> = s.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

pub fn constr(s: &Symbol) -> Vec<Atom> {
    s.iter()
        .filter_map(|x| match x {
            Sym::Constraint(a) => Some(a.clone()),
            _ => None,
        })
        .collect()
}

/// A δ label: symbols plus the `last` / `¬last` flags.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Label {
    pub syms: Symbol,
    pub last: bool,
    pub not_last: bool,
}

impl Label {
    fn flag(last: bool) -> Label {
        Label { syms: Symbol::new(), last, not_last: !last }
    }
    fn union(&self, o: &Label) -> Label {
        Label {
            syms: self.syms.union(&o.syms).cloned().collect(),
            last: self.last || o.last,
            not_last: self.not_last || o.not_last,
        }
    }
}

pub type DeltaSet = BTreeSet<(Ltl, Label)>;

type Clauses = BTreeSet<BTreeSet<Ltl>>;

/// Disjunctive normal form over non-Boolean subformulas.
fn dnf(f: Ltl) -> Clauses {
    match f {
        Ltl::True => [BTreeSet::new()].into_iter().collect(),
        Ltl::False => Clauses::new(),
        Ltl::Or(x, y) => {
            let mut out = dnf(*x);
            out.extend(dnf(*y));
            out
        }
        Ltl::And(x, y) => {
            let (a, b) = (dnf(*x), dnf(*y));
            let mut out = Clauses::new();
            for c in &a {
                for d in &b {
                    out.insert(c.union(d).cloned().collect());
                }
            }
            out
        }
        other => [[other].into_iter().collect()].into_iter().collect(),
    }
}

fn nest(xs: Vec<Ltl>, and: bool) -> Option<Ltl> {
    let mut it = xs.into_iter().rev();
    let mut acc = it.next()?;
    for x in it {
        acc = if and { Ltl::and(x, acc) } else { Ltl::or(x, acc) };
    }
    Some(acc)
}

/// Canonical form: DNF with subsumed clauses dropped, clauses and literals sorted.
/// Keeps the reachable state space finite.
fn normalize(f: Ltl) -> Ltl {
    let cs = dnf(f);
    let kept: Vec<&BTreeSet<Ltl>> = cs.iter().filter(|c| !cs.iter().any(|d| d != *c && d.is_subset(c))).collect();
    let mut terms: Vec<Ltl> = kept
        .into_iter()
        .map(|c| nest(c.iter().cloned().collect(), true).unwrap_or(Ltl::True))
        .collect();
    terms.sort();
    terms.dedup();
    nest(terms, false).unwrap_or(Ltl::False)
}

/// `ψ₁ ⊙ ψ₂` in canonical form.
fn simp(a: Ltl, b: Ltl, and: bool) -> Ltl {
    normalize(if and { Ltl::and(a, b) } else { Ltl::or(a, b) })
}

fn combine(r1: &DeltaSet, r2: &DeltaSet, and: bool) -> DeltaSet {
    let mut out = DeltaSet::new();
    for (f1, s1) in r1 {
        for (f2, s2) in r2 {
            out.insert((simp(f1.clone(), f2.clone(), and), s1.union(s2)));
        }
    }
    out
}

fn atom_sym(f: &Ltl) -> Option<Sym> {
    match f {
        Ltl::Constraint(a) => Some(Sym::Constraint(a.clone())),
        Ltl::State(s) => Some(Sym::State(s.clone())),
        Ltl::Action(s) => Some(Sym::Action(s.clone())),
        _ => None,
    }
}

pub fn delta(q: &Ltl) -> DeltaSet {
    let next = |x: Ltl| -> DeltaSet { [(x, Label::flag(false)), (Ltl::False, Label::flag(true))].into_iter().collect() };
    match q {
        Ltl::True | Ltl::False => [(q.clone(), Label::default())].into_iter().collect(),
        Ltl::Constraint(_) | Ltl::State(_) | Ltl::Action(_) => {
            let mut l = Label::default();
            l.syms.insert(atom_sym(q).unwrap());
            [(Ltl::True, l), (Ltl::False, Label::default())].into_iter().collect()
        }
        Ltl::Or(x, y) => combine(&delta(x), &delta(y), false),
        Ltl::And(x, y) => combine(&delta(x), &delta(y), true),
        Ltl::Next(x) => next((**x).clone()),
        Ltl::ActionNext(..) => delta(&preprocess(q)),
        Ltl::Eventually(x) => combine(&delta(x), &next(q.clone()), false),
        Ltl::Always(x) => {
            let lambda: DeltaSet = [(Ltl::True, Label::flag(true)), (Ltl::False, Label::flag(false))].into_iter().collect();
            let tail = combine(&next(q.clone()), &lambda, false);
            combine(&delta(x), &tail, true)
        }
        Ltl::Until(x, y) => {
            let keep = combine(&delta(x), &next(q.clone()), true);
            combine(&delta(y), &keep, false)
        }
    }
}

// ---------------------------------------------------------------------------
// NFA

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NfaState {
    Formula(Ltl),
    End,
}

impl fmt::Display for NfaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NfaState::Formula(x) => write!(f, "{}", x),
            NfaState::End => f.write_str("q_e"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa {
    pub states: Vec<NfaState>,
    pub initial: usize,
    pub finals: BTreeSet<usize>,
    /// `(source, label, target)`, sorted and deduplicated.
    pub edges: Vec<(usize, Symbol, usize)>,
}

impl Nfa {
    pub fn index_of(&self, s: &NfaState) -> Option<usize> {
        self.states.iter().position(|x| x == s)
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.finals.contains(&q)
    }

    pub fn out_edges(&self, q: usize) -> impl Iterator<Item = &(usize, Symbol, usize)> {
        self.edges.iter().filter(move |e| e.0 == q)
    }

    /// Edges as `(source, label, target)` display strings, sorted.
    pub fn edge_strings(&self) -> Vec<(String, String, String)> {
        let mut v: Vec<_> = self
            .edges
            .iter()
            .map(|(s, l, t)| (self.states[*s].to_string(), fmt_symbol(l), self.states[*t].to_string()))
            .collect();
        v.sort();
        v
    }
}

/// The automaton exactly as defined, including the `⊥` sink.
pub fn build_nfa_raw(psi: &Ltl) -> Nfa {
    let q0 = NfaState::Formula(preprocess(psi));
    let qf = NfaState::Formula(Ltl::True);
    let mut states = vec![q0.clone()];
    let mut index: BTreeMap<NfaState, usize> = BTreeMap::new();
    index.insert(q0, 0);
    for s in [qf, NfaState::End] {
        if !index.contains_key(&s) {
            index.insert(s.clone(), states.len());
            states.push(s);
        }
    }
    let qe = index[&NfaState::End];
    let mut edges = BTreeSet::new();
    let mut work: VecDeque<usize> = (0..states.len()).filter(|&i| i != qe).collect();
    let mut done = BTreeSet::new();
    while let Some(i) = work.pop_front() {
        if !done.insert(i) {
            continue;
        }
        let f = match &states[i] {
            NfaState::Formula(f) => f.clone(),
            NfaState::End => continue,
        };
        for (g, l) in delta(&f) {
            if l.last && l.not_last {
                continue;
            }
            let target = NfaState::Formula(g.clone());
            let j = match index.get(&target) {
                Some(&j) => j,
                None => {
                    let j = states.len();
                    index.insert(target.clone(), j);
                    states.push(target);
                    work.push_back(j);
                    j
                }
            };
            if !l.last {
                edges.insert((i, l.syms.clone(), j));
            } else if g == Ltl::True {
                edges.insert((i, l.syms.clone(), qe));
            }
        }
    }
    let finals = [index[&NfaState::Formula(Ltl::True)], qe].into_iter().collect();
    Nfa { states, initial: 0, finals, edges: edges.into_iter().collect() }
}

/// Whether a label can be consistent with some transition: at most one state
/// atom, one action name, and satisfiable constraints.
fn label_feasible(l: &Symbol) -> bool {
    let states: BTreeSet<&String> = l.iter().filter_map(|s| if let Sym::State(x) = s { Some(x) } else { None }).collect();
    let actions: BTreeSet<&String> = l.iter().filter_map(|s| if let Sym::Action(x) = s { Some(x) } else { None }).collect();
    if states.len() > 1 || actions.len() > 1 {
        return false;
    }
    let c = Formula::conj_atoms(constr(l));
    solve::sat(&c, Domain::Rat).unwrap_or(true)
}

/// The automaton with the `⊥` sink, infeasible labels and unreachable states removed.
pub fn build_nfa(psi: &Ltl) -> Nfa {
    let raw = build_nfa_raw(psi);
    let bot = raw.index_of(&NfaState::Formula(Ltl::False));
    let live: Vec<&(usize, Symbol, usize)> = raw
        .edges
        .iter()
        .filter(|(s, l, t)| Some(*s) != bot && Some(*t) != bot && label_feasible(l))
        .collect();
    // keep q0, q_f, q_e and whatever is reachable from q0
    let mut keep: BTreeSet<usize> = raw.finals.clone();
    keep.insert(raw.initial);
    let mut stack = vec![raw.initial];
    let mut seen = BTreeSet::new();
    while let Some(q) = stack.pop() {
        if !seen.insert(q) {
            continue;
        }
        keep.insert(q);
        for e in live.iter().filter(|e| e.0 == q) {
            stack.push(e.2);
        }
    }
    if let Some(b) = bot {
        if b != raw.initial {
            keep.remove(&b);
        }
    }
    let remap: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let states = keep.iter().map(|&o| raw.states[o].clone()).collect();
    let edges = live
        .into_iter()
        .filter(|e| seen.contains(&e.0) && remap.contains_key(&e.2))
        .map(|(s, l, t)| (remap[s], l.clone(), remap[t]))
        .collect();
    let finals = raw.finals.iter().filter_map(|f| remap.get(f).copied()).collect();
    Nfa { states, initial: remap[&raw.initial], finals, edges }
}

// ---------------------------------------------------------------------------
// Semantics on concrete runs

fn step_ok(d: &Ddsa, r: &ConcreteRun, i: usize, a: &str) -> bool {
    base_action(&r.actions[i]) == a && d.is_step(&r.configs[i], &r.actions[i], &r.configs[i + 1]).unwrap_or(false)
}

/// `ρ, i ⊨ ψ` by direct recursion over the formula.
pub fn run_models(d: &Ddsa, r: &ConcreteRun, i: usize, psi: &Ltl) -> bool {
    let n = r.len();
    match psi {
        Ltl::True => true,
        Ltl::False => false,
        Ltl::Constraint(a) => a.eval(&r.configs[i].vals).unwrap_or(false),
        Ltl::State(b) => r.configs[i].state == *b,
        Ltl::Action(a) => i > 0 && base_action(&r.actions[i - 1]) == a,
        Ltl::And(x, y) => run_models(d, r, i, x) && run_models(d, r, i, y),
        Ltl::Or(x, y) => run_models(d, r, i, x) || run_models(d, r, i, y),
        Ltl::ActionNext(a, x) => i < n && step_ok(d, r, i, a) && run_models(d, r, i + 1, x),
        Ltl::Next(x) => i < n && run_models(d, r, i + 1, x),
        Ltl::Eventually(x) => (i..=n).any(|j| run_models(d, r, j, x)),
        Ltl::Always(x) => (i..=n).all(|j| run_models(d, r, j, x)),
        Ltl::Until(x, y) => {
            for j in i..=n {
                if run_models(d, r, j, y) {
                    return true;
                }
                if j == n || !run_models(d, r, j, x) {
                    return false;
                }
            }
            false
        }
    }
}

/// Symbol consistency with position `i` of a run. Position 0 is entered by
/// the dummy initial step, so it admits no action atoms.
pub fn symbol_consistent(s: &Symbol, r: &ConcreteRun, i: usize) -> bool {
    let c = &r.configs[i];
    s.iter().all(|x| match x {
        Sym::State(b) => *b == c.state,
        Sym::Action(a) => i > 0 && base_action(&r.actions[i - 1]) == a,
        Sym::Constraint(a) => a.eval(&c.vals).unwrap_or(false),
    })
}

pub fn word_consistent(w: &[Symbol], r: &ConcreteRun) -> Result<bool> {
    if w.len() != r.len() + 1 {
        return Err(Error::LengthMismatch { word: w.len(), positions: r.len() + 1 });
    }
    Ok(w.iter().enumerate().all(|(i, s)| symbol_consistent(s, r, i)))
}

/// Whether the automaton accepts some word consistent with the run.
pub fn accepts_run(nfa: &Nfa, r: &ConcreteRun) -> bool {
    let mut cur: BTreeSet<usize> = [nfa.initial].into_iter().collect();
    for i in 0..=r.len() {
        let mut next = BTreeSet::new();
        for (s, l, t) in &nfa.edges {
            if cur.contains(s) && symbol_consistent(l, r, i) {
                next.insert(*t);
            }
        }
        cur = next;
        if cur.is_empty() {
            return false;
        }
    }
    cur.iter().any(|q| nfa.is_final(*q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{cst, var, Rel, Term};

    fn c(l: Term, r: Rel, k: i64) -> Ltl {
        Ltl::c(Atom::new(l, r, cst(k)))
    }

    fn label(syms: &[Sym], last: Option<bool>) -> Label {
        Label {
            syms: syms.iter().cloned().collect(),
            last: last == Some(true),
            not_last: last == Some(false),
        }
    }

    #[test]
    fn preprocess_action_next() {
        let x = c(var("x"), Rel::Gt, 0);
        let f = Ltl::action_next("a1", x.clone());
        assert_eq!(preprocess(&f), Ltl::next(Ltl::and(Ltl::Action("a1".into()), x.clone())));
        let e = Ltl::eventually(x);
        assert_eq!(preprocess(&e), e);
    }

    #[test]
    fn delta_table() {
        let psi = c(var("y"), Rel::Gt, 5);
        let n = delta(&Ltl::next(psi.clone()));
        let want: DeltaSet = [(psi.clone(), label(&[], Some(false))), (Ltl::False, label(&[], Some(true)))].into_iter().collect();
        assert_eq!(n, want);
        assert_eq!(delta(&Ltl::True), [(Ltl::True, Label::default())].into_iter().collect());
        let ev = Ltl::eventually(psi.clone());
        let s = Sym::Constraint(Atom::new(var("y"), Rel::Gt, cst(5)));
        let want: DeltaSet = [
            (Ltl::True, label(std::slice::from_ref(&s), Some(false))),
            (Ltl::True, label(&[s], Some(true))),
            (ev.clone(), label(&[], Some(false))),
            (Ltl::False, label(&[], Some(true))),
        ]
        .into_iter()
        .collect();
        let got: DeltaSet = delta(&ev).into_iter().filter(|(_, l)| !(l.last && l.not_last)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn nfa_eventually() {
        let psi = Ltl::eventually(c(var("y"), Rel::Gt, 5));
        let raw = build_nfa_raw(&psi);
        assert_eq!(raw.states.len(), 4);
        let nfa = build_nfa(&psi);
        assert_eq!(nfa.states.len(), 3);
        let edges = nfa.edge_strings();
        let e = |a: &str, l: &str, b: &str| (a.to_string(), l.to_string(), b.to_string());
        assert_eq!(
            edges,
            vec![
                e("⊤", "∅", "⊤"),
                e("◇(y > 5)", "{y > 5}", "q_e"),
                e("◇(y > 5)", "{y > 5}", "⊤"),
                e("◇(y > 5)", "∅", "◇(y > 5)"),
            ]
        );
        assert_eq!(build_nfa(&psi), nfa);
    }
}
