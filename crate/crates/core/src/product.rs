//! Product of a system with the automaton of a property, and witness extraction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num::Zero;

use crate::ddsa::{base_action, ActionId, Config, ConcreteRun, Ddsa, StateId, SymbolicRun, Transition};
use crate::formula::{Assignment, Atom, Formula, Term, VarId, VarKind, Q};
use crate::ltlf::{self, build_nfa, constr, Ltl, Nfa, NfaState, Sym, Symbol};
use crate::solve::{self, SatResult};
use crate::summary::{self, DetectOptions, Engine, SummaryStrategy};
use crate::{Error, Result};

/// Names that the model syntax cannot produce.
pub const DUMMY_STATE: &str = "b0'";
pub const DUMMY_ACTION: &str = "a0'";

/// Adds `b0' →a0' b0` with a trivial guard and makes `b0'` initial.
pub fn extend_with_dummy(d: &Ddsa) -> Result<Ddsa> {
    if d.states.iter().any(|s| s == DUMMY_STATE) {
        return Err(Error::AlreadyExtended);
    }
    let mut e = d.clone();
    e.states.insert(0, DUMMY_STATE.to_string());
    e.actions.insert(0, DUMMY_ACTION.to_string());
    e.guards.insert(DUMMY_ACTION.to_string(), vec![]);
    e.transitions.insert(
        0,
        Transition { from: DUMMY_STATE.to_string(), action: DUMMY_ACTION.to_string(), to: d.initial.clone() },
    );
    e.initial = DUMMY_STATE.to_string();
    Ok(e)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductNode {
    pub state: StateId,
    pub q: usize,
    pub phi: Formula,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductEdge {
    pub from: usize,
    pub action: ActionId,
    pub symbol: Symbol,
    pub to: usize,
}

#[derive(Clone, Debug)]
pub struct Product {
    /// The system extended with the dummy initial step.
    pub ddsa: Ddsa,
    pub nfa: Nfa,
    pub nodes: Vec<ProductNode>,
    pub edges: Vec<ProductEdge>,
    pub initial: usize,
    pub finals: BTreeSet<usize>,
}

impl Product {
    pub fn is_final(&self, i: usize) -> bool {
        self.finals.contains(&i)
    }

    /// `(2, ⊤, x > y && y > 5)`-style label.
    pub fn node_label(&self, i: usize) -> String {
        let n = &self.nodes[i];
        let q = match &self.nfa.states[n.q] {
            NfaState::Formula(Ltl::True) => "⊤".to_string(),
            s => s.to_string(),
        };
        format!("({}, {}, {})", n.state, q, n.phi)
    }
}

/// Whether `ς` can label the step into `b2` by `a`.
fn consistent(s: &Symbol, a: &str, b2: &str) -> bool {
    s.iter().all(|x| match x {
        Sym::State(b) => b == b2,
        Sym::Action(n) => a != DUMMY_ACTION && base_action(a) == n,
        Sym::Constraint(_) => true,
    })
}

/// Forward fixpoint from `(b0', q0, ⋀C_α₀)`. `engine` must be built on the extended system.
pub fn build_product(engine: &Engine, nfa: &Nfa, max_nodes: usize) -> Result<Product> {
    let d = &engine.ddsa;
    if d.initial != DUMMY_STATE {
        return Err(Error::InternalInconsistency("product needs the extended system".into()));
    }
    let qe = nfa.index_of(&NfaState::End);
    let mut nodes = vec![ProductNode { state: d.initial.clone(), q: nfa.initial, phi: d.initial_constraint() }];
    let mut edges = Vec::new();
    let mut index: BTreeMap<(StateId, usize), Vec<usize>> = BTreeMap::new();
    index.entry((d.initial.clone(), nfa.initial)).or_default().push(0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let ProductNode { state, q, phi } = nodes[i].clone();
        let mut out: Vec<&(usize, Symbol, usize)> = nfa.out_edges(q).collect();
        out.sort_by(|x, y| y.1.len().cmp(&x.1.len()).then_with(|| x.cmp(y)));
        for t in d.outgoing(&state) {
            let mut upd = None;
            for (_, sym, q2) in &out {
                if !consistent(sym, &t.action, &t.to) {
                    continue;
                }
                if Some(*q2) == qe && !d.is_final(&t.to) {
                    continue;
                }
                if upd.is_none() {
                    upd = Some(engine.update(&phi, &t.action)?);
                }
                let chi = Formula::and([upd.clone().unwrap(), Formula::conj_atoms(constr(sym))]);
                if !engine.is_sat(&chi)? {
                    continue;
                }
                let key = (t.to.clone(), *q2);
                let mut hit = None;
                for &j in index.get(&key).map(|v| v.as_slice()).unwrap_or(&[]) {
                    if engine.equiv(&nodes[j].phi, &chi)? {
                        hit = Some(j);
                        break;
                    }
                }
                let j = match hit {
                    Some(j) => j,
                    None => {
                        if nodes.len() >= max_nodes {
                            return Err(Error::BudgetExceeded(max_nodes));
                        }
                        let phi2 = solve::simplify(&chi, &d.sorts)?;
                        nodes.push(ProductNode { state: t.to.clone(), q: *q2, phi: phi2 });
                        let j = nodes.len() - 1;
                        index.entry(key).or_default().push(j);
                        queue.push_back(j);
                        j
                    }
                };
                let e = ProductEdge { from: i, action: t.action.clone(), symbol: sym.clone(), to: j };
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
    }
    let finals = (0..nodes.len()).filter(|&i| d.is_final(&nodes[i].state) && nfa.is_final(nodes[i].q)).collect();
    Ok(Product { ddsa: d.clone(), nfa: nfa.clone(), nodes, edges, initial: 0, finals })
}

/// Shortest path to a final node, as edge indices.
pub fn find_accepting_path(p: &Product) -> Option<Vec<usize>> {
    let mut prev: Vec<Option<usize>> = vec![None; p.nodes.len()];
    let mut seen = vec![false; p.nodes.len()];
    seen[p.initial] = true;
    let mut queue = VecDeque::from([p.initial]);
    while let Some(i) = queue.pop_front() {
        if p.is_final(i) {
            let mut path = Vec::new();
            let mut at = i;
            while let Some(e) = prev[at] {
                path.push(e);
                at = p.edges[e].from;
            }
            path.reverse();
            return Some(path);
        }
        for (k, e) in p.edges.iter().enumerate() {
            if e.from == i && !seen[e.to] {
                seen[e.to] = true;
                prev[e.to] = Some(k);
                queue.push_back(e.to);
            }
        }
    }
    None
}

fn model(phi: &Formula, d: &Ddsa) -> Result<Option<Assignment>> {
    Ok(match solve::is_sat(phi, &d.sorts)? {
        SatResult::Sat(mut m) => {
            for v in &d.vars {
                m.entry(v.clone()).or_insert_with(Q::zero);
            }
            Some(m)
        }
        SatResult::Unsat => None,
    })
}

/// Assignments along a run, from a model of the last history constraint (or `last`) backwards.
/// `hist[k]` is the history constraint after `actions[..k]`.
fn solve_backwards(d: &Ddsa, actions: &[&ActionId], hist: &[Formula], last: Option<Assignment>) -> Result<Vec<Assignment>> {
    let n = actions.len();
    let mut vals = vec![Assignment::new(); n + 1];
    vals[n] = match last {
        Some(m) => m,
        None => model(&hist[n], d)?.ok_or_else(|| {
            Error::InternalInconsistency(format!("history constraint {} is unsatisfiable", hist[n]))
        })?,
    };
    for k in (0..n).rev() {
        let next = &vals[k + 1];
        let map: BTreeMap<VarId, Term> = d
            .vars
            .iter()
            .map(|v| (v.with_kind(VarKind::Write), Term::constant(next[v].clone())))
            .collect();
        let delta = d.transition_formula(actions[k])?.substitute(&map).rename(&|v| {
            if v.kind == VarKind::Read {
                v.with_kind(VarKind::Plain)
            } else {
                v.clone()
            }
        });
        let back = Formula::and([hist[k].clone(), delta]);
        vals[k] = model(&back, d)?.ok_or_else(|| {
            Error::InternalInconsistency(format!("no predecessor for step {} by {}", k + 1, actions[k]))
        })?;
    }
    Ok(vals)
}

/// Concrete run along `run` whose positions satisfy `cs`, ending in `last` if given.
/// Every step is checked against the transition relation.
pub fn concretize(d: &Ddsa, run: &SymbolicRun, cs: &[Vec<Atom>], last: Option<Assignment>) -> Result<ConcreteRun> {
    if cs.len() != run.len() + 1 {
        return Err(Error::LengthMismatch { word: cs.len(), positions: run.len() + 1 });
    }
    let mut hist = vec![Formula::conj_atoms(d.initial_atoms().into_iter().chain(cs[0].iter().cloned()))];
    for (k, a) in run.actions.iter().enumerate() {
        let u = d.update(&hist[k], a)?;
        hist.push(Formula::and([u, Formula::conj_atoms(cs[k + 1].iter().cloned())]));
    }
    let actions: Vec<&ActionId> = run.actions.iter().collect();
    let vals = solve_backwards(d, &actions, &hist, last)?;
    let configs = run.states.iter().zip(vals).map(|(s, v)| Config { state: s.clone(), vals: v }).collect();
    let out = ConcreteRun { configs, actions: run.actions.clone() };
    if !d.check_run(&out)? {
        return Err(Error::InternalInconsistency("concretized run violates a step".into()));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Witness {
    /// Run of the original system (dummy step removed).
    pub run: ConcreteRun,
    /// One symbol per run position.
    pub word: Vec<Symbol>,
    /// Product nodes visited, starting at the initial node.
    pub path: Vec<usize>,
}

/// Concrete run along an accepting path, solved backwards from a model of the last history constraint.
pub fn extract_witness(engine: &Engine, p: &Product, path: &[usize], psi: &Ltl, original: &Ddsa) -> Result<Witness> {
    let d = &p.ddsa;
    let actions: Vec<&ActionId> = path.iter().map(|&e| &p.edges[e].action).collect();
    let word: Vec<Symbol> = path.iter().map(|&e| p.edges[e].symbol.clone()).collect();
    let mut states = vec![d.initial.clone()];
    states.extend(path.iter().map(|&e| p.nodes[p.edges[e].to].state.clone()));
    let mut hist = vec![d.initial_constraint()];
    for (k, a) in actions.iter().enumerate() {
        let u = engine.update(&hist[k], a)?;
        hist.push(Formula::and([u, Formula::conj_atoms(constr(&word[k]))]));
    }
    let vals = solve_backwards(d, &actions, &hist, None)?;
    let configs: Vec<Config> =
        states.iter().zip(vals).skip(1).map(|(s, v)| Config { state: s.clone(), vals: v }).collect();
    let run = ConcreteRun { configs, actions: actions[1..].iter().map(|a| a.to_string()).collect() };
    if !original.check_run(&run)? {
        return Err(Error::InternalInconsistency("extracted run violates a step".into()));
    }
    if !original.is_final(&run.last().state) {
        return Err(Error::InternalInconsistency("extracted run does not end in a final state".into()));
    }
    if !ltlf::word_consistent(&word, &run)? || !ltlf::run_models(original, &run, 0, psi) {
        return Err(Error::InternalInconsistency("extracted run does not satisfy the property".into()));
    }
    let mut nodes = vec![p.initial];
    nodes.extend(path.iter().map(|&e| p.edges[e].to));
    Ok(Witness { run, word, path: nodes })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stats {
    pub product_nodes: usize,
    pub product_edges: usize,
    pub nfa_states: usize,
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Witness(Witness),
    NoWitness(Stats),
    Inconclusive(String),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Witness(_) => "witness",
            Verdict::NoWitness(_) => "no-witness",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub max_nodes: usize,
    pub detect: DetectOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { max_nodes: summary::DEFAULT_MAX_NODES, detect: DetectOptions::default() }
    }
}

/// Everything `verify` computed, for reporting.
#[derive(Clone, Debug)]
pub struct Report {
    pub verdict: Verdict,
    pub strategy: Option<SummaryStrategy>,
    pub nfa: Nfa,
    pub product: Option<Product>,
}

pub fn verify(d: &Ddsa, psi: &Ltl, opts: &VerifyOptions) -> Report {
    let psi = ltlf::preprocess(psi);
    let nfa = build_nfa(&psi);
    let mut report = Report { verdict: Verdict::Inconclusive(String::new()), strategy: None, nfa, product: None };
    let cs = psi.constraints();
    let strategy = match summary::detect_with(d, &cs, &opts.detect) {
        Ok(s) => s,
        Err(e) => {
            report.verdict = Verdict::Inconclusive(e.to_string());
            return report;
        }
    };
    report.strategy = Some(strategy.clone());
    let run = || -> Result<(Product, Verdict)> {
        let ext = extend_with_dummy(d)?;
        let engine = Engine::new(&ext, &strategy);
        let p = build_product(&engine, &report.nfa, opts.max_nodes)?;
        let verdict = match find_accepting_path(&p) {
            Some(path) => Verdict::Witness(extract_witness(&engine, &p, &path, &psi, d)?),
            None => Verdict::NoWitness(Stats {
                product_nodes: p.nodes.len(),
                product_edges: p.edges.len(),
                nfa_states: report.nfa.states.len(),
            }),
        };
        Ok((p, verdict))
    };
    match run() {
        Ok((p, v)) => {
            report.product = Some(p);
            report.verdict = v;
        }
        Err(e) => report.verdict = Verdict::Inconclusive(e.to_string()),
    }
    report
}
