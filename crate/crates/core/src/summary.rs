//! Finite-summary detection and constraint graphs.
//!
//! A strategy names the criterion under which the set of history constraints
//! is finite up to an equivalence. [`Engine`] turns a strategy into the
//! operations the graph constructions need: update, equivalence, satisfiability.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use num::{ToPrimitive, Zero};

use crate::ddsa::{ActionId, Ddsa, StateId, SymbolicRun};
use crate::formula::{Atom, Domain, Formula, Op, VarId, VarKind, Q};
use crate::solve::{self, ConstraintClass};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SummaryStrategy {
    Mc,
    Gc {
        k: u64,
    },
    /// Longest acyclic path `k`, checked on runs using each transition at most `unroll` times.
    BoundedLookback {
        k: usize,
        unroll: usize,
    },
    FeedbackFree {
        unroll: usize,
    },
    SeqCompose {
        left: Box<SummaryStrategy>,
        right: Box<SummaryStrategy>,
        cut: StateId,
    },
    VarCompose {
        left_vars: BTreeSet<VarId>,
        left: Box<SummaryStrategy>,
        right_vars: BTreeSet<VarId>,
        right: Box<SummaryStrategy>,
    },
}

impl SummaryStrategy {
    pub fn uses_gc(&self) -> bool {
        match self {
            SummaryStrategy::Gc { .. } => true,
            SummaryStrategy::SeqCompose { left, right, .. } | SummaryStrategy::VarCompose { left, right, .. } => {
                left.uses_gc() || right.uses_gc()
            }
            _ => false,
        }
    }

    /// Largest unroll bound the verdict depends on, if any part was checked on bounded runs.
    pub fn unroll(&self) -> Option<usize> {
        match self {
            SummaryStrategy::BoundedLookback { unroll, .. } | SummaryStrategy::FeedbackFree { unroll } => Some(*unroll),
            SummaryStrategy::SeqCompose { left, right, .. } | SummaryStrategy::VarCompose { left, right, .. } => {
                match (left.unroll(), right.unroll()) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                }
            }
            _ => None,
        }
    }

    /// Strategy name without parameters: `Mc`, `Gc`, ...
    pub fn kind(&self) -> &'static str {
        match self {
            SummaryStrategy::Mc => "Mc",
            SummaryStrategy::Gc { .. } => "Gc",
            SummaryStrategy::BoundedLookback { .. } => "BoundedLookback",
            SummaryStrategy::FeedbackFree { .. } => "FeedbackFree",
            SummaryStrategy::SeqCompose { .. } => "SeqCompose",
            SummaryStrategy::VarCompose { .. } => "VarCompose",
        }
    }
}

fn fmt_vars(vs: &BTreeSet<VarId>) -> String {
    let names: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", names.join(","))
}

impl fmt::Display for SummaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummaryStrategy::Mc => write!(f, "MC"),
            SummaryStrategy::Gc { k } => write!(f, "GC(K={})", k),
            SummaryStrategy::BoundedLookback { k, .. } => write!(f, "BoundedLookback(K={})", k),
            SummaryStrategy::FeedbackFree { .. } => write!(f, "FeedbackFree"),
            SummaryStrategy::SeqCompose { left, right, cut } => write!(f, "SeqCompose({}, {}; cut {})", left, right, cut),
            SummaryStrategy::VarCompose { left_vars, left, right_vars, right } => write!(
                f,
                "VarCompose({}: {}, {}: {})",
                fmt_vars(left_vars),
                left,
                fmt_vars(right_vars),
                right
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DetectOptions {
    /// Transition repetition bound for lookback checks; `None` means `K + 1`.
    pub unroll: Option<usize>,
    /// Transition repetition bound for the feedback-freedom check.
    pub ff_unroll: usize,
    /// Search states explored per lookback or feedback check before giving up.
    pub budget: usize,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions { unroll: None, ff_unroll: 2, budget: 200_000 }
    }
}

// ---------------------------------------------------------------------------
// Syntactic criteria

/// Actions that label some transition.
fn used_actions(d: &Ddsa) -> BTreeSet<&ActionId> {
    d.transitions.iter().map(|t| &t.action).collect()
}

fn used_guard_atoms(d: &Ddsa) -> Vec<Atom> {
    used_actions(d)
        .into_iter()
        .flat_map(|a| d.guards.get(a).cloned().unwrap_or_default())
        .collect()
}

pub fn check_mc(d: &Ddsa, cs: &[Atom]) -> bool {
    d.vars.iter().all(|v| d.sorts.of(v) == Domain::Rat)
        && used_guard_atoms(d)
            .iter()
            .chain(cs)
            .all(|a| solve::classify_atom(a) == ConstraintClass::Mc)
}

/// Whether all constraints are gap-order over integers, with the cutoff `K`.
pub fn check_gc(d: &Ddsa, cs: &[Atom]) -> (bool, u64) {
    let atoms: Vec<Atom> = used_guard_atoms(d).into_iter().chain(cs.iter().cloned()).chain(d.initial_atoms()).collect();
    let consts = gc_constant_set(&atoms);
    let k = gc_k(&consts);
    let ok = d.vars.iter().all(|v| d.sorts.is_int(v)) && atoms.iter().all(|a| solve::gc_atom(a).is_some());
    (ok, k)
}

/// `{0}` plus the constants of all gap-order atoms.
pub fn gc_constant_set(atoms: &[Atom]) -> BTreeSet<Q> {
    let mut out: BTreeSet<Q> = atoms.iter().flat_map(solve::gc_constants).collect();
    out.insert(Q::zero());
    out
}

/// `max |c − c′| + 1`.
pub fn gc_k(consts: &BTreeSet<Q>) -> u64 {
    match (consts.iter().next(), consts.iter().next_back()) {
        (Some(lo), Some(hi)) => (hi - lo).ceil().to_integer().to_u64().unwrap_or(u64::MAX - 1) + 1,
        _ => 1,
    }
}

// ---------------------------------------------------------------------------
// Computation graphs

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    Equality,
    General,
}

/// Nodes are `v_i`, numbered `i · |V| + index(v)`.
#[derive(Clone, Debug)]
pub struct ComputationGraph {
    pub vars: Vec<VarId>,
    pub len: usize,
    pub edges: BTreeSet<(usize, usize, EdgeKind)>,
    class: Vec<usize>,
}

fn is_var_equality(a: &Atom) -> bool {
    if a.op != Op::Eq || !a.rhs.is_zero() || a.lhs.len() != 2 {
        return false;
    }
    let cs: Vec<&Q> = a.lhs.values().collect();
    (cs[0] + cs[1]).is_zero()
}

/// Nodes of a literal: `x^r ↦ x_{k−1}`, `x^w` and `x ↦ x_k`.
fn literal_nodes(a: &Atom, index: &BTreeMap<&str, usize>, nv: usize, k: usize) -> Vec<usize> {
    let mut out: Vec<usize> = a
        .vars()
        .filter_map(|v| {
            let j = *index.get(&*v.name)?;
            let i = match v.kind {
                VarKind::Read => k.checked_sub(1)?,
                _ => k,
            };
            Some(i * nv + j)
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

pub fn computation_graph(d: &Ddsa, run: &SymbolicRun, cs: &[Atom]) -> Result<ComputationGraph> {
    let nv = d.vars.len();
    let n = run.len();
    let index: BTreeMap<&str, usize> = d.vars.iter().enumerate().map(|(j, v)| (&*v.name, j)).collect();
    let mut edges = BTreeSet::new();
    let add = |a: &Atom, k: usize, edges: &mut BTreeSet<(usize, usize, EdgeKind)>| {
        let ns = literal_nodes(a, &index, nv, k);
        let kind = if is_var_equality(a) && ns.len() == 2 { EdgeKind::Equality } else { EdgeKind::General };
        for (i, &x) in ns.iter().enumerate() {
            for &y in &ns[i + 1..] {
                edges.insert((x, y, kind));
            }
        }
    };
    for (k0, a) in run.actions.iter().enumerate() {
        let k = k0 + 1;
        let ws = d.write_set(a)?;
        for (j, v) in d.vars.iter().enumerate() {
            if !ws.contains(v) {
                edges.insert(((k - 1) * nv + j, k * nv + j, EdgeKind::Equality));
            }
        }
        for g in d.guard_atoms(a)? {
            add(g, k, &mut edges);
        }
    }
    for k in 0..=n {
        for c in cs {
            add(c, k, &mut edges);
        }
    }
    let mut parent: Vec<usize> = (0..(n + 1) * nv).collect();
    for &(x, y, kind) in &edges {
        if kind == EdgeKind::Equality {
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            if rx != ry {
                parent[rx.max(ry)] = rx.min(ry);
            }
        }
    }
    let class = (0..parent.len()).map(|x| find(&mut parent, x)).collect();
    Ok(ComputationGraph { vars: d.vars.clone(), len: n, edges, class })
}

impl ComputationGraph {
    pub fn node(&self, v: &str, i: usize) -> Option<usize> {
        let j = self.vars.iter().position(|x| &*x.name == v)?;
        (i <= self.len).then_some(i * self.vars.len() + j)
    }

    /// `x3` for node `x_3`.
    pub fn label(&self, n: usize) -> String {
        let nv = self.vars.len();
        format!("{}{}", self.vars[n % nv], n / nv)
    }

    pub fn node_count(&self) -> usize {
        self.class.len()
    }

    pub fn edge(&self, x: usize, y: usize) -> Option<EdgeKind> {
        let (x, y) = (x.min(y), x.max(y));
        [EdgeKind::Equality, EdgeKind::General].into_iter().find(|&k| self.edges.contains(&(x, y, k)))
    }

    /// Representative (least node) of the equality class of `n`.
    pub fn class_of(&self, n: usize) -> usize {
        self.class[n]
    }

    pub fn span(&self, class: usize) -> BTreeSet<usize> {
        let nv = self.vars.len();
        (0..self.class.len()).filter(|&n| self.class[n] == class).map(|n| n / nv).collect()
    }

    /// Class representatives and the adjacency of the collapsed graph.
    pub fn collapsed(&self) -> BTreeMap<usize, BTreeSet<usize>> {
        let mut adj: BTreeMap<usize, BTreeSet<usize>> = self.class.iter().map(|&c| (c, BTreeSet::new())).collect();
        for &(x, y, kind) in &self.edges {
            let (cx, cy) = (self.class[x], self.class[y]);
            if kind == EdgeKind::General && cx != cy {
                adj.entry(cx).or_default().insert(cy);
                adj.entry(cy).or_default().insert(cx);
            }
        }
        adj
    }

    /// Longest acyclic path of the collapsed graph, saturating at `cap + 1`.
    pub fn longest_path(&self, cap: usize) -> usize {
        let adj = self.collapsed();
        let keys: Vec<usize> = adj.keys().copied().collect();
        let pos: BTreeMap<usize, usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let lists: Vec<Vec<usize>> = keys.iter().map(|k| adj[k].iter().map(|n| pos[n]).collect()).collect();
        longest_simple_path(&lists, cap)
    }

    /// Every path from `x_i` to `x_j` passes a class whose span covers both endpoints' spans.
    pub fn is_feedback_free(&self) -> bool {
        let adj = self.collapsed();
        let spans: BTreeMap<usize, BTreeSet<usize>> = adj.keys().map(|&c| (c, self.span(c))).collect();
        let nv = self.vars.len();
        for j in 0..nv {
            let classes: BTreeSet<usize> = (0..=self.len).map(|i| self.class[i * nv + j]).collect();
            let classes: Vec<usize> = classes.into_iter().collect();
            for (a, &ca) in classes.iter().enumerate() {
                for &cb in &classes[a + 1..] {
                    let u: BTreeSet<usize> = spans[&ca].union(&spans[&cb]).copied().collect();
                    let blocked = |c: usize| u.is_subset(&spans[&c]);
                    if blocked(ca) || blocked(cb) {
                        continue;
                    }
                    let mut seen = BTreeSet::from([ca]);
                    let mut queue = VecDeque::from([ca]);
                    while let Some(c) = queue.pop_front() {
                        for &n in &adj[&c] {
                            if n == cb {
                                return false;
                            }
                            if !blocked(n) && seen.insert(n) {
                                queue.push_back(n);
                            }
                        }
                    }
                }
            }
        }
        true
    }
}

/// Longest simple path (in edges), saturating at `cap + 1`.
fn longest_simple_path(adj: &[Vec<usize>], cap: usize) -> usize {
    fn dfs(adj: &[Vec<usize>], at: usize, on: &mut [bool], depth: usize, cap: usize, best: &mut usize) {
        if depth > *best {
            *best = depth;
        }
        if *best > cap {
            return;
        }
        for &n in &adj[at] {
            if !on[n] {
                on[n] = true;
                dfs(adj, n, on, depth + 1, cap, best);
                on[n] = false;
                if *best > cap {
                    return;
                }
            }
        }
    }
    let mut best = 0;
    let mut on = vec![false; adj.len()];
    for s in 0..adj.len() {
        if adj[s].is_empty() {
            continue;
        }
        on[s] = true;
        dfs(adj, s, &mut on, 0, cap, &mut best);
        on[s] = false;
        if best > cap {
            break;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Run enumeration

/// Visits every run (prefixes included) that uses each transition at most `unroll` times.
/// Returns `None` when the budget runs out, otherwise whether `f` accepted every run.
pub fn for_each_run(
    d: &Ddsa,
    unroll: usize,
    budget: usize,
    f: &mut dyn FnMut(&SymbolicRun) -> Result<bool>,
) -> Result<Option<bool>> {
    fn go(
        d: &Ddsa,
        run: &mut SymbolicRun,
        used: &mut [usize],
        unroll: usize,
        left: &mut usize,
        f: &mut dyn FnMut(&SymbolicRun) -> Result<bool>,
    ) -> Result<Option<bool>> {
        if *left == 0 {
            return Ok(None);
        }
        *left -= 1;
        if !f(run)? {
            return Ok(Some(false));
        }
        let here = run.last().clone();
        for (i, t) in d.transitions.iter().enumerate() {
            if t.from != here || used[i] >= unroll {
                continue;
            }
            used[i] += 1;
            run.push(&t.action, &t.to);
            let r = go(d, run, used, unroll, left, f)?;
            run.states.pop();
            run.actions.pop();
            used[i] -= 1;
            if r != Some(true) {
                return Ok(r);
            }
        }
        Ok(Some(true))
    }
    let mut run = SymbolicRun::empty(&d.initial);
    let mut used = vec![0; d.transitions.len()];
    let mut left = budget;
    go(d, &mut run, &mut used, unroll, &mut left, f)
}

/// Collapsed computation graph of a run prefix, maintained step by step.
/// Dead classes without edges are dropped, so runs that differ only in
/// such classes reach the same signature.
#[derive(Clone)]
struct Walk {
    parent: Vec<usize>,
    adj: Vec<BTreeSet<usize>>,
    live: Vec<usize>,
    gone: Vec<bool>,
}

impl Walk {
    fn new(nv: usize) -> Walk {
        Walk { parent: (0..nv).collect(), adj: vec![BTreeSet::new(); nv], live: (0..nv).collect(), gone: vec![false; nv] }
    }

    fn fresh(&mut self) -> usize {
        let id = self.parent.len();
        self.parent.push(id);
        self.adj.push(BTreeSet::new());
        self.gone.push(false);
        id
    }

    fn root(&mut self, x: usize) -> usize {
        find(&mut self.parent, x)
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.root(x), self.root(y));
        if rx == ry {
            return;
        }
        let (keep, drop) = (rx.min(ry), rx.max(ry));
        self.parent[drop] = keep;
        let nbs = std::mem::take(&mut self.adj[drop]);
        for n in nbs {
            self.adj[n].remove(&drop);
            if n != keep {
                self.adj[n].insert(keep);
                self.adj[keep].insert(n);
            }
        }
        self.adj[keep].remove(&drop);
    }

    fn connect(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.root(x), self.root(y));
        if rx != ry {
            self.adj[rx].insert(ry);
            self.adj[ry].insert(rx);
        }
    }

    /// Adds the literals; `old[j]`/`new[j]` are the classes of `v_{k−1}`/`v_k`.
    fn literals(&mut self, atoms: &[&Atom], index: &BTreeMap<&str, usize>, old: &[usize], new: &[usize]) {
        let nodes = |a: &Atom| -> Vec<usize> {
            let mut ns: Vec<usize> = a
                .vars()
                .filter_map(|v| {
                    let j = *index.get(&*v.name)?;
                    Some(if v.kind == VarKind::Read { old[j] } else { new[j] })
                })
                .collect();
            ns.sort_unstable();
            ns.dedup();
            ns
        };
        for a in atoms {
            let ns = nodes(a);
            if is_var_equality(a) && ns.len() == 2 {
                self.union(ns[0], ns[1]);
            }
        }
        for a in atoms {
            let ns = nodes(a);
            if is_var_equality(a) && ns.len() == 2 {
                continue;
            }
            for (i, &x) in ns.iter().enumerate() {
                for &y in &ns[i + 1..] {
                    self.connect(x, y);
                }
            }
        }
    }

    fn prune(&mut self) {
        let live: BTreeSet<usize> = (0..self.live.len()).map(|j| self.root(self.live[j])).collect();
        for c in 0..self.parent.len() {
            if self.parent[c] == c && !self.gone[c] && !live.contains(&c) && self.adj[c].is_empty() {
                self.gone[c] = true;
            }
        }
    }

    fn alive(&self) -> Vec<usize> {
        (0..self.parent.len()).filter(|&c| self.parent[c] == c && !self.gone[c]).collect()
    }

    fn signature(&mut self) -> (Vec<usize>, Vec<(usize, usize)>) {
        let alive = self.alive();
        let pos: BTreeMap<usize, usize> = alive.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let live: Vec<usize> = (0..self.live.len()).map(|j| pos[&self.root(self.live[j])]).collect();
        let mut edges = Vec::new();
        for &c in &alive {
            for n in &self.adj[c] {
                if c < *n {
                    edges.push((pos[&c], pos[n]));
                }
            }
        }
        (live, edges)
    }

    fn longest(&self, cap: usize) -> usize {
        let alive = self.alive();
        let pos: BTreeMap<usize, usize> = alive.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let lists: Vec<Vec<usize>> = alive.iter().map(|c| self.adj[*c].iter().map(|n| pos[n]).collect()).collect();
        longest_simple_path(&lists, cap)
    }
}

type WalkKey = (StateId, Vec<usize>, Vec<usize>, Vec<(usize, usize)>);

/// Largest longest-path length over the enumerated runs, or `None` if it exceeds `k`
/// or the budget runs out.
pub fn lookback_bound(d: &Ddsa, cs: &[Atom], k: usize, unroll: usize, budget: usize) -> Result<Option<usize>> {
    let nv = d.vars.len();
    let index: BTreeMap<&str, usize> = d.vars.iter().enumerate().map(|(j, v)| (&*v.name, j)).collect();
    let cs: Vec<&Atom> = cs.iter().collect();
    let mut w = Walk::new(nv);
    let live0 = w.live.clone();
    w.literals(&cs, &index, &live0, &live0);
    w.prune();
    let mut seen: HashSet<WalkKey> = HashSet::new();
    let mut stack = vec![(d.initial.clone(), vec![0usize; d.transitions.len()], w)];
    let mut best = 0;
    while let Some((b, used, mut w)) = stack.pop() {
        let (live, edges) = w.signature();
        if !seen.insert((b.clone(), used.clone(), live, edges)) {
            continue;
        }
        if seen.len() > budget {
            return Ok(None);
        }
        best = best.max(w.longest(k));
        if best > k {
            return Ok(None);
        }
        for (i, t) in d.transitions.iter().enumerate().rev() {
            if t.from != b || used[i] >= unroll {
                continue;
            }
            let ws = d.write_set(&t.action)?;
            let mut w2 = w.clone();
            let old: Vec<usize> = w2.live.clone();
            let new: Vec<usize> =
                d.vars.iter().enumerate().map(|(j, v)| if ws.contains(v) { w2.fresh() } else { old[j] }).collect();
            let guard: Vec<&Atom> = d.guard_atoms(&t.action)?.iter().collect();
            w2.literals(&guard, &index, &old, &new);
            w2.live = new.clone();
            w2.literals(&cs, &index, &new, &new);
            w2.prune();
            let mut used2 = used.clone();
            used2[i] += 1;
            stack.push((t.to.clone(), used2, w2));
        }
    }
    Ok(Some(best))
}

pub fn check_bounded_lookback(d: &Ddsa, cs: &[Atom], k: usize, unroll: usize) -> Result<bool> {
    Ok(lookback_bound(d, cs, k, unroll, DetectOptions::default().budget)?.is_some())
}

pub fn check_feedback_free(d: &Ddsa, cs: &[Atom], unroll: usize) -> Result<bool> {
    check_feedback_free_within(d, cs, unroll, DetectOptions::default().budget)
}

fn check_feedback_free_within(d: &Ddsa, cs: &[Atom], unroll: usize, budget: usize) -> Result<bool> {
    let r = for_each_run(d, unroll, budget, &mut |run| Ok(computation_graph(d, run, cs)?.is_feedback_free()))?;
    Ok(r == Some(true))
}

// ---------------------------------------------------------------------------
// Decompositions

fn reachable(d: &Ddsa, from: &str) -> BTreeSet<StateId> {
    let mut seen = BTreeSet::from([from.to_string()]);
    let mut queue = VecDeque::from([from.to_string()]);
    while let Some(b) = queue.pop_front() {
        for t in d.outgoing(&b) {
            if seen.insert(t.to.clone()) {
                queue.push_back(t.to.clone());
            }
        }
    }
    seen
}

/// All cut states, fewest left-hand states first.
pub fn seq_cuts(d: &Ddsa) -> Vec<(Ddsa, Ddsa, StateId)> {
    let from_init = reachable(d, &d.initial);
    let mut out = Vec::new();
    for b in &d.states {
        if *b == d.initial || !from_init.contains(b) {
            continue;
        }
        let right = reachable(d, b);
        if right.contains(&d.initial) || d.transitions.iter().any(|t| t.to == *b && right.contains(&t.from)) {
            continue;
        }
        let left: BTreeSet<StateId> = d.states.iter().filter(|s| !right.contains(*s) || *s == b).cloned().collect();
        if d.transitions.iter().any(|t| t.from != *b && left.contains(&t.from) && t.to != *b && right.contains(&t.to)) {
            continue;
        }
        let part = |states: &BTreeSet<StateId>| {
            let mut p = d.clone();
            p.states.retain(|s| states.contains(s));
            p.transitions.retain(|t| states.contains(&t.from) && states.contains(&t.to));
            p
        };
        let mut d1 = part(&left);
        d1.finals = BTreeSet::from([b.clone()]);
        let mut d2 = part(&right);
        d2.initial = b.clone();
        d2.finals.retain(|s| right.contains(s));
        d2.init.clear();
        out.push((d1, d2, b.clone()));
    }
    out.sort_by_key(|(d1, _, _)| d1.states.len());
    out
}

pub fn seq_decompose(d: &Ddsa) -> Option<(Ddsa, Ddsa, StateId)> {
    seq_cuts(d).into_iter().next()
}

/// Connected components of variable co-occurrence in guard atoms and `cs`.
pub fn var_components(d: &Ddsa, cs: &[Atom]) -> Vec<BTreeSet<VarId>> {
    let nv = d.vars.len();
    let index: BTreeMap<&str, usize> = d.vars.iter().enumerate().map(|(j, v)| (&*v.name, j)).collect();
    let mut parent: Vec<usize> = (0..nv).collect();
    for a in used_guard_atoms(d).iter().chain(cs) {
        let js: Vec<usize> = a.vars().filter_map(|v| index.get(&*v.name).copied()).collect();
        for w in js.windows(2) {
            let (x, y) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[x.max(y)] = x.min(y);
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<VarId>> = BTreeMap::new();
    for (j, v) in d.vars.iter().enumerate() {
        groups.entry(find(&mut parent, j)).or_default().insert(v.clone());
    }
    groups.into_values().collect()
}

/// Candidate 2-partitions: integer components against the rest, then each component against the rest.
pub fn var_splits(d: &Ddsa, cs: &[Atom]) -> Vec<(BTreeSet<VarId>, BTreeSet<VarId>)> {
    let comps = var_components(d, cs);
    if comps.len() < 2 {
        return vec![];
    }
    let all = d.var_names();
    let rest = |xs: &BTreeSet<VarId>| all.difference(xs).cloned().collect::<BTreeSet<VarId>>();
    let mut out = Vec::new();
    let ints: BTreeSet<VarId> =
        comps.iter().filter(|c| c.iter().all(|v| d.sorts.is_int(v))).flatten().cloned().collect();
    if !ints.is_empty() && ints.len() < all.len() {
        out.push((ints.clone(), rest(&ints)));
    }
    for c in &comps {
        let pair = (c.clone(), rest(c));
        if !out.contains(&pair) {
            out.push(pair);
        }
    }
    out
}

pub fn var_decompose(d: &Ddsa, cs: &[Atom]) -> Option<(BTreeSet<VarId>, BTreeSet<VarId>)> {
    var_splits(d, cs).into_iter().next()
}

fn restrict_atoms(cs: &[Atom], vs: &BTreeSet<VarId>) -> Vec<Atom> {
    cs.iter().filter(|a| a.vars().all(|v| vs.contains(&v.with_kind(VarKind::Plain)))).cloned().collect()
}

// ---------------------------------------------------------------------------
// Detection

pub fn detect(d: &Ddsa, cs: &[Atom]) -> Result<SummaryStrategy> {
    detect_with(d, cs, &DetectOptions::default())
}

pub fn detect_with(d: &Ddsa, cs: &[Atom], opts: &DetectOptions) -> Result<SummaryStrategy> {
    if check_mc(d, cs) {
        return Ok(SummaryStrategy::Mc);
    }
    let (gc, k) = check_gc(d, cs);
    if gc {
        return Ok(SummaryStrategy::Gc { k });
    }
    let kmax = (2 * d.vars.len()).max(1);
    let unroll = opts.unroll.unwrap_or(kmax + 1);
    if let Some(k) = lookback_bound(d, cs, kmax, unroll, opts.budget)? {
        return Ok(SummaryStrategy::BoundedLookback { k: k.max(1), unroll });
    }
    if check_feedback_free_within(d, cs, opts.ff_unroll, opts.budget)? {
        return Ok(SummaryStrategy::FeedbackFree { unroll: opts.ff_unroll });
    }
    for (v1, v2) in var_splits(d, cs) {
        let s1 = detect_with(&d.restrict(&v1), &restrict_atoms(cs, &v1), opts);
        let s2 = detect_with(&d.restrict(&v2), &restrict_atoms(cs, &v2), opts);
        if let (Ok(s1), Ok(s2)) = (s1, s2) {
            return Ok(SummaryStrategy::VarCompose {
                left_vars: v1,
                left: Box::new(s1),
                right_vars: v2,
                right: Box::new(s2),
            });
        }
    }
    for (d1, d2, cut) in seq_cuts(d) {
        let s1 = detect_with(&d1, cs, opts);
        let s2 = detect_with(&d2, cs, opts);
        if let (Ok(s1), Ok(s2)) = (s1, s2) {
            if !s1.uses_gc() && !s2.uses_gc() {
                return Ok(SummaryStrategy::SeqCompose { left: Box::new(s1), right: Box::new(s2), cut });
            }
        }
    }
    Err(Error::NoSummaryFound)
}

// ---------------------------------------------------------------------------
// Engine

#[derive(Clone, Debug)]
enum Relation {
    Exact,
    Gc(u64),
    Split(Vec<(BTreeSet<VarId>, Engine)>),
}

/// Update and equivalence induced by a strategy.
#[derive(Clone, Debug)]
pub struct Engine {
    pub ddsa: Ddsa,
    pub strategy: SummaryStrategy,
    rel: Relation,
}

impl Engine {
    pub fn new(d: &Ddsa, s: &SummaryStrategy) -> Engine {
        let rel = match s {
            SummaryStrategy::Gc { k } => Relation::Gc(*k),
            SummaryStrategy::VarCompose { left_vars, left, right_vars, right } => Relation::Split(vec![
                (left_vars.clone(), Engine::new(&d.restrict(left_vars), left)),
                (right_vars.clone(), Engine::new(&d.restrict(right_vars), right)),
            ]),
            _ => Relation::Exact,
        };
        Engine { ddsa: d.clone(), strategy: s.clone(), rel }
    }

    /// Plain semantic equivalence, regardless of any strategy.
    pub fn exact(d: &Ddsa) -> Engine {
        Engine::new(d, &SummaryStrategy::Mc)
    }

    pub fn update(&self, phi: &Formula, a: &str) -> Result<Formula> {
        match &self.rel {
            Relation::Split(parts) => {
                let mut out = Vec::new();
                for (vs, e) in parts {
                    out.push(e.update(&phi.restrict(vs)?, a)?);
                }
                Ok(Formula::and(out))
            }
            _ => self.ddsa.update(phi, a),
        }
    }

    pub fn equiv(&self, phi: &Formula, psi: &Formula) -> Result<bool> {
        if phi == psi {
            return Ok(true);
        }
        match &self.rel {
            Relation::Exact => solve::equivalent(phi, psi, &self.ddsa.sorts),
            Relation::Gc(k) => solve::gc_equivalent(phi, psi, *k),
            Relation::Split(parts) => {
                for (vs, e) in parts {
                    if !e.equiv(&phi.restrict(vs)?, &psi.restrict(vs)?)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    pub fn is_sat(&self, phi: &Formula) -> Result<bool> {
        solve::sat(phi, &self.ddsa.sorts)
    }
}

// ---------------------------------------------------------------------------
// Constraint graph

#[derive(Clone, Debug)]
pub struct ConstraintGraph {
    pub nodes: Vec<(StateId, Formula)>,
    pub edges: Vec<(usize, ActionId, usize)>,
    pub initial: usize,
}

impl ConstraintGraph {
    /// Node reached from the initial node along `actions`.
    pub fn follow(&self, actions: &[ActionId]) -> Option<usize> {
        let mut at = self.initial;
        for a in actions {
            at = self.edges.iter().find(|(f, b, _)| *f == at && b == a)?.2;
        }
        Some(at)
    }
}

pub const DEFAULT_MAX_NODES: usize = 10_000;

pub fn constraint_graph(engine: &Engine, max_nodes: usize) -> Result<ConstraintGraph> {
    let d = &engine.ddsa;
    let mut nodes = vec![(d.initial.clone(), d.initial_constraint())];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let (b, phi) = nodes[i].clone();
        for t in d.outgoing(&b) {
            let next = engine.update(&phi, &t.action)?;
            if !engine.is_sat(&next)? {
                continue;
            }
            let mut hit = None;
            for (j, (b2, psi)) in nodes.iter().enumerate() {
                if *b2 == t.to && engine.equiv(psi, &next)? {
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
                    nodes.push((t.to.clone(), next));
                    queue.push_back(nodes.len() - 1);
                    nodes.len() - 1
                }
            };
            edges.push((i, t.action.clone(), j));
        }
    }
    Ok(ConstraintGraph { nodes, edges, initial: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::syntax::parse_atom;
    use num::Signed;

    fn atoms(xs: &[&str]) -> Vec<Atom> {
        xs.iter().map(|s| parse_atom(s).unwrap()).collect()
    }

    #[test]
    fn mc_and_gc() {
        assert!(check_mc(&examples::b1(), &[]));
        assert!(!check_mc(&examples::b1_int(), &[]));
        assert!(!check_mc(&examples::b4(), &[]));
        assert_eq!(check_gc(&examples::b3(), &[]), (true, 4));
        let (ok, _) = check_gc(&examples::b1_int(), &[]);
        assert!(ok);
        assert!(!check_gc(&examples::b1(), &[]).0);
    }

    #[test]
    fn gc_k_brute_force() {
        let cs: BTreeSet<Q> = [0, 2, 3].iter().map(|&x| Q::from_integer(x.into())).collect();
        let brute = cs.iter().flat_map(|a| cs.iter().map(move |b| (a - b).abs())).max().unwrap();
        assert_eq!(Q::from_integer((gc_k(&cs) - 1).into()), brute);
    }

    #[test]
    fn computation_graph_b2() {
        let d = examples::b2();
        let mut run = SymbolicRun::empty("1");
        run.push("a1", "2");
        run.push("a2", "2");
        run.push("a2", "2");
        run.push("a3", "3");
        let cs = atoms(&["x > 5", "s > 0"]);
        let g = computation_graph(&d, &run, &cs).unwrap();
        let n = |v: &str, i| g.node(v, i).unwrap();
        assert_eq!(g.edge(n("y", 0), n("y", 1)), Some(EdgeKind::Equality));
        assert_eq!(g.edge(n("x", 1), n("x", 4)), None);
        assert_eq!(g.class_of(n("x", 1)), g.class_of(n("x", 4)));
        assert_eq!(g.edge(n("y", 2), n("x", 1)), Some(EdgeKind::General));
        assert_eq!(g.edge(n("y", 3), n("x", 3)), Some(EdgeKind::General));
        assert_eq!(g.edge(n("y", 3), n("y", 4)), Some(EdgeKind::Equality));
        assert!(g.is_feedback_free());
        assert_eq!(g.longest_path(10), 2);
    }

    #[test]
    fn computation_graph_b4() {
        let d = examples::b4();
        let mut run = SymbolicRun::empty("1");
        for (a, b) in [("a1", "1"), ("a2", "2"), ("a3", "2"), ("a4", "3"), ("a5", "1")] {
            run.push(a, b);
        }
        let g = computation_graph(&d, &run, &[]).unwrap();
        let (s3, s4) = (g.node("s", 3).unwrap(), g.node("s", 4).unwrap());
        assert_eq!(g.edge(s3, s4), Some(EdgeKind::General));
        assert!(!g.is_feedback_free());
        let empty = computation_graph(&d, &SymbolicRun::empty("1"), &[]).unwrap();
        assert_eq!(empty.node_count(), 3);
        assert!(empty.edges.is_empty());
    }

    #[test]
    fn lookback_and_feedback() {
        let b2 = examples::b2();
        assert!(check_bounded_lookback(&b2, &[], 2, 3).unwrap());
        assert!(check_feedback_free(&b2, &[], 2).unwrap());
        let b4 = examples::b4();
        assert!(check_bounded_lookback(&b4, &[], 3, 4).unwrap());
        assert!(!check_feedback_free(&b4, &[], 2).unwrap());
        let b1 = examples::b1();
        assert!(!check_bounded_lookback(&b1, &[], 4, 5).unwrap());
        assert!(!check_feedback_free(&b1, &[], 2).unwrap());
        let b3 = examples::b3();
        assert!(!check_bounded_lookback(&b3, &[], 4, 5).unwrap());
    }

    #[test]
    fn detect_examples() {
        assert_eq!(detect(&examples::b1(), &[]).unwrap(), SummaryStrategy::Mc);
        assert_eq!(detect(&examples::b3(), &[]).unwrap(), SummaryStrategy::Gc { k: 4 });
        assert_eq!(detect(&examples::b2(), &[]).unwrap().kind(), "BoundedLookback");
        assert_eq!(detect(&examples::b4(), &[]).unwrap().kind(), "BoundedLookback");
        let a = examples::auction();
        let cs = atoms(&["b = 1", "o > t", "b != 1"]);
        let s = detect(&a, &cs).unwrap();
        assert_eq!(
            s.to_string(),
            "VarCompose({b,d}: GC(K=2), {o,s,t}: SeqCompose(MC, BoundedLookback(K=2); cut end))"
        );
    }

    #[test]
    fn decompositions() {
        let a = examples::auction();
        let (v1, v2) = var_decompose(&a, &atoms(&["o > t"])).unwrap();
        assert_eq!(fmt_vars(&v1), "{b,d}");
        assert_eq!(fmt_vars(&v2), "{o,s,t}");
        assert!(var_decompose(&examples::b1(), &[]).is_none());
        let ost = a.restrict(&v2);
        let (d1, d2, cut) = seq_decompose(&ost).unwrap();
        assert_eq!(cut, "end");
        assert_eq!(d1.states, vec!["start", "main", "change", "end"]);
        assert_eq!(d2.states, vec!["end", "sold"]);
        assert!(seq_decompose(&examples::b1()).is_none());
    }

    #[test]
    fn constraint_graph_b1() {
        let d = examples::b1();
        let g = constraint_graph(&Engine::new(&d, &SummaryStrategy::Mc), 100).unwrap();
        assert_eq!(g.nodes.len(), 4);
        let states: Vec<&str> = g.nodes.iter().map(|n| n.0.as_str()).collect();
        assert_eq!(states, vec!["1", "2", "1", "2"]);
        assert!(g.edges.contains(&(3, "a2".to_string(), 2)));
    }

    #[test]
    fn constraint_graph_b3_finite() {
        let d = examples::b3();
        let g = constraint_graph(&Engine::new(&d, &SummaryStrategy::Gc { k: 4 }), 1000).unwrap();
        assert!(g.nodes.len() < 50, "{}", g.nodes.len());
        let err = constraint_graph(&Engine::new(&d, &SummaryStrategy::Mc), 30).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded(30));
    }
}
