//! Linear terms, constraints and formulas over exact rationals.
//!
//! Atoms are kept in a normal form `Σ cᵢ·xᵢ op k` with `op ∈ {=, ≠, ≤, <}`
//! and coprime integer coefficients. The relation the atom was written with
//! is remembered only for printing.

use crate::error::{Error, Result};
use num::{BigInt, BigRational, Integer, One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Plain,
    Read,
    Write,
    Indexed(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId {
    pub name: Arc<str>,
    pub kind: VarKind,
}

impl VarId {
    pub fn new(name: &str, kind: VarKind) -> Self {
        VarId { name: Arc::from(name), kind }
    }
    pub fn plain(name: &str) -> Self {
        Self::new(name, VarKind::Plain)
    }
    pub fn read(name: &str) -> Self {
        Self::new(name, VarKind::Read)
    }
    pub fn write(name: &str) -> Self {
        Self::new(name, VarKind::Write)
    }
    pub fn indexed(name: &str, n: u32) -> Self {
        Self::new(name, VarKind::Indexed(n))
    }
    pub fn with_kind(&self, kind: VarKind) -> Self {
        VarId { name: self.name.clone(), kind }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            VarKind::Plain => write!(f, "{}", self.name),
            VarKind::Read => write!(f, "{}^r", self.name),
            VarKind::Write => write!(f, "{}^w", self.name),
            VarKind::Indexed(n) => write!(f, "{}#{}", self.name, n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    Int,
    Rat,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Int => "int",
            Domain::Rat => "rat",
        })
    }
}

/// Domain per variable name. Copies `x^r`, `x^w`, `x#3` share the sort of `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sorts {
    pub default: Domain,
    pub by_name: BTreeMap<Arc<str>, Domain>,
}

impl Sorts {
    pub fn uniform(default: Domain) -> Self {
        Sorts { default, by_name: BTreeMap::new() }
    }
    pub fn of(&self, v: &VarId) -> Domain {
        self.by_name.get(&v.name).copied().unwrap_or(self.default)
    }
    pub fn with(mut self, name: &str, dom: Domain) -> Self {
        self.by_name.insert(Arc::from(name), dom);
        self
    }
    pub fn is_int(&self, v: &VarId) -> bool {
        self.of(v) == Domain::Int
    }
}

impl From<Domain> for Sorts {
    fn from(d: Domain) -> Self {
        Sorts::uniform(d)
    }
}

impl From<&Sorts> for Sorts {
    fn from(s: &Sorts) -> Self {
        s.clone()
    }
}

pub type Assignment = BTreeMap<VarId, Q>;

/// Linear expression `Σ cᵢ·xᵢ + k`; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Term {
    pub coeffs: BTreeMap<VarId, Q>,
    pub constant: Q,
}

impl Term {
    pub fn var(v: VarId) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, Q::one());
        Term { coeffs, constant: Q::zero() }
    }
    pub fn constant(k: Q) -> Self {
        Term { coeffs: BTreeMap::new(), constant: k }
    }
    pub fn add_var(&mut self, v: VarId, c: &Q) {
        let e = self.coeffs.entry(v).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.retain(|_, c| !c.is_zero());
        }
    }
    pub fn add_scaled(&mut self, other: &Term, s: &Q) {
        for (v, c) in &other.coeffs {
            self.add_var(v.clone(), &(c * s));
        }
        self.constant += &other.constant * s;
    }
    pub fn plus(mut self, other: &Term) -> Self {
        self.add_scaled(other, &Q::one());
        self
    }
    pub fn minus(mut self, other: &Term) -> Self {
        self.add_scaled(other, &-Q::one());
        self
    }
    pub fn scaled(&self, s: &Q) -> Self {
        let mut t = Term::default();
        t.add_scaled(self, s);
        t
    }
    pub fn eval(&self, a: &Assignment) -> Result<Q> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            let x = a.get(v).ok_or_else(|| Error::MissingVariable(v.clone()))?;
            acc += c * x;
        }
        Ok(acc)
    }
    pub fn substitute(&self, map: &BTreeMap<VarId, Term>) -> Term {
        let mut t = Term::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            match map.get(v) {
                Some(r) => t.add_scaled(r, c),
                None => t.add_var(v.clone(), c),
            }
        }
        t
    }
}

/// Relation as written by the user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
        }
    }
    fn mirrored(self) -> Rel {
        match self {
            Rel::Lt => Rel::Gt,
            Rel::Le => Rel::Ge,
            Rel::Gt => Rel::Lt,
            Rel::Ge => Rel::Le,
            r => r,
        }
    }
}

/// Normalized relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Eq,
    Ne,
    Le,
    Lt,
}

/// Constraint `lhs op rhs` in normal form.
#[derive(Clone, Debug)]
pub struct Atom {
    pub lhs: BTreeMap<VarId, Q>,
    pub op: Op,
    pub rhs: Q,
    pub shown: Rel,
}

impl PartialEq for Atom {
    fn eq(&self, o: &Self) -> bool {
        self.op == o.op && self.rhs == o.rhs && self.lhs == o.lhs
    }
}
impl Eq for Atom {}
impl std::hash::Hash for Atom {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.lhs.hash(h);
        self.op.hash(h);
        self.rhs.hash(h);
    }
}
impl PartialOrd for Atom {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Atom {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (&self.lhs, self.op, &self.rhs).cmp(&(&o.lhs, o.op, &o.rhs))
    }
}

fn lcm_denoms(coeffs: &BTreeMap<VarId, Q>) -> BigInt {
    coeffs.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
}

impl Atom {
    pub fn new(lhs: Term, rel: Rel, rhs: Term) -> Atom {
        let e = lhs.minus(&rhs);
        let k = -e.constant.clone();
        let (coeffs, op, k) = match rel {
            Rel::Eq => (e.coeffs, Op::Eq, k),
            Rel::Ne => (e.coeffs, Op::Ne, k),
            Rel::Le => (e.coeffs, Op::Le, k),
            Rel::Lt => (e.coeffs, Op::Lt, k),
            Rel::Ge => (neg_map(&e.coeffs), Op::Le, -k),
            Rel::Gt => (neg_map(&e.coeffs), Op::Lt, -k),
        };
        Atom::build(coeffs, op, k, rel)
    }

    /// Builds `lhs op rhs` from raw parts and normalizes it.
    pub fn from_parts(lhs: BTreeMap<VarId, Q>, op: Op, rhs: Q) -> Atom {
        let shown = match op {
            Op::Eq => Rel::Eq,
            Op::Ne => Rel::Ne,
            Op::Le => Rel::Le,
            Op::Lt => Rel::Lt,
        };
        Atom::build(lhs, op, rhs, shown)
    }

    fn build(mut lhs: BTreeMap<VarId, Q>, op: Op, mut rhs: Q, mut shown: Rel) -> Atom {
        lhs.retain(|_, c| !c.is_zero());
        if !lhs.is_empty() {
            let l = lcm_denoms(&lhs);
            let g = lhs
                .values()
                .fold(BigInt::zero(), |acc, c| acc.gcd(&(c.numer() * (&l / c.denom()))));
            let s = Q::new(l, g);
            for c in lhs.values_mut() {
                *c = &*c * &s;
            }
            rhs *= &s;
            if matches!(op, Op::Eq | Op::Ne) && lhs.values().next().unwrap().is_negative() {
                for c in lhs.values_mut() {
                    *c = -&*c;
                }
                rhs = -rhs;
                shown = shown.mirrored();
            }
        }
        Atom { lhs, op, rhs, shown }
    }

    pub fn vars(&self) -> impl Iterator<Item = &VarId> {
        self.lhs.keys()
    }

    pub fn coeff(&self, v: &VarId) -> Option<&Q> {
        self.lhs.get(v)
    }

    pub fn lhs_term(&self) -> Term {
        Term { coeffs: self.lhs.clone(), constant: Q::zero() }
    }

    /// Truth value when the atom has no variables.
    pub fn constant_value(&self) -> Option<bool> {
        if !self.lhs.is_empty() {
            return None;
        }
        let z = Q::zero();
        Some(match self.op {
            Op::Eq => z == self.rhs,
            Op::Ne => z != self.rhs,
            Op::Le => z <= self.rhs,
            Op::Lt => z < self.rhs,
        })
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool> {
        let v = self.lhs_term().eval(a)?;
        Ok(match self.op {
            Op::Eq => v == self.rhs,
            Op::Ne => v != self.rhs,
            Op::Le => v <= self.rhs,
            Op::Lt => v < self.rhs,
        })
    }

    pub fn substitute(&self, map: &BTreeMap<VarId, Term>) -> Atom {
        let t = self.lhs_term().substitute(map);
        let rhs = &self.rhs - &t.constant;
        let mut a = Atom::build(t.coeffs, self.op, rhs, self.shown);
        if matches!(self.op, Op::Eq | Op::Ne) {
            a.shown = self.op_rel();
        }
        a
    }

    fn op_rel(&self) -> Rel {
        match self.op {
            Op::Eq => Rel::Eq,
            Op::Ne => Rel::Ne,
            Op::Le => Rel::Le,
            Op::Lt => Rel::Lt,
        }
    }

    pub fn rename(&self, f: &dyn Fn(&VarId) -> VarId) -> Atom {
        let lhs = self.lhs.iter().map(|(v, c)| (f(v), c.clone())).collect();
        Atom::build(lhs, self.op, self.rhs.clone(), self.shown)
    }

    /// Disjunction of atoms equivalent to the negation.
    pub fn negated(&self) -> Vec<Atom> {
        let neg = neg_map(&self.lhs);
        let nk = -self.rhs.clone();
        match self.op {
            Op::Eq => vec![
                Atom::build(self.lhs.clone(), Op::Lt, self.rhs.clone(), Rel::Lt),
                Atom::build(neg, Op::Lt, nk, Rel::Gt),
            ],
            Op::Ne => vec![Atom::build(self.lhs.clone(), Op::Eq, self.rhs.clone(), Rel::Eq)],
            Op::Le => vec![Atom::build(neg, Op::Lt, nk, flip_shown(self.shown, true))],
            Op::Lt => vec![Atom::build(neg, Op::Le, nk, flip_shown(self.shown, false))],
        }
    }

    /// `≠` as a pair of strict inequalities; other atoms unchanged.
    pub fn expand_ne(&self) -> Vec<Atom> {
        if self.op != Op::Ne {
            return vec![self.clone()];
        }
        vec![
            Atom::build(self.lhs.clone(), Op::Lt, self.rhs.clone(), Rel::Lt),
            Atom::build(neg_map(&self.lhs), Op::Lt, -self.rhs.clone(), Rel::Gt),
        ]
    }

    pub fn is_integral(&self) -> bool {
        self.lhs.values().all(|c| c.is_integer())
    }
}

fn flip_shown(shown: Rel, strict: bool) -> Rel {
    let ge_like = matches!(shown, Rel::Ge | Rel::Gt);
    match (ge_like, strict) {
        (true, true) => Rel::Lt,
        (true, false) => Rel::Le,
        (false, true) => Rel::Gt,
        (false, false) => Rel::Ge,
    }
}

pub(crate) fn neg_map(m: &BTreeMap<VarId, Q>) -> BTreeMap<VarId, Q> {
    m.iter().map(|(v, c)| (v.clone(), -c.clone())).collect()
}

pub fn fmt_q(k: &Q) -> String {
    if k.is_integer() {
        k.numer().to_string()
    } else {
        format!("{}/{}", k.numer(), k.denom())
    }
}

fn fmt_sum(terms: &[(VarId, Q)]) -> String {
    let mut s = String::new();
    for (i, (v, c)) in terms.iter().enumerate() {
        if i > 0 {
            s.push_str(" + ");
        }
        if c.is_one() {
            s.push_str(&v.to_string());
        } else {
            s.push_str(&format!("{}*{}", fmt_q(c), v));
        }
    }
    s
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Present `>`/`≥` atoms the way they were written.
        let (lhs, rel, k) = match (self.op, self.shown) {
            (Op::Le, Rel::Ge) => (neg_map(&self.lhs), Rel::Ge, -self.rhs.clone()),
            (Op::Lt, Rel::Gt) => (neg_map(&self.lhs), Rel::Gt, -self.rhs.clone()),
            (Op::Eq, _) | (Op::Ne, _) => {
                let rel = if self.op == Op::Eq { Rel::Eq } else { Rel::Ne };
                // Equalities are symmetric; put written variables on the left
                // and prefer a non-negative constant.
                let first_write = self.lhs.iter().find(|(v, _)| v.kind == VarKind::Write);
                let flip = match first_write {
                    Some((_, c)) => c.is_negative(),
                    None => self.rhs.is_negative(),
                };
                if flip {
                    (neg_map(&self.lhs), rel, -self.rhs.clone())
                } else {
                    (self.lhs.clone(), rel, self.rhs.clone())
                }
            }
            (Op::Le, _) => (self.lhs.clone(), Rel::Le, self.rhs.clone()),
            (Op::Lt, _) => (self.lhs.clone(), Rel::Lt, self.rhs.clone()),
        };
        let pos: Vec<_> = lhs.iter().filter(|(_, c)| c.is_positive()).map(|(v, c)| (v.clone(), c.clone())).collect();
        let neg: Vec<_> = lhs.iter().filter(|(_, c)| c.is_negative()).map(|(v, c)| (v.clone(), -c.clone())).collect();
        match (pos.is_empty(), neg.is_empty()) {
            (true, true) => write!(f, "0 {} {}", rel.symbol(), fmt_q(&k)),
            (false, true) => write!(f, "{} {} {}", fmt_sum(&pos), rel.symbol(), fmt_q(&k)),
            (true, false) => write!(f, "{} {} {}", fmt_sum(&neg), rel.mirrored().symbol(), fmt_q(&-k)),
            (false, false) => {
                if k.is_zero() {
                    write!(f, "{} {} {}", fmt_sum(&pos), rel.symbol(), fmt_sum(&neg))
                } else {
                    let mut left = fmt_sum(&pos);
                    for (v, c) in &neg {
                        if c.is_one() {
                            left.push_str(&format!(" - {}", v));
                        } else {
                            left.push_str(&format!(" - {}*{}", fmt_q(c), v));
                        }
                    }
                    write!(f, "{} {} {}", left, rel.symbol(), fmt_q(&k))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Exists(Vec<VarId>, Box<Formula>),
}

impl Formula {
    pub fn atom(lhs: Term, rel: Rel, rhs: Term) -> Formula {
        Formula::Atom(Atom::new(lhs, rel, rhs))
    }

    /// Conjunction with flattening and unit/zero simplification.
    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(xs) => out.extend(xs),
                x => out.push(x),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(xs) => out.extend(xs),
                x => out.push(x),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn negate(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(g) => *g,
            g => Formula::Not(Box::new(g)),
        }
    }

    pub fn exists(vars: Vec<VarId>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    pub fn conj_atoms(atoms: impl IntoIterator<Item = Atom>) -> Formula {
        Formula::and(atoms.into_iter().map(Formula::Atom))
    }

    pub fn free_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out, &BTreeSet::new());
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<VarId>, bound: &BTreeSet<VarId>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => out.extend(a.vars().filter(|v| !bound.contains(*v)).cloned()),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.collect_free(out, bound)),
            Formula::Not(x) => x.collect_free(out, bound),
            Formula::Exists(vs, body) => {
                let mut b = bound.clone();
                b.extend(vs.iter().cloned());
                body.collect_free(out, &b);
            }
        }
    }

    /// All variables, free or bound.
    pub fn all_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| out.extend(a.vars().cloned()));
        self.visit_binders(&mut |v| {
            out.insert(v.clone());
        });
        out
    }

    pub fn visit_atoms(&self, f: &mut dyn FnMut(&Atom)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => f(a),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.visit_atoms(f)),
            Formula::Not(x) | Formula::Exists(_, x) => x.visit_atoms(f),
        }
    }

    fn visit_binders(&self, f: &mut dyn FnMut(&VarId)) {
        match self {
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.visit_binders(f)),
            Formula::Not(x) => x.visit_binders(f),
            Formula::Exists(vs, x) => {
                vs.iter().for_each(&mut *f);
                x.visit_binders(f);
            }
            _ => {}
        }
    }

    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |a| out.push(a.clone()));
        out
    }

    pub fn has_exists(&self) -> bool {
        match self {
            Formula::Exists(..) => true,
            Formula::And(xs) | Formula::Or(xs) => xs.iter().any(|x| x.has_exists()),
            Formula::Not(x) => x.has_exists(),
            _ => false,
        }
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool> {
        if self.has_exists() {
            return Err(Error::QuantifiedInput);
        }
        for v in self.free_vars() {
            if !a.contains_key(&v) {
                return Err(Error::MissingVariable(v));
            }
        }
        self.eval_qf(a)
    }

    fn eval_qf(&self, a: &Assignment) -> Result<bool> {
        Ok(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(x) => x.eval(a)?,
            Formula::And(xs) => {
                for x in xs {
                    if !x.eval_qf(a)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(xs) => {
                for x in xs {
                    if x.eval_qf(a)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Not(x) => !x.eval_qf(a)?,
            Formula::Exists(..) => return Err(Error::QuantifiedInput),
        })
    }

    /// Capture-avoiding substitution of free variables by terms.
    pub fn substitute(&self, map: &BTreeMap<VarId, Term>) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => Formula::Atom(a.substitute(map)),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.substitute(map)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.substitute(map)).collect()),
            Formula::Not(x) => Formula::Not(Box::new(x.substitute(map))),
            Formula::Exists(vs, body) => {
                let mut inner: BTreeMap<VarId, Term> =
                    map.iter().filter(|(k, _)| !vs.contains(k)).map(|(k, t)| (k.clone(), t.clone())).collect();
                let body_free = body.free_vars();
                let mut incoming = BTreeSet::new();
                for (k, t) in &inner {
                    if body_free.contains(k) {
                        incoming.extend(t.coeffs.keys().cloned());
                    }
                }
                let mut avoid = self.all_vars();
                avoid.extend(incoming.iter().cloned());
                for t in map.values() {
                    avoid.extend(t.coeffs.keys().cloned());
                }
                avoid.extend(map.keys().cloned());
                let mut new_vs = Vec::new();
                for v in vs {
                    if incoming.contains(v) {
                        let fresh = fresh_like(v, &avoid);
                        avoid.insert(fresh.clone());
                        inner.insert(v.clone(), Term::var(fresh.clone()));
                        new_vs.push(fresh);
                    } else {
                        new_vs.push(v.clone());
                    }
                }
                Formula::Exists(new_vs, Box::new(body.substitute(&inner)))
            }
        }
    }

    pub fn rename(&self, f: &dyn Fn(&VarId) -> VarId) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => Formula::Atom(a.rename(f)),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.rename(f)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.rename(f)).collect()),
            Formula::Not(x) => Formula::Not(Box::new(x.rename(f))),
            Formula::Exists(vs, x) => Formula::Exists(vs.iter().map(f).collect(), Box::new(x.rename(f))),
        }
    }

    /// Top-level conjuncts after flattening nested conjunctions.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::True => vec![],
            Formula::And(xs) => xs.iter().flat_map(|x| x.conjuncts()).collect(),
            f => vec![f],
        }
    }

    /// Conjunction of the top-level conjuncts whose variables lie in `xs`.
    pub fn restrict(&self, xs: &BTreeSet<VarId>) -> Result<Formula> {
        let mut keep = Vec::new();
        for c in self.conjuncts() {
            let fv = c.free_vars();
            if fv.iter().all(|v| xs.contains(v)) {
                keep.push(c.clone());
            } else if fv.iter().any(|v| xs.contains(v)) {
                return Err(Error::MixedAtom(c.to_string()));
            }
        }
        Ok(Formula::and(keep))
    }
}

/// `v#n` for the least `n` not in `avoid`.
pub fn fresh_like(v: &VarId, avoid: &BTreeSet<VarId>) -> VarId {
    let mut n = 0;
    loop {
        let c = VarId::indexed(&v.name, n);
        if !avoid.contains(&c) {
            return c;
        }
        n += 1;
    }
}

fn fmt_child(f: &Formula, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    match f {
        Formula::And(_) | Formula::Or(_) => write!(out, "({})", f),
        _ => write!(out, "{}", f),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => write!(f, "{}", a),
            Formula::And(xs) | Formula::Or(xs) => {
                let sep = if matches!(self, Formula::And(_)) { " && " } else { " || " };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    fmt_child(x, f)?;
                }
                Ok(())
            }
            Formula::Not(x) => {
                f.write_str("!")?;
                match **x {
                    Formula::Atom(_) | Formula::True | Formula::False => fmt_child(x, f),
                    _ => write!(f, "({})", x),
                }
            }
            Formula::Exists(vs, body) => {
                f.write_str("exists")?;
                for v in vs {
                    write!(f, " {}", v)?;
                }
                write!(f, ". ({})", body)
            }
        }
    }
}

/// Shorthand used throughout tests and examples: `var("x")`.
pub fn var(name: &str) -> Term {
    Term::var(VarId::plain(name))
}

pub fn rd(name: &str) -> Term {
    Term::var(VarId::read(name))
}

pub fn wr(name: &str) -> Term {
    Term::var(VarId::write(name))
}

pub fn cst(k: i64) -> Term {
    Term::constant(q(k))
}

pub fn assignment(pairs: &[(&str, Q)]) -> Assignment {
    pairs.iter().map(|(n, v)| (VarId::plain(n), v.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(l: Term, r: Rel, rhs: Term) -> Formula {
        Formula::atom(l, r, rhs)
    }

    #[test]
    fn eval_examples() {
        let phi = Formula::and([a(var("y"), Rel::Gt, cst(0)), a(var("x"), Rel::Gt, var("y"))]);
        assert!(phi.eval(&assignment(&[("x", q(9)), ("y", q(7))])).unwrap());
        let init = Formula::and([a(var("x"), Rel::Eq, cst(0)), a(var("y"), Rel::Eq, cst(0))]);
        assert!(init.eval(&assignment(&[("x", q(0)), ("y", q(0))])).unwrap());
        let gap = a(var("x").minus(&var("y")), Rel::Ge, cst(2));
        assert!(!gap.eval(&assignment(&[("x", q(1)), ("y", q(0))])).unwrap());
    }

    #[test]
    fn eval_errors() {
        let phi = a(var("x"), Rel::Gt, var("y"));
        assert_eq!(phi.eval(&assignment(&[("x", q(1))])), Err(Error::MissingVariable(VarId::plain("y"))));
        let ex = Formula::exists(vec![VarId::plain("x")], phi);
        assert_eq!(ex.eval(&assignment(&[("x", q(1)), ("y", q(0))])), Err(Error::QuantifiedInput));
    }

    #[test]
    fn free_vars_examples() {
        let ex = Formula::exists(vec![VarId::plain("x")], a(var("x"), Rel::Gt, var("y")));
        assert_eq!(ex.free_vars(), [VarId::plain("y")].into_iter().collect());
        let init = Formula::and([a(var("x"), Rel::Eq, cst(0)), a(var("y"), Rel::Eq, cst(0))]);
        assert_eq!(init.free_vars().len(), 2);
        assert!(Formula::True.free_vars().is_empty());
    }

    #[test]
    fn normalization_is_canonical() {
        let a1 = Atom::new(var("x").scaled(&q(2)), Rel::Le, cst(4));
        let a2 = Atom::new(var("x"), Rel::Le, cst(2));
        assert_eq!(a1, a2);
        let e1 = Atom::new(var("x"), Rel::Eq, var("y"));
        let e2 = Atom::new(var("y"), Rel::Eq, var("x"));
        assert_eq!(e1, e2);
        let g1 = Atom::new(var("x"), Rel::Gt, var("y"));
        let g2 = Atom::new(var("y"), Rel::Lt, var("x"));
        assert_eq!(g1, g2);
    }

    #[test]
    fn printing_keeps_orientation() {
        assert_eq!(Atom::new(wr("x"), Rel::Gt, rd("y")).to_string(), "x^w > y^r");
        assert_eq!(Atom::new(rd("d").minus(&wr("d")), Rel::Ge, cst(1)).to_string(), "d^r - d^w >= 1");
        assert_eq!(Atom::new(var("x"), Rel::Ge, cst(2)).to_string(), "x >= 2");
        assert_eq!(Atom::new(var("x"), Rel::Le, cst(-3)).to_string(), "x <= -3");
        assert_eq!(Atom::new(var("b"), Rel::Ne, cst(1)).to_string(), "b != 1");
        assert_eq!(Atom::new(var("x"), Rel::Ge, Term::constant(qr(1, 2))).to_string(), "x >= 1/2");
    }

    #[test]
    fn substitute_renames() {
        let g = a(wr("x"), Rel::Gt, rd("y"));
        let m: BTreeMap<_, _> = [
            (VarId::write("x"), var("x")),
            (VarId::read("y"), Term::var(VarId::indexed("y", 0))),
        ]
        .into_iter()
        .collect();
        assert_eq!(g.substitute(&m), a(var("x"), Rel::Gt, Term::var(VarId::indexed("y", 0))));

        let inert = a(wr("v"), Rel::Eq, rd("v"));
        let m: BTreeMap<_, _> =
            [(VarId::write("v"), var("v")), (VarId::read("v"), var("u"))].into_iter().collect();
        assert_eq!(inert.substitute(&m), a(var("v"), Rel::Eq, var("u")));
    }

    #[test]
    fn substitute_avoids_capture() {
        let ex = Formula::exists(vec![VarId::plain("u")], a(var("u"), Rel::Gt, var("x")));
        let m: BTreeMap<_, _> = [(VarId::plain("x"), var("u"))].into_iter().collect();
        let out = ex.substitute(&m);
        match &out {
            Formula::Exists(vs, body) => {
                assert_ne!(vs[0], VarId::plain("u"));
                assert_eq!(**body, a(Term::var(vs[0].clone()), Rel::Gt, var("u")));
            }
            _ => panic!("expected binder"),
        }
        assert_eq!(out.free_vars(), [VarId::plain("u")].into_iter().collect());
    }

    #[test]
    fn restrict_examples() {
        let phi = Formula::and([
            a(var("d"), Rel::Ge, cst(1)),
            a(var("t"), Rel::Gt, cst(0)),
            a(var("b"), Rel::Eq, cst(0)),
        ]);
        let bd: BTreeSet<_> = [VarId::plain("b"), VarId::plain("d")].into_iter().collect();
        assert_eq!(
            phi.restrict(&bd).unwrap(),
            Formula::and([a(var("d"), Rel::Ge, cst(1)), a(var("b"), Rel::Eq, cst(0))])
        );
        assert_eq!(phi.restrict(&phi.free_vars()).unwrap(), phi);
        let mixed = a(var("x").plus(&var("y")), Rel::Gt, cst(0));
        let x: BTreeSet<_> = [VarId::plain("x")].into_iter().collect();
        assert!(matches!(mixed.restrict(&x), Err(Error::MixedAtom(_))));
    }

    #[test]
    fn negation_is_complement() {
        let atoms = [
            Atom::new(var("x"), Rel::Eq, cst(1)),
            Atom::new(var("x"), Rel::Ne, cst(1)),
            Atom::new(var("x"), Rel::Le, cst(1)),
            Atom::new(var("x"), Rel::Lt, cst(1)),
            Atom::new(var("x"), Rel::Ge, cst(1)),
        ];
        for at in &atoms {
            for v in [q(0), qr(1, 1), q(2), qr(1, 2)] {
                let al = assignment(&[("x", v.clone())]);
                let pos = at.eval(&al).unwrap();
                let neg = at.negated().iter().any(|n| n.eval(&al).unwrap());
                assert_ne!(pos, neg, "{} at {}", at, v);
            }
        }
    }
}
