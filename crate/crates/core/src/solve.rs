//! Decision procedures: DNF, Fourier–Motzkin elimination, satisfiability with
//! models, equivalence, gap-order cutoff and constraint classification.
//!
//! Integer variables are handled exactly as long as every atom mentioning an
//! eliminated integer variable is a difference constraint (`±x ≤ k` or
//! `x − y ≤ k`). Outside that fragment satisfiability falls back to the
//! rational relaxation plus a small integer search.

use crate::error::{Error, Result};
use crate::formula::{neg_map, Assignment, Atom, Domain, Formula, Op, Q, Rel, Sorts, Term, VarId};
use num::{BigInt, One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

pub type Cube = Vec<Atom>;
pub type Dnf = Vec<Cube>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
    pub fn model(self) -> Option<Assignment> {
        match self {
            SatResult::Sat(m) => Some(m),
            SatResult::Unsat => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintClass {
    Mc,
    Gc,
    GeneralLinear,
}

// ---------------------------------------------------------------------------
// DNF

pub fn to_dnf(phi: &Formula) -> Result<Dnf> {
    let mut cubes = dnf(phi, false)?;
    for c in cubes.iter_mut() {
        c.sort();
        c.dedup();
    }
    cubes.sort();
    cubes.dedup();
    Ok(cubes)
}

fn product(a: Dnf, b: Dnf) -> Dnf {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in &a {
        for y in &b {
            let mut c = x.clone();
            c.extend(y.iter().cloned());
            c.sort();
            c.dedup();
            out.push(c);
        }
    }
    out
}

fn dnf(f: &Formula, neg: bool) -> Result<Dnf> {
    Ok(match f {
        Formula::True => if neg { vec![] } else { vec![vec![]] },
        Formula::False => if neg { vec![vec![]] } else { vec![] },
        Formula::Atom(a) => {
            let alts = if neg { a.negated() } else { vec![a.clone()] };
            alts.iter().flat_map(|x| x.expand_ne()).map(|x| vec![x]).collect()
        }
        Formula::And(xs) | Formula::Or(xs) => {
            let conj = matches!(f, Formula::And(_)) != neg;
            if conj {
                let mut acc: Dnf = vec![vec![]];
                for x in xs {
                    acc = product(acc, dnf(x, neg)?);
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            } else {
                let mut acc = Vec::new();
                for x in xs {
                    acc.extend(dnf(x, neg)?);
                }
                acc
            }
        }
        Formula::Not(x) => dnf(x, !neg)?,
        Formula::Exists(..) => return Err(Error::QuantifiedInput),
    })
}

pub fn dnf_to_formula(cubes: &Dnf) -> Formula {
    Formula::or(cubes.iter().map(|c| Formula::conj_atoms(c.iter().cloned())))
}

// ---------------------------------------------------------------------------
// Atom-level helpers

fn false_atom() -> Atom {
    Atom::from_parts(BTreeMap::new(), Op::Lt, Q::zero())
}

fn all_int(a: &Atom, sorts: &Sorts) -> bool {
    a.vars().all(|v| sorts.is_int(v))
}

/// Integer tightening of an atom whose variables are all integer-valued.
fn tighten(a: &Atom) -> Atom {
    if a.lhs.is_empty() {
        return a.clone();
    }
    let k = &a.rhs;
    let shown = |r: Rel| match r {
        Rel::Gt => Rel::Ge,
        Rel::Lt => Rel::Le,
        r => r,
    };
    match a.op {
        Op::Le if !k.is_integer() => Atom { rhs: k.floor(), ..a.clone() },
        Op::Lt => {
            let r = if k.is_integer() { k - Q::one() } else { k.floor() };
            Atom { op: Op::Le, rhs: r, shown: shown(a.shown), lhs: a.lhs.clone() }
        }
        Op::Eq if !k.is_integer() => false_atom(),
        Op::Ne if !k.is_integer() => Atom::from_parts(BTreeMap::new(), Op::Le, Q::zero()),
        _ => a.clone(),
    }
}

fn tighten_in(a: &Atom, sorts: &Sorts) -> Atom {
    if all_int(a, sorts) {
        tighten(a)
    } else {
        a.clone()
    }
}

/// `±x ≤ k`, `x − y ≤ k`, or an equality/disequality of that shape.
fn is_difference(a: &Atom) -> bool {
    let cs: Vec<&Q> = a.lhs.values().collect();
    match cs.len() {
        0 => true,
        1 => cs[0].abs().is_one(),
        2 => cs[0].abs().is_one() && cs[1].abs().is_one() && cs[0].is_positive() != cs[1].is_positive(),
        _ => false,
    }
}

/// Canonical key of an atom's linear part: first coefficient positive.
/// Returns the key and whether the atom's lhs is the negated key.
fn key_of(a: &Atom) -> (BTreeMap<VarId, Q>, bool) {
    match a.lhs.values().next() {
        Some(c) if c.is_negative() => (neg_map(&a.lhs), true),
        _ => (a.lhs.clone(), false),
    }
}

#[derive(Default)]
struct Bounds {
    lo: Option<(Q, bool, Atom)>,
    hi: Option<(Q, bool, Atom)>,
    eq: Option<(Q, Atom)>,
    ne: Vec<(Q, Atom)>,
}

fn tighter_hi(new: &(Q, bool), old: &(Q, bool)) -> bool {
    new.0 < old.0 || (new.0 == old.0 && new.1 && !old.1)
}

fn tighter_lo(new: &(Q, bool), old: &(Q, bool)) -> bool {
    new.0 > old.0 || (new.0 == old.0 && new.1 && !old.1)
}

/// Constant folding, tightening of integer atoms, and bound merging per
/// linear form. `None` means the cube is unsatisfiable.
pub fn simplify_cube(cube: &[Atom], sorts: &Sorts) -> Option<Cube> {
    let mut groups: BTreeMap<BTreeMap<VarId, Q>, Bounds> = BTreeMap::new();
    for a0 in cube {
        let a = tighten_in(a0, sorts);
        if let Some(v) = a.constant_value() {
            if v {
                continue;
            }
            return None;
        }
        let (key, negated) = key_of(&a);
        let g = groups.entry(key).or_default();
        match a.op {
            Op::Eq => {
                let val = a.rhs.clone();
                if let Some((old, _)) = &g.eq {
                    if *old != val {
                        return None;
                    }
                } else {
                    g.eq = Some((val, a));
                }
            }
            Op::Ne => g.ne.push((a.rhs.clone(), a)),
            Op::Le | Op::Lt => {
                let strict = a.op == Op::Lt;
                if negated {
                    let cand = (-a.rhs.clone(), strict);
                    if g.lo.as_ref().is_none_or(|(v, s, _)| tighter_lo(&cand, &(v.clone(), *s))) {
                        g.lo = Some((cand.0, cand.1, a));
                    }
                } else {
                    let cand = (a.rhs.clone(), strict);
                    if g.hi.as_ref().is_none_or(|(v, s, _)| tighter_hi(&cand, &(v.clone(), *s))) {
                        g.hi = Some((cand.0, cand.1, a));
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for (key, g) in groups {
        let within = |v: &Q| {
            g.lo.as_ref().is_none_or(|(l, s, _)| if *s { v > l } else { v >= l })
                && g.hi.as_ref().is_none_or(|(h, s, _)| if *s { v < h } else { v <= h })
        };
        if let Some((v, a)) = &g.eq {
            if !within(v) || g.ne.iter().any(|(n, _)| n == v) {
                return None;
            }
            out.push(a.clone());
            continue;
        }
        if let (Some((l, ls, _)), Some((h, hs, _))) = (&g.lo, &g.hi) {
            if l > h || (l == h && (*ls || *hs)) {
                return None;
            }
            if l == h {
                if g.ne.iter().any(|(n, _)| n == l) {
                    return None;
                }
                out.push(Atom::from_parts(key.clone(), Op::Eq, l.clone()));
                continue;
            }
        }
        for (n, a) in &g.ne {
            if within(n) {
                out.push(a.clone());
            }
        }
        if let Some((_, _, a)) = &g.lo {
            out.push(a.clone());
        }
        if let Some((_, _, a)) = &g.hi {
            out.push(a.clone());
        }
    }
    out.sort();
    out.dedup();
    Some(out)
}

// ---------------------------------------------------------------------------
// Fourier–Motzkin

fn occurrences(cube: &[Atom], x: &VarId) -> usize {
    cube.iter().filter(|a| a.lhs.contains_key(x)).count()
}

/// Eliminates `x` from a cube of `=`, `≤`, `<` atoms. The flag reports
/// whether the projection is exact for the sort of `x`.
fn eliminate(cube: &[Atom], x: &VarId, sorts: &Sorts) -> (Cube, bool) {
    let int = sorts.is_int(x);
    let (with, mut rest): (Vec<Atom>, Vec<Atom>) = cube.iter().cloned().partition(|a| a.lhs.contains_key(x));
    let with: Vec<Atom> = with.iter().map(|a| tighten_in(a, sorts)).collect();
    let mut exact = true;
    if int && with.iter().any(|a| !all_int(a, sorts)) {
        exact = false;
    }

    let eq_pos = with
        .iter()
        .position(|a| a.op == Op::Eq && a.lhs[x].abs().is_one())
        .or_else(|| with.iter().position(|a| a.op == Op::Eq));
    if let Some(i) = eq_pos {
        let e = &with[i];
        let c = e.lhs[x].clone();
        if int && !c.abs().is_one() {
            exact = false;
        }
        // x = (k − Σ others) / c
        let mut t = Term::constant(&e.rhs / &c);
        for (v, cv) in &e.lhs {
            if v != x {
                t.add_var(v.clone(), &(-cv / &c));
            }
        }
        let map: BTreeMap<VarId, Term> = [(x.clone(), t)].into_iter().collect();
        for (j, a) in with.iter().enumerate() {
            if j != i {
                rest.push(a.substitute(&map));
            }
        }
        return (rest, exact);
    }

    if int && !with.iter().all(is_difference) {
        exact = false;
    }
    let (uppers, lowers): (Vec<&Atom>, Vec<&Atom>) = with.iter().partition(|a| a.lhs[x].is_positive());
    for u in &uppers {
        for l in &lowers {
            let cu = u.lhs[x].clone();
            let cl = -l.lhs[x].clone();
            let mut lhs = Term::default();
            lhs.add_scaled(&u.lhs_term(), &cl);
            lhs.add_scaled(&l.lhs_term(), &cu);
            let rhs = &u.rhs * &cl + &l.rhs * &cu;
            let op = if u.op == Op::Lt || l.op == Op::Lt { Op::Lt } else { Op::Le };
            rest.push(Atom::from_parts(lhs.coeffs, op, rhs));
        }
    }
    (rest, exact)
}

fn next_var(cube: &[Atom], candidates: &BTreeSet<VarId>, sorts: &Sorts, rat_first: bool) -> Option<VarId> {
    let present: BTreeSet<&VarId> = cube.iter().flat_map(|a| a.vars()).filter(|v| candidates.contains(*v)).collect();
    present
        .into_iter()
        .min_by_key(|v| {
            let int_rank = if rat_first && sorts.is_int(v) { 1 } else { 0 };
            (int_rank, occurrences(cube, v), (*v).clone())
        })
        .cloned()
}

fn project_cube(cube: &[Atom], vars: &BTreeSet<VarId>, sorts: &Sorts) -> Result<Option<Cube>> {
    let mut cur = match simplify_cube(cube, sorts) {
        Some(c) => c,
        None => return Ok(None),
    };
    while let Some(x) = next_var(&cur, vars, sorts, false) {
        let (next, exact) = eliminate(&cur, &x, sorts);
        if !exact {
            return Err(Error::UnsupportedInteger(format!(
                "cannot eliminate {} exactly from {}",
                x,
                Formula::conj_atoms(cur.iter().cloned())
            )));
        }
        cur = match simplify_cube(&next, sorts) {
            Some(c) => c,
            None => return Ok(None),
        };
    }
    Ok(Some(cur))
}

// ---------------------------------------------------------------------------
// Satisfiability of a cube with model construction

struct Interval {
    lo: Option<(Q, bool)>,
    hi: Option<(Q, bool)>,
    eq: Option<Q>,
}

impl Interval {
    fn contains(&self, v: &Q) -> bool {
        if let Some(e) = &self.eq {
            if e != v {
                return false;
            }
        }
        self.lo.as_ref().is_none_or(|(l, s)| if *s { v > l } else { v >= l })
            && self.hi.as_ref().is_none_or(|(h, s)| if *s { v < h } else { v <= h })
    }

    fn pick_int(&self) -> Option<Q> {
        if let Some(e) = &self.eq {
            return if e.is_integer() && self.contains(e) { Some(e.clone()) } else { None };
        }
        let lo = self.lo.as_ref().map(|(l, s)| if *s { l.floor() + Q::one() } else { l.ceil() });
        let hi = self.hi.as_ref().map(|(h, s)| if *s { h.ceil() - Q::one() } else { h.floor() });
        if let (Some(l), Some(h)) = (&lo, &hi) {
            if l > h {
                return None;
            }
        }
        let zero = Q::zero();
        match (lo, hi) {
            (Some(l), _) if l > zero => Some(l),
            (_, Some(h)) if h < zero => Some(h),
            _ => Some(zero),
        }
    }

    fn pick_rat(&self) -> Option<Q> {
        if let Some(e) = &self.eq {
            return if self.contains(e) { Some(e.clone()) } else { None };
        }
        let zero = Q::zero();
        if self.contains(&zero) {
            return Some(zero);
        }
        if let Some(i) = self.pick_int() {
            if self.contains(&i) {
                return Some(i);
            }
        }
        match (&self.lo, &self.hi) {
            (Some((l, false)), _) if *l > zero => Some(l.clone()),
            (_, Some((h, false))) if *h < zero => Some(h.clone()),
            (Some((l, _)), Some((h, _))) if l < h => Some((l + h) / Q::from_integer(BigInt::from(2))),
            _ => None,
        }
    }
}

fn interval_for(x: &VarId, atoms: &[Atom], model: &Assignment) -> Interval {
    let mut iv = Interval { lo: None, hi: None, eq: None };
    for a in atoms {
        let c = match a.lhs.get(x) {
            Some(c) => c.clone(),
            None => continue,
        };
        let mut r = Q::zero();
        for (v, cv) in &a.lhs {
            if v != x {
                r += cv * model.get(v).cloned().unwrap_or_else(Q::zero);
            }
        }
        let bound = (&a.rhs - r) / &c;
        match a.op {
            Op::Eq => iv.eq = Some(bound),
            Op::Le | Op::Lt => {
                let strict = a.op == Op::Lt;
                if c.is_positive() {
                    if iv.hi.as_ref().is_none_or(|(h, s)| tighter_hi(&(bound.clone(), strict), &(h.clone(), *s))) {
                        iv.hi = Some((bound, strict));
                    }
                } else if iv.lo.as_ref().is_none_or(|(l, s)| tighter_lo(&(bound.clone(), strict), &(l.clone(), *s))) {
                    iv.lo = Some((bound, strict));
                }
            }
            Op::Ne => {}
        }
    }
    iv
}

/// FM satisfiability of a cube without `≠`. Returns a model on success.
/// `Err(UnsupportedInteger)` when the relaxation is satisfiable but no
/// integer model was found.
fn solve_cube(cube: &[Atom], sorts: &Sorts) -> Result<Option<Assignment>> {
    let mut cur = match simplify_cube(cube, sorts) {
        Some(c) => c,
        None => return Ok(None),
    };
    let all: BTreeSet<VarId> = cur.iter().flat_map(|a| a.vars().cloned()).collect();
    let mut stack: Vec<(VarId, Cube)> = Vec::new();
    while let Some(x) = next_var(&cur, &all, sorts, true) {
        let (next, _) = eliminate(&cur, &x, sorts);
        stack.push((x, cur));
        cur = match simplify_cube(&next, sorts) {
            Some(c) => c,
            None => return Ok(None),
        };
    }
    let mut model = Assignment::new();
    for (x, atoms) in stack.iter().rev() {
        let iv = interval_for(x, atoms, &model);
        let v = if sorts.is_int(x) { iv.pick_int() } else { iv.pick_rat() };
        match v {
            Some(v) => {
                model.insert(x.clone(), v);
            }
            None => return integer_search(cube, sorts),
        }
    }
    Ok(Some(model))
}

const SEARCH_RADIUS: i64 = 12;
const SEARCH_LIMIT: usize = 50_000;

fn integer_search(cube: &[Atom], sorts: &Sorts) -> Result<Option<Assignment>> {
    let ints: Vec<VarId> = cube
        .iter()
        .flat_map(|a| a.vars().cloned())
        .filter(|v| sorts.is_int(v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let span = (2 * SEARCH_RADIUS + 1) as usize;
    let total = span.checked_pow(ints.len() as u32).unwrap_or(usize::MAX);
    let unsupported = || Error::UnsupportedInteger(Formula::conj_atoms(cube.iter().cloned()).to_string());
    if ints.is_empty() || total > SEARCH_LIMIT {
        return Err(unsupported());
    }
    let rat_sorts = Sorts::uniform(Domain::Rat);
    for idx in 0..total {
        let mut m = Assignment::new();
        let mut rem = idx;
        for v in &ints {
            let k = (rem % span) as i64;
            rem /= span;
            // 0, 1, -1, 2, -2, ...
            let val = if k % 2 == 1 { (k + 1) / 2 } else { -(k / 2) };
            m.insert(v.clone(), Q::from_integer(BigInt::from(val)));
        }
        let map: BTreeMap<VarId, Term> = m.iter().map(|(v, c)| (v.clone(), Term::constant(c.clone()))).collect();
        let sub: Vec<Atom> = cube.iter().map(|a| a.substitute(&map)).collect();
        if let Some(rest) = solve_cube(&sub, &rat_sorts)? {
            m.extend(rest);
            return Ok(Some(m));
        }
    }
    Err(unsupported())
}

fn cube_sat(cube: &[Atom], sorts: &Sorts) -> Result<bool> {
    Ok(solve_cube(cube, sorts)?.is_some())
}

// ---------------------------------------------------------------------------
// Public entry points

/// Replaces every `Exists` by its quantifier-free equivalent, innermost first.
pub fn eliminate_exists(phi: &Formula, sorts: &Sorts) -> Result<Formula> {
    Ok(match phi {
        Formula::Exists(vs, body) => {
            let inner = eliminate_exists(body, sorts)?;
            qe(vs, &inner, sorts)?
        }
        Formula::And(xs) => Formula::and(xs.iter().map(|x| eliminate_exists(x, sorts)).collect::<Result<Vec<_>>>()?),
        Formula::Or(xs) => Formula::or(xs.iter().map(|x| eliminate_exists(x, sorts)).collect::<Result<Vec<_>>>()?),
        Formula::Not(x) => Formula::negate(eliminate_exists(x, sorts)?),
        f => f.clone(),
    })
}

/// Quantifier elimination of `vars` under the given sorts. Integer variables
/// must only occur in difference constraints.
pub fn qe(vars: &[VarId], phi: &Formula, sorts: &Sorts) -> Result<Formula> {
    let body = eliminate_exists(phi, sorts)?;
    let elim: BTreeSet<VarId> = vars.iter().cloned().collect();
    let mut cubes = Vec::new();
    for cube in to_dnf(&body)? {
        if let Some(c) = project_cube(&cube, &elim, sorts)? {
            match cube_sat(&c, sorts) {
                Ok(false) => {}
                Ok(true) | Err(Error::UnsupportedInteger(_)) => cubes.push(c),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(dnf_to_formula(&prune_cubes(cubes)))
}

/// Drops duplicate cubes and cubes that are supersets of another cube.
fn prune_cubes(mut cubes: Dnf) -> Dnf {
    cubes.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    cubes.dedup();
    let mut out: Dnf = Vec::new();
    for c in cubes {
        if !out.iter().any(|o| o.iter().all(|a| c.contains(a))) {
            out.push(c);
        }
    }
    out.sort();
    out
}

pub fn qe_rational(vars: &[VarId], phi: &Formula) -> Formula {
    qe(vars, phi, &Sorts::uniform(Domain::Rat)).expect("rational elimination is total")
}

pub fn qe_gc(vars: &[VarId], phi: &Formula) -> Result<Formula> {
    let mut bad = None;
    phi.visit_atoms(&mut |a| {
        if bad.is_none() && gc_atom(a).is_none() {
            bad = Some(a.to_string());
        }
    });
    if let Some(b) = bad {
        return Err(Error::NotGapOrder(b));
    }
    qe(vars, phi, &Sorts::uniform(Domain::Int))
}

/// Simplified DNF of a quantifier-free formula, with unsatisfiable cubes removed.
pub fn simplify(phi: &Formula, sorts: &Sorts) -> Result<Formula> {
    qe(&[], phi, sorts)
}

pub fn is_sat(phi: &Formula, dom: impl Into<Sorts>) -> Result<SatResult> {
    let sorts = dom.into();
    let qf = eliminate_exists(phi, &sorts)?;
    for cube in to_dnf(&qf)? {
        if let Some(mut m) = solve_cube(&cube, &sorts)? {
            for v in phi.free_vars() {
                m.entry(v).or_insert_with(Q::zero);
            }
            m.retain(|v, _| phi.free_vars().contains(v));
            if !qf.eval(&m)? {
                return Err(Error::InternalInconsistency(format!("model {:?} fails {}", m, qf)));
            }
            return Ok(SatResult::Sat(m));
        }
    }
    Ok(SatResult::Unsat)
}

pub fn sat(phi: &Formula, dom: impl Into<Sorts>) -> Result<bool> {
    Ok(is_sat(phi, dom)?.is_sat())
}

/// Validity of `φ → ψ`: every cube of `φ` conjoined with `¬ψ` is unsatisfiable.
pub fn implies(phi: &Formula, psi: &Formula, dom: impl Into<Sorts>) -> Result<bool> {
    let sorts = dom.into();
    let phi = eliminate_exists(phi, &sorts)?;
    let psi = eliminate_exists(psi, &sorts)?;
    let psi_cubes = to_dnf(&psi)?;
    'cubes: for c in to_dnf(&phi)? {
        let c = match simplify_cube(&c, &sorts) {
            Some(c) => c,
            None => continue,
        };
        if psi_cubes.iter().any(|d| d.iter().all(|a| c.contains(a))) {
            continue;
        }
        let mut frontier: Vec<Cube> = vec![c];
        for d in &psi_cubes {
            let mut next = Vec::new();
            for s in &frontier {
                for a in d {
                    for n in a.negated().iter().flat_map(|n| n.expand_ne()) {
                        let mut cand = s.clone();
                        cand.push(n);
                        if let Some(cand) = simplify_cube(&cand, &sorts) {
                            if cube_sat(&cand, &sorts)? && !next.contains(&cand) {
                                next.push(cand);
                            }
                        }
                    }
                }
            }
            frontier = next;
            if frontier.is_empty() {
                continue 'cubes;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

pub fn equivalent(phi: &Formula, psi: &Formula, dom: impl Into<Sorts>) -> Result<bool> {
    if phi == psi {
        return Ok(true);
    }
    let sorts = dom.into();
    Ok(implies(phi, psi, &sorts)? && implies(psi, phi, &sorts)?)
}

// ---------------------------------------------------------------------------
// Gap-order constraints

/// Reading of an atom as gap-order constraints over integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GcForm {
    Const,
    /// `x ≤ k` (upper) or `x ≥ k` (lower), as `0 − x ≥ −k` / `x − 0 ≥ k`.
    Bound,
    /// `x − y ≥ g` with `g ∈ ℕ`.
    Gap,
    /// `x = k`, `x = y`, `x ≠ …`: equalities and disequalities of the above.
    Equality,
}

/// Integer-tightened atom if it is expressible by gap-order constraints.
pub fn gc_atom(a: &Atom) -> Option<(Atom, GcForm)> {
    let t = tighten(a);
    let cs: Vec<&Q> = t.lhs.values().collect();
    let form = match cs.len() {
        0 => GcForm::Const,
        1 if cs[0].abs().is_one() => {
            if matches!(t.op, Op::Eq | Op::Ne) {
                GcForm::Equality
            } else {
                GcForm::Bound
            }
        }
        2 if is_difference(&t) => {
            let k = &t.rhs;
            let ok = match t.op {
                Op::Le | Op::Lt => !k.is_positive(),
                Op::Eq => k.is_zero(),
                Op::Ne => k.abs() <= Q::one(),
            };
            if !ok {
                return None;
            }
            if matches!(t.op, Op::Eq | Op::Ne) {
                GcForm::Equality
            } else {
                GcForm::Gap
            }
        }
        _ => return None,
    };
    Some((t, form))
}

/// Replaces every gap `≥ k` with `k ≥ K` by `≥ K`; bounds count as gaps to 0.
pub fn cutoff(phi: &Formula, k: u64) -> Result<Formula> {
    let big = Q::from_integer(BigInt::from(k));
    let mut err = None;
    let out = map_atoms(phi, &mut |a| match gc_atom(a) {
        None => {
            err.get_or_insert_with(|| Error::NotGapOrder(a.to_string()));
            a.clone()
        }
        Some((t, GcForm::Bound)) | Some((t, GcForm::Gap)) => {
            // lhs ≤ rhs encodes a gap of −rhs (for `−x ≤ −g` and `y − x ≤ −g`)
            // or, for `x ≤ k` with k < 0, a gap of −k from x up to 0.
            if -t.rhs.clone() > big {
                Atom { rhs: -big.clone(), ..t }
            } else {
                t
            }
        }
        Some((t, _)) => t,
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn map_atoms(f: &Formula, m: &mut dyn FnMut(&Atom) -> Atom) -> Formula {
    match f {
        Formula::Atom(a) => Formula::Atom(m(a)),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| map_atoms(x, m)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| map_atoms(x, m)).collect()),
        Formula::Not(x) => Formula::Not(Box::new(map_atoms(x, m))),
        Formula::Exists(vs, x) => Formula::Exists(vs.clone(), Box::new(map_atoms(x, m))),
        f => f.clone(),
    }
}

pub fn gc_equivalent(phi: &Formula, psi: &Formula, k: u64) -> Result<bool> {
    let a = cutoff(phi, k)?;
    let b = cutoff(psi, k)?;
    equivalent(&a, &b, Domain::Int)
}

/// Constants of gap-order atoms: bound values and gap sizes.
pub fn gc_constants(a: &Atom) -> Vec<Q> {
    match gc_atom(a) {
        Some((t, GcForm::Gap)) => vec![-t.rhs],
        Some((t, _)) => {
            let c = t.lhs.values().next().cloned().unwrap_or_else(Q::one);
            vec![&t.rhs * c]
        }
        None => vec![],
    }
}

fn mc_atom(a: &Atom) -> bool {
    let cs: Vec<&Q> = a.lhs.values().collect();
    match cs.len() {
        0 | 1 => true,
        2 => is_difference(a) && a.rhs.is_zero(),
        _ => false,
    }
}

pub fn classify(phi: &Formula) -> ConstraintClass {
    let atoms = phi.atoms();
    if atoms.iter().all(mc_atom) {
        ConstraintClass::Mc
    } else if atoms.iter().all(|a| gc_atom(a).is_some()) {
        ConstraintClass::Gc
    } else {
        ConstraintClass::GeneralLinear
    }
}

pub fn classify_atom(a: &Atom) -> ConstraintClass {
    classify(&Formula::Atom(a.clone()))
}
