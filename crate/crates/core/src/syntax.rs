//! Concrete syntax for constraints, models and properties.
//!
//! Model files are line oriented:
//!
//! ```text
//! domain rat
//! vars x y n:int
//! init x=0 y=0 n=0
//! states 1 2
//! initial 1
//! final 2
//! trans 1 a1 2 [x^w > y^r]
//! ```

use crate::ddsa::{desugar_guard, Ddsa, Transition};
use crate::error::{Error, Result};
use crate::formula::{fmt_q, Atom, Domain, Formula, Q, Rel, Sorts, Term, VarId, VarKind};
use crate::ltlf::Ltl;
use num::{BigInt, One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(Q),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMS: &[&str] = &[
    "&&", "||", "<=", ">=", "!=", "==", "≤", "≥", "≠", "∧", "∨", "◇", "□", "&", "|", "<", ">", "=", "(", ")", "+", "-",
    "*", "/", "^", "#", "!", "[", "]", ",", ".",
];

fn lex(src: &str, line0: usize) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let (mut line, mut col) = (line0, 1);
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let text: String = chars[i..j].iter().map(|x| x.1).collect();
            let mut value: Q = Q::from_integer(text.parse::<BigInt>().unwrap());
            if j + 1 < chars.len() && chars[j].1 == '.' && chars[j + 1].1.is_ascii_digit() {
                let mut k = j + 1;
                while k < chars.len() && chars[k].1.is_ascii_digit() {
                    k += 1;
                }
                let frac: String = chars[j + 1..k].iter().map(|x| x.1).collect();
                let scale = BigInt::from(10u32).pow(frac.len() as u32);
                value += Q::new(frac.parse::<BigInt>().unwrap(), scale);
                j = k;
            }
            col += j - i;
            i = j;
            out.push(Spanned { tok: Tok::Num(value), line, col: start_col });
            continue;
        }
        if c.is_alphanumeric() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                j += 1;
            }
            let text: String = chars[i..j].iter().map(|x| x.1).collect();
            col += j - i;
            i = j;
            out.push(Spanned { tok: Tok::Ident(text), line, col: start_col });
            continue;
        }
        let rest = &src[pos..];
        match SYMS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                let n = s.chars().count();
                i += n;
                col += n;
                out.push(Spanned { tok: Tok::Sym(s), line, col: start_col });
            }
            None => {
                return Err(Error::Syntax { line, col, msg: format!("unexpected character '{}'", c) });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn new(src: &str, line: usize) -> Result<Self> {
        let toks = lex(src, line)?;
        let end = (line + src.matches('\n').count(), src.lines().last().map_or(1, |l| l.chars().count() + 1));
        Ok(Parser { toks, pos: 0, end })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|s| &s.tok)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.toks.get(self.pos).map_or(self.end, |s| (s.line, s.col));
        Err(Error::Syntax { line, col, msg: msg.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn eat(&mut self, syms: &[&str]) -> bool {
        if syms.iter().any(|s| self.is_sym(s)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(&[s]) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", s))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn number(&mut self) -> Result<Q> {
        let neg = self.eat(&["-"]);
        let mut v = match self.peek() {
            Some(Tok::Num(n)) => n.clone(),
            _ => return self.err("expected a number"),
        };
        self.pos += 1;
        if self.is_sym("/") && matches!(self.peek_at(1), Some(Tok::Num(_))) {
            self.pos += 1;
            if let Some(Tok::Num(d)) = self.peek() {
                if d.is_zero() {
                    return self.err("division by zero");
                }
                v /= d.clone();
            }
            self.pos += 1;
        }
        Ok(if neg { -v } else { v })
    }

    fn variable(&mut self, name: String) -> Result<VarId> {
        if self.eat(&["^"]) {
            let k = self.ident()?;
            return match k.as_str() {
                "r" => Ok(VarId::read(&name)),
                "w" => Ok(VarId::write(&name)),
                _ => self.err("expected 'r' or 'w' after '^'"),
            };
        }
        if self.eat(&["#"]) {
            let n = self.number()?;
            if !n.is_integer() || n < Q::zero() {
                return self.err("expected an index");
            }
            return Ok(VarId::indexed(&name, n.to_integer().try_into().unwrap_or(0)));
        }
        Ok(VarId::plain(&name))
    }

    // expr := ['-'] term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Term> {
        let mut t = if self.eat(&["-"]) { self.factor()?.scaled(&-Q::one()) } else { self.factor()? };
        loop {
            if self.eat(&["+"]) {
                t = t.plus(&self.factor()?);
            } else if self.eat(&["-"]) {
                t = t.minus(&self.factor()?);
            } else {
                return Ok(t);
            }
        }
    }

    fn factor(&mut self) -> Result<Term> {
        match self.peek().cloned() {
            Some(Tok::Num(_)) => {
                let k = self.number()?;
                // `2*x` or juxtaposed `2x`
                if self.eat(&["*"]) || matches!(self.peek(), Some(Tok::Ident(n)) if !is_keyword(n)) {
                    Ok(self.factor()?.scaled(&k))
                } else {
                    Ok(Term::constant(k))
                }
            }
            Some(Tok::Ident(name)) if !is_keyword(&name) => {
                self.pos += 1;
                let v = self.variable(name)?;
                Ok(Term::var(v))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let t = self.expr()?;
                self.expect(")")?;
                Ok(t)
            }
            Some(Tok::Sym("-")) => {
                self.pos += 1;
                Ok(self.factor()?.scaled(&-Q::one()))
            }
            _ => self.err("expected a term"),
        }
    }

    fn rel(&mut self) -> Option<Rel> {
        let r = match self.peek() {
            Some(Tok::Sym(s)) => match *s {
                "=" | "==" => Rel::Eq,
                "!=" | "≠" => Rel::Ne,
                "<" => Rel::Lt,
                "<=" | "≤" => Rel::Le,
                ">" => Rel::Gt,
                ">=" | "≥" => Rel::Ge,
                _ => return None,
            },
            _ => return None,
        };
        self.pos += 1;
        Some(r)
    }

    fn atom(&mut self) -> Result<Atom> {
        let l = self.expr()?;
        match self.rel() {
            Some(r) => {
                let rhs = self.expr()?;
                Ok(Atom::new(l, r, rhs))
            }
            None => self.err("expected a relation"),
        }
    }

    fn try_atom(&mut self) -> Option<Atom> {
        let save = self.pos;
        match self.atom() {
            Ok(a) => Some(a),
            Err(_) => {
                self.pos = save;
                None
            }
        }
    }

    // formula := conj (('||'|'|') conj)*
    fn formula(&mut self) -> Result<Formula> {
        let mut parts = vec![self.conj()?];
        while self.eat(&["||", "|", "∨"]) {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut parts = vec![self.unary()?];
        while self.eat(&["&&", "&", "∧"]) {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.eat(&["!"]) {
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        match self.peek() {
            Some(Tok::Ident(s)) if s == "true" => {
                self.pos += 1;
                return Ok(Formula::True);
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.pos += 1;
                return Ok(Formula::False);
            }
            Some(Tok::Ident(s)) if s == "exists" => {
                self.pos += 1;
                let mut vs = Vec::new();
                while !self.eat(&["."]) {
                    if self.at_end() {
                        return self.err("expected '.'");
                    }
                    let n = self.ident()?;
                    vs.push(self.variable(n)?);
                }
                let body = self.unary()?;
                return Ok(Formula::Exists(vs, Box::new(body)));
            }
            _ => {}
        }
        if self.is_sym("(") {
            if let Some(a) = self.try_atom() {
                return Ok(Formula::Atom(a));
            }
            self.pos += 1;
            let f = self.formula()?;
            self.expect(")")?;
            return Ok(f);
        }
        Ok(Formula::Atom(self.atom()?))
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "true" | "false" | "exists" | "X" | "F" | "G" | "U")
}

fn finish<T>(p: &Parser, v: T) -> Result<T> {
    if p.at_end() {
        Ok(v)
    } else {
        p.err("unexpected trailing input")
    }
}

pub fn parse_formula(src: &str) -> Result<Formula> {
    let mut p = Parser::new(src, 1)?;
    let f = p.formula()?;
    finish(&p, f)
}

pub fn parse_atom(src: &str) -> Result<Atom> {
    let mut p = Parser::new(src, 1)?;
    let a = p.atom()?;
    finish(&p, a)
}

// ---------------------------------------------------------------------------
// Models

fn syntax(line: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line, col: 1, msg: msg.into() }
}

fn parse_domain(s: &str, line: usize) -> Result<Domain> {
    match s {
        "int" => Ok(Domain::Int),
        "rat" => Ok(Domain::Rat),
        _ => Err(syntax(line, format!("unknown domain '{}'", s))),
    }
}

/// Parses and validates a model.
pub fn parse_model(src: &str) -> Result<Ddsa> {
    let mut domain = None;
    let mut decls: Vec<(String, Option<Domain>)> = Vec::new();
    let mut init: Option<BTreeMap<VarId, Q>> = None;
    let mut states: Option<Vec<String>> = None;
    let mut initial: Option<String> = None;
    let mut finals: BTreeSet<String> = BTreeSet::new();
    let mut actions: Vec<String> = Vec::new();
    let mut guards: BTreeMap<String, Vec<Atom>> = BTreeMap::new();
    let mut transitions = Vec::new();

    for (ln, raw) in src.lines().enumerate() {
        let line = ln + 1;
        let text = raw.split("//").next().unwrap_or("");
        let text = text.split('%').next().unwrap_or("").trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let (kw, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        let rest = rest.trim();
        let words: Vec<&str> = rest.split_whitespace().collect();
        match kw {
            "domain" => {
                if words.len() != 1 {
                    return Err(syntax(line, "expected 'domain int' or 'domain rat'"));
                }
                domain = Some(parse_domain(words[0], line)?);
            }
            "vars" => {
                for w in words {
                    let (n, d) = match w.split_once(':') {
                        Some((n, d)) => (n, Some(parse_domain(d, line)?)),
                        None => (w, None),
                    };
                    decls.push((n.to_string(), d));
                }
            }
            "init" => {
                let mut m = BTreeMap::new();
                let mut p = Parser::new(rest, line)?;
                while !p.at_end() {
                    let n = p.ident()?;
                    p.expect("=")?;
                    let k = p.number()?;
                    p.eat(&[",", "&&", "&"]);
                    m.insert(VarId::plain(&n), k);
                }
                init = Some(m);
            }
            "states" => states = Some(words.iter().map(|s| s.to_string()).collect()),
            "initial" => {
                if words.len() != 1 {
                    return Err(syntax(line, "expected one initial state"));
                }
                initial = Some(words[0].to_string());
            }
            "final" => finals.extend(words.iter().map(|s| s.to_string())),
            "trans" => {
                let (head, guard_src) = match rest.split_once('[') {
                    Some((h, g)) => {
                        let g = g.trim_end();
                        match g.strip_suffix(']') {
                            Some(g) => (h, g),
                            None => return Err(syntax(line, "guard must end with ']'")),
                        }
                    }
                    None => (rest, "true"),
                };
                let hw: Vec<&str> = head.split_whitespace().collect();
                if hw.len() != 3 {
                    return Err(syntax(line, "expected 'trans <from> <action> <to> [guard]'"));
                }
                let col = raw.find('[').map_or(1, |c| c + 2);
                let guard = parse_formula(guard_src).map_err(|e| match e {
                    Error::Syntax { col: c, msg, .. } => Error::Syntax { line, col: col + c - 1, msg },
                    e => e,
                })?;
                for (a, atoms) in desugar_guard(hw[1], &guard)? {
                    match guards.get(&a) {
                        Some(g) if *g != atoms => {
                            return Err(syntax(line, format!("action '{}' is used with two different guards", a)));
                        }
                        Some(_) => {}
                        None => {
                            actions.push(a.clone());
                            guards.insert(a.clone(), atoms);
                        }
                    }
                    transitions.push(Transition { from: hw[0].to_string(), action: a, to: hw[2].to_string() });
                }
            }
            other => return Err(syntax(line, format!("unknown declaration '{}'", other))),
        }
    }

    let domain = domain.unwrap_or(Domain::Rat);
    let mut sorts = Sorts::uniform(domain);
    let mut vars = Vec::new();
    for (n, d) in &decls {
        if let Some(d) = d {
            if *d != domain {
                sorts = sorts.with(n, *d);
            }
        }
        vars.push(VarId::plain(n));
    }
    let init = init.ok_or_else(|| Error::InvalidModel(vec!["missing 'init' declaration".to_string()]))?;
    let states = states.ok_or_else(|| Error::InvalidModel(vec!["missing 'states' declaration".to_string()]))?;
    let initial = initial
        .or_else(|| states.first().cloned())
        .ok_or_else(|| Error::InvalidModel(vec!["no initial state".to_string()]))?;
    let mut diags = Vec::new();
    for v in init.keys() {
        if !vars.contains(v) {
            diags.push(format!("initial value for undeclared variable {}", v));
        }
    }
    let d = Ddsa { states, initial, actions, transitions, finals, vars, init, guards, sorts };
    diags.extend(d.validate());
    if diags.is_empty() {
        Ok(d)
    } else {
        Err(Error::InvalidModel(diags))
    }
}

/// Inverse of [`parse_model`]; desugared copies `a#i` are printed as-is.
pub fn print_model(d: &Ddsa) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "domain {}", d.sorts.default);
    let vars: Vec<String> = d
        .vars
        .iter()
        .map(|v| match d.sorts.by_name.get(&v.name) {
            Some(dom) => format!("{}:{}", v, dom),
            None => v.to_string(),
        })
        .collect();
    let _ = writeln!(s, "vars {}", vars.join(" "));
    let init: Vec<String> = d.vars.iter().filter_map(|v| d.init.get(v).map(|k| format!("{}={}", v, fmt_q(k)))).collect();
    let _ = writeln!(s, "init {}", init.join(" "));
    let _ = writeln!(s, "states {}", d.states.join(" "));
    let _ = writeln!(s, "initial {}", d.initial);
    let finals: Vec<&str> = d.finals.iter().map(|f| f.as_str()).collect();
    let _ = writeln!(s, "final {}", finals.join(" "));
    let ts = &d.transitions;
    let mut i = 0;
    while i < ts.len() {
        let t = &ts[i];
        let base = crate::ddsa::base_action(&t.action);
        let mut j = i + 1;
        if base != t.action {
            while j < ts.len() && ts[j].from == t.from && ts[j].to == t.to && crate::ddsa::base_action(&ts[j].action) == base {
                j += 1;
            }
        }
        let g = Formula::or(ts[i..j].iter().map(|t| Formula::conj_atoms(d.guards[&t.action].iter().cloned())));
        let _ = writeln!(s, "trans {} {} {} [{}]", t.from, base, t.to, g);
        i = j;
    }
    s
}

// ---------------------------------------------------------------------------
// Properties
//
// prop   := conj ('|' conj)*
// conj   := until ('&' until)*
// until  := unary ('U' until)?
// unary  := 'X' unary | 'F' unary | 'G' unary | '<' name '>' unary
//         | '(' prop ')' | constraint | name | 'true' | 'false'

impl Parser {
    fn prop(&mut self) -> Result<Ltl> {
        let mut parts = vec![self.prop_conj()?];
        while self.eat(&["||", "|", "∨"]) {
            parts.push(self.prop_conj()?);
        }
        Ok(parts.into_iter().reduce(|a, b| Ltl::Or(Box::new(a), Box::new(b))).unwrap())
    }

    fn prop_conj(&mut self) -> Result<Ltl> {
        let mut parts = vec![self.prop_until()?];
        while self.eat(&["&&", "&", "∧"]) {
            parts.push(self.prop_until()?);
        }
        Ok(parts.into_iter().reduce(|a, b| Ltl::And(Box::new(a), Box::new(b))).unwrap())
    }

    fn prop_until(&mut self) -> Result<Ltl> {
        let l = self.prop_unary()?;
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == "U") {
            self.pos += 1;
            let r = self.prop_until()?;
            return Ok(Ltl::Until(Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn prop_unary(&mut self) -> Result<Ltl> {
        if self.eat(&["◇"]) {
            return Ok(Ltl::Eventually(Box::new(self.prop_unary()?)));
        }
        if self.eat(&["□"]) {
            return Ok(Ltl::Always(Box::new(self.prop_unary()?)));
        }
        if self.is_sym("<") {
            self.pos += 1;
            let a = self.ident()?;
            self.expect(">")?;
            return Ok(Ltl::ActionNext(a, Box::new(self.prop_unary()?)));
        }
        if let Some(Tok::Ident(s)) = self.peek().cloned() {
            match s.as_str() {
                "X" => {
                    self.pos += 1;
                    return Ok(Ltl::Next(Box::new(self.prop_unary()?)));
                }
                "F" => {
                    self.pos += 1;
                    return Ok(Ltl::Eventually(Box::new(self.prop_unary()?)));
                }
                "G" => {
                    self.pos += 1;
                    return Ok(Ltl::Always(Box::new(self.prop_unary()?)));
                }
                "true" => {
                    self.pos += 1;
                    return Ok(Ltl::top());
                }
                "false" => {
                    self.pos += 1;
                    return Ok(Ltl::bottom());
                }
                _ => {}
            }
        }
        if let Some(a) = self.try_atom() {
            return Ok(Ltl::Constraint(a));
        }
        if self.eat(&["("]) {
            let f = self.prop()?;
            self.expect(")")?;
            return Ok(f);
        }
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if !is_keyword(&s) => {
                self.pos += 1;
                Ok(Ltl::State(s))
            }
            // numeric state names such as `1`
            Some(Tok::Num(k)) if k.is_integer() && k >= Q::from_integer(0.into()) => {
                self.pos += 1;
                Ok(Ltl::State(k.to_string()))
            }
            _ => self.err("expected a property"),
        }
    }
}

/// Parses a property. Bare names are returned as state atoms; [`link_property`]
/// resolves them against a model.
pub fn parse_property(src: &str) -> Result<Ltl> {
    let mut p = Parser::new(src, 1)?;
    let f = p.prop()?;
    finish(&p, f)
}

/// Resolves bare names to state or action atoms of `d`.
pub fn link_property(f: &Ltl, d: &Ddsa) -> Result<Ltl> {
    let is_action = |n: &str| d.actions.iter().any(|a| crate::ddsa::base_action(a) == n || a == n);
    let is_state = |n: &str| d.states.iter().any(|s| s == n);
    let vars = d.var_names();
    let check_atom = |a: &Atom| -> Result<()> {
        for v in a.vars() {
            if v.kind != VarKind::Plain || !vars.contains(v) {
                return Err(Error::UnknownAtom(v.to_string()));
            }
        }
        Ok(())
    };
    let b = |x: &Ltl| link_property(x, d).map(Box::new);
    Ok(match f {
        Ltl::State(n) | Ltl::Action(n) => match (is_state(n), is_action(n)) {
            (true, true) => return Err(Error::AmbiguousAtom(n.clone())),
            (true, false) => Ltl::State(n.clone()),
            (false, true) => Ltl::Action(n.clone()),
            (false, false) => return Err(Error::UnknownAtom(n.clone())),
        },
        Ltl::Constraint(a) => {
            check_atom(a)?;
            f.clone()
        }
        Ltl::ActionNext(a, x) => {
            if !is_action(a) {
                return Err(Error::UnknownAtom(a.clone()));
            }
            Ltl::ActionNext(a.clone(), b(x)?)
        }
        Ltl::And(x, y) => Ltl::And(b(x)?, b(y)?),
        Ltl::Or(x, y) => Ltl::Or(b(x)?, b(y)?),
        Ltl::Until(x, y) => Ltl::Until(b(x)?, b(y)?),
        Ltl::Next(x) => Ltl::Next(b(x)?),
        Ltl::Eventually(x) => Ltl::Eventually(b(x)?),
        Ltl::Always(x) => Ltl::Always(b(x)?),
        Ltl::True | Ltl::False => f.clone(),
    })
}

pub fn parse_linked_property(src: &str, d: &Ddsa) -> Result<Ltl> {
    link_property(&parse_property(src)?, d)
}

/// ASCII rendering accepted by [`parse_property`].
pub fn print_property(f: &Ltl) -> String {
    fn go(f: &Ltl, out: &mut String) {
        let wrap = |x: &Ltl, out: &mut String| {
            if matches!(x, Ltl::And(..) | Ltl::Or(..) | Ltl::Until(..)) {
                out.push('(');
                go(x, out);
                out.push(')');
            } else {
                go(x, out);
            }
        };
        match f {
            Ltl::Constraint(a) => {
                let _ = write!(out, "({})", a);
            }
            Ltl::State(n) | Ltl::Action(n) => out.push_str(n),
            Ltl::True => out.push_str("true"),
            Ltl::False => out.push_str("false"),
            Ltl::And(x, y) | Ltl::Or(x, y) | Ltl::Until(x, y) => {
                let op = match f {
                    Ltl::And(..) => " & ",
                    Ltl::Or(..) => " | ",
                    _ => " U ",
                };
                wrap(x, out);
                out.push_str(op);
                wrap(y, out);
            }
            Ltl::Next(x) => {
                out.push_str("X ");
                wrap(x, out);
            }
            Ltl::Eventually(x) => {
                out.push_str("F ");
                wrap(x, out);
            }
            Ltl::Always(x) => {
                out.push_str("G ");
                wrap(x, out);
            }
            Ltl::ActionNext(a, x) => {
                let _ = write!(out, "<{}> ", a);
                wrap(x, out);
            }
        }
    }
    let mut s = String::new();
    go(f, &mut s);
    s
}
