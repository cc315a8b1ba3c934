//! Evaluation of core formulas over finite structures, and the translation
//! of formulas into the tagged hierarchy.
//!
//! A description `iota x. phi` denotes the unique satisfier of `phi` or the
//! undefined value; every atom with an undefined argument is false,
//! including equality.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::hf::{self, HfSet};
use crate::hierarchy::{Tagged, WUniverse};
use crate::logic::{Formula, Pred, Term, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable {0} is unbound")]
    Unbound(Var),
    #[error("purity marker cannot be evaluated over {0}")]
    PurityUnavailable(String),
    #[error("{0} is not in the domain of {1}")]
    NotInDomain(HfSet, String),
    #[error("von Neumann structure V_{0} is too large (limit 4)")]
    VTooDeep(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StructureName {
    W(u32),
    V(u32),
    Custom(String),
}

impl fmt::Display for StructureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureName::W(n) => write!(f, "W({n})"),
            StructureName::V(n) => write!(f, "V({n})"),
            StructureName::Custom(s) => write!(f, "{s}"),
        }
    }
}

type Table = Vec<Vec<u32>>;

/// A finite interpretation of the three non-logical predicates.
///
/// Domain elements are addressed by index. For every relation the
/// structure stores, per element `x`, the sorted left arguments `a` with
/// `a ~ x` and, per element `a`, the sorted right arguments.
#[derive(Clone, Debug)]
pub struct Structure {
    name: StructureName,
    domain: Vec<HfSet>,
    index: HashMap<HfSet, u32>,
    preds: [Table; 3],
    succs: [Table; 3],
    purity: Option<Vec<bool>>,
    /// Cumulative stage boundaries, when the domain is a hierarchy stage.
    tiers: Vec<usize>,
    by_members: OnceLock<HashMap<Vec<u32>, Vec<u32>>>,
}

fn rel_slot(p: Pred) -> usize {
    match p {
        Pred::Mem => 0,
        Pred::Pi1 => 1,
        Pred::Pi2 => 2,
        Pred::Eq => unreachable!("equality is not stored"),
    }
}

impl Structure {
    fn assemble(
        name: StructureName,
        domain: Vec<HfSet>,
        preds: [Table; 3],
        purity: Option<Vec<bool>>,
        tiers: Vec<usize>,
    ) -> Structure {
        let n = domain.len();
        let succs = preds.each_ref().map(|table| {
            let mut out: Table = vec![Vec::new(); n];
            for (x, lefts) in table.iter().enumerate() {
                for &a in lefts {
                    out[a as usize].push(x as u32);
                }
            }
            out
        });
        let index = domain
            .iter()
            .enumerate()
            .map(|(i, x)| (*x, i as u32))
            .collect();
        Structure {
            name,
            domain,
            index,
            preds,
            succs,
            purity,
            tiers,
            by_members: OnceLock::new(),
        }
    }

    /// The model structure on `W_N`: the hatted relations.
    pub fn w(u: &WUniverse) -> Structure {
        let n = u.members().len();
        let mut preds: [Table; 3] = [
            vec![Vec::new(); n],
            vec![Vec::new(); n],
            vec![Vec::new(); n],
        ];
        for i in 0..n as u32 {
            match u.kind_at(i) {
                Tagged::Set(contents) => {
                    let mut m: Vec<u32> = contents
                        .elems()
                        .iter()
                        .map(|a| u.index_of(*a).expect("stages are downward closed"))
                        .collect();
                    m.sort_unstable();
                    preds[0][i as usize] = m;
                }
                Tagged::Pair(a, b) => {
                    preds[1][i as usize] = vec![u.index_of(a).expect("stages are downward closed")];
                    preds[2][i as usize] = vec![u.index_of(b).expect("stages are downward closed")];
                }
            }
        }
        Structure::assemble(
            StructureName::W(u.depth()),
            u.members().to_vec(),
            preds,
            Some(u.purity_table()),
            u.tier_sizes().to_vec(),
        )
    }

    /// `V_n` with native membership; the projections are the Kuratowski
    /// abbreviations `a π1 q := ∀x∈q. a∈x` and `b π2 q := ∃!x∈q. b∈x`.
    pub fn v(n: u32) -> Result<Structure, EvalError> {
        if n > 4 {
            return Err(EvalError::VTooDeep(n));
        }
        let domain = hf::v_tier(n).expect("n <= 4");
        let tiers = (0..=n)
            .map(|k| hf::v_tier(k).expect("small").len())
            .collect();
        let index: HashMap<HfSet, u32> = domain
            .iter()
            .enumerate()
            .map(|(i, x)| (*x, i as u32))
            .collect();
        let all: Vec<u32> = (0..domain.len() as u32).collect();
        let mut preds: [Table; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for x in &domain {
            let members: Vec<Vec<u32>> = x
                .elems()
                .iter()
                .map(|y| {
                    let mut m: Vec<u32> = y.elems().iter().map(|a| index[a]).collect();
                    m.sort_unstable();
                    m
                })
                .collect();
            let mut own: Vec<u32> = x.elems().iter().map(|a| index[a]).collect();
            own.sort_unstable();
            // a pi1 x: a lies in every member of x (vacuous for the empty set)
            let first = match members.split_first() {
                None => all.clone(),
                Some((head, rest)) => head
                    .iter()
                    .copied()
                    .filter(|a| rest.iter().all(|m| m.binary_search(a).is_ok()))
                    .collect(),
            };
            let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
            for m in &members {
                for &a in m {
                    *counts.entry(a).or_default() += 1;
                }
            }
            let second = counts
                .into_iter()
                .filter(|&(_, c)| c == 1)
                .map(|(a, _)| a)
                .collect();
            preds[0].push(own);
            preds[1].push(first);
            preds[2].push(second);
        }
        Ok(Structure::assemble(
            StructureName::V(n),
            domain,
            preds,
            None,
            tiers,
        ))
    }

    /// A structure whose relations are given by a decision procedure.
    pub fn from_relation_fn(
        name: StructureName,
        domain: Vec<HfSet>,
        rel: impl Fn(Pred, HfSet, HfSet) -> bool,
    ) -> Structure {
        let n = domain.len();
        let preds = Pred::RELATIONS.map(|p| {
            (0..n)
                .map(|x| {
                    (0..n as u32)
                        .filter(|&a| rel(p, domain[a as usize], domain[x]))
                        .collect()
                })
                .collect()
        });
        Structure::assemble(name, domain, preds, None, vec![0, n])
    }

    /// A structure on `size` anonymous points (the numerals `0..size`) with
    /// relations given as boolean tables indexed `[relation][a][x]`, in the
    /// order membership, first projection, second projection.
    pub fn from_tables(name: &str, size: usize, tables: &[Vec<Vec<bool>>; 3]) -> Structure {
        let domain: Vec<HfSet> = (0..size as u32).map(hf::vn).collect();
        let preds = [0, 1, 2].map(|r| {
            (0..size)
                .map(|x| {
                    (0..size as u32)
                        .filter(|&a| tables[r][a as usize][x])
                        .collect()
                })
                .collect()
        });
        Structure::assemble(
            StructureName::Custom(name.to_string()),
            domain,
            preds,
            None,
            vec![0, size],
        )
    }

    pub fn name(&self) -> &StructureName {
        &self.name
    }

    pub fn domain(&self) -> &[HfSet] {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn value(&self, i: u32) -> HfSet {
        self.domain[i as usize]
    }

    pub fn index_of(&self, x: HfSet) -> Option<u32> {
        self.index.get(&x).copied()
    }

    /// Number of elements of the `k`-th stage when the domain is a stage of
    /// a cumulative hierarchy; stages are domain prefixes.
    pub fn tier_len(&self, k: u32) -> usize {
        let k = (k as usize).min(self.tiers.len() - 1);
        self.tiers[k]
    }

    pub fn depth(&self) -> u32 {
        (self.tiers.len() - 1) as u32
    }

    pub fn holds(&self, p: Pred, a: u32, x: u32) -> bool {
        match p {
            Pred::Eq => a == x,
            _ => self.preds[rel_slot(p)][x as usize]
                .binary_search(&a)
                .is_ok(),
        }
    }

    /// Sorted left arguments related to `x`.
    pub fn predecessors(&self, p: Pred, x: u32) -> &[u32] {
        &self.preds[rel_slot(p)][x as usize]
    }

    /// Sorted right arguments related to `a`.
    pub fn successors(&self, p: Pred, a: u32) -> &[u32] {
        &self.succs[rel_slot(p)][a as usize]
    }

    pub fn max_predecessors(&self, p: Pred) -> usize {
        self.preds[rel_slot(p)]
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    }

    pub fn max_successors(&self, p: Pred) -> usize {
        self.succs[rel_slot(p)]
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    }

    pub fn is_pure(&self, i: u32) -> Option<bool> {
        self.purity.as_ref().map(|t| t[i as usize])
    }

    /// Elements whose members are exactly `members` (sorted indices).
    pub fn with_members(&self, members: &[u32]) -> &[u32] {
        let idx = self.by_members.get_or_init(|| {
            let mut m: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
            for (x, lefts) in self.preds[0].iter().enumerate() {
                m.entry(lefts.clone()).or_default().push(x as u32);
            }
            m
        });
        idx.get(members).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Value of a term: a domain element or undefined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermValue {
    Defined(HfSet),
    Undefined,
}

/// A partial assignment of domain elements to variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    bindings: BTreeMap<Var, HfSet>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn with(mut self, v: Var, x: HfSet) -> Env {
        self.bindings.insert(v, x);
        self
    }

    pub fn bind(&mut self, v: Var, x: HfSet) {
        self.bindings.insert(v, x);
    }

    pub fn get(&self, v: Var) -> Option<HfSet> {
        self.bindings.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, HfSet)> + '_ {
        self.bindings.iter().map(|(v, x)| (*v, *x))
    }
}

pub fn eval_term(t: &Term, s: &Structure, e: &Env) -> Result<TermValue, EvalError> {
    let mut ev = Evaluator::new(s);
    let mut env = ev.load_env(e)?;
    Ok(match ev.term(t, &mut env)? {
        Some(i) => TermValue::Defined(s.value(i)),
        None => TermValue::Undefined,
    })
}

pub fn eval_formula(f: &Formula, s: &Structure, e: &Env) -> Result<bool, EvalError> {
    let mut ev = Evaluator::new(s);
    let mut env = ev.load_env(e)?;
    ev.formula(f, &mut env)
}

/// Index-level environment: slot `v` holds the element bound to `Var(v)`.
pub type Slots = Vec<Option<u32>>;

pub fn get_slot(env: &Slots, v: Var) -> Option<u32> {
    env.get(v.0 as usize).copied().flatten()
}

pub fn set_slot(env: &mut Slots, v: Var, val: Option<u32>) {
    let i = v.0 as usize;
    if env.len() <= i {
        env.resize(i + 1, None);
    }
    env[i] = val;
}

/// Exact evaluator over a [`Structure`].
///
/// In the default mode two shortcuts apply, neither of which changes a
/// result. A quantifier or description whose body can only matter when an
/// atom `v ~ t` or `t ~ v` holds ranges over the related elements of `t`
/// only. A description of the form `iota x. ... forall c. c in x <-> psi`
/// computes the extension of `psi` once and looks candidates up by their
/// members. Descriptions are memoised on the values of their free
/// variables.
pub struct Evaluator<'s> {
    s: &'s Structure,
    narrowing: bool,
    iota_cache: HashMap<Term, IotaMemo>,
}

struct IotaMemo {
    free: Vec<Var>,
    values: HashMap<Vec<u32>, Option<u32>>,
}

impl<'s> Evaluator<'s> {
    pub fn new(s: &'s Structure) -> Evaluator<'s> {
        Evaluator {
            s,
            narrowing: true,
            iota_cache: HashMap::new(),
        }
    }

    /// Plain domain sweeps everywhere.
    pub fn naive(s: &'s Structure) -> Evaluator<'s> {
        Evaluator {
            narrowing: false,
            ..Evaluator::new(s)
        }
    }

    pub fn structure(&self) -> &'s Structure {
        self.s
    }

    pub fn load_env(&self, e: &Env) -> Result<Slots, EvalError> {
        let mut slots = Vec::new();
        for (v, x) in e.iter() {
            let i = self
                .s
                .index_of(x)
                .ok_or_else(|| EvalError::NotInDomain(x, self.s.name.to_string()))?;
            set_slot(&mut slots, v, Some(i));
        }
        Ok(slots)
    }

    pub fn term(&mut self, t: &Term, env: &mut Slots) -> Result<Option<u32>, EvalError> {
        match t {
            Term::Var(v) => get_slot(env, *v).map(Some).ok_or(EvalError::Unbound(*v)),
            Term::Iota(x, body) => {
                if !self.iota_cache.contains_key(t) {
                    let free = t.free_vars().into_iter().collect();
                    self.iota_cache.insert(
                        t.clone(),
                        IotaMemo {
                            free,
                            values: HashMap::new(),
                        },
                    );
                }
                let memo = &self.iota_cache[t];
                let mut key = Vec::with_capacity(memo.free.len());
                for v in &memo.free {
                    key.push(get_slot(env, *v).ok_or(EvalError::Unbound(*v))?);
                }
                if let Some(r) = memo.values.get(&key) {
                    return Ok(*r);
                }
                let r = self.describe(*x, body, env)?;
                self.iota_cache
                    .get_mut(t)
                    .expect("inserted above")
                    .values
                    .insert(key, r);
                Ok(r)
            }
        }
    }

    /// The unique satisfier of `body` for `x`, if there is one.
    fn describe(
        &mut self,
        x: Var,
        body: &Formula,
        env: &mut Slots,
    ) -> Result<Option<u32>, EvalError> {
        let saved = get_slot(env, x);
        let mut found = None;
        let mut count = 0;
        let extensional = if self.narrowing {
            extensional_split(body, x)
        } else {
            None
        };
        if let Some((pattern, rest)) = extensional {
            let members = self.extension(&pattern, env)?;
            let candidates = self.s.with_members(&members).to_vec();
            for a in candidates {
                set_slot(env, x, Some(a));
                if self.conjuncts(&rest, env)? {
                    count += 1;
                    found = Some(a);
                    if count > 1 {
                        break;
                    }
                }
            }
        } else {
            let candidates = self.range(x, body, env)?;
            for a in candidates.iter(self.s.len()) {
                set_slot(env, x, Some(a));
                if self.formula(body, env)? {
                    count += 1;
                    found = Some(a);
                    if count > 1 {
                        break;
                    }
                }
            }
        }
        set_slot(env, x, saved);
        Ok(if count == 1 { found } else { None })
    }

    fn extension(
        &mut self,
        pattern: &Extensional<'_>,
        env: &mut Slots,
    ) -> Result<Vec<u32>, EvalError> {
        let Some(psi) = pattern.psi else {
            return Ok(Vec::new());
        };
        let saved = get_slot(env, pattern.var);
        let mut out = Vec::new();
        for c in 0..self.s.len() as u32 {
            set_slot(env, pattern.var, Some(c));
            if self.formula(psi, env)? {
                out.push(c);
            }
        }
        set_slot(env, pattern.var, saved);
        Ok(out)
    }

    fn conjuncts(&mut self, parts: &[Conjunct<'_>], env: &mut Slots) -> Result<bool, EvalError> {
        for part in parts {
            let v = match part {
                Conjunct::Pos(f) => self.formula(f, env)?,
                Conjunct::Neg(f) => !self.formula(f, env)?,
            };
            if !v {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn formula(&mut self, f: &Formula, env: &mut Slots) -> Result<bool, EvalError> {
        match f {
            Formula::Atom(l, p, r) => {
                let (Some(a), Some(x)) = (self.term(l, env)?, self.term(r, env)?) else {
                    return Ok(false);
                };
                Ok(self.s.holds(*p, a, x))
            }
            Formula::Implies(a, b) => Ok(!self.formula(a, env)? || self.formula(b, env)?),
            Formula::Not(a) => Ok(!self.formula(a, env)?),
            Formula::Forall(v, body) => {
                let candidates = self.quantifier_range(*v, body, env)?;
                let saved = get_slot(env, *v);
                let mut result = true;
                for a in candidates.iter(self.s.len()) {
                    set_slot(env, *v, Some(a));
                    if !self.formula(body, env)? {
                        result = false;
                        break;
                    }
                }
                set_slot(env, *v, saved);
                Ok(result)
            }
            Formula::Pure(t) => match self.term(t, env)? {
                Some(i) => self
                    .s
                    .is_pure(i)
                    .ok_or_else(|| EvalError::PurityUnavailable(self.s.name.to_string())),
                None => Ok(false),
            },
            Formula::InUniverse(t) => Ok(self.term(t, env)?.is_some()),
        }
    }

    /// Candidates for a universally quantified `v`: outside them the body
    /// is true.
    pub fn quantifier_range(
        &mut self,
        v: Var,
        body: &Formula,
        env: &mut Slots,
    ) -> Result<Range, EvalError> {
        if !self.narrowing {
            return Ok(Range::All);
        }
        match guard_atom(body, v) {
            Some(atom) => self.candidates_for(atom, env),
            None => Ok(Range::All),
        }
    }

    /// Candidates for a description `iota v. body`: every satisfier is one.
    fn range(&mut self, v: Var, body: &Formula, env: &mut Slots) -> Result<Range, EvalError> {
        if !self.narrowing {
            return Ok(Range::All);
        }
        match necessary_atom(body, v) {
            Some(atom) => self.candidates_for(atom, env),
            None => Ok(Range::All),
        }
    }

    fn candidates_for(&mut self, atom: GuardAtom<'_>, env: &mut Slots) -> Result<Range, EvalError> {
        let GuardAtom {
            pred,
            other,
            var_on_left,
        } = atom;
        // `other` never mentions the quantified variable
        let Some(x) = self.term(other, env)? else {
            return Ok(Range::List(Vec::new()));
        };
        Ok(Range::List(match (pred, var_on_left) {
            (Pred::Eq, _) => vec![x],
            (p, true) => self.s.predecessors(p, x).to_vec(),
            (p, false) => self.s.successors(p, x).to_vec(),
        }))
    }
}

/// A set of candidate indices: the whole domain or an explicit list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Range {
    All,
    List(Vec<u32>),
}

impl Range {
    pub fn iter(&self, n: usize) -> Box<dyn Iterator<Item = u32> + '_> {
        match self {
            Range::All => Box::new(0..n as u32),
            Range::List(v) => Box::new(v.iter().copied()),
        }
    }
}

// ---------------------------------------------------------------------------
// Guard analysis

/// An atom relating a quantified variable to a term `other` that does not
/// mention it.
#[derive(Clone, Copy, Debug)]
pub struct GuardAtom<'a> {
    pub pred: Pred,
    pub other: &'a Term,
    pub var_on_left: bool,
}

fn atom_on(f: &Formula, v: Var) -> Option<GuardAtom<'_>> {
    let Formula::Atom(l, p, r) = f else {
        return None;
    };
    if l.as_var() == Some(v) && !r.free_vars().contains(&v) {
        return Some(GuardAtom {
            pred: *p,
            other: r,
            var_on_left: true,
        });
    }
    if r.as_var() == Some(v) && !l.free_vars().contains(&v) {
        return Some(GuardAtom {
            pred: *p,
            other: l,
            var_on_left: false,
        });
    }
    None
}

/// An atom on `v` that holds whenever `f` holds.
pub fn necessary_atom(f: &Formula, v: Var) -> Option<GuardAtom<'_>> {
    match f {
        Formula::Atom(..) => atom_on(f, v),
        Formula::Not(inner) => match inner.as_ref() {
            // !(a -> b) holds only if a holds and b fails
            Formula::Implies(a, b) => necessary_atom(a, v).or_else(|| sufficient_false(b, v)),
            Formula::Not(g) => necessary_atom(g, v),
            _ => None,
        },
        Formula::Forall(w, body) if *w != v => {
            necessary_atom(body, v).filter(|a| !a.other.free_vars().contains(w))
        }
        _ => None,
    }
}

/// An atom on `v` that holds whenever `f` fails.
fn sufficient_false(f: &Formula, v: Var) -> Option<GuardAtom<'_>> {
    match f {
        Formula::Not(g) => necessary_atom(g, v),
        Formula::Implies(a, b) => necessary_atom(a, v).or_else(|| sufficient_false(b, v)),
        Formula::Forall(w, body) if *w != v => {
            sufficient_false(body, v).filter(|a| !a.other.free_vars().contains(w))
        }
        _ => None,
    }
}

/// An atom on `v` outside of which `f` is true.
pub fn guard_atom(f: &Formula, v: Var) -> Option<GuardAtom<'_>> {
    sufficient_false(f, v)
}

#[derive(Clone, Copy, Debug)]
enum Conjunct<'a> {
    Pos(&'a Formula),
    Neg(&'a Formula),
}

fn push_conjuncts<'a>(f: &'a Formula, out: &mut Vec<Conjunct<'a>>) {
    if let Formula::Not(inner) = f {
        if let Formula::Implies(a, b) = inner.as_ref() {
            push_conjuncts(a, out);
            match b.as_ref() {
                Formula::Not(c) => push_conjuncts(c, out),
                other => out.push(Conjunct::Neg(other)),
            }
            return;
        }
    }
    out.push(Conjunct::Pos(f));
}

/// `forall c. [H(c) ->] (c in x <-> psi)` with `psi` free of `x`, or
/// `forall c. [H(c) ->] !(c in x)` (then `psi` is `None`, the empty
/// extension).
struct Extensional<'a> {
    var: Var,
    psi: Option<&'a Formula>,
}

fn extensional_split(body: &Formula, x: Var) -> Option<(Extensional<'_>, Vec<Conjunct<'_>>)> {
    let mut parts = Vec::new();
    push_conjuncts(body, &mut parts);
    let pos = parts
        .iter()
        .position(|c| matches!(c, Conjunct::Pos(f) if as_extensional(f, x).is_some()))?;
    let Conjunct::Pos(f) = parts.remove(pos) else {
        unreachable!()
    };
    Some((as_extensional(f, x)?, parts))
}

fn as_extensional(f: &Formula, x: Var) -> Option<Extensional<'_>> {
    let Formula::Forall(c, body) = f else {
        return None;
    };
    if *c == x {
        return None;
    }
    let mut inner: &Formula = body;
    if let Formula::Implies(g, rest) = inner {
        if matches!(g.as_ref(), Formula::InUniverse(Term::Var(w)) if w == c) {
            inner = rest;
        }
    }
    let is_mem = |g: &Formula| matches!(g, Formula::Atom(Term::Var(a), Pred::Mem, Term::Var(b)) if a == c && *b == x);
    if let Formula::Not(g) = inner {
        if is_mem(g) {
            return Some(Extensional { var: *c, psi: None });
        }
    }
    // iff(A, B) = !((A -> B) -> !(B -> A))
    let Formula::Not(n) = inner else { return None };
    let Formula::Implies(ab, nba) = n.as_ref() else {
        return None;
    };
    let (Formula::Implies(a, b), Formula::Not(ba)) = (ab.as_ref(), nba.as_ref()) else {
        return None;
    };
    let Formula::Implies(b2, a2) = ba.as_ref() else {
        return None;
    };
    if a != a2 || b != b2 {
        return None;
    }
    let psi: &Formula = if is_mem(a) {
        b
    } else if is_mem(b) {
        a
    } else {
        return None;
    };
    if psi.free_vars().contains(&x) {
        return None;
    }
    Some(Extensional {
        var: *c,
        psi: Some(psi),
    })
}

// ---------------------------------------------------------------------------
// Cost model

/// Rough upper estimate of the atomic evaluations needed for `f` when its
/// leading universal quantifiers range over `outer_len` elements. Follows
/// the evaluator's narrowing and memoisation.
pub fn estimate_cost(f: &Formula, s: &Structure, outer_len: usize) -> f64 {
    let mut est = Estimator { s, iota_total: 0.0 };
    let mut ranges: Vec<(Var, f64)> = Vec::new();
    let top = est.outer(f, outer_len as f64, &mut ranges);
    top + est.iota_total
}

struct Estimator<'s> {
    s: &'s Structure,
    iota_total: f64,
}

impl Estimator<'_> {
    fn outer(&mut self, f: &Formula, outer: f64, ranges: &mut Vec<(Var, f64)>) -> f64 {
        match f {
            Formula::Forall(v, body) => {
                let r = self.guard_size(*v, body).min(outer);
                ranges.push((*v, r));
                let c = r * (1.0 + self.outer(body, outer, ranges));
                ranges.pop();
                c
            }
            Formula::Implies(a, b) => self.formula(a, ranges) + self.outer(b, outer, ranges),
            _ => self.formula(f, ranges),
        }
    }

    fn guard_size(&self, v: Var, body: &Formula) -> f64 {
        match guard_atom(body, v) {
            Some(a) => self.atom_range(a),
            None => self.s.len() as f64,
        }
    }

    fn atom_range(&self, a: GuardAtom<'_>) -> f64 {
        match (a.pred, a.var_on_left) {
            (Pred::Eq, _) => 1.0,
            (p, true) => self.s.max_predecessors(p) as f64,
            (p, false) => self.s.max_successors(p) as f64,
        }
    }

    fn formula(&mut self, f: &Formula, ranges: &mut Vec<(Var, f64)>) -> f64 {
        match f {
            Formula::Atom(l, _, r) => 1.0 + self.term(l, ranges) + self.term(r, ranges),
            Formula::Implies(a, b) => self.formula(a, ranges) + self.formula(b, ranges),
            Formula::Not(a) => self.formula(a, ranges),
            Formula::Forall(v, body) => {
                let r = self.guard_size(*v, body);
                ranges.push((*v, r));
                let c = r * (1.0 + self.formula(body, ranges));
                ranges.pop();
                c
            }
            Formula::Pure(t) | Formula::InUniverse(t) => 1.0 + self.term(t, ranges),
        }
    }

    fn term(&mut self, t: &Term, ranges: &mut [(Var, f64)]) -> f64 {
        let Term::Iota(x, body) = t else { return 0.0 };
        let n = self.s.len() as f64;
        let free = t.free_vars();
        // memoised: one evaluation per combination of free-variable values
        let keys: f64 = ranges
            .iter()
            .enumerate()
            .filter(|(i, (v, _))| free.contains(v) && !ranges[i + 1..].iter().any(|(w, _)| w == v))
            .map(|(_, (_, r))| *r)
            .product();
        let mut inner: Vec<(Var, f64)> = Vec::new();
        let once = match extensional_split(body, *x) {
            Some((pat, rest)) => {
                let psi = pat
                    .psi
                    .map(|p| n * self.formula(p, &mut inner))
                    .unwrap_or(0.0);
                let rest_cost: f64 = rest
                    .iter()
                    .map(|c| match c {
                        Conjunct::Pos(g) | Conjunct::Neg(g) => self.formula(g, &mut inner),
                    })
                    .sum();
                psi + rest_cost
            }
            None => {
                let r = match necessary_atom(body, *x) {
                    Some(a) => self.atom_range(a),
                    None => n,
                };
                r * (1.0 + self.formula(body, &mut inner))
            }
        };
        self.iota_total += keys * once;
        1.0
    }
}

// ---------------------------------------------------------------------------
// Translation into the tagged hierarchy.

/// Relativises every quantifier and description to the model's universe:
/// `(forall x. phi)* = forall x. H(x) -> phi*` and
/// `(iota x. phi)* = iota x. H(x) /\ phi*`. Predicate symbols are kept; a
/// [`Structure::w`] interprets them as the hatted relations.
pub fn star(f: &Formula) -> Formula {
    match f {
        Formula::Atom(l, p, r) => Formula::Atom(star_term(l), *p, star_term(r)),
        Formula::Implies(a, b) => Formula::implies(star(a), star(b)),
        Formula::Not(a) => Formula::not(star(a)),
        Formula::Forall(x, body) => Formula::forall(
            *x,
            Formula::implies(Formula::InUniverse(Term::Var(*x)), star(body)),
        ),
        Formula::Pure(t) => Formula::Pure(star_term(t)),
        Formula::InUniverse(t) => Formula::InUniverse(star_term(t)),
    }
}

pub fn star_term(t: &Term) -> Term {
    match t {
        Term::Var(v) => Term::Var(*v),
        Term::Iota(x, body) => Term::iota(
            *x,
            Formula::and(Formula::InUniverse(Term::Var(*x)), star(body)),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hf::{empty, vn};
    use crate::hierarchy::{build_w, m_set};
    use crate::logic::Formula as F;

    fn v(i: u32) -> Var {
        Var(i)
    }

    fn empty_zf() -> Term {
        // iota x0. forall x1. !(x1 in x0)
        Term::iota(v(0), F::forall(v(1), F::not(F::mem(v(1), v(0)))))
    }

    #[test]
    fn empty_set_in_v2() {
        let s = Structure::v(2).unwrap();
        assert_eq!(
            eval_term(&empty_zf(), &s, &Env::new()).unwrap(),
            TermValue::Defined(empty())
        );
    }

    #[test]
    fn empty_set_in_w3_uses_set_restriction() {
        let u = build_w(3).unwrap();
        let s = Structure::w(&u);
        // unrestricted: every m-pair is also memberless, so undefined
        assert_eq!(
            eval_term(&empty_zf(), &s, &Env::new()).unwrap(),
            TermValue::Undefined
        );
        // iota x0. Set(x0) /\ forall x1. !(x1 in x0), Set(x) = !exists b. b pi1 x
        let set0 = F::not(F::exists(v(2), F::atom(v(2), Pred::Pi1, v(0))));
        let t = Term::iota(
            v(0),
            F::and(set0, F::forall(v(1), F::not(F::mem(v(1), v(0))))),
        );
        assert_eq!(
            eval_term(&t, &s, &Env::new()).unwrap(),
            TermValue::Defined(m_set(empty()))
        );
    }

    #[test]
    fn undefined_is_not_equal_to_itself() {
        let s = Structure::v(2).unwrap();
        let bot = Term::iota(v(0), F::not(F::eq(v(0), v(0))));
        assert_eq!(
            eval_term(&bot, &s, &Env::new()).unwrap(),
            TermValue::Undefined
        );
        let f = F::Atom(bot.clone(), Pred::Eq, bot);
        assert!(!eval_formula(&f, &s, &Env::new()).unwrap());
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let s = Structure::v(1).unwrap();
        assert_eq!(
            eval_formula(&F::mem(v(0), v(0)), &s, &Env::new()),
            Err(EvalError::Unbound(v(0)))
        );
    }

    #[test]
    fn purity_requires_w() {
        let s = Structure::v(1).unwrap();
        let e = Env::new().with(v(0), empty());
        assert!(matches!(
            eval_formula(&F::Pure(v(0).into()), &s, &e),
            Err(EvalError::PurityUnavailable(_))
        ));
    }

    #[test]
    fn star_examples() {
        assert_eq!(star(&F::mem(v(0), v(1))), F::mem(v(0), v(1)));
        let f = F::forall(v(0), F::eq(v(0), v(0)));
        assert_eq!(
            star(&f),
            F::forall(
                v(0),
                F::implies(F::InUniverse(v(0).into()), F::eq(v(0), v(0)))
            )
        );
    }

    #[test]
    fn v_structure_projections_follow_kuratowski() {
        let s = Structure::v(3).unwrap();
        // <0,0> = {{0}} is in V3 and 0 is both its projections
        let q = s.index_of(hf::kpair(vn(0), vn(0))).unwrap();
        let z = s.index_of(vn(0)).unwrap();
        assert!(s.holds(Pred::Pi1, z, q));
        assert!(s.holds(Pred::Pi2, z, q));
    }

    #[test]
    fn narrowing_agrees_with_naive_on_w3() {
        let u = build_w(3).unwrap();
        let s = Structure::w(&u);
        // forall x0. Pair(x0) -> forall x1. !(x1 in x0)
        let pair0 = F::exists(v(2), F::atom(v(2), Pred::Pi1, v(0)));
        let f = F::forall(
            v(0),
            F::implies(pair0, F::forall(v(1), F::not(F::mem(v(1), v(0))))),
        );
        let a = Evaluator::new(&s).formula(&f, &mut Vec::new()).unwrap();
        let b = Evaluator::naive(&s).formula(&f, &mut Vec::new()).unwrap();
        assert!(a && b);
    }

    #[test]
    fn extensional_descriptions_agree_with_naive() {
        let u = build_w(3).unwrap();
        let s = Structure::w(&u);
        // iota x0. forall x1. x1 in x0 <-> (x1 = x2 \/ x1 = x3)
        let t = Term::iota(
            v(0),
            F::forall(
                v(1),
                F::iff(
                    F::mem(v(1), v(0)),
                    F::or(F::eq(v(1), v(2)), F::eq(v(1), v(3))),
                ),
            ),
        );
        for a in 0..s.len() as u32 {
            for b in 0..s.len() as u32 {
                let mut env = Vec::new();
                set_slot(&mut env, v(2), Some(a));
                set_slot(&mut env, v(3), Some(b));
                let fast = Evaluator::new(&s).term(&t, &mut env.clone()).unwrap();
                let slow = Evaluator::naive(&s).term(&t, &mut env).unwrap();
                assert_eq!(fast, slow);
            }
        }
    }

    #[test]
    fn successors_invert_predecessors() {
        let u = build_w(3).unwrap();
        let s = Structure::w(&u);
        for p in Pred::RELATIONS {
            for x in 0..s.len() as u32 {
                for &a in s.predecessors(p, x) {
                    assert!(s.successors(p, a).contains(&x));
                }
            }
        }
        // memberless: the empty m-set and all nine m-pairs
        assert_eq!(s.with_members(&[]).len(), 10);
    }

    #[test]
    fn cost_grows_with_quantifier_depth() {
        let s = Structure::v(3).unwrap();
        let one = F::forall(v(0), F::eq(v(0), v(0)));
        let two = F::forall(v(1), one.clone());
        assert!(estimate_cost(&two, &s, s.len()) > estimate_cost(&one, &s, s.len()));
    }
}
