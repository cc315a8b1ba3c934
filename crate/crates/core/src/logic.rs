//! Core syntax of first-order logic with definite descriptions.
//!
//! Terms are variables or descriptions `iota x. phi`; formulas are built from
//! binary atoms, implication, negation and universal quantification. Every
//! other connective is sugar and lives in [`crate::abbrev`].

use std::collections::BTreeSet;
use std::fmt;

/// An object-level variable `v_i`. Variables compare by index only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// The four binary predicate symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pred {
    Mem,
    Pi1,
    Pi2,
    Eq,
}

impl Pred {
    pub const RELATIONS: [Pred; 3] = [Pred::Mem, Pred::Pi1, Pred::Pi2];
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    Iota(Var, Box<Formula>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Term, Pred, Term),
    Implies(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Forall(Var, Box<Formula>),
    /// Opaque purity predicate produced by [`crate::catalog::prestrict`].
    Pure(Term),
    /// Membership in the model's universe, the guard inserted by the
    /// translation into the tagged hierarchy.
    InUniverse(Term),
}

// ---------------------------------------------------------------------------
// Smart constructors for the derived connectives. These are the shapes that
// macro expansion produces.

impl Term {
    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    pub fn iota(v: Var, body: Formula) -> Term {
        Term::Iota(v, Box::new(body))
    }

    pub fn as_var(&self) -> Option<Var> {
        match self {
            Term::Var(v) => Some(*v),
            Term::Iota(..) => None,
        }
    }
}

impl From<Var> for Term {
    fn from(v: Var) -> Term {
        Term::Var(v)
    }
}

impl Formula {
    pub fn atom(l: impl Into<Term>, p: Pred, r: impl Into<Term>) -> Formula {
        Formula::Atom(l.into(), p, r.into())
    }

    pub fn mem(l: impl Into<Term>, r: impl Into<Term>) -> Formula {
        Formula::atom(l, Pred::Mem, r)
    }

    pub fn eq(l: impl Into<Term>, r: impl Into<Term>) -> Formula {
        Formula::atom(l, Pred::Eq, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// `a /\ b` as `!(a -> !b)`.
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::implies(a, Formula::not(b)))
    }

    /// `a \/ b` as `!a -> b`.
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::implies(Formula::not(a), b)
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    pub fn forall(v: Var, body: Formula) -> Formula {
        Formula::Forall(v, Box::new(body))
    }

    /// `exists v. body` as `!forall v. !body`.
    pub fn exists(v: Var, body: Formula) -> Formula {
        Formula::not(Formula::forall(v, Formula::not(body)))
    }

    /// `exists! v. body` as `exists v. body /\ forall w. body[w/v] -> w = v`
    /// with `w` fresh for the body.
    pub fn exists_unique(v: Var, body: Formula) -> Formula {
        let mut avoid = body.all_vars();
        avoid.insert(v);
        let w = fresh_var(&avoid);
        let renamed = substitute(&body, v, &Term::Var(w));
        Formula::exists(
            v,
            Formula::and(
                body,
                Formula::forall(w, Formula::implies(renamed, Formula::eq(w, v))),
            ),
        )
    }

    pub fn conj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut parts: Vec<Formula> = parts.into_iter().collect();
        let mut acc = parts.pop().expect("empty conjunction");
        while let Some(p) = parts.pop() {
            acc = Formula::and(p, acc);
        }
        acc
    }

    pub fn disj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut parts: Vec<Formula> = parts.into_iter().collect();
        let mut acc = parts.pop().expect("empty disjunction");
        while let Some(p) = parts.pop() {
            acc = Formula::or(p, acc);
        }
        acc
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        collect_free_formula(self, &mut Vec::new(), &mut out);
        out
    }

    /// Every variable occurring anywhere, free or bound.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        collect_all_formula(self, &mut out);
        out
    }

    pub fn contains_iota(&self) -> bool {
        match self {
            Formula::Atom(l, _, r) => l.contains_iota() || r.contains_iota(),
            Formula::Implies(a, b) => a.contains_iota() || b.contains_iota(),
            Formula::Not(a) | Formula::Forall(_, a) => a.contains_iota(),
            Formula::Pure(t) | Formula::InUniverse(t) => t.contains_iota(),
        }
    }

    /// Number of nodes; used for cost estimates and generator bounds.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(l, _, r) => 1 + l.size() + r.size(),
            Formula::Implies(a, b) => 1 + a.size() + b.size(),
            Formula::Not(a) | Formula::Forall(_, a) => 1 + a.size(),
            Formula::Pure(t) | Formula::InUniverse(t) => 1 + t.size(),
        }
    }

    pub fn count_iotas(&self) -> usize {
        match self {
            Formula::Atom(l, _, r) => l.count_iotas() + r.count_iotas(),
            Formula::Implies(a, b) => a.count_iotas() + b.count_iotas(),
            Formula::Not(a) | Formula::Forall(_, a) => a.count_iotas(),
            Formula::Pure(t) | Formula::InUniverse(t) => t.count_iotas(),
        }
    }
}

impl Term {
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        collect_free_term(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        collect_all_term(self, &mut out);
        out
    }

    pub fn contains_iota(&self) -> bool {
        matches!(self, Term::Iota(..))
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Iota(_, body) => 1 + body.size(),
        }
    }

    pub fn count_iotas(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Iota(_, body) => 1 + body.count_iotas(),
        }
    }
}

fn collect_free_term(t: &Term, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    match t {
        Term::Var(v) => {
            if !bound.contains(v) {
                out.insert(*v);
            }
        }
        Term::Iota(v, body) => {
            bound.push(*v);
            collect_free_formula(body, bound, out);
            bound.pop();
        }
    }
}

fn collect_free_formula(f: &Formula, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    match f {
        Formula::Atom(l, _, r) => {
            collect_free_term(l, bound, out);
            collect_free_term(r, bound, out);
        }
        Formula::Implies(a, b) => {
            collect_free_formula(a, bound, out);
            collect_free_formula(b, bound, out);
        }
        Formula::Not(a) => collect_free_formula(a, bound, out),
        Formula::Forall(v, body) => {
            bound.push(*v);
            collect_free_formula(body, bound, out);
            bound.pop();
        }
        Formula::Pure(t) | Formula::InUniverse(t) => collect_free_term(t, bound, out),
    }
}

fn collect_all_term(t: &Term, out: &mut BTreeSet<Var>) {
    match t {
        Term::Var(v) => {
            out.insert(*v);
        }
        Term::Iota(v, body) => {
            out.insert(*v);
            collect_all_formula(body, out);
        }
    }
}

fn collect_all_formula(f: &Formula, out: &mut BTreeSet<Var>) {
    match f {
        Formula::Atom(l, _, r) => {
            collect_all_term(l, out);
            collect_all_term(r, out);
        }
        Formula::Implies(a, b) => {
            collect_all_formula(a, out);
            collect_all_formula(b, out);
        }
        Formula::Not(a) => collect_all_formula(a, out),
        Formula::Forall(v, body) => {
            out.insert(*v);
            collect_all_formula(body, out);
        }
        Formula::Pure(t) | Formula::InUniverse(t) => collect_all_term(t, out),
    }
}

/// Smallest variable index not in `avoid`.
pub fn fresh_var(avoid: &BTreeSet<Var>) -> Var {
    let mut i = 0;
    for v in avoid {
        if v.0 == i {
            i += 1;
        } else if v.0 > i {
            break;
        }
    }
    Var(i)
}

/// Capture-avoiding substitution of `t` for the free occurrences of `v`.
///
/// A binder is renamed only when it would capture a free variable of `t`;
/// the replacement is the smallest index occurring nowhere in `f` or `t`.
pub fn substitute(f: &Formula, v: Var, t: &Term) -> Formula {
    let tfree = t.free_vars();
    let mut avoid = f.all_vars();
    avoid.extend(t.all_vars());
    avoid.insert(v);
    Subst {
        var: v,
        term: t,
        term_free: &tfree,
        avoid,
    }
    .formula(f)
}

pub fn substitute_term(target: &Term, v: Var, t: &Term) -> Term {
    let tfree = t.free_vars();
    let mut avoid = target.all_vars();
    avoid.extend(t.all_vars());
    avoid.insert(v);
    Subst {
        var: v,
        term: t,
        term_free: &tfree,
        avoid,
    }
    .term(target)
}

struct Subst<'a> {
    var: Var,
    term: &'a Term,
    term_free: &'a BTreeSet<Var>,
    avoid: BTreeSet<Var>,
}

impl Subst<'_> {
    fn term(&mut self, t: &Term) -> Term {
        match t {
            Term::Var(x) if *x == self.var => self.term.clone(),
            Term::Var(x) => Term::Var(*x),
            Term::Iota(x, body) => {
                let (x, body) = self.binder(*x, body);
                Term::Iota(x, Box::new(body))
            }
        }
    }

    fn formula(&mut self, f: &Formula) -> Formula {
        match f {
            Formula::Atom(l, p, r) => Formula::Atom(self.term(l), *p, self.term(r)),
            Formula::Implies(a, b) => Formula::implies(self.formula(a), self.formula(b)),
            Formula::Not(a) => Formula::not(self.formula(a)),
            Formula::Forall(x, body) => {
                let (x, body) = self.binder(*x, body);
                Formula::forall(x, body)
            }
            Formula::Pure(t) => Formula::Pure(self.term(t)),
            Formula::InUniverse(t) => Formula::InUniverse(self.term(t)),
        }
    }

    fn binder(&mut self, x: Var, body: &Formula) -> (Var, Formula) {
        if x == self.var || !body.free_vars().contains(&self.var) {
            return (x, body.clone());
        }
        if self.term_free.contains(&x) {
            let y = fresh_var(&self.avoid);
            self.avoid.insert(y);
            let renamed = rename_free(body, x, y);
            (y, self.formula(&renamed))
        } else {
            (x, self.formula(body))
        }
    }
}

/// Renames free occurrences of `from` to `to`, assuming `to` occurs nowhere
/// in `f`.
fn rename_free(f: &Formula, from: Var, to: Var) -> Formula {
    match f {
        Formula::Atom(l, p, r) => Formula::Atom(
            rename_free_term(l, from, to),
            *p,
            rename_free_term(r, from, to),
        ),
        Formula::Implies(a, b) => {
            Formula::implies(rename_free(a, from, to), rename_free(b, from, to))
        }
        Formula::Not(a) => Formula::not(rename_free(a, from, to)),
        Formula::Forall(x, _) if *x == from => f.clone(),
        Formula::Forall(x, body) => Formula::forall(*x, rename_free(body, from, to)),
        Formula::Pure(t) => Formula::Pure(rename_free_term(t, from, to)),
        Formula::InUniverse(t) => Formula::InUniverse(rename_free_term(t, from, to)),
    }
}

fn rename_free_term(t: &Term, from: Var, to: Var) -> Term {
    match t {
        Term::Var(x) if *x == from => Term::Var(to),
        Term::Var(x) => Term::Var(*x),
        Term::Iota(x, _) if *x == from => t.clone(),
        Term::Iota(x, body) => Term::Iota(*x, Box::new(rename_free(body, from, to))),
    }
}

// ---------------------------------------------------------------------------
// Alpha equivalence.

/// Binding stack pairing the binders of two terms being compared.
#[derive(Default)]
struct AlphaScope {
    left: Vec<Var>,
    right: Vec<Var>,
}

impl AlphaScope {
    fn same(&self, a: Var, b: Var) -> bool {
        let da = self.left.iter().rposition(|x| *x == a);
        let db = self.right.iter().rposition(|x| *x == b);
        match (da, db) {
            (Some(i), Some(j)) => i == j,
            (None, None) => a == b,
            _ => false,
        }
    }
}

/// True iff `a` and `b` differ only in the names of bound variables.
pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    alpha_formula(a, b, &mut AlphaScope::default())
}

pub fn alpha_eq_term(a: &Term, b: &Term) -> bool {
    alpha_term(a, b, &mut AlphaScope::default())
}

fn alpha_term(a: &Term, b: &Term, s: &mut AlphaScope) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => s.same(*x, *y),
        (Term::Iota(x, fa), Term::Iota(y, fb)) => {
            s.left.push(*x);
            s.right.push(*y);
            let r = alpha_formula(fa, fb, s);
            s.left.pop();
            s.right.pop();
            r
        }
        _ => false,
    }
}

fn alpha_formula(a: &Formula, b: &Formula, s: &mut AlphaScope) -> bool {
    match (a, b) {
        (Formula::Atom(l1, p1, r1), Formula::Atom(l2, p2, r2)) => {
            p1 == p2 && alpha_term(l1, l2, s) && alpha_term(r1, r2, s)
        }
        (Formula::Implies(a1, b1), Formula::Implies(a2, b2)) => {
            alpha_formula(a1, a2, s) && alpha_formula(b1, b2, s)
        }
        (Formula::Not(x), Formula::Not(y)) => alpha_formula(x, y, s),
        (Formula::Forall(x, fa), Formula::Forall(y, fb)) => {
            s.left.push(*x);
            s.right.push(*y);
            let r = alpha_formula(fa, fb, s);
            s.left.pop();
            s.right.pop();
            r
        }
        (Formula::Pure(x), Formula::Pure(y)) => alpha_term(x, y, s),
        (Formula::InUniverse(x), Formula::InUniverse(y)) => alpha_term(x, y, s),
        _ => false,
    }
}

/// Renames every binder to a canonical index so that alpha-equivalent
/// formulas become structurally equal. Binders are numbered by nesting depth
/// starting above the largest free variable.
pub fn canonicalize(f: &Formula) -> Formula {
    let base = f.free_vars().iter().map(|v| v.0 + 1).max().unwrap_or(0);
    canon_formula(f, &mut Vec::new(), base)
}

fn canon_lookup(v: Var, scope: &[(Var, Var)]) -> Var {
    scope
        .iter()
        .rev()
        .find(|(from, _)| *from == v)
        .map(|(_, to)| *to)
        .unwrap_or(v)
}

fn canon_term(t: &Term, scope: &mut Vec<(Var, Var)>, base: u32) -> Term {
    match t {
        Term::Var(v) => Term::Var(canon_lookup(*v, scope)),
        Term::Iota(v, body) => {
            let to = Var(base + scope.len() as u32);
            scope.push((*v, to));
            let body = canon_formula(body, scope, base);
            scope.pop();
            Term::Iota(to, Box::new(body))
        }
    }
}

fn canon_formula(f: &Formula, scope: &mut Vec<(Var, Var)>, base: u32) -> Formula {
    match f {
        Formula::Atom(l, p, r) => {
            Formula::Atom(canon_term(l, scope, base), *p, canon_term(r, scope, base))
        }
        Formula::Implies(a, b) => {
            Formula::implies(canon_formula(a, scope, base), canon_formula(b, scope, base))
        }
        Formula::Not(a) => Formula::not(canon_formula(a, scope, base)),
        Formula::Forall(v, body) => {
            let to = Var(base + scope.len() as u32);
            scope.push((*v, to));
            let body = canon_formula(body, scope, base);
            scope.pop();
            Formula::forall(to, body)
        }
        Formula::Pure(t) => Formula::Pure(canon_term(t, scope, base)),
        Formula::InUniverse(t) => Formula::InUniverse(canon_term(t, scope, base)),
    }
}

// ---------------------------------------------------------------------------
// Definite-description elimination.

/// Removes every description, innermost-leftmost, by rewriting
/// `(iota x. phi) ~ Y` to `(exists x. x ~ Y /\ phi) /\ exists! x. phi`
/// (and the mirrored rule for the right argument). Unary atoms are treated
/// the same way.
pub fn eliminate_iota(f: &Formula) -> Formula {
    match f {
        Formula::Atom(l, p, r) => {
            let l = eliminate_in_term(l);
            let r = eliminate_in_term(r);
            match (&l, &r) {
                (Term::Iota(x, phi), _) => {
                    let (x, phi) = avoid_binder(*x, phi, &r.free_vars());
                    let inner = Formula::Atom(Term::Var(x), *p, r.clone());
                    let witness = Formula::exists(x, Formula::and(inner, phi.clone()));
                    eliminate_iota(&Formula::and(witness, Formula::exists_unique(x, phi)))
                }
                (_, Term::Iota(y, psi)) => {
                    let (y, psi) = avoid_binder(*y, psi, &l.free_vars());
                    let inner = Formula::Atom(l.clone(), *p, Term::Var(y));
                    let witness = Formula::exists(y, Formula::and(inner, psi.clone()));
                    Formula::and(witness, Formula::exists_unique(y, psi))
                }
                _ => Formula::Atom(l, *p, r),
            }
        }
        Formula::Implies(a, b) => Formula::implies(eliminate_iota(a), eliminate_iota(b)),
        Formula::Not(a) => Formula::not(eliminate_iota(a)),
        Formula::Forall(v, body) => Formula::forall(*v, eliminate_iota(body)),
        Formula::Pure(t) => eliminate_unary(t, Formula::Pure),
        Formula::InUniverse(t) => eliminate_unary(t, Formula::InUniverse),
    }
}

fn eliminate_unary(t: &Term, wrap: fn(Term) -> Formula) -> Formula {
    match eliminate_in_term(t) {
        Term::Iota(x, phi) => {
            let witness = Formula::exists(x, Formula::and(wrap(Term::Var(x)), (*phi).clone()));
            Formula::and(witness, Formula::exists_unique(x, *phi))
        }
        v => wrap(v),
    }
}

fn eliminate_in_term(t: &Term) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::Iota(x, body) => Term::Iota(*x, Box::new(eliminate_iota(body))),
    }
}

/// Renames binder `x` of `body` if it occurs in `clash`.
fn avoid_binder(x: Var, body: &Formula, clash: &BTreeSet<Var>) -> (Var, Formula) {
    if !clash.contains(&x) {
        return (x, body.clone());
    }
    let mut avoid = body.all_vars();
    avoid.extend(clash.iter().copied());
    avoid.insert(x);
    let y = fresh_var(&avoid);
    (y, substitute(body, x, &Term::Var(y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> Var {
        Var(i)
    }

    #[test]
    fn free_vars_examples() {
        let f = Formula::mem(v(0), v(1));
        assert_eq!(f.free_vars(), [v(0), v(1)].into_iter().collect());
        let g = Formula::forall(v(0), Formula::mem(v(0), v(1)));
        assert_eq!(g.free_vars(), [v(1)].into_iter().collect());
        let t = Term::iota(v(0), Formula::eq(v(0), v(0)));
        assert!(t.free_vars().is_empty());
    }

    #[test]
    fn substitute_examples() {
        let f = Formula::mem(v(0), v(1));
        assert_eq!(substitute(&f, v(0), &v(2).into()), Formula::mem(v(2), v(1)));

        let g = Formula::forall(v(0), Formula::mem(v(0), v(1)));
        let got = substitute(&g, v(1), &v(0).into());
        assert_eq!(got, Formula::forall(v(2), Formula::mem(v(2), v(0))));

        let h = Formula::forall(v(0), Formula::eq(v(0), v(0)));
        assert_eq!(substitute(&h, v(5), &v(6).into()), h);
    }

    #[test]
    fn alpha_examples() {
        let a = Formula::forall(v(7), Formula::forall(v(7), Formula::mem(v(7), v(7))));
        let b = Formula::forall(v(0), Formula::forall(v(1), Formula::mem(v(1), v(1))));
        assert!(alpha_eq(&a, &b));
        assert!(!alpha_eq(
            &Formula::mem(v(0), v(1)),
            &Formula::mem(v(1), v(0))
        ));
        assert!(alpha_eq(&a, &a));
        // a bound variable never matches a free one
        let c = Formula::forall(v(0), Formula::mem(v(0), v(1)));
        let d = Formula::forall(v(1), Formula::mem(v(1), v(1)));
        assert!(!alpha_eq(&c, &d));
    }

    #[test]
    fn canonical_form_agrees_with_alpha() {
        let a = Formula::forall(v(7), Formula::forall(v(7), Formula::mem(v(7), v(7))));
        let b = Formula::forall(v(0), Formula::forall(v(1), Formula::mem(v(1), v(1))));
        assert_eq!(canonicalize(&a), canonicalize(&b));
    }

    #[test]
    fn iota_rule_instance() {
        // ((iota v0. v0 in v1) = v2)
        let t = Term::iota(v(0), Formula::mem(v(0), v(1)));
        let f = Formula::Atom(t, Pred::Eq, v(2).into());
        let got = eliminate_iota(&f);
        let phi = Formula::mem(v(0), v(1));
        let expected = Formula::and(
            Formula::exists(v(0), Formula::and(Formula::eq(v(0), v(2)), phi.clone())),
            Formula::exists_unique(v(0), phi),
        );
        assert!(alpha_eq(&got, &expected));
        assert!(!got.contains_iota());
    }

    #[test]
    fn iota_free_input_is_fixed_point() {
        let f = Formula::forall(
            v(0),
            Formula::implies(Formula::mem(v(0), v(1)), Formula::eq(v(1), v(0))),
        );
        assert_eq!(eliminate_iota(&f), f);
    }

    #[test]
    fn iota_binder_renamed_when_clashing() {
        // (iota v2. v2 in v1) = v2 : the binder must not capture the right side.
        let t = Term::iota(v(2), Formula::mem(v(2), v(1)));
        let f = Formula::Atom(t, Pred::Eq, v(2).into());
        let got = eliminate_iota(&f);
        assert_eq!(got.free_vars(), [v(1), v(2)].into_iter().collect());
    }

    #[test]
    fn exists_unique_shape() {
        let f = Formula::exists_unique(v(0), Formula::mem(v(0), v(1)));
        assert_eq!(f.free_vars(), [v(1)].into_iter().collect());
    }

    #[test]
    fn fresh_skips_used() {
        let s: BTreeSet<Var> = [v(0), v(1), v(3)].into_iter().collect();
        assert_eq!(fresh_var(&s), v(2));
        assert_eq!(fresh_var(&BTreeSet::new()), v(0));
    }
}
