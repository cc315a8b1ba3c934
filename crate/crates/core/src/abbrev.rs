//! Hygienic expansion of surface sugar into core formulas.
//!
//! Two dialects share the connective sugar and the unordered-pair family of
//! macros. In the pairs dialect, sets are the objects without a first
//! projection, and union, power set, empty set and separation are
//! descriptions restricted to sets.
//!
//! Every variable a template binds is chosen outside all variables of the
//! whole input, so no expansion can capture or leak a variable.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::logic::{substitute, Formula, Pred, Term, Var};
use crate::syntax::{self, FormulaMacro, Quant, Restrict, SFormula, STerm, SyntaxError, TermMacro};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Dialect {
    #[serde(rename = "zf")]
    Zf,
    #[serde(rename = "zfp")]
    Zfp,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Zf => "zf",
            Dialect::Zfp => "zfp",
        })
    }
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Dialect, String> {
        match s.to_ascii_lowercase().as_str() {
            "zf" => Ok(Dialect::Zf),
            "zfp" => Ok(Dialect::Zfp),
            _ => Err(format!("unknown dialect {s:?} (expected zf or zfp)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExpandError {
    #[error("{name} is not available in the {dialect} dialect")]
    DialectMismatch { name: String, dialect: Dialect },
    #[error("schematic formula ${0} was never instantiated")]
    UnfilledPlaceholder(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MacroKind {
    Term,
    Formula,
    Binder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MacroEntry {
    pub name: &'static str,
    /// `None` for variadic macros.
    pub arity: Option<usize>,
    pub kind: MacroKind,
}

/// The macros a dialect accepts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MacroTable {
    pub dialect: Dialect,
    pub entries: Vec<MacroEntry>,
}

pub fn macro_table(dialect: Dialect) -> MacroTable {
    let mut entries: Vec<MacroEntry> = TermMacro::ALL
        .into_iter()
        .filter(|m| term_macro_allowed(*m, dialect))
        .map(|m| MacroEntry {
            name: m.name(),
            arity: m.arity(),
            kind: MacroKind::Term,
        })
        .collect();
    entries.push(MacroEntry {
        name: "Sep",
        arity: Some(2),
        kind: MacroKind::Binder,
    });
    entries.extend(
        FormulaMacro::ALL
            .into_iter()
            .filter(|m| formula_macro_allowed(*m, dialect))
            .map(|m| MacroEntry {
                name: m.name(),
                arity: Some(m.arity()),
                kind: MacroKind::Formula,
            }),
    );
    if dialect == Dialect::Zfp {
        for name in [
            "forall_set",
            "exists_set",
            "existsu_set",
            "iota_set",
            "forall_pair",
            "exists_pair",
            "existsu_pair",
            "iota_pair",
        ] {
            entries.push(MacroEntry {
                name,
                arity: Some(1),
                kind: MacroKind::Binder,
            });
        }
    }
    MacroTable { dialect, entries }
}

fn term_macro_allowed(m: TermMacro, d: Dialect) -> bool {
    match m {
        TermMacro::KPair => d == Dialect::Zf,
        TermMacro::PPair => d == Dialect::Zfp,
        _ => true,
    }
}

fn formula_macro_allowed(m: FormulaMacro, d: Dialect) -> bool {
    match m {
        FormulaMacro::KPi1 | FormulaMacro::KPi2 => d == Dialect::Zf,
        FormulaMacro::Set | FormulaMacro::Pair => d == Dialect::Zfp,
        _ => true,
    }
}

/// Expands every abbreviation and derived connective.
pub fn expand(f: &SFormula, dialect: Dialect) -> Result<Formula, ExpandError> {
    let mut ex = Expander::new(dialect);
    ex.reserve_formula(f);
    ex.formula(f)
}

pub fn expand_term(t: &STerm, dialect: Dialect) -> Result<Term, ExpandError> {
    let mut ex = Expander::new(dialect);
    ex.reserve_term(t);
    ex.term(t)
}

/// Parses and expands in one step.
pub fn expand_str(src: &str, dialect: Dialect) -> Result<Formula, ExpandError> {
    expand(&syntax::parse_formula(src)?, dialect)
}

pub fn expand_term_str(src: &str, dialect: Dialect) -> Result<Term, ExpandError> {
    expand_term(&syntax::parse_term(src)?, dialect)
}

struct Expander {
    dialect: Dialect,
    used: BTreeSet<Var>,
    next: u32,
}

impl Expander {
    fn new(dialect: Dialect) -> Expander {
        Expander {
            dialect,
            used: BTreeSet::new(),
            next: 0,
        }
    }

    fn fresh(&mut self) -> Var {
        while self.used.contains(&Var(self.next)) {
            self.next += 1;
        }
        let v = Var(self.next);
        self.used.insert(v);
        v
    }

    fn reserve_formula(&mut self, f: &SFormula) {
        match f {
            SFormula::Atom(l, _, r) | SFormula::Neq(l, r) => {
                self.reserve_term(l);
                self.reserve_term(r);
            }
            SFormula::Pure(t) | SFormula::InUniverse(t) => self.reserve_term(t),
            SFormula::Not(a) => self.reserve_formula(a),
            SFormula::And(a, b)
            | SFormula::Or(a, b)
            | SFormula::Implies(a, b)
            | SFormula::Iff(a, b) => {
                self.reserve_formula(a);
                self.reserve_formula(b);
            }
            SFormula::Quant {
                var, bound, body, ..
            } => {
                self.used.insert(*var);
                if let Some(t) = bound {
                    self.reserve_term(t);
                }
                self.reserve_formula(body);
            }
            SFormula::Call { args, .. } => args.iter().for_each(|t| self.reserve_term(t)),
            SFormula::Placeholder(_) => {}
            SFormula::Core(c) => self.used.extend(c.all_vars()),
        }
    }

    fn reserve_term(&mut self, t: &STerm) {
        match t {
            STerm::Var(v) => {
                self.used.insert(*v);
            }
            STerm::Iota { var, body, .. } => {
                self.used.insert(*var);
                self.reserve_formula(body);
            }
            STerm::Call { args, .. } => args.iter().for_each(|a| self.reserve_term(a)),
            STerm::Sep { var, domain, body } => {
                self.used.insert(*var);
                self.reserve_term(domain);
                self.reserve_formula(body);
            }
        }
    }

    fn refuse(&self, name: &str) -> ExpandError {
        ExpandError::DialectMismatch {
            name: name.to_string(),
            dialect: self.dialect,
        }
    }

    fn formula(&mut self, f: &SFormula) -> Result<Formula, ExpandError> {
        Ok(match f {
            SFormula::Atom(l, p, r) => Formula::Atom(self.term(l)?, *p, self.term(r)?),
            SFormula::Neq(l, r) => Formula::not(Formula::eq(self.term(l)?, self.term(r)?)),
            SFormula::Pure(t) => Formula::Pure(self.term(t)?),
            SFormula::InUniverse(t) => Formula::InUniverse(self.term(t)?),
            SFormula::Not(a) => Formula::not(self.formula(a)?),
            SFormula::And(a, b) => Formula::and(self.formula(a)?, self.formula(b)?),
            SFormula::Or(a, b) => Formula::or(self.formula(a)?, self.formula(b)?),
            SFormula::Implies(a, b) => Formula::implies(self.formula(a)?, self.formula(b)?),
            SFormula::Iff(a, b) => Formula::iff(self.formula(a)?, self.formula(b)?),
            SFormula::Quant {
                q,
                restrict,
                var,
                bound,
                body,
            } => {
                let bound = bound.as_deref().map(|t| self.term(t)).transpose()?;
                let body = self.formula(body)?;
                self.quantifier(*q, *restrict, *var, bound, body)?
            }
            SFormula::Call { name, args } => {
                if !formula_macro_allowed(*name, self.dialect) {
                    return Err(self.refuse(name.name()));
                }
                let args = args
                    .iter()
                    .map(|t| self.term(t))
                    .collect::<Result<Vec<_>, _>>()?;
                self.formula_macro(*name, args)
            }
            SFormula::Placeholder(n) => return Err(ExpandError::UnfilledPlaceholder(n.clone())),
            SFormula::Core(c) => c.clone(),
        })
    }

    fn term(&mut self, t: &STerm) -> Result<Term, ExpandError> {
        Ok(match t {
            STerm::Var(v) => Term::Var(*v),
            STerm::Iota {
                restrict,
                var,
                body,
            } => {
                let body = self.formula(body)?;
                let guard = self.restriction(*restrict, *var)?;
                Term::iota(
                    *var,
                    match guard {
                        Some(g) => Formula::and(g, body),
                        None => body,
                    },
                )
            }
            STerm::Call { name, args } => {
                if !term_macro_allowed(*name, self.dialect) {
                    return Err(self.refuse(name.name()));
                }
                let args = args
                    .iter()
                    .map(|a| self.term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.term_macro(*name, args)
            }
            STerm::Sep { var, domain, body } => {
                let domain = self.term(domain)?;
                let body = self.formula(body)?;
                self.separation(*var, domain, body)
            }
        })
    }

    fn restriction(&mut self, r: Restrict, v: Var) -> Result<Option<Formula>, ExpandError> {
        match r {
            Restrict::None => Ok(None),
            _ if self.dialect == Dialect::Zf => Err(self.refuse(match r {
                Restrict::Set => "Set-restricted binder",
                _ => "Pair-restricted binder",
            })),
            Restrict::Set => Ok(Some(self.is_set(Term::Var(v)))),
            Restrict::Pair => Ok(Some(self.is_pair(Term::Var(v)))),
        }
    }

    fn quantifier(
        &mut self,
        q: Quant,
        restrict: Restrict,
        var: Var,
        bound: Option<Term>,
        body: Formula,
    ) -> Result<Formula, ExpandError> {
        // the bound lies outside the binder's scope
        let (var, body) = match &bound {
            Some(t) if t.free_vars().contains(&var) => {
                let w = self.fresh();
                (w, substitute(&body, var, &Term::Var(w)))
            }
            _ => (var, body),
        };
        let guard = self.restriction(restrict, var)?;
        let mut conds: Vec<Formula> = guard.into_iter().collect();
        if let Some(t) = bound {
            conds.push(Formula::mem(var, t));
        }
        Ok(match q {
            Quant::Forall => {
                let inner = conds
                    .into_iter()
                    .rev()
                    .fold(body, |acc, c| Formula::implies(c, acc));
                Formula::forall(var, inner)
            }
            Quant::Exists => Formula::exists(var, nest_and(conds, body)),
            Quant::ExistsUnique => Formula::exists_unique(var, nest_and(conds, body)),
        })
    }

    // --- named sets -------------------------------------------------------

    fn is_pair(&mut self, q: Term) -> Formula {
        let b = self.fresh();
        Formula::exists(b, Formula::atom(b, Pred::Pi1, q))
    }

    fn is_set(&mut self, x: Term) -> Formula {
        Formula::not(self.is_pair(x))
    }

    /// `iota` in the first dialect, `iota_set` in the second.
    fn set_iota(&mut self, v: Var, body: Formula) -> Term {
        match self.dialect {
            Dialect::Zf => Term::iota(v, body),
            Dialect::Zfp => {
                let guard = self.is_set(Term::Var(v));
                Term::iota(v, Formula::and(guard, body))
            }
        }
    }

    fn subset(&mut self, x: Term, y: Term) -> Formula {
        let c = self.fresh();
        let core = Formula::forall(
            c,
            Formula::implies(Formula::mem(c, x.clone()), Formula::mem(c, y.clone())),
        );
        match self.dialect {
            Dialect::Zf => core,
            Dialect::Zfp => {
                let sx = self.is_set(x);
                let sy = self.is_set(y);
                Formula::conj([sx, sy, core])
            }
        }
    }

    fn empty(&mut self) -> Term {
        let x = self.fresh();
        let a = self.fresh();
        self.set_iota(x, Formula::forall(a, Formula::not(Formula::mem(a, x))))
    }

    fn union(&mut self, x: Term) -> Term {
        let y = self.fresh();
        let a = self.fresh();
        let z = self.fresh();
        let rhs = Formula::exists(z, Formula::and(Formula::mem(z, x), Formula::mem(a, z)));
        self.set_iota(y, Formula::forall(a, Formula::iff(Formula::mem(a, y), rhs)))
    }

    fn pow(&mut self, x: Term) -> Term {
        let y = self.fresh();
        let z = self.fresh();
        let sub = self.subset(Term::Var(z), x);
        self.set_iota(y, Formula::forall(z, Formula::iff(Formula::mem(z, y), sub)))
    }

    fn upair(&mut self, a: Term, b: Term) -> Term {
        let x = self.fresh();
        let c = self.fresh();
        let either = Formula::or(Formula::eq(c, a), Formula::eq(c, b));
        Term::iota(
            x,
            Formula::forall(c, Formula::iff(Formula::mem(c, x), either)),
        )
    }

    fn singleton(&mut self, a: Term) -> Term {
        self.upair(a.clone(), a)
    }

    fn cup(&mut self, x: Term, y: Term) -> Term {
        let p = self.upair(x, y);
        self.union(p)
    }

    fn succ(&mut self, x: Term) -> Term {
        let s = self.singleton(x.clone());
        self.cup(x, s)
    }

    fn enumeration(&mut self, mut args: Vec<Term>) -> Term {
        match args.len() {
            1 => self.singleton(args.pop().unwrap()),
            2 => {
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                self.upair(a, b)
            }
            _ => {
                let rest = args.split_off(1);
                let head = self.singleton(args.pop().unwrap());
                let tail = self.enumeration(rest);
                self.cup(head, tail)
            }
        }
    }

    fn kpair(&mut self, a: Term, b: Term) -> Term {
        let s = self.singleton(a.clone());
        let p = self.upair(a, b);
        self.upair(s, p)
    }

    fn ppair(&mut self, a: Term, b: Term) -> Term {
        let q = self.fresh();
        Term::iota(
            q,
            Formula::and(
                Formula::atom(a, Pred::Pi1, q),
                Formula::atom(b, Pred::Pi2, q),
            ),
        )
    }

    fn pair_of(&mut self, a: Term, b: Term) -> Term {
        match self.dialect {
            Dialect::Zf => self.kpair(a, b),
            Dialect::Zfp => self.ppair(a, b),
        }
    }

    fn product(&mut self, a: Term, b: Term) -> Term {
        let x = self.fresh();
        let p = self.fresh();
        let c = self.fresh();
        let d = self.fresh();
        let pair = self.pair_of(Term::Var(c), Term::Var(d));
        let inner = Formula::exists(d, Formula::and(Formula::mem(d, b), Formula::eq(p, pair)));
        let rhs = Formula::exists(c, Formula::and(Formula::mem(c, a), inner));
        Term::iota(x, Formula::forall(p, Formula::iff(Formula::mem(p, x), rhs)))
    }

    fn separation(&mut self, b: Var, domain: Term, body: Formula) -> Term {
        let (b, body) = if domain.free_vars().contains(&b) {
            let w = self.fresh();
            (w, substitute(&body, b, &Term::Var(w)))
        } else {
            (b, body)
        };
        let y = self.fresh();
        let rhs = Formula::and(Formula::mem(b, domain), body);
        self.set_iota(y, Formula::forall(b, Formula::iff(Formula::mem(b, y), rhs)))
    }

    fn kpi1(&mut self, a: Term, q: Term) -> Formula {
        let x = self.fresh();
        Formula::forall(x, Formula::implies(Formula::mem(x, q), Formula::mem(a, x)))
    }

    fn kpi2(&mut self, b: Term, q: Term) -> Formula {
        let x = self.fresh();
        Formula::exists_unique(x, Formula::and(Formula::mem(x, q), Formula::mem(b, x)))
    }

    fn ordinal(&mut self, x: Term) -> Formula {
        let y = self.fresh();
        let z = self.fresh();
        let sub = self.subset(Term::Var(y), x.clone());
        let transitive = Formula::forall(y, Formula::implies(Formula::mem(y, x.clone()), sub));
        let (y2, z2) = (self.fresh(), z);
        let trichotomy = Formula::disj([
            Formula::eq(y2, z2),
            Formula::mem(y2, z2),
            Formula::mem(z2, y2),
        ]);
        let total = Formula::forall(
            y2,
            Formula::implies(
                Formula::mem(y2, x.clone()),
                Formula::forall(z2, Formula::implies(Formula::mem(z2, x), trichotomy)),
            ),
        );
        Formula::and(transitive, total)
    }

    fn term_macro(&mut self, m: TermMacro, mut args: Vec<Term>) -> Term {
        let mut arg = || args.remove(0);
        match m {
            TermMacro::Empty => self.empty(),
            TermMacro::Union => self.union(arg()),
            TermMacro::Pow => self.pow(arg()),
            TermMacro::Singleton => self.singleton(arg()),
            TermMacro::UPair => {
                let a = arg();
                self.upair(a, arg())
            }
            TermMacro::Cup => {
                let a = arg();
                self.cup(a, arg())
            }
            TermMacro::Succ => self.succ(arg()),
            TermMacro::KPair => {
                let a = arg();
                self.kpair(a, arg())
            }
            TermMacro::PPair => {
                let a = arg();
                self.ppair(a, arg())
            }
            TermMacro::Prod => {
                let a = arg();
                self.product(a, arg())
            }
            TermMacro::Enum => self.enumeration(args),
        }
    }

    fn formula_macro(&mut self, m: FormulaMacro, mut args: Vec<Term>) -> Formula {
        let mut arg = || args.remove(0);
        match m {
            FormulaMacro::Subset => {
                let x = arg();
                self.subset(x, arg())
            }
            FormulaMacro::Set => self.is_set(arg()),
            FormulaMacro::Pair => self.is_pair(arg()),
            FormulaMacro::KPi1 => {
                let a = arg();
                self.kpi1(a, arg())
            }
            FormulaMacro::KPi2 => {
                let b = arg();
                self.kpi2(b, arg())
            }
            FormulaMacro::Ord => self.ordinal(arg()),
        }
    }
}

fn nest_and(conds: Vec<Formula>, body: Formula) -> Formula {
    conds
        .into_iter()
        .rev()
        .fold(body, |acc, c| Formula::and(c, acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::alpha_eq;

    fn v(i: u32) -> Var {
        Var(i)
    }

    #[test]
    fn subset_zf() {
        let got = expand_str("Subset(x0, x1)", Dialect::Zf).unwrap();
        let want = Formula::forall(
            v(2),
            Formula::implies(Formula::mem(v(2), v(0)), Formula::mem(v(2), v(1))),
        );
        assert!(alpha_eq(&got, &want));
    }

    #[test]
    fn subset_zfp() {
        let got = expand_str("Subset(x0, x1)", Dialect::Zfp).unwrap();
        let set =
            |x: u32| Formula::not(Formula::exists(v(9), Formula::atom(v(9), Pred::Pi1, v(x))));
        let core = Formula::forall(
            v(9),
            Formula::implies(Formula::mem(v(9), v(0)), Formula::mem(v(9), v(1))),
        );
        let want = Formula::conj([set(0), set(1), core]);
        assert!(alpha_eq(&got, &want), "{}", syntax::print_formula(&got));
    }

    #[test]
    fn kuratowski_projections() {
        let got = expand_str("KPi1(x0, x1)", Dialect::Zf).unwrap();
        let want = Formula::forall(
            v(5),
            Formula::implies(Formula::mem(v(5), v(1)), Formula::mem(v(0), v(5))),
        );
        assert!(alpha_eq(&got, &want));
        let got = expand_str("KPi2(x0, x1)", Dialect::Zf).unwrap();
        let want = Formula::exists_unique(
            v(5),
            Formula::and(Formula::mem(v(5), v(1)), Formula::mem(v(0), v(5))),
        );
        assert!(alpha_eq(&got, &want));
    }

    #[test]
    fn dialect_refusals() {
        assert!(matches!(
            expand_str("x0 = PPair(x0, x0)", Dialect::Zf),
            Err(ExpandError::DialectMismatch { .. })
        ));
        assert!(matches!(
            expand_str("x0 = KPair(x0, x0)", Dialect::Zfp),
            Err(ExpandError::DialectMismatch { .. })
        ));
        assert!(matches!(
            expand_str("Set(x0)", Dialect::Zf),
            Err(ExpandError::DialectMismatch { .. })
        ));
        assert!(matches!(
            expand_str("forall_set x. x = x", Dialect::Zf),
            Err(ExpandError::DialectMismatch { .. })
        ));
        assert!(matches!(
            expand_str("KPi1(x0, x0)", Dialect::Zfp),
            Err(ExpandError::DialectMismatch { .. })
        ));
    }

    #[test]
    fn placeholders_must_be_filled() {
        assert_eq!(
            expand_str("$phi", Dialect::Zf),
            Err(ExpandError::UnfilledPlaceholder("phi".into()))
        );
    }

    #[test]
    fn free_variables_are_preserved() {
        for d in [Dialect::Zf, Dialect::Zfp] {
            let f = expand_str("x0 = Prod(Union(x1), Enum(x2, x3, x4))", d).unwrap();
            assert_eq!(f.free_vars(), (0..5).map(v).collect());
        }
    }

    #[test]
    fn shared_entries_agree_across_dialects() {
        for src in [
            "x0 = UPair(x1, x2)",
            "x0 = Singleton(x1)",
            "x0 = Enum(x1, x2)",
        ] {
            let a = expand_str(src, Dialect::Zf).unwrap();
            let b = expand_str(src, Dialect::Zfp).unwrap();
            assert!(alpha_eq(&a, &b), "{src}");
        }
        // the text is shared, but union itself differs between dialects
        for d in [Dialect::Zf, Dialect::Zfp] {
            let a = expand_str("x0 = Cup(x1, x2)", d).unwrap();
            let b = expand_str("x0 = Union(UPair(x1, x2))", d).unwrap();
            assert!(alpha_eq(&a, &b));
            let a = expand_str("x0 = Enum(x1, x2, x3)", d).unwrap();
            let b = expand_str("x0 = Cup(Singleton(x1), UPair(x2, x3))", d).unwrap();
            assert!(alpha_eq(&a, &b));
        }
    }

    #[test]
    fn bounded_binder_free_in_bound_is_renamed() {
        // the x in the bound is the outer free x
        let f = expand_str("forall x in Singleton(x). mem(x, x)", Dialect::Zf).unwrap();
        assert_eq!(f.free_vars().len(), 1);
    }

    #[test]
    fn restricted_quantifier_shape() {
        let got = expand_str("exists_set x0 in x1. x0 = x0", Dialect::Zfp).unwrap();
        let set = Formula::not(Formula::exists(v(7), Formula::atom(v(7), Pred::Pi1, v(0))));
        let want = Formula::exists(
            v(0),
            Formula::and(
                set,
                Formula::and(Formula::mem(v(0), v(1)), Formula::eq(v(0), v(0))),
            ),
        );
        assert!(alpha_eq(&got, &want));
    }

    #[test]
    fn table_lists_dialect_names() {
        let zf = macro_table(Dialect::Zf);
        assert!(zf.entries.iter().any(|e| e.name == "KPair"));
        assert!(!zf.entries.iter().any(|e| e.name == "PPair"));
        let zfp = macro_table(Dialect::Zfp);
        assert!(zfp.entries.iter().any(|e| e.name == "iota_set"));
    }
}
