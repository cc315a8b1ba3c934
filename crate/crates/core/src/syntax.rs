//! Surface syntax: a sugared AST, its parser and its printer.
//!
//! Concrete syntax, loosest binding first:
//!
//! ```text
//! phi <-> psi      phi -> psi      phi \/ psi      phi /\ psi      !phi
//! forall x. phi    exists x in T. phi    existsu x. phi
//! forall_set x. phi    exists_pair p. phi    iota_set y. phi
//! mem(a, b)   pi1(a, p)   pi2(b, p)   a = b   a != b   a in b
//! Pure(t)   H(t)   Subset(X, Y)   Set(x)   Pair(p)   Ord(x)   $phi
//! ```
//!
//! `->` associates to the right, the other binary connectives to the left,
//! and a quantifier body extends as far right as possible. Terms are
//! variables, `(iota x. phi)`, macro calls such as `Pow(x)` or
//! `PPair(a, b)`, and separation `Sep(b in X | phi)`.
//!
//! A name of the form `x<digits>` denotes that exact variable index. Other
//! names are assigned fresh indices, the same index for every occurrence of
//! the same name; in schema mode `a`, `b`, `c1`, `c2` are pinned to 0..=3.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::logic::{Formula, Pred, Term, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("{line}:{col}: unexpected character {ch:?}")]
    UnexpectedChar { ch: char, line: usize, col: usize },
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Unexpected {
        expected: String,
        found: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: unknown macro {name}")]
    UnknownMacro {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: {name} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: String,
        found: usize,
        line: usize,
        col: usize,
    },
}

// ---------------------------------------------------------------------------
// AST

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Restrict {
    None,
    Set,
    Pair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quant {
    Forall,
    Exists,
    ExistsUnique,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TermMacro {
    Empty,
    Union,
    Pow,
    Singleton,
    UPair,
    Cup,
    Succ,
    KPair,
    PPair,
    Prod,
    Enum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FormulaMacro {
    Subset,
    Set,
    Pair,
    KPi1,
    KPi2,
    Ord,
}

impl TermMacro {
    pub const ALL: [TermMacro; 11] = [
        TermMacro::Empty,
        TermMacro::Union,
        TermMacro::Pow,
        TermMacro::Singleton,
        TermMacro::UPair,
        TermMacro::Cup,
        TermMacro::Succ,
        TermMacro::KPair,
        TermMacro::PPair,
        TermMacro::Prod,
        TermMacro::Enum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TermMacro::Empty => "Empty",
            TermMacro::Union => "Union",
            TermMacro::Pow => "Pow",
            TermMacro::Singleton => "Singleton",
            TermMacro::UPair => "UPair",
            TermMacro::Cup => "Cup",
            TermMacro::Succ => "Succ",
            TermMacro::KPair => "KPair",
            TermMacro::PPair => "PPair",
            TermMacro::Prod => "Prod",
            TermMacro::Enum => "Enum",
        }
    }

    /// `None` means one or more.
    pub fn arity(self) -> Option<usize> {
        match self {
            TermMacro::Empty => Some(0),
            TermMacro::Union | TermMacro::Pow | TermMacro::Singleton | TermMacro::Succ => Some(1),
            TermMacro::UPair
            | TermMacro::Cup
            | TermMacro::KPair
            | TermMacro::PPair
            | TermMacro::Prod => Some(2),
            TermMacro::Enum => None,
        }
    }

    fn lookup(name: &str) -> Option<TermMacro> {
        TermMacro::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl FormulaMacro {
    pub const ALL: [FormulaMacro; 6] = [
        FormulaMacro::Subset,
        FormulaMacro::Set,
        FormulaMacro::Pair,
        FormulaMacro::KPi1,
        FormulaMacro::KPi2,
        FormulaMacro::Ord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulaMacro::Subset => "Subset",
            FormulaMacro::Set => "Set",
            FormulaMacro::Pair => "Pair",
            FormulaMacro::KPi1 => "KPi1",
            FormulaMacro::KPi2 => "KPi2",
            FormulaMacro::Ord => "Ord",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            FormulaMacro::Set | FormulaMacro::Pair | FormulaMacro::Ord => 1,
            FormulaMacro::Subset | FormulaMacro::KPi1 | FormulaMacro::KPi2 => 2,
        }
    }

    fn lookup(name: &str) -> Option<FormulaMacro> {
        FormulaMacro::ALL.into_iter().find(|m| m.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum STerm {
    Var(Var),
    Iota {
        restrict: Restrict,
        var: Var,
        body: Box<SFormula>,
    },
    Call {
        name: TermMacro,
        args: Vec<STerm>,
    },
    /// `{ var in domain | body }`.
    Sep {
        var: Var,
        domain: Box<STerm>,
        body: Box<SFormula>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SFormula {
    Atom(STerm, Pred, STerm),
    Neq(STerm, STerm),
    Pure(STerm),
    InUniverse(STerm),
    Not(Box<SFormula>),
    And(Box<SFormula>, Box<SFormula>),
    Or(Box<SFormula>, Box<SFormula>),
    Implies(Box<SFormula>, Box<SFormula>),
    Iff(Box<SFormula>, Box<SFormula>),
    Quant {
        q: Quant,
        restrict: Restrict,
        var: Var,
        bound: Option<Box<STerm>>,
        body: Box<SFormula>,
    },
    Call {
        name: FormulaMacro,
        args: Vec<STerm>,
    },
    /// A schematic formula variable, `$name`.
    Placeholder(String),
    /// An already expanded core formula spliced into the tree.
    Core(Formula),
}

impl STerm {
    pub fn var(v: Var) -> STerm {
        STerm::Var(v)
    }

    pub fn call(name: TermMacro, args: Vec<STerm>) -> STerm {
        STerm::Call { name, args }
    }

    pub fn from_core(t: &Term) -> STerm {
        match t {
            Term::Var(v) => STerm::Var(*v),
            Term::Iota(v, body) => STerm::Iota {
                restrict: Restrict::None,
                var: *v,
                body: Box::new(SFormula::from_core(body)),
            },
        }
    }
}

impl SFormula {
    /// Lifts a core formula, recognising the exact shapes produced by the
    /// derived-connective constructors so that printing stays readable.
    pub fn from_core(f: &Formula) -> SFormula {
        match f {
            Formula::Atom(l, p, r) => SFormula::Atom(STerm::from_core(l), *p, STerm::from_core(r)),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Implies(a, nb) => match nb.as_ref() {
                    Formula::Not(b) => {
                        if let (Formula::Implies(p, q), Formula::Implies(q2, p2)) =
                            (a.as_ref(), b.as_ref())
                        {
                            if p == p2 && q == q2 {
                                return SFormula::Iff(
                                    Box::new(SFormula::from_core(p)),
                                    Box::new(SFormula::from_core(q)),
                                );
                            }
                        }
                        SFormula::And(
                            Box::new(SFormula::from_core(a)),
                            Box::new(SFormula::from_core(b)),
                        )
                    }
                    _ => SFormula::Not(Box::new(SFormula::from_core(inner))),
                },
                Formula::Forall(v, nb) => match nb.as_ref() {
                    Formula::Not(b) => SFormula::Quant {
                        q: Quant::Exists,
                        restrict: Restrict::None,
                        var: *v,
                        bound: None,
                        body: Box::new(SFormula::from_core(b)),
                    },
                    _ => SFormula::Not(Box::new(SFormula::from_core(inner))),
                },
                _ => SFormula::Not(Box::new(SFormula::from_core(inner))),
            },
            Formula::Implies(a, b) => match a.as_ref() {
                Formula::Not(na) => SFormula::Or(
                    Box::new(SFormula::from_core(na)),
                    Box::new(SFormula::from_core(b)),
                ),
                _ => SFormula::Implies(
                    Box::new(SFormula::from_core(a)),
                    Box::new(SFormula::from_core(b)),
                ),
            },
            Formula::Forall(v, body) => SFormula::Quant {
                q: Quant::Forall,
                restrict: Restrict::None,
                var: *v,
                bound: None,
                body: Box::new(SFormula::from_core(body)),
            },
            Formula::Pure(t) => SFormula::Pure(STerm::from_core(t)),
            Formula::InUniverse(t) => SFormula::InUniverse(STerm::from_core(t)),
        }
    }

    /// Replaces every `$name` placeholder by `f`.
    pub fn fill(&self, name: &str, f: &Formula) -> SFormula {
        let fill = |g: &SFormula| Box::new(g.fill(name, f));
        match self {
            SFormula::Placeholder(n) if n == name => SFormula::Core(f.clone()),
            SFormula::Placeholder(_) | SFormula::Core(_) => self.clone(),
            SFormula::Atom(l, p, r) => SFormula::Atom(l.fill(name, f), *p, r.fill(name, f)),
            SFormula::Neq(l, r) => SFormula::Neq(l.fill(name, f), r.fill(name, f)),
            SFormula::Pure(t) => SFormula::Pure(t.fill(name, f)),
            SFormula::InUniverse(t) => SFormula::InUniverse(t.fill(name, f)),
            SFormula::Not(a) => SFormula::Not(fill(a)),
            SFormula::And(a, b) => SFormula::And(fill(a), fill(b)),
            SFormula::Or(a, b) => SFormula::Or(fill(a), fill(b)),
            SFormula::Implies(a, b) => SFormula::Implies(fill(a), fill(b)),
            SFormula::Iff(a, b) => SFormula::Iff(fill(a), fill(b)),
            SFormula::Quant {
                q,
                restrict,
                var,
                bound,
                body,
            } => SFormula::Quant {
                q: *q,
                restrict: *restrict,
                var: *var,
                bound: bound.as_ref().map(|t| Box::new(t.fill(name, f))),
                body: fill(body),
            },
            SFormula::Call { name: m, args } => SFormula::Call {
                name: *m,
                args: args.iter().map(|t| t.fill(name, f)).collect(),
            },
        }
    }

    pub fn placeholders(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_placeholders(&mut out);
        out
    }

    fn collect_placeholders(&self, out: &mut BTreeSet<String>) {
        match self {
            SFormula::Placeholder(n) => {
                out.insert(n.clone());
            }
            SFormula::Core(_) => {}
            SFormula::Atom(l, _, r) | SFormula::Neq(l, r) => {
                l.collect_placeholders(out);
                r.collect_placeholders(out);
            }
            SFormula::Pure(t) | SFormula::InUniverse(t) => t.collect_placeholders(out),
            SFormula::Not(a) => a.collect_placeholders(out),
            SFormula::And(a, b)
            | SFormula::Or(a, b)
            | SFormula::Implies(a, b)
            | SFormula::Iff(a, b) => {
                a.collect_placeholders(out);
                b.collect_placeholders(out);
            }
            SFormula::Quant { bound, body, .. } => {
                if let Some(t) = bound {
                    t.collect_placeholders(out);
                }
                body.collect_placeholders(out);
            }
            SFormula::Call { args, .. } => args.iter().for_each(|t| t.collect_placeholders(out)),
        }
    }
}

impl STerm {
    fn fill(&self, name: &str, f: &Formula) -> STerm {
        match self {
            STerm::Var(_) => self.clone(),
            STerm::Iota {
                restrict,
                var,
                body,
            } => STerm::Iota {
                restrict: *restrict,
                var: *var,
                body: Box::new(body.fill(name, f)),
            },
            STerm::Call { name: m, args } => STerm::Call {
                name: *m,
                args: args.iter().map(|t| t.fill(name, f)).collect(),
            },
            STerm::Sep { var, domain, body } => STerm::Sep {
                var: *var,
                domain: Box::new(domain.fill(name, f)),
                body: Box::new(body.fill(name, f)),
            },
        }
    }

    fn collect_placeholders(&self, out: &mut BTreeSet<String>) {
        match self {
            STerm::Var(_) => {}
            STerm::Iota { body, .. } => body.collect_placeholders(out),
            STerm::Call { args, .. } => args.iter().for_each(|t| t.collect_placeholders(out)),
            STerm::Sep { domain, body, .. } => {
                domain.collect_placeholders(out);
                body.collect_placeholders(out);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Printing

const LVL_IFF: u8 = 1;
const LVL_IMP: u8 = 2;
const LVL_OR: u8 = 3;
const LVL_AND: u8 = 4;
const LVL_UNARY: u8 = 5;

fn restrict_suffix(r: Restrict) -> &'static str {
    match r {
        Restrict::None => "",
        Restrict::Set => "_set",
        Restrict::Pair => "_pair",
    }
}

fn quant_word(q: Quant) -> &'static str {
    match q {
        Quant::Forall => "forall",
        Quant::Exists => "exists",
        Quant::ExistsUnique => "existsu",
    }
}

fn pred_word(p: Pred) -> &'static str {
    match p {
        Pred::Mem => "mem",
        Pred::Pi1 => "pi1",
        Pred::Pi2 => "pi2",
        Pred::Eq => "=",
    }
}

impl fmt::Display for STerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            STerm::Var(v) => write!(f, "{v}"),
            STerm::Iota {
                restrict,
                var,
                body,
            } => {
                write!(f, "(iota{} {var}. ", restrict_suffix(*restrict))?;
                write_formula(body, 0, f)?;
                f.write_str(")")
            }
            STerm::Call { name, args } => {
                write!(f, "{}(", name.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            STerm::Sep { var, domain, body } => {
                write!(f, "Sep({var} in {domain} | ")?;
                write_formula(body, 0, f)?;
                f.write_str(")")
            }
        }
    }
}

fn level(s: &SFormula) -> u8 {
    match s {
        SFormula::Iff(..) => LVL_IFF,
        SFormula::Implies(..) => LVL_IMP,
        SFormula::Or(..) => LVL_OR,
        SFormula::And(..) => LVL_AND,
        // a quantifier's body would swallow anything to its right
        SFormula::Quant { .. } => 0,
        SFormula::Core(c) => level(&SFormula::from_core(c)),
        _ => LVL_UNARY,
    }
}

fn write_formula(s: &SFormula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if level(s) < min {
        f.write_str("(")?;
        write_formula(s, 0, f)?;
        return f.write_str(")");
    }
    let bin = |a: &SFormula, op: &str, b: &SFormula, la: u8, lb: u8, f: &mut fmt::Formatter<'_>| {
        write_formula(a, la, f)?;
        write!(f, " {op} ")?;
        write_formula(b, lb, f)
    };
    match s {
        SFormula::Atom(l, Pred::Eq, r) => write!(f, "{l} = {r}"),
        SFormula::Atom(l, p, r) => write!(f, "{}({l}, {r})", pred_word(*p)),
        SFormula::Neq(l, r) => write!(f, "{l} != {r}"),
        SFormula::Pure(t) => write!(f, "Pure({t})"),
        SFormula::InUniverse(t) => write!(f, "H({t})"),
        SFormula::Not(a) => {
            f.write_str("!")?;
            write_formula(a, LVL_UNARY, f)
        }
        SFormula::And(a, b) => bin(a, "/\\", b, LVL_AND, LVL_AND + 1, f),
        SFormula::Or(a, b) => bin(a, "\\/", b, LVL_OR, LVL_OR + 1, f),
        SFormula::Implies(a, b) => bin(a, "->", b, LVL_IMP + 1, LVL_IMP, f),
        SFormula::Iff(a, b) => bin(a, "<->", b, LVL_IFF, LVL_IFF + 1, f),
        SFormula::Quant {
            q,
            restrict,
            var,
            bound,
            body,
        } => {
            write!(f, "{}{} {var}", quant_word(*q), restrict_suffix(*restrict))?;
            if let Some(t) = bound {
                write!(f, " in {t}")?;
            }
            f.write_str(". ")?;
            write_formula(body, 0, f)
        }
        SFormula::Call { name, args } => {
            write!(f, "{}(", name.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")
        }
        SFormula::Placeholder(n) => write!(f, "${n}"),
        SFormula::Core(c) => write_formula(&SFormula::from_core(c), min, f),
    }
}

impl fmt::Display for SFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, 0, f)
    }
}

/// Prints a core formula in surface syntax.
pub fn print_formula(f: &Formula) -> String {
    SFormula::from_core(f).to_string()
}

pub fn print_term(t: &Term) -> String {
    STerm::from_core(t).to_string()
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Dollar(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Bar,
    Eq,
    Neq,
    Not,
    Arrow,
    Iff,
    And,
    Or,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Dollar(s) => write!(f, "`${s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Neq => f.write_str("`!=`"),
            Tok::Not => f.write_str("`!`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Iff => f.write_str("`<->`"),
            Tok::And => f.write_str("`/\\`"),
            Tok::Or => f.write_str("`\\/`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let start = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        let next = chars.get(i + 1).copied();
        let tok = match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                advance(1, &mut i);
                continue;
            }
            '(' => {
                advance(1, &mut i);
                Tok::LParen
            }
            ')' => {
                advance(1, &mut i);
                Tok::RParen
            }
            ',' => {
                advance(1, &mut i);
                Tok::Comma
            }
            '.' => {
                advance(1, &mut i);
                Tok::Dot
            }
            '|' => {
                advance(1, &mut i);
                Tok::Bar
            }
            '=' => {
                advance(1, &mut i);
                Tok::Eq
            }
            '!' if next == Some('=') => {
                advance(2, &mut i);
                Tok::Neq
            }
            '!' | '¬' => {
                advance(1, &mut i);
                Tok::Not
            }
            '-' if next == Some('>') => {
                advance(2, &mut i);
                Tok::Arrow
            }
            '<' if next == Some('-') && chars.get(i + 2) == Some(&'>') => {
                advance(3, &mut i);
                Tok::Iff
            }
            '/' if next == Some('\\') => {
                advance(2, &mut i);
                Tok::And
            }
            '\\' if next == Some('/') => {
                advance(2, &mut i);
                Tok::Or
            }
            '→' => {
                advance(1, &mut i);
                Tok::Arrow
            }
            '↔' => {
                advance(1, &mut i);
                Tok::Iff
            }
            '∧' => {
                advance(1, &mut i);
                Tok::And
            }
            '∨' => {
                advance(1, &mut i);
                Tok::Or
            }
            '≠' => {
                advance(1, &mut i);
                Tok::Neq
            }
            '∀' | '∃' | '∈' | 'ι' => {
                advance(1, &mut i);
                Tok::Ident(
                    match c {
                        '∀' => "forall",
                        '∃' => "exists",
                        '∈' => "in",
                        _ => "iota",
                    }
                    .to_string(),
                )
            }
            '$' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                if j == i + 1 {
                    return Err(SyntaxError::UnexpectedChar { ch: c, line, col });
                }
                let name: String = chars[i + 1..j].iter().collect();
                advance(j - i, &mut i);
                Tok::Dollar(name)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len()
                    && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'')
                {
                    j += 1;
                }
                let name: String = chars[i..j].iter().collect();
                advance(j - i, &mut i);
                Tok::Ident(name)
            }
            _ => return Err(SyntaxError::UnexpectedChar { ch: c, line, col }),
        };
        out.push(Spanned {
            tok,
            line: start.0,
            col: start.1,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parsing

/// Options for [`parse_formula_with`].
#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    /// Pin `a`, `b`, `c1`, `c2` to variables 0, 1, 2, 3.
    pub schema_names: bool,
}

/// Name to variable assignment chosen by the parser.
pub type NameMap = BTreeMap<String, Var>;

pub const SCHEMA_NAMES: [&str; 4] = ["a", "b", "c1", "c2"];

fn explicit_index(name: &str) -> Option<u32> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty()
        || !digits.bytes().all(|b| b.is_ascii_digit())
        || (digits.len() > 1 && digits.starts_with('0'))
    {
        return None;
    }
    digits.parse().ok()
}

const KEYWORDS: &[&str] = &[
    "in",
    "mem",
    "pi1",
    "pi2",
    "iota",
    "iota_set",
    "iota_pair",
    "forall",
    "exists",
    "existsu",
    "forall_set",
    "exists_set",
    "existsu_set",
    "forall_pair",
    "exists_pair",
    "existsu_pair",
];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    names: NameMap,
    taken: BTreeSet<u32>,
    next: u32,
}

pub fn parse_formula(src: &str) -> Result<SFormula, SyntaxError> {
    parse_formula_with(src, &ParseOptions::default()).map(|(f, _)| f)
}

pub fn parse_formula_with(
    src: &str,
    opts: &ParseOptions,
) -> Result<(SFormula, NameMap), SyntaxError> {
    let mut p = Parser::new(src, opts)?;
    let f = p.formula()?;
    p.expect(Tok::Eof)?;
    Ok((f, p.names))
}

pub fn parse_term(src: &str) -> Result<STerm, SyntaxError> {
    let mut p = Parser::new(src, &ParseOptions::default())?;
    let t = p.term()?;
    p.expect(Tok::Eof)?;
    Ok(t)
}

/// Parses a schema: a formula in which `a`, `b`, `c1`, `c2` are pinned.
pub fn parse_schema(src: &str) -> Result<SFormula, SyntaxError> {
    parse_formula_with(src, &ParseOptions { schema_names: true }).map(|(f, _)| f)
}

impl Parser {
    fn new(src: &str, opts: &ParseOptions) -> Result<Parser, SyntaxError> {
        let toks = lex(src)?;
        let mut names = NameMap::new();
        let mut taken = BTreeSet::new();
        for t in &toks {
            if let Tok::Ident(s) = &t.tok {
                if let Some(i) = explicit_index(s) {
                    taken.insert(i);
                    names.insert(s.clone(), Var(i));
                }
            }
        }
        if opts.schema_names {
            for (i, n) in SCHEMA_NAMES.iter().enumerate() {
                taken.insert(i as u32);
                names.insert(n.to_string(), Var(i as u32));
            }
        }
        Ok(Parser {
            toks,
            pos: 0,
            names,
            taken,
            next: 0,
        })
    }

    fn var_for(&mut self, name: &str) -> Var {
        if let Some(v) = self.names.get(name) {
            return *v;
        }
        while self.taken.contains(&self.next) {
            self.next += 1;
        }
        let v = Var(self.next);
        self.taken.insert(self.next);
        self.names.insert(name.to_string(), v);
        v
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> SyntaxError {
        let t = &self.toks[self.pos];
        SyntaxError::Unexpected {
            expected: expected.to_string(),
            found: t.tok.to_string(),
            line: t.line,
            col: t.col,
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&tok.to_string()))
        }
    }

    fn ident_is(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn binder(&mut self) -> Result<Var, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(self.var_for(&s))
            }
            _ => Err(self.error("a variable name")),
        }
    }

    fn formula(&mut self) -> Result<SFormula, SyntaxError> {
        let mut lhs = self.implication()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.implication()?;
            lhs = SFormula::Iff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<SFormula, SyntaxError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(SFormula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<SFormula, SyntaxError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = SFormula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<SFormula, SyntaxError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = SFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn quantifier_word(&self) -> Option<(Quant, Restrict)> {
        let Tok::Ident(s) = self.peek() else {
            return None;
        };
        let (q, rest) = if let Some(r) = s.strip_prefix("existsu") {
            (Quant::ExistsUnique, r)
        } else if let Some(r) = s.strip_prefix("exists") {
            (Quant::Exists, r)
        } else {
            (Quant::Forall, s.strip_prefix("forall")?)
        };
        let restrict = match rest {
            "" => Restrict::None,
            "_set" => Restrict::Set,
            "_pair" => Restrict::Pair,
            _ => return None,
        };
        Some((q, restrict))
    }

    fn iota_word(&self) -> Option<Restrict> {
        match self.peek() {
            Tok::Ident(s) if s == "iota" => Some(Restrict::None),
            Tok::Ident(s) if s == "iota_set" => Some(Restrict::Set),
            Tok::Ident(s) if s == "iota_pair" => Some(Restrict::Pair),
            _ => None,
        }
    }

    fn unary(&mut self) -> Result<SFormula, SyntaxError> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(SFormula::Not(Box::new(self.unary()?)));
        }
        if let Some((q, restrict)) = self.quantifier_word() {
            self.bump();
            let var = self.binder()?;
            let bound = if self.ident_is("in") {
                self.bump();
                Some(Box::new(self.term()?))
            } else {
                None
            };
            self.expect(Tok::Dot)?;
            let body = self.formula()?;
            return Ok(SFormula::Quant {
                q,
                restrict,
                var,
                bound,
                body: Box::new(body),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<SFormula, SyntaxError> {
        if *self.peek() == Tok::LParen {
            // `(iota ...)` starts a term, anything else a grouped formula
            let iota_next = matches!(self.peek_at(1), Tok::Ident(s) if s.starts_with("iota"));
            if !iota_next {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                return Ok(f);
            }
        }
        if let Tok::Dollar(name) = self.peek().clone() {
            self.bump();
            return Ok(SFormula::Placeholder(name));
        }
        if let Tok::Ident(name) = self.peek().clone() {
            if *self.peek_at(1) == Tok::LParen {
                let pred = match name.as_str() {
                    "mem" => Some(Pred::Mem),
                    "pi1" => Some(Pred::Pi1),
                    "pi2" => Some(Pred::Pi2),
                    _ => None,
                };
                if let Some(p) = pred {
                    let at = self.bump();
                    let args = self.arguments()?;
                    check_arity(&name, "2", args.len() == 2, args.len(), &at)?;
                    let mut it = args.into_iter();
                    return Ok(SFormula::Atom(it.next().unwrap(), p, it.next().unwrap()));
                }
                if name == "Pure" || name == "H" {
                    let at = self.bump();
                    let args = self.arguments()?;
                    check_arity(&name, "1", args.len() == 1, args.len(), &at)?;
                    let t = args.into_iter().next().unwrap();
                    return Ok(if name == "Pure" {
                        SFormula::Pure(t)
                    } else {
                        SFormula::InUniverse(t)
                    });
                }
                if let Some(m) = FormulaMacro::lookup(&name) {
                    let at = self.bump();
                    let args = self.arguments()?;
                    let n = m.arity();
                    check_arity(&name, &n.to_string(), args.len() == n, args.len(), &at)?;
                    return Ok(SFormula::Call { name: m, args });
                }
            }
        }
        let lhs = self.term()?;
        let op = self.peek().clone();
        match op {
            Tok::Eq => {
                self.bump();
                Ok(SFormula::Atom(lhs, Pred::Eq, self.term()?))
            }
            Tok::Neq => {
                self.bump();
                Ok(SFormula::Neq(lhs, self.term()?))
            }
            Tok::Ident(s) if s == "in" => {
                self.bump();
                Ok(SFormula::Atom(lhs, Pred::Mem, self.term()?))
            }
            _ => Err(self.error("`=`, `!=` or `in`")),
        }
    }

    fn arguments(&mut self) -> Result<Vec<STerm>, SyntaxError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() == Tok::RParen {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.error("`,` or `)`")),
            }
        }
    }

    pub fn term(&mut self) -> Result<STerm, SyntaxError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(name) => {
                if let Some(restrict) = self.iota_word() {
                    self.bump();
                    let var = self.binder()?;
                    self.expect(Tok::Dot)?;
                    let body = self.formula()?;
                    return Ok(STerm::Iota {
                        restrict,
                        var,
                        body: Box::new(body),
                    });
                }
                if *self.peek_at(1) == Tok::LParen {
                    let at = self.bump();
                    if name == "Sep" {
                        self.expect(Tok::LParen)?;
                        let var = self.binder()?;
                        if !self.ident_is("in") {
                            return Err(self.error("`in`"));
                        }
                        self.bump();
                        let domain = self.term()?;
                        self.expect(Tok::Bar)?;
                        let body = self.formula()?;
                        self.expect(Tok::RParen)?;
                        return Ok(STerm::Sep {
                            var,
                            domain: Box::new(domain),
                            body: Box::new(body),
                        });
                    }
                    let Some(m) = TermMacro::lookup(&name) else {
                        return Err(SyntaxError::UnknownMacro {
                            name,
                            line: at.line,
                            col: at.col,
                        });
                    };
                    let args = self.arguments()?;
                    match m.arity() {
                        Some(n) => {
                            check_arity(&name, &n.to_string(), args.len() == n, args.len(), &at)?
                        }
                        None => {
                            check_arity(&name, "at least 1", !args.is_empty(), args.len(), &at)?
                        }
                    }
                    return Ok(STerm::Call { name: m, args });
                }
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(self.error("a term"));
                }
                self.bump();
                Ok(STerm::Var(self.var_for(&name)))
            }
            _ => Err(self.error("a term")),
        }
    }
}

fn check_arity(
    name: &str,
    expected: &str,
    ok: bool,
    found: usize,
    at: &Spanned,
) -> Result<(), SyntaxError> {
    if ok {
        Ok(())
    } else {
        Err(SyntaxError::Arity {
            name: name.to_string(),
            expected: expected.to_string(),
            found,
            line: at.line,
            col: at.col,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let f = parse_formula("x0 = x1 /\\ x1 = x2 \\/ x3 = x3 -> x4 = x4 -> x5 = x5").unwrap();
        assert_eq!(
            f.to_string(),
            "x0 = x1 /\\ x1 = x2 \\/ x3 = x3 -> x4 = x4 -> x5 = x5"
        );
        let SFormula::Implies(l, r) = &f else {
            panic!("expected implication")
        };
        assert!(matches!(l.as_ref(), SFormula::Or(..)));
        assert!(matches!(r.as_ref(), SFormula::Implies(..)));
    }

    #[test]
    fn quantifier_body_is_maximal() {
        let f = parse_formula("forall x. x = x /\\ x = x").unwrap();
        assert!(matches!(f, SFormula::Quant { .. }));
    }

    #[test]
    fn names_and_indices() {
        let (_, names) =
            parse_formula_with("forall y. mem(y, x0)", &ParseOptions::default()).unwrap();
        assert_eq!(names["x0"], Var(0));
        assert_eq!(names["y"], Var(1));
        let (_, names) =
            parse_formula_with("forall y. mem(a, y)", &ParseOptions { schema_names: true })
                .unwrap();
        assert_eq!(names["a"], Var(0));
        assert_eq!(names["y"], Var(4));
    }

    #[test]
    fn iota_terms_and_macros() {
        let f = parse_formula("(iota y. forall a. !mem(a, y)) = Empty()").unwrap();
        assert!(matches!(
            f,
            SFormula::Atom(
                STerm::Iota { .. },
                Pred::Eq,
                STerm::Call {
                    name: TermMacro::Empty,
                    ..
                }
            )
        ));
        let t = parse_term("Sep(b in X | b = b)").unwrap();
        assert!(matches!(t, STerm::Sep { .. }));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse_formula("x = Foo(x)"),
            Err(SyntaxError::UnknownMacro {
                name: "Foo".into(),
                line: 1,
                col: 5
            })
        );
        assert!(matches!(
            parse_formula("Pow(x, y) = x"),
            Err(SyntaxError::Arity { .. })
        ));
        assert!(matches!(
            parse_formula("x =\n  #"),
            Err(SyntaxError::UnexpectedChar {
                line: 2,
                col: 3,
                ..
            })
        ));
        assert!(matches!(
            parse_formula("forall . x = x"),
            Err(SyntaxError::Unexpected { .. })
        ));
    }

    #[test]
    fn core_round_trip_examples() {
        let v = Var;
        let f = Formula::forall(
            v(0),
            Formula::implies(
                Formula::not(Formula::forall(v(1), Formula::mem(v(1), v(0)))),
                Formula::and(
                    Formula::eq(v(0), v(0)),
                    Formula::or(Formula::mem(v(0), v(0)), Formula::eq(v(0), v(0))),
                ),
            ),
        );
        let printed = print_formula(&f);
        let back = parse_formula(&printed).unwrap();
        assert_eq!(back.to_string(), printed);
    }

    #[test]
    fn placeholders_fill() {
        let s = parse_schema("forall a. $phi").unwrap();
        assert_eq!(
            s.placeholders().into_iter().collect::<Vec<_>>(),
            vec!["phi".to_string()]
        );
        let filled = s.fill("phi", &Formula::eq(Var(0), Var(0)));
        assert!(filled.placeholders().is_empty());
    }

    #[test]
    fn unicode_aliases() {
        let a = parse_formula("∀x. x ∈ x → ¬(x = x)").unwrap();
        let b = parse_formula("forall x. mem(x, x) -> !(x = x)").unwrap();
        assert_eq!(a, b);
    }
}
