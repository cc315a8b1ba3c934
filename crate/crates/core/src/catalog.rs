//! Axioms and derived statements of both theories, schema instances, and
//! the purity restriction of a formula.
//!
//! Statements are written in surface syntax and expanded on demand. In
//! schema text the names `a`, `b`, `c1`, `c2` are pinned to variables 0..=3
//! so that a schematic `$phi` sees them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::abbrev::{expand, Dialect, ExpandError};
use crate::logic::{Formula, Term, Var};
use crate::syntax::{parse_formula_with, parse_schema, ParseOptions, SCHEMA_NAMES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CatalogError {
    #[error("unknown axiom {0:?}")]
    UnknownAxiom(String),
    #[error("{0} is a schema and needs a formula instance")]
    MissingPhi(AxiomId),
    #[error("{0} is not a schema")]
    NotASchema(AxiomId),
    #[error("instance {name} has free variables {found:?}; allowed are {allowed:?}")]
    PhiSideCondition {
        name: String,
        found: Vec<String>,
        allowed: Vec<String>,
    },
    #[error("instance {name} is written for the {found} dialect, not {expected}")]
    PhiDialect {
        name: String,
        found: Dialect,
        expected: Dialect,
    },
    #[error(transparent)]
    Expand(#[from] ExpandError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AxiomName {
    // first theory
    Extensionality,
    Union,
    PowerSet,
    Infinity,
    InfinityPretty,
    Replacement,
    Foundation,
    EmptySet,
    Pairing,
    Specification,
    KuratowskiCharProp,
    // second theory
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    P1,
    P2,
    P3,
    P4,
    P5,
    SetPairing,
    CartesianProductExistence,
    ZfpCharProp,
}

/// `zf.Extensionality`, `zfp.S3`, ...
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AxiomId {
    pub theory: Dialect,
    pub name: AxiomName,
}

const ZF_AXIOMS: [AxiomName; 11] = [
    AxiomName::Extensionality,
    AxiomName::Union,
    AxiomName::PowerSet,
    AxiomName::Infinity,
    AxiomName::InfinityPretty,
    AxiomName::Replacement,
    AxiomName::Foundation,
    AxiomName::EmptySet,
    AxiomName::Pairing,
    AxiomName::Specification,
    AxiomName::KuratowskiCharProp,
];

const ZFP_AXIOMS: [AxiomName; 16] = [
    AxiomName::S1,
    AxiomName::S2,
    AxiomName::S3,
    AxiomName::S4,
    AxiomName::S5,
    AxiomName::S6,
    AxiomName::P1,
    AxiomName::P2,
    AxiomName::P3,
    AxiomName::P4,
    AxiomName::P5,
    AxiomName::SetPairing,
    AxiomName::Specification,
    AxiomName::CartesianProductExistence,
    AxiomName::ZfpCharProp,
    AxiomName::InfinityPretty,
];

impl AxiomName {
    fn label(self) -> &'static str {
        match self {
            AxiomName::Extensionality => "Extensionality",
            AxiomName::Union => "Union",
            AxiomName::PowerSet => "PowerSet",
            AxiomName::Infinity => "Infinity",
            AxiomName::InfinityPretty => "InfinityPretty",
            AxiomName::Replacement => "Replacement",
            AxiomName::Foundation => "Foundation",
            AxiomName::EmptySet => "EmptySet",
            AxiomName::Pairing => "Pairing",
            AxiomName::Specification => "Specification",
            AxiomName::KuratowskiCharProp => "KuratowskiCharProp",
            AxiomName::S1 => "S1",
            AxiomName::S2 => "S2",
            AxiomName::S3 => "S3",
            AxiomName::S4 => "S4",
            AxiomName::S5 => "S5",
            AxiomName::S6 => "S6",
            AxiomName::P1 => "P1",
            AxiomName::P2 => "P2",
            AxiomName::P3 => "P3",
            AxiomName::P4 => "P4",
            AxiomName::P5 => "P5",
            AxiomName::SetPairing => "SetPairing",
            AxiomName::CartesianProductExistence => "CartesianProductExistence",
            AxiomName::ZfpCharProp => "ZfpCharProp",
        }
    }
}

impl AxiomId {
    pub fn new(theory: Dialect, name: AxiomName) -> Result<AxiomId, CatalogError> {
        let id = AxiomId { theory, name };
        if all_axioms(theory).contains(&id) {
            Ok(id)
        } else {
            Err(CatalogError::UnknownAxiom(id.to_string()))
        }
    }

    pub fn zf(name: AxiomName) -> AxiomId {
        AxiomId::new(Dialect::Zf, name).expect("not a first-theory statement")
    }

    pub fn zfp(name: AxiomName) -> AxiomId {
        AxiomId::new(Dialect::Zfp, name).expect("not a second-theory statement")
    }

    /// Which formula parameter the statement takes, if any.
    pub fn phi_role(self) -> Option<PhiRole> {
        match self.name {
            AxiomName::Replacement | AxiomName::S5 => Some(PhiRole::Replacement),
            AxiomName::Specification => Some(PhiRole::Specification),
            _ => None,
        }
    }

    pub fn is_infinity(self) -> bool {
        matches!(
            self.name,
            AxiomName::Infinity | AxiomName::InfinityPretty | AxiomName::S4
        )
    }

    /// Surface text; schemas contain `$phi`.
    pub fn source(self) -> &'static str {
        source(self)
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.theory, self.name.label())
    }
}

impl FromStr for AxiomId {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<AxiomId, CatalogError> {
        let unknown = || CatalogError::UnknownAxiom(s.to_string());
        let (theory, name) = s.split_once('.').ok_or_else(unknown)?;
        let theory: Dialect = theory.parse().map_err(|_| unknown())?;
        let name = name.to_ascii_lowercase();
        let aliases: &[(&str, AxiomName)] = match theory {
            Dialect::Zf => &[],
            Dialect::Zfp => &[
                ("extensionality", AxiomName::S1),
                ("union", AxiomName::S2),
                ("powerset", AxiomName::S3),
                ("infinity", AxiomName::S4),
                ("replacement", AxiomName::S5),
                ("foundation", AxiomName::S6),
            ],
        };
        if let Some((_, n)) = aliases.iter().find(|(a, _)| *a == name) {
            return Ok(AxiomId { theory, name: *n });
        }
        all_axioms(theory)
            .into_iter()
            .find(|id| id.name.label().to_ascii_lowercase() == name)
            .ok_or_else(unknown)
    }
}

impl Serialize for AxiomId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Every statement of a theory, axioms first.
pub fn all_axioms(theory: Dialect) -> Vec<AxiomId> {
    let names: &[AxiomName] = match theory {
        Dialect::Zf => &ZF_AXIOMS,
        Dialect::Zfp => &ZFP_AXIOMS,
    };
    names.iter().map(|&name| AxiomId { theory, name }).collect()
}

fn source(id: AxiomId) -> &'static str {
    use AxiomName::*;
    match (id.theory, id.name) {
        (Dialect::Zf, Extensionality) => "forall x. forall y. (forall a. mem(a, x) <-> mem(a, y)) -> x = y",
        (Dialect::Zf, Union) => "forall x. exists y. forall a. mem(a, y) <-> (exists z in x. mem(a, z))",
        (Dialect::Zf, PowerSet) => "forall x. exists y. forall z. mem(z, y) <-> Subset(z, x)",
        (Dialect::Zf, Infinity) => {
            "exists y. (exists z in y. forall b. !mem(b, z)) /\\ \
             (forall x in y. exists s in y. forall c. mem(c, s) <-> (mem(c, x) \\/ c = x))"
        }
        (_, InfinityPretty) => "exists y. mem(Empty(), y) /\\ (forall x in y. mem(Succ(x), y))",
        (Dialect::Zf, Replacement) => {
            "forall c1. forall c2. forall x. (forall a in x. existsu b. $phi) -> \
             (exists y. forall b. mem(b, y) <-> (exists a in x. $phi))"
        }
        (Dialect::Zf, Foundation) => "forall x. x = Empty() \\/ (exists y in x. !(exists b in x. mem(b, y)))",
        (Dialect::Zf, EmptySet) => "exists x. forall b. !mem(b, x)",
        (_, Pairing) | (_, SetPairing) => "forall a. forall b. exists x. forall c. mem(c, x) <-> (c = a \\/ c = b)",
        (Dialect::Zf, Specification) => "forall x. exists y. forall a. mem(a, y) <-> (mem(a, x) /\\ $phi)",
        (Dialect::Zfp, Specification) => {
            "forall_set x. exists_set y. forall a. mem(a, y) <-> (mem(a, x) /\\ $phi)"
        }
        (_, KuratowskiCharProp) => {
            "forall a. forall b. forall c. forall d. KPair(a, b) = KPair(c, d) <-> (a = c /\\ b = d)"
        }
        (_, S1) => "forall_set x. forall_set y. (forall a. mem(a, x) <-> mem(a, y)) -> x = y",
        (_, S2) => "forall_set x. exists y. forall a. mem(a, y) <-> (exists z in x. mem(a, z))",
        (_, S3) => "forall_set x. exists y. forall z. mem(z, y) <-> Subset(z, x)",
        (_, S4) => {
            "exists y. (exists_set z in y. forall b. !mem(b, z)) /\\ \
             (forall x in y. exists s in y. forall c. mem(c, s) <-> (mem(c, x) \\/ c = x))"
        }
        (_, S5) => {
            "forall c1. forall c2. forall x. (forall a in x. existsu b. $phi) -> \
             (exists_set y. forall b. mem(b, y) <-> (exists a in x. $phi))"
        }
        (_, S6) => {
            "forall_set x. x = Empty() \\/ \
             (exists a in x. !(exists b in x. pi1(b, a) \\/ pi2(b, a) \\/ mem(b, a)))"
        }
        (_, P1) => "forall_pair p. forall a. !mem(a, p)",
        (_, P2) => "forall a. forall b. exists p. pi1(a, p) /\\ pi2(b, p)",
        (_, P3) => "forall p. (exists a. pi1(a, p)) <-> (exists b. pi2(b, p))",
        (_, P4) => "forall_pair p. (existsu a. pi1(a, p)) /\\ (existsu b. pi2(b, p))",
        (_, P5) => {
            "forall_pair p. forall_pair q. \
             (forall a. (pi1(a, p) <-> pi1(a, q)) /\\ (pi2(a, p) <-> pi2(a, q))) -> p = q"
        }
        (_, CartesianProductExistence) => {
            "forall_set x. forall_set y. exists_set z. forall p. \
             mem(p, z) <-> (exists a in x. exists b in y. pi1(a, p) /\\ pi2(b, p))"
        }
        (_, ZfpCharProp) => {
            "forall a. forall b. forall c. forall d. PPair(a, b) = PPair(c, d) <-> (a = c /\\ b = d)"
        }
        (Dialect::Zfp, _) => unreachable!("{} is not a second-theory statement", id.name.label()),
    }
}

/// The fully expanded statement. Schemas need an instance of the right role.
pub fn get_axiom(id: AxiomId, phi: Option<&PhiInstance>) -> Result<Formula, CatalogError> {
    let template = parse_schema(source(id)).map_err(ExpandError::from)?;
    let filled = match (id.phi_role(), phi) {
        (None, None) => template,
        (None, Some(_)) => return Err(CatalogError::NotASchema(id)),
        (Some(_), None) => return Err(CatalogError::MissingPhi(id)),
        (Some(role), Some(p)) => {
            if p.dialect != id.theory {
                return Err(CatalogError::PhiDialect {
                    name: p.name.clone(),
                    found: p.dialect,
                    expected: id.theory,
                });
            }
            p.check_role(role)?;
            template.fill("phi", &p.formula)
        }
    };
    Ok(expand(&filled, id.theory)?)
}

/// Names of the variables in a statement's text, by variable.
pub fn var_names(id: AxiomId) -> BTreeMap<Var, String> {
    let (_, names) = parse_formula_with(source(id), &ParseOptions { schema_names: true })
        .expect("catalog text is well formed");
    let mut out: BTreeMap<Var, String> = names.into_iter().map(|(n, v)| (v, n)).collect();
    for (i, n) in SCHEMA_NAMES.iter().enumerate() {
        out.entry(Var(i as u32)).or_insert_with(|| n.to_string());
    }
    out
}

/// Ugly and pretty forms of Infinity; the first is the one checked.
pub fn infinity_versions_pair(dialect: Dialect) -> (Formula, Formula) {
    let ugly = match dialect {
        Dialect::Zf => AxiomId::zf(AxiomName::Infinity),
        Dialect::Zfp => AxiomId::zfp(AxiomName::S4),
    };
    let pretty = AxiomId::new(dialect, AxiomName::InfinityPretty).expect("both theories list it");
    (
        get_axiom(ugly, None).expect("catalog text is well formed"),
        get_axiom(pretty, None).expect("catalog text is well formed"),
    )
}

// ---------------------------------------------------------------------------
// Schema instances

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PhiRole {
    /// Free variables among `a`, `b`, `c1`, `c2`.
    Replacement,
    /// Free variables among `a`.
    Specification,
}

impl PhiRole {
    pub fn allowed(self) -> BTreeSet<Var> {
        match self {
            PhiRole::Replacement => (0..4).map(Var).collect(),
            PhiRole::Specification => [Var(0)].into_iter().collect(),
        }
    }
}

/// What a catalogued instance computes, for witness construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PhiShape {
    /// `b = a`
    Identity,
    /// `b = Empty()`
    ConstantEmpty,
    /// `b = Succ(a)`
    Successor,
    /// `b = c1`
    Parameter,
    /// `b` is the pair `a` with its projections exchanged.
    Swap,
    /// `a = Empty()`
    IsEmpty,
    /// `a` has a member.
    Inhabited,
    /// `Empty()` is a member of `a`.
    HasEmptyMember,
    /// `Pair(a)`
    IsPair,
}

/// A formula for a schema's `$phi`, checked against the side condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiInstance {
    pub name: String,
    pub dialect: Dialect,
    pub role: PhiRole,
    pub source: String,
    pub formula: Formula,
    pub shape: Option<PhiShape>,
}

impl PhiInstance {
    /// Parses `src` in schema mode and expands it.
    pub fn parse(
        name: &str,
        dialect: Dialect,
        role: PhiRole,
        src: &str,
    ) -> Result<PhiInstance, CatalogError> {
        let parsed = parse_schema(src).map_err(ExpandError::from)?;
        let formula = expand(&parsed, dialect)?;
        let inst = PhiInstance {
            name: name.to_string(),
            dialect,
            role,
            source: src.to_string(),
            formula,
            shape: None,
        };
        inst.check_role(role)?;
        Ok(inst)
    }

    fn with_shape(mut self, shape: PhiShape) -> PhiInstance {
        self.shape = Some(shape);
        self
    }

    fn check_role(&self, role: PhiRole) -> Result<(), CatalogError> {
        let allowed = role.allowed();
        let free = self.formula.free_vars();
        if free.is_subset(&allowed) {
            return Ok(());
        }
        Err(CatalogError::PhiSideCondition {
            name: self.name.clone(),
            found: free.iter().map(|v| var_name(*v)).collect(),
            allowed: allowed.iter().map(|v| var_name(*v)).collect(),
        })
    }
}

fn var_name(v: Var) -> String {
    SCHEMA_NAMES
        .get(v.0 as usize)
        .map(|s| s.to_string())
        .unwrap_or_else(|| v.to_string())
}

/// Test instances for the two schemas.
pub fn phi_catalog(dialect: Dialect) -> Vec<PhiInstance> {
    let mut out = Vec::new();
    let mut add = |name: &str, role, src: &str, shape| {
        out.push(
            PhiInstance::parse(name, dialect, role, src)
                .expect("catalogued instance is valid")
                .with_shape(shape),
        );
    };
    add(
        "identity",
        PhiRole::Replacement,
        "b = a",
        PhiShape::Identity,
    );
    add(
        "constant",
        PhiRole::Replacement,
        "b = Empty()",
        PhiShape::ConstantEmpty,
    );
    add(
        "successor",
        PhiRole::Replacement,
        "b = Succ(a)",
        PhiShape::Successor,
    );
    add(
        "parameter",
        PhiRole::Replacement,
        "b = c1",
        PhiShape::Parameter,
    );
    if dialect == Dialect::Zfp {
        add(
            "swap",
            PhiRole::Replacement,
            "exists u. exists v. pi1(u, a) /\\ pi2(v, a) /\\ pi1(v, b) /\\ pi2(u, b) /\\ Pair(b)",
            PhiShape::Swap,
        );
    }
    add(
        "empty",
        PhiRole::Specification,
        "a = Empty()",
        PhiShape::IsEmpty,
    );
    add(
        "inhabited",
        PhiRole::Specification,
        "exists b. mem(b, a)",
        PhiShape::Inhabited,
    );
    add(
        "has-empty",
        PhiRole::Specification,
        "mem(Empty(), a)",
        PhiShape::HasEmptyMember,
    );
    if dialect == Dialect::Zfp {
        add("pair", PhiRole::Specification, "Pair(a)", PhiShape::IsPair);
    }
    out
}

/// Catalogued instances usable for a statement.
pub fn phis_for(id: AxiomId) -> Vec<PhiInstance> {
    match id.phi_role() {
        Some(role) => phi_catalog(id.theory)
            .into_iter()
            .filter(|p| p.role == role)
            .collect(),
        None => Vec::new(),
    }
}

// ---------------------------------------------------------------------------

/// Guards every universal quantifier with the purity marker:
/// `forall x. psi` becomes `forall x. Pure(x) -> psi`. Descriptions are
/// left unguarded but their bodies are transformed.
pub fn prestrict(f: &Formula) -> Formula {
    match f {
        Formula::Atom(l, p, r) => Formula::Atom(prestrict_term(l), *p, prestrict_term(r)),
        Formula::Implies(a, b) => Formula::implies(prestrict(a), prestrict(b)),
        Formula::Not(a) => Formula::not(prestrict(a)),
        Formula::Forall(x, body) => Formula::forall(
            *x,
            Formula::implies(Formula::Pure(Term::Var(*x)), prestrict(body)),
        ),
        Formula::Pure(t) => Formula::Pure(prestrict_term(t)),
        Formula::InUniverse(t) => Formula::InUniverse(prestrict_term(t)),
    }
}

fn prestrict_term(t: &Term) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::Iota(x, body) => Term::iota(*x, prestrict(body)),
    }
}
