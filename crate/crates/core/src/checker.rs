//! Finite-stage verification of both theories.
//!
//! Statements of the pair theory are translated and checked in a stage of
//! the tagged hierarchy, statements of plain set theory in a von Neumann
//! stage. The leading universal quantifiers of a statement (reached through
//! universal binders and consequents of implications) range over the stage
//! `margin` levels down, so that the witnesses they call for still fit.
//!
//! Two independent procedures produce verdicts. The generic one runs the
//! evaluator on the statement itself. The witness-guided one builds the
//! object each existential asks for directly from the hierarchy and checks
//! its membership facts natively.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::abbrev::Dialect;
use crate::catalog::{
    all_axioms, get_axiom, phis_for, var_names, AxiomId, AxiomName, CatalogError, PhiInstance,
    PhiShape,
};
use crate::hf::{self, HfSet};
use crate::hierarchy::{self, build_w, m_pair, m_set, HierarchyError, WUniverse};
use crate::logic::{Formula, Pred, Var};
use crate::semantics::{
    estimate_cost, set_slot, star, EvalError, Evaluator, Range, Slots, Structure,
};

/// Largest estimated number of atomic evaluations a generic check may take.
pub const DEFAULT_BUDGET: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    #[serde(rename = "generic")]
    Generic,
    #[serde(rename = "witness")]
    WitnessGuided,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Generic => "generic",
            Mode::WitnessGuided => "witness",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s.to_ascii_lowercase().as_str() {
            "generic" => Ok(Mode::Generic),
            "witness" | "witness-guided" | "witnessguided" => Ok(Mode::WitnessGuided),
            _ => Err(format!("unknown mode {s:?} (expected generic or witness)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Status {
    Holds,
    Fails,
    /// Infinity, which no finite stage satisfies.
    ExpectedFailFinite,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Binding {
    pub var: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub axiom: String,
    pub status: Status,
    pub margin: u32,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<Binding>>,
    pub millis: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("{axiom}: estimated {estimate:.3e} evaluations exceeds the budget of {budget:.1e}")]
    BudgetExceeded {
        axiom: String,
        estimate: f64,
        budget: f64,
    },
    #[error("{axiom}: no witness construction ({reason})")]
    WitnessUnavailable { axiom: String, reason: String },
    #[error("{axiom} cannot be checked in a model of the {model} theory")]
    TheoryMismatch { axiom: String, model: Dialect },
    #[error("{axiom}: generic verdict {generic} but witness verdict {witness}")]
    Disagreement {
        axiom: String,
        generic: Status,
        witness: Status,
        counterexample: Option<Vec<Binding>>,
    },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

/// A finite stage together with the theory it is a model of: `W_N` for the
/// pair theory, `V_N` for plain set theory.
pub struct Model {
    theory: Dialect,
    depth: u32,
    structure: Structure,
}

impl Model {
    pub fn new(theory: Dialect, depth: u32) -> Result<Model, CheckError> {
        match theory {
            Dialect::Zfp => Ok(Model::from_universe(&build_w(depth)?)),
            Dialect::Zf => Ok(Model {
                theory,
                depth,
                structure: Structure::v(depth)?,
            }),
        }
    }

    pub fn from_universe(u: &WUniverse) -> Model {
        Model {
            theory: Dialect::Zfp,
            depth: u.depth(),
            structure: Structure::w(u),
        }
    }

    pub fn theory(&self) -> Dialect {
        self.theory
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Size of the stage `margin` levels below the top.
    pub fn stage_len(&self, margin: u32) -> usize {
        self.structure.tier_len(self.depth.saturating_sub(margin))
    }

    pub fn render(&self, i: u32) -> String {
        let x = self.structure.value(i);
        match self.theory {
            Dialect::Zfp => hierarchy::render(x),
            Dialect::Zf => hf::render(x),
        }
    }
}

/// Outer-quantifier reserve used unless a plan overrides it.
pub fn default_margin(id: AxiomId) -> u32 {
    use AxiomName::*;
    match (id.theory, id.name) {
        (Dialect::Zfp, S2 | S5 | P2 | ZfpCharProp) => 1,
        (Dialect::Zfp, S3 | SetPairing | Specification | CartesianProductExistence) => 2,
        (Dialect::Zf, PowerSet | Pairing | Replacement) => 1,
        (Dialect::Zf, KuratowskiCharProp) => 2,
        _ => 0,
    }
}

#[derive(Clone, Debug)]
pub struct CheckPlan {
    pub axiom: AxiomId,
    pub phi: Option<PhiInstance>,
    pub mode: Mode,
    pub margin: u32,
    pub budget: f64,
}

impl CheckPlan {
    pub fn new(axiom: AxiomId, phi: Option<PhiInstance>, mode: Mode) -> CheckPlan {
        CheckPlan {
            axiom,
            phi,
            mode,
            margin: default_margin(axiom),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_margin(mut self, margin: u32) -> CheckPlan {
        self.margin = margin;
        self
    }

    pub fn with_budget(mut self, budget: f64) -> CheckPlan {
        self.budget = budget;
        self
    }

    /// `zfp.S5[successor]` for schema instances, the statement id otherwise.
    pub fn label(&self) -> String {
        match &self.phi {
            Some(p) => format!("{}[{}]", self.axiom, p.name),
            None => self.axiom.to_string(),
        }
    }
}

/// One plan per statement of `theory`, schemas once per catalogued instance.
/// The pretty form of Infinity is left out: it is not an axiom, and at a
/// finite stage its successor term can be undefined, which makes it true.
pub fn plans(theory: Dialect, mode: Mode) -> Vec<CheckPlan> {
    let mut out = Vec::new();
    for id in all_axioms(theory) {
        if id.name == AxiomName::InfinityPretty {
            continue;
        }
        if id.phi_role().is_some() {
            out.extend(
                phis_for(id)
                    .into_iter()
                    .map(|p| CheckPlan::new(id, Some(p), mode)),
            );
        } else {
            out.push(CheckPlan::new(id, None, mode));
        }
    }
    out
}

struct Outcome {
    status: Status,
    counterexample: Option<Vec<(String, u32)>>,
}

impl Outcome {
    fn holds() -> Outcome {
        Outcome {
            status: Status::Holds,
            counterexample: None,
        }
    }

    fn fails(bindings: &[(&str, u32)]) -> Outcome {
        Outcome {
            status: Status::Fails,
            counterexample: Some(bindings.iter().map(|(n, v)| (n.to_string(), *v)).collect()),
        }
    }

    fn infinity(witness_found: bool) -> Outcome {
        let status = if witness_found {
            Status::Holds
        } else {
            Status::ExpectedFailFinite
        };
        Outcome {
            status,
            counterexample: None,
        }
    }
}

pub fn check_axiom(plan: &CheckPlan, model: &Model) -> Result<CheckReport, CheckError> {
    if plan.axiom.theory != model.theory {
        return Err(CheckError::TheoryMismatch {
            axiom: plan.label(),
            model: model.theory,
        });
    }
    let formula = get_axiom(plan.axiom, plan.phi.as_ref())?;
    let start = Instant::now();
    let outcome = match plan.mode {
        Mode::Generic => generic(plan, model, &formula)?,
        Mode::WitnessGuided => witness(plan, model)?,
    };
    let counterexample = outcome.counterexample.map(|bs| {
        bs.into_iter()
            .map(|(var, i)| Binding {
                var,
                value: model.render(i),
            })
            .collect()
    });
    Ok(CheckReport {
        axiom: plan.label(),
        status: outcome.status,
        margin: plan.margin,
        mode: plan.mode,
        counterexample,
        millis: start.elapsed().as_millis() as u64,
    })
}

/// Every plan of the model's theory, in catalogue order.
pub fn check_model(model: &Model, mode: Mode) -> Vec<Result<CheckReport, CheckError>> {
    plans(model.theory, mode)
        .par_iter()
        .map(|p| check_axiom(p, model))
        .collect()
}

pub fn check_all(theory: Dialect, depth: u32, mode: Mode) -> Result<Vec<CheckReport>, CheckError> {
    let model = Model::new(theory, depth)?;
    check_model(&model, mode).into_iter().collect()
}

/// Runs both procedures on both theories at `depth` and returns the number
/// of verdicts compared. The first disagreement is an error.
pub fn cross_validate(depth: u32) -> Result<usize, CheckError> {
    let mut compared = 0;
    for theory in [Dialect::Zfp, Dialect::Zf] {
        let model = Model::new(theory, depth)?;
        let generic = check_model(&model, Mode::Generic);
        let guided = check_model(&model, Mode::WitnessGuided);
        for (g, w) in generic.into_iter().zip(guided) {
            let (g, w) = (g?, w?);
            if g.status != w.status {
                let counterexample = g.counterexample.or(w.counterexample);
                return Err(CheckError::Disagreement {
                    axiom: g.axiom,
                    generic: g.status,
                    witness: w.status,
                    counterexample,
                });
            }
            compared += 1;
        }
    }
    Ok(compared)
}

/// Least margin in `0..=depth` at which the plan's statement holds.
pub fn minimal_margin(plan: &CheckPlan, model: &Model) -> Result<Option<u32>, CheckError> {
    for margin in 0..=model.depth {
        let report = check_axiom(&plan.clone().with_margin(margin), model);
        match report {
            Ok(r) if r.status == Status::Holds => return Ok(Some(margin)),
            Ok(_) | Err(CheckError::BudgetExceeded { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Generic procedure

fn generic(plan: &CheckPlan, model: &Model, formula: &Formula) -> Result<Outcome, CheckError> {
    let f = match model.theory {
        Dialect::Zfp => star(formula),
        Dialect::Zf => formula.clone(),
    };
    let s = &model.structure;
    let limit = model.stage_len(plan.margin);
    let estimate = estimate_cost(&f, s, limit);
    if estimate > plan.budget {
        if plan.axiom.is_infinity() {
            return Ok(Outcome::infinity(false));
        }
        return Err(CheckError::BudgetExceeded {
            axiom: plan.label(),
            estimate,
            budget: plan.budget,
        });
    }
    let mut sweep = Sweep {
        ev: Evaluator::new(s),
        limit,
        trail: Vec::new(),
    };
    let holds = sweep.run(&f, &mut Slots::new())?;
    if plan.axiom.is_infinity() {
        return Ok(Outcome::infinity(holds));
    }
    if holds {
        return Ok(Outcome::holds());
    }
    let names = var_names(plan.axiom);
    let bindings = sweep
        .trail
        .into_iter()
        .map(|(v, i)| (names.get(&v).cloned().unwrap_or_else(|| v.to_string()), i))
        .collect();
    Ok(Outcome {
        status: Status::Fails,
        counterexample: Some(bindings),
    })
}

/// Enumerates the outer universal prefix in index order, so the first
/// failure found is the least one.
struct Sweep<'s> {
    ev: Evaluator<'s>,
    limit: usize,
    trail: Vec<(Var, u32)>,
}

impl Sweep<'_> {
    fn run(&mut self, f: &Formula, env: &mut Slots) -> Result<bool, EvalError> {
        match f {
            Formula::Forall(v, body) => {
                let range = if body.free_vars().contains(v) {
                    self.ev.quantifier_range(*v, body, env)?
                } else {
                    // one representative suffices for a vacuous binder
                    Range::List((0..self.limit.min(1) as u32).collect())
                };
                let limit = self.limit as u32;
                for a in range.iter(self.limit).take_while(|&a| a < limit) {
                    set_slot(env, *v, Some(a));
                    self.trail.push((*v, a));
                    if !self.run(body, env)? {
                        return Ok(false);
                    }
                    self.trail.pop();
                }
                set_slot(env, *v, None);
                Ok(true)
            }
            Formula::Implies(a, b) => {
                if !self.ev.formula(a, env)? {
                    return Ok(true);
                }
                self.run(b, env)
            }
            _ => self.ev.formula(f, env),
        }
    }
}

// ---------------------------------------------------------------------------
// Witness-guided procedure

fn shape_of(plan: &CheckPlan) -> Result<PhiShape, CheckError> {
    let phi = plan
        .phi
        .as_ref()
        .ok_or(CatalogError::MissingPhi(plan.axiom))?;
    phi.shape.ok_or_else(|| CheckError::WitnessUnavailable {
        axiom: plan.label(),
        reason: format!("instance {} has no known shape", phi.name),
    })
}

fn witness(plan: &CheckPlan, model: &Model) -> Result<Outcome, CheckError> {
    use AxiomName::*;
    let n = Native::new(model, plan.margin);
    let zfp = model.theory == Dialect::Zfp;
    Ok(match plan.axiom.name {
        S1 | Extensionality => n.extensionality(),
        S2 | Union => n.union(),
        S3 | PowerSet => n.power_set(),
        S4 | Infinity => n.infinity_ugly(),
        InfinityPretty => n.infinity_pretty(),
        S5 | Replacement => {
            let shape = shape_of(plan)?;
            if !zfp && shape == PhiShape::Swap {
                return Err(CheckError::WitnessUnavailable {
                    axiom: plan.label(),
                    reason: "swap needs primitive pairs".into(),
                });
            }
            n.replacement(shape)
        }
        S6 | Foundation => n.foundation(),
        EmptySet => n.empty_set(),
        Pairing | SetPairing => n.pairing(),
        Specification => {
            let shape = shape_of(plan)?;
            if !zfp && shape == PhiShape::IsPair {
                return Err(CheckError::WitnessUnavailable {
                    axiom: plan.label(),
                    reason: "pair test needs primitive pairs".into(),
                });
            }
            n.specification(shape)
        }
        KuratowskiCharProp => n.char_prop(|a, b| n.kpair(a, b)),
        ZfpCharProp => n.char_prop(|a, b| n.ppair(a, b)),
        P1 => n.pairs_memberless(),
        P2 => n.formation(),
        P3 => n.projections_together(),
        P4 => n.projections_unique(),
        P5 => n.pair_extensionality(),
        CartesianProductExistence => n.product(),
    })
}

/// The witness for Power Set at `x` in a pair-theory model, if it exists.
pub fn power_set_witness(model: &Model, x: HfSet) -> Option<HfSet> {
    let n = Native::new(model, 0);
    let i = model.structure.index_of(x)?;
    n.power_witness(i).map(|y| model.structure.value(y))
}

/// Direct computations over a model's index tables.
struct Native<'m> {
    s: &'m Structure,
    zfp: bool,
    /// Outer quantifiers range over indices below this bound.
    limit: u32,
}

fn sorted(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    v.dedup();
    v
}

impl<'m> Native<'m> {
    fn new(model: &'m Model, margin: u32) -> Native<'m> {
        Native {
            s: &model.structure,
            zfp: model.theory == Dialect::Zfp,
            limit: model.stage_len(margin) as u32,
        }
    }

    fn members(&self, x: u32) -> &[u32] {
        self.s.predecessors(Pred::Mem, x)
    }

    fn is_set(&self, x: u32) -> bool {
        !self.zfp || self.s.predecessors(Pred::Pi1, x).is_empty()
    }

    fn outer_sets(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.limit).filter(|&x| self.is_set(x))
    }

    /// The set with exactly these members, built as a value and looked up.
    fn mk_set(&self, members: &[u32]) -> Option<u32> {
        let contents = HfSet::from_elems(members.iter().map(|&a| self.s.value(a)).collect());
        let v = if self.zfp { m_set(contents) } else { contents };
        self.s.index_of(v)
    }

    fn mk_pair(&self, a: u32, b: u32) -> Option<u32> {
        self.s.index_of(m_pair(self.s.value(a), self.s.value(b)))
    }

    // Descriptions, with the evaluator's treatment of undefined arguments.

    fn unique(xs: impl Iterator<Item = u32>) -> Option<u32> {
        let mut it = xs;
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    /// `iota y. forall c. c in y <-> c in m`
    fn described(&self, members: &[u32]) -> Option<u32> {
        Self::unique(self.s.with_members(members).iter().copied())
    }

    /// The same restricted to sets.
    fn described_set(&self, members: &[u32]) -> Option<u32> {
        Self::unique(
            self.s
                .with_members(members)
                .iter()
                .copied()
                .filter(|&y| self.is_set(y)),
        )
    }

    fn empty(&self) -> Option<u32> {
        self.described_set(&[])
    }

    fn upair(&self, a: Option<u32>, b: Option<u32>) -> Option<u32> {
        self.described(&sorted(a.into_iter().chain(b).collect()))
    }

    fn union_of(&self, x: Option<u32>) -> Option<u32> {
        let u = match x {
            Some(x) => sorted(
                self.members(x)
                    .iter()
                    .flat_map(|&z| self.members(z).iter().copied())
                    .collect(),
            ),
            None => Vec::new(),
        };
        self.described_set(&u)
    }

    fn succ(&self, a: u32) -> Option<u32> {
        let single = self.upair(Some(a), Some(a));
        self.union_of(self.upair(Some(a), single))
    }

    fn kpair(&self, a: u32, b: u32) -> Option<u32> {
        let single = self.upair(Some(a), Some(a));
        self.upair(single, self.upair(Some(a), Some(b)))
    }

    fn ppair(&self, a: u32, b: u32) -> Option<u32> {
        let seconds = self.s.successors(Pred::Pi2, b);
        Self::unique(
            self.s
                .successors(Pred::Pi1, a)
                .iter()
                .copied()
                .filter(|q| seconds.binary_search(q).is_ok()),
        )
    }

    fn first_collision<K: std::hash::Hash + Eq>(
        &self,
        items: impl Iterator<Item = u32>,
        key: impl Fn(u32) -> K,
    ) -> Option<(u32, u32)> {
        let mut groups: HashMap<K, Vec<u32>> = HashMap::new();
        for x in items {
            groups.entry(key(x)).or_default().push(x);
        }
        groups
            .into_values()
            .filter(|g| g.len() > 1)
            .map(|g| (g[0], g[1]))
            .min()
    }

    fn extensionality(&self) -> Outcome {
        match self.first_collision(self.outer_sets(), |x| self.members(x).to_vec()) {
            Some((x, y)) => Outcome::fails(&[("x", x), ("y", y)]),
            None => Outcome::holds(),
        }
    }

    fn pair_extensionality(&self) -> Outcome {
        let pairs = (0..self.limit).filter(|&p| !self.is_set(p));
        let key = |p| {
            (
                self.s.predecessors(Pred::Pi1, p).to_vec(),
                self.s.predecessors(Pred::Pi2, p).to_vec(),
            )
        };
        match self.first_collision(pairs, key) {
            Some((p, q)) => Outcome::fails(&[("p", p), ("q", q)]),
            None => Outcome::holds(),
        }
    }

    /// `y` exists and its members are exactly `expected`.
    fn confirms(&self, y: Option<u32>, expected: &[u32]) -> bool {
        y.is_some_and(|y| self.members(y) == expected)
    }

    fn union(&self) -> Outcome {
        for x in self.outer_sets() {
            let u = sorted(
                self.members(x)
                    .iter()
                    .flat_map(|&z| self.members(z).iter().copied())
                    .collect(),
            );
            if !self.confirms(self.mk_set(&u), &u) {
                return Outcome::fails(&[("x", x)]);
            }
        }
        Outcome::holds()
    }

    fn subset(&self, z: u32, x: u32) -> bool {
        let xs = self.members(x);
        self.is_set(z)
            && self.is_set(x)
            && self.members(z).iter().all(|a| xs.binary_search(a).is_ok())
    }

    /// `{0} x P(x')` in the tagged reading: the m-set of all m-sets built
    /// from subsets of the contents of `x`.
    fn power_witness(&self, x: u32) -> Option<u32> {
        let contents: Vec<HfSet> = self.members(x).iter().map(|&a| self.s.value(a)).collect();
        let mut subs = Vec::new();
        for sub in hf::subsets(&contents) {
            let members: Vec<u32> = sub
                .elems()
                .iter()
                .map(|v| self.s.index_of(*v))
                .collect::<Option<_>>()?;
            subs.push(self.mk_set(&sorted(members))?);
        }
        self.mk_set(&sorted(subs))
    }

    fn power_set(&self) -> Outcome {
        let n = self.s.len() as u32;
        for x in self.outer_sets() {
            let expected: Vec<u32> = (0..n).filter(|&z| self.subset(z, x)).collect();
            if !self.confirms(self.power_witness(x), &expected) {
                return Outcome::fails(&[("x", x)]);
            }
        }
        Outcome::holds()
    }

    fn image(&self, shape: PhiShape, a: u32, c1: u32) -> Option<u32> {
        match shape {
            PhiShape::Identity => Some(a),
            PhiShape::ConstantEmpty => self.empty(),
            PhiShape::Successor => self.succ(a),
            PhiShape::Parameter => Some(c1),
            PhiShape::Swap => {
                let u = *self.s.predecessors(Pred::Pi1, a).first()?;
                let v = *self.s.predecessors(Pred::Pi2, a).first()?;
                self.mk_pair(v, u)
            }
            _ => unreachable!("not a replacement shape"),
        }
    }

    fn replacement(&self, shape: PhiShape) -> Outcome {
        for c1 in 0..self.limit {
            for c2 in 0..self.limit {
                for x in 0..self.limit {
                    let img: Option<Vec<u32>> = self
                        .members(x)
                        .iter()
                        .map(|&a| self.image(shape, a, c1))
                        .collect();
                    // premise fails: some member has no image
                    let Some(img) = img else { continue };
                    let img = sorted(img);
                    if !self.confirms(self.mk_set(&img), &img) {
                        return Outcome::fails(&[("c1", c1), ("c2", c2), ("x", x)]);
                    }
                }
            }
        }
        Outcome::holds()
    }

    fn selected(&self, shape: PhiShape, a: u32) -> bool {
        match shape {
            PhiShape::IsEmpty => Some(a) == self.empty(),
            PhiShape::Inhabited => !self.members(a).is_empty(),
            PhiShape::HasEmptyMember => self.empty().is_some_and(|e| self.s.holds(Pred::Mem, e, a)),
            PhiShape::IsPair => !self.s.predecessors(Pred::Pi1, a).is_empty(),
            _ => unreachable!("not a specification shape"),
        }
    }

    fn specification(&self, shape: PhiShape) -> Outcome {
        for x in self.outer_sets() {
            let chosen: Vec<u32> = self
                .members(x)
                .iter()
                .copied()
                .filter(|&a| self.selected(shape, a))
                .collect();
            if !self.confirms(self.mk_set(&chosen), &chosen) {
                return Outcome::fails(&[("x", x)]);
            }
        }
        Outcome::holds()
    }

    fn related(&self, b: u32, a: u32) -> bool {
        self.s.holds(Pred::Mem, b, a)
            || (self.zfp && (self.s.holds(Pred::Pi1, b, a) || self.s.holds(Pred::Pi2, b, a)))
    }

    fn foundation(&self) -> Outcome {
        for x in self.outer_sets() {
            let ms = self.members(x);
            if ms.is_empty() {
                continue;
            }
            // members are listed by rank, so the first is the natural candidate
            let minimal = |a: u32| !ms.iter().any(|&b| self.related(b, a));
            if !minimal(ms[0]) && !ms.iter().any(|&a| minimal(a)) {
                return Outcome::fails(&[("x", x)]);
            }
        }
        Outcome::holds()
    }

    fn empty_set(&self) -> Outcome {
        if self.mk_set(&[]).is_some_and(|e| self.members(e).is_empty()) {
            Outcome::holds()
        } else {
            Outcome::fails(&[])
        }
    }

    fn pairing(&self) -> Outcome {
        for a in 0..self.limit {
            for b in 0..self.limit {
                let both = sorted(vec![a, b]);
                if !self.confirms(self.mk_set(&both), &both) {
                    return Outcome::fails(&[("a", a), ("b", b)]);
                }
            }
        }
        Outcome::holds()
    }

    fn char_prop(&self, pair: impl Fn(u32, u32) -> Option<u32>) -> Outcome {
        let l = self.limit;
        let table: Vec<Option<u32>> = (0..l * l).map(|i| pair(i / l, i % l)).collect();
        for a in 0..l {
            for b in 0..l {
                for c in 0..l {
                    for d in 0..l {
                        let (p, q) = (table[(a * l + b) as usize], table[(c * l + d) as usize]);
                        let lhs = p.is_some() && p == q;
                        if lhs != (a == c && b == d) {
                            return Outcome::fails(&[("a", a), ("b", b), ("c", c), ("d", d)]);
                        }
                    }
                }
            }
        }
        Outcome::holds()
    }

    fn pairs_memberless(&self) -> Outcome {
        for p in (0..self.limit).filter(|&p| !self.is_set(p)) {
            if let Some(&a) = self.members(p).first() {
                return Outcome::fails(&[("p", p), ("a", a)]);
            }
        }
        Outcome::holds()
    }

    fn formation(&self) -> Outcome {
        for a in 0..self.limit {
            for b in 0..self.limit {
                let ok = self.mk_pair(a, b).is_some_and(|p| {
                    self.s.holds(Pred::Pi1, a, p) && self.s.holds(Pred::Pi2, b, p)
                });
                if !ok {
                    return Outcome::fails(&[("a", a), ("b", b)]);
                }
            }
        }
        Outcome::holds()
    }

    fn projections_together(&self) -> Outcome {
        for p in 0..self.limit {
            if self.s.predecessors(Pred::Pi1, p).is_empty()
                != self.s.predecessors(Pred::Pi2, p).is_empty()
            {
                return Outcome::fails(&[("p", p)]);
            }
        }
        Outcome::holds()
    }

    fn projections_unique(&self) -> Outcome {
        for p in (0..self.limit).filter(|&p| !self.is_set(p)) {
            if self.s.predecessors(Pred::Pi1, p).len() != 1
                || self.s.predecessors(Pred::Pi2, p).len() != 1
            {
                return Outcome::fails(&[("p", p)]);
            }
        }
        Outcome::holds()
    }

    fn product(&self) -> Outcome {
        let sets: Vec<u32> = self.outer_sets().collect();
        for &x in &sets {
            for &y in &sets {
                let built: Option<Vec<u32>> = self
                    .members(x)
                    .iter()
                    .flat_map(|&a| self.members(y).iter().map(move |&b| (a, b)))
                    .map(|(a, b)| self.mk_pair(a, b))
                    .collect();
                let ys = self.members(y);
                let expected = sorted(
                    self.members(x)
                        .iter()
                        .flat_map(|&a| self.s.successors(Pred::Pi1, a).iter().copied())
                        .filter(|&p| {
                            self.s
                                .predecessors(Pred::Pi2, p)
                                .iter()
                                .any(|b| ys.binary_search(b).is_ok())
                        })
                        .collect(),
                );
                let ok = built.is_some_and(|b| self.confirms(self.mk_set(&sorted(b)), &expected));
                if !ok {
                    return Outcome::fails(&[("x", x), ("y", y)]);
                }
            }
        }
        Outcome::holds()
    }

    /// Whether some `y` satisfies the first form of Infinity. For each
    /// candidate the member of largest rank is tried first: its successor
    /// would have larger rank still.
    fn infinity_ugly(&self) -> Outcome {
        let found = (0..self.s.len() as u32).any(|y| {
            let ms = self.members(y);
            let has_empty = ms
                .iter()
                .any(|&z| self.is_set(z) && self.members(z).is_empty());
            has_empty
                && ms.iter().rev().all(|&x| {
                    let want = sorted(self.members(x).iter().copied().chain([x]).collect());
                    ms.iter().any(|&s| self.members(s) == want.as_slice())
                })
        });
        Outcome::infinity(found)
    }

    fn infinity_pretty(&self) -> Outcome {
        let Some(e) = self.empty() else {
            return Outcome::infinity(false);
        };
        let found = (0..self.s.len() as u32).any(|y| {
            let ms = self.members(y);
            ms.binary_search(&e).is_ok()
                && ms
                    .iter()
                    .rev()
                    .all(|&x| self.succ(x).is_some_and(|s| ms.binary_search(&s).is_ok()))
        });
        Outcome::infinity(found)
    }
}

// ---------------------------------------------------------------------------
// Encoding artefacts

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AccidentalItem {
    pub name: String,
    pub holds: bool,
    pub cases: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AccidentalReport {
    pub items: Vec<AccidentalItem>,
    pub millis: u64,
}

impl AccidentalReport {
    pub fn all_hold(&self) -> bool {
        self.items.iter().all(|i| i.holds)
    }
}

/// Facts that hold only because of the Kuratowski encoding, computed on
/// hereditarily finite sets over `V_3`, and their failure for primitive
/// pairs in `W_4`.
pub fn accidental_suite() -> Result<AccidentalReport, CheckError> {
    let start = Instant::now();
    let v3 = hf::v_tier(3).expect("small stage");
    let mut items = Vec::new();
    let mut item = |name: &str, holds: bool, cases: usize| {
        items.push(AccidentalItem {
            name: name.to_string(),
            holds,
            cases,
        });
    };

    let pairs: Vec<(HfSet, HfSet)> = v3
        .iter()
        .flat_map(|&b| v3.iter().map(move |&c| (b, c)))
        .collect();
    item(
        "singleton of b is a member of <b,c> (V3)",
        pairs
            .iter()
            .all(|&(b, c)| hf::kpair(b, c).contains(hf::singleton(b))),
        pairs.len(),
    );
    let (zero, one) = (hf::vn(0), hf::vn(1));
    item(
        "{<0,0>} = <1,1>",
        hf::singleton(hf::kpair(zero, zero)) == hf::kpair(one, one),
        1,
    );
    item(
        "{<b,b>} = {{{b}}} = <{b},{b}> (V3)",
        v3.iter().all(|&b| {
            let s = hf::singleton(b);
            let lhs = hf::singleton(hf::kpair(b, b));
            lhs == hf::singleton(hf::singleton(s)) && lhs == hf::kpair(s, s)
        }),
        v3.len(),
    );

    let w4 = build_w(4)?;
    let pair_idx: Vec<u32> = (0..w4.members().len() as u32)
        .filter(|&i| matches!(w4.kind_at(i), hierarchy::Tagged::Pair(..)))
        .collect();
    let no_members = pair_idx.iter().all(|&p| {
        let shape = hierarchy::decode(w4.members()[p as usize]);
        w4.members()
            .iter()
            .all(|&a| !matches!(shape, Some(hierarchy::Tagged::Set(y)) if y.contains(a)))
    });
    item(
        "no m-pair of W4 has a member",
        no_members,
        pair_idx.len() * w4.members().len(),
    );

    let e = m_set(hf::empty());
    let pe = m_pair(e, e);
    let p = m_pair(e, pe);
    let not_set = w4.contains(p) && matches!(w4.classify(p)?.kind, hierarchy::MKind::MPair { .. });
    item(
        "pair of two distinct memberless objects is not an m-set (W4)",
        not_set,
        1,
    );

    Ok(AccidentalReport {
        items,
        millis: start.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zfp(name: AxiomName) -> AxiomId {
        AxiomId::zfp(name)
    }

    fn run(model: &Model, id: AxiomId, mode: Mode) -> CheckReport {
        check_axiom(&CheckPlan::new(id, None, mode), model).unwrap()
    }

    #[test]
    fn simple_axioms_hold_in_w3_both_ways() {
        let m = Model::new(Dialect::Zfp, 3).unwrap();
        for name in [AxiomName::S1, AxiomName::S6, AxiomName::P1, AxiomName::P4] {
            for mode in [Mode::Generic, Mode::WitnessGuided] {
                assert_eq!(
                    run(&m, zfp(name), mode).status,
                    Status::Holds,
                    "{name:?} {mode}"
                );
            }
        }
    }

    #[test]
    fn infinity_is_expected_to_fail() {
        let m = Model::new(Dialect::Zfp, 3).unwrap();
        for mode in [Mode::Generic, Mode::WitnessGuided] {
            assert_eq!(
                run(&m, zfp(AxiomName::S4), mode).status,
                Status::ExpectedFailFinite
            );
        }
    }

    #[test]
    fn power_set_witness_of_empty() {
        let m = Model::new(Dialect::Zfp, 3).unwrap();
        let e = m_set(hf::empty());
        assert_eq!(power_set_witness(&m, e), Some(m_set(hf::singleton(e))));
    }

    #[test]
    fn too_small_margin_gives_least_counterexample() {
        let m = Model::new(Dialect::Zfp, 3).unwrap();
        let plan = CheckPlan::new(zfp(AxiomName::P2), None, Mode::Generic).with_margin(0);
        let r = check_axiom(&plan, &m).unwrap();
        assert_eq!(r.status, Status::Fails);
        let cex = r.counterexample.unwrap();
        assert_eq!(cex[0].var, "a");
        assert_eq!(cex[0].value, "{}");
        let mut guided = plan.clone();
        guided.mode = Mode::WitnessGuided;
        let g = check_axiom(&guided, &m).unwrap();
        assert_eq!(g.status, Status::Fails);
        assert_eq!(g.counterexample.unwrap(), cex);
    }

    #[test]
    fn pretty_infinity_holds_through_an_undefined_successor() {
        let m = Model::new(Dialect::Zf, 3).unwrap();
        let id = AxiomId::zf(AxiomName::InfinityPretty);
        for mode in [Mode::Generic, Mode::WitnessGuided] {
            assert_eq!(run(&m, id, mode).status, Status::Holds);
        }
        assert!(plans(Dialect::Zf, Mode::Generic)
            .iter()
            .all(|p| p.axiom != id));
    }

    #[test]
    fn default_margins_are_at_least_minimal() {
        for theory in [Dialect::Zfp, Dialect::Zf] {
            let m = Model::new(theory, 3).unwrap();
            for p in plans(theory, Mode::WitnessGuided) {
                if p.axiom.is_infinity() {
                    continue;
                }
                let least = minimal_margin(&p, &m)
                    .unwrap()
                    .expect("holds at some margin");
                assert!(
                    least <= p.margin,
                    "{}: needs {least}, default {}",
                    p.label(),
                    p.margin
                );
            }
        }
    }

    #[test]
    fn theory_mismatch_is_rejected() {
        let m = Model::new(Dialect::Zf, 2).unwrap();
        let err =
            check_axiom(&CheckPlan::new(zfp(AxiomName::S1), None, Mode::Generic), &m).unwrap_err();
        assert!(matches!(err, CheckError::TheoryMismatch { .. }));
    }

    #[test]
    fn budget_is_enforced() {
        let m = Model::new(Dialect::Zfp, 3).unwrap();
        let plan = CheckPlan::new(zfp(AxiomName::S1), None, Mode::Generic).with_budget(10.0);
        assert!(matches!(
            check_axiom(&plan, &m),
            Err(CheckError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn custom_phi_has_no_witness() {
        let m = Model::new(Dialect::Zfp, 2).unwrap();
        let phi = PhiInstance::parse(
            "custom",
            Dialect::Zfp,
            crate::catalog::PhiRole::Replacement,
            "b = a",
        )
        .unwrap();
        let plan = CheckPlan::new(zfp(AxiomName::S5), Some(phi), Mode::WitnessGuided);
        assert!(matches!(
            check_axiom(&plan, &m),
            Err(CheckError::WitnessUnavailable { .. })
        ));
    }

    #[test]
    fn mode_and_status_text() {
        assert_eq!("witness".parse::<Mode>().unwrap(), Mode::WitnessGuided);
        assert_eq!(Mode::Generic.to_string(), "generic");
        assert_eq!(Status::ExpectedFailFinite.to_string(), "ExpectedFailFinite");
    }
}
