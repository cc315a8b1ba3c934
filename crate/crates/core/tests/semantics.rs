mod common;

use proptest::prelude::*;

use common::{all_slots, arb_formula, random_structure, rng};
use zfp_core::abbrev::{expand_str, expand_term_str, Dialect};
use zfp_core::hf::{empty, kpair, singleton, vn};
use zfp_core::hierarchy::{build_w, m_set};
use zfp_core::logic::eliminate_iota;
use zfp_core::semantics::{eval_formula, eval_term, star, Evaluator};
use zfp_core::{Env, Formula, Structure, TermValue, Var};

fn small_structures() -> Vec<Structure> {
    vec![
        Structure::w(&build_w(2).unwrap()),
        Structure::v(2).unwrap(),
        Structure::v(3).unwrap(),
        Structure::w(&build_w(3).unwrap()),
    ]
}

fn agree_everywhere(
    f: &Formula,
    g: &Formula,
    s: &Structure,
    naive_right: bool,
) -> Result<(), String> {
    let free: Vec<Var> = f.free_vars().union(&g.free_vars()).copied().collect();
    for slots in all_slots(&free, s.len()) {
        let a = Evaluator::new(s).formula(f, &mut slots.clone()).unwrap();
        let mut right = if naive_right {
            Evaluator::naive(s)
        } else {
            Evaluator::new(s)
        };
        let b = right.formula(g, &mut slots.clone()).unwrap();
        if a != b {
            return Err(format!("{} under {slots:?}: {a} vs {b}", s.name()));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn narrowed_evaluation_matches_naive(f in arb_formula(3, 5, false), seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut structures = vec![random_structure(3, &mut r), random_structure(2, &mut r)];
        structures.extend(small_structures().into_iter().take(3));
        for s in &structures {
            agree_everywhere(&f, &f, s, true).map_err(TestCaseError::fail)?;
        }
    }

    #[test]
    fn eliminating_descriptions_preserves_truth(f in arb_formula(2, 4, false), seed in any::<u64>()) {
        prop_assume!(f.count_iotas() <= 2);
        let g = eliminate_iota(&f);
        prop_assert!(!g.contains_iota());
        let s = random_structure(3, &mut rng(seed));
        agree_everywhere(&f, &g, &s, false).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn empty_set_in_each_model() {
    let v2 = Structure::v(2).unwrap();
    let t = expand_term_str("Empty()", Dialect::Zf).unwrap();
    assert_eq!(
        eval_term(&t, &v2, &Env::new()).unwrap(),
        TermValue::Defined(empty())
    );

    let w3 = Structure::w(&build_w(3).unwrap());
    let t = expand_term_str("Empty()", Dialect::Zfp).unwrap();
    assert_eq!(
        eval_term(&t, &w3, &Env::new()).unwrap(),
        TermValue::Defined(m_set(empty()))
    );
    // without the set guard the description picks up memberless pairs
    let t = expand_term_str("Empty()", Dialect::Zf).unwrap();
    assert_eq!(
        eval_term(&t, &w3, &Env::new()).unwrap(),
        TermValue::Undefined
    );
}

#[test]
fn kuratowski_pair_evaluates_to_the_hf_pair() {
    let v4 = Structure::v(4).unwrap();
    let t = expand_term_str("KPair(x0, x1)", Dialect::Zf).unwrap();
    for a in [vn(0), vn(1)] {
        for b in [vn(0), vn(1)] {
            let env = Env::new().with(Var(0), a).with(Var(1), b);
            assert_eq!(
                eval_term(&t, &v4, &env).unwrap(),
                TermValue::Defined(kpair(a, b))
            );
        }
    }
}

#[test]
fn singleton_lies_in_kuratowski_pair_where_defined() {
    let v4 = Structure::v(4).unwrap();
    let f = expand_str("mem(Singleton(x0), KPair(x0, x1))", Dialect::Zf).unwrap();
    for a in [vn(0), vn(1), singleton(vn(1)), vn(2)] {
        for b in [vn(0), vn(1), singleton(vn(1)), vn(2)] {
            let env = Env::new().with(Var(0), a).with(Var(1), b);
            // the pair of rank-2 objects has rank 4 and leaves V_4
            let defined = a.rank() < 2 && b.rank() < 2;
            assert_eq!(eval_formula(&f, &v4, &env).unwrap(), defined, "{a} {b}");
        }
    }
}

#[test]
fn star_of_pair_predicate() {
    let f = expand_str("Pair(x0)", Dialect::Zfp).unwrap();
    let guarded = expand_str("!(forall x1. H(x1) -> !pi1(x1, x0))", Dialect::Zfp).unwrap();
    assert!(zfp_core::logic::alpha_eq(&star(&f), &guarded));
    let pretty = expand_str("exists x1. H(x1) /\\ pi1(x1, x0)", Dialect::Zfp).unwrap();
    let w3 = Structure::w(&build_w(3).unwrap());
    agree_everywhere(&star(&f), &pretty, &w3, true).unwrap();
}

#[test]
fn v_projections_match_relation_oracle() {
    // the fast construction against the definitions applied pairwise
    let fast = Structure::v(3).unwrap();
    let slow = Structure::from_relation_fn(
        zfp_core::semantics::StructureName::V(3),
        fast.domain().to_vec(),
        |p, a, x| match p {
            zfp_core::Pred::Mem => x.contains(a),
            zfp_core::Pred::Pi1 => x.elems().iter().all(|y| y.contains(a)),
            zfp_core::Pred::Pi2 => x.elems().iter().filter(|y| y.contains(a)).count() == 1,
            zfp_core::Pred::Eq => a == x,
        },
    );
    for p in zfp_core::Pred::RELATIONS {
        for x in 0..fast.len() as u32 {
            assert_eq!(fast.predecessors(p, x), slow.predecessors(p, x));
        }
    }
}

#[test]
fn projections_only_behave_on_pairs() {
    // exact, over hereditarily finite sets: q from V_4, components from V_3
    let v3 = zfp_core::hf::v_tier(3).unwrap();
    let v4 = zfp_core::hf::v_tier(4).unwrap();
    let pi1 = |a: zfp_core::HfSet, q: zfp_core::HfSet| q.elems().iter().all(|y| y.contains(a));
    let pi2 = |b: zfp_core::HfSet, q: zfp_core::HfSet| {
        q.elems().iter().filter(|y| y.contains(b)).count() == 1
    };
    for &q in &v4 {
        let is_pair = v3.iter().any(|&c| v3.iter().any(|&d| kpair(c, d) == q));
        for &a in &v3 {
            for &b in &v3 {
                let lhs = pi1(a, q) && pi2(b, q);
                if is_pair {
                    assert_eq!(lhs, q == kpair(a, b));
                }
            }
        }
    }

    // the same statement in the structure V_4, components restricted to
    // objects whose singleton exists there
    let s = Structure::v(4).unwrap();
    let restricted = expand_str(
        "forall q. (exists c. exists d. (exists u. u = Singleton(c)) /\\ (exists u. u = Singleton(d)) /\\ q = KPair(c, d)) -> \
         (forall a. forall b. (exists u. u = Singleton(a)) /\\ (exists u. u = Singleton(b)) -> \
         ((pi1(a, q) /\\ pi2(b, q)) <-> q = KPair(a, b)))",
        Dialect::Zf,
    )
    .unwrap();
    assert!(eval_formula(&restricted, &s, &Env::new()).unwrap());

    // without the antecedent it fails: {{0, 1}} has 0 and 1 as projections
    let bare = expand_str(
        "forall q. forall a. forall b. (pi1(a, q) /\\ pi2(b, q)) <-> q = KPair(a, b)",
        Dialect::Zf,
    )
    .unwrap();
    assert!(!eval_formula(&bare, &s, &Env::new()).unwrap());

    // unrestricted, truncation bites: a pair whose parts leave V_4 collapses
    // through UPair(undefined, undefined) = {} and makes {} look like a pair
    let unrestricted = expand_str("exists c. exists d. x0 = KPair(c, d)", Dialect::Zf).unwrap();
    let env = Env::new().with(Var(0), empty());
    assert!(eval_formula(&unrestricted, &s, &env).unwrap());
}
