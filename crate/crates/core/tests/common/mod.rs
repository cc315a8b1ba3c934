#![allow(dead_code)]

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zfp_core::{Formula, Pred, Structure, Term, Var};

pub fn arb_pred() -> impl Strategy<Value = Pred> {
    prop_oneof![
        Just(Pred::Mem),
        Just(Pred::Pi1),
        Just(Pred::Pi2),
        Just(Pred::Eq)
    ]
}

fn var_term(vars: u32) -> impl Strategy<Value = Term> {
    (0..vars).prop_map(|i| Term::Var(Var(i)))
}

/// Formulas over variables `x0 .. x{vars-1}`. With `markers`, the two unary
/// markers may appear as leaves.
pub fn arb_formula(vars: u32, depth: u32, markers: bool) -> BoxedStrategy<Formula> {
    let atom =
        (var_term(vars), arb_pred(), var_term(vars)).prop_map(|(l, p, r)| Formula::Atom(l, p, r));
    let leaf = if markers {
        prop_oneof![
            4 => atom,
            1 => var_term(vars).prop_map(Formula::Pure),
            1 => var_term(vars).prop_map(Formula::InUniverse),
        ]
        .boxed()
    } else {
        atom.boxed()
    };
    leaf.prop_recursive(depth, 24, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            inner.clone().prop_map(Formula::not),
            (0..vars, inner.clone()).prop_map(|(v, b)| Formula::forall(Var(v), b)),
            (0..vars, inner.clone(), arb_pred(), 0..vars, any::<bool>()).prop_map(
                |(x, body, p, y, left)| {
                    let t = Term::iota(Var(x), body);
                    if left {
                        Formula::Atom(t, p, Term::Var(Var(y)))
                    } else {
                        Formula::Atom(Term::Var(Var(y)), p, t)
                    }
                }
            ),
        ]
    })
    .boxed()
}

/// `count` formulas drawn deterministically from `strategy`.
pub fn sample<T: std::fmt::Debug>(strategy: &BoxedStrategy<T>, count: usize, seed: u64) -> Vec<T> {
    let mut seed_bytes = [0u8; 32];
    seed_bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &seed_bytes);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    (0..count)
        .map(|_| {
            strategy
                .new_tree(&mut runner)
                .expect("strategy has no filters")
                .current()
        })
        .collect()
}

/// A structure on `size` points with independently random relations.
pub fn random_structure(size: usize, rng: &mut ChaCha8Rng) -> Structure {
    let mut table = || {
        (0..size)
            .map(|_| (0..size).map(|_| rng.gen_bool(0.4)).collect())
            .collect()
    };
    let tables = [table(), table(), table()];
    Structure::from_tables("random", size, &tables)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every assignment of domain indices to `vars`, as slot vectors.
pub fn all_slots(vars: &[Var], size: usize) -> Vec<Vec<Option<u32>>> {
    let width = vars.iter().map(|v| v.0 as usize + 1).max().unwrap_or(0);
    let mut out = vec![vec![None; width]];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..size as u32).map(move |a| {
                    let mut s = s.clone();
                    s[v.0 as usize] = Some(a);
                    s
                })
            })
            .collect();
    }
    out
}
