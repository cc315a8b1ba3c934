mod common;

use proptest::prelude::*;

use common::{arb_formula, random_structure, rng};
use zfp_core::abbrev::{expand, expand_str, Dialect, ExpandError};
use zfp_core::logic::{alpha_eq, canonicalize, substitute};
use zfp_core::semantics::{set_slot, Evaluator};
use zfp_core::syntax::{parse_formula, print_formula, FormulaMacro, TermMacro};
use zfp_core::{Formula, Term, Var};

/// Renames every binder to a brand-new variable, starting at `next`.
fn rename_binders(f: &Formula, next: &mut u32) -> Formula {
    match f {
        Formula::Atom(l, p, r) => Formula::Atom(rename_term(l, next), *p, rename_term(r, next)),
        Formula::Implies(a, b) => {
            Formula::implies(rename_binders(a, next), rename_binders(b, next))
        }
        Formula::Not(a) => Formula::not(rename_binders(a, next)),
        Formula::Forall(v, body) => {
            let w = Var(*next);
            *next += 1;
            let body = substitute(body, *v, &Term::Var(w));
            Formula::forall(w, rename_binders(&body, next))
        }
        Formula::Pure(t) => Formula::Pure(rename_term(t, next)),
        Formula::InUniverse(t) => Formula::InUniverse(rename_term(t, next)),
    }
}

fn rename_term(t: &Term, next: &mut u32) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::Iota(v, body) => {
            let w = Var(*next);
            *next += 1;
            let body = substitute(body, *v, &Term::Var(w));
            Term::iota(w, rename_binders(&body, next))
        }
    }
}

fn eval_with(f: &Formula, s: &zfp_core::Structure, assign: &[(Var, u32)]) -> bool {
    let mut env = Vec::new();
    for (v, a) in assign {
        set_slot(&mut env, *v, Some(*a));
    }
    Evaluator::new(s).formula(f, &mut env).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn print_then_parse_is_identity(f in arb_formula(4, 6, true)) {
        let printed = print_formula(&f);
        let parsed = parse_formula(&printed).unwrap();
        prop_assert_eq!(parsed.to_string(), printed.clone());
        let back = expand(&parsed, Dialect::Zfp).unwrap();
        prop_assert_eq!(back, f, "{}", printed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn renaming_binders_preserves_alpha_class(f in arb_formula(4, 5, true)) {
        let mut next = 50;
        let g = rename_binders(&f, &mut next);
        prop_assert!(alpha_eq(&f, &g));
        prop_assert!(alpha_eq(&g, &f));
        prop_assert_eq!(canonicalize(&f), canonicalize(&g));
        prop_assert_eq!(f.free_vars(), g.free_vars());
    }

    #[test]
    fn alpha_agrees_with_canonical_form(a in arb_formula(3, 4, false), b in arb_formula(3, 4, false)) {
        prop_assert_eq!(alpha_eq(&a, &b), canonicalize(&a) == canonicalize(&b));
        prop_assert!(alpha_eq(&a, &canonicalize(&a)));
    }

    #[test]
    fn alpha_equivalent_formulas_evaluate_alike(f in arb_formula(3, 4, false), seed in any::<u64>()) {
        let mut next = 40;
        let g = rename_binders(&f, &mut next);
        let mut r = rng(seed);
        let s = random_structure(3, &mut r);
        let assign: Vec<(Var, u32)> = (0..3).map(|i| (Var(i), (seed >> (2 * i)) as u32 % 3)).collect();
        prop_assert_eq!(eval_with(&f, &s, &assign), eval_with(&g, &s, &assign));
    }

    #[test]
    fn substitution_is_capture_free(f in arb_formula(4, 5, false), v in 0u32..4, y in 0u32..4, seed in any::<u64>()) {
        let (v, y) = (Var(v), Var(y));
        let g = substitute(&f, v, &Term::Var(y));
        let mut expected = f.free_vars();
        if expected.remove(&v) {
            expected.insert(y);
        }
        prop_assert_eq!(g.free_vars(), expected);

        // semantically, substituting y for v is binding v to y's value
        let mut r = rng(seed);
        let s = random_structure(3, &mut r);
        let values: Vec<u32> = (0..4).map(|i| (seed >> (2 * i)) as u32 % 3).collect();
        let assign: Vec<(Var, u32)> = (0..4).map(|i| (Var(i), values[i as usize])).collect();
        let mut shifted = assign.clone();
        shifted[v.0 as usize].1 = values[y.0 as usize];
        prop_assert_eq!(eval_with(&g, &s, &assign), eval_with(&f, &s, &shifted));
    }

    #[test]
    fn substituting_a_description_keeps_its_free_variables(
        f in arb_formula(3, 4, false),
        body in arb_formula(3, 3, false),
        v in 0u32..3,
        x in 0u32..3,
    ) {
        let t = Term::iota(Var(x), body);
        let g = substitute(&f, Var(v), &t);
        let mut expected = f.free_vars();
        if expected.remove(&Var(v)) {
            expected.extend(t.free_vars());
        }
        prop_assert_eq!(g.free_vars(), expected);
    }
}

#[test]
fn macro_expansion_is_hygienic() {
    let dialects = [Dialect::Zf, Dialect::Zfp];
    let argsets: [&[u32]; 4] = [&[0, 1, 2], &[3, 4, 5], &[7, 7, 7], &[8, 9, 10]];
    for d in dialects {
        for m in TermMacro::ALL {
            for args in argsets {
                let arity = m.arity().unwrap_or(3);
                let used: Vec<u32> = args.iter().copied().cycle().take(arity).collect();
                let list: Vec<String> = used.iter().map(|i| format!("x{i}")).collect();
                let src = format!("x6 = {}({})", m.name(), list.join(", "));
                let f = match expand_str(&src, d) {
                    Ok(f) => f,
                    Err(ExpandError::DialectMismatch { .. }) => continue,
                    Err(e) => panic!("{src}: {e}"),
                };
                let mut want: std::collections::BTreeSet<Var> =
                    used.iter().map(|&i| Var(i)).collect();
                want.insert(Var(6));
                assert_eq!(f.free_vars(), want, "{src} in {d}");
            }
        }
        for m in FormulaMacro::ALL {
            for args in argsets {
                let used: Vec<u32> = args.iter().copied().cycle().take(m.arity()).collect();
                let list: Vec<String> = used.iter().map(|i| format!("x{i}")).collect();
                let src = format!("{}({})", m.name(), list.join(", "));
                let f = match expand_str(&src, d) {
                    Ok(f) => f,
                    Err(ExpandError::DialectMismatch { .. }) => continue,
                    Err(e) => panic!("{src}: {e}"),
                };
                let want: std::collections::BTreeSet<Var> = used.iter().map(|&i| Var(i)).collect();
                assert_eq!(f.free_vars(), want, "{src} in {d}");
            }
        }
    }
}

#[test]
fn nested_macros_do_not_capture_user_variables() {
    // the user's names coincide with what an expander might pick first
    for d in [Dialect::Zf, Dialect::Zfp] {
        let f = expand_str("forall x0. forall x1. x2 = Union(Pow(Cup(x0, x1)))", d).unwrap();
        assert_eq!(f.free_vars(), [Var(2)].into_iter().collect());
    }
}
