//! Capture-free substitution, free variables, and alpha equality.
//!
//! Structural equality on formulas is the default everywhere in the
//! checker ("variables must be identical"); [`alpha_equal`] exists solely
//! for the argument comparison performed at call and jump sites.

use crate::ast::{Formula, Ident, Term};
use std::collections::HashSet;

/// Free term variables of a term, in first-occurrence order.
pub fn free_vars_term(t: &Term) -> Vec<Ident> {
    let mut out = Vec::new();
    collect_term(t, &mut out);
    out
}

fn collect_term(t: &Term, out: &mut Vec<Ident>) {
    match t {
        Term::Var(v) => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        Term::Zero => {}
        Term::Succ(a) | Term::Pred(a) => collect_term(a, out),
        Term::Add(a, b) | Term::Mul(a, b) | Term::Sub(a, b) => {
            collect_term(a, out);
            collect_term(b, out);
        }
        Term::App(_, args) => args.iter().for_each(|a| collect_term(a, out)),
    }
}

/// Free term variables of a formula, in first-occurrence order.  `Proc`
/// in-binders shadow both type lists; out-binders shadow the outs only.
pub fn free_term_vars(f: &Formula) -> Vec<Ident> {
    let mut out = Vec::new();
    collect_formula(f, &mut Vec::new(), &mut out);
    out
}

fn collect_formula(f: &Formula, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
    match f {
        Formula::Bot | Formula::FVar(_) => {}
        Formula::Equal(a, b) => {
            collect_term_scoped(a, bound, out);
            collect_term_scoped(b, bound, out);
        }
        Formula::Nat(t) => collect_term_scoped(t, bound, out),
        Formula::Proc { in_vars, in_types, out_vars, out_types } => {
            let depth = bound.len();
            bound.extend(in_vars.iter().cloned());
            for t in in_types {
                collect_formula(t, bound, out);
            }
            bound.extend(out_vars.iter().cloned());
            for t in out_types {
                collect_formula(t, bound, out);
            }
            bound.truncate(depth);
        }
    }
}

fn collect_term_scoped(t: &Term, bound: &[Ident], out: &mut Vec<Ident>) {
    match t {
        Term::Var(v) => {
            if !bound.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        }
        Term::Zero => {}
        Term::Succ(a) | Term::Pred(a) => collect_term_scoped(a, bound, out),
        Term::Add(a, b) | Term::Mul(a, b) | Term::Sub(a, b) => {
            collect_term_scoped(a, bound, out);
            collect_term_scoped(b, bound, out);
        }
        Term::App(_, args) => args.iter().for_each(|a| collect_term_scoped(a, bound, out)),
    }
}

/// Every identifier occurring in a formula, bound or free, binder
/// positions included.  Used to pick collision-free stamps.
pub(crate) fn all_idents_formula(f: &Formula, out: &mut Vec<Ident>) {
    match f {
        Formula::Bot => {}
        Formula::FVar(v) => out.push(v.clone()),
        Formula::Equal(a, b) => {
            all_idents_term(a, out);
            all_idents_term(b, out);
        }
        Formula::Nat(t) => all_idents_term(t, out),
        Formula::Proc { in_vars, in_types, out_vars, out_types } => {
            out.extend(in_vars.iter().cloned());
            out.extend(out_vars.iter().cloned());
            in_types.iter().for_each(|t| all_idents_formula(t, out));
            out_types.iter().for_each(|t| all_idents_formula(t, out));
        }
    }
}

pub(crate) fn all_idents_term(t: &Term, out: &mut Vec<Ident>) {
    match t {
        Term::Var(v) => out.push(v.clone()),
        Term::Zero => {}
        Term::Succ(a) | Term::Pred(a) => all_idents_term(a, out),
        Term::Add(a, b) | Term::Mul(a, b) | Term::Sub(a, b) => {
            all_idents_term(a, out);
            all_idents_term(b, out);
        }
        Term::App(f, args) => {
            out.push(f.clone());
            args.iter().for_each(|a| all_idents_term(a, out));
        }
    }
}

/// Substitute `t` for the free variable `v` in a term.
pub fn subst_term(target: &Term, v: &Ident, t: &Term) -> Term {
    match target {
        Term::Var(w) if w == v => t.clone(),
        Term::Var(_) | Term::Zero => target.clone(),
        Term::Succ(a) => Term::Succ(Box::new(subst_term(a, v, t))),
        Term::Pred(a) => Term::Pred(Box::new(subst_term(a, v, t))),
        Term::Add(a, b) => Term::Add(Box::new(subst_term(a, v, t)), Box::new(subst_term(b, v, t))),
        Term::Mul(a, b) => Term::Mul(Box::new(subst_term(a, v, t)), Box::new(subst_term(b, v, t))),
        Term::Sub(a, b) => Term::Sub(Box::new(subst_term(a, v, t)), Box::new(subst_term(b, v, t))),
        Term::App(f, args) => {
            Term::App(f.clone(), args.iter().map(|a| subst_term(a, v, t)).collect())
        }
    }
}

/// Capture-free substitution of a single variable in a formula.
pub fn subst_formula(f: &Formula, v: &Ident, t: &Term) -> Formula {
    subst_formula_multi(f, &[(v.clone(), t.clone())])
}

/// Simultaneous capture-free substitution.  Binders shadowing a key stop
/// that key; binders that would capture a substituted term are freshened
/// (stamp bump) deterministically before descending.
pub fn subst_formula_multi(f: &Formula, subst: &[(Ident, Term)]) -> Formula {
    if subst.is_empty() {
        return f.clone();
    }
    match f {
        Formula::Bot | Formula::FVar(_) => f.clone(),
        Formula::Equal(a, b) => {
            Formula::Equal(subst_term_multi(a, subst), subst_term_multi(b, subst))
        }
        Formula::Nat(t0) => Formula::Nat(subst_term_multi(t0, subst)),
        Formula::Proc { in_vars, out_vars, .. } => {
            // Keys shadowed by the in-binders are dead for the whole type;
            // keys shadowed by the out-binders are dead for the outs only.
            let live_in: Vec<(Ident, Term)> = subst
                .iter()
                .filter(|(k, _)| !in_vars.contains(k))
                .cloned()
                .collect();
            let live_out: Vec<(Ident, Term)> = live_in
                .iter()
                .filter(|(k, _)| !out_vars.contains(k))
                .cloned()
                .collect();
            if live_in.is_empty() {
                return f.clone();
            }

            // Freshen any binder that occurs free in a substituted term.
            let mut incoming: HashSet<Ident> = HashSet::new();
            for (_, tm) in &live_in {
                incoming.extend(free_vars_term(tm));
            }
            let mut f2 = f.clone();
            let needs_rename: Vec<Ident> = in_vars
                .iter()
                .chain(out_vars.iter())
                .filter(|b| incoming.contains(*b))
                .cloned()
                .collect();
            if !needs_rename.is_empty() {
                let mut taken: Vec<Ident> = Vec::new();
                all_idents_formula(f, &mut taken);
                for (_, tm) in &live_in {
                    all_idents_term(tm, &mut taken);
                }
                for b in needs_rename {
                    let max = taken
                        .iter()
                        .filter(|i| i.name == b.name)
                        .map(|i| i.stamp)
                        .max()
                        .unwrap_or(0);
                    let fresh = Ident::stamped(b.name.clone(), max + 1);
                    taken.push(fresh.clone());
                    f2 = rename_binder(&f2, &b, &fresh);
                }
            }

            match f2 {
                Formula::Proc { in_vars, in_types, out_vars, out_types } => Formula::Proc {
                    in_vars,
                    in_types: in_types
                        .iter()
                        .map(|s| subst_formula_multi(s, &live_in))
                        .collect(),
                    out_vars,
                    out_types: out_types
                        .iter()
                        .map(|s| subst_formula_multi(s, &live_out))
                        .collect(),
                },
                _ => unreachable!("rename_binder preserves the constructor"),
            }
        }
    }
}

pub(crate) fn subst_term_multi(t: &Term, subst: &[(Ident, Term)]) -> Term {
    match t {
        Term::Var(v) => subst
            .iter()
            .find(|(k, _)| k == v)
            .map(|(_, tm)| tm.clone())
            .unwrap_or_else(|| t.clone()),
        Term::Zero => Term::Zero,
        Term::Succ(a) => Term::Succ(Box::new(subst_term_multi(a, subst))),
        Term::Pred(a) => Term::Pred(Box::new(subst_term_multi(a, subst))),
        Term::Add(a, b) => Term::Add(
            Box::new(subst_term_multi(a, subst)),
            Box::new(subst_term_multi(b, subst)),
        ),
        Term::Mul(a, b) => Term::Mul(
            Box::new(subst_term_multi(a, subst)),
            Box::new(subst_term_multi(b, subst)),
        ),
        Term::Sub(a, b) => Term::Sub(
            Box::new(subst_term_multi(a, subst)),
            Box::new(subst_term_multi(b, subst)),
        ),
        Term::App(f, args) => Term::App(
            f.clone(),
            args.iter().map(|a| subst_term_multi(a, subst)).collect(),
        ),
    }
}

/// Rename one binder of a `Proc` (and its bound occurrences) to `fresh`.
/// Only meaningful when `fresh` does not occur in the formula.
fn rename_binder(f: &Formula, old: &Ident, fresh: &Ident) -> Formula {
    match f {
        Formula::Proc { in_vars, in_types, out_vars, out_types } => {
            let repl = |v: &Ident| if v == old { fresh.clone() } else { v.clone() };
            let in_bound = in_vars.contains(old);
            let out_bound = out_vars.contains(old);
            let sub = [(old.clone(), Term::Var(fresh.clone()))];
            Formula::Proc {
                in_vars: in_vars.iter().map(&repl).collect(),
                in_types: if in_bound {
                    in_types.iter().map(|s| subst_formula_multi(s, &sub)).collect()
                } else {
                    in_types.clone()
                },
                out_vars: out_vars.iter().map(&repl).collect(),
                out_types: if in_bound || out_bound {
                    out_types.iter().map(|s| subst_formula_multi(s, &sub)).collect()
                } else {
                    out_types.clone()
                },
            }
        }
        _ => f.clone(),
    }
}

/// Alpha equality of formulas: structural equality up to consistent
/// renaming of `Proc` binders.  Free variables still compare by identity.
pub fn alpha_equal(a: &Formula, b: &Formula) -> bool {
    alpha_formula(a, b, &mut Vec::new())
}

// The rename stack maps binder pairs to a shared level; variables bound at
// the same level are equal regardless of their names.
fn alpha_formula(a: &Formula, b: &Formula, stack: &mut Vec<(Ident, Ident)>) -> bool {
    match (a, b) {
        (Formula::Bot, Formula::Bot) => true,
        (Formula::FVar(x), Formula::FVar(y)) => x == y,
        (Formula::Equal(a1, a2), Formula::Equal(b1, b2)) => {
            alpha_term(a1, b1, stack) && alpha_term(a2, b2, stack)
        }
        (Formula::Nat(t), Formula::Nat(u)) => alpha_term(t, u, stack),
        (
            Formula::Proc { in_vars: ia, in_types: ta, out_vars: oa, out_types: sa },
            Formula::Proc { in_vars: ib, in_types: tb, out_vars: ob, out_types: sb },
        ) => {
            if ia.len() != ib.len() || ta.len() != tb.len() || oa.len() != ob.len() || sa.len() != sb.len() {
                return false;
            }
            let depth = stack.len();
            stack.extend(ia.iter().cloned().zip(ib.iter().cloned()));
            let ins_ok = ta.iter().zip(tb).all(|(x, y)| alpha_formula(x, y, stack));
            stack.extend(oa.iter().cloned().zip(ob.iter().cloned()));
            let outs_ok = ins_ok && sa.iter().zip(sb).all(|(x, y)| alpha_formula(x, y, stack));
            stack.truncate(depth);
            outs_ok
        }
        _ => false,
    }
}

fn alpha_term(a: &Term, b: &Term, stack: &[(Ident, Ident)]) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            // Innermost binding wins on either side.
            let lx = stack.iter().rposition(|(l, _)| l == x);
            let ly = stack.iter().rposition(|(_, r)| r == y);
            match (lx, ly) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            }
        }
        (Term::Zero, Term::Zero) => true,
        (Term::Succ(x), Term::Succ(y)) | (Term::Pred(x), Term::Pred(y)) => alpha_term(x, y, stack),
        (Term::Add(x1, x2), Term::Add(y1, y2))
        | (Term::Mul(x1, x2), Term::Mul(y1, y2))
        | (Term::Sub(x1, x2), Term::Sub(y1, y2)) => {
            alpha_term(x1, y1, stack) && alpha_term(x2, y2, stack)
        }
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_term(x, y, stack))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::mk_nat;
    use num_bigint::BigUint;

    fn i(name: &str) -> Ident {
        Ident::new(name)
    }

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    fn proc1(binder: &str, in_t: Formula, out_t: Formula) -> Formula {
        Formula::Proc {
            in_vars: vec![i(binder)],
            in_types: vec![in_t],
            out_vars: vec![],
            out_types: vec![out_t],
        }
    }

    #[test]
    fn subst_replaces_free_occurrences() {
        let f = Formula::nat(Term::add(v("x"), v("y")));
        let got = subst_formula(&f, &i("x"), &Term::Zero);
        assert_eq!(got, Formula::nat(Term::add(Term::Zero, v("y"))));
    }

    #[test]
    fn subst_respects_in_binder_shadowing() {
        // i is bound: substituting for i must not touch the body.
        let f = proc1("i", Formula::nat(v("i")), Formula::nat(v("i")));
        assert_eq!(subst_formula(&f, &i("i"), &Term::Zero), f);
    }

    #[test]
    fn out_binder_shadows_outs_only() {
        let f = Formula::Proc {
            in_vars: vec![],
            in_types: vec![Formula::nat(v("u"))],
            out_vars: vec![i("u")],
            out_types: vec![Formula::nat(v("u"))],
        };
        let got = subst_formula(&f, &i("u"), &Term::Zero);
        match got {
            Formula::Proc { in_types, out_types, .. } => {
                assert_eq!(in_types[0], Formula::nat(Term::Zero));
                assert_eq!(out_types[0], Formula::nat(v("u")));
            }
            other => panic!("unexpected shape: {other:?}"),
        }
    }

    #[test]
    fn capture_is_avoided_by_freshening() {
        // proc({i} in nat(i); out nat(i + j)) with j := i.
        let f = proc1("i", Formula::nat(v("i")), Formula::nat(Term::add(v("i"), v("j"))));
        assert_eq!(free_term_vars(&f), vec![i("j")]);
        let got = subst_formula(&f, &i("j"), &v("i"));
        // The binder was freshened, the free i was not captured.
        assert_eq!(free_term_vars(&got), vec![i("i")]);
        match &got {
            Formula::Proc { in_vars, in_types, out_types, .. } => {
                let fresh = in_vars[0].clone();
                assert_eq!(fresh.name, "i");
                assert!(fresh.stamp > 0, "binder must be freshened by stamp");
                assert_eq!(in_types[0], Formula::nat(Term::Var(fresh.clone())));
                assert_eq!(
                    out_types[0],
                    Formula::nat(Term::add(Term::Var(fresh), v("i")))
                );
            }
            other => panic!("unexpected shape: {other:?}"),
        }
        // Alpha-structure preserved.
        assert!(alpha_equal(
            &got,
            &proc1("k", Formula::nat(v("k")), Formula::nat(Term::add(v("k"), v("i"))))
        ));
    }

    #[test]
    fn multi_substitution_is_simultaneous() {
        let f = Formula::equal(v("x"), v("y"));
        let got = subst_formula_multi(
            &f,
            &[(i("x"), v("y")), (i("y"), v("x"))],
        );
        assert_eq!(got, Formula::equal(v("y"), v("x")));
    }

    #[test]
    fn identity_substitution_is_identity() {
        let f = proc1(
            "x",
            Formula::nat(v("x")),
            Formula::equal(Term::add(v("x"), v("z")), mk_nat(&BigUint::from(4u32))),
        );
        assert_eq!(subst_formula(&f, &i("z"), &v("z")), f);
    }

    #[test]
    fn substituted_variable_is_gone() {
        let f = Formula::nat(Term::mul(v("a"), Term::succ(v("a"))));
        let got = subst_formula(&f, &i("a"), &Term::add(v("b"), Term::Zero));
        assert!(!free_term_vars(&got).contains(&i("a")));
    }

    #[test]
    fn alpha_equal_renames_binders() {
        let a = Formula::Proc {
            in_vars: vec![i("x"), i("y")],
            in_types: vec![Formula::nat(v("x")), Formula::nat(v("y"))],
            out_vars: vec![],
            out_types: vec![Formula::nat(Term::add(v("x"), v("y")))],
        };
        let b = Formula::Proc {
            in_vars: vec![i("u"), i("v")],
            in_types: vec![Formula::nat(v("u")), Formula::nat(v("v"))],
            out_vars: vec![],
            out_types: vec![Formula::nat(Term::add(v("u"), v("v")))],
        };
        assert!(alpha_equal(&a, &b));
        assert_ne!(a, b, "strict equality must still distinguish them");
    }

    #[test]
    fn alpha_equal_rejects_free_variable_mismatch() {
        let a = proc1("x", Formula::nat(v("x")), Formula::nat(v("q")));
        let b = proc1("x", Formula::nat(v("x")), Formula::nat(v("r")));
        assert!(!alpha_equal(&a, &b));
    }

    #[test]
    fn alpha_equal_tracks_innermost_binding() {
        // proc({x} in proc({x} in nat(x); out $); out $) vs a version whose
        // inner binder differs: the inner occurrence must follow the inner
        // binder, not the outer one.
        let inner_a = proc1("x", Formula::nat(v("x")), Formula::Bot);
        let inner_b = proc1("y", Formula::nat(v("y")), Formula::Bot);
        let a = proc1("x", inner_a, Formula::Bot);
        let b = proc1("x", inner_b, Formula::Bot);
        assert!(alpha_equal(&a, &b));
    }

    #[test]
    fn free_term_vars_first_occurrence_order() {
        let f = Formula::equal(Term::add(v("b"), v("a")), v("b"));
        assert_eq!(free_term_vars(&f), vec![i("b"), i("a")]);
    }
}
