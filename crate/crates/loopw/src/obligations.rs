//! Arithmetic proof obligations: the numbered equality lemmas a derivation
//! assumes, a Peano-rewriting normalizer used to discharge the easy ones,
//! and an SMT-LIB export for the rest.

use crate::ast::{mk_nat, numeral_value, Ident, Term};
use crate::subst::free_vars_term;
use num_bigint::BigUint;
use num_traits::Zero as _;
use std::fmt::Write as _;

/// A universally closed equality `|- lhs = rhs`.  The free variables are
/// implicitly quantified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obligation {
    pub id: u32,
    pub lhs: Term,
    pub rhs: Term,
    pub free_vars: Vec<Ident>,
}

impl Obligation {
    pub fn new(id: u32, lhs: Term, rhs: Term) -> Obligation {
        let mut free_vars = free_vars_term(&lhs);
        for v in free_vars_term(&rhs) {
            if !free_vars.contains(&v) {
                free_vars.push(v);
            }
        }
        Obligation { id, lhs, rhs, free_vars }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discharge {
    Proven,
    Unknown,
}

/// Normal form under the Peano rewrite system
///
/// ```text
/// x + 0 -> x        x + s(y) -> s(x + y)
/// x * 0 -> 0        x * s(y) -> x * y + x
/// p(0) -> 0         p(s(x))  -> x
/// x - 0 -> x        0 - x    -> 0         s(x) - s(y) -> x - y
/// ```
///
/// followed by AC-normalization of `+`: sums are flattened to a multiset,
/// leading successors of every summand are pooled globally, zero summands
/// vanish, and the remaining atoms are sorted canonically.  `*` and `-`
/// stay ordered; uninterpreted applications are opaque except for their
/// arguments.
pub fn normalize(t: &Term) -> Term {
    match t {
        Term::Var(_) | Term::Zero => t.clone(),
        Term::Succ(a) => Term::Succ(Box::new(normalize(a))),
        Term::Pred(a) => {
            let a = normalize(a);
            match a {
                Term::Zero => Term::Zero,
                Term::Succ(inner) => *inner,
                other => Term::Pred(Box::new(other)),
            }
        }
        Term::Add(l, r) => rebuild_sum(normalize(l), normalize(r)),
        Term::Mul(l, r) => {
            let l = normalize(l);
            let r = normalize(r);
            if let (Some(a), Some(b)) = (numeral_value(&l), numeral_value(&r)) {
                return mk_nat(&(a * b));
            }
            match r {
                Term::Zero => Term::Zero,
                Term::Succ(b) => {
                    // x * s(y) -> x * y + x
                    normalize(&Term::add(Term::Mul(Box::new(l.clone()), b), l))
                }
                other => Term::Mul(Box::new(l), Box::new(other)),
            }
        }
        Term::Sub(l, r) => {
            let mut l = normalize(l);
            let mut r = normalize(r);
            loop {
                match (l, r) {
                    (lhs, Term::Zero) => return lhs,
                    (Term::Zero, _) => return Term::Zero,
                    (Term::Succ(a), Term::Succ(b)) => {
                        l = *a;
                        r = *b;
                    }
                    (lhs, rhs) => return Term::Sub(Box::new(lhs), Box::new(rhs)),
                }
            }
        }
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(normalize).collect()),
    }
}

/// AC-normalize the sum of two already-normal terms.
fn rebuild_sum(l: Term, r: Term) -> Term {
    let mut succs = 0usize;
    let mut atoms: Vec<Term> = Vec::new();
    flatten_summand(l, &mut succs, &mut atoms);
    flatten_summand(r, &mut succs, &mut atoms);
    atoms.sort();
    let mut out = match atoms.split_first() {
        None => Term::Zero,
        Some((first, rest)) => rest
            .iter()
            .fold(first.clone(), |acc, a| Term::add(acc, a.clone())),
    };
    for _ in 0..succs {
        out = Term::succ(out);
    }
    out
}

fn flatten_summand(t: Term, succs: &mut usize, atoms: &mut Vec<Term>) {
    match t {
        Term::Zero => {}
        Term::Succ(inner) => {
            *succs += 1;
            flatten_summand(*inner, succs, atoms);
        }
        Term::Add(a, b) => {
            flatten_summand(*a, succs, atoms);
            flatten_summand(*b, succs, atoms);
        }
        other => atoms.push(other),
    }
}

/// `Proven` iff both sides share a normal form; never disproves.
pub fn discharge(ob: &Obligation) -> Discharge {
    if normalize(&ob.lhs) == normalize(&ob.rhs) {
        Discharge::Proven
    } else {
        Discharge::Unknown
    }
}

/// Big-integer evaluation of a term under an assignment of its variables,
/// with truncated subtraction and p(0) = 0.  The reference semantics the
/// normalizer is tested against; `None` when an uninterpreted application
/// or unassigned variable blocks evaluation.
pub fn eval_ground(t: &Term, env: &[(Ident, BigUint)]) -> Option<BigUint> {
    let one = BigUint::from(1u32);
    match t {
        Term::Var(v) => env.iter().find(|(k, _)| k == v).map(|(_, n)| n.clone()),
        Term::Zero => Some(BigUint::zero()),
        Term::Succ(a) => Some(eval_ground(a, env)? + &one),
        Term::Pred(a) => {
            let n = eval_ground(a, env)?;
            Some(if n == BigUint::zero() { n } else { n - &one })
        }
        Term::Add(a, b) => Some(eval_ground(a, env)? + eval_ground(b, env)?),
        Term::Mul(a, b) => Some(eval_ground(a, env)? * eval_ground(b, env)?),
        Term::Sub(a, b) => {
            let x = eval_ground(a, env)?;
            let y = eval_ground(b, env)?;
            Some(if x >= y { x - y } else { BigUint::zero() })
        }
        Term::App(..) => None,
    }
}

// ---------------------------------------------------------------------------
// SMT-LIB v2 export.

/// Collect every uninterpreted application symbol with its arity.
fn collect_apps(t: &Term, out: &mut Vec<(Ident, usize)>) {
    match t {
        Term::Var(_) | Term::Zero => {}
        Term::Succ(a) | Term::Pred(a) => collect_apps(a, out),
        Term::Add(a, b) | Term::Mul(a, b) | Term::Sub(a, b) => {
            collect_apps(a, out);
            collect_apps(b, out);
        }
        Term::App(f, args) => {
            let entry = (f.clone(), args.len());
            if !out.contains(&entry) {
                out.push(entry);
            }
            args.iter().for_each(|a| collect_apps(a, out));
        }
    }
}

fn smt_symbol(f: &Ident, arity: usize, clashes: bool) -> String {
    let base = f.to_string().replace('\'', "_");
    if clashes {
        format!("{base}_{arity}")
    } else {
        base
    }
}

fn smt_term(t: &Term, fun_names: &[((Ident, usize), String)], out: &mut String) {
    match t {
        Term::Var(v) => {
            let _ = write!(out, "{}", v.to_string().replace('\'', "_"));
        }
        Term::Zero => out.push('0'),
        Term::Succ(a) => {
            out.push_str("(+ ");
            smt_term(a, fun_names, out);
            out.push_str(" 1)");
        }
        Term::Pred(a) => {
            out.push_str("(pp ");
            smt_term(a, fun_names, out);
            out.push(')');
        }
        Term::Add(a, b) | Term::Mul(a, b) => {
            out.push_str(if matches!(t, Term::Add(..)) { "(+ " } else { "(* " });
            smt_term(a, fun_names, out);
            out.push(' ');
            smt_term(b, fun_names, out);
            out.push(')');
        }
        Term::Sub(a, b) => {
            out.push_str("(monus ");
            smt_term(a, fun_names, out);
            out.push(' ');
            smt_term(b, fun_names, out);
            out.push(')');
        }
        Term::App(f, args) => {
            let name = fun_names
                .iter()
                .find(|((g, n), _)| g == f && *n == args.len())
                .map(|(_, s)| s.as_str())
                .expect("every application symbol was collected");
            let _ = write!(out, "({name}");
            for a in args {
                out.push(' ');
                smt_term(a, fun_names, out);
            }
            out.push(')');
        }
    }
}

/// One SMT-LIB v2 script covering the whole table: naturals as nonnegative
/// `Int`s, truncated `-` and `p` as defined functions, application symbols
/// as global uninterpreted functions, and one named negated goal per
/// obligation inside its own `(push)/(pop)` block.  Every `(check-sat)` is
/// expected to answer `unsat`.
pub fn export_smtlib(obs: &[Obligation]) -> String {
    let mut funs: Vec<(Ident, usize)> = Vec::new();
    for ob in obs {
        collect_apps(&ob.lhs, &mut funs);
        collect_apps(&ob.rhs, &mut funs);
    }
    let fun_names: Vec<((Ident, usize), String)> = funs
        .iter()
        .map(|(f, n)| {
            let clashes = funs.iter().any(|(g, m)| g == f && m != n);
            ((f.clone(), *n), smt_symbol(f, *n, clashes))
        })
        .collect();

    let mut s = String::new();
    s.push_str("; proof obligations over Peano naturals (expect unsat on every goal)\n");
    s.push_str("(set-logic UFNIA)\n");
    s.push_str("(define-fun pp ((x Int)) Int (ite (<= x 0) 0 (- x 1)))\n");
    s.push_str("(define-fun monus ((x Int) (y Int)) Int (ite (>= x y) (- x y) 0))\n");
    for ((_, arity), name) in &fun_names {
        let doms = vec!["Int"; *arity].join(" ");
        let _ = writeln!(s, "(declare-fun {name} ({doms}) Int)");
    }
    for ob in obs {
        let _ = writeln!(s, "(push)");
        for v in &ob.free_vars {
            let name = v.to_string().replace('\'', "_");
            let _ = writeln!(s, "(declare-const {name} Int)");
            let _ = writeln!(s, "(assert (>= {name} 0))");
        }
        let mut lhs = String::new();
        smt_term(&ob.lhs, &fun_names, &mut lhs);
        let mut rhs = String::new();
        smt_term(&ob.rhs, &fun_names, &mut rhs);
        let _ = writeln!(s, "(assert (! (not (= {lhs} {rhs})) :named ob_{}))", ob.id);
        let _ = writeln!(s, "(check-sat)");
        let _ = writeln!(s, "(pop)");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn num(q: u32) -> Term {
        mk_nat(&BigUint::from(q))
    }

    #[test]
    fn addition_axioms_discharge() {
        // x = x + 0
        let ob1 = Obligation::new(1, v("x"), Term::add(v("x"), Term::Zero));
        assert_eq!(discharge(&ob1), Discharge::Proven);
        // s(x + i) = x + s(i)
        let ob2 = Obligation::new(
            2,
            Term::succ(Term::add(v("x"), v("i"))),
            Term::add(v("x"), Term::succ(v("i"))),
        );
        assert_eq!(discharge(&ob2), Discharge::Proven);
    }

    #[test]
    fn uninterpreted_goals_stay_unknown() {
        // s(y) = a(0, y): a defining equation, not a rewrite consequence.
        let ob = Obligation::new(
            1,
            Term::succ(v("y")),
            Term::app("a", vec![Term::Zero, v("y")]),
        );
        assert_eq!(discharge(&ob), Discharge::Unknown);
    }

    #[test]
    fn ground_arithmetic_discharges() {
        let ob = Obligation::new(1, Term::add(num(2), num(2)), num(4));
        assert_eq!(discharge(&ob), Discharge::Proven);
        let bad = Obligation::new(2, Term::add(num(2), num(2)), num(5));
        assert_eq!(discharge(&bad), Discharge::Unknown);
    }

    #[test]
    fn sum_normalization_is_commutative_and_pools_succs() {
        let a = Term::add(Term::succ(v("u")), v("a"));
        let b = Term::add(v("a"), Term::succ(v("u")));
        assert_eq!(normalize(&a), normalize(&b));
        assert_eq!(normalize(&a), Term::succ(Term::add(v("a"), v("u"))));
    }

    #[test]
    fn zero_summands_vanish_on_both_sides() {
        assert_eq!(normalize(&Term::add(Term::Zero, v("x"))), v("x"));
        assert_eq!(normalize(&Term::add(v("x"), Term::Zero)), v("x"));
    }

    #[test]
    fn truncated_subtraction_and_pred() {
        assert_eq!(normalize(&Term::sub(num(3), num(5))), Term::Zero);
        assert_eq!(normalize(&Term::sub(num(5), num(3))), num(2));
        assert_eq!(normalize(&Term::pred(Term::Zero)), Term::Zero);
        assert_eq!(normalize(&Term::pred(num(4))), num(3));
        // s(x) - s(y) -> x - y with open ends left alone
        assert_eq!(
            normalize(&Term::sub(Term::succ(v("x")), Term::succ(v("y")))),
            Term::sub(v("x"), v("y"))
        );
    }

    #[test]
    fn multiplication_unfolds_on_numerals_only() {
        assert_eq!(normalize(&Term::mul(num(3), num(4))), num(12));
        // x * 2 -> x + x
        assert_eq!(
            normalize(&Term::mul(v("x"), num(2))),
            Term::add(v("x"), v("x"))
        );
        // ordered * is preserved for open right sides
        let open = Term::mul(v("x"), v("y"));
        assert_eq!(normalize(&open), open);
        let flipped = Term::mul(v("y"), v("x"));
        assert_ne!(normalize(&open), normalize(&flipped));
    }

    #[test]
    fn app_arguments_normalize_but_symbol_is_opaque() {
        let t = Term::app("a", vec![Term::add(v("x"), Term::Zero), num(1)]);
        assert_eq!(normalize(&t), Term::app("a", vec![v("x"), num(1)]));
    }

    #[test]
    fn eval_ground_matches_truncation() {
        let env = vec![
            (Ident::new("x"), BigUint::from(3u32)),
            (Ident::new("y"), BigUint::from(7u32)),
        ];
        let t = Term::sub(v("x"), v("y"));
        assert_eq!(eval_ground(&t, &env), Some(BigUint::zero()));
        let u = Term::pred(Term::sub(v("y"), v("x")));
        assert_eq!(eval_ground(&u, &env), Some(BigUint::from(3u32)));
        assert_eq!(eval_ground(&Term::app("f", vec![v("x")]), &env), None);
    }

    #[test]
    fn smtlib_export_shape() {
        let obs = vec![
            Obligation::new(1, v("x"), Term::add(v("x"), Term::Zero)),
            Obligation::new(
                2,
                Term::succ(Term::add(v("x"), v("i"))),
                Term::add(v("x"), Term::succ(v("i"))),
            ),
        ];
        let script = export_smtlib(&obs);
        assert_eq!(script.matches("(check-sat)").count(), 2);
        assert_eq!(script.matches("(push)").count(), 2);
        assert_eq!(script.matches("(pop)").count(), 2);
        assert!(script.contains(":named ob_1"));
        assert!(script.contains(":named ob_2"));
        assert!(script.contains("(set-logic UFNIA)"));
    }

    #[test]
    fn smtlib_declares_uninterpreted_functions() {
        let obs = vec![Obligation::new(
            1,
            Term::succ(v("y")),
            Term::app("a", vec![Term::Zero, v("y")]),
        )];
        let script = export_smtlib(&obs);
        assert!(script.contains("(declare-fun a (Int Int) Int)"));
    }

    #[test]
    fn smtlib_empty_table_is_header_only() {
        let script = export_smtlib(&[]);
        assert!(!script.contains("(check-sat)"));
        assert!(script.contains("(set-logic UFNIA)"));
    }

    #[test]
    fn free_vars_cover_both_sides_in_order() {
        let ob = Obligation::new(
            1,
            Term::add(v("b"), v("a")),
            Term::app("g", vec![v("c"), v("b")]),
        );
        let names: Vec<String> = ob.free_vars.iter().map(|i| i.to_string()).collect();
        assert_eq!(names, vec!["b", "a", "c"]);
    }
}
