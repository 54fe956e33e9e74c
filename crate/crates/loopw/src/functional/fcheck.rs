//! Natural-deduction checking of the functional core.  Every rule is the
//! image of an imperative one, and diagnostics carry that originating
//! rule name: lambdas check like procedures, applications like calls,
//! recursion like loops, continuation capture like labels, throws like
//! jumps, and rewriting like the subst nodes.

use super::{dual, feq, ff_free_vars, strip, subst_ff, FExp, FFormula, FKind};
use super::translate::subst_ctx;
use crate::ast::{mk_nat, Ident, Substitution, Term};
use crate::checker::Chain;
use crate::diag::{Diagnostic, RuleName};
use crate::obligations::Obligation;

type CResult = Result<(), Box<Diagnostic>>;

/// Check a closed core term against the formula it claims to prove.
/// Failures come back as a diagnostic chain, like the imperative checker's.
pub fn fcheck(t: &FExp, expected: &FFormula, obs: &[Obligation]) -> Result<(), Chain> {
    let ck = Fck { obs };
    ck.check(t, expected, &Hyps(Vec::new())).map_err(|d| vec![*d])
}

struct Hyps(Vec<(Ident, FFormula)>);

impl Hyps {
    fn get(&self, x: &Ident) -> Option<&FFormula> {
        self.0.iter().rev().find(|(k, _)| k == x).map(|(_, f)| f)
    }

    fn push(&self, x: Ident, f: FFormula) -> Hyps {
        let mut v = self.0.clone();
        v.push((x, f));
        Hyps(v)
    }

    fn free_vars(&self) -> Vec<Ident> {
        let mut out = Vec::new();
        for (_, f) in &self.0 {
            ff_free_vars(f, &mut out);
        }
        out
    }
}

struct Fck<'a> {
    obs: &'a [Obligation],
}

impl Fck<'_> {
    fn check(&self, t: &FExp, expected: &FFormula, hyps: &Hyps) -> CResult {
        let fail =
            |rule: RuleName, msg: String| Err(Box::new(Diagnostic::new(rule, msg, t.region.clone())));
        let want = strip(expected);
        match &t.kind {
            FKind::Var(x) => match hyps.get(x) {
                Some(f) if feq(f, expected) => Ok(()),
                Some(f) => fail(
                    RuleName::Env,
                    format!("{x} proves {}, not the required {}", show(f), show(expected)),
                ),
                None => fail(RuleName::Env, format!("{x} is not in scope")),
            },
            FKind::Unit => match want {
                FFormula::FEqual(..) => Ok(()),
                FFormula::FAnd(fs) if fs.is_empty() => Ok(()),
                other => fail(
                    RuleName::Star,
                    format!("the unit proves only equalities, not {}", show(&other)),
                ),
            },
            FKind::Num(q) => match want {
                FFormula::FNat(n) if n == mk_nat(q) => Ok(()),
                other => fail(
                    RuleName::Num,
                    format!("the numeral {q} has exactly the type nat of its tower, not {}",
                        show(&other)),
                ),
            },
            FKind::Zero => match want {
                FFormula::FNat(Term::Zero) => Ok(()),
                other => fail(RuleName::Num, format!("0 proves nat(0), not {}", show(&other))),
            },
            FKind::Succ(b) => match want {
                FFormula::FNat(Term::Succ(inner)) => {
                    self.check(b, &FFormula::FNat((*inner).clone()), hyps)
                }
                other => fail(
                    RuleName::Inc,
                    format!("a successor proves nat of a successor, not {}", show(&other)),
                ),
            },
            FKind::Pred(b) => match want {
                FFormula::FNat(Term::Pred(inner)) => {
                    self.check(b, &FFormula::FNat((*inner).clone()), hyps)
                }
                other => fail(
                    RuleName::Dec,
                    format!("a predecessor proves nat of a predecessor, not {}", show(&other)),
                ),
            },
            FKind::Tuple(es) => match want {
                FFormula::FAnd(fs) if fs.len() == es.len() => {
                    for (e, f) in es.iter().zip(&fs) {
                        self.check(e, f, hyps)?;
                    }
                    Ok(())
                }
                other => fail(
                    RuleName::Empty,
                    format!("a {}-tuple cannot prove {}", es.len(), show(&other)),
                ),
            },
            FKind::Proj(b, i) => {
                let Some(bt) = &b.anno else {
                    return fail(RuleName::Empty, "an unannotated tuple cannot be projected".into());
                };
                self.check(b, bt, hyps)?;
                match strip(bt) {
                    FFormula::FAnd(fs) if *i < fs.len() => {
                        if feq(&fs[*i], expected) {
                            Ok(())
                        } else {
                            fail(
                                RuleName::Empty,
                                format!(
                                    "component {} proves {}, not {}",
                                    i + 1,
                                    show(&fs[*i]),
                                    show(expected)
                                ),
                            )
                        }
                    }
                    other => fail(
                        RuleName::Empty,
                        format!("projection needs a conjunction, found {}", show(&other)),
                    ),
                }
            }
            FKind::Lam(params, body) => {
                let (vs, ante, concl) = match want {
                    FFormula::FForall(vs, b) => match *b {
                        FFormula::FImpl(a, c) => (vs, *a, *c),
                        other => {
                            return fail(
                                RuleName::Proc,
                                format!("a procedure type must be an implication, found {}",
                                    show(&other)),
                            );
                        }
                    },
                    FFormula::FImpl(a, c) => (Vec::new(), *a, *c),
                    other => {
                        return fail(
                            RuleName::Proc,
                            format!("a lambda cannot prove {}", show(&other)),
                        );
                    }
                };
                let _ = vs; // binders stay free in the antecedent, as imperatively
                let mut h2 = Hyps(hyps.0.clone());
                match (&strip(&ante), params.len()) {
                    (FFormula::FAnd(fs), n) if fs.len() == n => {
                        for (p, f) in params.iter().zip(fs) {
                            h2 = h2.push(p.clone(), f.clone());
                        }
                    }
                    (single, 1) => {
                        h2 = h2.push(params[0].clone(), (*single).clone());
                    }
                    (_, _) => {
                        return fail(
                            RuleName::Proc,
                            format!(
                                "the procedure binds {} parameters but its type lists a different arity",
                                params.len()
                            ),
                        );
                    }
                }
                self.check(body, &concl, &h2)
            }
            FKind::App { f, args, witness } => {
                let Some(ft) = &f.anno else {
                    return fail(RuleName::Call, "the call target carries no type".into());
                };
                self.check(f, ft, hyps)?;
                let (vs, ante, concl) = match strip(ft) {
                    FFormula::FForall(vs, b) => match *b {
                        FFormula::FImpl(a, c) => (vs, *a, *c),
                        other => {
                            return fail(
                                RuleName::Call,
                                format!("the call target proves {}, not a procedure type",
                                    show(&other)),
                            );
                        }
                    },
                    FFormula::FImpl(a, c) => (Vec::new(), *a, *c),
                    other => {
                        return fail(
                            RuleName::Call,
                            format!("the call target proves {}, not a procedure type", show(&other)),
                        );
                    }
                };
                let w = self.instantiation(&vs, witness, t, RuleName::Call)?;
                let ante = subst_ff(&ante, &w);
                let concl = subst_ff(&concl, &w);
                match args.as_slice() {
                    [arg] => self.check(arg, &ante, hyps)?,
                    _ => {
                        return fail(
                            RuleName::Call,
                            format!("a call takes one argument tuple, found {}", args.len()),
                        );
                    }
                }
                if feq(&concl, expected) {
                    Ok(())
                } else {
                    fail(
                        RuleName::Call,
                        format!("the call proves {}, not {}", show(&concl), show(expected)),
                    )
                }
            }
            FKind::Let(x, rhs, body) => {
                let Some(rt) = &rhs.anno else {
                    return fail(RuleName::Var, format!("the binding of {x} carries no type"));
                };
                self.check(rhs, rt, hyps)?;
                self.check(body, expected, &hyps.push(x.clone(), rt.clone()))
            }
            FKind::Rec(n, base, step) => {
                let Some(nt) = &n.anno else {
                    return fail(RuleName::For, "the recursion bound carries no type".into());
                };
                self.check(n, nt, hyps)?;
                let FFormula::FNat(nu) = strip(nt) else {
                    return fail(
                        RuleName::For,
                        format!("the recursion bound proves {}, not a natural", show(nt)),
                    );
                };
                let Some(st) = &step.anno else {
                    return fail(RuleName::For, "the recursion step carries no type".into());
                };
                // step : Forall i. nat(i) => (S => S[s(i)/i])
                let (i, s_now, s_next) = match strip(st) {
                    FFormula::FForall(vs, b) if vs.len() == 1 => match *b {
                        FFormula::FImpl(idx, rest) => {
                            let ok = matches!(&*idx,
                                FFormula::FNat(Term::Var(v)) if *v == vs[0]);
                            match (ok, *rest) {
                                (true, FFormula::FImpl(s_now, s_next)) => {
                                    (vs[0].clone(), *s_now, *s_next)
                                }
                                _ => {
                                    return fail(
                                        RuleName::For,
                                        "the recursion step must take the index and the state"
                                            .into(),
                                    );
                                }
                            }
                        }
                        _ => {
                            return fail(
                                RuleName::For,
                                "the recursion step must take the index and the state".into(),
                            );
                        }
                    },
                    other => {
                        return fail(
                            RuleName::For,
                            format!("the recursion step proves {}, not an induction step",
                                show(&other)),
                        );
                    }
                };
                let succ_i = Term::Succ(Box::new(Term::Var(i.clone())));
                if !feq(&subst_ff(&s_now, &[(i.clone(), succ_i)]), &s_next) {
                    return fail(
                        RuleName::For,
                        "the recursion step does not advance the invariant by one".into(),
                    );
                }
                self.check(step, st, hyps)?;
                let s_zero = subst_ff(&s_now, &[(i.clone(), Term::Zero)]);
                self.check(base, &s_zero, hyps)?;
                let s_nu = subst_ff(&s_now, &[(i, nu)]);
                if feq(&s_nu, expected) {
                    Ok(())
                } else {
                    fail(
                        RuleName::For,
                        format!("the recursion proves {}, not {}", show(&s_nu), show(expected)),
                    )
                }
            }
            FKind::Coerce { body, hole, context, lhs, rhs, ob } => {
                if let Some(n) = ob {
                    match self.obs.iter().find(|o| o.id == *n) {
                        Some(o) if o.lhs == *lhs && o.rhs == *rhs => {}
                        Some(_) => {
                            return fail(
                                RuleName::Star,
                                format!("obligation #{n} proves a different equality"),
                            );
                        }
                        None => {
                            return fail(
                                RuleName::Star,
                                format!("there is no obligation #{n} in the table"),
                            );
                        }
                    }
                }
                self.check(body, &subst_ctx(context, hole, lhs), hyps)?;
                let out = subst_ctx(context, hole, rhs);
                if feq(&out, expected) {
                    Ok(())
                } else {
                    fail(
                        RuleName::SubstI,
                        format!("rewriting yields {}, not {}", show(&out), show(expected)),
                    )
                }
            }
            FKind::Pack { witness, body } => {
                let (vs, inner) = match want {
                    FFormula::FExists(vs, b) => (vs, *b),
                    other => {
                        return fail(
                            RuleName::Empty,
                            format!("packing proves an existential, not {}", show(&other)),
                        );
                    }
                };
                let w = self.instantiation(&vs, &Some(witness.clone()), t, RuleName::Empty)?;
                self.check(body, &subst_ff(&inner, &w), hyps)
            }
            FKind::Unpack { vars, val, rhs, body } => {
                let Some(rt) = &rhs.anno else {
                    return fail(RuleName::Block, "the opened value carries no type".into());
                };
                self.check(rhs, rt, hyps)?;
                let inner = match strip(rt) {
                    FFormula::FExists(vs, b) if vs == *vars => *b,
                    other => {
                        return fail(
                            RuleName::Block,
                            format!(
                                "opening {} requires an existential over exactly those variables, found {}",
                                vars.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
                                show(&other)
                            ),
                        );
                    }
                };
                let mut leak = hyps.free_vars();
                ff_free_vars(expected, &mut leak);
                if let Some(v) = vars.iter().find(|v| leak.contains(v)) {
                    return fail(
                        RuleName::Block,
                        format!("the existential {v} already occurs in the current environment"),
                    );
                }
                self.check(body, expected, &hyps.push(val.clone(), inner))
            }
            FKind::Callcc(k, body) => {
                self.check(body, expected, &hyps.push(k.clone(), dual(expected)))
            }
            FKind::Throw { target, value, witness } => {
                let Some(tt) = &target.anno else {
                    return fail(RuleName::Jump, "the jump target carries no type".into());
                };
                self.check(target, tt, hyps)?;
                let (vs, ante) = match strip(tt) {
                    FFormula::FForall(vs, b) => match *b {
                        FFormula::FImpl(a, c) if matches!(strip(&c), FFormula::FBot) => (vs, *a),
                        _ => {
                            return fail(
                                RuleName::Jump,
                                "the jump target is not a continuation".into(),
                            );
                        }
                    },
                    FFormula::FImpl(a, c) if matches!(strip(&c), FFormula::FBot) => {
                        (Vec::new(), *a)
                    }
                    other => {
                        return fail(
                            RuleName::Jump,
                            format!("the jump target proves {}, not a continuation", show(&other)),
                        );
                    }
                };
                let w = self.instantiation(&vs, witness, t, RuleName::Jump)?;
                self.check(value, &subst_ff(&ante, &w), hyps)
                // A throw never returns: it proves anything.
            }
            FKind::Abort(v) => {
                let Some(vt) = &v.anno else {
                    return fail(RuleName::Jump, "an abort needs an annotated value".into());
                };
                self.check(v, vt, hyps)
            }
        }
    }

    /// The substitution a witness provides for a block of universal
    /// binders; its keys must be exactly the binders in order.
    fn instantiation(
        &self,
        vs: &[Ident],
        witness: &Option<Substitution>,
        at: &FExp,
        rule: RuleName,
    ) -> Result<Vec<(Ident, Term)>, Box<Diagnostic>> {
        let empty = Substitution::new();
        let w = witness.as_ref().unwrap_or(&empty);
        if w.keys() != vs {
            return Err(Box::new(Diagnostic::new(
                rule,
                format!(
                    "the witness instantiates [{}] but the type binds [{}]",
                    crate::printer::comma_join(&w.keys()),
                    crate::printer::comma_join(vs)
                ),
                at.region.clone(),
            )));
        }
        Ok(w.0.clone())
    }
}

fn show(f: &FFormula) -> String {
    super::fprint::formula_str(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Region;
    use crate::checker::check_program;
    use crate::functional::{impl_, program_goal, translate_program, FExp};
    use crate::infer::infer_program;
    use crate::parser::{parse_program, parse_proof};
    use crate::testdata::ADD_PROOF;
    use num_bigint::BigUint;

    fn e(kind: FKind) -> FExp {
        FExp { kind, anno: None, region: Region::default() }
    }

    fn ea(kind: FKind, anno: FFormula) -> FExp {
        FExp { kind, anno: Some(anno), region: Region::default() }
    }

    /// Unwrap the single diagnostic a failing check produces.
    fn diag(r: Result<(), Chain>) -> Diagnostic {
        r.unwrap_err().pop().unwrap()
    }

    fn nat(t: Term) -> FFormula {
        FFormula::FNat(t)
    }

    fn tv(n: &str) -> Term {
        Term::Var(Ident::new(n))
    }

    #[test]
    fn the_translated_addition_checks() {
        let (prog, obs) = parse_proof(ADD_PROOF, "add.proof").unwrap();
        check_program(&prog, &obs).unwrap();
        let t = translate_program(&prog);
        fcheck(&t, &program_goal(&prog), &obs).unwrap();
    }

    #[test]
    fn every_corpus_program_checks_functionally() {
        for (name, src) in [
            ("add.loop", include_str!("../../tests/corpus/add.loop")),
            ("ackermann.loop", include_str!("../../tests/corpus/ackermann.loop")),
            ("negation.loop", include_str!("../../tests/corpus/negation.loop")),
            ("shiftreset.loop", include_str!("../../tests/corpus/shiftreset.loop")),
        ] {
            let seq = parse_program(src, name).unwrap();
            let (prog, obs) = infer_program(&seq).unwrap();
            check_program(&prog, &obs).unwrap_or_else(|e| panic!("{name}: {e:?}"));
            let t = translate_program(&prog);
            fcheck(&t, &program_goal(&prog), &obs).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        }
    }

    #[test]
    fn units_prove_only_equalities() {
        fcheck(&e(FKind::Unit), &FFormula::FEqual(Term::Zero, Term::Zero), &[]).unwrap();
        let err = diag(fcheck(&e(FKind::Unit), &nat(Term::Zero), &[]));
        assert_eq!(err.rule, RuleName::Star);
    }

    #[test]
    fn numerals_have_exactly_their_tower_type() {
        let three = e(FKind::Num(BigUint::from(3u32)));
        fcheck(&three, &nat(mk_nat(&BigUint::from(3u32))), &[]).unwrap();
        let err = diag(fcheck(&three, &nat(mk_nat(&BigUint::from(4u32))), &[]));
        assert_eq!(err.rule, RuleName::Num);
    }

    #[test]
    fn successors_advance_the_tower() {
        let t = e(FKind::Succ(Box::new(e(FKind::Num(BigUint::from(2u32))))));
        fcheck(&t, &nat(mk_nat(&BigUint::from(3u32))), &[]).unwrap();
        // Succ(x) at nat(i) with x : nat(i) is not derivable.
        let lam = ea(
            FKind::Lam(
                vec![Ident::new("X")],
                Box::new(e(FKind::Succ(Box::new(ea(FKind::Var(Ident::new("X")), nat(tv("i"))))))),
            ),
            impl_(nat(tv("i")), nat(tv("i"))),
        );
        let err = diag(fcheck(&lam, &impl_(nat(tv("i")), nat(tv("i"))), &[]));
        assert_eq!(err.rule, RuleName::Inc);
    }

    #[test]
    fn lambdas_bind_their_antecedent_componentwise() {
        let a = nat(tv("a"));
        let b = FFormula::FEqual(tv("a"), tv("a"));
        let pair = FFormula::FAnd(vec![a.clone(), b.clone()]);
        let swap = e(FKind::Lam(
            vec![Ident::new("X"), Ident::new("Y")],
            Box::new(e(FKind::Tuple(vec![
                e(FKind::Var(Ident::new("Y"))),
                e(FKind::Var(Ident::new("X"))),
            ]))),
        ));
        fcheck(&swap, &impl_(pair.clone(), FFormula::FAnd(vec![b, a])), &[]).unwrap();
        let err = diag(fcheck(&swap, &impl_(pair.clone(), pair), &[]));
        assert_eq!(err.rule, RuleName::Env);
    }

    #[test]
    fn applications_consume_the_instantiated_type() {
        // f : Forall n. nat(n) => nat(s(n)), applied at n := 2 to the
        // numeral 2, proves nat(3) and nothing else.
        let n = Ident::new("n");
        let fty = FFormula::FForall(
            vec![n.clone()],
            Box::new(impl_(nat(tv("n")), nat(Term::Succ(Box::new(tv("n")))))),
        );
        let call = |wit: Substitution| {
            e(FKind::App {
                f: Box::new(ea(FKind::Var(Ident::new("f")), fty.clone())),
                args: vec![e(FKind::Num(BigUint::from(2u32)))],
                witness: Some(wit),
            })
        };
        let two = mk_nat(&BigUint::from(2u32));
        let lam = |body: FExp| {
            ea(FKind::Lam(vec![Ident::new("f")], Box::new(body)), impl_(fty.clone(), nat(Term::Succ(Box::new(two.clone())))))
        };
        let good = lam(call(Substitution(vec![(n.clone(), two.clone())])));
        fcheck(&good, &impl_(fty.clone(), nat(Term::Succ(Box::new(two.clone())))), &[]).unwrap();

        let missing = lam(call(Substitution(vec![])));
        let err = diag(fcheck(&missing, &impl_(fty, nat(Term::Succ(Box::new(two)))), &[]));
        assert_eq!(err.rule, RuleName::Call);
        assert!(err.message.contains("witness instantiates"), "{}", err.message);
    }

    #[test]
    fn recursion_requires_the_inductive_step() {
        // A step that does not advance the invariant by one is rejected.
        let i = Ident::new("i");
        let step_ty = FFormula::FForall(
            vec![i.clone()],
            Box::new(impl_(nat(tv("i")), impl_(nat(tv("i")), nat(tv("i"))))),
        );
        let step = ea(
            FKind::Lam(
                vec![i.clone()],
                Box::new(ea(
                    FKind::Lam(vec![Ident::new("Z")], Box::new(e(FKind::Var(Ident::new("Z"))))),
                    impl_(nat(tv("i")), nat(tv("i"))),
                )),
            ),
            step_ty,
        );
        let t = e(FKind::Rec(
            Box::new(ea(FKind::Num(BigUint::from(2u32)), nat(mk_nat(&BigUint::from(2u32))))),
            Box::new(e(FKind::Zero)),
            Box::new(step),
        ));
        let err = diag(fcheck(&t, &nat(mk_nat(&BigUint::from(2u32))), &[]));
        assert_eq!(err.rule, RuleName::For);
        assert!(err.message.contains("advance"), "{}", err.message);
    }

    #[test]
    fn coercions_must_cite_their_equality() {
        let x = tv("x");
        let x0 = Term::Add(Box::new(x.clone()), Box::new(Term::Zero));
        let ob = crate::obligations::Obligation::new(1, x.clone(), x0.clone());
        let hole = Ident::new("h");
        let body = ea(FKind::Num(BigUint::from(0u32)), nat(Term::Zero));
        // nat(h) with h := x needs the body at nat(x): use 0 at nat(0), x := 0.
        let t = |ob_ref: Option<u32>| {
            ea(
                FKind::Coerce {
                    body: Box::new(body.clone()),
                    hole: hole.clone(),
                    context: nat(tv("h")),
                    lhs: Term::Zero,
                    rhs: Term::Zero,
                    ob: ob_ref,
                },
                nat(Term::Zero),
            )
        };
        fcheck(&t(None), &nat(Term::Zero), std::slice::from_ref(&ob)).unwrap();
        let err = diag(fcheck(&t(Some(1)), &nat(Term::Zero), &[ob]));
        assert_eq!(err.rule, RuleName::Star);
        assert!(err.message.contains("different equality"), "{}", err.message);
    }

    #[test]
    fn opened_existentials_must_not_leak() {
        let u = Ident::new("u");
        let packed = ea(
            FKind::Pack {
                witness: Substitution(vec![(u.clone(), Term::Zero)]),
                body: Box::new(e(FKind::Zero)),
            },
            FFormula::FExists(vec![u.clone()], Box::new(nat(tv("u")))),
        );
        let open = |expected: FFormula| {
            let t = e(FKind::Unpack {
                vars: vec![u.clone()],
                val: Ident::new("r"),
                rhs: Box::new(packed.clone()),
                body: Box::new(ea(FKind::Var(Ident::new("r")), nat(tv("u")))),
            });
            fcheck(&t, &expected, &[])
        };
        // The eigenvariable may not appear in the conclusion…
        let err = diag(open(nat(tv("u"))));
        assert_eq!(err.rule, RuleName::Block);
        assert!(err.message.contains("already occurs"), "{}", err.message);
        // …and the body may not export it either (here the conclusion is
        // an unrelated variable, so the Var lookup fails instead).
        assert!(open(nat(tv("w"))).is_err());
    }

    #[test]
    fn continuation_capture_refutes_the_goal() {
        // callcc k. throw k 0 : nat(0); the throw's value must match the
        // continuation's antecedent.
        let k = Ident::new("k");
        let goal = nat(Term::Zero);
        let t = |value: FExp| {
            e(FKind::Callcc(
                k.clone(),
                Box::new(e(FKind::Throw {
                    target: Box::new(ea(FKind::Var(k.clone()), dual(&goal))),
                    value: Box::new(value),
                    witness: None,
                })),
            ))
        };
        fcheck(&t(e(FKind::Zero)), &goal, &[]).unwrap();
        let err = diag(fcheck(&t(e(FKind::Unit)), &goal, &[]));
        assert_eq!(err.rule, RuleName::Star);
    }

    #[test]
    fn throws_prove_anything() {
        // Under k : nat(0) => $, a throw may sit at the absurd type.
        let k = Ident::new("k");
        let t = e(FKind::Callcc(
            k.clone(),
            Box::new(e(FKind::Throw {
                target: Box::new(ea(
                    FKind::Var(k.clone()),
                    impl_(nat(Term::Zero), FFormula::FBot),
                )),
                value: Box::new(e(FKind::Zero)),
                witness: None,
            })),
        ));
        // expected = nat(0): dual gives k : nat(0) => $, and the throw
        // then proves the nat(0) goal by never returning.
        fcheck(&t, &nat(Term::Zero), &[]).unwrap();
    }
}
