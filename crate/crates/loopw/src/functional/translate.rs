//! Translation of checked imperative derivations into the functional
//! core.  Declarations and state changes become `let` rebindings, loops
//! become primitive recursion over the invariant tuple, blocks inline
//! their bodies (packing and unpacking existentials), labels capture
//! their continuation, and jumps throw to it, discarding the dead tail.
//!
//! The input must have passed the checker: every expression carries its
//! type, so the translation only reads annotations and never re-derives
//! them.

use super::{and, exists, translate_formula, FExp, FFormula, FKind};
use crate::ast::{
    Command, CommandKind, Env, Expr, ExprKind, Formula, Ident, Program, Region, Sequence,
    Substitution, Term,
};
use crate::subst::subst_formula;
use std::collections::HashMap;

/// Translate a checked program.  The result proves the image of the
/// program's output specification and is fully annotated.
pub fn translate_program(prog: &Program) -> FExp {
    let mut stamps = HashMap::new();
    crate::infer::scan_sequence(&prog.seq, &mut stamps);
    let mut tr = Tr { temp_next: stamps.get("res").copied().unwrap_or(0) };
    tr.seq(&prog.seq, &Env::new(), &prog.spec.exist, &prog.spec.env)
}

/// Strip every proof-only construct: annotations, coercions, packing.
/// What remains is the executable skeleton (the paper's erased listing).
pub fn erase(e: &FExp) -> FExp {
    let kind = match &e.kind {
        FKind::Var(_) | FKind::Unit | FKind::Num(_) | FKind::Zero => e.kind.clone(),
        FKind::Succ(b) => FKind::Succ(Box::new(erase(b))),
        FKind::Pred(b) => FKind::Pred(Box::new(erase(b))),
        FKind::Tuple(es) => FKind::Tuple(es.iter().map(erase).collect()),
        FKind::Proj(b, i) => FKind::Proj(Box::new(erase(b)), *i),
        FKind::Lam(ps, b) => FKind::Lam(ps.clone(), Box::new(erase(b))),
        FKind::App { f, args, .. } => FKind::App {
            f: Box::new(erase(f)),
            args: args.iter().map(erase).collect(),
            witness: None,
        },
        FKind::Let(x, r, b) => FKind::Let(x.clone(), Box::new(erase(r)), Box::new(erase(b))),
        FKind::Rec(n, base, step) => {
            FKind::Rec(Box::new(erase(n)), Box::new(erase(base)), Box::new(erase(step)))
        }
        FKind::Coerce { body, .. } => return erase(body),
        FKind::Pack { body, .. } => return erase(body),
        FKind::Unpack { val, rhs, body, .. } => {
            FKind::Let(val.clone(), Box::new(erase(rhs)), Box::new(erase(body)))
        }
        FKind::Callcc(k, b) => FKind::Callcc(k.clone(), Box::new(erase(b))),
        FKind::Throw { target, value, .. } => FKind::Throw {
            target: Box::new(erase(target)),
            value: Box::new(erase(value)),
            witness: None,
        },
        FKind::Abort(b) => FKind::Abort(Box::new(erase(b))),
    };
    FExp { kind, anno: None, region: e.region.clone() }
}

struct Tr {
    temp_next: u32,
}

/// The type an expression carries; procedure literals, stars and numerals
/// may leave it implicit.
fn expr_type(e: &Expr) -> Formula {
    if let Some(f) = &e.anno {
        return f.clone();
    }
    match &e.kind {
        ExprKind::ProcVal(pv) => pv.formula(),
        ExprKind::Star { .. } => Formula::top(),
        ExprKind::Num(q) => Formula::Nat(crate::ast::mk_nat(q)),
        ExprKind::Lemma { concl, .. } => concl.clone(),
        _ => Formula::top(),
    }
}

fn env_subst(env: &Env, v: &Ident, t: &Term) -> Env {
    Env(env.0.iter().map(|(k, f)| (k.clone(), subst_formula(f, v, t))).collect())
}

/// What a block or label promises, functionally: the existential closure
/// of its out-environment's image.  The conjunction stays uncollapsed
/// even for one promise, so a continuation's refutation quantifies over
/// the spec's own existentials and never over binders inside a promised
/// formula.
fn spec_image(spec: &crate::ast::OutSpec) -> FFormula {
    exists(
        spec.exist.clone(),
        FFormula::FAnd(spec.env.img().map(translate_formula).collect()),
    )
}

fn env_subst_multi(env: &Env, s: &Substitution) -> Env {
    Env(env
        .0
        .iter()
        .map(|(k, f)| (k.clone(), crate::subst::subst_formula_multi(f, &s.0)))
        .collect())
}

impl Tr {
    fn fresh_temp(&mut self) -> Ident {
        self.temp_next += 1;
        Ident::stamped("res", self.temp_next)
    }

    // -- sequences --------------------------------------------------------

    fn seq(&mut self, s: &Sequence, omega: &Env, j: &[Ident], omega_p: &Env) -> FExp {
        match s {
            Sequence::Empty { .. } | Sequence::Subst(_) => self.terminal(s, omega, j, omega_p),
            Sequence::Seq(c, rest) => self.cmd(c, rest, omega, j, omega_p),
            Sequence::Cst { name, value, rest } | Sequence::Var { name, value, rest } => {
                let v = self.exp(value);
                let omega2 = if matches!(s, Sequence::Var { .. }) {
                    omega.update(name.clone(), expr_type(value))
                } else {
                    omega.clone()
                };
                let body = self.seq(rest, &omega2, j, omega_p);
                let region = value.region.clone();
                FExp {
                    kind: FKind::Let(name.clone(), Box::new(v), Box::new(body)),
                    anno: None,
                    region,
                }
            }
        }
    }

    /// The value a finished sequence delivers: the tuple of its promised
    /// variables, rewritten through any terminal `subst` chain (innermost
    /// first) and packed when existentials are promised.
    fn terminal(&mut self, s: &Sequence, omega: &Env, j: &[Ident], omega_p: &Env) -> FExp {
        // Collect the chain outermost-first, down to the empty end.
        let mut chain = Vec::new();
        let mut cur = s;
        let (witness, region) = loop {
            match cur {
                Sequence::Subst(ss) => {
                    chain.push(ss);
                    cur = &ss.body;
                }
                Sequence::Empty { witness, region } => {
                    break (witness.clone().unwrap_or_default(), region.clone());
                }
                _ => unreachable!("a rewriting node wraps only terminals in checked proofs"),
            }
        };
        let keys = omega_p.keys();
        let parts: Vec<FExp> = keys
            .iter()
            .map(|k| {
                let t = omega.get(k).cloned().unwrap_or_else(Formula::top);
                FExp::with_anno(FKind::Var(k.clone()), translate_formula(&t), &region)
            })
            .collect();
        let mut value = tupled(parts, &region);
        // Innermost rewriting applies first.
        for ss in chain.iter().rev() {
            let (lhs, rhs) = match &ss.just.anno {
                Some(Formula::Equal(l, r)) => (l.clone(), r.clone()),
                _ => (Term::Zero, Term::Zero),
            };
            let ob = match &ss.just.kind {
                ExprKind::Star { ob } => *ob,
                _ => None,
            };
            // The contexts may mention the promised existentials; the
            // witness closes them so the functional types stay concrete.
            let ctx_env = env_subst_multi(&ss.context, &witness);
            let context =
                FFormula::FAnd(ctx_env.img().map(translate_formula).collect());
            let anno = subst_ctx(&context, &ss.hole, &rhs);
            value = FExp {
                kind: FKind::Coerce {
                    body: Box::new(value),
                    hole: ss.hole.clone(),
                    context,
                    lhs,
                    rhs,
                    ob,
                },
                anno: Some(anno),
                region: ss.just.region.clone(),
            };
        }
        if j.is_empty() {
            value
        } else {
            let anno = exists(j.to_vec(), and(omega_p.img().map(translate_formula).collect()));
            FExp {
                kind: FKind::Pack { witness, body: Box::new(value) },
                anno: Some(anno),
                region,
            }
        }
    }

    // -- commands ---------------------------------------------------------

    fn cmd(
        &mut self,
        c: &Command,
        rest: &Sequence,
        omega: &Env,
        j: &[Ident],
        omega_p: &Env,
    ) -> FExp {
        let reg = &c.region;
        match &c.kind {
            CommandKind::Inc { var, anno } | CommandKind::Dec { var, anno } => {
                let inc = matches!(c.kind, CommandKind::Inc { .. });
                let pre = anno.clone().unwrap_or_else(Formula::top);
                let t = match &pre {
                    Formula::Nat(t) => t.clone(),
                    _ => Term::Zero,
                };
                let post = Formula::Nat(if inc {
                    Term::Succ(Box::new(t))
                } else {
                    Term::Pred(Box::new(t))
                });
                let arg =
                    Box::new(FExp::with_anno(FKind::Var(var.clone()), translate_formula(&pre), reg));
                let kind = if inc { FKind::Succ(arg) } else { FKind::Pred(arg) };
                let rhs = FExp::with_anno(kind, translate_formula(&post), reg);
                let omega2 = omega.update(var.clone(), post);
                let body = self.seq(rest, &omega2, j, omega_p);
                FExp::new(FKind::Let(var.clone(), Box::new(rhs), Box::new(body)), reg)
            }
            CommandKind::Assign { target, value } => {
                let v = self.exp(value);
                let omega2 = omega.update(target.clone(), expr_type(value));
                let body = self.seq(rest, &omega2, j, omega_p);
                FExp::new(FKind::Let(target.clone(), Box::new(v), Box::new(body)), reg)
            }
            CommandKind::Block { body, spec } => {
                let (inside, outside) = omega.split(&spec.env.keys()).unwrap_or_default();
                let mut value = self.seq(body, &inside, &spec.exist, &spec.env);
                value.anno = Some(spec_image(spec));
                let omega2 = outside.union(&spec.env);
                let rest_f = self.seq(rest, &omega2, j, omega_p);
                self.bind_value(value, &spec.exist, &spec.env, rest_f, reg)
            }
            CommandKind::Label { name, body, spec } => {
                let (inside, outside) = omega.split(&spec.env.keys()).unwrap_or_default();
                let value = self.seq(body, &inside, &spec.exist, &spec.env);
                let cc = FExp {
                    kind: FKind::Callcc(name.clone(), Box::new(value)),
                    anno: Some(spec_image(spec)),
                    region: reg.clone(),
                };
                let omega2 = outside.union(&spec.env);
                let rest_f = self.seq(rest, &omega2, j, omega_p);
                self.bind_value(cc, &spec.exist, &spec.env, rest_f, reg)
            }
            CommandKind::For { lid, bound, body, spec, .. } => {
                let sigma = &spec.env;
                let n = match expr_type(bound) {
                    Formula::Nat(t) => t,
                    _ => Term::Zero,
                };
                let sigma0 = env_subst(sigma, lid, &Term::Zero);
                let sigma_s =
                    env_subst(sigma, lid, &Term::Succ(Box::new(Term::Var(lid.clone()))));
                let keys = sigma.keys();
                let base = tupled(
                    keys.iter()
                        .map(|k| {
                            let t = sigma0.get(k).cloned().unwrap_or_else(Formula::top);
                            FExp::with_anno(FKind::Var(k.clone()), translate_formula(&t), reg)
                        })
                        .collect(),
                    reg,
                );
                let body_v = self.seq(body, sigma, &[], &sigma_s);
                let sig_and = and(sigma.img().map(translate_formula).collect());
                let sig_s_and = and(sigma_s.img().map(translate_formula).collect());
                let step_inner = FExp::with_anno(
                    FKind::Lam(keys.clone(), Box::new(body_v)),
                    super::impl_(sig_and.clone(), sig_s_and),
                    reg,
                );
                let step_ty = FFormula::FForall(
                    vec![lid.clone()],
                    Box::new(super::impl_(
                        FFormula::FNat(Term::Var(lid.clone())),
                        match &step_inner.anno {
                            Some(f) => f.clone(),
                            None => FFormula::FAnd(vec![]),
                        },
                    )),
                );
                let step = FExp::with_anno(
                    FKind::Lam(vec![lid.clone()], Box::new(step_inner)),
                    step_ty,
                    reg,
                );
                let sigma_n = env_subst(sigma, lid, &n);
                let rec = FExp::with_anno(
                    FKind::Rec(Box::new(self.exp(bound)), Box::new(base), Box::new(step)),
                    and(sigma_n.img().map(translate_formula).collect()),
                    reg,
                );
                let (_, outside) = omega.split(&sigma.keys()).unwrap_or_default();
                let omega2 = outside.union(&sigma_n);
                let rest_f = self.seq(rest, &omega2, j, omega_p);
                self.bind_value(rec, &[], &sigma_n, rest_f, reg)
            }
            CommandKind::Call { callee, args, outs, witness } => {
                let f = self.exp(callee);
                let out_vars = match expr_type(callee) {
                    Formula::Proc { out_vars, .. } => out_vars,
                    _ => Vec::new(),
                };
                let out_env = Env(outs
                    .iter()
                    .map(|o| (o.name.clone(), o.anno.clone().unwrap_or_else(Formula::top)))
                    .collect());
                let value = if args.is_empty() {
                    // A procedure without inputs is its body's proof; the
                    // call just names the results.
                    f
                } else {
                    let arg_exps: Vec<FExp> = args.iter().map(|a| self.exp(a)).collect();
                    let arg = tupled(arg_exps, reg);
                    let anno = exists(
                        out_vars.clone(),
                        and(out_env.img().map(translate_formula).collect()),
                    );
                    FExp {
                        kind: FKind::App {
                            f: Box::new(f),
                            args: vec![arg],
                            witness: witness.clone(),
                        },
                        anno: Some(anno),
                        region: reg.clone(),
                    }
                };
                let omega2 = outs.iter().fold(omega.clone(), |acc, o| {
                    acc.update(o.name.clone(), o.anno.clone().unwrap_or_else(Formula::top))
                });
                let rest_f = self.seq(rest, &omega2, j, omega_p);
                self.bind_value(value, &out_vars, &out_env, rest_f, reg)
            }
            CommandKind::Jump { target, args, witness, .. } => {
                // Control never reaches past a jump; the dead tail is
                // dropped and the throw is the sequence's value.
                let t = self.exp(target);
                let arg_exps: Vec<FExp> = args.iter().map(|a| self.exp(a)).collect();
                let value = tupled(arg_exps, reg);
                FExp::new(
                    FKind::Throw {
                        target: Box::new(t),
                        value: Box::new(value),
                        witness: witness.clone(),
                    },
                    reg,
                )
            }
        }
    }

    /// Bind the value of a block, loop, label or call: open promised
    /// existentials abstractly, then name each component.
    fn bind_value(
        &mut self,
        value: FExp,
        tyvars: &[Ident],
        out_env: &Env,
        rest: FExp,
        region: &Region,
    ) -> FExp {
        let keys = out_env.keys();
        if tyvars.is_empty() {
            match keys.len() {
                1 => FExp::new(
                    FKind::Let(keys[0].clone(), Box::new(value), Box::new(rest)),
                    region,
                ),
                0 => FExp::new(
                    FKind::Let(self.fresh_temp(), Box::new(value), Box::new(rest)),
                    region,
                ),
                _ => {
                    let tmp = self.fresh_temp();
                    let body = self.project_all(&tmp, out_env, rest, region);
                    FExp::new(FKind::Let(tmp, Box::new(value), Box::new(body)), region)
                }
            }
        } else if keys.len() == 1 {
            FExp::new(
                FKind::Unpack {
                    vars: tyvars.to_vec(),
                    val: keys[0].clone(),
                    rhs: Box::new(value),
                    body: Box::new(rest),
                },
                region,
            )
        } else {
            let tmp = self.fresh_temp();
            let body = self.project_all(&tmp, out_env, rest, region);
            FExp::new(
                FKind::Unpack {
                    vars: tyvars.to_vec(),
                    val: tmp,
                    rhs: Box::new(value),
                    body: Box::new(body),
                },
                region,
            )
        }
    }

    fn project_all(&mut self, tmp: &Ident, out_env: &Env, rest: FExp, region: &Region) -> FExp {
        let mut body = rest;
        for (i, (k, f)) in out_env.0.iter().enumerate().rev() {
            let tup = FExp::with_anno(
                FKind::Var(tmp.clone()),
                FFormula::FAnd(out_env.img().map(translate_formula).collect()),
                region,
            );
            let proj = FExp::with_anno(
                FKind::Proj(Box::new(tup), i),
                translate_formula(f),
                region,
            );
            body = FExp::new(FKind::Let(k.clone(), Box::new(proj), Box::new(body)), region);
        }
        body
    }

    // -- expressions ------------------------------------------------------

    fn exp(&mut self, e: &Expr) -> FExp {
        let reg = &e.region;
        let anno = Some(translate_formula(&expr_type(e)));
        match &e.kind {
            ExprKind::Id(x) => FExp { kind: FKind::Var(x.clone()), anno, region: reg.clone() },
            ExprKind::Num(q) => FExp { kind: FKind::Num(q.clone()), anno, region: reg.clone() },
            ExprKind::Star { .. } | ExprKind::Lemma { .. } => {
                FExp { kind: FKind::Unit, anno, region: reg.clone() }
            }
            ExprKind::ProcVal(pv) => {
                let omega0 =
                    Env(pv.rets.iter().map(|(n, _)| (n.clone(), Formula::top())).collect());
                let rets = Env(pv.rets.clone());
                let body = self.seq(&pv.body, &omega0, &pv.out_vars, &rets);
                let params: Vec<Ident> = pv.params.iter().map(|(n, _)| n.clone()).collect();
                if params.is_empty() {
                    // The paper's empty in-list convention: the value is
                    // the body's proof directly, not a thunk.
                    FExp { kind: body.kind, anno, region: reg.clone() }
                } else {
                    FExp { kind: FKind::Lam(params, Box::new(body)), anno, region: reg.clone() }
                }
            }
            ExprKind::Coerce(ce) => {
                let body = self.exp(&ce.inner);
                let Some(proof) = &ce.proof else {
                    return body;
                };
                let (lhs, rhs) = match &proof.just.anno {
                    Some(Formula::Equal(l, r)) => (l.clone(), r.clone()),
                    _ => (Term::Zero, Term::Zero),
                };
                let ob = match &proof.just.kind {
                    ExprKind::Star { ob } => *ob,
                    _ => None,
                };
                FExp {
                    kind: FKind::Coerce {
                        body: Box::new(body),
                        hole: proof.hole.clone(),
                        context: translate_formula(&proof.context),
                        lhs,
                        rhs,
                        ob,
                    },
                    anno,
                    region: reg.clone(),
                }
            }
        }
    }
}

/// Tuple with the singleton collapse; the empty tuple is the unit.
fn tupled(mut parts: Vec<FExp>, region: &Region) -> FExp {
    match parts.len() {
        0 => FExp::with_anno(FKind::Unit, FFormula::FAnd(vec![]), region),
        1 => parts.pop().unwrap(),
        _ => {
            let anno = FFormula::FAnd(
                parts.iter().map(|p| p.anno.clone().unwrap_or(FFormula::FAnd(vec![]))).collect(),
            );
            FExp { kind: FKind::Tuple(parts), anno: Some(anno), region: region.clone() }
        }
    }
}

/// Fill a rewriting context's hole.
pub(crate) fn subst_ctx(context: &FFormula, hole: &Ident, t: &Term) -> FFormula {
    super::subst_ff(context, &[(hole.clone(), t.clone())])
}
