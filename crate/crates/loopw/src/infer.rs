//! Proof inference: forward symbolic execution over a source program,
//! synthesizing the full derivation (annotations, witnesses, rewriting
//! nodes) together with the arithmetic obligations that justify it.
//!
//! The state mirrors the checker's judgment `Γ;Ω ⊢ s ▷ (j⃗, Ω′)`.  Walking
//! forward, every expression gets its synthesized type; where the computed
//! state fails to meet a required one the engine closes the gap:
//!
//! * at a sequence end, by solving the existential witness (first-order
//!   matching of the promised environment against the actual one) and
//!   rewriting any residual differences with `subst` nodes;
//! * at an explicit `:>` coercion or a call/jump argument, by nesting
//!   coercion expressions;
//! * at a loop entry, never — the state must already coincide with the
//!   invariant at 0, as there is no place for a rewriting step.
//!
//! Each residual difference becomes one numbered obligation `n = m` whose
//! rewriting context carries the fresh hole variable `var'N`.  Applications
//! of uninterpreted functions are atomic for this purpose: a difference
//! under `a(...)` is reported as the whole application, never argument by
//! argument.

use crate::ast::{
    CallOut, CoerceExpr, CoerceProof, Command, CommandKind, Env, Expr, ExprKind, Formula, Ident,
    OutSpec, Program, Region, SeqSubst, Sequence, Substitution, Term, mk_nat,
};
use crate::diag::InferError;
use crate::obligations::Obligation;
use crate::subst::{
    subst_term_multi,
    alpha_equal, all_idents_formula, free_term_vars, subst_formula, subst_formula_multi,
};
use log::{debug, trace};
use std::collections::HashMap;

/// Infer the full derivation for a source program.  The result is a fully
/// annotated program (checkable as-is) and its obligation table.
pub fn infer_program(src: &Sequence) -> Result<(Program, Vec<Obligation>), InferError> {
    let mut stamps = HashMap::new();
    scan_sequence(src, &mut stamps);
    let hole_base = stamps.get("var").copied().unwrap_or(0);
    let mut inf = Inf { obs: Vec::new(), hole_base, stamps };
    let spec = OutSpec { exist: Vec::new(), env: Env::new() };
    let seq = inf.seq(&Env::new(), &Env::new(), src, &spec.exist, &spec.env)?;
    Ok((Program { seq, spec }, inf.obs))
}

struct Inf {
    obs: Vec<Obligation>,
    /// Highest stamp the source uses on the name `var`; hole variables
    /// start above it.
    hole_base: u32,
    /// Highest stamp seen per identifier name, for capture-free renaming.
    stamps: HashMap<String, u32>,
}

/// One rewriting step: the obligation `lhs = rhs` applied at `hole`.
#[derive(Clone)]
struct Rewrite {
    hole: Ident,
    ob: u32,
    lhs: Term,
    rhs: Term,
}

fn env_free_vars(env: &Env) -> Vec<Ident> {
    env.img().flat_map(free_term_vars).collect()
}

impl Inf {
    fn fresh(&mut self, name: &str) -> Ident {
        let n = self.stamps.entry(name.to_string()).or_insert(0);
        *n += 1;
        Ident::stamped(name, *n)
    }

    /// Allocate the obligation for a rewrite pair, or reuse the step if the
    /// same pair already appeared at this reconciliation point.
    fn rewrite_for(&mut self, lhs: &Term, rhs: &Term, rws: &mut Vec<Rewrite>) -> Ident {
        if let Some(rw) = rws.iter().find(|rw| rw.lhs == *lhs && rw.rhs == *rhs) {
            return rw.hole.clone();
        }
        let id = self.obs.len() as u32 + 1;
        let hole = Ident::stamped("var", self.hole_base + id);
        debug!("obligation #{id}: {lhs} = {rhs}");
        self.obs.push(Obligation::new(id, lhs.clone(), rhs.clone()));
        rws.push(Rewrite { hole: hole.clone(), ob: id, lhs: lhs.clone(), rhs: rhs.clone() });
        hole
    }

    // -- sequences --------------------------------------------------------

    fn seq(
        &mut self,
        gamma: &Env,
        omega: &Env,
        s: &Sequence,
        j: &[Ident],
        omega_p: &Env,
    ) -> Result<Sequence, InferError> {
        match s {
            Sequence::Empty { region, .. } => self.close(omega, j, omega_p, region),
            Sequence::Seq(c, rest) => {
                let (c2, omega2) = self.cmd(gamma, omega, c, j, omega_p)?;
                let rest2 = self.seq(gamma, &omega2, rest, j, omega_p)?;
                Ok(Sequence::Seq(Box::new(c2), Box::new(rest2)))
            }
            Sequence::Cst { name, value, rest } => {
                let (v2, typ) = self.synth(gamma, omega, value)?;
                let gamma2 = gamma.update(name.clone(), typ);
                let rest2 = self.seq(&gamma2, omega, rest, j, omega_p)?;
                Ok(Sequence::Cst { name: name.clone(), value: v2, rest: Box::new(rest2) })
            }
            Sequence::Var { name, value, rest } => {
                let (v2, typ) = self.synth(gamma, omega, value)?;
                let omega2 = omega.update(name.clone(), typ);
                let rest2 = self.seq(gamma, &omega2, rest, j, omega_p)?;
                Ok(Sequence::Var { name: name.clone(), value: v2, rest: Box::new(rest2) })
            }
            Sequence::Subst(ss) => Err(InferError::new(
                "rewriting nodes cannot appear in a source program",
                ss.just.region.clone(),
            )),
        }
    }

    /// Close a sequence: solve the witness for the existentials `j` and
    /// rewrite whatever still separates the actual state from the promise.
    fn close(
        &mut self,
        omega: &Env,
        j: &[Ident],
        omega_p: &Env,
        region: &Region,
    ) -> Result<Sequence, InferError> {
        let delta = omega.restrict(&omega_p.keys());
        if delta.0.len() != omega_p.0.len() {
            let missing: Vec<_> =
                omega_p.keys().into_iter().filter(|k| !delta.contains(k)).collect();
            return Err(InferError::new(
                format!(
                    "the final environment must describe {}, never assigned here",
                    crate::printer::comma_join(&missing)
                ),
                region.clone(),
            ));
        }
        // Phase 1: the witness, by matching the promise against the state.
        let mut bind: Vec<(Ident, Term)> = Vec::new();
        for (k, pat) in &omega_p.0 {
            match_formula(pat, delta.get(k).unwrap(), j, &mut Vec::new(), &mut bind).map_err(
                |v| {
                    InferError::new(
                        format!("conflicting instantiations for the existential {v}"),
                        region.clone(),
                    )
                },
            )?;
        }
        let mut witness = Substitution::new();
        for u in j {
            match bind.iter().find(|(v, _)| v == u) {
                Some((_, t)) => witness.0.push((u.clone(), t.clone())),
                None => {
                    return Err(InferError::new(
                        format!("cannot infer a witness for the existential {u}"),
                        region.clone(),
                    ));
                }
            }
        }
        // Phase 2: generalize the remaining differences into rewrites.
        let mut rws = Vec::new();
        let mut skel = Vec::new();
        for (k, pat) in &omega_p.0 {
            let actual = delta.get(k).unwrap();
            let c = self.gen_formula(actual, pat, &witness, &mut rws, region)?;
            skel.push((k.clone(), c));
        }
        let skel = Env(skel);
        Ok(build_subst_chain(&skel, &rws, 0, witness, region))
    }

    // -- commands ---------------------------------------------------------

    fn cmd(
        &mut self,
        gamma: &Env,
        omega: &Env,
        c: &Command,
        j: &[Ident],
        omega_p: &Env,
    ) -> Result<(Command, Env), InferError> {
        let reg = &c.region;
        let rebuilt = |kind| Command { kind, region: reg.clone() };
        trace!(
            "  gamma = [{}]; omega = [{}]",
            crate::printer::env_str(gamma),
            crate::printer::env_str(omega)
        );
        match &c.kind {
            CommandKind::Block { body, spec } => {
                debug!("block at {reg}");
                let (inside, outside) = self.split_for(omega, spec, reg)?;
                self.eigen(&spec.exist, gamma, omega, j, omega_p, reg)?;
                let body2 = self.seq(gamma, &inside, body, &spec.exist, &spec.env)?;
                let post = outside.union(&spec.env);
                Ok((rebuilt(CommandKind::Block { body: body2, spec: spec.clone() }), post))
            }
            CommandKind::For { counter, lid, bound, body, spec } => {
                debug!("for {counter} at {reg}");
                if !spec.exist.is_empty() {
                    return Err(InferError::new(
                        "a loop annotation binds no existentials",
                        reg.clone(),
                    ));
                }
                let (bound2, bt) = self.synth(gamma, omega, bound)?;
                let Formula::Nat(n) = &bt else {
                    return Err(InferError::new(
                        format!("the loop bound has type {bt}, not a natural number"),
                        bound.region.clone(),
                    ));
                };
                let (inside, outside) = self.split_for(omega, spec, reg)?;
                // The source reuses the counter name as the logical index;
                // rename it when the context already owns that name.
                let lid2 = if env_free_vars(gamma).contains(lid) {
                    self.fresh(&lid.name)
                } else {
                    lid.clone()
                };
                let sigma = if lid2 == *lid {
                    spec.env.clone()
                } else {
                    env_subst(&spec.env, lid, &Term::Var(lid2.clone()))
                };
                let sigma0 = env_subst(&sigma, &lid2, &Term::Zero);
                if !inside.env_equals(&sigma0) {
                    return Err(InferError::new(
                        format!(
                            "entering the loop the state is [{}] but the invariant at 0 is [{}]",
                            crate::printer::env_str(&inside),
                            crate::printer::env_str(&sigma0)
                        ),
                        reg.clone(),
                    ));
                }
                let gamma2 =
                    gamma.update(counter.clone(), Formula::Nat(Term::Var(lid2.clone())));
                let sigma_s = env_subst(&sigma, &lid2, &Term::Succ(Box::new(Term::Var(lid2.clone()))));
                let body2 = self.seq(&gamma2, &sigma, body, &[], &sigma_s)?;
                let post = outside.union(&env_subst(&sigma, &lid2, n));
                let spec2 = OutSpec { exist: Vec::new(), env: sigma };
                Ok((
                    rebuilt(CommandKind::For {
                        counter: counter.clone(),
                        lid: lid2,
                        bound: bound2,
                        body: Box::new(body2),
                        spec: spec2,
                    }),
                    post,
                ))
            }
            CommandKind::Inc { var, .. } | CommandKind::Dec { var, .. } => {
                let inc = matches!(c.kind, CommandKind::Inc { .. });
                let Some(cur) = omega.get(var) else {
                    return Err(InferError::new(format!("{var} is not in scope"), reg.clone()));
                };
                let Formula::Nat(t) = cur else {
                    return Err(InferError::new(
                        format!("{var} has type {cur}, not a natural number"),
                        reg.clone(),
                    ));
                };
                let t2 = if inc {
                    Term::Succ(Box::new(t.clone()))
                } else {
                    Term::Pred(Box::new(t.clone()))
                };
                let anno = Some(cur.clone());
                let post = omega.update(var.clone(), Formula::Nat(t2));
                let kind = if inc {
                    CommandKind::Inc { var: var.clone(), anno }
                } else {
                    CommandKind::Dec { var: var.clone(), anno }
                };
                Ok((rebuilt(kind), post))
            }
            CommandKind::Assign { target, value } => {
                if omega.get(target).is_none() {
                    return Err(InferError::new(
                        format!("assignment to {target}, which is not a declared variable"),
                        reg.clone(),
                    ));
                }
                let (v2, typ) = self.synth(gamma, omega, value)?;
                let post = omega.update(target.clone(), typ);
                Ok((rebuilt(CommandKind::Assign { target: target.clone(), value: v2 }), post))
            }
            CommandKind::Call { callee, args, outs, .. } => {
                debug!("call at {reg}");
                let (callee2, ct) = self.synth(gamma, omega, callee)?;
                let Formula::Proc { in_vars, in_types, out_vars, out_types } = &ct else {
                    return Err(InferError::new(
                        format!("the call target has type {ct}, not a procedure"),
                        callee.region.clone(),
                    ));
                };
                if args.len() != in_types.len() {
                    return Err(InferError::new(
                        format!(
                            "the procedure takes {} arguments, {} were given",
                            in_types.len(),
                            args.len()
                        ),
                        reg.clone(),
                    ));
                }
                if outs.len() != out_types.len() {
                    return Err(InferError::new(
                        format!(
                            "the procedure returns {} results, {} variables receive them",
                            out_types.len(),
                            outs.len()
                        ),
                        reg.clone(),
                    ));
                }
                let mut synthed = Vec::new();
                for a in args {
                    synthed.push(self.synth(gamma, omega, a)?);
                }
                let w = self.solve_call_witness(in_vars, in_types, &synthed, reg)?;
                let mut args2 = Vec::new();
                for ((a2, at), want) in synthed.into_iter().zip(in_types) {
                    let want = subst_formula_multi(want, &w.0);
                    args2.push(self.adapt(a2, &at, &want)?);
                }
                self.eigen(out_vars, gamma, omega, j, omega_p, reg)?;
                let mut post = omega.clone();
                let mut outs2 = Vec::new();
                for (o, want) in outs.iter().zip(out_types) {
                    let want = subst_formula_multi(want, &w.0);
                    post = post.update(o.name.clone(), want.clone());
                    outs2.push(CallOut { name: o.name.clone(), anno: Some(want) });
                }
                Ok((
                    rebuilt(CommandKind::Call {
                        callee: callee2,
                        args: args2,
                        outs: outs2,
                        witness: Some(w),
                    }),
                    post,
                ))
            }
            CommandKind::Label { name, body, spec } => {
                debug!("label {name} at {reg}");
                let typ = Formula::Proc {
                    in_vars: spec.exist.clone(),
                    in_types: spec.env.img().cloned().collect(),
                    out_vars: Vec::new(),
                    out_types: vec![Formula::Bot],
                };
                let (inside, outside) = self.split_for(omega, spec, reg)?;
                self.eigen(&spec.exist, gamma, omega, j, omega_p, reg)?;
                let gamma2 = gamma.update(name.clone(), typ);
                let body2 = self.seq(&gamma2, &inside, body, &spec.exist, &spec.env)?;
                let post = outside.union(&spec.env);
                Ok((
                    rebuilt(CommandKind::Label { name: name.clone(), body: body2, spec: spec.clone() }),
                    post,
                ))
            }
            CommandKind::Jump { target, args, env, .. } => {
                debug!("jump at {reg}");
                let (target2, tt) = self.synth(gamma, omega, target)?;
                let cont = matches!(
                    &tt,
                    Formula::Proc { out_vars, out_types, .. }
                        if out_vars.is_empty() && *out_types == [Formula::Bot]
                );
                if !cont {
                    return Err(InferError::new(
                        format!("the jump target has type {tt}, not a continuation"),
                        target.region.clone(),
                    ));
                }
                let Formula::Proc { in_vars, in_types, .. } = &tt else { unreachable!() };
                if args.len() != in_types.len() {
                    return Err(InferError::new(
                        format!(
                            "the continuation takes {} arguments, {} were given",
                            in_types.len(),
                            args.len()
                        ),
                        reg.clone(),
                    ));
                }
                let mut synthed = Vec::new();
                for a in args {
                    synthed.push(self.synth(gamma, omega, a)?);
                }
                let w = self.solve_call_witness(in_vars, in_types, &synthed, reg)?;
                let mut args2 = Vec::new();
                for ((a2, at), want) in synthed.into_iter().zip(in_types) {
                    let want = subst_formula_multi(want, &w.0);
                    args2.push(self.adapt(a2, &at, &want)?);
                }
                let mut post = omega.clone();
                for (k, f) in &env.0 {
                    post = post.update(k.clone(), f.clone());
                }
                Ok((
                    rebuilt(CommandKind::Jump {
                        target: target2,
                        args: args2,
                        env: env.clone(),
                        witness: Some(w),
                    }),
                    post,
                ))
            }
        }
    }

    fn split_for(
        &self,
        omega: &Env,
        spec: &OutSpec,
        reg: &Region,
    ) -> Result<(Env, Env), InferError> {
        omega.split(&spec.env.keys()).ok_or_else(|| {
            let missing: Vec<_> =
                spec.env.keys().into_iter().filter(|k| !omega.contains(k)).collect();
            InferError::new(
                format!(
                    "the annotation mentions {}, not declared at this point",
                    crate::printer::comma_join(&missing)
                ),
                reg.clone(),
            )
        })
    }

    /// The freshness side conditions on newly opened existentials.
    fn eigen(
        &self,
        ks: &[Ident],
        gamma: &Env,
        omega: &Env,
        j: &[Ident],
        omega_p: &Env,
        reg: &Region,
    ) -> Result<(), InferError> {
        let in_gamma = env_free_vars(gamma);
        let in_omega = env_free_vars(omega);
        let in_out = env_free_vars(omega_p);
        for k in ks {
            if in_gamma.contains(k) || in_omega.contains(k) {
                return Err(InferError::new(
                    format!("the existential {k} is not fresh here"),
                    reg.clone(),
                ));
            }
            if !j.contains(k) && in_out.contains(k) {
                return Err(InferError::new(
                    format!("the existential {k} escapes its scope"),
                    reg.clone(),
                ));
            }
        }
        Ok(())
    }

    /// Solve the instantiation of a procedure's bound index variables from
    /// the types of the actual arguments.
    fn solve_call_witness(
        &self,
        in_vars: &[Ident],
        in_types: &[Formula],
        args: &[(Expr, Formula)],
        reg: &Region,
    ) -> Result<Substitution, InferError> {
        let mut bind: Vec<(Ident, Term)> = Vec::new();
        for ((_, at), pat) in args.iter().zip(in_types) {
            match_formula(pat, at, in_vars, &mut Vec::new(), &mut bind).map_err(|v| {
                InferError::new(
                    format!("conflicting instantiations for the parameter index {v}"),
                    reg.clone(),
                )
            })?;
        }
        let mut w = Substitution::new();
        for u in in_vars {
            match bind.iter().find(|(v, _)| v == u) {
                Some((_, t)) => w.0.push((u.clone(), t.clone())),
                None => {
                    return Err(InferError::new(
                        format!("cannot infer the instantiation of the parameter index {u}"),
                        reg.clone(),
                    ));
                }
            }
        }
        Ok(w)
    }

    /// Make an argument fit its instantiated parameter type, coercing it if
    /// it differs by provable equalities.
    fn adapt(&mut self, e: Expr, actual: &Formula, want: &Formula) -> Result<Expr, InferError> {
        if actual == want || alpha_equal(actual, want) {
            return Ok(e);
        }
        self.coerce(e, actual, want)
    }

    /// Wrap `e : actual` in coercions rewriting it to `want`.
    fn coerce(&mut self, e: Expr, actual: &Formula, want: &Formula) -> Result<Expr, InferError> {
        let region = e.region.clone();
        let mut rws = Vec::new();
        let skel = self.gen_formula(actual, want, &Substitution::new(), &mut rws, &region)?;
        let mut out = e;
        for k in (0..rws.len()).rev() {
            let context = instantiate_formula(&skel, &rws, k, true);
            let anno = instantiate_formula(&skel, &rws, k, false);
            let rw = &rws[k];
            let just = star_expr(rw, &region);
            out = Expr {
                kind: ExprKind::Coerce(Box::new(CoerceExpr {
                    inner: out,
                    proof: Some(CoerceProof { hole: rw.hole.clone(), context, just }),
                })),
                anno: Some(anno),
                region: region.clone(),
            };
        }
        Ok(out)
    }

    // -- expressions ------------------------------------------------------

    fn synth(&mut self, gamma: &Env, omega: &Env, e: &Expr) -> Result<(Expr, Formula), InferError> {
        let reg = &e.region;
        match &e.kind {
            ExprKind::Id(id) => {
                let Some(typ) = gamma.get(id).or_else(|| omega.get(id)) else {
                    return Err(InferError::new(format!("{id} is not in scope"), reg.clone()));
                };
                Ok((annotated(e.kind.clone(), typ.clone(), reg), typ.clone()))
            }
            ExprKind::Num(q) => {
                let typ = Formula::Nat(mk_nat(q));
                Ok((annotated(e.kind.clone(), typ.clone(), reg), typ))
            }
            ExprKind::Star { ob: None } => {
                let typ = Formula::top();
                Ok((annotated(e.kind.clone(), typ.clone(), reg), typ))
            }
            ExprKind::Star { ob: Some(_) } => Err(InferError::new(
                "obligation references cannot appear in a source program",
                reg.clone(),
            )),
            ExprKind::Lemma { hyps, concl } => {
                for h in hyps {
                    let ambient = gamma.img().any(|f| f == h) || omega.img().any(|f| f == h);
                    if !ambient {
                        return Err(InferError::new(
                            format!("the hypothesis {h} is not available in the context"),
                            reg.clone(),
                        ));
                    }
                }
                Ok((annotated(e.kind.clone(), concl.clone(), reg), concl.clone()))
            }
            ExprKind::ProcVal(pv) => {
                let in_gamma = env_free_vars(gamma);
                for i in &pv.in_vars {
                    if in_gamma.contains(i) {
                        return Err(InferError::new(
                            format!("the parameter index {i} is not fresh here"),
                            reg.clone(),
                        ));
                    }
                }
                let mut gamma2 = gamma.clone();
                for (n, f) in &pv.params {
                    gamma2 = gamma2.update(n.clone(), f.clone());
                }
                let omega0 =
                    Env(pv.rets.iter().map(|(n, _)| (n.clone(), Formula::top())).collect());
                let rets = Env(pv.rets.clone());
                let body2 = self.seq(&gamma2, &omega0, &pv.body, &pv.out_vars, &rets)?;
                let mut pv2 = pv.clone();
                pv2.body = body2;
                let typ = pv2.formula();
                Ok((annotated(ExprKind::ProcVal(pv2), typ.clone(), reg), typ))
            }
            ExprKind::Coerce(ce) => {
                let Some(target) = &e.anno else {
                    return Err(InferError::new(
                        "a coercion needs a target type",
                        reg.clone(),
                    ));
                };
                if ce.proof.is_some() {
                    return Err(InferError::new(
                        "justified coercions cannot appear in a source program",
                        reg.clone(),
                    ));
                }
                let (inner2, at) = self.synth(gamma, omega, &ce.inner)?;
                if at == *target {
                    return Ok((inner2, at));
                }
                let out = self.coerce(inner2, &at, target)?;
                Ok((out, target.clone()))
            }
        }
    }

    // -- generalization ---------------------------------------------------

    /// Compute the common skeleton of the actual and the promised type.
    /// Positions where the promise holds an existential of `j` become that
    /// variable (the witness closes them); any other difference becomes a
    /// rewrite hole.
    fn gen_formula(
        &mut self,
        actual: &Formula,
        target: &Formula,
        w: &Substitution,
        rws: &mut Vec<Rewrite>,
        region: &Region,
    ) -> Result<Formula, InferError> {
        self.gen_f(actual, target, w, &mut Vec::new(), rws, region)
    }

    fn gen_f(
        &mut self,
        actual: &Formula,
        target: &Formula,
        w: &Substitution,
        shadow: &mut Vec<Ident>,
        rws: &mut Vec<Rewrite>,
        region: &Region,
    ) -> Result<Formula, InferError> {
        // The witness may already close the gap; then the skeleton keeps
        // the promise verbatim and no rewriting is needed here.
        let live: Vec<(Ident, Term)> =
            w.0.iter().filter(|(k, _)| !shadow.contains(k)).cloned().collect();
        if subst_formula_multi(target, &live) == *actual {
            return Ok(target.clone());
        }
        match (actual, target) {
            (Formula::Nat(a), Formula::Nat(b)) => {
                Ok(Formula::Nat(self.gen_t(a, b, w, shadow, rws, region)?))
            }
            (Formula::Equal(a1, a2), Formula::Equal(b1, b2)) => Ok(Formula::Equal(
                self.gen_t(a1, b1, w, shadow, rws, region)?,
                self.gen_t(a2, b2, w, shadow, rws, region)?,
            )),
            (
                Formula::Proc { in_vars: ai, in_types: ait, out_vars: ao, out_types: aot },
                Formula::Proc { in_vars: bi, in_types: bit, out_vars: bo, out_types: bot },
            ) if ai == bi && ao == bo && ait.len() == bit.len() && aot.len() == bot.len() => {
                let depth = shadow.len();
                shadow.extend(bi.iter().cloned());
                let mut in_types = Vec::new();
                for (a, b) in ait.iter().zip(bit) {
                    in_types.push(self.gen_f(a, b, w, shadow, rws, region)?);
                }
                shadow.extend(bo.iter().cloned());
                let mut out_types = Vec::new();
                for (a, b) in aot.iter().zip(bot) {
                    out_types.push(self.gen_f(a, b, w, shadow, rws, region)?);
                }
                shadow.truncate(depth);
                Ok(Formula::Proc {
                    in_vars: bi.clone(),
                    in_types,
                    out_vars: bo.clone(),
                    out_types,
                })
            }
            _ => Err(InferError::new(
                format!("no equality can rewrite the type {actual} into {target}"),
                region.clone(),
            )),
        }
    }

    fn gen_t(
        &mut self,
        actual: &Term,
        target: &Term,
        w: &Substitution,
        shadow: &mut Vec<Ident>,
        rws: &mut Vec<Rewrite>,
        region: &Region,
    ) -> Result<Term, InferError> {
        let live: Vec<(Ident, Term)> =
            w.0.iter().filter(|(k, _)| !shadow.contains(k)).cloned().collect();
        if subst_term_multi(target, &live) == *actual {
            return Ok(target.clone());
        }
        let rec2 = |inf: &mut Inf, a1, b1, a2, b2, shadow: &mut Vec<Ident>, rws: &mut Vec<Rewrite>| {
            Ok::<(Term, Term), InferError>((
                inf.gen_t(a1, b1, w, shadow, rws, region)?,
                inf.gen_t(a2, b2, w, shadow, rws, region)?,
            ))
        };
        match (actual, target) {
            (Term::Succ(a), Term::Succ(b)) => {
                Ok(Term::Succ(Box::new(self.gen_t(a, b, w, shadow, rws, region)?)))
            }
            (Term::Pred(a), Term::Pred(b)) => {
                Ok(Term::Pred(Box::new(self.gen_t(a, b, w, shadow, rws, region)?)))
            }
            (Term::Add(a1, a2), Term::Add(b1, b2)) => {
                let (x, y) = rec2(self, a1, b1, a2, b2, shadow, rws)?;
                Ok(Term::Add(Box::new(x), Box::new(y)))
            }
            (Term::Mul(a1, a2), Term::Mul(b1, b2)) => {
                let (x, y) = rec2(self, a1, b1, a2, b2, shadow, rws)?;
                Ok(Term::Mul(Box::new(x), Box::new(y)))
            }
            (Term::Sub(a1, a2), Term::Sub(b1, b2)) => {
                let (x, y) = rec2(self, a1, b1, a2, b2, shadow, rws)?;
                Ok(Term::Sub(Box::new(x), Box::new(y)))
            }
            // Applications are rewritten whole, and any other shape clash
            // is exactly one equality step.
            _ => {
                let clash: Vec<Ident> = free_vars_in(actual)
                    .into_iter()
                    .chain(free_vars_in(target))
                    .filter(|v| shadow.contains(v))
                    .collect();
                if let Some(v) = clash.first() {
                    return Err(InferError::new(
                        format!(
                            "the difference between {actual} and {target} involves the bound variable {v}"
                        ),
                        region.clone(),
                    ));
                }
                Ok(Term::Var(self.rewrite_for(actual, target, rws)))
            }
        }
    }
}

fn annotated(kind: ExprKind, typ: Formula, region: &Region) -> Expr {
    Expr { kind, anno: Some(typ), region: region.clone() }
}

fn star_expr(rw: &Rewrite, region: &Region) -> Expr {
    Expr {
        kind: ExprKind::Star { ob: Some(rw.ob) },
        anno: Some(Formula::Equal(rw.lhs.clone(), rw.rhs.clone())),
        region: region.clone(),
    }
}

fn env_subst(env: &Env, v: &Ident, t: &Term) -> Env {
    Env(env.0.iter().map(|(k, f)| (k.clone(), subst_formula(f, v, t))).collect())
}

fn free_vars_in(t: &Term) -> Vec<Ident> {
    let mut out = Vec::new();
    crate::subst::all_idents_term(t, &mut out);
    out
}

/// Fill the skeleton's holes for chain link `k` (0-based): earlier links
/// keep their left-hand sides, later ones their right-hand sides.  With
/// `keep_hole` the link's own hole survives (its rewriting context);
/// without it the hole takes its right-hand side (the link's result type).
fn instantiate_formula(skel: &Formula, rws: &[Rewrite], k: usize, keep_hole: bool) -> Formula {
    let mut f = skel.clone();
    for (i, rw) in rws.iter().enumerate() {
        if i < k {
            f = subst_formula(&f, &rw.hole, &rw.lhs);
        } else if i > k || !keep_hole {
            f = subst_formula(&f, &rw.hole, &rw.rhs);
        }
    }
    f
}

fn instantiate_env(skel: &Env, rws: &[Rewrite], k: usize, keep_hole: bool) -> Env {
    Env(skel
        .0
        .iter()
        .map(|(key, f)| (key.clone(), instantiate_formula(f, rws, k, keep_hole)))
        .collect())
}

/// The terminal of a reconciled sequence: one rewriting node per chain
/// link, innermost last, around the witnessed end.
fn build_subst_chain(
    skel: &Env,
    rws: &[Rewrite],
    k: usize,
    witness: Substitution,
    region: &Region,
) -> Sequence {
    if k == rws.len() {
        return Sequence::Empty { witness: Some(witness), region: region.clone() };
    }
    let rw = &rws[k];
    Sequence::Subst(Box::new(SeqSubst {
        context: instantiate_env(skel, rws, k, true),
        hole: rw.hole.clone(),
        just: star_expr(rw, region),
        body: build_subst_chain(skel, rws, k + 1, witness, region),
    }))
}

/// Best-effort first-order matching of a promised type against an actual
/// one; `pvars` are the match variables.  Structural clashes are left to
/// the generalization phase; a variable matched against two different
/// terms is an error (`Err` carries it).
fn match_formula(
    pat: &Formula,
    act: &Formula,
    pvars: &[Ident],
    shadow: &mut Vec<Ident>,
    bind: &mut Vec<(Ident, Term)>,
) -> Result<(), Ident> {
    match (pat, act) {
        (Formula::Nat(p), Formula::Nat(a)) => match_term(p, a, pvars, shadow, bind),
        (Formula::Equal(p1, p2), Formula::Equal(a1, a2)) => {
            match_term(p1, a1, pvars, shadow, bind)?;
            match_term(p2, a2, pvars, shadow, bind)
        }
        (
            Formula::Proc { in_vars, in_types, out_vars, out_types },
            Formula::Proc { in_types: ait, out_types: aot, .. },
        ) => {
            let depth = shadow.len();
            shadow.extend(in_vars.iter().cloned());
            for (p, a) in in_types.iter().zip(ait) {
                match_formula(p, a, pvars, shadow, bind)?;
            }
            shadow.extend(out_vars.iter().cloned());
            for (p, a) in out_types.iter().zip(aot) {
                match_formula(p, a, pvars, shadow, bind)?;
            }
            shadow.truncate(depth);
            Ok(())
        }
        _ => Ok(()),
    }
}

fn match_term(
    pat: &Term,
    act: &Term,
    pvars: &[Ident],
    shadow: &mut Vec<Ident>,
    bind: &mut Vec<(Ident, Term)>,
) -> Result<(), Ident> {
    match (pat, act) {
        (Term::Var(v), _) if pvars.contains(v) && !shadow.contains(v) => {
            match bind.iter().find(|(u, _)| u == v) {
                Some((_, t)) if t == act => Ok(()),
                Some(_) => Err(v.clone()),
                None => {
                    bind.push((v.clone(), act.clone()));
                    Ok(())
                }
            }
        }
        (Term::Succ(p), Term::Succ(a)) | (Term::Pred(p), Term::Pred(a)) => {
            match_term(p, a, pvars, shadow, bind)
        }
        (Term::Add(p1, p2), Term::Add(a1, a2))
        | (Term::Mul(p1, p2), Term::Mul(a1, a2))
        | (Term::Sub(p1, p2), Term::Sub(a1, a2)) => {
            match_term(p1, a1, pvars, shadow, bind)?;
            match_term(p2, a2, pvars, shadow, bind)
        }
        (Term::App(f, ps), Term::App(g, as_)) if f == g && ps.len() == as_.len() => {
            for (p, a) in ps.iter().zip(as_) {
                match_term(p, a, pvars, shadow, bind)?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Record the highest stamp used per identifier name, so freshening and
/// hole naming never collide with the source.
fn bump(stamps: &mut HashMap<String, u32>, id: &Ident) {
    let e = stamps.entry(id.name.clone()).or_insert(0);
    if id.stamp > *e {
        *e = id.stamp;
    }
}

fn scan_formula(f: &Formula, stamps: &mut HashMap<String, u32>) {
    let mut ids = Vec::new();
    all_idents_formula(f, &mut ids);
    for id in ids {
        bump(stamps, &id);
    }
}

fn scan_env(env: &Env, stamps: &mut HashMap<String, u32>) {
    for (k, f) in &env.0 {
        bump(stamps, k);
        scan_formula(f, stamps);
    }
}

fn scan_spec(spec: &OutSpec, stamps: &mut HashMap<String, u32>) {
    for k in &spec.exist {
        bump(stamps, k);
    }
    scan_env(&spec.env, stamps);
}

fn scan_expr(e: &Expr, stamps: &mut HashMap<String, u32>) {
    if let Some(f) = &e.anno {
        scan_formula(f, stamps);
    }
    match &e.kind {
        ExprKind::Id(id) => bump(stamps, id),
        ExprKind::Num(_) | ExprKind::Star { .. } => {}
        ExprKind::Lemma { hyps, concl } => {
            for h in hyps {
                scan_formula(h, stamps);
            }
            scan_formula(concl, stamps);
        }
        ExprKind::ProcVal(pv) => {
            for i in &pv.in_vars {
                bump(stamps, i);
            }
            for (n, f) in &pv.params {
                bump(stamps, n);
                scan_formula(f, stamps);
            }
            for o in &pv.out_vars {
                bump(stamps, o);
            }
            for (n, f) in &pv.rets {
                bump(stamps, n);
                scan_formula(f, stamps);
            }
            scan_sequence(&pv.body, stamps);
        }
        ExprKind::Coerce(ce) => {
            scan_expr(&ce.inner, stamps);
            if let Some(p) = &ce.proof {
                bump(stamps, &p.hole);
                scan_formula(&p.context, stamps);
                scan_expr(&p.just, stamps);
            }
        }
    }
}

fn scan_command(c: &Command, stamps: &mut HashMap<String, u32>) {
    match &c.kind {
        CommandKind::Block { body, spec } => {
            scan_sequence(body, stamps);
            scan_spec(spec, stamps);
        }
        CommandKind::For { counter, lid, bound, body, spec } => {
            bump(stamps, counter);
            bump(stamps, lid);
            scan_expr(bound, stamps);
            scan_sequence(body, stamps);
            scan_spec(spec, stamps);
        }
        CommandKind::Assign { target, value } => {
            bump(stamps, target);
            scan_expr(value, stamps);
        }
        CommandKind::Inc { var, anno } | CommandKind::Dec { var, anno } => {
            bump(stamps, var);
            if let Some(f) = anno {
                scan_formula(f, stamps);
            }
        }
        CommandKind::Call { callee, args, outs, .. } => {
            scan_expr(callee, stamps);
            for a in args {
                scan_expr(a, stamps);
            }
            for o in outs {
                bump(stamps, &o.name);
                if let Some(f) = &o.anno {
                    scan_formula(f, stamps);
                }
            }
        }
        CommandKind::Label { name, body, spec } => {
            bump(stamps, name);
            scan_sequence(body, stamps);
            scan_spec(spec, stamps);
        }
        CommandKind::Jump { target, args, env, .. } => {
            scan_expr(target, stamps);
            for a in args {
                scan_expr(a, stamps);
            }
            scan_env(env, stamps);
        }
    }
}

pub(crate) fn scan_sequence(s: &Sequence, stamps: &mut HashMap<String, u32>) {
    match s {
        Sequence::Empty { .. } => {}
        Sequence::Seq(c, rest) => {
            scan_command(c, stamps);
            scan_sequence(rest, stamps);
        }
        Sequence::Cst { name, value, rest } | Sequence::Var { name, value, rest } => {
            bump(stamps, name);
            scan_expr(value, stamps);
            scan_sequence(rest, stamps);
        }
        Sequence::Subst(ss) => {
            scan_env(&ss.context, stamps);
            bump(stamps, &ss.hole);
            scan_expr(&ss.just, stamps);
            scan_sequence(&ss.body, stamps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::check_program;
    use crate::parser::{parse_program, parse_proof};
    use crate::printer::{print_proof, table_str};
    use crate::testdata::{ADD_PROOF, ADD_SOURCE};

    fn infer_text(src: &str) -> Result<(Program, Vec<Obligation>), InferError> {
        let seq = parse_program(src, "t.loop").expect("source parses");
        infer_program(&seq)
    }

    fn closes(src: &str) -> (Program, Vec<Obligation>) {
        let (prog, obs) = infer_text(src).expect("inference succeeds");
        let text = print_proof(&prog, &obs);
        let (prog2, obs2) = parse_proof(&text, "t.proof").expect("printed proof parses");
        if let Err(ch) = check_program(&prog2, &obs2) {
            panic!(
                "inferred proof fails its own check:\n{}\n{}",
                ch.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"),
                text
            );
        }
        (prog, obs)
    }

    #[test]
    fn addition_infers_the_reference_derivation() {
        let (prog, obs) = infer_text(ADD_SOURCE).expect("inference succeeds");
        assert_eq!(print_proof(&prog, &obs), ADD_PROOF);
    }

    #[test]
    fn addition_round_trips_through_its_own_check() {
        closes(ADD_SOURCE);
    }

    #[test]
    fn ackermann_obligations_are_the_three_defining_equations() {
        let src = include_str!("../tests/corpus/ackermann.loop");
        let (_, obs) = closes(src);
        assert_eq!(
            table_str(&obs),
            "1: |- (s(y) = a(0,y))\n2: |- (2 = a(s(i),0))\n3: |- (a(i,a(s(i),j)) = a(s(i),s(j)))\n"
        );
    }

    #[test]
    fn negation_needs_no_obligations() {
        let src = include_str!("../tests/corpus/negation.loop");
        let (prog, obs) = closes(src);
        assert!(obs.is_empty(), "{}", table_str(&obs));
        let text = print_proof(&prog, &obs);
        assert!(text.contains("with {x := x};"), "{text}");
    }

    #[test]
    fn shift_reset_infers_witnesses_and_residuals() {
        let src = include_str!("../tests/corpus/shiftreset.loop");
        let (prog, obs) = closes(src);
        assert_eq!(
            table_str(&obs),
            "1: |- (x = (x + 0))\n\
             2: |- (s((x + i)) = (x + s(i)))\n\
             3: |- (3 = F32(0))\n\
             4: |- (2 = F32(s(i)))\n\
             5: |- (F32(0) = 3)\n\
             6: |- (F32(1) = 2)\n"
        );
        let text = print_proof(&prog, &obs);
        assert!(text.contains("with {v := F32(u)};"), "{text}");
        assert!(text.contains("with {u := 0};"), "{text}");
        assert!(text.contains("with {u := u};"), "{text}");
    }

    #[test]
    fn loop_entry_mismatch_is_a_hard_error() {
        let src = "var Y := 3;\nvar Z := 0;\nfor i := 0 until Y {\n    inc(Z);\n}Z:nat(1);\n";
        let e = infer_text(src).unwrap_err();
        assert!(e.message.contains("invariant"), "{e}");
    }

    #[test]
    fn loop_indices_are_freshened_against_the_context() {
        let src = "cst c = * :> (0 = i);\nvar Z := 0;\nfor i := 0 until 3 {\n    inc(Z);\n}Z:nat(i);\n";
        let (prog, obs) = closes(src);
        let text = print_proof(&prog, &obs);
        assert!(text.contains("for i[i'1] := 0 until"), "{text}");
    }

    #[test]
    fn assignment_to_an_undeclared_variable_is_rejected() {
        let e = infer_text("Q := 4;\n").unwrap_err();
        assert!(e.message.contains("not a declared variable"), "{e}");
    }

    #[test]
    fn star_has_the_trivial_type() {
        let (prog, obs) = infer_text("var N := *;\n").unwrap();
        assert!(obs.is_empty());
        assert!(print_proof(&prog, &obs).contains("(* : (0 = 0))"));
    }

    #[test]
    fn vacuous_coercions_are_dropped() {
        let (prog, obs) = infer_text("var X := 0 :> nat(0);\n").unwrap();
        assert!(obs.is_empty());
        let text = print_proof(&prog, &obs);
        assert!(text.contains("var X := (0 : nat(0));"), "{text}");
        assert!(!text.contains(":>"), "{text}");
    }

    #[test]
    fn unknown_witnesses_are_an_error() {
        let src = "var X := *;\n{\n    X := 0;\n}{u}X:nat(0);\n";
        let e = infer_text(src).unwrap_err();
        assert!(e.message.contains("witness"), "{e}");
    }

    #[test]
    fn irreconcilable_shapes_are_an_error() {
        let src = "var X := *;\n{\n    X := 0;\n}X:(1 = 1);\n";
        let e = infer_text(src).unwrap_err();
        assert!(e.message.contains("no equality can rewrite"), "{e}");
    }

    #[test]
    fn opened_existentials_must_be_fresh() {
        let src = "cst q = proc(; {u} out X : nat(u)) {\n    X := 0;\n};\n\
                   var X := *;\nvar Y := * :> (u = u);\nq(; X);\n";
        let e = infer_text(src).unwrap_err();
        assert!(e.message.contains("not fresh"), "{e}");
    }

    #[test]
    fn stale_source_stamps_push_hole_names_up() {
        // The source already owns var'1, so holes start at var'2.
        let src = "cst c = * :> (0 = var'1);\n";
        let (prog, obs) = infer_text(src).unwrap();
        assert_eq!(obs.len(), 1);
        let text = print_proof(&prog, &obs);
        assert!(text.contains("{var'2 / "), "{text}");
    }
}
