//! The derivation checker: replays a fully annotated program against the
//! typing rules and reports every deviation as a [`Diagnostic`] chain
//! (deepest failure first, followed by the enclosing contexts).
//!
//! The judgment is `Γ;Ω ⊢ s ▷ (j⃗, Ω′)`: under constants `Γ` and mutable
//! environment `Ω`, the sequence `s` ends in a state described by `Ω′`,
//! existentially quantified over `j⃗` (which the terminal witness must
//! instantiate).

use crate::ast::{
    Command, CommandKind, Env, Expr, ExprKind, Formula, Ident, Program, Region, Sequence,
    Substitution, Term, mk_nat,
};
use crate::diag::{Diagnostic, RuleName};
use crate::obligations::Obligation;
use crate::subst::{alpha_equal, free_term_vars, subst_formula, subst_formula_multi};
use log::{debug, trace};

/// A failure and the contexts it occurred in, deepest first.
pub type Chain = Vec<Diagnostic>;

/// Check a whole derivation; stops at the first failure.
pub fn check_program(prog: &Program, obs: &[Obligation]) -> Result<(), Chain> {
    let mut ck = Ck { obs, collect: false, frames: Vec::new(), failures: Vec::new() };
    ck.sequence(&Env::new(), &Env::new(), &prog.seq, &prog.spec.exist, &prog.spec.env)
}

/// Check a whole derivation, recovering after each failed statement by
/// assuming its annotations; returns every failure chain found.
pub fn check_program_all(prog: &Program, obs: &[Obligation]) -> Vec<Chain> {
    let mut ck = Ck { obs, collect: true, frames: Vec::new(), failures: Vec::new() };
    if let Err(ch) =
        ck.sequence(&Env::new(), &Env::new(), &prog.seq, &prog.spec.exist, &prog.spec.env)
    {
        ck.failures.push(ch);
    }
    ck.failures
}

struct Ck<'a> {
    obs: &'a [Obligation],
    collect: bool,
    /// Enclosing contexts, outermost first; appended to each new chain.
    frames: Vec<Diagnostic>,
    failures: Vec<Chain>,
}

fn env_free_vars(env: &Env) -> Vec<Ident> {
    env.img().flat_map(free_term_vars).collect()
}

fn anno_or(e: &Expr) -> Formula {
    e.anno.clone().unwrap_or_else(Formula::top)
}

impl<'a> Ck<'a> {
    fn chain(&self, d: Diagnostic) -> Chain {
        let mut ch = vec![d];
        ch.extend(self.frames.iter().rev().cloned());
        ch
    }

    fn fail(&self, rule: RuleName, msg: impl Into<String>, region: &Region) -> Chain {
        self.chain(Diagnostic::new(rule, msg, region.clone()))
    }

    fn fail_types(
        &self,
        rule: RuleName,
        msg: impl Into<String>,
        region: &Region,
        expected: Formula,
        actual: Formula,
    ) -> Chain {
        self.chain(Diagnostic::new(rule, msg, region.clone()).with_types(expected, actual))
    }

    fn framed<T>(
        &mut self,
        rule: RuleName,
        msg: impl Into<String>,
        region: &Region,
        f: impl FnOnce(&mut Self) -> Result<T, Chain>,
    ) -> Result<T, Chain> {
        self.frames.push(Diagnostic::new(rule, msg, region.clone()));
        let r = f(self);
        self.frames.pop();
        r
    }

    /// Record a statement failure in collect mode, else propagate it.
    fn absorb(&mut self, ch: Chain) -> Result<(), Chain> {
        if self.collect {
            self.failures.push(ch);
            Ok(())
        } else {
            Err(ch)
        }
    }

    // -- sequences --------------------------------------------------------

    fn sequence(
        &mut self,
        gamma: &Env,
        omega: &Env,
        s: &Sequence,
        j: &[Ident],
        omega_p: &Env,
    ) -> Result<(), Chain> {
        trace!(
            "  gamma = [{}]; omega = [{}]",
            crate::printer::env_str(gamma),
            crate::printer::env_str(omega)
        );
        match s {
            Sequence::Empty { witness, region } => {
                let empty = Substitution::new();
                let w = witness.as_ref().unwrap_or(&empty);
                debug!("T.EMPTY with {} keys at {region}", w.0.len());
                if w.keys() != j {
                    let r = self.fail(
                        RuleName::Empty,
                        format!(
                            "the terminal witness instantiates [{}] but the judgment binds [{}]",
                            crate::printer::comma_join(&w.keys()),
                            crate::printer::comma_join(j)
                        ),
                        region,
                    );
                    return self.absorb(r);
                }
                let out_subst = Env(omega_p
                    .0
                    .iter()
                    .map(|(k, f)| (k.clone(), subst_formula_multi(f, &w.0)))
                    .collect());
                let delta = omega.restrict(&omega_p.keys());
                if !out_subst.env_equals(&delta) {
                    let r = self.fail(
                        RuleName::Empty,
                        format!(
                            "the final environment is [{}] but [{}] was promised",
                            crate::printer::env_str(&delta),
                            crate::printer::env_str(&out_subst)
                        ),
                        region,
                    );
                    return self.absorb(r);
                }
                Ok(())
            }
            Sequence::Seq(c, rest) => {
                let omega2 = match self.command(gamma, omega, c, j, omega_p) {
                    Ok(o) => o,
                    Err(ch) => {
                        self.absorb(ch)?;
                        optimistic_post(omega, c)
                    }
                };
                self.sequence(gamma, &omega2, rest, j, omega_p)
            }
            Sequence::Cst { name, value, rest } => {
                debug!("T.CST {name}");
                let typ = match &value.anno {
                    Some(t) => t.clone(),
                    None => {
                        let r = self.fail(
                            RuleName::Cst,
                            format!("constant {name} carries no type annotation"),
                            &value.region,
                        );
                        self.absorb(r)?;
                        Formula::top()
                    }
                };
                let r = self.framed(
                    RuleName::Cst,
                    format!("in the definition of {name}"),
                    &value.region,
                    |ck| ck.exp(gamma, omega, value, &typ),
                );
                if let Err(ch) = r {
                    self.absorb(ch)?;
                }
                let gamma2 = gamma.update(name.clone(), typ);
                self.sequence(&gamma2, omega, rest, j, omega_p)
            }
            Sequence::Var { name, value, rest } => {
                debug!("T.VAR {name}");
                let typ = match &value.anno {
                    Some(t) => t.clone(),
                    None => {
                        let r = self.fail(
                            RuleName::Var,
                            format!("variable {name} carries no type annotation"),
                            &value.region,
                        );
                        self.absorb(r)?;
                        Formula::top()
                    }
                };
                let r = self.framed(
                    RuleName::Var,
                    format!("in the definition of {name}"),
                    &value.region,
                    |ck| ck.exp(gamma, omega, value, &typ),
                );
                if let Err(ch) = r {
                    self.absorb(ch)?;
                }
                let omega2 = omega.update(name.clone(), typ);
                self.sequence(gamma, &omega2, rest, j, omega_p)
            }
            Sequence::Subst(ss) => {
                debug!("T.SUBST-II at {}", ss.hole);
                let just_t = anno_or(&ss.just);
                let Formula::Equal(n, m) = &just_t else {
                    let r = self.fail_types(
                        RuleName::SubstII,
                        "the justification of a rewriting node proves an equality",
                        &ss.just.region,
                        Formula::top(),
                        just_t.clone(),
                    );
                    return self.absorb(r);
                };
                if let Err(ch) = self.exp(gamma, omega, &ss.just, &just_t) {
                    self.absorb(ch)?;
                }
                let delta_n = env_subst(&ss.context, &ss.hole, n);
                let delta_m = env_subst(&ss.context, &ss.hole, m);
                if !delta_m.env_equals(omega_p) {
                    let r = self.fail(
                        RuleName::SubstII,
                        format!(
                            "rewriting yields [{}] but [{}] was promised",
                            crate::printer::env_str(&delta_m),
                            crate::printer::env_str(omega_p)
                        ),
                        &ss.just.region,
                    );
                    self.absorb(r)?;
                }
                self.framed(
                    RuleName::SubstII,
                    "in the rewritten tail",
                    &ss.just.region,
                    |ck| ck.sequence(gamma, omega, &ss.body, j, &delta_n),
                )
            }
        }
    }

    // -- commands ---------------------------------------------------------

    /// Check one command; returns the environment its tail runs in.
    fn command(
        &mut self,
        gamma: &Env,
        omega: &Env,
        c: &Command,
        j: &[Ident],
        omega_p: &Env,
    ) -> Result<Env, Chain> {
        let reg = &c.region;
        trace!(
            "  gamma = [{}]; omega = [{}]",
            crate::printer::env_str(gamma),
            crate::printer::env_str(omega)
        );
        match &c.kind {
            CommandKind::Block { body, spec } => {
                debug!("T.BLOCK at {reg}");
                let Some((inside, outside)) = omega.split(&spec.env.keys()) else {
                    return Err(self.fail(
                        RuleName::Block,
                        "the block annotates variables that are not in scope",
                        reg,
                    ));
                };
                self.eigen(RuleName::Block, &spec.exist, gamma, omega, j, omega_p, reg)?;
                self.framed(RuleName::Block, "in this block", reg, |ck| {
                    ck.sequence(gamma, &inside, body, &spec.exist, &spec.env)
                })?;
                Ok(outside.union(&spec.env))
            }
            CommandKind::For { counter, lid, bound, body, spec } => {
                debug!("T.FOR {counter} at {reg}");
                if !spec.exist.is_empty() {
                    return Err(self.fail(
                        RuleName::For,
                        "a loop annotation binds no existentials",
                        reg,
                    ));
                }
                let bound_t = anno_or(bound);
                let Formula::Nat(n) = &bound_t else {
                    return Err(self.fail_types(
                        RuleName::For,
                        "the loop bound is a natural number",
                        &bound.region,
                        Formula::Nat(Term::var("n")),
                        bound_t.clone(),
                    ));
                };
                self.exp(gamma, omega, bound, &bound_t)?;
                let sigma = &spec.env;
                let Some((inside, outside)) = omega.split(&sigma.keys()) else {
                    return Err(self.fail(
                        RuleName::For,
                        "the loop annotates variables that are not in scope",
                        reg,
                    ));
                };
                let sigma_0 = env_subst(sigma, lid, &Term::Zero);
                if !inside.env_equals(&sigma_0) {
                    return Err(self.fail(
                        RuleName::For,
                        format!(
                            "entering the loop the state is [{}] but the invariant at 0 is [{}]",
                            crate::printer::env_str(&inside),
                            crate::printer::env_str(&sigma_0)
                        ),
                        reg,
                    ));
                }
                if env_free_vars(gamma).contains(lid) {
                    return Err(self.fail(
                        RuleName::For,
                        format!("the logical index {lid} already occurs in the context"),
                        reg,
                    ));
                }
                let gamma2 = gamma.update(counter.clone(), Formula::Nat(Term::Var(lid.clone())));
                let sigma_s = env_subst(sigma, lid, &Term::Succ(Box::new(Term::Var(lid.clone()))));
                self.framed(RuleName::For, "in this loop body", reg, |ck| {
                    ck.sequence(&gamma2, sigma, body, &[], &sigma_s)
                })?;
                Ok(outside.union(&env_subst(sigma, lid, n)))
            }
            CommandKind::Inc { var, anno } | CommandKind::Dec { var, anno } => {
                let inc = matches!(c.kind, CommandKind::Inc { .. });
                let rule = if inc { RuleName::Inc } else { RuleName::Dec };
                debug!("{} {var} at {reg}", if inc { "T.INC" } else { "T.DEC" });
                let Some(cur) = omega.get(var) else {
                    return Err(self.fail(rule, format!("{var} is not in scope"), reg));
                };
                let Formula::Nat(t) = cur else {
                    return Err(self.fail_types(
                        rule,
                        format!("{var} is not a natural number"),
                        reg,
                        Formula::Nat(Term::var("n")),
                        cur.clone(),
                    ));
                };
                match anno {
                    Some(a) if *a == *cur => {}
                    Some(a) => {
                        return Err(self.fail_types(
                            rule,
                            format!("the annotation does not match the current type of {var}"),
                            reg,
                            cur.clone(),
                            a.clone(),
                        ));
                    }
                    None => {
                        return Err(self.fail(
                            rule,
                            format!("the update of {var} carries no type annotation"),
                            reg,
                        ));
                    }
                }
                let t2 = if inc {
                    Term::Succ(Box::new(t.clone()))
                } else {
                    Term::Pred(Box::new(t.clone()))
                };
                Ok(omega.update(var.clone(), Formula::Nat(t2)))
            }
            CommandKind::Assign { target, value } => {
                debug!("T.ASSIGN {target} at {reg}");
                if omega.get(target).is_none() {
                    return Err(self.fail(
                        RuleName::Assign,
                        format!("assignment to {target}, which is not a declared variable"),
                        reg,
                    ));
                }
                let Some(typ) = value.anno.clone() else {
                    return Err(self.fail(
                        RuleName::Assign,
                        format!("the value assigned to {target} carries no type annotation"),
                        &value.region,
                    ));
                };
                self.exp(gamma, omega, value, &typ)?;
                Ok(omega.update(target.clone(), typ))
            }
            CommandKind::Call { callee, args, outs, witness } => {
                debug!("T.CALL at {reg}");
                let ct = anno_or(callee);
                let Formula::Proc { in_vars, in_types, out_vars, out_types } = &ct else {
                    return Err(self.fail_types(
                        RuleName::Call,
                        "the call target is not a procedure",
                        &callee.region,
                        Formula::Proc {
                            in_vars: vec![],
                            in_types: vec![],
                            out_vars: vec![],
                            out_types: vec![],
                        },
                        ct.clone(),
                    ));
                };
                self.exp(gamma, omega, callee, &ct)?;
                let empty = Substitution::new();
                let w = witness.as_ref().unwrap_or(&empty);
                if w.keys() != *in_vars {
                    return Err(self.fail(
                        RuleName::Call,
                        format!(
                            "the witness instantiates [{}] but the procedure binds [{}]",
                            crate::printer::comma_join(&w.keys()),
                            crate::printer::comma_join(in_vars)
                        ),
                        reg,
                    ));
                }
                if args.len() != in_types.len() {
                    return Err(self.fail(
                        RuleName::Call,
                        format!(
                            "the procedure takes {} arguments, {} were given",
                            in_types.len(),
                            args.len()
                        ),
                        reg,
                    ));
                }
                if outs.len() != out_types.len() {
                    return Err(self.fail(
                        RuleName::Call,
                        format!(
                            "the procedure returns {} results, {} variables receive them",
                            out_types.len(),
                            outs.len()
                        ),
                        reg,
                    ));
                }
                for (k, (arg, want)) in args.iter().zip(in_types).enumerate() {
                    let want = subst_formula_multi(want, &w.0);
                    let got = anno_or(arg);
                    if !alpha_equal(&got, &want) {
                        return Err(self.fail_types(
                            RuleName::Call,
                            format!("argument {} does not have the instantiated parameter type", k + 1),
                            &arg.region,
                            want,
                            got,
                        ));
                    }
                    self.exp(gamma, omega, arg, &got)?;
                }
                let mut omega2 = omega.clone();
                for (k, (out, want)) in outs.iter().zip(out_types).enumerate() {
                    let want = subst_formula_multi(want, &w.0);
                    match &out.anno {
                        Some(got) if *got == want => {}
                        Some(got) => {
                            return Err(self.fail_types(
                                RuleName::Call,
                                format!("result {} is not annotated with the instantiated return type", k + 1),
                                reg,
                                want,
                                got.clone(),
                            ));
                        }
                        None => {
                            return Err(self.fail(
                                RuleName::Call,
                                format!("result variable {} carries no type annotation", out.name),
                                reg,
                            ));
                        }
                    }
                    omega2 = omega2.update(out.name.clone(), want);
                }
                self.eigen(RuleName::Call, out_vars, gamma, omega, j, omega_p, reg)?;
                Ok(omega2)
            }
            CommandKind::Label { name, body, spec } => {
                debug!("T.LABEL {name} at {reg}");
                let typ = Formula::Proc {
                    in_vars: spec.exist.clone(),
                    in_types: spec.env.img().cloned().collect(),
                    out_vars: Vec::new(),
                    out_types: vec![Formula::Bot],
                };
                let Some((inside, outside)) = omega.split(&spec.env.keys()) else {
                    return Err(self.fail(
                        RuleName::Label,
                        "the label annotates variables that are not in scope",
                        reg,
                    ));
                };
                self.eigen(RuleName::Label, &spec.exist, gamma, omega, j, omega_p, reg)?;
                let gamma2 = gamma.update(name.clone(), typ);
                self.framed(RuleName::Label, format!("under the label {name}"), reg, |ck| {
                    ck.sequence(&gamma2, &inside, body, &spec.exist, &spec.env)
                })?;
                Ok(outside.union(&spec.env))
            }
            CommandKind::Jump { target, args, env, witness } => {
                debug!("T.JUMP at {reg}");
                let tt = anno_or(target);
                let cont_shape = matches!(
                    &tt,
                    Formula::Proc { out_vars, out_types, .. }
                        if out_vars.is_empty() && *out_types == [Formula::Bot]
                );
                if !cont_shape {
                    return Err(self.fail_types(
                        RuleName::Jump,
                        "the jump target is not a continuation",
                        &target.region,
                        Formula::neg(Formula::top()),
                        tt.clone(),
                    ));
                }
                let Formula::Proc { in_vars, in_types, .. } = &tt else { unreachable!() };
                self.exp(gamma, omega, target, &tt)?;
                let empty = Substitution::new();
                let w = witness.as_ref().unwrap_or(&empty);
                if w.keys() != *in_vars {
                    return Err(self.fail(
                        RuleName::Jump,
                        format!(
                            "the witness instantiates [{}] but the continuation binds [{}]",
                            crate::printer::comma_join(&w.keys()),
                            crate::printer::comma_join(in_vars)
                        ),
                        reg,
                    ));
                }
                if args.len() != in_types.len() {
                    return Err(self.fail(
                        RuleName::Jump,
                        format!(
                            "the continuation takes {} arguments, {} were given",
                            in_types.len(),
                            args.len()
                        ),
                        reg,
                    ));
                }
                for (k, (arg, want)) in args.iter().zip(in_types).enumerate() {
                    let want = subst_formula_multi(want, &w.0);
                    let got = anno_or(arg);
                    if !alpha_equal(&got, &want) {
                        return Err(self.fail_types(
                            RuleName::Jump,
                            format!("argument {} does not have the instantiated parameter type", k + 1),
                            &arg.region,
                            want,
                            got,
                        ));
                    }
                    self.exp(gamma, omega, arg, &got)?;
                }
                let mut omega2 = omega.clone();
                for (k, f) in &env.0 {
                    omega2 = omega2.update(k.clone(), f.clone());
                }
                Ok(omega2)
            }
        }
    }

    /// Existential freshness: each binder must be new to the context and
    /// the environment, and may only persist if the enclosing judgment
    /// re-binds it.
    #[allow(clippy::too_many_arguments)]
    fn eigen(
        &self,
        rule: RuleName,
        ks: &[Ident],
        gamma: &Env,
        omega: &Env,
        j: &[Ident],
        omega_p: &Env,
        reg: &Region,
    ) -> Result<(), Chain> {
        let in_gamma = env_free_vars(gamma);
        let in_omega = env_free_vars(omega);
        let in_out = env_free_vars(omega_p);
        for k in ks {
            if in_gamma.contains(k) {
                return Err(self.fail(
                    rule,
                    format!("the existential {k} already occurs in the constant context"),
                    reg,
                ));
            }
            if in_omega.contains(k) {
                return Err(self.fail(
                    rule,
                    format!("the existential {k} already occurs in the current environment"),
                    reg,
                ));
            }
            if !j.contains(k) && in_out.contains(k) {
                return Err(self.fail(
                    rule,
                    format!("the existential {k} escapes into the promised final environment"),
                    reg,
                ));
            }
        }
        Ok(())
    }

    // -- expressions ------------------------------------------------------

    fn exp(
        &mut self,
        gamma: &Env,
        omega: &Env,
        e: &Expr,
        expected: &Formula,
    ) -> Result<(), Chain> {
        let reg = &e.region;
        let got = anno_or(e);
        if got != *expected {
            return Err(self.fail_types(
                RuleName::Env,
                "the expression annotation does not match the required type",
                reg,
                expected.clone(),
                got,
            ));
        }
        match &e.kind {
            ExprKind::Id(id) => {
                debug!("T.ENV {id}");
                if gamma.get(id) == Some(expected) || omega.get(id) == Some(expected) {
                    return Ok(());
                }
                match omega.get(id).or_else(|| gamma.get(id)) {
                    Some(t) => Err(self.fail_types(
                        RuleName::Env,
                        format!("{id} does not have the required type here"),
                        reg,
                        expected.clone(),
                        t.clone(),
                    )),
                    None => Err(self.fail(RuleName::Env, format!("{id} is not in scope"), reg)),
                }
            }
            ExprKind::Num(q) => {
                debug!("T.NUM {q}");
                let want = Formula::Nat(mk_nat(q));
                if *expected == want {
                    Ok(())
                } else {
                    Err(self.fail_types(
                        RuleName::Num,
                        format!("the numeral {q} has the type {want}"),
                        reg,
                        expected.clone(),
                        want,
                    ))
                }
            }
            ExprKind::Star { ob } => {
                debug!("T.STAR");
                let Formula::Equal(l, r) = expected else {
                    return Err(self.fail_types(
                        RuleName::Star,
                        "an assumed fact must be an equality",
                        reg,
                        Formula::top(),
                        expected.clone(),
                    ));
                };
                if let Some(n) = ob {
                    match self.obs.iter().find(|ob| ob.id == *n) {
                        Some(ob) if ob.lhs == *l && ob.rhs == *r => {}
                        Some(ob) => {
                            return Err(self.fail_types(
                                RuleName::Star,
                                format!("obligation #{n} proves a different equality"),
                                reg,
                                Formula::Equal(ob.lhs.clone(), ob.rhs.clone()),
                                expected.clone(),
                            ));
                        }
                        None => {
                            return Err(self.fail(
                                RuleName::Star,
                                format!("obligation #{n} is not in the table"),
                                reg,
                            ));
                        }
                    }
                }
                Ok(())
            }
            ExprKind::Lemma { hyps, concl } => {
                debug!("Lemma");
                if concl != expected {
                    return Err(self.fail_types(
                        RuleName::Lemma,
                        "the lemma does not conclude the required type",
                        reg,
                        expected.clone(),
                        concl.clone(),
                    ));
                }
                for h in hyps {
                    let available =
                        gamma.img().any(|f| f == h) || omega.img().any(|f| f == h);
                    if !available {
                        return Err(self.fail(
                            RuleName::Lemma,
                            format!("the hypothesis {h} is not available in the context"),
                            reg,
                        ));
                    }
                }
                Ok(())
            }
            ExprKind::ProcVal(pv) => {
                debug!("T.PROC at {reg}");
                let typ = pv.formula();
                if *expected != typ {
                    return Err(self.fail_types(
                        RuleName::Proc,
                        "the procedure value does not have the required type",
                        reg,
                        expected.clone(),
                        typ,
                    ));
                }
                let in_gamma = env_free_vars(gamma);
                for i in &pv.in_vars {
                    if in_gamma.contains(i) {
                        return Err(self.fail(
                            RuleName::Proc,
                            format!("the parameter index {i} already occurs in the constant context"),
                            reg,
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
                self.framed(RuleName::Proc, "in this procedure body", reg, |ck| {
                    ck.sequence(&gamma2, &omega0, &pv.body, &pv.out_vars, &rets)
                })
            }
            ExprKind::Coerce(ce) => {
                debug!("T.SUBST-I at {reg}");
                let Some(pr) = &ce.proof else {
                    return Err(self.fail(
                        RuleName::SubstI,
                        "the coercion carries no justification",
                        reg,
                    ));
                };
                let just_t = anno_or(&pr.just);
                let Formula::Equal(n, m) = &just_t else {
                    return Err(self.fail_types(
                        RuleName::SubstI,
                        "the justification of a coercion proves an equality",
                        &pr.just.region,
                        Formula::top(),
                        just_t.clone(),
                    ));
                };
                self.exp(gamma, omega, &pr.just, &just_t)?;
                let at_n = subst_formula(&pr.context, &pr.hole, n);
                let at_m = subst_formula(&pr.context, &pr.hole, m);
                self.exp(gamma, omega, &ce.inner, &at_n)?;
                if *expected != at_m {
                    return Err(self.fail_types(
                        RuleName::SubstI,
                        "the coercion does not rewrite to the required type",
                        reg,
                        expected.clone(),
                        at_m,
                    ));
                }
                Ok(())
            }
        }
    }
}

fn env_subst(env: &Env, v: &Ident, t: &Term) -> Env {
    Env(env.0.iter().map(|(k, f)| (k.clone(), subst_formula(f, v, t))).collect())
}

/// The environment a failed statement claims to leave behind, read off
/// its annotations (used to keep checking in collect mode).
fn optimistic_post(omega: &Env, c: &Command) -> Env {
    match &c.kind {
        CommandKind::Block { spec, .. } | CommandKind::Label { spec, .. } => {
            overlay(omega, &spec.env)
        }
        CommandKind::For { lid, bound, spec, .. } => {
            let closed = match anno_or(bound) {
                Formula::Nat(n) => env_subst(&spec.env, lid, &n),
                _ => spec.env.clone(),
            };
            overlay(omega, &closed)
        }
        CommandKind::Inc { var, anno } | CommandKind::Dec { var, anno } => match anno {
            Some(Formula::Nat(t)) => {
                let inc = matches!(c.kind, CommandKind::Inc { .. });
                let t2 = if inc {
                    Term::Succ(Box::new(t.clone()))
                } else {
                    Term::Pred(Box::new(t.clone()))
                };
                omega.update(var.clone(), Formula::Nat(t2))
            }
            _ => omega.clone(),
        },
        CommandKind::Assign { target, value } => {
            omega.update(target.clone(), anno_or(value))
        }
        CommandKind::Call { outs, .. } => {
            let mut o = omega.clone();
            for out in outs {
                if let Some(t) = &out.anno {
                    o = o.update(out.name.clone(), t.clone());
                }
            }
            o
        }
        CommandKind::Jump { env, .. } => overlay(omega, env),
    }
}

fn overlay(omega: &Env, over: &Env) -> Env {
    let mut o = omega.clone();
    for (k, f) in &over.0 {
        o = o.update(k.clone(), f.clone());
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_proof;
    use crate::testdata::ADD_PROOF;

    fn check_text(src: &str) -> Result<(), Chain> {
        let (prog, obs) = parse_proof(src, "t.proof").expect("parses");
        check_program(&prog, &obs)
    }

    #[test]
    fn the_addition_derivation_checks() {
        if let Err(ch) = check_text(ADD_PROOF) {
            panic!("{}", ch.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"));
        }
    }

    #[test]
    fn labels_and_jumps_check() {
        let src = r#"{
    cst d = proc(in K : ~~F; out Z : F) {
        K2: {
            jump((K : ~~F), (K2 : ~F))Z:F;
        }Z:F;
    };
};
"#;
        check_text(src).expect("derivation is valid");
    }

    #[test]
    fn blocks_discharge_existentials_with_witnesses() {
        let src = r#"{
    var X := (* : (0 = 0));
    {
        X := (2 : nat(2));
        with {u := 2};
    }{u}X:nat(u);
    with {};
};
"#;
        check_text(src).expect("derivation is valid");
    }

    #[test]
    fn missing_call_witness_is_rejected() {
        let src = ADD_PROOF.replace(" with {x := 3, y := 5}", "");
        let ch = check_text(&src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::Call);
        assert!(ch[0].message.contains("witness"), "{}", ch[0].message);
    }

    #[test]
    fn wrong_argument_annotation_is_rejected() {
        let src = ADD_PROOF.replace("(3 : nat(3))", "(3 : nat(4))");
        let ch = check_text(&src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::Call);
        assert!(ch[0].expected.is_some() && ch[0].actual.is_some());
    }

    #[test]
    fn wrong_loop_invariant_entry_is_rejected() {
        let src = ADD_PROOF.replace("}Z:nat((x + i));", "}Z:nat((x + s(i)));");
        let ch = check_text(&src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::For);
        assert!(ch[0].message.contains("invariant"), "{}", ch[0].message);
    }

    #[test]
    fn tampered_obligation_reference_is_rejected() {
        let src = ADD_PROOF.replace("(*#1 : (x = (x + 0)))", "(*#2 : (x = (x + 0)))");
        let ch = check_text(&src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::Star);
        assert!(ch[0].message.contains("#2"), "{}", ch[0].message);
    }

    #[test]
    fn coercion_must_rewrite_to_the_required_type() {
        // Change the declared target of the coercion without changing the
        // rewriting data: the context at m no longer matches.
        let src = ADD_PROOF.replace(": nat((x + 0)));", ": nat((x + s(0))));");
        let ch = check_text(&src).unwrap_err();
        assert!(
            ch.iter().any(|d| d.rule == RuleName::SubstI || d.rule == RuleName::Env),
            "chain: {:?}",
            ch.iter().map(|d| d.rule).collect::<Vec<_>>()
        );
    }

    #[test]
    fn assignment_needs_a_declared_variable() {
        let src = "{\n    Q := (0 : nat(0));\n};\n";
        let ch = check_text(src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::Assign);
    }

    #[test]
    fn inc_requires_a_natural() {
        let src = "{\n    var X := (* : (0 = 0));\n    inc(X : (0 = 0));\n};\n";
        let ch = check_text(src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::Inc);
    }

    #[test]
    fn numerals_have_exactly_their_tower_type() {
        let src = "{\n    var X := (2 : nat(3));\n};\n";
        let ch = check_text(src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::Num);
    }

    #[test]
    fn terminal_environment_mismatch_is_rejected() {
        let src = "{\n    var X := (0 : nat(0));\n}X:nat(1);\n";
        let ch = check_text(src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::Empty);
    }

    #[test]
    fn eigen_violation_is_rejected() {
        // The block existential u is already free in the enclosing
        // environment through Y's type.
        let src = r#"{
    var Y := (* : (u = u));
    var X := (* : (0 = 0));
    {
        X := (2 : nat(2));
        with {u := 2};
    }{u}X:nat(u);
};
"#;
        let ch = check_text(src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::Block);
        assert!(ch[0].message.contains("existential"), "{}", ch[0].message);
    }

    #[test]
    fn lemma_hypotheses_must_be_ambient() {
        let src = "{\n    cst L = (lemma(F |- (0 = 0)) : (0 = 0));\n};\n";
        let ch = check_text(src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::Lemma);
    }

    #[test]
    fn chains_carry_enclosing_contexts() {
        let src = ADD_PROOF.replace("inc(Z : nat((x + i)));", "inc(Z : nat((x + 1)));");
        let ch = check_text(&src).unwrap_err();
        assert!(ch.len() >= 3, "expected nested contexts, got {}", ch.len());
        assert_eq!(ch[0].rule, RuleName::Inc);
        assert_eq!(ch.last().unwrap().rule, RuleName::Cst);
    }

    #[test]
    fn collect_mode_reports_multiple_failures() {
        let src = "{\n    var X := (2 : nat(3));\n    var Y := (4 : nat(5));\n};\n";
        let (prog, obs) = parse_proof(src, "t.proof").unwrap();
        let fails = check_program_all(&prog, &obs);
        assert_eq!(fails.len(), 2, "{fails:?}");
    }

    #[test]
    fn rewriting_nodes_check_both_sides() {
        // Rewriting with the equality backwards must fail even when the
        // obligation table is adjusted to match the justification.
        let src = ADD_PROOF
            .replace("(*#2 : (s((x + i)) = (x + s(i))))", "(*#2 : ((x + s(i)) = s((x + i))))")
            .replace("2: |- (s((x + i)) = (x + s(i)))", "2: |- ((x + s(i)) = s((x + i)))");
        let ch = check_text(&src).unwrap_err();
        assert_eq!(ch[0].rule, RuleName::SubstII);
        assert!(ch[0].message.contains("promised"), "{}", ch[0].message);
    }
}
