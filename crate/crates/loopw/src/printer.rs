//! Renderers for every textual view of a program:
//!
//! * `Display` for terms and formulas (the one notation used everywhere);
//! * [`print_source`] — annotated imperative source;
//! * [`print_proof`] — the fully annotated derivation plus its table;
//! * [`print_erased`] — the unannotated imperative code;
//! * [`print_typ`] — the two-column view pairing erased source with the
//!   derivation, followed by the obligation table and a discharge report.

use crate::ast::{
    CallOut, Command, CommandKind, Env, Expr, ExprKind, Formula, Ident, OutSpec, ProcVal, Program,
    Sequence, Substitution, Term, numeral_value,
};
use crate::obligations::{Discharge, Obligation};
use crate::subst::subst_formula;
use std::fmt;

// ---------------------------------------------------------------------------
// Terms and formulas

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Closed successor towers render as decimal numerals.
        if let Some(q) = numeral_value(self) {
            return write!(f, "{q}");
        }
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Zero => write!(f, "0"),
            Term::Succ(t) => write!(f, "s({t})"),
            Term::Pred(t) => write!(f, "p({t})"),
            Term::Add(a, b) => write!(f, "({a} + {b})"),
            Term::Sub(a, b) => write!(f, "({a} - {b})"),
            Term::Mul(a, b) => write!(f, "({a} * {b})"),
            Term::App(h, args) => {
                write!(f, "{h}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(inner) = self.as_neg() {
            return write!(f, "~{inner}");
        }
        match self {
            Formula::Bot => write!(f, "$"),
            Formula::FVar(v) => write!(f, "{v}"),
            Formula::Nat(t) => write!(f, "nat({t})"),
            Formula::Equal(a, b) => write!(f, "({a} = {b})"),
            Formula::Proc { in_vars, in_types, out_vars, out_types } => {
                write!(f, "proc(")?;
                if !in_vars.is_empty() {
                    write!(f, "{{{}}} ", comma_join(in_vars))?;
                }
                if !in_types.is_empty() {
                    write!(f, "in {}", comma_join(in_types))?;
                }
                write!(f, "; ")?;
                if !out_vars.is_empty() {
                    write!(f, "{{{}}} ", comma_join(out_vars))?;
                }
                write!(f, "out")?;
                if !out_types.is_empty() {
                    write!(f, " {}", comma_join(out_types))?;
                }
                write!(f, ")")
            }
        }
    }
}

pub(crate) fn comma_join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// `X:T, Y:U` — environments as they appear in out-specs and on jumps.
pub fn env_str(env: &Env) -> String {
    env.0
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// `{u}X:T, Y:U` — existential binders (if any) then the environment.
pub fn outspec_str(spec: &OutSpec) -> String {
    let mut s = String::new();
    if !spec.exist.is_empty() {
        s.push('{');
        s.push_str(&comma_join(&spec.exist));
        s.push('}');
    }
    s.push_str(&env_str(&spec.env));
    s
}

fn witness_str(w: &Substitution) -> String {
    let items = w
        .0
        .iter()
        .map(|(k, t)| format!("{k} := {t}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{items}}}")
}

/// The numbered equality table shared by proof files and the typed view.
pub fn table_str(obs: &[Obligation]) -> String {
    let mut s = String::new();
    for ob in obs {
        s.push_str(&format!(
            "{}: |- {}\n",
            ob.id,
            Formula::Equal(ob.lhs.clone(), ob.rhs.clone())
        ));
    }
    s
}

// ---------------------------------------------------------------------------
// Source and proof printing (one walker, two modes)

/// Render a program in source form: source-level annotations (procedure
/// headers, out-specs, coercion targets) are kept, proof artifacts
/// (expression wrappers, witnesses, rewriting nodes) are dropped.
pub fn print_source(seq: &Sequence) -> String {
    let mut p = Pr { out: String::new(), depth: 0, proof: false };
    p.seq(seq);
    p.out
}

/// Render a fully annotated derivation and its obligation table.
pub fn print_proof(prog: &Program, obs: &[Obligation]) -> String {
    let mut p = Pr { out: String::new(), depth: 0, proof: true };
    p.push_line("{".to_string());
    p.depth = 1;
    p.seq(&prog.seq);
    p.depth = 0;
    p.push_line(format!("}}{};", outspec_str(&prog.spec)));
    if !obs.is_empty() {
        p.out.push_str(&table_str(obs));
    }
    p.out
}

struct Pr {
    out: String,
    depth: usize,
    proof: bool,
}

impl Pr {
    fn push_line(&mut self, s: String) {
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push_str(&s);
        self.out.push('\n');
    }

    fn seq(&mut self, s: &Sequence) {
        match s {
            Sequence::Empty { witness, .. } => {
                if self.proof {
                    if let Some(w) = witness {
                        if !w.0.is_empty() {
                            self.push_line(format!("with {};", witness_str(w)));
                        }
                    }
                }
            }
            Sequence::Seq(c, rest) => {
                self.cmd(c);
                self.seq(rest);
            }
            Sequence::Cst { name, value, rest } => {
                let v = self.expr(value);
                self.push_line(format!("cst {name} = {v};"));
                self.seq(rest);
            }
            Sequence::Var { name, value, rest } => {
                let v = self.expr(value);
                self.push_line(format!("var {name} := {v};"));
                self.seq(rest);
            }
            Sequence::Subst(ss) => {
                if self.proof {
                    let just = self.expr(&ss.just);
                    self.push_line(format!(
                        "subst [{}] at {} by {just} {{",
                        env_str(&ss.context),
                        ss.hole
                    ));
                    self.depth += 1;
                    self.seq(&ss.body);
                    self.depth -= 1;
                    self.push_line("}".to_string());
                } else {
                    // Source view of a derivation: splice the rewritten tail.
                    self.seq(&ss.body);
                }
            }
        }
    }

    fn cmd(&mut self, c: &Command) {
        match &c.kind {
            CommandKind::Block { body, spec } => {
                self.push_line("{".to_string());
                self.depth += 1;
                self.seq(body);
                self.depth -= 1;
                self.push_line(format!("}}{};", outspec_str(spec)));
            }
            CommandKind::For { counter, lid, bound, body, spec } => {
                let b = self.expr(bound);
                let idx = if lid == counter { String::new() } else { format!("[{lid}]") };
                self.push_line(format!("for {counter}{idx} := 0 until {b} {{"));
                self.depth += 1;
                self.seq(body);
                self.depth -= 1;
                self.push_line(format!("}}{};", outspec_str(spec)));
            }
            CommandKind::Inc { var, anno } | CommandKind::Dec { var, anno } => {
                let op = if matches!(c.kind, CommandKind::Inc { .. }) { "inc" } else { "dec" };
                match (self.proof, anno) {
                    (true, Some(t)) => self.push_line(format!("{op}({var} : {t});")),
                    _ => self.push_line(format!("{op}({var});")),
                }
            }
            CommandKind::Assign { target, value } => {
                let v = self.expr(value);
                self.push_line(format!("{target} := {v};"));
            }
            CommandKind::Call { callee, args, outs, witness } => {
                let cal = self.expr(callee);
                let args = args.iter().map(|a| self.expr(a)).collect::<Vec<_>>().join(", ");
                let outs = outs.iter().map(|o| self.call_out(o)).collect::<Vec<_>>().join(", ");
                self.push_line(format!(
                    "{cal}({args}; {outs}){};",
                    self.witness_suffix(witness)
                ));
            }
            CommandKind::Label { name, body, spec } => {
                self.push_line(format!("{name}: {{"));
                self.depth += 1;
                self.seq(body);
                self.depth -= 1;
                self.push_line(format!("}}{};", outspec_str(spec)));
            }
            CommandKind::Jump { target, args, env, witness } => {
                let mut parts = vec![self.expr(target)];
                parts.extend(args.iter().map(|a| self.expr(a)));
                self.push_line(format!(
                    "jump({}){}{};",
                    parts.join(", "),
                    env_str(env),
                    self.witness_suffix(witness)
                ));
            }
        }
    }

    fn witness_suffix(&self, w: &Option<Substitution>) -> String {
        match w {
            Some(w) if self.proof && !w.0.is_empty() => format!(" with {}", witness_str(w)),
            _ => String::new(),
        }
    }

    fn call_out(&self, o: &CallOut) -> String {
        match (&o.anno, self.proof) {
            (Some(t), true) => format!("{} : {t}", o.name),
            _ => o.name.to_string(),
        }
    }

    /// Render an expression at the current indentation (procedure values
    /// span multiple lines).
    fn expr(&mut self, e: &Expr) -> String {
        match &e.kind {
            ExprKind::Id(id) => self.wrap(id.to_string(), e),
            ExprKind::Num(q) => self.wrap(q.to_string(), e),
            ExprKind::Star { ob } => {
                let core = match (self.proof, ob) {
                    (true, Some(n)) => format!("*#{n}"),
                    _ => "*".to_string(),
                };
                self.wrap(core, e)
            }
            ExprKind::Lemma { hyps, concl } => {
                let core = format!("lemma({} |- {concl})", comma_join(hyps));
                self.wrap(core, e)
            }
            ExprKind::ProcVal(pv) => self.proc_val(pv),
            ExprKind::Coerce(ce) => {
                let inner = self.expr(&ce.inner);
                let target = e.anno.as_ref().cloned().unwrap_or_else(Formula::top);
                match (&ce.proof, self.proof) {
                    (Some(pr), true) => {
                        let just = self.expr(&pr.just);
                        format!(
                            "({inner} :> {{{} / {}}} by {just} : {target})",
                            pr.hole, pr.context
                        )
                    }
                    _ => format!("{inner} :> {target}"),
                }
            }
        }
    }

    /// In proof mode every atom carries its formula: `(x : T)`.
    fn wrap(&self, core: String, e: &Expr) -> String {
        if self.proof {
            let t = e.anno.as_ref().cloned().unwrap_or_else(Formula::top);
            format!("({core} : {t})")
        } else {
            core
        }
    }

    fn proc_val(&mut self, pv: &ProcVal) -> String {
        let named = |items: &[(Ident, Formula)]| {
            items
                .iter()
                .map(|(n, f)| format!("{n} : {f}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut head = String::from("proc(");
        if !pv.in_vars.is_empty() {
            head.push_str(&format!("{{{}}} ", comma_join(&pv.in_vars)));
        }
        if !pv.params.is_empty() {
            head.push_str(&format!("in {}", named(&pv.params)));
        }
        head.push_str("; ");
        if !pv.out_vars.is_empty() {
            head.push_str(&format!("{{{}}} ", comma_join(&pv.out_vars)));
        }
        head.push_str("out");
        if !pv.rets.is_empty() {
            head.push_str(&format!(" {}", named(&pv.rets)));
        }
        head.push(')');

        let mut body = Pr { out: String::new(), depth: self.depth + 1, proof: self.proof };
        body.seq(&pv.body);
        let indent = "    ".repeat(self.depth);
        format!("{head} {{\n{}{indent}}}", body.out)
    }
}

// ---------------------------------------------------------------------------
// Erased and two-column views

/// The unannotated imperative code.
pub fn print_erased(seq: &Sequence) -> String {
    let mut w = TypWalker { rows: Vec::new(), depth: 0, form: false };
    w.seq(seq);
    let mut out = String::new();
    for row in &w.rows {
        out.push_str(&row.left);
        out.push('\n');
    }
    out
}

/// The two-column certification view: erased source on the left, the
/// derivation on the right, then the obligation table and the discharge
/// report for it.  With `form` set, the right column renders judgment
/// types in the logical (∀/∃/∧/⇒) notation instead of the imperative one.
pub fn print_typ(prog: &Program, obs: &[Obligation], discharges: &[Discharge], form: bool) -> String {
    let mut w = TypWalker { rows: Vec::new(), depth: 0, form };
    let pending = w.seq(&prog.seq);
    if !pending.is_empty() {
        if let Some(last) = w.rows.last_mut() {
            last.right.push_str(&by_suffix(&pending));
        }
    }
    let width = w.rows.iter().map(|r| r.left.len()).max().unwrap_or(0);
    let mut out = String::new();
    for row in &w.rows {
        if row.right.is_empty() {
            out.push_str(&row.left);
        } else {
            out.push_str(&format!("{:width$}   {}", row.left, row.right, width = width));
        }
        out.push('\n');
    }
    if !obs.is_empty() {
        out.push('\n');
        out.push_str(&table_str(obs));
        out.push('\n');
        let report = obs
            .iter()
            .zip(discharges)
            .map(|(ob, d)| {
                let verdict = match d {
                    Discharge::Proven => "proven",
                    Discharge::Unknown => "unknown",
                };
                format!("#{} {verdict}", ob.id)
            })
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!("discharge: {report}\n"));
    }
    out
}

struct TypRow {
    left: String,
    right: String,
}

struct TypWalker {
    rows: Vec<TypRow>,
    depth: usize,
    form: bool,
}

fn by_suffix(refs: &[u32]) -> String {
    if refs.is_empty() {
        return String::new();
    }
    let mut seen: Vec<u32> = Vec::new();
    for r in refs {
        if !seen.contains(r) {
            seen.push(*r);
        }
    }
    let body = seen.iter().map(|n| format!("#{n}")).collect::<Vec<_>>().join(" ");
    format!("    by {body}")
}

/// Obligation references appearing in an expression, not descending into
/// procedure-value bodies (those own their references).
fn shallow_refs(e: &Expr, out: &mut Vec<u32>) {
    match &e.kind {
        ExprKind::Star { ob: Some(n) } => out.push(*n),
        ExprKind::Star { ob: None }
        | ExprKind::Id(_)
        | ExprKind::Num(_)
        | ExprKind::Lemma { .. }
        | ExprKind::ProcVal(_) => {}
        ExprKind::Coerce(ce) => {
            shallow_refs(&ce.inner, out);
            if let Some(pr) = &ce.proof {
                shallow_refs(&pr.just, out);
            }
        }
    }
}

/// Peel coercions to find a procedure value, if the expression is one.
fn as_proc_val(e: &Expr) -> Option<&ProcVal> {
    match &e.kind {
        ExprKind::ProcVal(pv) => Some(pv),
        ExprKind::Coerce(ce) => as_proc_val(&ce.inner),
        _ => None,
    }
}

fn erased_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Id(id) => id.to_string(),
        ExprKind::Num(q) => q.to_string(),
        ExprKind::Star { .. } | ExprKind::Lemma { .. } => "*".to_string(),
        ExprKind::Coerce(ce) => erased_expr(&ce.inner),
        // Only reachable for procedure values in argument position, which
        // the surface language does not produce; keep it one-line.
        ExprKind::ProcVal(pv) => format!("{} {{ ... }}", erased_head(pv)),
    }
}

fn erased_head(pv: &ProcVal) -> String {
    let names = |items: &[(Ident, Formula)]| {
        items.iter().map(|(n, _)| n.to_string()).collect::<Vec<_>>().join(", ")
    };
    let ins = if pv.params.is_empty() {
        String::new()
    } else {
        format!("in {}", names(&pv.params))
    };
    format!("proc({ins}; out {})", names(&pv.rets))
}

fn domain_str(env: &Env) -> String {
    env.0.iter().map(|(k, _)| k.to_string()).collect::<Vec<_>>().join(", ")
}

fn anno_of(e: &Expr) -> Formula {
    e.anno.clone().unwrap_or_else(Formula::top)
}

impl TypWalker {
    /// Render a judgment type in the selected view.
    fn fm(&self, f: &Formula) -> String {
        if self.form {
            crate::functional::logical_str(f)
        } else {
            f.to_string()
        }
    }

    fn env_s(&self, env: &Env) -> String {
        env.0
            .iter()
            .map(|(k, f)| format!("{k}:{}", self.fm(f)))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn push(&mut self, depth: usize, left: String, right: String) {
        let mut l = "    ".repeat(depth);
        l.push_str(&left);
        let mut r = String::new();
        if !right.is_empty() {
            r = "|   ".repeat(depth);
            r.push_str(&right);
        }
        self.rows.push(TypRow { left: l, right: r });
    }

    /// Walk a sequence, emitting rows; returns the obligation references
    /// of trailing rewriting nodes so the caller can attribute them to
    /// its closing row.
    fn seq(&mut self, s: &Sequence) -> Vec<u32> {
        match s {
            Sequence::Empty { .. } => Vec::new(),
            Sequence::Seq(c, rest) => {
                self.cmd(c);
                self.seq(rest)
            }
            Sequence::Cst { name, value, rest } => {
                self.binding(&format!("cst {name} = "), name, value, true);
                self.seq(rest)
            }
            Sequence::Var { name, value, rest } => {
                self.binding(&format!("var {name} := "), name, value, false);
                self.seq(rest)
            }
            Sequence::Subst(ss) => {
                let mut refs = Vec::new();
                shallow_refs(&ss.just, &mut refs);
                refs.extend(self.seq(&ss.body));
                refs
            }
        }
    }

    /// A `cst`/`var`/assignment row (or row group, when the value is a
    /// procedure).  `gamma` selects the constant-context bracket style.
    fn binding(&mut self, intro: &str, name: &Ident, value: &Expr, gamma: bool) {
        let depth = self.depth;
        let close = |name: &Ident, f: String| {
            if gamma {
                format!("({name}:{f})")
            } else {
                format!("[{name}:{f}]")
            }
        };
        if let Some(pv) = as_proc_val(value) {
            let params = pv
                .params
                .iter()
                .map(|(n, f)| format!("{n}:{}", self.fm(f)))
                .collect::<Vec<_>>()
                .join(", ");
            let entry = pv
                .rets
                .iter()
                .map(|(n, _)| format!("{n}:{}", self.fm(&Formula::top())))
                .collect::<Vec<_>>()
                .join(", ");
            self.push(depth, format!("{intro}{} {{", erased_head(pv)), format!("-({params})[{entry}]"));
            self.depth += 1;
            let trailing = self.seq(&pv.body);
            self.depth -= 1;
            let mut refs = Vec::new();
            shallow_refs(value, &mut refs);
            refs.extend(trailing);
            self.push(
                depth,
                "};".to_string(),
                format!("{}{}", close(name, self.fm(&anno_of(value))), by_suffix(&refs)),
            );
        } else {
            let mut refs = Vec::new();
            shallow_refs(value, &mut refs);
            self.push(
                depth,
                format!("{intro}{};", erased_expr(value)),
                format!("{}{}", close(name, self.fm(&anno_of(value))), by_suffix(&refs)),
            );
        }
    }

    fn cmd(&mut self, c: &Command) {
        let depth = self.depth;
        match &c.kind {
            CommandKind::Block { body, spec } => {
                self.push(depth, "{".to_string(), "-".to_string());
                self.depth += 1;
                let trailing = self.seq(body);
                self.depth -= 1;
                self.push(
                    depth,
                    format!("}}{};", domain_str(&spec.env)),
                    format!("[{}]{}", self.env_s(&spec.env), by_suffix(&trailing)),
                );
            }
            CommandKind::For { counter, lid, bound, body, spec } => {
                let mut bound_refs = Vec::new();
                shallow_refs(bound, &mut bound_refs);
                self.push(
                    depth,
                    format!("for {counter} := 0 until {} {{", erased_expr(bound)),
                    format!(
                        "-({counter}:nat({lid}))[{}]{}",
                        self.env_s(&spec.env),
                        by_suffix(&bound_refs)
                    ),
                );
                self.depth += 1;
                let trailing = self.seq(body);
                self.depth -= 1;
                // The closing invariant instantiates the logical index at
                // the loop bound.
                let n = match anno_of(bound) {
                    Formula::Nat(n) => n,
                    _ => Term::Var(lid.clone()),
                };
                let closed = Env(spec
                    .env
                    .0
                    .iter()
                    .map(|(k, f)| (k.clone(), subst_formula(f, lid, &n)))
                    .collect());
                self.push(
                    depth,
                    format!("}}{};", domain_str(&spec.env)),
                    format!("[{}]{}", self.env_s(&closed), by_suffix(&trailing)),
                );
            }
            CommandKind::Inc { var, anno } | CommandKind::Dec { var, anno } => {
                let inc = matches!(c.kind, CommandKind::Inc { .. });
                let op = if inc { "inc" } else { "dec" };
                let post = match anno {
                    Some(Formula::Nat(t)) => {
                        let t = t.clone();
                        Formula::Nat(if inc { Term::Succ(Box::new(t)) } else { Term::Pred(Box::new(t)) })
                    }
                    _ => Formula::top(),
                };
                self.push(depth, format!("{op}({var});"), format!("[{var}:{}]", self.fm(&post)));
            }
            CommandKind::Assign { target, value } => {
                self.binding(&format!("{target} := "), target, value, false);
            }
            CommandKind::Call { callee, args, outs, .. } => {
                let mut refs = Vec::new();
                shallow_refs(callee, &mut refs);
                args.iter().for_each(|a| shallow_refs(a, &mut refs));
                let arg_str = args.iter().map(erased_expr).collect::<Vec<_>>().join(", ");
                let out_names =
                    outs.iter().map(|o| o.name.to_string()).collect::<Vec<_>>().join(", ");
                let out_env = outs
                    .iter()
                    .map(|o| {
                        format!("{}:{}", o.name, self.fm(&o.anno.clone().unwrap_or_else(Formula::top)))
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                self.push(
                    depth,
                    format!("{}({arg_str}; {out_names});", erased_expr(callee)),
                    format!("[{out_env}]{}", by_suffix(&refs)),
                );
            }
            CommandKind::Label { name, body, spec } => {
                let typ = Formula::Proc {
                    in_vars: spec.exist.clone(),
                    in_types: spec.env.img().cloned().collect(),
                    out_vars: Vec::new(),
                    out_types: vec![Formula::Bot],
                };
                self.push(depth, format!("{name}: {{"), format!("-({name}:{})", self.fm(&typ)));
                self.depth += 1;
                let trailing = self.seq(body);
                self.depth -= 1;
                self.push(
                    depth,
                    format!("}}{};", domain_str(&spec.env)),
                    format!("[{}]{}", self.env_s(&spec.env), by_suffix(&trailing)),
                );
            }
            CommandKind::Jump { target, args, env, .. } => {
                let mut refs = Vec::new();
                shallow_refs(target, &mut refs);
                args.iter().for_each(|a| shallow_refs(a, &mut refs));
                let mut parts = vec![erased_expr(target)];
                parts.extend(args.iter().map(erased_expr));
                self.push(
                    depth,
                    format!("jump({}){};", parts.join(", "), domain_str(env)),
                    format!("[{}]{}", self.env_s(env), by_suffix(&refs)),
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::StripRegions;
    use crate::obligations::discharge;
    use crate::parser::{parse_formula_str, parse_program, parse_proof, parse_term_str};
    use crate::testdata::{ADD_PROOF, ADD_SOURCE};

    #[test]
    fn terms_display_with_full_parenthesization() {
        let t = parse_term_str("x + y * z").unwrap();
        assert_eq!(t.to_string(), "(x + (y * z))");
        assert_eq!(parse_term_str("s(x + i)").unwrap().to_string(), "s((x + i))");
        assert_eq!(parse_term_str("a(s(i), 0)").unwrap().to_string(), "a(s(i),0)");
    }

    #[test]
    fn closed_towers_print_as_decimals() {
        assert_eq!(parse_term_str("3").unwrap().to_string(), "3");
        assert_eq!(parse_term_str("s(s(0))").unwrap().to_string(), "2");
        assert_eq!(parse_term_str("3 + 5").unwrap().to_string(), "(3 + 5)");
        assert_eq!(parse_term_str("s(x)").unwrap().to_string(), "s(x)");
    }

    #[test]
    fn formulas_display() {
        assert_eq!(parse_formula_str("(x = x + 0)").unwrap().to_string(), "(x = (x + 0))");
        assert_eq!(parse_formula_str("nat(x + y)").unwrap().to_string(), "nat((x + y))");
        assert_eq!(
            parse_formula_str("proc({x, y} in nat(x), nat(y); out nat(x + y))")
                .unwrap()
                .to_string(),
            "proc({x, y} in nat(x), nat(y); out nat((x + y)))"
        );
        assert_eq!(
            parse_formula_str("proc(; {x} out nat(x), F)").unwrap().to_string(),
            "proc(; {x} out nat(x), F)"
        );
        assert_eq!(parse_formula_str("~~F").unwrap().to_string(), "~~F");
        assert_eq!(parse_formula_str("~nat(F32(u))").unwrap().to_string(), "~nat(F32(u))");
        assert_eq!(parse_formula_str("$").unwrap().to_string(), "$");
    }

    #[test]
    fn formula_display_reparses_to_the_same_formula() {
        for src in [
            "nat((x + 0))",
            "proc({x} in nat(x); {u} out nat(u), ~nat(F32(u)))",
            "~proc({x} in nat(x); out ~F)",
            "proc(in ~nat(F32(x)); out H, ~H)",
            "(a(i,a(s(i),j)) = a(s(i),s(j)))",
        ] {
            let f = parse_formula_str(src).unwrap();
            assert_eq!(parse_formula_str(&f.to_string()).unwrap(), f, "through {src}");
        }
    }

    #[test]
    fn source_printing_roundtrips() {
        let mut seq = parse_program(ADD_SOURCE, "add.loop").unwrap();
        let printed = print_source(&seq);
        let mut back = parse_program(&printed, "rev.loop").unwrap();
        seq.strip_regions();
        back.strip_regions();
        assert_eq!(seq, back, "printed:\n{printed}");
    }

    #[test]
    fn proof_printing_roundtrips() {
        let (mut prog, obs) = parse_proof(ADD_PROOF, "add.proof").unwrap();
        let printed = print_proof(&prog, &obs);
        let (mut back, obs2) = parse_proof(&printed, "add2.proof").unwrap();
        prog.strip_regions();
        back.strip_regions();
        assert_eq!(prog, back, "printed:\n{printed}");
        assert_eq!(obs, obs2);
    }

    #[test]
    fn typ_view_matches_the_reference_layout() {
        let (prog, obs) = parse_proof(ADD_PROOF, "add.proof").unwrap();
        let dis: Vec<_> = obs.iter().map(discharge).collect();
        let typ = print_typ(&prog, &obs, &dis, false);
        let expected = "\
cst p_add = proc(in X, Y; out Z) {   -(X:nat(x), Y:nat(y))[Z:(0 = 0)]
    Z := X;                          |   [Z:nat((x + 0))]    by #1
    for i := 0 until Y {             |   -(i:nat(i))[Z:nat((x + i))]
        inc(Z);                      |   |   [Z:nat(s((x + i)))]
    }Z;                              |   [Z:nat((x + y))]    by #2
};                                   (p_add:proc({x, y} in nat(x), nat(y); out nat((x + y))))
var N := *;                          [N:(0 = 0)]
p_add(3, 5; N);                      [N:nat((3 + 5))]

1: |- (x = (x + 0))
2: |- (s((x + i)) = (x + s(i)))

discharge: #1 proven, #2 proven
";
        assert_eq!(typ, expected);
    }

    #[test]
    fn the_formula_view_renders_logical_types() {
        let (prog, obs) = parse_proof(ADD_PROOF, "add.proof").unwrap();
        let dis: Vec<_> = obs.iter().map(discharge).collect();
        let typ = print_typ(&prog, &obs, &dis, true);
        assert!(
            typ.contains("(p_add:Forall x,y.((nat(x) & nat(y)) => (nat((x + y)))))"),
            "{typ}"
        );
        assert!(typ.contains("[N:0 = 0]"), "{typ}");
        assert!(typ.contains("[N:nat((3 + 5))]"), "{typ}");
    }

    #[test]
    fn erased_add_matches_the_reference() {
        let (prog, _) = parse_proof(ADD_PROOF, "add.proof").unwrap();
        let erased = print_erased(&prog.seq);
        let expected = "\
cst p_add = proc(in X, Y; out Z) {
    Z := X;
    for i := 0 until Y {
        inc(Z);
    }Z;
};
var N := *;
p_add(3, 5; N);
";
        assert_eq!(erased, expected);
    }

    #[test]
    fn source_view_of_a_proof_drops_proof_artifacts() {
        let (prog, _) = parse_proof(ADD_PROOF, "add.proof").unwrap();
        let src = print_source(&prog.seq);
        assert!(!src.contains("with"), "witnesses must vanish:\n{src}");
        assert!(!src.contains("subst"), "rewriting nodes must vanish:\n{src}");
        assert!(!src.contains("#"), "obligation references must vanish:\n{src}");
        assert!(src.contains(":>"), "source coercions survive:\n{src}");
        // And the result is valid source again.
        parse_program(&src, "rev.loop").unwrap();
    }

    #[test]
    fn labels_and_jumps_print_in_both_modes() {
        let src = "cst d = proc(in K : ~~F; out Z : F) {\n    K2: {\n        jump(K, K2)Z:F;\n    }Z:F;\n};\n";
        let mut seq = parse_program(src, "neg.loop").unwrap();
        let printed = print_source(&seq);
        let mut back = parse_program(&printed, "rev.loop").unwrap();
        seq.strip_regions();
        back.strip_regions();
        assert_eq!(seq, back, "printed:\n{printed}");
    }
}
