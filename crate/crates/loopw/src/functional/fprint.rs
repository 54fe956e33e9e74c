//! Textual rendering of the functional core, in an ML-flavoured concrete
//! syntax.  With `erase = false` every variable occurrence, binding and
//! proof step carries its formula in a comment; with `erase = true` the
//! output is the bare executable skeleton.  Both end with the obligation
//! table as trailing comments.
//!
//! Functional identifiers render their freshness stamps with an
//! underscore (`var_1`), keeping them distinct from the imperative
//! spelling (`var'1`) while staying valid ML identifiers.

use super::{FExp, FFormula, FKind};
use crate::ast::{numeral_value, Ident, Substitution, Term};
use crate::obligations::Obligation;

/// Render a translated term, annotated or erased, with its table.
pub fn fprint(t: &FExp, erase: bool, obs: &[Obligation]) -> String {
    let p = Fp { erase };
    let mut out = p.exp(t, 0);
    out.push('\n');
    if !obs.is_empty() {
        out.push('\n');
        for ob in obs {
            out.push_str(&format!(
                "(* {}:  |- {} = {} *)\n",
                ob.id,
                term_str(&ob.lhs),
                term_str(&ob.rhs)
            ));
        }
    }
    out
}

fn ident_str(v: &Ident) -> String {
    if v.stamp == 0 {
        v.name.clone()
    } else {
        format!("{}_{}", v.name, v.stamp)
    }
}

fn idents_str(vs: &[Ident]) -> String {
    vs.iter().map(ident_str).collect::<Vec<_>>().join(",")
}

fn term_str(t: &Term) -> String {
    if let Some(q) = numeral_value(t) {
        return q.to_string();
    }
    match t {
        Term::Var(v) => ident_str(v),
        Term::Zero => "0".to_string(),
        Term::Succ(t) => format!("s({})", term_str(t)),
        Term::Pred(t) => format!("p({})", term_str(t)),
        Term::Add(a, b) => format!("({} + {})", term_str(a), term_str(b)),
        Term::Sub(a, b) => format!("({} - {})", term_str(a), term_str(b)),
        Term::Mul(a, b) => format!("({} * {})", term_str(a), term_str(b)),
        Term::App(h, args) => {
            let inner = args.iter().map(term_str).collect::<Vec<_>>().join(",");
            format!("{}({inner})", ident_str(h))
        }
    }
}

/// One-line rendering of a functional formula.
pub(crate) fn formula_str(f: &FFormula) -> String {
    match f {
        FFormula::FBot => "$".to_string(),
        FFormula::FEqual(a, b) => format!("{} = {}", term_str(a), term_str(b)),
        FFormula::FNat(t) => format!("nat({})", term_str(t)),
        FFormula::FVarT(v) => ident_str(v),
        FFormula::FAnd(fs) if fs.is_empty() => "()".to_string(),
        FFormula::FAnd(fs) => {
            let inner = fs.iter().map(formula_str).collect::<Vec<_>>().join(" & ");
            format!("({inner})")
        }
        FFormula::FImpl(a, b) => format!("({} => ({}))", formula_str(a), formula_str(b)),
        FFormula::FForall(vs, b) => format!("Forall {}.{}", idents_str(vs), formula_str(b)),
        FFormula::FExists(vs, b) => format!("Exists {}.{}", idents_str(vs), formula_str(b)),
    }
}

fn witness_str(w: &Substitution) -> String {
    let items = w
        .0
        .iter()
        .map(|(k, t)| format!("{} := {}", ident_str(k), term_str(t)))
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{items}}}")
}

fn pad(n: usize) -> String {
    " ".repeat(n)
}

struct Fp {
    erase: bool,
}

impl Fp {
    /// The annotation comment for a variable occurrence or a `val` line.
    fn anno(&self, a: &Option<FFormula>) -> String {
        match a {
            Some(f) if !self.erase => format!(" (* : {} *)", formula_str(f)),
            _ => String::new(),
        }
    }

    /// Render an expression.  The first line carries no indentation;
    /// continuation lines are indented to the absolute column `ind`.
    fn exp(&self, e: &FExp, ind: usize) -> String {
        match &e.kind {
            FKind::Var(x) => format!("{}{}", ident_str(x), self.anno(&e.anno)),
            FKind::Unit => "()".to_string(),
            FKind::Num(q) => q.to_string(),
            FKind::Zero => "0".to_string(),
            FKind::Succ(b) => format!("Succ({})", self.exp(b, ind)),
            FKind::Pred(b) => format!("Pred({})", self.exp(b, ind)),
            FKind::Tuple(es) => {
                let inner =
                    es.iter().map(|x| self.exp(x, ind)).collect::<Vec<_>>().join(", ");
                format!("({inner})")
            }
            FKind::Proj(b, i) => format!("#{} {}", i + 1, self.exp(b, ind)),
            FKind::Lam(params, body) => self.lam(params, &e.anno, body, ind),
            FKind::App { f, args, witness } => {
                let head = self.exp(f, ind);
                let arg = match args.as_slice() {
                    [a] => {
                        if self.erase {
                            // The tuple parentheses double as the call's.
                            match &a.kind {
                                FKind::Tuple(es) => es
                                    .iter()
                                    .map(|x| self.exp(x, ind))
                                    .collect::<Vec<_>>()
                                    .join(", "),
                                _ => self.exp(a, ind),
                            }
                        } else {
                            self.exp(a, ind)
                        }
                    }
                    many => {
                        many.iter().map(|x| self.exp(x, ind)).collect::<Vec<_>>().join(", ")
                    }
                };
                let w = match witness {
                    Some(w) if !self.erase => {
                        let items =
                            w.0.iter().map(|(_, t)| term_str(t)).collect::<Vec<_>>().join(", ");
                        format!(" (* [{items}] *)")
                    }
                    _ => String::new(),
                };
                format!("{head}({arg}){w}")
            }
            FKind::Let(..) | FKind::Unpack { .. } => self.spine(e, ind),
            FKind::Rec(n, base, step) => self.rec_print(n, base, step, ind),
            FKind::Coerce { body, hole, context, lhs, rhs, ob } => {
                let b = self.exp(body, ind);
                if self.erase {
                    b
                } else {
                    let by = match ob {
                        Some(n) => format!(" by #{n}"),
                        None => String::new(),
                    };
                    format!(
                        "{b} (* :> {{{}/{}}}[{} = {}{by}] *)",
                        ident_str(hole),
                        formula_str(context),
                        term_str(lhs),
                        term_str(rhs)
                    )
                }
            }
            FKind::Pack { witness, body } => {
                let b = self.exp(body, ind);
                if self.erase || witness.0.is_empty() {
                    b
                } else {
                    format!("{b} (* pack {} *)", witness_str(witness))
                }
            }
            FKind::Callcc(k, body) => {
                let b = self.exp(body, ind + 2);
                if b.contains('\n') {
                    format!("Callcc (fn {} =>\n{}{b})", ident_str(k), pad(ind + 2))
                } else {
                    format!("Callcc (fn {} => {b})", ident_str(k))
                }
            }
            FKind::Throw { target, value, witness } => {
                let w = match witness {
                    Some(w) if !self.erase && !w.0.is_empty() => {
                        format!(" (* {} *)", witness_str(w))
                    }
                    _ => String::new(),
                };
                format!(
                    "Throw ({}, {}){w}",
                    self.exp(target, ind),
                    self.exp(value, ind)
                )
            }
            FKind::Abort(v) => format!("Abort ({})", self.exp(v, ind)),
        }
    }

    /// A run of bindings renders as one `let … in … end` block with the
    /// `val` lines stacked.
    fn spine(&self, e: &FExp, ind: usize) -> String {
        let mut out = String::new();
        let mut cur = e;
        let mut first = true;
        loop {
            let (line, next) = match &cur.kind {
                FKind::Let(x, rhs, body) => {
                    let head = format!("val {}{}", ident_str(x), self.anno(&rhs.anno));
                    (format!("{head} = {}", self.exp(rhs, ind + 6)), &**body)
                }
                FKind::Unpack { vars, val, rhs, body } => {
                    let open = if self.erase {
                        String::new()
                    } else {
                        format!(" (* opens {} *)", idents_str(vars))
                    };
                    let head =
                        format!("val {}{open}{}", ident_str(val), self.anno(&rhs.anno));
                    (format!("{head} = {}", self.exp(rhs, ind + 6)), &**body)
                }
                _ => break,
            };
            if first {
                out.push_str("let ");
                first = false;
            } else {
                out.push('\n');
                out.push_str(&pad(ind + 4));
            }
            out.push_str(&line);
            cur = next;
        }
        out.push('\n');
        out.push_str(&pad(ind));
        out.push_str("in ");
        out.push_str(&self.exp(cur, ind + 3));
        out.push_str(" end");
        out
    }

    fn lam(&self, params: &[Ident], anno: &Option<FFormula>, body: &FExp, ind: usize) -> String {
        // Parameter types live in the lambda's own formula, when present.
        let types = self.param_types(params.len(), anno);
        let heads: Vec<String> = params
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let t = types.as_ref().map(|ts| ts[k].clone());
                format!("{}{}", ident_str(p), self.anno(&t))
            })
            .collect();
        let b = self.exp(body, ind + 2);
        if b.contains('\n') {
            format!("fn ({}) =>\n{}{b}", heads.join(", "), pad(ind + 2))
        } else {
            format!("fn ({}) => {b}", heads.join(", "))
        }
    }

    /// Split a lambda's formula into one type per parameter.
    fn param_types(&self, n: usize, anno: &Option<FFormula>) -> Option<Vec<FFormula>> {
        if self.erase {
            return None;
        }
        let f = anno.as_ref()?;
        let ante = match f {
            FFormula::FForall(_, b) => match &**b {
                FFormula::FImpl(a, _) => a,
                _ => return None,
            },
            FFormula::FImpl(a, _) => a,
            _ => return None,
        };
        match (&super::strip(ante), n) {
            (FFormula::FAnd(fs), n) if fs.len() == n => Some(fs.clone()),
            (single, 1) => Some(vec![(*single).clone()]),
            _ => None,
        }
    }

    fn rec_print(&self, n: &FExp, base: &FExp, step: &FExp, ind: usize) -> String {
        // The step is a two-level lambda: the index, then the state tuple.
        if let FKind::Lam(idx, inner) = &step.kind {
            if let (1, FKind::Lam(keys, body)) = (idx.len(), &inner.kind) {
                let idx_t = self.param_types(1, &step.anno).map(|ts| ts[0].clone());
                let key_ts = self.param_types(keys.len(), &inner.anno);
                let heads: Vec<String> = keys
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let t = key_ts.as_ref().map(|ts| ts[k].clone());
                        format!("{}{}", ident_str(p), self.anno(&t))
                    })
                    .collect();
                let b = self.exp(body, ind + 7);
                let sep = if b.contains('\n') {
                    format!("\n{}", pad(ind + 7))
                } else {
                    " ".to_string()
                };
                return format!(
                    "Rec ({}, {},\n{}fn {}{} => fn ({}) =>{sep}{b} )",
                    self.exp(n, ind),
                    self.exp(base, ind),
                    pad(ind + 5),
                    ident_str(&idx[0]),
                    self.anno(&idx_t),
                    heads.join(", ")
                );
            }
        }
        format!(
            "Rec ({}, {}, {})",
            self.exp(n, ind),
            self.exp(base, ind),
            self.exp(step, ind + 2)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::check_program;
    use crate::functional::{erase, translate_program};
    use crate::parser::parse_proof;
    use crate::testdata::ADD_PROOF;

    fn add_rendering(erased: bool) -> String {
        let (prog, obs) = parse_proof(ADD_PROOF, "add.proof").unwrap();
        check_program(&prog, &obs).unwrap();
        let t = translate_program(&prog);
        if erased {
            fprint(&erase(&t), true, &obs)
        } else {
            fprint(&t, false, &obs)
        }
    }

    #[test]
    fn the_annotated_addition_carries_every_type() {
        let out = add_rendering(false);
        for needle in [
            "val p_add (* : Forall x,y.((nat(x) & nat(y)) => (nat((x + y)))) *) = fn (X (* : nat(x) *), Y (* : nat(y) *)) =>",
            "val Z (* : nat((x + 0)) *) = X (* : nat(x) *) (* :> {var_1/nat(var_1)}[x = (x + 0) by #1] *)",
            "Rec (Y (* : nat(y) *), Z (* : nat((x + 0)) *),",
            "fn i (* : nat(i) *) => fn (Z (* : nat((x + i)) *)) =>",
            "val Z (* : nat(s((x + i))) *) = Succ(Z (* : nat((x + i)) *))",
            "in Z (* : nat(s((x + i))) *) (* :> {var_2/(nat(var_2))}[s((x + i)) = (x + s(i)) by #2] *) end",
            "val N (* : 0 = 0 *) = ()",
            "val N (* : nat((3 + 5)) *) = p_add (* : Forall x,y.((nat(x) & nat(y)) => (nat((x + y)))) *)((3, 5)) (* [3, 5] *)",
            "in () end",
            "(* 1:  |- x = (x + 0) *)",
            "(* 2:  |- s((x + i)) = (x + s(i)) *)",
        ] {
            assert!(out.contains(needle), "missing {needle:?} in:\n{out}");
        }
    }

    #[test]
    fn the_erased_addition_is_comment_free_except_the_table() {
        let out = add_rendering(true);
        for needle in [
            "val p_add = fn (X, Y) =>",
            "val Z = X\n",
            "Rec (Y, Z,",
            "fn i => fn (Z) =>",
            "val Z = Succ(Z)",
            "val N = ()",
            "val N = p_add(3, 5)",
            "in () end",
        ] {
            assert!(out.contains(needle), "missing {needle:?} in:\n{out}");
        }
        // The only comments left are the two table lines at the bottom.
        let comments: Vec<&str> =
            out.lines().filter(|l| l.contains("(*")).collect();
        assert_eq!(
            comments,
            vec!["(* 1:  |- x = (x + 0) *)", "(* 2:  |- s((x + i)) = (x + s(i)) *)"]
        );
    }

    #[test]
    fn both_renderings_end_with_the_obligation_table() {
        for erased in [false, true] {
            let out = add_rendering(erased);
            let tail: Vec<&str> = out.trim_end().lines().rev().take(2).collect();
            assert_eq!(
                tail,
                vec!["(* 2:  |- s((x + i)) = (x + s(i)) *)", "(* 1:  |- x = (x + 0) *)"]
            );
        }
    }

    #[test]
    fn formulas_render_in_the_functional_notation() {
        use crate::ast::{Ident, Term};
        let x = || Term::Var(Ident::new("x"));
        assert_eq!(
            formula_str(&FFormula::FImpl(
                Box::new(FFormula::FNat(x())),
                Box::new(FFormula::FBot)
            )),
            "(nat(x) => ($))"
        );
        assert_eq!(formula_str(&FFormula::FAnd(vec![FFormula::FNat(x())])), "(nat(x))");
        assert_eq!(formula_str(&FFormula::FAnd(vec![])), "()");
        assert_eq!(
            formula_str(&FFormula::FExists(
                vec![Ident::new("u")],
                Box::new(FFormula::FNat(Term::Var(Ident::new("u"))))
            )),
            "Exists u.nat(u)"
        );
        // Stamped identifiers use the underscore spelling.
        assert_eq!(
            formula_str(&FFormula::FNat(Term::Var(Ident::stamped("var", 3)))),
            "nat(var_3)"
        );
    }

    #[test]
    fn the_shift_reset_rendering_shows_the_classical_structure() {
        use crate::infer::infer_program;
        use crate::parser::parse_program;
        let src = include_str!("../../tests/corpus/shiftreset.loop");
        let seq = parse_program(src, "shiftreset.loop").unwrap();
        let (prog, obs) = infer_program(&seq).unwrap();
        check_program(&prog, &obs).unwrap();
        let t = translate_program(&prog);
        let out = fprint(&t, false, &obs);
        assert!(out.contains("Callcc (fn k =>"), "{out}");
        assert!(out.contains("Throw ("), "{out}");
        // The k-block of the shift encoding opens an existential.
        assert!(out.contains("(* opens u *)"), "{out}");
        assert!(out.contains("(* 6:  |- F32(1) = 2 *)"), "{out}");
    }
}
