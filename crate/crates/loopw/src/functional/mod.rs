//! The functional proof core: the Curry–Howard image of checked imperative
//! derivations.  Procedures become lambdas over tuples, loops become
//! primitive recursion, labels become continuation capture, jumps become
//! throws, and the dependent state types become first-order formulas with
//! conjunction, implication and quantifiers.
//!
//! The submodules provide the translation out of the imperative syntax,
//! a natural-deduction checker for the result, a small-step evaluator
//! with first-class continuations, and a printer for the textual `.fun`
//! rendering (annotated or erased).

mod feval;
mod fcheck;
mod fprint;
mod translate;

pub use feval::{feval, EvalError, FValue, DEFAULT_FUEL};
pub use fcheck::fcheck;
pub use fprint::fprint;
pub(crate) use fprint::formula_str;
pub use translate::{erase, translate_program};

use crate::ast::{Formula, Ident, Region, Substitution, Term};
use num_bigint::BigUint;

/// Formulas of the functional core: minimal first-order logic over the
/// arithmetic terms, with conjunctions written as tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FFormula {
    FBot,
    FEqual(Term, Term),
    FNat(Term),
    FAnd(Vec<FFormula>),
    FImpl(Box<FFormula>, Box<FFormula>),
    FForall(Vec<Ident>, Box<FFormula>),
    FExists(Vec<Ident>, Box<FFormula>),
    FVarT(Ident),
}

/// Conjunction with the singleton collapse; the empty conjunction is the
/// trivial truth.
pub fn and(mut fs: Vec<FFormula>) -> FFormula {
    if fs.len() == 1 { fs.pop().unwrap() } else { FFormula::FAnd(fs) }
}

pub fn impl_(a: FFormula, b: FFormula) -> FFormula {
    FFormula::FImpl(Box::new(a), Box::new(b))
}

/// Universal closure; no binders, no quantifier.
pub fn forall(vs: Vec<Ident>, f: FFormula) -> FFormula {
    if vs.is_empty() { f } else { FFormula::FForall(vs, Box::new(f)) }
}

/// Existential closure; no binders, no quantifier.
pub fn exists(vs: Vec<Ident>, f: FFormula) -> FFormula {
    if vs.is_empty() { f } else { FFormula::FExists(vs, Box::new(f)) }
}

/// The image of an imperative state type.  A procedure type becomes the
/// universally closed implication from the conjunction of its inputs to
/// the existential closure of the conjunction of its outputs.
pub fn translate_formula(f: &Formula) -> FFormula {
    match f {
        Formula::Bot => FFormula::FBot,
        Formula::Equal(a, b) => FFormula::FEqual(a.clone(), b.clone()),
        Formula::Nat(t) => FFormula::FNat(t.clone()),
        Formula::FVar(v) => FFormula::FVarT(v.clone()),
        Formula::Proc { in_vars, in_types, out_vars, out_types } => {
            let outs = exists(
                out_vars.clone(),
                and(out_types.iter().map(translate_formula).collect()),
            );
            if in_types.is_empty() {
                // Nothing to provide: the procedure is its result's proof.
                outs
            } else {
                let ins = and(in_types.iter().map(translate_formula).collect());
                forall(in_vars.clone(), impl_(ins, outs))
            }
        }
    }
}

/// Render an imperative state type in the logical notation, the view the
/// `-form` flag selects.
pub fn logical_str(f: &Formula) -> String {
    formula_str(&translate_formula(f))
}

/// The formula a whole translated program proves: the conjunction of its
/// out-specification's promises under the specification's existentials.
pub fn program_goal(prog: &crate::ast::Program) -> FFormula {
    exists(
        prog.spec.exist.clone(),
        and(prog.spec.env.img().map(translate_formula).collect()),
    )
}

/// The type of a continuation accepting proofs of `f`: the universally
/// closed refutation dual to an existential statement.
pub fn dual(f: &FFormula) -> FFormula {
    match f {
        FFormula::FExists(vs, body) => {
            FFormula::FForall(vs.clone(), Box::new(impl_((**body).clone(), FFormula::FBot)))
        }
        other => impl_(other.clone(), FFormula::FBot),
    }
}

/// Terms of the functional core.  Every node may carry the formula it
/// proves; the translation annotates everything, erasure drops it all.
#[derive(Debug, Clone, PartialEq)]
pub struct FExp {
    pub kind: FKind,
    pub anno: Option<FFormula>,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FKind {
    Var(Ident),
    Unit,
    Num(BigUint),
    Zero,
    Succ(Box<FExp>),
    Pred(Box<FExp>),
    Tuple(Vec<FExp>),
    Proj(Box<FExp>, usize),
    /// Lambda over a tuple pattern; one parameter binds the argument
    /// directly, several destructure it.
    Lam(Vec<Ident>, Box<FExp>),
    /// Application; `witness` instantiates the function's universal
    /// binders, as the call witness does imperatively.
    App { f: Box<FExp>, args: Vec<FExp>, witness: Option<Substitution> },
    Let(Ident, Box<FExp>, Box<FExp>),
    /// Primitive recursion: bound, base, then a two-level lambda taking
    /// the index and the accumulator tuple.
    Rec(Box<FExp>, Box<FExp>, Box<FExp>),
    /// Equality rewriting; computationally the identity.  `lhs = rhs` is
    /// the equality applied at `hole`; `ob` points into the obligation
    /// table when the justification was an obligation reference.
    Coerce {
        body: Box<FExp>,
        hole: Ident,
        context: FFormula,
        lhs: Term,
        rhs: Term,
        ob: Option<u32>,
    },
    /// Existential introduction; evaluation-transparent.
    Pack { witness: Substitution, body: Box<FExp> },
    /// Existential elimination: opens `vars` abstractly and binds `val`
    /// to the underlying proof.
    Unpack { vars: Vec<Ident>, val: Ident, rhs: Box<FExp>, body: Box<FExp> },
    /// Continuation capture; abortive.
    Callcc(Ident, Box<FExp>),
    /// Resume a continuation (or enter a never-returning procedure) with
    /// a value; `witness` instantiates the target's universal binders.
    Throw { target: Box<FExp>, value: Box<FExp>, witness: Option<Substitution> },
    /// End the whole evaluation with the value.
    Abort(Box<FExp>),
}

impl FExp {
    pub fn new(kind: FKind, region: &Region) -> FExp {
        FExp { kind, anno: None, region: region.clone() }
    }

    pub fn with_anno(kind: FKind, anno: FFormula, region: &Region) -> FExp {
        FExp { kind, anno: Some(anno), region: region.clone() }
    }
}

impl crate::ast::StripRegions for FExp {
    fn strip_regions(&mut self) {
        self.region = Region::default();
        match &mut self.kind {
            FKind::Var(_) | FKind::Unit | FKind::Num(_) | FKind::Zero => {}
            FKind::Succ(b) | FKind::Pred(b) | FKind::Proj(b, _) | FKind::Abort(b) => {
                b.strip_regions()
            }
            FKind::Tuple(es) => es.iter_mut().for_each(|e| e.strip_regions()),
            FKind::Lam(_, b) | FKind::Callcc(_, b) => b.strip_regions(),
            FKind::App { f, args, .. } => {
                f.strip_regions();
                args.iter_mut().for_each(|a| a.strip_regions());
            }
            FKind::Let(_, r, b) => {
                r.strip_regions();
                b.strip_regions();
            }
            FKind::Rec(n, base, step) => {
                n.strip_regions();
                base.strip_regions();
                step.strip_regions();
            }
            FKind::Coerce { body, .. } | FKind::Pack { body, .. } => body.strip_regions(),
            FKind::Unpack { rhs, body, .. } => {
                rhs.strip_regions();
                body.strip_regions();
            }
            FKind::Throw { target, value, .. } => {
                target.strip_regions();
                value.strip_regions();
            }
        }
    }
}

/// Free term variables of a functional formula, for the scope checks on
/// existential elimination.
pub(crate) fn ff_free_vars(f: &FFormula, out: &mut Vec<Ident>) {
    match f {
        FFormula::FBot | FFormula::FVarT(_) => {}
        FFormula::FEqual(a, b) => {
            out.extend(crate::subst::free_vars_term(a));
            out.extend(crate::subst::free_vars_term(b));
        }
        FFormula::FNat(t) => out.extend(crate::subst::free_vars_term(t)),
        FFormula::FAnd(fs) => {
            for g in fs {
                ff_free_vars(g, out);
            }
        }
        FFormula::FImpl(a, b) => {
            ff_free_vars(a, out);
            ff_free_vars(b, out);
        }
        FFormula::FForall(vs, b) | FFormula::FExists(vs, b) => {
            let mut inner = Vec::new();
            ff_free_vars(b, &mut inner);
            out.extend(inner.into_iter().filter(|v| !vs.contains(v)));
        }
    }
}

/// Capture-free simultaneous substitution in a functional formula.
pub(crate) fn subst_ff(f: &FFormula, subst: &[(Ident, Term)]) -> FFormula {
    if subst.is_empty() {
        return f.clone();
    }
    match f {
        FFormula::FBot | FFormula::FVarT(_) => f.clone(),
        FFormula::FEqual(a, b) => FFormula::FEqual(
            crate::subst::subst_term_multi(a, subst),
            crate::subst::subst_term_multi(b, subst),
        ),
        FFormula::FNat(t) => FFormula::FNat(crate::subst::subst_term_multi(t, subst)),
        FFormula::FAnd(fs) => FFormula::FAnd(fs.iter().map(|g| subst_ff(g, subst)).collect()),
        FFormula::FImpl(a, b) => impl_(subst_ff(a, subst), subst_ff(b, subst)),
        FFormula::FForall(vs, b) => {
            let (vs2, b2) = subst_under(vs, b, subst);
            FFormula::FForall(vs2, Box::new(b2))
        }
        FFormula::FExists(vs, b) => {
            let (vs2, b2) = subst_under(vs, b, subst);
            FFormula::FExists(vs2, Box::new(b2))
        }
    }
}

fn subst_under(vs: &[Ident], body: &FFormula, subst: &[(Ident, Term)]) -> (Vec<Ident>, FFormula) {
    let live: Vec<(Ident, Term)> =
        subst.iter().filter(|(k, _)| !vs.contains(k)).cloned().collect();
    if live.is_empty() {
        return (vs.to_vec(), body.clone());
    }
    // Freshen binders the incoming terms would capture.
    let mut img_vars = Vec::new();
    for (_, t) in &live {
        img_vars.extend(crate::subst::free_vars_term(t));
    }
    let mut body_vars = Vec::new();
    ff_free_vars(body, &mut body_vars);
    let mut vs2 = Vec::new();
    let mut renames = Vec::new();
    for v in vs {
        if img_vars.contains(v) {
            let mut fresh = v.clone();
            loop {
                fresh = Ident::stamped(&fresh.name, fresh.stamp + 1);
                if !img_vars.contains(&fresh) && !body_vars.contains(&fresh) && !vs.contains(&fresh)
                {
                    break;
                }
            }
            renames.push((v.clone(), Term::Var(fresh.clone())));
            vs2.push(fresh);
        } else {
            vs2.push(v.clone());
        }
    }
    let body2 = if renames.is_empty() { body.clone() } else { subst_ff(body, &renames) };
    (vs2, subst_ff(&body2, &live))
}

/// Semantic formula equality: singleton conjunctions collapse, empty
/// quantifier blocks vanish, and bound variables compare up to renaming.
pub fn feq(a: &FFormula, b: &FFormula) -> bool {
    canon(&strip(a), &mut 0, &[]) == canon(&strip(b), &mut 0, &[])
}

/// Rewrite every bound variable to a canonical name determined by the
/// order of binding sites alone.
fn canon(f: &FFormula, next: &mut u32, env: &[(Ident, Ident)]) -> FFormula {
    match f {
        FFormula::FBot | FFormula::FVarT(_) => f.clone(),
        FFormula::FEqual(a, b) => FFormula::FEqual(canon_t(a, env), canon_t(b, env)),
        FFormula::FNat(t) => FFormula::FNat(canon_t(t, env)),
        FFormula::FAnd(fs) => FFormula::FAnd(fs.iter().map(|g| canon(g, next, env)).collect()),
        FFormula::FImpl(a, b) => {
            impl_(canon(a, next, env), canon(b, next, env))
        }
        FFormula::FForall(vs, b) => {
            let (vs2, env2) = canon_binders(vs, next, env);
            FFormula::FForall(vs2, Box::new(canon(b, next, &env2)))
        }
        FFormula::FExists(vs, b) => {
            let (vs2, env2) = canon_binders(vs, next, env);
            FFormula::FExists(vs2, Box::new(canon(b, next, &env2)))
        }
    }
}

fn canon_binders(
    vs: &[Ident],
    next: &mut u32,
    env: &[(Ident, Ident)],
) -> (Vec<Ident>, Vec<(Ident, Ident)>) {
    let mut env2 = env.to_vec();
    let mut vs2 = Vec::new();
    for v in vs {
        *next += 1;
        let c = Ident::stamped("!", *next);
        env2.push((v.clone(), c.clone()));
        vs2.push(c);
    }
    (vs2, env2)
}

fn canon_t(t: &Term, env: &[(Ident, Ident)]) -> Term {
    let rename = |v: &Ident| -> Ident {
        env.iter().rev().find(|(k, _)| k == v).map(|(_, c)| c.clone()).unwrap_or_else(|| v.clone())
    };
    match t {
        Term::Var(v) => Term::Var(rename(v)),
        Term::Zero => Term::Zero,
        Term::Succ(a) => Term::Succ(Box::new(canon_t(a, env))),
        Term::Pred(a) => Term::Pred(Box::new(canon_t(a, env))),
        Term::Add(a, b) => Term::Add(Box::new(canon_t(a, env)), Box::new(canon_t(b, env))),
        Term::Sub(a, b) => Term::Sub(Box::new(canon_t(a, env)), Box::new(canon_t(b, env))),
        Term::Mul(a, b) => Term::Mul(Box::new(canon_t(a, env)), Box::new(canon_t(b, env))),
        Term::App(h, args) => {
            Term::App(rename(h), args.iter().map(|a| canon_t(a, env)).collect())
        }
    }
}

pub(crate) fn strip(f: &FFormula) -> FFormula {
    match f {
        FFormula::FBot | FFormula::FEqual(..) | FFormula::FNat(_) | FFormula::FVarT(_) => f.clone(),
        FFormula::FAnd(fs) if fs.len() == 1 => strip(&fs[0]),
        FFormula::FAnd(fs) => FFormula::FAnd(fs.iter().map(strip).collect()),
        FFormula::FImpl(a, b) => impl_(strip(a), strip(b)),
        FFormula::FForall(vs, b) if vs.is_empty() => strip(b),
        FFormula::FForall(vs, b) => FFormula::FForall(vs.clone(), Box::new(strip(b))),
        FFormula::FExists(vs, b) if vs.is_empty() => strip(b),
        FFormula::FExists(vs, b) => FFormula::FExists(vs.clone(), Box::new(strip(b))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{mk_nat, Formula, Term};
    use num_bigint::BigUint;

    fn nat(t: Term) -> Formula {
        Formula::Nat(t)
    }

    fn v(n: &str) -> Term {
        Term::Var(Ident::new(n))
    }

    #[test]
    fn procedure_types_become_closed_implications() {
        let x = Ident::new("x");
        let y = Ident::new("y");
        let p = Formula::Proc {
            in_vars: vec![x.clone(), y.clone()],
            in_types: vec![nat(v("x")), nat(v("y"))],
            out_vars: vec![],
            out_types: vec![nat(Term::add(v("x"), v("y")))],
        };
        let t = translate_formula(&p);
        let FFormula::FForall(vs, body) = &t else { panic!("{t:?}") };
        assert_eq!(vs, &[x, y]);
        let FFormula::FImpl(a, b) = &**body else { panic!("{t:?}") };
        assert!(matches!(&**a, FFormula::FAnd(fs) if fs.len() == 2));
        assert!(matches!(&**b, FFormula::FNat(_)));
    }

    #[test]
    fn negations_become_implications_to_absurdity() {
        let t = translate_formula(&Formula::neg(nat(v("x"))));
        assert_eq!(t, impl_(FFormula::FNat(v("x")), FFormula::FBot));
    }

    #[test]
    fn pure_existential_types_keep_only_the_exists() {
        let x = Ident::new("x");
        let p = Formula::Proc {
            in_vars: vec![],
            in_types: vec![],
            out_vars: vec![x.clone()],
            out_types: vec![nat(v("x")), Formula::FVar(Ident::new("F"))],
        };
        let t = translate_formula(&p);
        let FFormula::FExists(vs, body) = &t else { panic!("{t:?}") };
        assert_eq!(vs, &[x]);
        assert!(matches!(&**body, FFormula::FAnd(fs) if fs.len() == 2));
    }

    #[test]
    fn duals_refute_existentials_pointwise() {
        let u = Ident::new("u");
        let f = exists(vec![u.clone()], FFormula::FNat(v("u")));
        let d = dual(&f);
        assert_eq!(
            d,
            FFormula::FForall(vec![u], Box::new(impl_(FFormula::FNat(v("u")), FFormula::FBot)))
        );
    }

    #[test]
    fn substitution_respects_binders_and_avoids_capture() {
        let u = Ident::new("u");
        let x = Ident::new("x");
        let f = FFormula::FExists(
            vec![u.clone()],
            Box::new(FFormula::FEqual(v("u"), v("x"))),
        );
        // u is bound: substituting it does nothing.
        let same = subst_ff(&f, &[(u.clone(), Term::Zero)]);
        assert_eq!(same, f);
        // Substituting u for x forces a rename of the binder.
        let g = subst_ff(&f, &[(x.clone(), v("u"))]);
        let FFormula::FExists(vs, body) = &g else { panic!("{g:?}") };
        assert_ne!(vs[0], u);
        assert_eq!(**body, FFormula::FEqual(Term::Var(vs[0].clone()), v("u")));
    }

    #[test]
    fn numeral_images_are_their_towers() {
        let three = mk_nat(&BigUint::from(3u32));
        assert_eq!(
            translate_formula(&nat(three.clone())),
            FFormula::FNat(three)
        );
    }

    #[test]
    fn semantic_equality_collapses_singletons() {
        let a = FFormula::FAnd(vec![FFormula::FNat(v("x"))]);
        assert!(feq(&a, &FFormula::FNat(v("x"))));
        assert!(!feq(&a, &FFormula::FNat(v("y"))));
    }
}
