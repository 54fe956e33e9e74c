//! Call-by-value evaluation of the functional core on a small-step
//! abstract machine (environment plus explicit continuation stack), so
//! capturing a continuation is one clone of the stack.  Proof-only nodes
//! (coercions, packing) evaluate transparently; a throw either resumes a
//! captured continuation or tail-calls a never-returning closure; abort
//! ends the whole run with its value.

use super::{FExp, FKind};
use crate::ast::{Ident, Region};
use num_bigint::BigUint;
use num_traits::Zero as _;
use std::fmt;
use std::rc::Rc;

pub const DEFAULT_FUEL: u64 = 10_000_000;

/// The observable result of a run.  Code values are opaque.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FValue {
    Num(BigUint),
    Unit,
    Tuple(Vec<FValue>),
    Fn,
    Cont,
}

impl fmt::Display for FValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FValue::Num(q) => write!(f, "{q}"),
            FValue::Unit => write!(f, "()"),
            FValue::Tuple(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            FValue::Fn => write!(f, "<fn>"),
            FValue::Cont => write!(f, "<cont>"),
        }
    }
}

#[derive(Debug)]
pub enum EvalError {
    OutOfFuel,
    Stuck { message: String, region: Region },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::OutOfFuel => write!(f, "evaluation ran out of fuel"),
            EvalError::Stuck { message, region } => write!(f, "{region}: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum V<'a> {
    Num(BigUint),
    Unit,
    Tuple(Vec<V<'a>>),
    Clo(Env<'a>, &'a [Ident], &'a FExp),
    K(Vec<Fr<'a>>),
}

#[derive(Debug, Clone, PartialEq)]
struct Env<'a>(Option<Rc<Node<'a>>>);

#[derive(Debug, PartialEq)]
struct Node<'a> {
    name: &'a Ident,
    val: V<'a>,
    next: Env<'a>,
}

impl<'a> Env<'a> {
    fn empty() -> Env<'a> {
        Env(None)
    }

    fn push(&self, name: &'a Ident, val: V<'a>) -> Env<'a> {
        Env(Some(Rc::new(Node { name, val, next: self.clone() })))
    }

    fn get(&self, name: &Ident) -> Option<&V<'a>> {
        let mut cur = self;
        while let Some(n) = &cur.0 {
            if n.name == name {
                return Some(&n.val);
            }
            cur = &n.next;
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Fr<'a> {
    /// The function is done; arguments remain.
    AppFn { args: &'a [FExp], env: Env<'a> },
    /// Collecting argument values before the application fires.
    AppArgs { fnv: V<'a>, done: Vec<V<'a>>, rest: &'a [FExp], env: Env<'a> },
    LetK { name: &'a Ident, body: &'a FExp, env: Env<'a> },
    TupleK { done: Vec<V<'a>>, rest: &'a [FExp], env: Env<'a> },
    ProjK(usize),
    SuccK,
    PredK,
    /// The bound is done; base and step pending.
    RecN { base: &'a FExp, step: &'a FExp, env: Env<'a> },
    RecBase { n: BigUint, step: &'a FExp, env: Env<'a> },
    /// The base state is in hand; the incoming value is the step function.
    RecStep { n: BigUint, acc: V<'a> },
    /// Iterating: the incoming value is the accumulator after `i` steps.
    RecIter { i: BigUint, n: BigUint, step: V<'a> },
    /// The step was applied to the index; apply its result to the state.
    RecAcc { acc: V<'a> },
    ThrowT { value: &'a FExp, env: Env<'a> },
    ThrowV { target: V<'a> },
    AbortK,
}

enum St<'a> {
    E(&'a FExp, Env<'a>),
    A(V<'a>),
}

/// Evaluate a closed term within the step budget.
pub fn feval(t: &FExp, fuel: u64) -> Result<FValue, EvalError> {
    let mut kont: Vec<Fr> = Vec::new();
    let mut st = St::E(t, Env::empty());
    let mut pos: &Region = &t.region;
    let mut left = fuel;
    loop {
        if left == 0 {
            return Err(EvalError::OutOfFuel);
        }
        left -= 1;
        st = match st {
            St::E(e, env) => {
                pos = &e.region;
                step_eval(e, env, &mut kont, pos)?
            }
            St::A(v) => match kont.pop() {
                None => return Ok(public(&v)),
                Some(fr) => step_apply(fr, v, &mut kont, pos)?,
            },
        };
    }
}

fn stuck<'a>(message: impl Into<String>, region: &Region) -> Result<St<'a>, EvalError> {
    Err(EvalError::Stuck { message: message.into(), region: region.clone() })
}

fn step_eval<'a>(
    e: &'a FExp,
    env: Env<'a>,
    kont: &mut Vec<Fr<'a>>,
    pos: &Region,
) -> Result<St<'a>, EvalError> {
    Ok(match &e.kind {
        FKind::Var(x) => match env.get(x) {
            Some(v) => St::A(v.clone()),
            None => return stuck(format!("{x} is not bound"), pos),
        },
        FKind::Unit => St::A(V::Unit),
        FKind::Num(q) => St::A(V::Num(q.clone())),
        FKind::Zero => St::A(V::Num(BigUint::zero())),
        FKind::Succ(b) => {
            kont.push(Fr::SuccK);
            St::E(b, env)
        }
        FKind::Pred(b) => {
            kont.push(Fr::PredK);
            St::E(b, env)
        }
        FKind::Tuple(es) => {
            kont.push(Fr::TupleK { done: Vec::new(), rest: &es[1..], env: env.clone() });
            St::E(&es[0], env)
        }
        FKind::Proj(b, i) => {
            kont.push(Fr::ProjK(*i));
            St::E(b, env)
        }
        FKind::Lam(params, body) => St::A(V::Clo(env, params, body)),
        FKind::App { f, args, .. } => {
            kont.push(Fr::AppFn { args, env: env.clone() });
            St::E(f, env)
        }
        FKind::Let(name, rhs, body) => {
            kont.push(Fr::LetK { name, body, env: env.clone() });
            St::E(rhs, env)
        }
        FKind::Rec(n, base, step) => {
            kont.push(Fr::RecN { base, step, env: env.clone() });
            St::E(n, env)
        }
        FKind::Coerce { body, .. } => St::E(body, env),
        FKind::Pack { body, .. } => St::E(body, env),
        FKind::Unpack { val, rhs, body, .. } => {
            kont.push(Fr::LetK { name: val, body, env: env.clone() });
            St::E(rhs, env)
        }
        FKind::Callcc(k, body) => {
            let captured = V::K(kont.clone());
            St::E(body, env.push(k, captured))
        }
        FKind::Throw { target, value, .. } => {
            kont.push(Fr::ThrowT { value, env: env.clone() });
            St::E(target, env)
        }
        FKind::Abort(v) => {
            kont.push(Fr::AbortK);
            St::E(v, env)
        }
    })
}

fn step_apply<'a>(
    fr: Fr<'a>,
    v: V<'a>,
    kont: &mut Vec<Fr<'a>>,
    pos: &Region,
) -> Result<St<'a>, EvalError> {
    Ok(match fr {
        Fr::AppFn { args, env } => match args {
            [] => call(v, None, kont, pos)?,
            [first, rest @ ..] => {
                kont.push(Fr::AppArgs { fnv: v, done: Vec::new(), rest, env: env.clone() });
                St::E(first, env)
            }
        },
        Fr::AppArgs { fnv, mut done, rest, env } => {
            done.push(v);
            match rest {
                [] => {
                    // Curried application over the collected values.
                    let mut it = done.into_iter();
                    let first = it.next().expect("at least one argument");
                    let pending: Vec<V> = it.collect();
                    for extra in pending.into_iter().rev() {
                        kont.push(Fr::RecAcc { acc: extra });
                    }
                    call(fnv, Some(first), kont, pos)?
                }
                [next, more @ ..] => {
                    kont.push(Fr::AppArgs { fnv, done, rest: more, env: env.clone() });
                    St::E(next, env)
                }
            }
        }
        Fr::LetK { name, body, env } => St::E(body, env.push(name, v)),
        Fr::TupleK { mut done, rest, env } => {
            done.push(v);
            match rest {
                [] => St::A(V::Tuple(done)),
                [next, more @ ..] => {
                    kont.push(Fr::TupleK { done, rest: more, env: env.clone() });
                    St::E(next, env)
                }
            }
        }
        Fr::ProjK(i) => match v {
            V::Tuple(mut vs) if i < vs.len() => St::A(vs.swap_remove(i)),
            other => return stuck(format!("projection of a non-tuple {}", public(&other)), pos),
        },
        Fr::SuccK => match v {
            V::Num(q) => St::A(V::Num(q + 1u32)),
            other => return stuck(format!("successor of a non-numeral {}", public(&other)), pos),
        },
        Fr::PredK => match v {
            V::Num(q) => {
                St::A(V::Num(if q.is_zero() { q } else { q - 1u32 }))
            }
            other => {
                return stuck(format!("predecessor of a non-numeral {}", public(&other)), pos)
            }
        },
        Fr::RecN { base, step, env } => match v {
            V::Num(n) => {
                kont.push(Fr::RecBase { n, step, env: env.clone() });
                St::E(base, env)
            }
            other => return stuck(format!("recursion bound {} is not a numeral", public(&other)), pos),
        },
        Fr::RecBase { n, step, env } => {
            // The incoming value is the base state; evaluate the step
            // function next.
            kont.push(Fr::RecStep { n, acc: v });
            St::E(step, env)
        }
        Fr::RecStep { n, acc } => {
            kont.push(Fr::RecIter { i: BigUint::zero(), n, step: v });
            St::A(acc)
        }
        Fr::RecIter { i, n, step } => {
            if i == n {
                St::A(v)
            } else {
                let next = &i + 1u32;
                kont.push(Fr::RecIter { i: next, n, step: step.clone() });
                kont.push(Fr::RecAcc { acc: v });
                call(step, Some(V::Num(i)), kont, pos)?
            }
        }
        Fr::RecAcc { acc } => call(v, Some(acc), kont, pos)?,
        Fr::ThrowT { value, env } => {
            kont.push(Fr::ThrowV { target: v });
            St::E(value, env)
        }
        Fr::ThrowV { target } => match target {
            V::K(frames) => {
                *kont = frames;
                St::A(v)
            }
            clo @ V::Clo(..) => call(clo, Some(v), kont, pos)?,
            other => return stuck(format!("throw to a non-continuation {}", public(&other)), pos),
        },
        Fr::AbortK => {
            kont.clear();
            St::A(v)
        }
    })
}

/// Enter a function value.  One parameter binds the argument whole;
/// several destructure a tuple argument.
fn call<'a>(
    f: V<'a>,
    arg: Option<V<'a>>,
    kont: &mut Vec<Fr<'a>>,
    pos: &Region,
) -> Result<St<'a>, EvalError> {
    match f {
        V::Clo(env, params, body) => {
            let env2 = match (params, arg) {
                ([], None) => env,
                ([p], Some(v)) => env.push(p, v),
                (ps, Some(V::Tuple(vs))) if ps.len() == vs.len() => {
                    let mut e = env;
                    for (p, v) in ps.iter().zip(vs) {
                        e = e.push(p, v);
                    }
                    e
                }
                (ps, a) => {
                    return stuck(
                        format!(
                            "a function of {} parameters applied to {}",
                            ps.len(),
                            match a {
                                Some(v) => public(&v).to_string(),
                                None => "no argument".to_string(),
                            }
                        ),
                        pos,
                    );
                }
            };
            Ok(St::E(body, env2))
        }
        V::K(frames) => match arg {
            Some(v) => {
                *kont = frames;
                Ok(St::A(v))
            }
            None => stuck("a continuation needs a value", pos),
        },
        other => stuck(format!("call of a non-function {}", public(&other)), pos),
    }
}

fn public(v: &V<'_>) -> FValue {
    match v {
        V::Num(q) => FValue::Num(q.clone()),
        V::Unit => FValue::Unit,
        V::Tuple(vs) => FValue::Tuple(vs.iter().map(public).collect()),
        V::Clo(..) => FValue::Fn,
        V::K(_) => FValue::Cont,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Ident, Region};
    use crate::checker::check_program;
    use crate::functional::{erase, translate_program, FExp, FKind};
    use crate::infer::infer_program;
    use crate::parser::{parse_program, parse_proof};
    use crate::testdata::ADD_PROOF;

    fn e(kind: FKind) -> FExp {
        FExp { kind, anno: None, region: Region::default() }
    }

    fn v(n: &str) -> FExp {
        e(FKind::Var(Ident::new(n)))
    }

    fn num(q: u32) -> FExp {
        e(FKind::Num(BigUint::from(q)))
    }

    fn app(f: FExp, arg: FExp) -> FExp {
        e(FKind::App { f: Box::new(f), args: vec![arg], witness: None })
    }

    fn lam(ps: &[&str], body: FExp) -> FExp {
        e(FKind::Lam(ps.iter().map(|p| Ident::new(*p)).collect(), Box::new(body)))
    }

    /// Rebind the program's definitions, then deliver `value` instead of
    /// its own terminal, so closed harness applications can be built.
    fn with_tail(t: &FExp, value: FExp) -> FExp {
        match &t.kind {
            FKind::Let(x, rhs, body) => e(FKind::Let(
                x.clone(),
                rhs.clone(),
                Box::new(with_tail(body, value)),
            )),
            FKind::Unpack { vars, val, rhs, body } => e(FKind::Unpack {
                vars: vars.clone(),
                val: val.clone(),
                rhs: rhs.clone(),
                body: Box::new(with_tail(body, value)),
            }),
            _ => value,
        }
    }

    fn run(t: &FExp) -> FValue {
        feval(t, DEFAULT_FUEL).unwrap()
    }

    #[test]
    fn the_translated_addition_applies_to_three_and_five() {
        let (prog, obs) = parse_proof(ADD_PROOF, "add.proof").unwrap();
        check_program(&prog, &obs).unwrap();
        let t = translate_program(&prog);
        let harness = with_tail(
            &t,
            app(v("p_add"), e(FKind::Tuple(vec![num(3), num(5)]))),
        );
        assert_eq!(run(&harness), FValue::Num(BigUint::from(8u32)));
        // The bare executable skeleton computes the same number.
        assert_eq!(run(&erase(&harness)), FValue::Num(BigUint::from(8u32)));
    }

    #[test]
    fn the_shift_reset_program_delivers_five() {
        let src = include_str!("../../tests/corpus/shiftreset.loop");
        let seq = parse_program(src, "shiftreset.loop").unwrap();
        let (prog, obs) = infer_program(&seq).unwrap();
        check_program(&prog, &obs).unwrap();
        let t = translate_program(&prog);
        // Apply the entry point to a top-level abort continuation; its
        // first result is z : nat(3+2).
        let stop = lam(&["r"], e(FKind::Abort(Box::new(v("r")))));
        let harness = with_tail(&t, app(v("a"), stop));
        let five = FValue::Num(BigUint::from(5u32));
        match run(&harness) {
            FValue::Tuple(vs) => assert_eq!(vs[0], five),
            other => assert_eq!(other, five),
        }
    }

    #[test]
    fn recursion_folds_from_zero() {
        // Rec (7, 0, fn i => fn z => Succ z) computes 7.
        let step = lam(&["i"], lam(&["z"], e(FKind::Succ(Box::new(v("z"))))));
        let t = e(FKind::Rec(Box::new(num(7)), Box::new(e(FKind::Zero)), Box::new(step)));
        assert_eq!(run(&t), FValue::Num(BigUint::from(7u32)));
    }

    #[test]
    fn recursion_sees_each_index() {
        // Folding addition of the indices 0..4 gives 0+1+2+3 = 6.
        let add_i = lam(
            &["i"],
            lam(&["z"], {
                // z + i by a nested Rec over i with step Succ.
                let succ = lam(&["j"], lam(&["w"], e(FKind::Succ(Box::new(v("w"))))));
                e(FKind::Rec(Box::new(v("i")), Box::new(v("z")), Box::new(succ)))
            }),
        );
        let t = e(FKind::Rec(Box::new(num(4)), Box::new(e(FKind::Zero)), Box::new(add_i)));
        assert_eq!(run(&t), FValue::Num(BigUint::from(6u32)));
    }

    #[test]
    fn continuations_resume_their_capture_point() {
        // callcc k. throw k 7  ⇓  7
        let k = Ident::new("k");
        let t = e(FKind::Callcc(
            k.clone(),
            Box::new(e(FKind::Throw {
                target: Box::new(v("k")),
                value: Box::new(num(7)),
                witness: None,
            })),
        ));
        assert_eq!(run(&t), FValue::Num(BigUint::from(7u32)));
        // An unused capture is invisible.
        let t2 = e(FKind::Callcc(k, Box::new(num(3))));
        assert_eq!(run(&t2), FValue::Num(BigUint::from(3u32)));
    }

    #[test]
    fn a_throw_discards_its_surrounding_context() {
        // Succ around the capture point is replayed, Succ around the
        // throw site is discarded.
        let k = Ident::new("k");
        let inner = e(FKind::Succ(Box::new(e(FKind::Throw {
            target: Box::new(v("k")),
            value: Box::new(num(9)),
            witness: None,
        }))));
        let t = e(FKind::Succ(Box::new(e(FKind::Callcc(k, Box::new(inner))))));
        assert_eq!(run(&t), FValue::Num(BigUint::from(10u32)));
    }

    #[test]
    fn aborts_end_the_whole_run() {
        let t = e(FKind::Succ(Box::new(e(FKind::Abort(Box::new(num(2)))))));
        assert_eq!(run(&t), FValue::Num(BigUint::from(2u32)));
    }

    #[test]
    fn proof_constructs_are_transparent() {
        let t = e(FKind::Pack {
            witness: crate::ast::Substitution(vec![]),
            body: Box::new(e(FKind::Coerce {
                body: Box::new(num(4)),
                hole: Ident::new("h"),
                context: crate::functional::FFormula::FNat(crate::ast::Term::Var(Ident::new(
                    "h",
                ))),
                lhs: crate::ast::Term::Zero,
                rhs: crate::ast::Term::Zero,
                ob: None,
            })),
        });
        assert_eq!(run(&t), FValue::Num(BigUint::from(4u32)));
    }

    #[test]
    fn the_predecessor_truncates_at_zero() {
        assert_eq!(run(&e(FKind::Pred(Box::new(num(0))))), FValue::Num(BigUint::zero()));
        assert_eq!(
            run(&e(FKind::Pred(Box::new(num(3))))),
            FValue::Num(BigUint::from(2u32))
        );
    }

    #[test]
    fn tuples_project_by_position() {
        let t = e(FKind::Proj(
            Box::new(e(FKind::Tuple(vec![num(4), num(9)]))),
            1,
        ));
        assert_eq!(run(&t), FValue::Num(BigUint::from(9u32)));
    }

    #[test]
    fn evaluation_is_bounded_by_fuel() {
        // (fn x => x x) (fn x => x x) spins forever.
        let omega = lam(&["x"], app(v("x"), v("x")));
        let t = app(omega.clone(), omega);
        match feval(&t, 10_000) {
            Err(EvalError::OutOfFuel) => {}
            other => panic!("expected fuel exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn stuck_terms_name_the_problem() {
        let t = app(num(3), num(4));
        match feval(&t, 100) {
            Err(EvalError::Stuck { message, .. }) => {
                assert!(message.contains("non-function"), "{message}");
            }
            other => panic!("expected a stuck term, got {other:?}"),
        }
    }
}
