//! Core syntax of the imperative language and its dependent types.
//!
//! Terms are first-order arithmetic over the naturals (`0`, `s`, `p`, `+`,
//! `*`, truncated `-`, and uninterpreted function applications).  Formulas
//! are the imperative types: falsity `$`, equalities `(t = t)`, `nat(t)`,
//! procedure types, and opaque type variables.  Programs are sequences of
//! commands threaded through an ordered environment of program variables.
//!
//! Negation `~T` is sugar: it is represented as `proc(in T; out $)` and
//! re-sugared by the printers, so the rest of the toolchain never sees a
//! dedicated negation constructor.

use num_bigint::BigUint;
use num_traits::Zero as _;
use std::fmt;

/// Source span, used by every diagnostic.  Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Region {
    pub file: String,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Region {
    pub fn point(file: &str, line: u32, col: u32) -> Region {
        Region { file: file.to_string(), start_line: line, start_col: col, end_line: line, end_col: col }
    }

    /// Smallest region covering both `self` and `other`.
    pub fn merge(&self, other: &Region) -> Region {
        let mut r = self.clone();
        if (other.start_line, other.start_col) < (r.start_line, r.start_col) {
            r.start_line = other.start_line;
            r.start_col = other.start_col;
        }
        if (other.end_line, other.end_col) > (r.end_line, r.end_col) {
            r.end_line = other.end_line;
            r.end_col = other.end_col;
        }
        r
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

/// An identifier plus a disambiguator stamp.
///
/// Source identifiers always carry stamp 0; freshening bumps the stamp and
/// never edits the textual name.  A stamped identifier renders as `x'3`,
/// which is not a valid source identifier, so freshened names can never
/// collide with user-written ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ident {
    pub name: String,
    pub stamp: u32,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Ident {
        Ident { name: name.into(), stamp: 0 }
    }

    pub fn stamped(name: impl Into<String>, stamp: u32) -> Ident {
        Ident { name: name.into(), stamp }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.stamp == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}'{}", self.name, self.stamp)
        }
    }
}

/// First-order arithmetic terms.  Numerals are towers of `Succ` over
/// `Zero`; [`mk_nat`] and [`numeral_value`] convert in both directions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Ident),
    Zero,
    Succ(Box<Term>),
    Pred(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    /// Uninterpreted function application; the argument list is nonempty.
    App(Ident, Vec<Term>),
}

// The arithmetic constructors are plain builders taking both operands by
// value, not operator-trait implementations.
#[allow(clippy::should_implement_trait)]
impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Ident::new(name))
    }

    pub fn succ(t: Term) -> Term {
        Term::Succ(Box::new(t))
    }

    pub fn pred(t: Term) -> Term {
        Term::Pred(Box::new(t))
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        debug_assert!(!args.is_empty(), "uninterpreted applications take at least one argument");
        Term::App(Ident::new(f), args)
    }
}

/// Build the numeral `s^q(0)`.
pub fn mk_nat(q: &BigUint) -> Term {
    let mut t = Term::Zero;
    let mut n = q.clone();
    let one = BigUint::from(1u32);
    while !n.is_zero() {
        t = Term::Succ(Box::new(t));
        n -= &one;
    }
    t
}

/// Decode a pure `Succ` tower back to its value; `None` for any other term.
pub fn numeral_value(t: &Term) -> Option<BigUint> {
    let mut n = BigUint::zero();
    let mut cur = t;
    loop {
        match cur {
            Term::Zero => return Some(n),
            Term::Succ(inner) => {
                n += 1u32;
                cur = inner;
            }
            _ => return None,
        }
    }
}

/// Imperative types.
///
/// `Proc` binds `in_vars` over both `in_types` and `out_types`, and
/// `out_vars` over `out_types` only.  `FVar` is an opaque type variable:
/// two type variables are equal exactly when their identifiers are.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Bot,
    Equal(Term, Term),
    Nat(Term),
    Proc {
        in_vars: Vec<Ident>,
        in_types: Vec<Formula>,
        out_vars: Vec<Ident>,
        out_types: Vec<Formula>,
    },
    FVar(Ident),
}

impl Formula {
    pub fn nat(t: Term) -> Formula {
        Formula::Nat(t)
    }

    pub fn equal(a: Term, b: Term) -> Formula {
        Formula::Equal(a, b)
    }

    /// The placeholder type of a not-yet-assigned out variable.
    pub fn top() -> Formula {
        Formula::Equal(Term::Zero, Term::Zero)
    }

    /// Desugared negation: `~T` is `proc(in T; out $)`.  A builder taking
    /// the operand by value, not an operator-trait implementation.
    #[allow(clippy::should_implement_trait)]
    pub fn neg(t: Formula) -> Formula {
        Formula::Proc {
            in_vars: Vec::new(),
            in_types: vec![t],
            out_vars: Vec::new(),
            out_types: vec![Formula::Bot],
        }
    }

    /// Recognize the negation shape so printers can re-sugar it.
    pub fn as_neg(&self) -> Option<&Formula> {
        match self {
            Formula::Proc { in_vars, in_types, out_vars, out_types }
                if in_vars.is_empty()
                    && out_vars.is_empty()
                    && in_types.len() == 1
                    && out_types.len() == 1
                    && out_types[0] == Formula::Bot =>
            {
                Some(&in_types[0])
            }
            _ => None,
        }
    }
}

/// A finite map from term variables to terms, in declaration order.
/// Used for call/jump witnesses and end-of-sequence existential witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Substitution(pub Vec<(Ident, Term)>);

impl Substitution {
    pub fn new() -> Substitution {
        Substitution(Vec::new())
    }

    pub fn keys(&self) -> Vec<Ident> {
        self.0.iter().map(|(k, _)| k.clone()).collect()
    }

    pub fn get(&self, k: &Ident) -> Option<&Term> {
        self.0.iter().find(|(i, _)| i == k).map(|(_, t)| t)
    }
}

/// Ordered environment mapping program variables to their current types.
/// Keys are unique; insertion order is preserved by every operation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Env(pub Vec<(Ident, Formula)>);

impl Env {
    pub fn new() -> Env {
        Env(Vec::new())
    }

    pub fn from_pairs(pairs: Vec<(Ident, Formula)>) -> Env {
        Env(pairs)
    }

    pub fn get(&self, k: &Ident) -> Option<&Formula> {
        self.0.iter().find(|(i, _)| i == k).map(|(_, f)| f)
    }

    pub fn contains(&self, k: &Ident) -> bool {
        self.get(k).is_some()
    }

    pub fn keys(&self) -> Vec<Ident> {
        self.0.iter().map(|(k, _)| k.clone()).collect()
    }

    pub fn img(&self) -> impl Iterator<Item = &Formula> {
        self.0.iter().map(|(_, f)| f)
    }

    /// Update in place: replace the binding if the key is present (keeping
    /// its position), otherwise append it.
    pub fn update(&self, k: Ident, f: Formula) -> Env {
        let mut out = self.clone();
        match out.0.iter_mut().find(|(i, _)| *i == k) {
            Some(slot) => slot.1 = f,
            None => out.0.push((k, f)),
        }
        out
    }

    /// Right-biased union: bindings of `other` win on clashing keys; keys
    /// only in `other` are appended in their order.
    pub fn union(&self, other: &Env) -> Env {
        let mut out = self.clone();
        for (k, f) in &other.0 {
            out = out.update(k.clone(), f.clone());
        }
        out
    }

    /// Split off the sub-environment with exactly the keys of `dom`
    /// (returned in `self`'s order), together with the remainder.
    /// Fails when some key of `dom` is unbound.
    pub fn split(&self, dom: &[Ident]) -> Option<(Env, Env)> {
        if dom.iter().any(|k| !self.contains(k)) {
            return None;
        }
        let (inside, outside): (Vec<_>, Vec<_>) =
            self.0.iter().cloned().partition(|(k, _)| dom.contains(k));
        Some((Env(inside), Env(outside)))
    }

    /// Keep only bindings whose key appears in `dom`, in `self`'s order.
    /// Unlike [`Env::split`] this never fails; missing keys are dropped.
    pub fn restrict(&self, dom: &[Ident]) -> Env {
        Env(self.0.iter().filter(|(k, _)| dom.contains(k)).cloned().collect())
    }

    /// Environment equality: same keys bound to structurally equal types.
    /// Binding order is irrelevant — environments are finite maps.
    pub fn env_equals(&self, other: &Env) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().all(|(k, f)| other.get(k) == Some(f))
    }
}

/// The `(existentials, environment)` pair every block, loop, label and
/// whole program is annotated with.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OutSpec {
    pub exist: Vec<Ident>,
    pub env: Env,
}

impl OutSpec {
    pub fn new(exist: Vec<Ident>, env: Env) -> OutSpec {
        OutSpec { exist, env }
    }
}

/// Expressions.  `anno` is absent in freshly parsed source programs and
/// mandatory (directly or derivably) in fully annotated proof programs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub anno: Option<Formula>,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Id(Ident),
    Num(BigUint),
    /// The trusted token `*`; `ob` records the obligation justified by it,
    /// when inference introduced one.
    Star { ob: Option<u32> },
    ProcVal(Box<ProcVal>),
    Coerce(Box<CoerceExpr>),
    Lemma { hyps: Vec<Formula>, concl: Formula },
}

/// A procedure value.  `in_vars` are term binders scoping over parameter
/// and return types alike; `out_vars` scope over return types only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcVal {
    pub in_vars: Vec<Ident>,
    pub params: Vec<(Ident, Formula)>,
    pub out_vars: Vec<Ident>,
    pub rets: Vec<(Ident, Formula)>,
    pub body: Sequence,
}

impl ProcVal {
    /// The procedure type this value necessarily carries.
    pub fn formula(&self) -> Formula {
        Formula::Proc {
            in_vars: self.in_vars.clone(),
            in_types: self.params.iter().map(|(_, f)| f.clone()).collect(),
            out_vars: self.out_vars.clone(),
            out_types: self.rets.iter().map(|(_, f)| f.clone()).collect(),
        }
    }
}

/// A retyping step `e :> T`.  The target `T` lives in the enclosing
/// expression's `anno`.  `proof` is filled by inference (or the proof
/// parser): the target equals `context[m/hole]`, the inner expression
/// checks at `context[n/hole]`, and `just` proves `(n = m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoerceExpr {
    pub inner: Expr,
    pub proof: Option<CoerceProof>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoerceProof {
    pub hole: Ident,
    pub context: Formula,
    pub just: Expr,
}

/// One out variable of a call, with its post-call type in proof form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallOut {
    pub name: Ident,
    pub anno: Option<Formula>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub kind: CommandKind,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommandKind {
    Block {
        body: Sequence,
        spec: OutSpec,
    },
    For {
        counter: Ident,
        /// Logical index variable; defaults to the counter's name and is
        /// freshened by inference when that would capture.
        lid: Ident,
        bound: Expr,
        body: Box<Sequence>,
        spec: OutSpec,
    },
    Assign {
        target: Ident,
        value: Expr,
    },
    Inc {
        var: Ident,
        anno: Option<Formula>,
    },
    Dec {
        var: Ident,
        anno: Option<Formula>,
    },
    Call {
        callee: Expr,
        args: Vec<Expr>,
        outs: Vec<CallOut>,
        witness: Option<Substitution>,
    },
    Label {
        name: Ident,
        body: Sequence,
        spec: OutSpec,
    },
    Jump {
        target: Expr,
        args: Vec<Expr>,
        env: Env,
        witness: Option<Substitution>,
    },
}

/// Command sequences, right-nested.  `Subst` is the equality-rewriting
/// wrapper placed by inference at sequence ends; it terminates a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sequence {
    Empty {
        witness: Option<Substitution>,
        region: Region,
    },
    Seq(Box<Command>, Box<Sequence>),
    Cst {
        name: Ident,
        value: Expr,
        rest: Box<Sequence>,
    },
    Var {
        name: Ident,
        value: Expr,
        rest: Box<Sequence>,
    },
    Subst(Box<SeqSubst>),
}

/// `subst [context] at hole by just { body }`: the body proves the context
/// at the left-hand side of the justifying equality, and the node retypes
/// it to the right-hand side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqSubst {
    pub context: Env,
    pub hole: Ident,
    pub just: Expr,
    pub body: Sequence,
}

/// A whole program together with its outcome specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub seq: Sequence,
    pub spec: OutSpec,
}

// ---------------------------------------------------------------------------
// Region scrubbing, for structural comparisons across reprints.

pub trait StripRegions {
    /// Reset every region to the default, so two parses of equivalent text
    /// compare equal.
    fn strip_regions(&mut self);
}

impl StripRegions for Expr {
    fn strip_regions(&mut self) {
        self.region = Region::default();
        match &mut self.kind {
            ExprKind::Id(_) | ExprKind::Num(_) | ExprKind::Star { .. } | ExprKind::Lemma { .. } => {}
            ExprKind::ProcVal(p) => p.body.strip_regions(),
            ExprKind::Coerce(c) => {
                c.inner.strip_regions();
                if let Some(proof) = &mut c.proof {
                    proof.just.strip_regions();
                }
            }
        }
    }
}

impl StripRegions for Command {
    fn strip_regions(&mut self) {
        self.region = Region::default();
        match &mut self.kind {
            CommandKind::Block { body, .. } => body.strip_regions(),
            CommandKind::For { bound, body, .. } => {
                bound.strip_regions();
                body.strip_regions();
            }
            CommandKind::Assign { value, .. } => value.strip_regions(),
            CommandKind::Inc { .. } | CommandKind::Dec { .. } => {}
            CommandKind::Call { callee, args, .. } => {
                callee.strip_regions();
                args.iter_mut().for_each(|a| a.strip_regions());
            }
            CommandKind::Label { body, .. } => body.strip_regions(),
            CommandKind::Jump { target, args, .. } => {
                target.strip_regions();
                args.iter_mut().for_each(|a| a.strip_regions());
            }
        }
    }
}

impl StripRegions for Sequence {
    fn strip_regions(&mut self) {
        match self {
            Sequence::Empty { region, .. } => *region = Region::default(),
            Sequence::Seq(c, rest) => {
                c.strip_regions();
                rest.strip_regions();
            }
            Sequence::Cst { value, rest, .. } | Sequence::Var { value, rest, .. } => {
                value.strip_regions();
                rest.strip_regions();
            }
            Sequence::Subst(s) => {
                s.just.strip_regions();
                s.body.strip_regions();
            }
        }
    }
}

impl StripRegions for Program {
    fn strip_regions(&mut self) {
        self.seq.strip_regions();
    }
}
