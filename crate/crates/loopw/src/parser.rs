//! Recursive-descent parser for source programs (partially annotated) and
//! proof programs (fully annotated, with witnesses and a trailing
//! obligation table).
//!
//! Both formats share one grammar; proof mode additionally requires
//! `(e : T)` wrappers on expressions, `with {i := t}` witness clauses,
//! coercion proofs `(e :> {i / T} by e' : T')`, and
//! `subst [..] at i by e { .. }` rewriting nodes, and it wraps the whole
//! program in `{ .. } outspec ;` followed by the numbered table.

use crate::ast::{
    CallOut, CoerceExpr, CoerceProof, Command, CommandKind, Env, Expr, ExprKind, Formula, Ident,
    OutSpec, ProcVal, Program, Region, SeqSubst, Sequence, Substitution, Term, mk_nat,
};
use crate::diag::ParseError;
use crate::lexer::{lex, Keyword, Token, TokenKind};
use crate::obligations::Obligation;
use num_traits::{ToPrimitive, Zero as _};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Source,
    Proof,
}

/// Parse a partially annotated source program (`.loop`).
pub fn parse_program(src: &str, file: &str) -> Result<Sequence, ParseError> {
    let toks = lex(src, file)?;
    let mut p = Parser { toks, pos: 0, mode: Mode::Source };
    let seq = p.sequence()?;
    p.expect_eof()?;
    Ok(seq)
}

/// Parse a fully annotated proof program (`.proof`) and its obligation
/// table.  Table ids must be dense from 1; every `#N` reference in the
/// program must point into the table.
pub fn parse_proof(src: &str, file: &str) -> Result<(Program, Vec<Obligation>), ParseError> {
    let toks = lex(src, file)?;
    let mut p = Parser { toks, pos: 0, mode: Mode::Proof };
    p.expect(&TokenKind::LBrace, "'{'")?;
    let seq = p.sequence()?;
    p.expect(&TokenKind::RBrace, "'}'")?;
    let spec = p.outspec()?;
    p.expect(&TokenKind::Semi, "';'")?;
    let obligations = p.table()?;
    p.expect_eof()?;
    let program = Program { seq, spec };
    validate_refs(&program, obligations.len() as u32)?;
    Ok((program, obligations))
}

/// Parse a standalone term (used by tests and tools).
pub fn parse_term_str(src: &str) -> Result<Term, ParseError> {
    let toks = lex(src, "<term>")?;
    let mut p = Parser { toks, pos: 0, mode: Mode::Source };
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parse a standalone formula (used by tests and tools).
pub fn parse_formula_str(src: &str) -> Result<Formula, ParseError> {
    let toks = lex(src, "<formula>")?;
    let mut p = Parser { toks, pos: 0, mode: Mode::Source };
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    mode: Mode,
}

impl Parser {
    fn k(&self) -> &TokenKind {
        &self.toks[self.pos].kind
    }

    fn k2(&self) -> &TokenKind {
        let i = (self.pos + 1).min(self.toks.len() - 1);
        &self.toks[i].kind
    }

    fn here(&self) -> Region {
        self.toks[self.pos].region.clone()
    }

    fn span_from(&self, start: usize) -> Region {
        let end = self.pos.saturating_sub(1).max(start);
        self.toks[start].region.merge(&self.toks[end].region)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, k: &TokenKind) -> bool {
        self.k() == k
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        matches!(self.k(), TokenKind::Keyword(k) if *k == kw)
    }

    fn eat(&mut self, k: &TokenKind) -> bool {
        if self.at(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn describe(&self) -> String {
        let t = &self.toks[self.pos];
        match &t.kind {
            TokenKind::Eof => "end of input".to_string(),
            _ => format!("'{}'", t.text),
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(msg, self.here())
    }

    fn err_expected(&self, expected: &[&str]) -> ParseError {
        let mut e = self.err(format!("unexpected {}", self.describe()));
        e.expected = expected.iter().map(|s| s.to_string()).collect();
        e
    }

    fn expect(&mut self, k: &TokenKind, what: &str) -> Result<Token, ParseError> {
        if self.at(k) {
            Ok(self.bump())
        } else {
            Err(self.err_expected(&[what]))
        }
    }

    fn expect_kw(&mut self, kw: Keyword, what: &str) -> Result<Token, ParseError> {
        if self.at_kw(kw) {
            Ok(self.bump())
        } else {
            Err(self.err_expected(&[what]))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if matches!(self.k(), TokenKind::Eof) {
            Ok(())
        } else {
            Err(self.err_expected(&["end of input"]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Ident, ParseError> {
        match self.k().clone() {
            TokenKind::Ident(id) => {
                self.bump();
                Ok(id)
            }
            _ => Err(self.err_expected(&[what])),
        }
    }

    // -- terms ------------------------------------------------------------

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.mul_term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                t = Term::add(t, self.mul_term()?);
            } else if self.eat(&TokenKind::Minus) {
                t = Term::sub(t, self.mul_term()?);
            } else {
                return Ok(t);
            }
        }
    }

    fn mul_term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.atom_term()?;
        while self.eat(&TokenKind::Star) {
            t = Term::mul(t, self.atom_term()?);
        }
        Ok(t)
    }

    fn atom_term(&mut self) -> Result<Term, ParseError> {
        match self.k().clone() {
            TokenKind::Number(q) => {
                self.bump();
                Ok(mk_nat(&q))
            }
            TokenKind::Ident(id) => {
                self.bump();
                if self.eat(&TokenKind::LParen) {
                    let mut args = vec![self.term()?];
                    while self.eat(&TokenKind::Comma) {
                        args.push(self.term()?);
                    }
                    self.expect(&TokenKind::RParen, "')'")?;
                    // `s` and `p` are the built-in successor and
                    // predecessor; all other applied names are
                    // uninterpreted function symbols.
                    match (id.name.as_str(), id.stamp, args.len()) {
                        ("s", 0, 1) => Ok(Term::succ(args.pop().expect("one argument"))),
                        ("p", 0, 1) => Ok(Term::pred(args.pop().expect("one argument"))),
                        ("s" | "p", 0, _) => {
                            Err(self.err(format!("'{}' takes exactly one argument", id.name)))
                        }
                        _ => Ok(Term::App(id, args)),
                    }
                } else {
                    Ok(Term::Var(id))
                }
            }
            TokenKind::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(&TokenKind::RParen, "')'")?;
                Ok(t)
            }
            _ => Err(self.err_expected(&["a term"])),
        }
    }

    // -- formulas ---------------------------------------------------------

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.k().clone() {
            TokenKind::Tilde => {
                self.bump();
                Ok(Formula::neg(self.formula()?))
            }
            TokenKind::Dollar => {
                self.bump();
                Ok(Formula::Bot)
            }
            TokenKind::Keyword(Keyword::Nat) => {
                self.bump();
                self.expect(&TokenKind::LParen, "'('")?;
                let t = self.term()?;
                self.expect(&TokenKind::RParen, "')'")?;
                Ok(Formula::Nat(t))
            }
            TokenKind::Keyword(Keyword::Proc) => {
                self.bump();
                let head = self.proc_head()?;
                Ok(Formula::Proc {
                    in_vars: head.in_vars,
                    in_types: head.params.into_iter().map(|(_, f)| f).collect(),
                    out_vars: head.out_vars,
                    out_types: head.rets.into_iter().map(|(_, f)| f).collect(),
                })
            }
            TokenKind::LParen => {
                self.bump();
                let lhs = self.term()?;
                self.expect(&TokenKind::Eq, "'='")?;
                let rhs = self.term()?;
                self.expect(&TokenKind::RParen, "')'")?;
                Ok(Formula::Equal(lhs, rhs))
            }
            TokenKind::Ident(id) => {
                self.bump();
                Ok(Formula::FVar(id))
            }
            _ => Err(self.err_expected(&["a type"])),
        }
    }

    // -- procedure heads (shared by types and values) ----------------------

    fn proc_head(&mut self) -> Result<ProcHead, ParseError> {
        self.expect(&TokenKind::LParen, "'('")?;
        let mut in_vars = Vec::new();
        let mut params = Vec::new();
        if self.at(&TokenKind::LBrace) {
            in_vars = self.brace_idents()?;
            self.expect_kw(Keyword::In, "'in'")?;
            params = self.proc_items(&TokenKind::Semi)?;
        } else if self.at_kw(Keyword::In) {
            self.bump();
            params = self.proc_items(&TokenKind::Semi)?;
        }
        self.expect(&TokenKind::Semi, "';'")?;
        let mut out_vars = Vec::new();
        if self.at(&TokenKind::LBrace) {
            out_vars = self.brace_idents()?;
        }
        self.expect_kw(Keyword::Out, "'out'")?;
        let rets = self.proc_items(&TokenKind::RParen)?;
        self.expect(&TokenKind::RParen, "')'")?;
        Ok(ProcHead { in_vars, params, out_vars, rets })
    }

    /// Comma-separated `X : T` or bare `T` entries, up to (not including)
    /// the given closer.
    fn proc_items(
        &mut self,
        closer: &TokenKind,
    ) -> Result<Vec<(Option<Ident>, Formula)>, ParseError> {
        let mut items = Vec::new();
        if self.at(closer) {
            return Ok(items);
        }
        loop {
            let named = matches!(self.k(), TokenKind::Ident(_)) && self.k2() == &TokenKind::Colon;
            if named {
                let name = self.ident("a name")?;
                self.expect(&TokenKind::Colon, "':'")?;
                items.push((Some(name), self.formula()?));
            } else {
                items.push((None, self.formula()?));
            }
            if !self.eat(&TokenKind::Comma) {
                return Ok(items);
            }
        }
    }

    fn brace_idents(&mut self) -> Result<Vec<Ident>, ParseError> {
        self.expect(&TokenKind::LBrace, "'{'")?;
        let mut ids = Vec::new();
        if !self.at(&TokenKind::RBrace) {
            ids.push(self.ident("a term variable")?);
            while self.eat(&TokenKind::Comma) {
                ids.push(self.ident("a term variable")?);
            }
        }
        self.expect(&TokenKind::RBrace, "'}'")?;
        Ok(ids)
    }

    /// A procedure value: head with named parameters, then `{ body }`.
    fn proc_val(&mut self, start: usize) -> Result<Expr, ParseError> {
        let head = self.proc_head()?;
        self.expect(&TokenKind::LBrace, "'{'")?;
        let body = self.sequence()?;
        self.expect(&TokenKind::RBrace, "'}'")?;
        let name_all = |items: Vec<(Option<Ident>, Formula)>,
                        what: &str|
         -> Result<Vec<(Ident, Formula)>, ParseError> {
            items
                .into_iter()
                .map(|(n, f)| {
                    n.map(|n| (n, f)).ok_or_else(|| {
                        ParseError::new(
                            format!("procedure value {what} must be named"),
                            self.span_from(start),
                        )
                    })
                })
                .collect()
        };
        let pv = ProcVal {
            in_vars: head.in_vars,
            params: name_all(head.params, "parameters")?,
            out_vars: head.out_vars,
            rets: name_all(head.rets, "out variables")?,
            body,
        };
        let anno = pv.formula();
        Ok(Expr {
            kind: ExprKind::ProcVal(Box::new(pv)),
            anno: Some(anno),
            region: self.span_from(start),
        })
    }

    // -- expressions ------------------------------------------------------

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.mode {
            Mode::Source => self.src_expr(),
            Mode::Proof => self.pexpr(),
        }
    }

    fn src_expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut e = self.src_prim()?;
        while self.eat(&TokenKind::Coerce) {
            let target = self.formula()?;
            e = Expr {
                kind: ExprKind::Coerce(Box::new(CoerceExpr { inner: e, proof: None })),
                anno: Some(target),
                region: self.span_from(start),
            };
        }
        Ok(e)
    }

    fn src_prim(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        match self.k().clone() {
            TokenKind::Number(q) => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::Num(q),
                    anno: None,
                    region: self.span_from(start),
                })
            }
            TokenKind::Star => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::Star { ob: None },
                    anno: None,
                    region: self.span_from(start),
                })
            }
            TokenKind::Ident(id) => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::Id(id),
                    anno: None,
                    region: self.span_from(start),
                })
            }
            TokenKind::Keyword(Keyword::Proc) => {
                self.bump();
                self.proc_val(start)
            }
            TokenKind::Keyword(Keyword::Lemma) => {
                self.bump();
                self.lemma_tail(start)
            }
            TokenKind::LParen => {
                self.bump();
                let e = self.src_expr()?;
                self.expect(&TokenKind::RParen, "')'")?;
                Ok(e)
            }
            _ => Err(self.err_expected(&["an expression"])),
        }
    }

    fn lemma_tail(&mut self, start: usize) -> Result<Expr, ParseError> {
        self.expect(&TokenKind::LParen, "'('")?;
        let mut hyps = Vec::new();
        if !self.at(&TokenKind::Turnstile) {
            hyps.push(self.formula()?);
            while self.eat(&TokenKind::Comma) {
                hyps.push(self.formula()?);
            }
        }
        self.expect(&TokenKind::Turnstile, "'|-'")?;
        let concl = self.formula()?;
        self.expect(&TokenKind::RParen, "')'")?;
        let anno = concl.clone();
        Ok(Expr {
            kind: ExprKind::Lemma { hyps, concl },
            anno: Some(anno),
            region: self.span_from(start),
        })
    }

    /// Proof-mode expression: `(atom : T)`, `(e :> {i / T} by e' : T')`,
    /// or a procedure value (whose annotation is derived).
    fn pexpr(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        if self.at_kw(Keyword::Proc) {
            self.bump();
            return self.proc_val(start);
        }
        self.expect(&TokenKind::LParen, "'('")?;
        if self.at(&TokenKind::LParen) || self.at_kw(Keyword::Proc) {
            // Coercion: the inner expression is itself fully annotated.
            let inner = self.pexpr()?;
            self.expect(&TokenKind::Coerce, "':>'")?;
            self.expect(&TokenKind::LBrace, "'{'")?;
            let hole = self.ident("the context hole variable")?;
            self.expect(&TokenKind::Slash, "'/'")?;
            let context = self.formula()?;
            self.expect(&TokenKind::RBrace, "'}'")?;
            self.expect_kw(Keyword::By, "'by'")?;
            let just = self.pexpr()?;
            self.expect(&TokenKind::Colon, "':'")?;
            let target = self.formula()?;
            self.expect(&TokenKind::RParen, "')'")?;
            return Ok(Expr {
                kind: ExprKind::Coerce(Box::new(CoerceExpr {
                    inner,
                    proof: Some(CoerceProof { hole, context, just }),
                })),
                anno: Some(target),
                region: self.span_from(start),
            });
        }
        let kind = match self.k().clone() {
            TokenKind::Number(q) => {
                self.bump();
                ExprKind::Num(q)
            }
            TokenKind::Star => {
                self.bump();
                let ob = if self.eat(&TokenKind::Hash) {
                    let tok = self.bump();
                    match tok.kind {
                        TokenKind::Number(n) => Some(n.to_u32().ok_or_else(|| {
                            ParseError::new("obligation reference out of range", tok.region)
                        })?),
                        _ => {
                            return Err(ParseError::new(
                                "expected an obligation number after '#'",
                                tok.region,
                            ))
                        }
                    }
                } else {
                    None
                };
                ExprKind::Star { ob }
            }
            TokenKind::Ident(id) => {
                self.bump();
                ExprKind::Id(id)
            }
            TokenKind::Keyword(Keyword::Lemma) => {
                self.bump();
                let e = self.lemma_tail(start)?;
                self.expect(&TokenKind::Colon, "':'")?;
                let anno = self.formula()?;
                self.expect(&TokenKind::RParen, "')'")?;
                return Ok(Expr { anno: Some(anno), region: self.span_from(start), ..e });
            }
            _ => return Err(self.err_expected(&["an expression"])),
        };
        self.expect(&TokenKind::Colon, "':'")?;
        let anno = self.formula()?;
        self.expect(&TokenKind::RParen, "')'")?;
        Ok(Expr { kind, anno: Some(anno), region: self.span_from(start) })
    }

    // -- sequences and commands -------------------------------------------

    fn sequence(&mut self) -> Result<Sequence, ParseError> {
        let empty_witness = || match self.mode {
            Mode::Source => None,
            Mode::Proof => Some(Substitution::new()),
        };
        match self.k().clone() {
            TokenKind::RBrace | TokenKind::Eof => Ok(Sequence::Empty {
                witness: empty_witness(),
                region: self.here(),
            }),
            TokenKind::Keyword(Keyword::Cst) => {
                self.bump();
                let name = self.ident("a constant name")?;
                self.expect(&TokenKind::Eq, "'='")?;
                let value = self.expr()?;
                self.expect(&TokenKind::Semi, "';'")?;
                let rest = self.sequence()?;
                Ok(Sequence::Cst { name, value, rest: Box::new(rest) })
            }
            TokenKind::Keyword(Keyword::Var) => {
                self.bump();
                let name = self.ident("a variable name")?;
                self.expect(&TokenKind::Assign, "':='")?;
                let value = self.expr()?;
                self.expect(&TokenKind::Semi, "';'")?;
                let rest = self.sequence()?;
                Ok(Sequence::Var { name, value, rest: Box::new(rest) })
            }
            TokenKind::Keyword(Keyword::With) => {
                let start = self.pos;
                if self.mode == Mode::Source {
                    return Err(self.err("witness clauses belong to proof programs"));
                }
                self.bump();
                let witness = self.witness_braces()?;
                self.expect(&TokenKind::Semi, "';'")?;
                if !matches!(self.k(), TokenKind::RBrace | TokenKind::Eof) {
                    return Err(self.err("no statement may follow a witness terminator"));
                }
                Ok(Sequence::Empty { witness: Some(witness), region: self.span_from(start) })
            }
            TokenKind::Keyword(Keyword::Subst) => {
                if self.mode == Mode::Source {
                    return Err(self.err("subst nodes belong to proof programs"));
                }
                self.bump();
                self.expect(&TokenKind::LBracket, "'['")?;
                let context = Env(self.env_items()?);
                self.expect(&TokenKind::RBracket, "']'")?;
                self.expect_kw(Keyword::At, "'at'")?;
                let hole = self.ident("the context hole variable")?;
                self.expect_kw(Keyword::By, "'by'")?;
                let just = self.pexpr()?;
                self.expect(&TokenKind::LBrace, "'{'")?;
                let body = self.sequence()?;
                self.expect(&TokenKind::RBrace, "'}'")?;
                if !matches!(self.k(), TokenKind::RBrace | TokenKind::Eof) {
                    return Err(self.err("no statement may follow a subst node"));
                }
                Ok(Sequence::Subst(Box::new(SeqSubst { context, hole, just, body })))
            }
            _ => {
                let c = self.command()?;
                let rest = self.sequence()?;
                Ok(Sequence::Seq(Box::new(c), Box::new(rest)))
            }
        }
    }

    fn command(&mut self) -> Result<Command, ParseError> {
        let start = self.pos;
        let kind = match self.k().clone() {
            TokenKind::LBrace => {
                self.bump();
                let body = self.sequence()?;
                self.expect(&TokenKind::RBrace, "'}'")?;
                let spec = self.outspec()?;
                self.expect(&TokenKind::Semi, "';'")?;
                CommandKind::Block { body, spec }
            }
            TokenKind::Keyword(Keyword::For) => {
                self.bump();
                let counter = self.ident("the loop counter")?;
                let lid = if self.eat(&TokenKind::LBracket) {
                    let lid = self.ident("the logical index variable")?;
                    self.expect(&TokenKind::RBracket, "']'")?;
                    lid
                } else {
                    counter.clone()
                };
                self.expect(&TokenKind::Assign, "':='")?;
                let zero = self.bump();
                match zero.kind {
                    TokenKind::Number(ref q) if q.is_zero() => {}
                    _ => return Err(ParseError::new("loops start at 0", zero.region)),
                }
                self.expect_kw(Keyword::Until, "'until'")?;
                let bound = self.expr()?;
                self.expect(&TokenKind::LBrace, "'{'")?;
                let body = self.sequence()?;
                self.expect(&TokenKind::RBrace, "'}'")?;
                let spec = self.outspec()?;
                self.expect(&TokenKind::Semi, "';'")?;
                CommandKind::For { counter, lid, bound, body: Box::new(body), spec }
            }
            TokenKind::Keyword(kw @ (Keyword::Inc | Keyword::Dec)) => {
                self.bump();
                self.expect(&TokenKind::LParen, "'('")?;
                let var = self.ident("a variable")?;
                let anno = if self.mode == Mode::Proof {
                    self.expect(&TokenKind::Colon, "':'")?;
                    Some(self.formula()?)
                } else {
                    None
                };
                self.expect(&TokenKind::RParen, "')'")?;
                self.expect(&TokenKind::Semi, "';'")?;
                if kw == Keyword::Inc {
                    CommandKind::Inc { var, anno }
                } else {
                    CommandKind::Dec { var, anno }
                }
            }
            TokenKind::Keyword(Keyword::Jump) => {
                self.bump();
                self.expect(&TokenKind::LParen, "'('")?;
                let target = self.expr()?;
                let mut args = Vec::new();
                while self.eat(&TokenKind::Comma) {
                    args.push(self.expr()?);
                }
                self.expect(&TokenKind::RParen, "')'")?;
                let env = Env(self.env_items()?);
                let witness = self.opt_witness()?;
                self.expect(&TokenKind::Semi, "';'")?;
                CommandKind::Jump { target, args, env, witness }
            }
            TokenKind::Ident(name) if self.k2() == &TokenKind::Assign => {
                self.bump();
                self.bump();
                let value = self.expr()?;
                self.expect(&TokenKind::Semi, "';'")?;
                CommandKind::Assign { target: name, value }
            }
            TokenKind::Ident(name) if self.k2() == &TokenKind::Colon => {
                self.bump();
                self.bump();
                self.expect(&TokenKind::LBrace, "'{'")?;
                let body = self.sequence()?;
                self.expect(&TokenKind::RBrace, "'}'")?;
                let spec = self.outspec()?;
                self.expect(&TokenKind::Semi, "';'")?;
                CommandKind::Label { name, body, spec }
            }
            TokenKind::Ident(name) if self.k2() == &TokenKind::LParen => {
                if self.mode == Mode::Proof {
                    return Err(self.err("call target must carry its procedure type"));
                }
                let estart = self.pos;
                self.bump();
                let callee = Expr {
                    kind: ExprKind::Id(name),
                    anno: None,
                    region: self.span_from(estart),
                };
                self.call_tail(callee)?
            }
            TokenKind::LParen | TokenKind::Keyword(Keyword::Proc) => {
                let callee = self.expr()?;
                self.call_tail(callee)?
            }
            _ => {
                return Err(self.err_expected(&[
                    "a command",
                    "'cst'",
                    "'var'",
                    "'}'",
                ]))
            }
        };
        Ok(Command { kind, region: self.span_from(start) })
    }

    fn call_tail(&mut self, callee: Expr) -> Result<CommandKind, ParseError> {
        self.expect(&TokenKind::LParen, "'('")?;
        let mut args = Vec::new();
        if !self.at(&TokenKind::Semi) {
            args.push(self.expr()?);
            while self.eat(&TokenKind::Comma) {
                args.push(self.expr()?);
            }
        }
        self.expect(&TokenKind::Semi, "';'")?;
        let mut outs = Vec::new();
        if !self.at(&TokenKind::RParen) {
            outs.push(self.call_out()?);
            while self.eat(&TokenKind::Comma) {
                outs.push(self.call_out()?);
            }
        }
        self.expect(&TokenKind::RParen, "')'")?;
        let witness = self.opt_witness()?;
        self.expect(&TokenKind::Semi, "';'")?;
        Ok(CommandKind::Call { callee, args, outs, witness })
    }

    fn call_out(&mut self) -> Result<CallOut, ParseError> {
        let name = self.ident("an out variable")?;
        let anno = if self.mode == Mode::Proof {
            self.expect(&TokenKind::Colon, "':'")?;
            Some(self.formula()?)
        } else {
            None
        };
        Ok(CallOut { name, anno })
    }

    /// `with { i := t, ... }` on calls and jumps; in proof mode an absent
    /// clause means the empty witness.
    fn opt_witness(&mut self) -> Result<Option<Substitution>, ParseError> {
        if self.at_kw(Keyword::With) {
            if self.mode == Mode::Source {
                return Err(self.err("witness clauses belong to proof programs"));
            }
            self.bump();
            Ok(Some(self.witness_braces()?))
        } else {
            Ok(match self.mode {
                Mode::Source => None,
                Mode::Proof => Some(Substitution::new()),
            })
        }
    }

    fn witness_braces(&mut self) -> Result<Substitution, ParseError> {
        self.expect(&TokenKind::LBrace, "'{'")?;
        let mut subst = Substitution::new();
        if !self.at(&TokenKind::RBrace) {
            loop {
                let key = self.ident("a bound term variable")?;
                self.expect(&TokenKind::Assign, "':='")?;
                let t = self.term()?;
                subst.0.push((key, t));
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(&TokenKind::RBrace, "'}'")?;
        Ok(subst)
    }

    /// `{j, ...}` existentials (optional) followed by `X:T, ...` (possibly
    /// empty).
    fn outspec(&mut self) -> Result<OutSpec, ParseError> {
        let exist = if self.at(&TokenKind::LBrace) {
            self.brace_idents()?
        } else {
            Vec::new()
        };
        Ok(OutSpec { exist, env: Env(self.env_items()?) })
    }

    fn env_items(&mut self) -> Result<Vec<(Ident, Formula)>, ParseError> {
        let mut items = Vec::new();
        if matches!(self.k(), TokenKind::Ident(_)) && self.k2() == &TokenKind::Colon {
            loop {
                let name = self.ident("a variable")?;
                self.expect(&TokenKind::Colon, "':'")?;
                items.push((name, self.formula()?));
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        Ok(items)
    }

    // -- the trailing obligation table ------------------------------------

    fn table(&mut self) -> Result<Vec<Obligation>, ParseError> {
        let mut obs = Vec::new();
        while let TokenKind::Number(q) = self.k().clone() {
            let tok = self.bump();
            let id = q
                .to_u32()
                .ok_or_else(|| ParseError::new("obligation id out of range", tok.region.clone()))?;
            if id != obs.len() as u32 + 1 {
                return Err(ParseError::new(
                    format!("obligation ids must be dense from 1; found {id}"),
                    tok.region,
                ));
            }
            self.expect(&TokenKind::Colon, "':'")?;
            self.expect(&TokenKind::Turnstile, "'|-'")?;
            match self.formula()? {
                Formula::Equal(lhs, rhs) => obs.push(Obligation::new(id, lhs, rhs)),
                _ => return Err(self.err("obligations are term equalities")),
            }
        }
        Ok(obs)
    }
}

struct ProcHead {
    in_vars: Vec<Ident>,
    params: Vec<(Option<Ident>, Formula)>,
    out_vars: Vec<Ident>,
    rets: Vec<(Option<Ident>, Formula)>,
}

// ---------------------------------------------------------------------------
// Obligation-reference validation for proof files.

fn validate_refs(p: &Program, table_len: u32) -> Result<(), ParseError> {
    let mut refs: Vec<(u32, Region)> = Vec::new();
    refs_in_sequence(&p.seq, &mut refs);
    for (n, region) in refs {
        if n == 0 || n > table_len {
            return Err(ParseError::new(
                format!("obligation #{n} is not in the table (1..={table_len})"),
                region,
            ));
        }
    }
    Ok(())
}

fn refs_in_sequence(s: &Sequence, out: &mut Vec<(u32, Region)>) {
    match s {
        Sequence::Empty { .. } => {}
        Sequence::Seq(c, rest) => {
            refs_in_command(c, out);
            refs_in_sequence(rest, out);
        }
        Sequence::Cst { value, rest, .. } | Sequence::Var { value, rest, .. } => {
            refs_in_expr(value, out);
            refs_in_sequence(rest, out);
        }
        Sequence::Subst(ss) => {
            refs_in_expr(&ss.just, out);
            refs_in_sequence(&ss.body, out);
        }
    }
}

fn refs_in_command(c: &Command, out: &mut Vec<(u32, Region)>) {
    match &c.kind {
        CommandKind::Block { body, .. } | CommandKind::Label { body, .. } => {
            refs_in_sequence(body, out)
        }
        CommandKind::For { bound, body, .. } => {
            refs_in_expr(bound, out);
            refs_in_sequence(body, out);
        }
        CommandKind::Assign { value, .. } => refs_in_expr(value, out),
        CommandKind::Inc { .. } | CommandKind::Dec { .. } => {}
        CommandKind::Call { callee, args, .. } => {
            refs_in_expr(callee, out);
            args.iter().for_each(|a| refs_in_expr(a, out));
        }
        CommandKind::Jump { target, args, .. } => {
            refs_in_expr(target, out);
            args.iter().for_each(|a| refs_in_expr(a, out));
        }
    }
}

fn refs_in_expr(e: &Expr, out: &mut Vec<(u32, Region)>) {
    match &e.kind {
        ExprKind::Star { ob: Some(n) } => out.push((*n, e.region.clone())),
        ExprKind::Star { ob: None } | ExprKind::Id(_) | ExprKind::Num(_) | ExprKind::Lemma { .. } => {}
        ExprKind::ProcVal(pv) => refs_in_sequence(&pv.body, out),
        ExprKind::Coerce(ce) => {
            refs_in_expr(&ce.inner, out);
            if let Some(proof) = &ce.proof {
                refs_in_expr(&proof.just, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn terms_parse_with_precedence() {
        assert_eq!(
            parse_term_str("x + y * z - w").unwrap(),
            Term::sub(Term::add(v("x"), Term::mul(v("y"), v("z"))), v("w"))
        );
        assert_eq!(
            parse_term_str("(x + y) * z").unwrap(),
            Term::mul(Term::add(v("x"), v("y")), v("z"))
        );
    }

    #[test]
    fn builtin_and_uninterpreted_applications() {
        assert_eq!(parse_term_str("s(p(x))").unwrap(), Term::succ(Term::pred(v("x"))));
        assert_eq!(
            parse_term_str("a(s(i), 0)").unwrap(),
            Term::app("a", vec![Term::succ(v("i")), Term::Zero])
        );
        assert!(parse_term_str("s(x, y)").is_err());
    }

    #[test]
    fn numerals_become_towers() {
        assert_eq!(parse_term_str("3").unwrap(), mk_nat(&3u32.into()));
        assert_eq!(
            parse_term_str("3 + 5").unwrap(),
            Term::add(mk_nat(&3u32.into()), mk_nat(&5u32.into()))
        );
    }

    #[test]
    fn formulas_parse() {
        assert_eq!(parse_formula_str("$").unwrap(), Formula::Bot);
        assert_eq!(
            parse_formula_str("(0 = 0)").unwrap(),
            Formula::equal(Term::Zero, Term::Zero)
        );
        assert_eq!(
            parse_formula_str("nat((x + 0))").unwrap(),
            Formula::nat(Term::add(v("x"), Term::Zero))
        );
        assert_eq!(parse_formula_str("F").unwrap(), Formula::FVar(Ident::new("F")));
        assert_eq!(
            parse_formula_str("~~F").unwrap(),
            Formula::neg(Formula::neg(Formula::FVar(Ident::new("F"))))
        );
    }

    #[test]
    fn proc_types_parse_in_all_shapes() {
        let f = parse_formula_str("proc({x, y} in nat(x), nat(y); out nat((x + y)))").unwrap();
        assert_eq!(
            f,
            Formula::Proc {
                in_vars: vec![Ident::new("x"), Ident::new("y")],
                in_types: vec![Formula::nat(v("x")), Formula::nat(v("y"))],
                out_vars: vec![],
                out_types: vec![Formula::nat(Term::add(v("x"), v("y")))],
            }
        );
        // No in-section at all, existential outs.
        let g = parse_formula_str("proc(; {x} out nat(x), F)").unwrap();
        assert_eq!(
            g,
            Formula::Proc {
                in_vars: vec![],
                in_types: vec![],
                out_vars: vec![Ident::new("x")],
                out_types: vec![Formula::nat(v("x")), Formula::FVar(Ident::new("F"))],
            }
        );
        // Empty out-binder braces are accepted.
        let h = parse_formula_str("proc ({y} in nat(y); {} out nat(a(i,y)))").unwrap();
        match h {
            Formula::Proc { out_vars, .. } => assert!(out_vars.is_empty()),
            other => panic!("unexpected shape: {other:?}"),
        }
        // Named items in type position are tolerated; names are dropped.
        let k = parse_formula_str("proc(in K : ~~F; out Z : F)").unwrap();
        assert_eq!(
            k,
            Formula::Proc {
                in_vars: vec![],
                in_types: vec![Formula::neg(Formula::neg(Formula::FVar(Ident::new("F"))))],
                out_vars: vec![],
                out_types: vec![Formula::FVar(Ident::new("F"))],
            }
        );
    }

    #[test]
    fn negation_desugars_via_proc() {
        assert_eq!(
            parse_formula_str("~nat(x)").unwrap(),
            parse_formula_str("proc(in nat(x); out $)").unwrap()
        );
    }

    #[test]
    fn add_source_program_structure() {
        let src = r#"
cst p_add = proc({x, y} in X:nat(x), Y:nat(y); out Z:nat(x + y)) {
    Z := X :> nat(x + 0);
    for i := 0 until Y {
        inc(Z);
    }Z:nat(x + i);
};
var N := *;
p_add(3, 5; N);
"#;
        let seq = parse_program(src, "add.loop").unwrap();
        let Sequence::Cst { name, value, rest } = seq else {
            panic!("expected cst at head");
        };
        assert_eq!(name, Ident::new("p_add"));
        let ExprKind::ProcVal(pv) = &value.kind else { panic!("expected proc value") };
        assert_eq!(pv.in_vars, vec![Ident::new("x"), Ident::new("y")]);
        assert_eq!(pv.params.len(), 2);
        assert_eq!(pv.rets.len(), 1);
        // Body: assign with coerce, then for, then end.
        let Sequence::Seq(assign, after) = &pv.body else { panic!("expected assign") };
        match &assign.kind {
            CommandKind::Assign { target, value } => {
                assert_eq!(*target, Ident::new("Z"));
                assert!(matches!(value.kind, ExprKind::Coerce(_)));
                assert_eq!(value.anno, Some(Formula::nat(Term::add(v("x"), Term::Zero))));
            }
            other => panic!("unexpected command: {other:?}"),
        }
        let Sequence::Seq(for_cmd, _) = &**after else { panic!("expected for") };
        match &for_cmd.kind {
            CommandKind::For { counter, lid, spec, .. } => {
                assert_eq!(*counter, Ident::new("i"));
                assert_eq!(*lid, Ident::new("i"));
                assert!(spec.exist.is_empty());
                assert_eq!(
                    spec.env.get(&Ident::new("Z")),
                    Some(&Formula::nat(Term::add(v("x"), v("i"))))
                );
            }
            other => panic!("unexpected command: {other:?}"),
        }
        // var N := *; then the call.
        let Sequence::Var { name, value, rest } = *rest else { panic!("expected var") };
        assert_eq!(name, Ident::new("N"));
        assert!(matches!(value.kind, ExprKind::Star { ob: None }));
        let Sequence::Seq(call, _) = *rest else { panic!("expected call") };
        match call.kind {
            CommandKind::Call { args, outs, witness, .. } => {
                assert_eq!(args.len(), 2);
                assert_eq!(outs.len(), 1);
                assert_eq!(outs[0].name, Ident::new("N"));
                assert!(witness.is_none());
            }
            other => panic!("unexpected command: {other:?}"),
        }
    }

    #[test]
    fn empty_program_parses_to_empty_sequence() {
        let seq = parse_program("", "e.loop").unwrap();
        assert!(matches!(seq, Sequence::Empty { witness: None, .. }));
    }

    #[test]
    fn labels_and_jumps_parse() {
        let src = r#"
K2: {
    jump(K, K2)Z:F;
}Z:F;
"#;
        let seq = parse_program(src, "t.loop").unwrap();
        let Sequence::Seq(label, _) = seq else { panic!("expected label") };
        let CommandKind::Label { name, body, spec } = &label.kind else {
            panic!("expected label, got {:?}", label.kind)
        };
        assert_eq!(*name, Ident::new("K2"));
        assert_eq!(spec.env.keys(), vec![Ident::new("Z")]);
        let Sequence::Seq(jump, _) = body else { panic!("expected jump") };
        match &jump.kind {
            CommandKind::Jump { target, args, env, witness } => {
                assert!(matches!(&target.kind, ExprKind::Id(i) if *i == Ident::new("K")));
                assert_eq!(args.len(), 1);
                assert_eq!(env.keys(), vec![Ident::new("Z")]);
                assert!(witness.is_none());
            }
            other => panic!("unexpected command: {other:?}"),
        }
    }

    #[test]
    fn existential_outspec_on_label() {
        let src = "k: {\n}{u}r:nat(u), mk:~nat(F32(u));\n";
        let seq = parse_program(src, "t.loop").unwrap();
        let Sequence::Seq(label, _) = seq else { panic!("expected label") };
        let CommandKind::Label { spec, .. } = &label.kind else { panic!("expected label") };
        assert_eq!(spec.exist, vec![Ident::new("u")]);
        assert_eq!(spec.env.keys(), vec![Ident::new("r"), Ident::new("mk")]);
    }

    #[test]
    fn proof_mode_roundtrip_pieces() {
        let src = r#"{
    var N := (* : (0 = 0));
    N := ((N : (0 = 0)) :> {var'1 / nat(var'1)} by (*#1 : (0 = s(0))) : nat(s(0)));
    with {};
};
1: |- (0 = s(0))
"#;
        let (prog, obs) = parse_proof(src, "t.proof").unwrap();
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].lhs, Term::Zero);
        assert_eq!(obs[0].rhs, Term::succ(Term::Zero));
        let Sequence::Var { value, rest, .. } = prog.seq else { panic!("expected var") };
        assert_eq!(value.anno, Some(Formula::top()));
        let Sequence::Seq(assign, _) = *rest else { panic!("expected assign") };
        let CommandKind::Assign { value, .. } = assign.kind else { panic!("expected assign") };
        let ExprKind::Coerce(ce) = value.kind else { panic!("expected coercion") };
        let proof = ce.proof.expect("coercion proof present");
        assert_eq!(proof.hole, Ident::stamped("var", 1));
        assert!(matches!(proof.just.kind, ExprKind::Star { ob: Some(1) }));
    }

    #[test]
    fn proof_mode_rejects_dangling_obligation_refs() {
        let src = "{\n    var N := (*#3 : (0 = 0));\n};\n1: |- (0 = 0)\n";
        let err = parse_proof(src, "t.proof").unwrap_err();
        assert!(err.message.contains("#3"), "got: {}", err.message);
    }

    #[test]
    fn proof_table_ids_must_be_dense() {
        let src = "{\n};\n2: |- (0 = 0)\n";
        let err = parse_proof(src, "t.proof").unwrap_err();
        assert!(err.message.contains("dense"), "got: {}", err.message);
    }

    #[test]
    fn source_mode_rejects_proof_artifacts() {
        assert!(parse_program("with {};", "t.loop").is_err());
        assert!(parse_program("p(3; N) with {x := 0};", "t.loop").is_err());
    }

    #[test]
    fn missing_annotation_in_proof_mode_is_an_error() {
        // inc without its current type.
        let err = parse_proof("{\n    inc(Z);\n};\n", "t.proof").unwrap_err();
        assert!(!err.expected.is_empty());
        // bare identifier expression.
        assert!(parse_proof("{\n    var N := Z;\n};\n", "t.proof").is_err());
    }

    #[test]
    fn parse_errors_carry_in_bounds_regions() {
        let src = "cst p_add = ;\n";
        let err = parse_program(src, "t.loop").unwrap_err();
        assert_eq!(err.region.start_line, 1);
        assert!(err.region.start_col <= src.len() as u32);
    }

    #[test]
    fn call_with_empty_args_parses() {
        let seq = parse_program("q(; X);", "t.loop").unwrap();
        let Sequence::Seq(call, _) = seq else { panic!("expected call") };
        match &call.kind {
            CommandKind::Call { args, outs, .. } => {
                assert!(args.is_empty());
                assert_eq!(outs.len(), 1);
            }
            other => panic!("unexpected command: {other:?}"),
        }
    }

    #[test]
    fn for_requires_zero_start() {
        let err = parse_program("for i := 1 until Y {\n}Z:F;\n", "t.loop").unwrap_err();
        assert!(err.message.contains("start at 0"));
    }

    #[test]
    fn for_with_explicit_logical_index() {
        let seq = parse_program("for i[i'1] := 0 until Y {\n}Z:nat(i'1);\n", "t.loop").unwrap();
        let Sequence::Seq(cmd, _) = seq else { panic!("expected for") };
        let CommandKind::For { counter, lid, .. } = &cmd.kind else { panic!("expected for") };
        assert_eq!(*counter, Ident::new("i"));
        assert_eq!(*lid, Ident::stamped("i", 1));
    }

    #[test]
    fn shift_reset_sized_listing_parses() {
        let src = r#"
cst reset2 = proc ({x} in p : proc(in ~nat(F32(x)); out H,~H), mk2 : ~A;
                   out r : nat(F32(x)), mk : ~A) {
    mk := mk2;
    k: {
        cst m = mk;
        mk := proc (in r : nat(F32(x)); out Z : $) {
            jump(k, r, m)Z:$;
        };
        var y := *;
        p(mk; y, mk);
        jump(mk, y)r:nat(F32(x)), mk:~A;
    }r:nat(F32(x)), mk:~A;
};
"#;
        let seq = parse_program(src, "t.loop").unwrap();
        let Sequence::Cst { value, .. } = seq else { panic!("expected cst") };
        let ExprKind::ProcVal(pv) = &value.kind else { panic!("expected proc value") };
        assert_eq!(pv.params.len(), 2);
        assert_eq!(pv.rets.len(), 2);
    }
}
