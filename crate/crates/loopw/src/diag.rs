//! Diagnostics shared by the proof checker and the inference engine.

use crate::ast::{Formula, Region};
use std::fmt;

/// The fixed set of typing rules a checker diagnostic can cite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleName {
    Empty,
    Cst,
    Var,
    Block,
    Inc,
    Dec,
    Assign,
    For,
    Call,
    SubstI,
    SubstII,
    Label,
    Jump,
    Env,
    Star,
    Num,
    Proc,
    Lemma,
}

impl RuleName {
    pub const ALL: [RuleName; 18] = [
        RuleName::Empty,
        RuleName::Cst,
        RuleName::Var,
        RuleName::Block,
        RuleName::Inc,
        RuleName::Dec,
        RuleName::Assign,
        RuleName::For,
        RuleName::Call,
        RuleName::SubstI,
        RuleName::SubstII,
        RuleName::Label,
        RuleName::Jump,
        RuleName::Env,
        RuleName::Star,
        RuleName::Num,
        RuleName::Proc,
        RuleName::Lemma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleName::Empty => "T.EMPTY",
            RuleName::Cst => "T.CST",
            RuleName::Var => "T.VAR",
            RuleName::Block => "T.BLOCK",
            RuleName::Inc => "T.INC",
            RuleName::Dec => "T.DEC",
            RuleName::Assign => "T.ASSIGN",
            RuleName::For => "T.FOR",
            RuleName::Call => "T.CALL",
            RuleName::SubstI => "T.SUBST-I",
            RuleName::SubstII => "T.SUBST-II",
            RuleName::Label => "T.LABEL",
            RuleName::Jump => "T.JUMP",
            RuleName::Env => "T.ENV",
            RuleName::Star => "T.STAR",
            RuleName::Num => "T.NUM",
            RuleName::Proc => "T.PROC",
            RuleName::Lemma => "Lemma",
        }
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One failure report.  When a check fails the checker returns the whole
/// chain of rules it was inside, deepest first, so the head names the
/// actual offender and the tail gives the enclosing context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: RuleName,
    pub message: String,
    pub region: Region,
    pub expected: Option<Formula>,
    pub actual: Option<Formula>,
}

impl Diagnostic {
    pub fn new(rule: RuleName, message: impl Into<String>, region: Region) -> Diagnostic {
        Diagnostic { rule, message: message.into(), region, expected: None, actual: None }
    }

    pub fn with_types(mut self, expected: Formula, actual: Formula) -> Diagnostic {
        self.expected = Some(expected);
        self.actual = Some(actual);
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.region, self.rule, self.message)
    }
}

/// Parse failures: a message, the offending region, and the token classes
/// that would have been accepted at that point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub region: Region,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(message: impl Into<String>, region: Region) -> ParseError {
        ParseError { message: message.into(), region, expected: Vec::new() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: syntax error: {}", self.region, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// Inference failures: no typing rule applies to the program as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferError {
    pub message: String,
    pub region: Region,
}

impl InferError {
    pub fn new(message: impl Into<String>, region: Region) -> InferError {
        InferError { message: message.into(), region }
    }
}

impl fmt::Display for InferError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: inference: {}", self.region, self.message)
    }
}

impl std::error::Error for InferError {}
