//! A certification toolchain for LoopW, an imperative language with
//! higher-order procedural variables and non-local jumps, typed
//! dependently over Peano arithmetic.
//!
//! The pipeline: parse a partially annotated source program, infer a
//! fully annotated proof derivation together with its arithmetic
//! obligation table, check such derivations independently, translate
//! them into an annotated functional proof core, and check and evaluate
//! that core.

pub mod ast;
pub mod checker;
pub mod infer;
pub mod diag;
pub mod functional;
pub mod lexer;
pub mod obligations;
pub mod parser;
pub mod printer;
pub mod subst;

#[cfg(test)]
pub mod testdata;
