//! Tokenizer for source programs, annotated proof programs, and the
//! trailing obligation tables.
//!
//! Tokens are lossless: each one records the trivia (whitespace and `//`
//! comments) preceding it, so concatenating trivia and token texts
//! reproduces the input byte for byte.

use crate::ast::{Ident, Region};
use crate::diag::ParseError;
use num_bigint::BigUint;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(Ident),
    Number(BigUint),
    Keyword(Keyword),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Colon,
    Assign,  // :=
    Coerce,  // :>
    Eq,      // =
    Plus,
    Minus,
    Star,
    Tilde,
    Dollar,
    Slash,
    Hash,     // #
    Turnstile, // |-
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Cst,
    Var,
    Proc,
    In,
    Out,
    For,
    Until,
    Inc,
    Dec,
    Jump,
    With,
    Subst,
    At,
    By,
    Lemma,
    Nat,
}

impl Keyword {
    fn from_str(s: &str) -> Option<Keyword> {
        Some(match s {
            "cst" => Keyword::Cst,
            "var" => Keyword::Var,
            "proc" => Keyword::Proc,
            "in" => Keyword::In,
            "out" => Keyword::Out,
            "for" => Keyword::For,
            "until" => Keyword::Until,
            "inc" => Keyword::Inc,
            "dec" => Keyword::Dec,
            "jump" => Keyword::Jump,
            "with" => Keyword::With,
            "subst" => Keyword::Subst,
            "at" => Keyword::At,
            "by" => Keyword::By,
            "lemma" => Keyword::Lemma,
            "nat" => Keyword::Nat,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Exact source text of the token (empty for EOF).
    pub text: String,
    /// Whitespace and comments between the previous token and this one.
    pub trivia: String,
    pub region: Region,
}

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_continue(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

/// Tokenize `src`; `file` seeds every region.
pub fn lex(src: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor { src: src.as_bytes(), pos: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();
    loop {
        // Gather trivia: whitespace and line comments.
        let trivia_start = cur.pos;
        loop {
            match cur.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    cur.bump();
                }
                Some(b'/') if cur.peek2() == Some(b'/') => {
                    while let Some(c) = cur.peek() {
                        if c == b'\n' {
                            break;
                        }
                        cur.bump();
                    }
                }
                _ => break,
            }
        }
        let trivia = src[trivia_start..cur.pos].to_string();
        let (start_line, start_col) = cur.here();
        let tok_start = cur.pos;

        let Some(c) = cur.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                text: String::new(),
                trivia,
                region: Region {
                    file: file.to_string(),
                    start_line,
                    start_col,
                    end_line: start_line,
                    end_col: start_col,
                },
            });
            return Ok(tokens);
        };

        let kind = if is_ident_start(c) {
            while cur.peek().is_some_and(is_ident_continue) {
                cur.bump();
            }
            let name = &src[tok_start..cur.pos];
            // Optional disambiguator suffix: x'3 is the stamped rendering
            // of a freshened identifier.
            let mut stamp = 0u32;
            if cur.peek() == Some(b'\'') && cur.peek2().is_some_and(|d| d.is_ascii_digit()) {
                cur.bump();
                let digits_start = cur.pos;
                while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                    cur.bump();
                }
                stamp = src[digits_start..cur.pos].parse().map_err(|_| {
                    ParseError::new(
                        "identifier stamp out of range",
                        Region::point(file, start_line, start_col),
                    )
                })?;
            }
            match Keyword::from_str(name) {
                Some(kw) if stamp == 0 => TokenKind::Keyword(kw),
                _ => TokenKind::Ident(Ident::stamped(name, stamp)),
            }
        } else if c.is_ascii_digit() {
            while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                cur.bump();
            }
            let digits = &src[tok_start..cur.pos];
            TokenKind::Number(digits.parse::<BigUint>().expect("digit run parses"))
        } else {
            cur.bump();
            match c {
                b'{' => TokenKind::LBrace,
                b'}' => TokenKind::RBrace,
                b'(' => TokenKind::LParen,
                b')' => TokenKind::RParen,
                b'[' => TokenKind::LBracket,
                b']' => TokenKind::RBracket,
                b';' => TokenKind::Semi,
                b',' => TokenKind::Comma,
                b'=' => TokenKind::Eq,
                b'+' => TokenKind::Plus,
                b'-' => TokenKind::Minus,
                b'*' => TokenKind::Star,
                b'~' => TokenKind::Tilde,
                b'$' => TokenKind::Dollar,
                b'/' => TokenKind::Slash,
                b'#' => TokenKind::Hash,
                b':' => match cur.peek() {
                    Some(b'=') => {
                        cur.bump();
                        TokenKind::Assign
                    }
                    Some(b'>') => {
                        cur.bump();
                        TokenKind::Coerce
                    }
                    _ => TokenKind::Colon,
                },
                b'|' => {
                    if cur.peek() == Some(b'-') {
                        cur.bump();
                        TokenKind::Turnstile
                    } else {
                        return Err(ParseError::new(
                            "stray '|'; did you mean '|-'?",
                            Region::point(file, start_line, start_col),
                        ));
                    }
                }
                other => {
                    return Err(ParseError::new(
                        format!("unexpected character {:?}", other as char),
                        Region::point(file, start_line, start_col),
                    ));
                }
            }
        };

        let (end_line, end_col) = cur.here();
        tokens.push(Token {
            kind,
            text: src[tok_start..cur.pos].to_string(),
            trivia,
            region: Region {
                file: file.to_string(),
                start_line,
                start_col,
                end_line,
                end_col,
            },
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        lex(src, "t").unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn lexes_punctuation_and_compounds() {
        assert_eq!(
            kinds(":= :> : = |- #"),
            vec![
                TokenKind::Assign,
                TokenKind::Coerce,
                TokenKind::Colon,
                TokenKind::Eq,
                TokenKind::Turnstile,
                TokenKind::Hash,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn lexes_keywords_and_idents() {
        assert_eq!(
            kinds("cst p_add nat natx"),
            vec![
                TokenKind::Keyword(Keyword::Cst),
                TokenKind::Ident(Ident::new("p_add")),
                TokenKind::Keyword(Keyword::Nat),
                TokenKind::Ident(Ident::new("natx")),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn lexes_stamped_idents() {
        assert_eq!(
            kinds("var'1 x'12"),
            vec![
                TokenKind::Ident(Ident::stamped("var", 1)),
                TokenKind::Ident(Ident::stamped("x", 12)),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn tokens_are_lossless() {
        let src = "cst x = 3; // set up\n  var y := *;\n";
        let toks = lex(src, "t").unwrap();
        let rebuilt: String = toks.iter().map(|t| format!("{}{}", t.trivia, t.text)).collect();
        assert_eq!(rebuilt, src);
    }

    #[test]
    fn error_region_is_in_bounds() {
        let err = lex("cst ?", "t").unwrap_err();
        assert_eq!((err.region.start_line, err.region.start_col), (1, 5));
    }

    #[test]
    fn numbers_parse_arbitrary_precision() {
        let toks = lex("123456789012345678901234567890", "t").unwrap();
        match &toks[0].kind {
            TokenKind::Number(n) => {
                assert_eq!(n.to_string(), "123456789012345678901234567890");
            }
            other => panic!("unexpected token {other:?}"),
        }
    }
}
