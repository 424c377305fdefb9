//! Tokenizer for Solidity source text.
//!
//! Keywords are lexed as identifiers; the parser decides what they mean.
//! This keeps builtins such as `selfdestruct` and `suicide` visible as plain
//! identifiers regardless of compiler dialect.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    /// Decimal, hex, or dotted numeric literal (`0.8.0` inside pragmas).
    Number,
    /// String literal; `text` holds the unquoted contents. Also used for
    /// `hex"..."` and `unicode"..."`.
    String,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Byte offsets into the source.
    pub start: usize,
    pub end: usize,
    /// 1-based.
    pub line: usize,
    pub column: usize,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.kind != TokenKind::String && self.text == text
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Identifier
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("{line}:{column}: unterminated string literal")]
    UnterminatedString { line: usize, column: usize },
    #[error("{line}:{column}: unterminated block comment")]
    UnterminatedComment { line: usize, column: usize },
    #[error("{line}:{column}: illegal character {ch:?}")]
    IllegalCharacter { ch: char, line: usize, column: usize },
}

impl LexError {
    pub fn position(&self) -> (usize, usize) {
        match *self {
            LexError::UnterminatedString { line, column }
            | LexError::UnterminatedComment { line, column }
            | LexError::IllegalCharacter { line, column, .. } => (line, column),
        }
    }
}

// Longest first.
const PUNCTUATORS: &[&str] = &[
    ">>>=", ">>>", "<<=", ">>=", "**", "++", "--", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=",
    "*=", "/=", "%=", "|=", "&=", "^=", "=>", "->", ":=", "<<", ">>", "(", ")", "{", "}", "[", "]",
    ";", ",", ".", "?", ":", "=", "+", "-", "*", "/", "%", "!", "~", "&", "|", "^", "<", ">",
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    line_start: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn column(&self) -> usize {
        self.src[self.line_start..self.pos].chars().count() + 1
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.line_start = self.pos;
        }
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.bump();
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Splits `source` into tokens, discarding whitespace and comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { src: source, pos: 0, line: 1, line_start: 0 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let (start, line, column) = (cur.pos, cur.line, cur.column());

        if c == '/' && cur.peek_at(1) == Some('/') {
            cur.eat_while(|c| c != '\n');
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('*') {
            cur.bump();
            cur.bump();
            loop {
                match cur.bump() {
                    Some('*') if cur.peek() == Some('/') => {
                        cur.bump();
                        break;
                    }
                    Some(_) => {}
                    None => return Err(LexError::UnterminatedComment { line, column }),
                }
            }
            continue;
        }

        let kind = if is_ident_start(c) {
            cur.eat_while(is_ident_continue);
            let word = &source[start..cur.pos];
            if matches!(word, "hex" | "unicode") && matches!(cur.peek(), Some('"') | Some('\'')) {
                let text = lex_string(&mut cur)?;
                tokens.push(Token { kind: TokenKind::String, text, start, end: cur.pos, line, column });
                continue;
            }
            TokenKind::Identifier
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur);
            TokenKind::Number
        } else if c == '"' || c == '\'' {
            let text = lex_string(&mut cur)?;
            tokens.push(Token { kind: TokenKind::String, text, start, end: cur.pos, line, column });
            continue;
        } else if let Some(p) = PUNCTUATORS.iter().find(|p| cur.rest().starts_with(**p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            TokenKind::Punct
        } else {
            return Err(LexError::IllegalCharacter { ch: c, line, column });
        };

        tokens.push(Token {
            kind,
            text: source[start..cur.pos].to_string(),
            start,
            end: cur.pos,
            line,
            column,
        });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>) {
    if cur.peek() == Some('0') && matches!(cur.peek_at(1), Some('x') | Some('X')) {
        cur.bump();
        cur.bump();
        cur.eat_while(|c| c.is_ascii_hexdigit() || c == '_');
        return;
    }
    cur.eat_while(|c| c.is_ascii_digit() || c == '_');
    // Dotted runs cover both rationals (`1.5`) and pragma versions (`0.8.0`).
    while cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
        cur.bump();
        cur.eat_while(|c| c.is_ascii_digit() || c == '_');
    }
    if matches!(cur.peek(), Some('e') | Some('E')) {
        let signed = cur.peek_at(1) == Some('-');
        let digit_at = if signed { 2 } else { 1 };
        if cur.peek_at(digit_at).is_some_and(|d| d.is_ascii_digit()) {
            for _ in 0..digit_at {
                cur.bump();
            }
            cur.eat_while(|c| c.is_ascii_digit() || c == '_');
        }
    }
}

fn lex_string(cur: &mut Cursor<'_>) -> Result<String, LexError> {
    let (line, column) = (cur.line, cur.column());
    let quote = cur.bump().expect("caller checked quote");
    let mut text = String::new();
    loop {
        match cur.bump() {
            Some(c) if c == quote => return Ok(text),
            Some('\\') => match cur.bump() {
                Some('\n') | None => return Err(LexError::UnterminatedString { line, column }),
                Some(esc) => {
                    text.push('\\');
                    text.push(esc);
                }
            },
            Some('\n') | None => return Err(LexError::UnterminatedString { line, column }),
            Some(c) => text.push(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        tokenize(src).unwrap().into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn pragma_directive() {
        assert_eq!(texts("pragma solidity ^0.8.0;"), ["pragma", "solidity", "^", "0.8.0", ";"]);
    }

    #[test]
    fn selfdestruct_is_an_identifier() {
        let toks = tokenize("selfdestruct(payable(owner));").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Identifier);
        assert_eq!(toks[0].text, "selfdestruct");
    }

    #[test]
    fn legacy_suicide_alias() {
        let toks = tokenize("pragma solidity ^0.4.24;\ncontract K { function k() { suicide(owner); } }").unwrap();
        let suicide = toks.iter().find(|t| t.text == "suicide").unwrap();
        assert_eq!(suicide.kind, TokenKind::Identifier);
        assert_eq!(suicide.line, 2);
    }

    #[test]
    fn comments_are_dropped_but_lines_kept() {
        let toks = tokenize("// selfdestruct\n/* multi\nline */ uint x;").unwrap();
        assert_eq!(toks[0].text, "uint");
        assert_eq!(toks[0].line, 3);
        assert!(toks.iter().all(|t| t.text != "selfdestruct"));
    }

    #[test]
    fn strings_numbers_and_operators() {
        let toks = tokenize(r#"x = "a\"b" >>>= 1e18 + 0xFF_FF + 1_000 ** hex"00";"#).unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| (t.kind, t.text.as_str())).collect();
        assert_eq!(kinds[2], (TokenKind::String, "a\\\"b"));
        assert_eq!(kinds[3], (TokenKind::Punct, ">>>="));
        assert_eq!(kinds[4], (TokenKind::Number, "1e18"));
        assert_eq!(kinds[6], (TokenKind::Number, "0xFF_FF"));
        assert_eq!(kinds[9], (TokenKind::Punct, "**"));
        assert_eq!(kinds[10], (TokenKind::String, "00"));
    }

    #[test]
    fn columns_count_chars() {
        let toks = tokenize("  a\n\tbb").unwrap();
        assert_eq!((toks[0].line, toks[0].column), (1, 3));
        assert_eq!((toks[1].line, toks[1].column), (2, 2));
    }

    #[test]
    fn lex_errors_carry_positions() {
        assert_eq!(tokenize("x = \"abc").unwrap_err(), LexError::UnterminatedString { line: 1, column: 5 });
        assert_eq!(tokenize("a\n/* open").unwrap_err(), LexError::UnterminatedComment { line: 2, column: 1 });
        assert_eq!(
            tokenize("a # b").unwrap_err(),
            LexError::IllegalCharacter { ch: '#', line: 1, column: 3 }
        );
    }
}
