//! Solidity front end: tokenizer, parser, and syntax tree.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod version;
pub mod visit;

pub use ast::*;
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{canonical_signature, normalize_type, parse, ParseError};
pub use version::{Version, VersionError, VersionRange};
