//! Recursive-descent parser over the token stream.
//!
//! File-level structure (pragmas, imports, contract and function headers)
//! must parse or the whole file is rejected. Inside function bodies a
//! statement that cannot be parsed is skipped and replaced by an
//! [`StmtKind::Opaque`] node so one exotic construct never loses the file.

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::version::{Version, VersionRange};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{file}:{line}:{column}: {message}")]
pub struct ParseError {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Error inside the parser before the file path is attached.
#[derive(Debug)]
struct Failure {
    line: usize,
    column: usize,
    message: String,
}

type PResult<T> = Result<T, Failure>;

const VISIBILITY_WORDS: &[&str] = &["public", "external", "internal", "private"];
const LOCATION_WORDS: &[&str] = &["memory", "storage", "calldata"];
const ETHER_UNITS: &[&str] = &[
    "wei", "gwei", "szabo", "finney", "ether", "seconds", "minutes", "hours", "days", "weeks", "years",
];

fn is_elementary_type(word: &str) -> bool {
    fn sized(word: &str, prefix: &str) -> bool {
        word.strip_prefix(prefix)
            .is_some_and(|rest| rest.is_empty() || (rest.chars().all(|c| c.is_ascii_digit())))
    }
    matches!(word, "address" | "bool" | "string" | "byte" | "var")
        || sized(word, "uint")
        || sized(word, "int")
        || (word.starts_with("bytes") && sized(word, "bytes"))
        || word.starts_with("fixed")
        || word.starts_with("ufixed")
}

/// Normalizes a declared parameter type to its canonical ABI spelling.
pub fn normalize_type(ty: &str) -> String {
    let (base, suffix) = match ty.find('[') {
        Some(i) => (&ty[..i], &ty[i..]),
        None => (ty, ""),
    };
    let base = match base.trim() {
        "uint" => "uint256",
        "int" => "int256",
        "byte" => "bytes1",
        "fixed" => "fixed128x18",
        "ufixed" => "ufixed128x18",
        "address payable" => "address",
        other => other,
    };
    let suffix: String = suffix.chars().filter(|c| !c.is_whitespace()).collect();
    format!("{base}{suffix}")
}

/// `name(type1,type2,...)` with normalized parameter types.
pub fn canonical_signature(name: &str, parameters: &[String]) -> String {
    let params: Vec<String> = parameters.iter().map(|p| normalize_type(p)).collect();
    format!("{}({})", name, params.join(","))
}

/// Joins token texts, separating adjacent words with one space.
fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut prev_word = false;
    for t in tokens {
        let word = t.kind != TokenKind::Punct;
        if word && prev_word {
            out.push(' ');
        }
        out.push_str(&t.text);
        prev_word = word;
    }
    out
}

/// Parses one Solidity file.
pub fn parse(source: &str, file_path: &str) -> Result<SourceUnit, ParseError> {
    let tokens = tokenize(source).map_err(|e| {
        let (line, column) = e.position();
        ParseError { file: file_path.to_string(), line, column, message: e.to_string() }
    })?;
    let mut parser = Parser {
        src: source,
        toks: tokens,
        pos: 0,
        opaque: 0,
        directive_strings: Vec::new(),
    };
    let eof_line = source.lines().count().max(1);
    parser.parse_unit(file_path).map_err(|f| ParseError {
        file: file_path.to_string(),
        line: if f.line == 0 { eof_line } else { f.line },
        column: f.column.max(1),
        message: f.message,
    })
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    opaque: usize,
    /// Token indices of string literals that belong to pragma/import directives.
    directive_strings: Vec<usize>,
}

impl<'a> Parser<'a> {
    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_n(&self, n: usize) -> Option<&Token> {
        self.toks.get(self.pos + n)
    }

    fn at(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text))
    }

    fn at_n(&self, n: usize, text: &str) -> bool {
        self.peek_n(n).is_some_and(|t| t.is(text))
    }

    fn at_ident(&self) -> bool {
        self.peek().is_some_and(Token::is_ident)
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn bump(&mut self) -> Option<&Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn fail<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, column) = self.peek().map_or((0, 0), |t| (t.line, t.column));
        let found = self.peek().map_or("end of file".to_string(), |t| format!("`{}`", t.text));
        Err(Failure { line, column, message: format!("{}, found {}", message.into(), found) })
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            self.fail(format!("expected `{text}`"))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.is_ident() => {
                let name = t.text.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => self.fail("expected identifier"),
        }
    }

    /// Byte offset where the token at `idx` starts.
    fn start_of(&self, idx: usize) -> usize {
        self.toks.get(idx).map_or(self.src.len(), |t| t.start)
    }

    /// Span from the token at `start_idx` through the last consumed token.
    fn span_from(&self, start_idx: usize) -> Span {
        let start = self.start_of(start_idx);
        let end = if self.pos > start_idx { self.toks[self.pos - 1].end } else { start };
        Span::new(start, end)
    }

    /// With the cursor on an opening bracket, moves past its match.
    fn skip_balanced(&mut self) -> PResult<()> {
        let mut depth = 0usize;
        loop {
            let Some(t) = self.peek() else {
                return self.fail("unbalanced brackets");
            };
            if t.kind == TokenKind::Punct {
                match t.text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth = depth.saturating_sub(1),
                    _ => {}
                }
            }
            self.pos += 1;
            if depth == 0 {
                return Ok(());
            }
        }
    }

    /// Skips up to and including the next `;` outside brackets.
    fn skip_to_semicolon(&mut self) -> PResult<()> {
        loop {
            match self.peek() {
                None => return self.fail("expected `;`"),
                Some(t) if t.is(";") => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(t) if t.is("(") || t.is("[") || t.is("{") => self.skip_balanced()?,
                Some(t) if t.is("}") => return self.fail("expected `;`"),
                Some(_) => self.pos += 1,
            }
        }
    }

    fn line_starts(&self) -> Vec<usize> {
        let mut starts = vec![0];
        starts.extend(self.src.match_indices('\n').map(|(i, _)| i + 1));
        starts
    }

    fn lines_of(&self, span: Span, starts: &[usize]) -> LineSpan {
        let line = |off: usize| starts.partition_point(|&s| s <= off);
        let end = if span.end > span.start { span.end - 1 } else { span.start };
        LineSpan { start: line(span.start), end: line(end) }
    }

    // ---- source unit ---------------------------------------------------

    fn parse_unit(&mut self, file_path: &str) -> PResult<SourceUnit> {
        let mut pragmas = Vec::new();
        let mut imports = Vec::new();
        let mut contracts = Vec::new();

        while let Some(tok) = self.peek() {
            let (kind, word) = (tok.kind, tok.text.clone());
            match word.as_str() {
                _ if kind != TokenKind::Identifier && !(kind == TokenKind::Punct && word == ";") => {
                    return self.fail("expected a top-level declaration");
                }
                ";" => {
                    self.pos += 1;
                }
                "pragma" => pragmas.push(self.parse_pragma()?),
                "import" => imports.push(self.parse_import()?),
                "contract" | "interface" | "library" => contracts.push(self.parse_contract(false)?),
                "abstract" if self.at_n(1, "contract") => {
                    self.pos += 1;
                    contracts.push(self.parse_contract(true)?)
                }
                "function" => {
                    // free function; parsed for structure, not analysed
                    self.parse_function("", FunctionRole::Function)?;
                }
                "struct" | "enum" => {
                    self.pos += 1;
                    self.expect_ident()?;
                    if !self.at("{") {
                        return self.fail("expected `{`");
                    }
                    self.skip_balanced()?;
                }
                _ => self.skip_to_semicolon()?,
            }
        }

        let line_starts = self.line_starts();
        for c in &mut contracts {
            finish_lines(c, |s| self.lines_of(s, &line_starts));
        }

        // Functions without a visibility keyword are public before 0.5.0.
        let pre_050 = {
            let mut sols = pragmas.iter().filter_map(|p: &PragmaDirective| p.version_range.as_ref()).peekable();
            sols.peek().is_some()
                && sols.all(|r| r.intervals().iter().all(|i| i.upper.is_some_and(|u| u <= Version::new(0, 5, 0))))
        };
        if pre_050 {
            for f in contracts.iter_mut().flat_map(|c| c.functions.iter_mut()) {
                if f.visibility == Visibility::Default {
                    f.visibility = Visibility::Public;
                }
            }
        }

        let string_literals = self
            .toks
            .iter()
            .enumerate()
            .filter(|(i, t)| t.kind == TokenKind::String && !self.directive_strings.contains(i))
            .map(|(_, t)| t.text.clone())
            .collect();

        Ok(SourceUnit {
            file_path: file_path.to_string(),
            source: self.src.to_string(),
            pragmas,
            imports,
            contracts,
            string_literals,
            opaque_statements: self.opaque,
            line_starts,
        })
    }

    fn parse_pragma(&mut self) -> PResult<PragmaDirective> {
        let start = self.pos;
        self.expect("pragma")?;
        let kind_tok = self.pos;
        let kind = match self.expect_ident()?.as_str() {
            "solidity" => PragmaKind::Solidity,
            "experimental" => PragmaKind::Experimental,
            "abicoder" => PragmaKind::Abicoder,
            other => {
                self.pos = kind_tok;
                return self.fail(format!("unknown pragma `{other}`"));
            }
        };
        let text_start = self.start_of(self.pos);
        while !self.at(";") {
            match self.bump() {
                Some(t) if t.kind == TokenKind::String => self.directive_strings.push(self.pos - 1),
                Some(_) => {}
                None => return self.fail("unterminated pragma"),
            }
        }
        let text_end = self.start_of(self.pos);
        let constraint_text = self.src[text_start..text_end].trim().to_string();
        let (version_range, is_exact_pin) = if kind == PragmaKind::Solidity {
            match VersionRange::parse(&constraint_text) {
                Ok(r) => {
                    let pinned = r.exact_pin().is_some();
                    (Some(r), pinned)
                }
                Err(e) => {
                    self.pos = kind_tok + 1;
                    return self.fail(format!("invalid solidity version constraint: {e}"));
                }
            }
        } else {
            (None, false)
        };
        self.expect(";")?;
        Ok(PragmaDirective { kind, constraint_text, version_range, is_exact_pin, span: self.span_from(start) })
    }

    fn parse_import(&mut self) -> PResult<ImportDirective> {
        let start = self.pos;
        self.expect("import")?;
        let mut path = None;
        while !self.at(";") {
            match self.bump() {
                Some(t) if t.kind == TokenKind::String => {
                    if path.is_none() {
                        path = Some(t.text.clone());
                    }
                    self.directive_strings.push(self.pos - 1);
                }
                Some(_) => {}
                None => return self.fail("unterminated import"),
            }
        }
        self.expect(";")?;
        let Some(path) = path else {
            self.pos = start;
            return self.fail("import without a path");
        };
        let is_relative = path.starts_with("./") || path.starts_with("../");
        Ok(ImportDirective { path, is_relative, span: self.span_from(start) })
    }

    // ---- contracts -----------------------------------------------------

    fn parse_contract(&mut self, is_abstract: bool) -> PResult<ContractDef> {
        let start = if is_abstract { self.pos - 1 } else { self.pos };
        let kind = match self.bump().map(|t| t.text.as_str()) {
            Some("contract") if is_abstract => ContractKind::AbstractContract,
            Some("contract") => ContractKind::Contract,
            Some("interface") => ContractKind::Interface,
            Some("library") => ContractKind::Library,
            _ => unreachable!("caller matched the keyword"),
        };
        let name = self.expect_ident()?;

        let mut bases: Vec<String> = Vec::new();
        if self.eat("is") {
            loop {
                let mut base = self.expect_ident()?;
                while self.eat(".") {
                    base.push('.');
                    base.push_str(&self.expect_ident()?);
                }
                if self.at("(") {
                    self.skip_balanced()?;
                }
                if !bases.contains(&base) {
                    bases.push(base);
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("{")?;

        let mut contract = ContractDef {
            name,
            kind,
            bases,
            functions: Vec::new(),
            modifiers: Vec::new(),
            state_variables: Vec::new(),
            using_for: Vec::new(),
            span: Span::default(),
            lines: LineSpan::default(),
        };

        while !self.eat("}") {
            let Some(tok) = self.peek() else {
                return self.fail(format!("unterminated contract `{}`", contract.name));
            };
            let word = tok.text.clone();
            let is_ident = tok.is_ident();
            match word.as_str() {
                ";" if !is_ident => {
                    self.pos += 1;
                }
                "function" if is_ident => {
                    let f = self.parse_function(&contract.name, FunctionRole::Function)?;
                    contract.functions.push(f);
                }
                "constructor" | "fallback" | "receive" if is_ident && self.at_n(1, "(") => {
                    let role = match word.as_str() {
                        "constructor" => FunctionRole::Constructor,
                        "fallback" => FunctionRole::Fallback,
                        _ => FunctionRole::Receive,
                    };
                    let f = self.parse_function(&contract.name, role)?;
                    contract.functions.push(f);
                }
                "modifier" if is_ident => {
                    let m = self.parse_modifier()?;
                    contract.modifiers.push(m);
                }
                "event" if is_ident => self.skip_to_semicolon()?,
                "error" if is_ident && self.peek_n(1).is_some_and(Token::is_ident) && self.at_n(2, "(") => {
                    self.skip_to_semicolon()?
                }
                "using" if is_ident => {
                    self.pos += 1;
                    if self.at_ident() {
                        let lib = self.expect_ident()?;
                        contract.using_for.push(lib);
                    }
                    self.skip_to_semicolon()?;
                }
                "struct" | "enum" if is_ident && self.peek_n(1).is_some_and(Token::is_ident) => {
                    self.pos += 2;
                    if !self.at("{") {
                        return self.fail("expected `{`");
                    }
                    self.skip_balanced()?;
                }
                "type" if is_ident && self.peek_n(1).is_some_and(Token::is_ident) && self.at_n(2, "is") => {
                    self.skip_to_semicolon()?
                }
                _ if is_ident => {
                    let v = self.parse_state_variable()?;
                    contract.state_variables.push(v);
                }
                _ => return self.fail("expected a contract member"),
            }
        }

        contract.span = self.span_from(start);
        if kind == ContractKind::Interface && contract.functions.iter().any(|f| f.body.is_some()) {
            let f = contract.functions.iter().find(|f| f.body.is_some()).expect("checked above");
            let (line, column) = self.position_of(f.span.start);
            return Err(Failure { line, column, message: format!("interface `{}` function has a body", contract.name) });
        }
        Ok(contract)
    }

    fn position_of(&self, offset: usize) -> (usize, usize) {
        self.toks
            .iter()
            .find(|t| t.start == offset)
            .map_or((0, 0), |t| (t.line, t.column))
    }

    fn parse_state_variable(&mut self) -> PResult<StateVariable> {
        let start = self.pos;
        let type_tokens = self.consume_type()?;
        let type_text = join_tokens(&self.toks[type_tokens.0..type_tokens.1]);
        let mut visibility = Visibility::Internal;
        let mut mutability = VariableMutability::Mutable;
        loop {
            let Some(tok) = self.peek() else {
                return self.fail("unterminated state variable");
            };
            match tok.text.as_str() {
                "public" => visibility = Visibility::Public,
                "private" => visibility = Visibility::Private,
                "internal" => visibility = Visibility::Internal,
                "external" => visibility = Visibility::External,
                "constant" => mutability = VariableMutability::Constant,
                "immutable" => mutability = VariableMutability::Immutable,
                "transient" => {}
                "override" => {
                    self.pos += 1;
                    if self.at("(") {
                        self.skip_balanced()?;
                    }
                    continue;
                }
                _ => break,
            }
            self.pos += 1;
        }
        if !self.at_ident() {
            self.pos = start;
            return self.fail("expected state variable declaration");
        }
        let name = self.expect_ident()?;
        if self.eat("=") {
            // Initialisers are not analysed; skip to the terminating `;`.
            self.skip_to_semicolon()?;
        } else {
            self.expect(";")?;
        }
        Ok(StateVariable { name, type_text, visibility, mutability })
    }

    /// Consumes a type name; returns the token index range it occupied.
    fn consume_type(&mut self) -> PResult<(usize, usize)> {
        let start = self.pos;
        if self.at("mapping") {
            self.pos += 1;
            if !self.at("(") {
                return self.fail("expected `(` after mapping");
            }
            self.skip_balanced()?;
        } else if self.at("function") && self.at_n(1, "(") {
            self.pos += 1;
            self.skip_balanced()?;
            while let Some(t) = self.peek() {
                let w = t.text.as_str();
                if VISIBILITY_WORDS.contains(&w) && self.peek_n(1).is_some_and(|n| !n.is_ident()) {
                    break;
                }
                if matches!(w, "internal" | "external" | "pure" | "view" | "payable" | "constant") {
                    self.pos += 1;
                } else if w == "returns" {
                    self.pos += 1;
                    if !self.at("(") {
                        return self.fail("expected `(` after returns");
                    }
                    self.skip_balanced()?;
                } else {
                    break;
                }
            }
        } else {
            let first = self.expect_ident()?;
            while self.at(".") && self.peek_n(1).is_some_and(Token::is_ident) {
                self.pos += 2;
            }
            if first == "address" && self.at("payable") {
                self.pos += 1;
            }
        }
        while self.at("[") {
            self.skip_balanced()?;
        }
        Ok((start, self.pos))
    }

    /// `( type [location] [name], ... )` → declared types.
    fn parse_parameter_list(&mut self) -> PResult<Vec<String>> {
        self.expect("(")?;
        let mut params = Vec::new();
        if self.eat(")") {
            return Ok(params);
        }
        loop {
            let (a, b) = self.consume_type()?;
            params.push(join_tokens(&self.toks[a..b]));
            while self.peek().is_some_and(|t| LOCATION_WORDS.contains(&t.text.as_str()) || t.is("indexed")) {
                self.pos += 1;
            }
            if self.at_ident() {
                self.pos += 1;
            }
            if self.eat(")") {
                return Ok(params);
            }
            self.expect(",")?;
        }
    }

    fn parse_function(&mut self, contract_name: &str, role: FunctionRole) -> PResult<FunctionDef> {
        let start = self.pos;
        let mut role = role;
        let mut name = String::new();
        if role == FunctionRole::Function {
            self.expect("function")?;
            if self.at_ident() {
                name = self.expect_ident()?;
                if !contract_name.is_empty() && name == contract_name {
                    role = FunctionRole::Constructor;
                }
            } else {
                role = FunctionRole::Fallback;
            }
        } else {
            self.pos += 1;
        }
        let parameters = self.parse_parameter_list()?;

        let mut visibility = Visibility::Default;
        let mut mutability = Mutability::Nonpayable;
        let mut modifiers_invoked = Vec::new();
        loop {
            let Some(tok) = self.peek() else {
                return self.fail("unterminated function header");
            };
            if tok.is(";") || tok.is("{") {
                break;
            }
            if !tok.is_ident() {
                return self.fail("unexpected token in function header");
            }
            let word = tok.text.clone();
            match word.as_str() {
                "public" => visibility = Visibility::Public,
                "external" => visibility = Visibility::External,
                "internal" => visibility = Visibility::Internal,
                "private" => visibility = Visibility::Private,
                "payable" => mutability = Mutability::Payable,
                "view" | "constant" => mutability = Mutability::View,
                "pure" => mutability = Mutability::Pure,
                "virtual" => {}
                "override" => {
                    self.pos += 1;
                    if self.at("(") {
                        self.skip_balanced()?;
                    }
                    continue;
                }
                "returns" => {
                    self.pos += 1;
                    self.parse_parameter_list()?;
                    continue;
                }
                _ => {
                    modifiers_invoked.push(self.parse_modifier_invocation()?);
                    continue;
                }
            }
            self.pos += 1;
        }

        let body = if self.eat(";") { None } else { Some(self.parse_block()?) };
        let span = self.span_from(start);
        let sig_name = match role {
            FunctionRole::Function => name.clone(),
            FunctionRole::Constructor => "constructor".to_string(),
            FunctionRole::Fallback => "fallback".to_string(),
            FunctionRole::Receive => "receive".to_string(),
        };
        let canonical_signature = canonical_signature(&sig_name, &parameters);
        Ok(FunctionDef {
            name,
            role,
            parameters,
            visibility,
            mutability,
            modifiers_invoked,
            body,
            span,
            lines: LineSpan::default(),
            canonical_signature,
        })
    }

    fn parse_modifier_invocation(&mut self) -> PResult<ModifierInvocation> {
        let mut name = self.expect_ident()?;
        while self.at(".") && self.peek_n(1).is_some_and(Token::is_ident) {
            self.pos += 1;
            name.push('.');
            name.push_str(&self.expect_ident()?);
        }
        if !self.at("(") {
            return Ok(ModifierInvocation { name, arguments: None, args: Vec::new() });
        }
        let open = self.pos;
        self.skip_balanced()?;
        let close = self.pos;
        let arguments = self.src[self.toks[open].end..self.toks[close - 1].start].trim().to_string();
        // Arguments are parsed when possible; failures keep only the raw text.
        let after = self.pos;
        self.pos = open;
        let args = self.parse_call_arguments().unwrap_or_default();
        self.pos = after;
        Ok(ModifierInvocation { name, arguments: Some(arguments), args })
    }

    fn parse_modifier(&mut self) -> PResult<ModifierDef> {
        let start = self.pos;
        self.expect("modifier")?;
        let name = self.expect_ident()?;
        let parameters = if self.at("(") { self.parse_parameter_list()? } else { Vec::new() };
        loop {
            if self.eat("virtual") {
                continue;
            }
            if self.eat("override") {
                if self.at("(") {
                    self.skip_balanced()?;
                }
                continue;
            }
            break;
        }
        let body = if self.eat(";") { None } else { Some(self.parse_block()?) };
        Ok(ModifierDef { name, parameters, body, span: self.span_from(start), lines: LineSpan::default() })
    }

    // ---- statements ----------------------------------------------------

    fn parse_block(&mut self) -> PResult<Block> {
        let start = self.pos;
        self.expect("{")?;
        let mut statements = Vec::new();
        loop {
            if self.eat("}") {
                break;
            }
            if self.at_eof() {
                return self.fail("unterminated block");
            }
            statements.push(self.parse_statement()?);
        }
        Ok(Block { statements, span: self.span_from(start) })
    }

    /// Parses one statement, degrading to `Opaque` on failure. Only an
    /// unterminated block (end of file) propagates as an error.
    fn parse_statement(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        match self.try_statement() {
            Ok(stmt) => Ok(stmt),
            Err(failure) => {
                self.pos = start;
                self.recover();
                if self.at_eof() {
                    return Err(failure);
                }
                self.opaque += 1;
                Ok(Stmt { kind: StmtKind::Opaque, span: self.span_from(start) })
            }
        }
    }

    /// Skips the remainder of a malformed statement without crossing the
    /// enclosing block's closing brace.
    fn recover(&mut self) {
        let start = self.pos;
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            if t.kind != TokenKind::Punct {
                self.pos += 1;
                continue;
            }
            match t.text.as_str() {
                "(" | "[" | "{" => {
                    depth += 1;
                    self.pos += 1;
                }
                ")" | "]" => {
                    depth = depth.saturating_sub(1);
                    self.pos += 1;
                }
                "}" => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                    self.pos += 1;
                    if depth == 0 && !self.peek().is_some_and(|n| n.is("else") || n.is("catch") || n.is("while")) {
                        break;
                    }
                }
                ";" => {
                    self.pos += 1;
                    if depth == 0 {
                        break;
                    }
                }
                _ => self.pos += 1,
            }
        }
        if self.pos == start && !self.at("}") && !self.at_eof() {
            self.pos += 1;
        }
    }

    fn stmt(&self, kind: StmtKind, start: usize) -> Stmt {
        Stmt { kind, span: self.span_from(start) }
    }

    /// Wraps a single-statement loop body in a block.
    fn loop_body(&mut self) -> PResult<Block> {
        if self.at("{") {
            return self.parse_block();
        }
        let stmt = self.parse_statement()?;
        let span = stmt.span;
        Ok(Block { statements: vec![stmt], span })
    }

    fn try_statement(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        let Some(tok) = self.peek() else {
            return self.fail("expected statement");
        };
        let word = if tok.kind == TokenKind::String { String::new() } else { tok.text.clone() };
        match word.as_str() {
            "{" => {
                let b = self.parse_block()?;
                Ok(self.stmt(StmtKind::Block(b), start))
            }
            "if" => {
                self.pos += 1;
                self.expect("(")?;
                let condition = self.parse_expr()?;
                self.expect(")")?;
                let then_branch = Box::new(self.parse_statement()?);
                let else_branch = if self.eat("else") { Some(Box::new(self.parse_statement()?)) } else { None };
                Ok(self.stmt(StmtKind::If { condition, then_branch, else_branch }, start))
            }
            "for" => {
                self.pos += 1;
                self.expect("(")?;
                let init = if self.eat(";") {
                    None
                } else {
                    let s = self.simple_statement()?;
                    Some(Box::new(s))
                };
                let condition = if self.at(";") { None } else { Some(self.parse_expr()?) };
                self.expect(";")?;
                let update = if self.at(")") { None } else { Some(self.parse_expr()?) };
                self.expect(")")?;
                let body = self.loop_body()?;
                Ok(self.stmt(StmtKind::For { init, condition, update, body }, start))
            }
            "while" => {
                self.pos += 1;
                self.expect("(")?;
                let condition = self.parse_expr()?;
                self.expect(")")?;
                let body = self.loop_body()?;
                Ok(self.stmt(StmtKind::While { condition, body }, start))
            }
            "do" => {
                self.pos += 1;
                let body = self.loop_body()?;
                self.expect("while")?;
                self.expect("(")?;
                let condition = self.parse_expr()?;
                self.expect(")")?;
                self.expect(";")?;
                Ok(self.stmt(StmtKind::DoWhile { body, condition }, start))
            }
            "return" => {
                self.pos += 1;
                let value = if self.at(";") { None } else { Some(self.parse_expr()?) };
                self.expect(";")?;
                Ok(self.stmt(StmtKind::Return(value), start))
            }
            "emit" if self.peek_n(1).is_some_and(Token::is_ident) => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.expect(";")?;
                Ok(self.stmt(StmtKind::Emit(e), start))
            }
            "unchecked" if self.at_n(1, "{") => {
                self.pos += 1;
                let b = self.parse_block()?;
                Ok(self.stmt(StmtKind::Unchecked(b), start))
            }
            "assembly" => self.parse_assembly(),
            "try" => {
                self.pos += 1;
                while !self.at("{") {
                    if self.at_eof() || self.at("}") {
                        return self.fail("malformed try statement");
                    }
                    if self.at("(") || self.at("[") {
                        self.skip_balanced()?;
                    } else {
                        self.pos += 1;
                    }
                }
                self.skip_balanced()?;
                while self.eat("catch") {
                    while !self.at("{") {
                        if self.at_eof() || self.at("}") {
                            return self.fail("malformed catch clause");
                        }
                        self.pos += 1;
                    }
                    self.skip_balanced()?;
                }
                self.opaque += 1;
                Ok(self.stmt(StmtKind::Opaque, start))
            }
            "throw" if self.at_n(1, ";") => {
                self.pos += 2;
                Ok(self.stmt(StmtKind::Guard { kind: GuardKind::Revert, args: Vec::new() }, start))
            }
            "revert" if self.peek_n(1).is_some_and(Token::is_ident) => {
                // custom error: revert Unauthorized(x);
                self.pos += 1;
                let e = self.parse_expr()?;
                self.expect(";")?;
                let args = match e.kind {
                    ExprKind::Call { args, .. } => args,
                    _ => Vec::new(),
                };
                Ok(self.stmt(StmtKind::Guard { kind: GuardKind::Revert, args }, start))
            }
            "break" if self.at_n(1, ";") => {
                self.pos += 2;
                Ok(self.stmt(StmtKind::Break, start))
            }
            "continue" if self.at_n(1, ";") => {
                self.pos += 2;
                Ok(self.stmt(StmtKind::Continue, start))
            }
            "_" if self.at_n(1, ";") => {
                self.pos += 2;
                Ok(self.stmt(StmtKind::Placeholder, start))
            }
            _ => self.simple_statement(),
        }
    }

    fn parse_assembly(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        self.expect("assembly")?;
        if self.peek().is_some_and(|t| t.kind == TokenKind::String) {
            self.pos += 1;
        }
        if self.at("(") {
            self.skip_balanced()?;
        }
        if !self.at("{") {
            return self.fail("expected `{` after assembly");
        }
        let open = self.pos;
        self.skip_balanced()?;
        let mut block = AssemblyBlock { selfdestruct_at: Vec::new(), delegatecall_at: Vec::new() };
        for t in &self.toks[open..self.pos] {
            if t.kind != TokenKind::Identifier {
                continue;
            }
            match t.text.as_str() {
                "selfdestruct" => block.selfdestruct_at.push(Span::new(t.start, t.end)),
                "delegatecall" => block.delegatecall_at.push(Span::new(t.start, t.end)),
                _ => {}
            }
        }
        self.opaque += 1;
        Ok(self.stmt(StmtKind::Assembly(block), start))
    }

    /// Variable declaration or expression statement, including the `;`.
    fn simple_statement(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        if let Some(stmt) = self.try_variable_declaration()? {
            return Ok(stmt);
        }
        self.pos = start;
        let expr = self.parse_expr()?;
        self.expect(";")?;
        let guard = match &expr.kind {
            ExprKind::Call { callee, args } => match callee.as_identifier() {
                Some("require") => Some((GuardKind::Require, args.clone())),
                Some("assert") => Some((GuardKind::Assert, args.clone())),
                Some("revert") => Some((GuardKind::Revert, args.clone())),
                _ => None,
            },
            _ => None,
        };
        let kind = match guard {
            Some((kind, args)) => StmtKind::Guard { kind, args },
            None => StmtKind::Expression(expr),
        };
        Ok(self.stmt(kind, start))
    }

    /// Returns `Ok(None)` (cursor position unspecified) when the tokens do
    /// not form a declaration.
    fn try_variable_declaration(&mut self) -> PResult<Option<Stmt>> {
        let start = self.pos;
        let mut names = Vec::new();
        if self.at("var") {
            self.pos += 1;
            if self.at("(") {
                self.pos += 1;
                loop {
                    if self.at_ident() {
                        names.push(Some(self.expect_ident()?));
                    } else {
                        names.push(None);
                    }
                    if self.eat(")") {
                        break;
                    }
                    self.expect(",")?;
                }
            } else {
                names.push(Some(self.expect_ident()?));
            }
        } else if self.at("(") {
            self.pos += 1;
            loop {
                if self.at(",") || self.at(")") {
                    names.push(None);
                } else {
                    if self.consume_type().is_err() {
                        return Ok(None);
                    }
                    while self.peek().is_some_and(|t| LOCATION_WORDS.contains(&t.text.as_str())) {
                        self.pos += 1;
                    }
                    if !self.at_ident() {
                        return Ok(None);
                    }
                    names.push(Some(self.expect_ident()?));
                }
                if self.eat(")") {
                    break;
                }
                if !self.eat(",") {
                    return Ok(None);
                }
            }
            if !self.at("=") {
                return Ok(None);
            }
        } else {
            if !self.at_ident() || self.consume_type().is_err() {
                return Ok(None);
            }
            while self.peek().is_some_and(|t| LOCATION_WORDS.contains(&t.text.as_str())) {
                self.pos += 1;
            }
            if !self.at_ident() || !(self.at_n(1, "=") || self.at_n(1, ";")) {
                return Ok(None);
            }
            names.push(Some(self.expect_ident()?));
        }
        let value = if self.eat("=") { Some(self.parse_expr()?) } else { None };
        self.expect(";")?;
        Ok(Some(self.stmt(StmtKind::VariableDecl { names, value }, start)))
    }

    // ---- expressions ---------------------------------------------------

    fn parse_expr(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let lhs = self.parse_ternary()?;
        let op = match self.peek().filter(|t| t.kind == TokenKind::Punct).map(|t| t.text.as_str()) {
            Some("=") => Some(None),
            Some("+=") => Some(Some(BinaryOp::Add)),
            Some("-=") => Some(Some(BinaryOp::Sub)),
            Some("*=") => Some(Some(BinaryOp::Mul)),
            Some("/=") => Some(Some(BinaryOp::Div)),
            Some("%=") => Some(Some(BinaryOp::Mod)),
            Some("|=") => Some(Some(BinaryOp::BitOr)),
            Some("&=") => Some(Some(BinaryOp::BitAnd)),
            Some("^=") => Some(Some(BinaryOp::BitXor)),
            Some("<<=") => Some(Some(BinaryOp::Shl)),
            Some(">>=") => Some(Some(BinaryOp::Shr)),
            Some(">>>=") => Some(Some(BinaryOp::Sar)),
            _ => None,
        };
        let Some(op) = op else {
            return Ok(lhs);
        };
        self.pos += 1;
        let value = self.parse_expr()?;
        Ok(Expr {
            kind: ExprKind::Assign { op, target: Box::new(lhs), value: Box::new(value) },
            span: self.span_from(start),
        })
    }

    fn parse_ternary(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let condition = self.parse_binary(1)?;
        if !self.eat("?") {
            return Ok(condition);
        }
        let then_expr = self.parse_expr()?;
        self.expect(":")?;
        let else_expr = self.parse_expr()?;
        Ok(Expr {
            kind: ExprKind::Ternary {
                condition: Box::new(condition),
                then_expr: Box::new(then_expr),
                else_expr: Box::new(else_expr),
            },
            span: self.span_from(start),
        })
    }

    fn binary_op(&self) -> Option<(BinaryOp, u8)> {
        let t = self.peek().filter(|t| t.kind == TokenKind::Punct)?;
        Some(match t.text.as_str() {
            "||" => (BinaryOp::Or, 1),
            "&&" => (BinaryOp::And, 2),
            "==" => (BinaryOp::Eq, 3),
            "!=" => (BinaryOp::Ne, 3),
            "<" => (BinaryOp::Lt, 4),
            ">" => (BinaryOp::Gt, 4),
            "<=" => (BinaryOp::Le, 4),
            ">=" => (BinaryOp::Ge, 4),
            "|" => (BinaryOp::BitOr, 5),
            "^" => (BinaryOp::BitXor, 6),
            "&" => (BinaryOp::BitAnd, 7),
            "<<" => (BinaryOp::Shl, 8),
            ">>" => (BinaryOp::Shr, 8),
            ">>>" => (BinaryOp::Sar, 8),
            "+" => (BinaryOp::Add, 9),
            "-" => (BinaryOp::Sub, 9),
            "*" => (BinaryOp::Mul, 10),
            "/" => (BinaryOp::Div, 10),
            "%" => (BinaryOp::Mod, 10),
            "**" => (BinaryOp::Pow, 11),
            _ => return None,
        })
    }

    fn parse_binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let start = self.pos;
        let mut lhs = self.parse_unary()?;
        while let Some((op, prec)) = self.binary_op() {
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            // `**` is right-associative.
            let next = if op == BinaryOp::Pow { prec } else { prec + 1 };
            let rhs = self.parse_binary(next)?;
            lhs = Expr {
                kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                span: self.span_from(start),
            };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let op = match self.peek().map(|t| (t.kind, t.text.as_str())) {
            Some((TokenKind::Punct, "!")) => Some(UnaryOp::Not),
            Some((TokenKind::Punct, "~")) => Some(UnaryOp::BitNot),
            Some((TokenKind::Punct, "-")) => Some(UnaryOp::Neg),
            Some((TokenKind::Punct, "+")) => Some(UnaryOp::Plus),
            Some((TokenKind::Punct, "++")) => Some(UnaryOp::Inc),
            Some((TokenKind::Punct, "--")) => Some(UnaryOp::Dec),
            Some((TokenKind::Identifier, "delete")) => Some(UnaryOp::Delete),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let operand = self.parse_unary()?;
            return Ok(Expr {
                kind: ExprKind::Unary { op, operand: Box::new(operand), prefix: true },
                span: self.span_from(start),
            });
        }
        self.parse_postfix()
    }

    fn parse_call_arguments(&mut self) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        if self.eat("{") {
            // named arguments: f({a: 1, b: 2})
            while !self.eat("}") {
                self.expect_ident()?;
                self.expect(":")?;
                args.push(self.parse_expr()?);
                if !self.eat(",") {
                    self.expect("}")?;
                    break;
                }
            }
            self.expect(")")?;
            return Ok(args);
        }
        loop {
            args.push(self.parse_expr()?);
            if self.eat(")") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let mut expr = self.parse_primary()?;
        loop {
            if self.at(".") {
                self.pos += 1;
                let member = match self.peek() {
                    Some(t) if t.is_ident() => t.text.clone(),
                    _ => return self.fail("expected member name"),
                };
                self.pos += 1;
                let global = match (expr.as_identifier(), member.as_str()) {
                    (Some("msg"), "sender") => Some(Global::MsgSender),
                    (Some("msg"), "value") => Some(Global::MsgValue),
                    (Some("msg"), "data") => Some(Global::MsgData),
                    (Some("msg"), "sig") => Some(Global::MsgSig),
                    (Some("tx"), "origin") => Some(Global::TxOrigin),
                    (Some("tx"), "gasprice") => Some(Global::TxGasPrice),
                    (Some("block"), m) => Some(Global::Block(m.to_string())),
                    _ => None,
                };
                let kind = match global {
                    Some(g) => ExprKind::Global(g),
                    None => ExprKind::Member { base: Box::new(expr), member },
                };
                expr = Expr { kind, span: self.span_from(start) };
            } else if self.at("(") {
                let args = self.parse_call_arguments()?;
                let kind = match &expr.kind {
                    ExprKind::ElementaryType(ty) if args.len() == 1 => {
                        let ty = ty.clone();
                        ExprKind::TypeCast { ty, arg: Box::new(args.into_iter().next().expect("one arg")) }
                    }
                    _ => ExprKind::Call { callee: Box::new(expr), args },
                };
                expr = Expr { kind, span: self.span_from(start) };
            } else if self.at("[") {
                self.pos += 1;
                if self.eat("]") {
                    expr = Expr {
                        kind: ExprKind::Index { base: Box::new(expr), index: None },
                        span: self.span_from(start),
                    };
                    continue;
                }
                let first = if self.at(":") { None } else { Some(Box::new(self.parse_expr()?)) };
                if self.eat(":") {
                    let end = if self.at("]") { None } else { Some(Box::new(self.parse_expr()?)) };
                    self.expect("]")?;
                    expr = Expr {
                        kind: ExprKind::Slice { base: Box::new(expr), start: first, end },
                        span: self.span_from(start),
                    };
                } else {
                    self.expect("]")?;
                    expr = Expr {
                        kind: ExprKind::Index { base: Box::new(expr), index: first },
                        span: self.span_from(start),
                    };
                }
            } else if self.at("{") && self.peek_n(1).is_some_and(Token::is_ident) && self.at_n(2, ":") {
                self.pos += 1;
                let mut options = Vec::new();
                while !self.eat("}") {
                    let key = self.expect_ident()?;
                    self.expect(":")?;
                    options.push((key, self.parse_expr()?));
                    if !self.eat(",") {
                        self.expect("}")?;
                        break;
                    }
                }
                expr = Expr {
                    kind: ExprKind::CallOptions { base: Box::new(expr), options },
                    span: self.span_from(start),
                };
            } else if self.at("++") || self.at("--") {
                let op = if self.at("++") { UnaryOp::Inc } else { UnaryOp::Dec };
                self.pos += 1;
                expr = Expr {
                    kind: ExprKind::Unary { op, operand: Box::new(expr), prefix: false },
                    span: self.span_from(start),
                };
            } else {
                return Ok(expr);
            }
        }
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let Some(tok) = self.peek().cloned() else {
            return self.fail("expected expression");
        };
        let kind = match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                if self.peek().is_some_and(|t| ETHER_UNITS.contains(&t.text.as_str()) && t.is_ident()) {
                    self.pos += 1;
                }
                ExprKind::Literal { kind: LiteralKind::Number, text: tok.text }
            }
            TokenKind::String => {
                let mut text = String::new();
                while let Some(t) = self.peek().filter(|t| t.kind == TokenKind::String) {
                    text.push_str(&t.text);
                    self.pos += 1;
                }
                ExprKind::Literal { kind: LiteralKind::String, text }
            }
            TokenKind::Punct => match tok.text.as_str() {
                "(" => {
                    self.pos += 1;
                    let mut items: Vec<Option<Expr>> = Vec::new();
                    let mut saw_comma = false;
                    if !self.at(")") {
                        loop {
                            if self.at(",") || self.at(")") {
                                items.push(None);
                            } else {
                                items.push(Some(self.parse_expr()?));
                            }
                            if self.eat(",") {
                                saw_comma = true;
                                continue;
                            }
                            break;
                        }
                    }
                    self.expect(")")?;
                    if !saw_comma && items.len() == 1 {
                        if let Some(Some(inner)) = items.pop() {
                            return Ok(Expr { kind: inner.kind, span: self.span_from(start) });
                        }
                        return self.fail("empty parenthesized expression");
                    }
                    ExprKind::Tuple(items)
                }
                "[" => {
                    self.pos += 1;
                    let mut items = Vec::new();
                    if !self.at("]") {
                        loop {
                            items.push(self.parse_expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect("]")?;
                    ExprKind::InlineArray(items)
                }
                _ => return self.fail("expected expression"),
            },
            TokenKind::Identifier => match tok.text.as_str() {
                "true" | "false" => {
                    self.pos += 1;
                    ExprKind::Literal { kind: LiteralKind::Bool, text: tok.text }
                }
                "new" => {
                    self.pos += 1;
                    let (a, b) = self.consume_type()?;
                    ExprKind::New(join_tokens(&self.toks[a..b]))
                }
                "payable" => {
                    self.pos += 1;
                    ExprKind::ElementaryType("payable".to_string())
                }
                w if is_elementary_type(w) => {
                    self.pos += 1;
                    let mut ty = tok.text;
                    if ty == "address" && self.at("payable") {
                        self.pos += 1;
                        ty.push_str(" payable");
                    }
                    ExprKind::ElementaryType(ty)
                }
                _ => {
                    self.pos += 1;
                    ExprKind::Identifier(tok.text)
                }
            },
        };
        Ok(Expr { kind, span: self.span_from(start) })
    }
}

fn finish_lines(contract: &mut ContractDef, lines: impl Fn(Span) -> LineSpan) {
    contract.lines = lines(contract.span);
    for f in &mut contract.functions {
        f.lines = lines(f.span);
    }
    for m in &mut contract.modifiers {
        m.lines = lines(m.span);
    }
}
