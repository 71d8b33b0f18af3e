use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::builtins::{builtin, Arity};
use super::lexer::{tokenize, Tok, Token};
use super::ScriptError;

const RESERVED: [&str; 4] = ["use", "fn", "main", "save"];

/// Parses and semantically checks a script.
pub fn parse(src: &str) -> Result<ScriptProgram, ScriptError> {
    let tokens = tokenize(src)?;
    let prog = Parser { tokens, pos: 0 }.program()?;
    check(&prog)?;
    Ok(prog)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ScriptError> {
        let t = self.peek();
        Err(ScriptError::parse(t.span, format!("expected {wanted}, found {}", t.tok.describe())))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<Token, ScriptError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            self.unexpected(wanted)
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), ScriptError> {
        match &self.peek().tok {
            Tok::Ident(s) if RESERVED.contains(&s.as_str()) => {
                let t = self.peek();
                Err(ScriptError::parse(t.span, format!("`{s}` is a reserved word and cannot be used as {what}")))
            }
            Tok::Ident(s) => {
                let s = s.clone();
                let span = self.bump().span;
                Ok((s, span))
            }
            _ => self.unexpected(what),
        }
    }

    /// Skips blank lines and top-level comments.
    fn skip_trivia(&mut self) {
        while matches!(self.peek().tok, Tok::Newline | Tok::Comment(_)) {
            self.bump();
        }
    }

    fn end_of_line(&mut self) -> Result<(), ScriptError> {
        match self.peek().tok {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => self.unexpected("end of line"),
        }
    }

    fn program(mut self) -> Result<ScriptProgram, ScriptError> {
        let mut imports = Vec::new();
        let mut functions = Vec::new();
        self.skip_trivia();
        while self.at_keyword("use") {
            let span = self.bump().span;
            let (name, _) = self.ident("a module name")?;
            self.end_of_line()?;
            imports.push(Import { name, span });
            self.skip_trivia();
        }
        while self.at_keyword("fn") {
            let span = self.bump().span;
            let (name, _) = self.ident("a function name")?;
            self.expect(Tok::LParen, "`(`")?;
            let mut params = Vec::new();
            if self.peek().tok != Tok::RParen {
                loop {
                    params.push(self.ident("a parameter name")?.0);
                    if self.peek().tok == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`)` or `,`")?;
            let body = self.block()?;
            functions.push(FunctionDef { name, params, body, span });
            self.skip_trivia();
        }
        if self.at_keyword("use") {
            return Err(ScriptError::parse(self.peek().span, "imports must come before function definitions"));
        }
        if !self.at_keyword("main") {
            return self.unexpected("`fn` or `main`");
        }
        let span = self.bump().span;
        let body = self.block()?;
        let main = MainBlock { body, span };
        self.skip_trivia();
        if self.at_keyword("main") {
            return Err(ScriptError::semantic(self.peek().span, "duplicate main block"));
        }
        if self.peek().tok != Tok::Eof {
            return self.unexpected("end of input after the main block");
        }
        Ok(ScriptProgram { imports, functions, main })
    }

    fn block(&mut self) -> Result<Vec<Statement>, ScriptError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut body = Vec::new();
        loop {
            while self.peek().tok == Tok::Newline {
                self.bump();
            }
            match self.peek().tok {
                Tok::RBrace => {
                    self.bump();
                    return Ok(body);
                }
                Tok::Eof => return self.unexpected("`}`"),
                _ => {}
            }
            body.push(self.statement()?);
            match self.peek().tok {
                Tok::Newline | Tok::RBrace | Tok::Comment(_) => {}
                _ => return self.unexpected("end of line"),
            }
        }
    }

    fn statement(&mut self) -> Result<Statement, ScriptError> {
        let span = self.peek().span;
        if let Tok::Comment(text) = &self.peek().tok {
            let kind = StmtKind::Comment(text.clone());
            self.bump();
            return Ok(Statement { kind, span });
        }
        if self.at_keyword("save") {
            self.bump();
            return match self.bump().tok {
                Tok::Str(path) => Ok(Statement { kind: StmtKind::Save(path), span }),
                _ => Err(ScriptError::parse(span, "expected a string path after `save`")),
            };
        }
        let (name, _) = self.ident("a statement")?;
        match self.peek().tok {
            Tok::Eq => {
                self.bump();
                let value = self.expr()?;
                Ok(Statement { kind: StmtKind::Assign { name, value }, span })
            }
            Tok::LParen => {
                self.bump();
                let args = self.args()?;
                Ok(Statement { kind: StmtKind::Call { callee: name, args }, span })
            }
            _ => self.unexpected("`=` or `(`"),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, ScriptError> {
        let mut args = Vec::new();
        if self.peek().tok == Tok::RParen {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            match self.peek().tok {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                _ => return self.unexpected("`,` or `)`"),
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr, ScriptError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr, ScriptError> {
        match self.peek().tok.clone() {
            Tok::Number(v) => {
                self.bump();
                Ok(Expr::Number(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::Ident(_) => Ok(Expr::Ident(self.ident("an expression")?.0)),
            Tok::LParen => {
                let open = self.bump().span;
                let first = self.expr()?;
                if self.peek().tok == Tok::RParen {
                    self.bump();
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    items.push(self.expr()?);
                }
                self.expect(Tok::RParen, "`,` or `)`")?;
                if items.len() > 3 {
                    return Err(ScriptError::parse(open, "tuples have 2 or 3 components"));
                }
                Ok(Expr::Tuple(items))
            }
            _ => self.unexpected("an expression"),
        }
    }
}

/// Semantic checks: unique names, known callees, arity, save placement, no recursion.
fn check(prog: &ScriptProgram) -> Result<(), ScriptError> {
    let mut defined: BTreeMap<&str, &FunctionDef> = BTreeMap::new();
    for f in &prog.functions {
        if builtin(&f.name).is_some() {
            return Err(ScriptError::semantic(f.span, format!("function `{}` shadows a builtin", f.name)));
        }
        if defined.insert(f.name.as_str(), f).is_some() {
            return Err(ScriptError::semantic(f.span, format!("duplicate function `{}`", f.name)));
        }
        let mut seen = BTreeSet::new();
        for p in &f.params {
            if !seen.insert(p) {
                return Err(ScriptError::semantic(f.span, format!("duplicate parameter `{p}` in `{}`", f.name)));
            }
        }
    }

    let check_body = |body: &[Statement], in_main: bool| -> Result<(), ScriptError> {
        let mut saves = 0;
        for s in body {
            match &s.kind {
                StmtKind::Call { callee, args } => {
                    let n = args.len();
                    if let Some(b) = builtin(callee) {
                        let ok = match b.arity {
                            Arity::Exact(k) => n == k,
                            Arity::AtLeast(k) => n >= k,
                        };
                        if !ok {
                            return Err(ScriptError::semantic(
                                s.span,
                                format!("`{callee}` expects {} argument(s), got {n}", b.arity),
                            ));
                        }
                    } else if let Some(f) = defined.get(callee.as_str()) {
                        if f.params.len() != n {
                            return Err(ScriptError::semantic(
                                s.span,
                                format!("`{callee}` expects {} argument(s), got {n}", f.params.len()),
                            ));
                        }
                    } else {
                        return Err(ScriptError::semantic(s.span, format!("call to undefined function `{callee}`")));
                    }
                }
                StmtKind::Save(_) if !in_main => {
                    return Err(ScriptError::semantic(s.span, "`save` is only allowed in the main block"));
                }
                StmtKind::Save(_) => {
                    saves += 1;
                    if saves > 1 {
                        return Err(ScriptError::semantic(s.span, "duplicate save directive"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    };
    for f in &prog.functions {
        check_body(&f.body, false)?;
    }
    check_body(&prog.main.body, true)?;

    // reject call cycles; the language has no recursion
    fn visit<'a>(
        name: &'a str,
        defined: &BTreeMap<&'a str, &'a FunctionDef>,
        state: &mut BTreeMap<&'a str, u8>,
    ) -> Result<(), ScriptError> {
        match state.get(name) {
            Some(2) => return Ok(()),
            Some(1) => {
                let f = defined[name];
                return Err(ScriptError::semantic(f.span, format!("recursive call cycle through `{name}`")));
            }
            _ => {}
        }
        state.insert(name, 1);
        for s in &defined[name].body {
            if let StmtKind::Call { callee, .. } = &s.kind {
                if defined.contains_key(callee.as_str()) {
                    visit(callee, defined, state)?;
                }
            }
        }
        state.insert(name, 2);
        Ok(())
    }
    let mut state = BTreeMap::new();
    for name in defined.keys() {
        visit(name, &defined, &mut state)?;
    }
    Ok(())
}
