//! The drawing script language: lexer, parser, pretty printer and interpreter.

mod ast;
mod builtins;
mod interp;
mod lexer;
mod parser;
mod printer;

use std::collections::BTreeMap;

use thiserror::Error;

pub use ast::*;
pub use builtins::{builtin, is_annotation_builtin, Arity, Builtin, BuiltinKind, BUILTINS};
pub use interp::{execute, execute_traced, CallRecord, Execution, RuntimeError, RuntimeErrorKind, TracedRun, Value};
pub use parser::parse;
pub use printer::pretty_print;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriptErrorKind {
    Lex,
    Parse,
    Semantic,
}

/// Diagnostic from lexing, parsing or static checking.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{span}: {message}")]
pub struct ScriptError {
    pub kind: ScriptErrorKind,
    pub span: Span,
    pub message: String,
}

impl ScriptError {
    pub(crate) fn lex(span: Span, message: impl Into<String>) -> Self {
        ScriptError { kind: ScriptErrorKind::Lex, span, message: message.into() }
    }

    pub(crate) fn parse(span: Span, message: impl Into<String>) -> Self {
        ScriptError { kind: ScriptErrorKind::Parse, span, message: message.into() }
    }

    pub(crate) fn semantic(span: Span, message: impl Into<String>) -> Self {
        ScriptError { kind: ScriptErrorKind::Semantic, span, message: message.into() }
    }

    pub fn span(&self) -> Span {
        self.span
    }
}

/// Multiset of function names: every defined function, `main`, and each
/// distinct builtin that is called anywhere.
pub fn function_set(prog: &ScriptProgram) -> BTreeMap<String, usize> {
    let mut set = BTreeMap::new();
    for f in &prog.functions {
        *set.entry(f.name.clone()).or_insert(0) += 1;
    }
    *set.entry("main".to_string()).or_insert(0) += 1;
    for s in prog.statements() {
        if let StmtKind::Call { callee, .. } = &s.kind {
            if builtin(callee).is_some() {
                set.insert(callee.clone(), 1);
            }
        }
    }
    set
}

/// Checks that a dataset script is complete: main draws something and
/// saves exactly once. Plain `parse` accepts an empty main.
pub fn check_complete(prog: &ScriptProgram) -> Result<(), ScriptError> {
    let calls = prog.main.body.iter().filter(|s| matches!(s.kind, StmtKind::Call { .. })).count();
    if calls == 0 {
        return Err(ScriptError::semantic(prog.main.span, "main block makes no calls"));
    }
    if prog.save_path().is_none() {
        return Err(ScriptError::semantic(prog.main.span, "main block has no save directive"));
    }
    Ok(())
}
