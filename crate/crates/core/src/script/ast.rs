use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Parsed script: imports, model-construction functions and the main block.
///
/// Equality ignores source positions, so a program compares equal to the
/// result of re-parsing its pretty-printed form.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptProgram {
    pub imports: Vec<Import>,
    pub functions: Vec<FunctionDef>,
    pub main: MainBlock,
}

#[derive(Debug, Clone)]
pub struct Import {
    pub name: String,
    pub span: Span,
}

impl PartialEq for Import {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name
    }
}

#[derive(Debug, Clone)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Statement>,
    pub span: Span,
}

impl PartialEq for FunctionDef {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name && self.params == o.params && self.body == o.body
    }
}

#[derive(Debug, Clone)]
pub struct MainBlock {
    pub body: Vec<Statement>,
    pub span: Span,
}

impl PartialEq for MainBlock {
    fn eq(&self, o: &Self) -> bool {
        self.body == o.body
    }
}

#[derive(Debug, Clone)]
pub struct Statement {
    pub kind: StmtKind,
    pub span: Span,
}

impl PartialEq for Statement {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind
    }
}

impl Statement {
    pub fn new(kind: StmtKind) -> Self {
        Statement { kind, span: Span::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign { name: String, value: Expr },
    Call { callee: String, args: Vec<Expr> },
    Comment(String),
    Save(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Str(String),
    Ident(String),
    Tuple(Vec<Expr>),
    Neg(Box<Expr>),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }
}

impl ScriptProgram {
    /// All statements: function bodies in definition order, then main.
    pub fn statements(&self) -> impl Iterator<Item = &Statement> {
        self.functions.iter().flat_map(|f| f.body.iter()).chain(self.main.body.iter())
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn save_path(&self) -> Option<&str> {
        self.main.body.iter().find_map(|s| match &s.kind {
            StmtKind::Save(p) => Some(p.as_str()),
            _ => None,
        })
    }

    /// Copy of the program with every comment statement removed.
    pub fn strip_comments(&self) -> ScriptProgram {
        let keep = |b: &[Statement]| -> Vec<Statement> {
            b.iter().filter(|s| !matches!(s.kind, StmtKind::Comment(_))).cloned().collect()
        };
        ScriptProgram {
            imports: self.imports.clone(),
            functions: self
                .functions
                .iter()
                .map(|f| FunctionDef { body: keep(&f.body), ..f.clone() })
                .collect(),
            main: MainBlock { body: keep(&self.main.body), span: self.main.span },
        }
    }
}
