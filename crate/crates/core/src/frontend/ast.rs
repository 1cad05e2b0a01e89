// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::ir::BitWidth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Int(BitWidth),
    Bool,
    Array(Box<Type>, usize),
    Struct(String),
    /// Integer constant not yet given a type; its value is exact.
    Lit,
    /// Placeholder before type checking.
    Unknown,
}

impl Type {
    pub fn int32() -> Self {
        Type::Int(BitWidth::signed(32))
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Type::Int(_) | Type::Bool | Type::Lit)
    }

    /// Width and signedness of a scalar type; bool is an unsigned bit.
    pub fn scalar_width(&self) -> Option<BitWidth> {
        match self {
            Type::Int(w) => Some(*w),
            Type::Bool => Some(BitWidth::unsigned(1)),
            _ => None,
        }
    }

    pub fn is_signed(&self) -> bool {
        matches!(self, Type::Int(w) if w.is_signed())
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int(w) => write!(f, "{w}"),
            Type::Bool => f.write_str("bool"),
            Type::Array(e, n) => write!(f, "{e}[{n}]"),
            Type::Struct(s) => write!(f, "struct {s}"),
            Type::Lit => f.write_str("integer literal"),
            Type::Unknown => f.write_str("?"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LogicAnd,
    LogicOr,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Xor => "^",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::LogicAnd => "&&",
            BinOp::LogicOr => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::LogicAnd | BinOp::LogicOr)
    }

    pub fn is_shift(self) -> bool {
        matches!(self, BinOp::Shl | BinOp::Shr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    BitNot,
    LogicNot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i128),
    Bool(bool),
    Var(String),
    Index(Box<Expr>, Box<Expr>),
    Field(Box<Expr>, String),
    Unary(UnOp, Box<Expr>),
    /// Operands are converted to `op_ty` before the operation (shifts
    /// convert only the left operand).
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        op_ty: Type,
    },
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Cast(Type, Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, ty: Type::Unknown, span }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Access {
    Index(Expr),
    Field(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LValue {
    pub base: String,
    pub path: Vec<Access>,
    pub span: Span,
    /// Type of the assigned location, filled by the checker.
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Init {
    Expr(Expr),
    List(Vec<Init>, Span),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Decl {
        name: String,
        ty: Type,
        init: Option<Init>,
        is_const: bool,
    },
    /// Compound assignments are desugared to `target = target op value`.
    Assign {
        target: LValue,
        value: Expr,
    },
    If {
        cond: Expr,
        then: Vec<Stmt>,
        els: Option<Vec<Stmt>>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Box<Stmt>>,
        body: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Return(Option<Expr>),
    Break,
    Continue,
    Expr(Expr),
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub ret: Type,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructDef {
    pub name: String,
    pub fields: Vec<(String, Type)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstDef {
    pub name: String,
    pub ty: Type,
    pub init: Init,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub structs: Vec<StructDef>,
    pub consts: Vec<ConstDef>,
    pub functions: Vec<Function>,
    /// Non-fatal diagnostics gathered by the checks.
    pub warnings: Vec<super::diag::Diagnostic>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn struct_def(&self, name: &str) -> Option<&StructDef> {
        self.structs.iter().find(|s| s.name == name)
    }
}
