// SPDX-License-Identifier: Apache-2.0

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::diag::{Code, Diagnostic};
use super::lexer::{Tok, Token};
use super::wrap_to;
use crate::ir::BitWidth;

type PResult<T> = Result<T, Diagnostic>;

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    structs: HashSet<String>,
    // Scalar global constants, for array lengths.
    consts: HashMap<String, i128>,
}

/// Builtin scalar type named by `name`, `Ok(None)` if the name is not
/// type-like at all, or an error for a malformed width such as `u0`.
fn builtin_type(name: &str) -> Result<Option<Type>, String> {
    match name {
        "bool" => return Ok(Some(Type::Bool)),
        "int" => return Ok(Some(Type::int32())),
        "uint8_t" => return Ok(Some(Type::Int(BitWidth::unsigned(8)))),
        "uint16_t" => return Ok(Some(Type::Int(BitWidth::unsigned(16)))),
        "uint32_t" => return Ok(Some(Type::Int(BitWidth::unsigned(32)))),
        "uint64_t" => return Ok(Some(Type::Int(BitWidth::unsigned(64)))),
        "int8_t" => return Ok(Some(Type::Int(BitWidth::signed(8)))),
        "int16_t" => return Ok(Some(Type::Int(BitWidth::signed(16)))),
        "int32_t" => return Ok(Some(Type::Int(BitWidth::signed(32)))),
        "int64_t" => return Ok(Some(Type::Int(BitWidth::signed(64)))),
        _ => {}
    }
    let signed = match name.as_bytes().first() {
        Some(b'u') => false,
        Some(b'i') => true,
        _ => return Ok(None),
    };
    let digits = &name[1..];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Ok(None);
    }
    match digits.parse::<u32>() {
        Ok(bits) if (1..=64).contains(&bits) => Ok(Some(Type::Int(BitWidth::new(bits, signed).unwrap()))),
        _ => Err(format!("unknown type `{name}`: integer widths range over 1..64")),
    }
}

fn bin_op_of(p: &str) -> Option<(BinOp, u8)> {
    Some(match p {
        "||" => (BinOp::LogicOr, 1),
        "&&" => (BinOp::LogicAnd, 2),
        "|" => (BinOp::Or, 3),
        "^" => (BinOp::Xor, 4),
        "&" => (BinOp::And, 5),
        "==" => (BinOp::Eq, 6),
        "!=" => (BinOp::Ne, 6),
        "<" => (BinOp::Lt, 7),
        "<=" => (BinOp::Le, 7),
        ">" => (BinOp::Gt, 7),
        ">=" => (BinOp::Ge, 7),
        "<<" => (BinOp::Shl, 8),
        ">>" => (BinOp::Shr, 8),
        "+" => (BinOp::Add, 9),
        "-" => (BinOp::Sub, 9),
        "*" => (BinOp::Mul, 10),
        "/" => (BinOp::Div, 10),
        "%" => (BinOp::Rem, 10),
        _ => return None,
    })
}

fn compound_op(p: &str) -> Option<BinOp> {
    Some(match p {
        "+=" => BinOp::Add,
        "-=" => BinOp::Sub,
        "*=" => BinOp::Mul,
        "/=" => BinOp::Div,
        "%=" => BinOp::Rem,
        "&=" => BinOp::And,
        "|=" => BinOp::Or,
        "^=" => BinOp::Xor,
        "<<=" => BinOp::Shl,
        ">>=" => BinOp::Shr,
        _ => return None,
    })
}

pub fn parse_tokens(toks: Vec<Token>) -> PResult<Program> {
    let mut p = Parser { toks, pos: 0, structs: HashSet::new(), consts: HashMap::new() };
    p.program()
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(q) if q == s)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.bump();
        }
        hit
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn syntax<T>(&self, what: &str) -> PResult<T> {
        Err(Diagnostic::error(
            Code::Syntax,
            self.span(),
            format!("expected {what}, found {}", Self::describe(self.peek())),
        ))
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.bump().span)
        } else {
            self.syntax(&format!("`{p}`"))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.bump().span;
                Ok((s, span))
            }
            _ => self.syntax("identifier"),
        }
    }

    fn pointer_error<T>(&self, what: &str) -> PResult<T> {
        Err(Diagnostic::error(Code::Pointer, self.span(), format!("{what}: pointer types unsupported")))
    }

    fn is_type_start_at(&self, n: usize) -> bool {
        match self.peek_at(n) {
            Tok::Ident(s) => {
                s == "struct" || s == "const" || self.structs.contains(s) || matches!(builtin_type(s), Ok(Some(_)))
            }
            _ => false,
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        while *self.peek() != Tok::Eof {
            if self.is_ident("struct") && matches!(self.peek_at(2), Tok::Punct("{")) {
                prog.structs.push(self.struct_def()?);
            } else if self.is_ident("const") {
                prog.consts.push(self.const_def()?);
            } else if self.is_ident("typedef") {
                return Err(Diagnostic::error(Code::Syntax, self.span(), "typedef is not supported"));
            } else {
                prog.functions.push(self.function()?);
            }
        }
        Ok(prog)
    }

    fn struct_def(&mut self) -> PResult<StructDef> {
        let span = self.bump().span;
        let (name, _) = self.ident()?;
        self.expect_punct("{")?;
        let mut fields = Vec::new();
        while !self.eat_punct("}") {
            let base = self.base_type()?;
            loop {
                let (fname, fty, _) = self.declarator(base.clone())?;
                fields.push((fname, fty));
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(";")?;
        }
        self.expect_punct(";")?;
        self.structs.insert(name.clone());
        Ok(StructDef { name, fields, span })
    }

    fn const_def(&mut self) -> PResult<ConstDef> {
        self.bump();
        let base = self.base_type()?;
        let (name, ty, span) = self.declarator(base)?;
        self.expect_punct("=")?;
        let init = self.init()?;
        self.expect_punct(";")?;
        if let (Type::Int(w), Init::Expr(e)) = (&ty, &init) {
            if let Some(v) = self.const_eval(e) {
                self.consts.insert(name.clone(), wrap_to(v, *w));
            }
        }
        Ok(ConstDef { name, ty, init, span })
    }

    fn function(&mut self) -> PResult<Function> {
        let span = self.span();
        if self.is_ident("void") {
            return Err(Diagnostic::error(
                Code::UnknownType,
                span,
                "functions must return a value; `void` is not supported",
            ));
        }
        let ret = self.base_type()?;
        if self.is_punct("*") || self.is_punct("&") {
            return self.pointer_error("return type");
        }
        let (name, _) = self.ident()?;
        if !self.is_punct("(") {
            return Err(Diagnostic::error(
                Code::Syntax,
                self.span(),
                "expected `(`: global variables must be declared `const`",
            ));
        }
        self.bump();
        let mut params = Vec::new();
        if self.is_ident("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.bump();
        }
        if !self.eat_punct(")") {
            loop {
                let base = self.base_type()?;
                let (pname, ty, pspan) = self.declarator(base)?;
                params.push(Param { name: pname, ty, span: pspan });
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        if self.is_punct(";") {
            return Err(Diagnostic::error(Code::Syntax, self.span(), "function declarations need a body"));
        }
        let body = self.block()?;
        Ok(Function { name, ret, params, body, span })
    }

    fn base_type(&mut self) -> PResult<Type> {
        let span = self.span();
        let (name, _) = self.ident()?;
        let ty = if name == "struct" {
            let (sname, sspan) = self.ident()?;
            if !self.structs.contains(&sname) {
                return Err(Diagnostic::error(Code::UnknownType, sspan, format!("unknown struct `{sname}`")));
            }
            Type::Struct(sname)
        } else if self.structs.contains(&name) {
            Type::Struct(name)
        } else {
            match builtin_type(&name) {
                Ok(Some(t)) => t,
                Ok(None) => return Err(Diagnostic::error(Code::UnknownType, span, format!("unknown type `{name}`"))),
                Err(msg) => return Err(Diagnostic::error(Code::UnknownType, span, msg)),
            }
        };
        if self.is_punct("*") || self.is_punct("&") {
            return self.pointer_error("pointer or reference declarator");
        }
        Ok(ty)
    }

    /// `name` followed by any number of `[N]` suffixes.
    fn declarator(&mut self, base: Type) -> PResult<(String, Type, Span)> {
        if self.is_punct("*") || self.is_punct("&") {
            return self.pointer_error("pointer or reference declarator");
        }
        let (name, span) = self.ident()?;
        let mut dims = Vec::new();
        while self.is_punct("[") {
            let open = self.bump().span;
            if self.is_punct("]") {
                return Err(Diagnostic::error(
                    Code::VariableArray,
                    open,
                    format!("array `{name}` needs a compile-time constant length"),
                ));
            }
            let e = self.expr()?;
            self.expect_punct("]")?;
            match self.const_eval(&e) {
                Some(n) if n >= 1 && n <= u32::MAX as i128 => dims.push(n as usize),
                Some(_) => {
                    return Err(Diagnostic::error(
                        Code::VariableArray,
                        e.span,
                        format!("array `{name}` needs a positive length"),
                    ))
                }
                None => {
                    return Err(Diagnostic::error(
                        Code::VariableArray,
                        e.span,
                        format!("array `{name}` needs a compile-time constant length"),
                    ))
                }
            }
        }
        let ty = dims.iter().rev().fold(base, |t, &n| Type::Array(Box::new(t), n));
        Ok((name, ty, span))
    }

    /// Integer value of an expression built from literals and scalar global
    /// constants.
    fn const_eval(&self, e: &Expr) -> Option<i128> {
        Some(match &e.kind {
            ExprKind::Int(v) => *v,
            ExprKind::Var(n) => *self.consts.get(n)?,
            ExprKind::Unary(UnOp::Neg, a) => self.const_eval(a)?.checked_neg()?,
            ExprKind::Unary(UnOp::BitNot, a) => !self.const_eval(a)?,
            ExprKind::Binary { op, lhs, rhs, .. } => {
                let (a, b) = (self.const_eval(lhs)?, self.const_eval(rhs)?);
                match op {
                    BinOp::Add => a.checked_add(b)?,
                    BinOp::Sub => a.checked_sub(b)?,
                    BinOp::Mul => a.checked_mul(b)?,
                    BinOp::Div => a.checked_div(b)?,
                    BinOp::Rem => a.checked_rem(b)?,
                    BinOp::Shl if (0..64).contains(&b) => a.checked_mul(1i128 << b)?,
                    BinOp::Shr if (0..64).contains(&b) => a >> b,
                    BinOp::And => a & b,
                    BinOp::Or => a | b,
                    BinOp::Xor => a ^ b,
                    _ => return None,
                }
            }
            _ => return None,
        })
    }

    fn init(&mut self) -> PResult<Init> {
        if self.is_punct("{") {
            let span = self.bump().span;
            let mut items = Vec::new();
            while !self.eat_punct("}") {
                items.push(self.init()?);
                if !self.eat_punct(",") {
                    self.expect_punct("}")?;
                    break;
                }
            }
            Ok(Init::List(items, span))
        } else {
            Ok(Init::Expr(self.expr()?))
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            if *self.peek() == Tok::Eof {
                return self.syntax("`}`");
            }
            self.stmt(&mut out)?;
        }
        Ok(out)
    }

    /// A statement used as a branch or loop body, flattened if it is a block.
    fn body(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        self.stmt(&mut out)?;
        if let [Stmt { kind: StmtKind::Block(_), .. }] = out.as_slice() {
            let Some(Stmt { kind: StmtKind::Block(b), .. }) = out.pop() else { unreachable!() };
            return Ok(b);
        }
        Ok(out)
    }

    fn stmt(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Punct("{") => StmtKind::Block(self.block()?),
            Tok::Punct(";") => {
                self.bump();
                return Ok(());
            }
            Tok::Ident(kw) => match kw.as_str() {
                "if" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let then = self.body()?;
                    let els = if self.is_ident("else") {
                        self.bump();
                        Some(self.body()?)
                    } else {
                        None
                    };
                    StmtKind::If { cond, then, els }
                }
                "for" => self.for_stmt()?,
                "while" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    StmtKind::While { cond, body: self.body()? }
                }
                "do" => {
                    self.bump();
                    let body = self.body()?;
                    if !self.is_ident("while") {
                        return self.syntax("`while`");
                    }
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    self.expect_punct(";")?;
                    StmtKind::While { cond, body }
                }
                "return" => {
                    self.bump();
                    let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
                    self.expect_punct(";")?;
                    StmtKind::Return(value)
                }
                "break" | "continue" => {
                    self.bump();
                    self.expect_punct(";")?;
                    if kw == "break" {
                        StmtKind::Break
                    } else {
                        StmtKind::Continue
                    }
                }
                "switch" | "goto" => {
                    return Err(Diagnostic::error(Code::Syntax, span, format!("`{kw}` is not supported")));
                }
                _ if self.is_type_start_at(0) => {
                    self.decl(out)?;
                    self.expect_punct(";")?;
                    return Ok(());
                }
                _ if matches!(self.peek_at(1), Tok::Ident(_)) => {
                    let msg = builtin_type(&kw).err().unwrap_or_else(|| format!("unknown type `{kw}`"));
                    return Err(Diagnostic::error(Code::UnknownType, span, msg));
                }
                _ => {
                    let s = self.simple()?;
                    self.expect_punct(";")?;
                    s
                }
            },
            _ => {
                let s = self.simple()?;
                self.expect_punct(";")?;
                s
            }
        };
        out.push(Stmt { kind, span });
        Ok(())
    }

    /// One declaration with possibly several declarators; no trailing `;`.
    fn decl(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let is_const = self.is_ident("const");
        if is_const {
            self.bump();
        }
        let base = self.base_type()?;
        loop {
            let (name, ty, span) = self.declarator(base.clone())?;
            let init = if self.eat_punct("=") { Some(self.init()?) } else { None };
            if is_const && init.is_none() {
                return Err(Diagnostic::error(Code::Syntax, span, format!("const `{name}` needs an initialiser")));
            }
            out.push(Stmt { kind: StmtKind::Decl { name, ty, init, is_const }, span });
            if !self.eat_punct(",") {
                return Ok(());
            }
        }
    }

    fn for_stmt(&mut self) -> PResult<StmtKind> {
        self.bump();
        self.expect_punct("(")?;
        let init = if self.eat_punct(";") {
            None
        } else if self.is_type_start_at(0) {
            let span = self.span();
            let mut decls = Vec::new();
            self.decl(&mut decls)?;
            self.expect_punct(";")?;
            if decls.len() != 1 {
                return Err(Diagnostic::error(Code::LoopForm, span, "a loop declares a single counter"));
            }
            decls.pop().map(Box::new)
        } else {
            let span = self.span();
            let kind = self.simple()?;
            self.expect_punct(";")?;
            Some(Box::new(Stmt { kind, span }))
        };
        let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
        self.expect_punct(";")?;
        let step = if self.is_punct(")") {
            None
        } else {
            let span = self.span();
            Some(Box::new(Stmt { kind: self.simple()?, span }))
        };
        self.expect_punct(")")?;
        let body = self.body()?;
        Ok(StmtKind::For { init, cond, step, body })
    }

    /// Assignment, increment, or expression statement without the `;`.
    fn simple(&mut self) -> PResult<StmtKind> {
        let span = self.span();
        if self.is_punct("++") || self.is_punct("--") {
            let op = if self.bump().tok == Tok::Punct("++") { BinOp::Add } else { BinOp::Sub };
            let target = self.postfix()?;
            return self.increment(target, op, span);
        }
        let e = self.expr()?;
        let op_span = self.span();
        match self.peek().clone() {
            Tok::Punct("=") => {
                self.bump();
                let target = Self::lvalue(&e)?;
                Ok(StmtKind::Assign { target, value: self.expr()? })
            }
            Tok::Punct("++") => {
                self.bump();
                self.increment(e, BinOp::Add, span)
            }
            Tok::Punct("--") => {
                self.bump();
                self.increment(e, BinOp::Sub, span)
            }
            Tok::Punct(p) if compound_op(p).is_some() => {
                self.bump();
                let target = Self::lvalue(&e)?;
                let rhs = self.expr()?;
                let value = Expr::new(
                    ExprKind::Binary {
                        op: compound_op(p).unwrap(),
                        lhs: Box::new(e),
                        rhs: Box::new(rhs),
                        op_ty: Type::Unknown,
                    },
                    op_span,
                );
                Ok(StmtKind::Assign { target, value })
            }
            _ => Ok(StmtKind::Expr(e)),
        }
    }

    fn increment(&mut self, target: Expr, op: BinOp, span: Span) -> PResult<StmtKind> {
        let lv = Self::lvalue(&target)?;
        let one = Expr::new(ExprKind::Int(1), span);
        let value =
            Expr::new(ExprKind::Binary { op, lhs: Box::new(target), rhs: Box::new(one), op_ty: Type::Unknown }, span);
        Ok(StmtKind::Assign { target: lv, value })
    }

    fn lvalue(e: &Expr) -> PResult<LValue> {
        let mut path = Vec::new();
        let mut cur = e;
        loop {
            match &cur.kind {
                ExprKind::Var(name) => {
                    path.reverse();
                    return Ok(LValue { base: name.clone(), path, span: e.span, ty: Type::Unknown });
                }
                ExprKind::Index(b, i) => {
                    path.push(Access::Index((**i).clone()));
                    cur = b;
                }
                ExprKind::Field(b, f) => {
                    path.push(Access::Field(f.clone()));
                    cur = b;
                }
                _ => return Err(Diagnostic::error(Code::Syntax, e.span, "left side of assignment is not assignable")),
            }
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if self.is_punct("?") {
            let span = self.bump().span;
            let t = self.expr()?;
            self.expect_punct(":")?;
            let e = self.expr()?;
            return Ok(Expr::new(ExprKind::Ternary(Box::new(cond), Box::new(t), Box::new(e)), span));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Tok::Punct(p) = self.peek() {
            let Some((op, prec)) = bin_op_of(p) else { break };
            if prec < min_prec {
                break;
            }
            let span = self.bump().span;
            let rhs = self.binary(prec + 1)?;
            lhs =
                Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), op_ty: Type::Unknown }, span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Punct("-") => Some(UnOp::Neg),
            Tok::Punct("~") => Some(UnOp::BitNot),
            Tok::Punct("!") => Some(UnOp::LogicNot),
            Tok::Punct("+") => {
                self.bump();
                return self.unary();
            }
            Tok::Punct("*") => return self.pointer_error("dereference"),
            Tok::Punct("&") => return self.pointer_error("address-of"),
            Tok::Punct("++") | Tok::Punct("--") => {
                return Err(Diagnostic::error(
                    Code::Syntax,
                    span,
                    "increment and decrement are statements, not expressions",
                ))
            }
            Tok::Punct("(") if self.is_type_start_at(1) => {
                self.bump();
                let ty = self.base_type()?;
                self.expect_punct(")")?;
                let e = self.unary()?;
                return Ok(Expr::new(ExprKind::Cast(ty, Box::new(e)), span));
            }
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(e)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let span = self.span();
            if self.eat_punct("[") {
                let idx = self.expr()?;
                self.expect_punct("]")?;
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), span);
            } else if self.eat_punct(".") {
                let (f, _) = self.ident()?;
                e = Expr::new(ExprKind::Field(Box::new(e), f), span);
            } else if self.is_punct("->") {
                return self.pointer_error("member access through `->`");
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(v), span))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(s == "true"), span))
            }
            Tok::Ident(s) if s == "sizeof" => Err(Diagnostic::error(Code::Syntax, span, "`sizeof` is not supported")),
            Tok::Ident(s) => {
                self.bump();
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.eat_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_punct(")") {
                                break;
                            }
                            self.expect_punct(",")?;
                        }
                    }
                    return Ok(Expr::new(ExprKind::Call(s, args), span));
                }
                Ok(Expr::new(ExprKind::Var(s), span))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => self.syntax("expression"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::lexer::lex;
    use super::*;

    fn parse(src: &str) -> PResult<Program> {
        parse_tokens(lex(src)?)
    }

    #[test]
    fn sum_function() {
        let p = parse("u8 sum(u8 a, u8 b){ return a + b; }").unwrap();
        assert_eq!(p.functions.len(), 1);
        let f = &p.functions[0];
        assert_eq!(f.params.len(), 2);
        assert!(f.params.iter().all(|p| p.ty == Type::Int(BitWidth::unsigned(8))));
    }

    #[test]
    fn precedence() {
        let p = parse("u8 f(u8 a){ return a + 2 * 3 << 1; }").unwrap();
        let StmtKind::Return(Some(e)) = &p.functions[0].body[0].kind else { panic!() };
        let ExprKind::Binary { op: BinOp::Shl, lhs, .. } = &e.kind else { panic!("{e:?}") };
        assert!(matches!(lhs.kind, ExprKind::Binary { op: BinOp::Add, .. }));
    }

    #[test]
    fn arrays_structs_and_consts() {
        let src = "const int N = 2 * 2;\nstruct P { u4 x; u4 y[N]; };\nu4 f(struct P p, u8 m[2][3]) { P q = p; q.y[1] += 1; return q.y[1]; }";
        let p = parse(src).unwrap();
        assert_eq!(p.structs[0].fields[1].1, Type::Array(Box::new(Type::Int(BitWidth::unsigned(4))), 4));
        let m = &p.functions[0].params[1].ty;
        let inner = Type::Array(Box::new(Type::Int(BitWidth::unsigned(8))), 3);
        assert_eq!(*m, Type::Array(Box::new(inner), 2));
        let StmtKind::Assign { target, .. } = &p.functions[0].body[1].kind else { panic!() };
        assert_eq!(target.path.len(), 2);
    }

    #[test]
    fn truncated_input() {
        let d = parse("int f(").unwrap_err();
        assert_eq!(d.code, Code::Syntax);
        assert!(d.message.contains("end of input"), "{}", d.message);
    }

    #[test]
    fn rejection_codes() {
        let cases = [
            ("u8 f(u8* p){ return 0; }", Code::Pointer),
            ("u8 f(u8 a){ return *a; }", Code::Pointer),
            ("u8 f(u8 a){ u8 b = &a; return b; }", Code::Pointer),
            ("u8 f(u8 a){ u8 xs[]; return a; }", Code::VariableArray),
            ("u8 f(u8 n){ u8 xs[n]; return n; }", Code::VariableArray),
            ("u8 f(u8 a){ foo b = a; return b; }", Code::UnknownType),
            ("u65 f(u8 a){ return a; }", Code::UnknownType),
            ("u8 g = 3;", Code::Syntax),
        ];
        for (src, code) in cases {
            assert_eq!(parse(src).unwrap_err().code, code, "{src}");
        }
    }
}
