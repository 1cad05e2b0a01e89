// SPDX-License-Identifier: Apache-2.0

//! Name resolution and typing. After a clean check every expression has a
//! concrete scalar or aggregate type, integer literals carry the type they
//! were given by context, and every implicit conversion is an explicit
//! `Cast` node.

use std::collections::HashMap;

use super::ast::*;
use super::diag::{Code, Diagnostic};
use super::wrap_to;
use crate::ir::BitWidth;

pub(crate) fn range(w: BitWidth) -> (i128, i128) {
    let b = w.bits();
    if w.is_signed() {
        (-(1i128 << (b - 1)), (1i128 << (b - 1)) - 1)
    } else {
        (0, (1i128 << b) - 1)
    }
}

fn fits(v: i128, w: BitWidth) -> bool {
    let (lo, hi) = range(w);
    lo <= v && v <= hi
}

fn bits_for(v: u128) -> u32 {
    (128 - v.leading_zeros()).max(1)
}

/// Smallest type holding every value in `lo..=hi`, capped at 64 bits.
pub(crate) fn cover(lo: i128, hi: i128) -> BitWidth {
    if lo >= 0 {
        BitWidth::unsigned(bits_for(hi as u128).min(64))
    } else {
        let raw = |v: u128| 128 - v.leading_zeros();
        let neg = raw((-(lo + 1)) as u128) + 1;
        let pos = raw(hi.max(0) as u128) + 1;
        BitWidth::signed(neg.max(pos).min(64))
    }
}

/// Common type of two typed operands.
pub(crate) fn unify(a: BitWidth, b: BitWidth) -> BitWidth {
    match (a.is_signed(), b.is_signed()) {
        (x, y) if x == y => BitWidth::new(a.bits().max(b.bits()), x).unwrap(),
        _ => {
            let (u, s) = if a.is_signed() { (b, a) } else { (a, b) };
            BitWidth::signed((u.bits() + 1).max(s.bits()).min(64))
        }
    }
}

fn lit(e: &Expr) -> Option<i128> {
    match (&e.ty, &e.kind) {
        (Type::Lit, ExprKind::Int(v)) => Some(*v),
        _ => None,
    }
}

const LIT_MIN: i128 = -(1i128 << 63);
const LIT_MAX: i128 = (1i128 << 64) - 1;

fn fold_binary(op: BinOp, a: i128, b: i128) -> Result<(ExprKind, Type), String> {
    let overflow = || "constant expression overflows 64 bits".to_string();
    let v = match op {
        BinOp::Add => a.checked_add(b).ok_or_else(overflow)?,
        BinOp::Sub => a.checked_sub(b).ok_or_else(overflow)?,
        BinOp::Mul => a.checked_mul(b).ok_or_else(overflow)?,
        BinOp::Div | BinOp::Rem if b == 0 => return Err("division by zero in constant expression".into()),
        BinOp::Div => a / b,
        BinOp::Rem => a % b,
        BinOp::And => a & b,
        BinOp::Or => a | b,
        BinOp::Xor => a ^ b,
        BinOp::Shl | BinOp::Shr if !(0..128).contains(&b) => return Err("shift amount out of range".into()),
        BinOp::Shl => a.checked_mul(1i128.checked_shl(b as u32).ok_or_else(overflow)?).ok_or_else(overflow)?,
        BinOp::Shr => a >> b,
        BinOp::Eq => return Ok((ExprKind::Bool(a == b), Type::Bool)),
        BinOp::Ne => return Ok((ExprKind::Bool(a != b), Type::Bool)),
        BinOp::Lt => return Ok((ExprKind::Bool(a < b), Type::Bool)),
        BinOp::Le => return Ok((ExprKind::Bool(a <= b), Type::Bool)),
        BinOp::Gt => return Ok((ExprKind::Bool(a > b), Type::Bool)),
        BinOp::Ge => return Ok((ExprKind::Bool(a >= b), Type::Bool)),
        BinOp::LogicAnd => return Ok((ExprKind::Bool(a != 0 && b != 0), Type::Bool)),
        BinOp::LogicOr => return Ok((ExprKind::Bool(a != 0 || b != 0), Type::Bool)),
    };
    if !(LIT_MIN..=LIT_MAX).contains(&v) {
        return Err(overflow());
    }
    Ok((ExprKind::Int(v), Type::Lit))
}

struct Checker {
    structs: HashMap<String, Vec<(String, Type)>>,
    funcs: HashMap<String, (Type, Vec<Type>)>,
    globals: HashMap<String, Type>,
    // name -> (type, assignable)
    scopes: Vec<HashMap<String, (Type, bool)>>,
    ret: Type,
    diags: Vec<Diagnostic>,
}

pub fn check_program(p: &mut Program) -> Vec<Diagnostic> {
    let mut c = Checker {
        structs: HashMap::new(),
        funcs: HashMap::new(),
        globals: HashMap::new(),
        scopes: Vec::new(),
        ret: Type::Unknown,
        diags: Vec::new(),
    };
    for s in &p.structs {
        if c.structs.contains_key(&s.name) {
            c.err(Code::Duplicate, s.span, format!("struct `{}` is defined twice", s.name));
            continue;
        }
        for (i, (f, _)) in s.fields.iter().enumerate() {
            if s.fields[..i].iter().any(|(g, _)| g == f) {
                c.err(Code::Duplicate, s.span, format!("field `{f}` appears twice in struct `{}`", s.name));
            }
        }
        c.structs.insert(s.name.clone(), s.fields.clone());
    }
    for k in &mut p.consts {
        if c.globals.contains_key(&k.name) {
            c.err(Code::Duplicate, k.span, format!("constant `{}` is defined twice", k.name));
        }
        c.init(&mut k.init, &k.ty);
        c.globals.insert(k.name.clone(), k.ty.clone());
    }
    for f in &p.functions {
        if c.funcs.contains_key(&f.name) {
            c.err(Code::Duplicate, f.span, format!("function `{}` is defined twice", f.name));
            continue;
        }
        c.funcs.insert(f.name.clone(), (f.ret.clone(), f.params.iter().map(|p| p.ty.clone()).collect()));
    }
    for f in &mut p.functions {
        c.ret = f.ret.clone();
        c.scopes.push(HashMap::new());
        for param in &f.params {
            if c.scopes[0].contains_key(&param.name) {
                c.err(Code::Duplicate, param.span, format!("parameter `{}` is declared twice", param.name));
            }
            c.scopes[0].insert(param.name.clone(), (param.ty.clone(), true));
        }
        c.block(&mut f.body);
        c.scopes.pop();
    }
    c.diags
}

impl Checker {
    fn err(&mut self, code: Code, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn lookup(&self, name: &str) -> Option<(Type, bool)> {
        for s in self.scopes.iter().rev() {
            if let Some(v) = s.get(name) {
                return Some(v.clone());
            }
        }
        self.globals.get(name).map(|t| (t.clone(), false))
    }

    fn block(&mut self, stmts: &mut [Stmt]) {
        self.scopes.push(HashMap::new());
        for s in stmts {
            self.stmt(s);
        }
        self.scopes.pop();
    }

    fn declare(&mut self, name: &str, ty: Type, assignable: bool, span: Span) {
        let scope = self.scopes.last_mut().expect("inside a function");
        if scope.contains_key(name) {
            self.err(Code::Duplicate, span, format!("`{name}` is already declared in this scope"));
            return;
        }
        scope.insert(name.to_string(), (ty, assignable));
    }

    fn stmt(&mut self, s: &mut Stmt) {
        let span = s.span;
        match &mut s.kind {
            StmtKind::Decl { name, ty, init, is_const } => {
                if let Some(init) = init {
                    self.init(init, ty);
                }
                let (name, ty, assignable) = (name.clone(), ty.clone(), !*is_const);
                self.declare(&name, ty, assignable, span);
            }
            StmtKind::Assign { target, value } => {
                self.lvalue(target);
                self.expr(value);
                let ty = target.ty.clone();
                self.coerce(value, &ty);
            }
            StmtKind::If { cond, then, els } => {
                self.cond(cond);
                self.block(then);
                if let Some(els) = els {
                    self.block(els);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                self.scopes.push(HashMap::new());
                if let Some(init) = init {
                    self.stmt(init);
                }
                if let Some(cond) = cond {
                    self.cond(cond);
                }
                if let Some(step) = step {
                    self.stmt(step);
                }
                self.block(body);
                self.scopes.pop();
            }
            StmtKind::While { cond, body } => {
                self.cond(cond);
                self.block(body);
            }
            StmtKind::Return(Some(e)) => {
                self.expr(e);
                let ret = self.ret.clone();
                self.coerce(e, &ret);
            }
            StmtKind::Return(None) => {
                let msg = format!("return needs a value of type {}", self.ret);
                self.err(Code::Type, span, msg);
            }
            StmtKind::Break | StmtKind::Continue => {}
            StmtKind::Expr(e) => {
                self.expr(e);
                self.settle(e);
            }
            StmtKind::Block(b) => self.block(b),
        }
    }

    fn cond(&mut self, e: &mut Expr) {
        self.expr(e);
        self.coerce(e, &Type::Bool);
    }

    fn init(&mut self, init: &mut Init, ty: &Type) {
        match init {
            Init::Expr(e) => {
                self.expr(e);
                self.coerce(e, ty);
            }
            Init::List(items, span) => {
                let span = *span;
                let slots: Vec<Type> = match ty {
                    Type::Array(el, n) => vec![(**el).clone(); *n],
                    Type::Struct(name) => match self.structs.get(name) {
                        Some(fs) => fs.iter().map(|(_, t)| t.clone()).collect(),
                        None => return,
                    },
                    Type::Unknown => return,
                    other => {
                        self.err(Code::Type, span, format!("brace initialiser used for scalar type {other}"));
                        return;
                    }
                };
                if items.len() > slots.len() {
                    self.err(Code::Type, span, format!("{} initialisers given for {} slots", items.len(), slots.len()));
                }
                for (item, slot) in items.iter_mut().zip(&slots) {
                    self.init(item, slot);
                }
            }
        }
    }

    fn lvalue(&mut self, lv: &mut LValue) {
        let Some((mut ty, assignable)) = self.lookup(&lv.base) else {
            self.err(Code::Undefined, lv.span, format!("undefined variable `{}`", lv.base));
            lv.ty = Type::Unknown;
            return;
        };
        if !assignable {
            self.err(Code::Type, lv.span, format!("cannot assign to constant `{}`", lv.base));
        }
        for access in &mut lv.path {
            ty = match access {
                Access::Index(idx) => self.index(idx, &ty, lv.span),
                Access::Field(f) => self.field(&ty, f, lv.span),
            };
        }
        lv.ty = ty;
    }

    fn index(&mut self, idx: &mut Expr, base: &Type, span: Span) -> Type {
        self.expr(idx);
        let (elem, len) = match base {
            Type::Array(el, n) => ((**el).clone(), Some(*n)),
            Type::Unknown => (Type::Unknown, None),
            other => {
                self.err(Code::Type, span, format!("cannot index a value of type {other}"));
                (Type::Unknown, None)
            }
        };
        match &idx.ty {
            Type::Lit => {
                let v = lit(idx).unwrap_or(0);
                if let Some(n) = len {
                    if v < 0 || v >= n as i128 {
                        self.err(Code::IndexBounds, idx.span, format!("index {v} is out of bounds for length {n}"));
                    }
                }
                self.settle(idx);
            }
            Type::Bool => self.coerce(idx, &Type::Int(BitWidth::unsigned(1))),
            Type::Int(_) | Type::Unknown => {}
            other => {
                let msg = format!("array index must be an integer, found {other}");
                self.err(Code::Type, idx.span, msg);
            }
        }
        elem
    }

    fn field(&mut self, base: &Type, f: &str, span: Span) -> Type {
        match base {
            Type::Struct(name) => {
                let found =
                    self.structs.get(name).and_then(|fs| fs.iter().find(|(g, _)| g == f)).map(|(_, t)| t.clone());
                found.unwrap_or_else(|| {
                    self.err(Code::Undefined, span, format!("struct `{name}` has no field `{f}`"));
                    Type::Unknown
                })
            }
            Type::Unknown => Type::Unknown,
            other => {
                self.err(Code::Type, span, format!("field access `.{f}` on non-struct type {other}"));
                Type::Unknown
            }
        }
    }

    /// Gives an untyped literal its smallest covering type.
    fn settle(&mut self, e: &mut Expr) {
        if let Some(v) = lit(e) {
            self.coerce(e, &Type::Int(cover(v, v)));
        }
    }

    fn coerce(&mut self, e: &mut Expr, target: &Type) {
        if e.ty == Type::Unknown || *target == Type::Unknown || e.ty == *target {
            return;
        }
        match (&e.ty, target) {
            (Type::Lit, Type::Int(w)) => {
                let v = lit(e).unwrap_or(0);
                e.kind = ExprKind::Int(wrap_to(v, *w));
                e.ty = target.clone();
            }
            (Type::Lit, Type::Bool) => {
                let v = lit(e).unwrap_or(0);
                e.kind = ExprKind::Bool(v != 0);
                e.ty = Type::Bool;
            }
            (a, b) if a.is_scalar() && b.is_scalar() && *b != Type::Lit => {
                let span = e.span;
                let inner = std::mem::replace(e, Expr::new(ExprKind::Bool(false), span));
                *e = Expr { kind: ExprKind::Cast(target.clone(), Box::new(inner)), ty: target.clone(), span };
            }
            (a, b) => {
                let msg = format!("expected {b}, found {a}");
                self.err(Code::Type, e.span, msg);
            }
        }
    }

    /// Turns a bool operand of an integer operator into a `u1`.
    fn int_operand(&mut self, e: &mut Expr, op: &str) -> bool {
        match &e.ty {
            Type::Bool => {
                self.coerce(e, &Type::Int(BitWidth::unsigned(1)));
                true
            }
            Type::Int(_) | Type::Lit => true,
            Type::Unknown => false,
            other => {
                let msg = format!("operator `{op}` needs scalar operands, found {other}");
                self.err(Code::Type, e.span, msg);
                false
            }
        }
    }

    fn width(e: &Expr) -> BitWidth {
        match e.ty {
            Type::Int(w) => w,
            _ => BitWidth::unsigned(1),
        }
    }

    /// Converts both operands to their common type and returns it.
    fn unify_operands(&mut self, a: &mut Expr, b: &mut Expr, op: &str) -> Type {
        if !(self.int_operand(a, op) & self.int_operand(b, op)) {
            return Type::Unknown;
        }
        let w = match (lit(a), lit(b)) {
            (Some(x), Some(y)) => cover(x.min(y), x.max(y)),
            (Some(v), None) => widen(Self::width(b), v),
            (None, Some(v)) => widen(Self::width(a), v),
            (None, None) => unify(Self::width(a), Self::width(b)),
        };
        let t = Type::Int(w);
        self.coerce(a, &t);
        self.coerce(b, &t);
        t
    }

    fn expr(&mut self, e: &mut Expr) {
        let span = e.span;
        let mut folded = None;
        let ty = match &mut e.kind {
            ExprKind::Int(_) => Type::Lit,
            ExprKind::Bool(_) => Type::Bool,
            ExprKind::Var(n) => match self.lookup(n) {
                Some((t, _)) => t,
                None => {
                    let msg = format!("undefined variable `{n}`");
                    self.err(Code::Undefined, span, msg);
                    Type::Unknown
                }
            },
            ExprKind::Index(b, i) => {
                self.expr(b);
                let bt = b.ty.clone();
                self.index(i, &bt, span)
            }
            ExprKind::Field(b, f) => {
                self.expr(b);
                let bt = b.ty.clone();
                self.field(&bt, f, span)
            }
            ExprKind::Unary(op, a) => {
                self.expr(a);
                if let Some(v) = lit(a) {
                    let (k, t) = match op {
                        UnOp::Neg => (ExprKind::Int(-v), Type::Lit),
                        UnOp::BitNot => (ExprKind::Int(!v), Type::Lit),
                        UnOp::LogicNot => (ExprKind::Bool(v == 0), Type::Bool),
                    };
                    folded = Some(k);
                    t
                } else {
                    match op {
                        UnOp::LogicNot => {
                            self.coerce(a, &Type::Bool);
                            Type::Bool
                        }
                        UnOp::BitNot if a.ty == Type::Bool => Type::Bool,
                        UnOp::BitNot | UnOp::Neg => {
                            let sym = if *op == UnOp::Neg { "-" } else { "~" };
                            if self.int_operand(a, sym) {
                                a.ty.clone()
                            } else {
                                Type::Unknown
                            }
                        }
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs, op_ty } => {
                self.expr(lhs);
                self.expr(rhs);
                if let (Some(a), Some(b)) = (lit(lhs), lit(rhs)) {
                    match fold_binary(*op, a, b) {
                        Ok((k, t)) => {
                            folded = Some(k);
                            t
                        }
                        Err(msg) => {
                            self.err(Code::Type, span, msg);
                            Type::Unknown
                        }
                    }
                } else {
                    self.binary(*op, lhs, rhs, op_ty)
                }
            }
            ExprKind::Ternary(c, t, f) => {
                self.cond(c);
                self.expr(t);
                self.expr(f);
                if t.ty == Type::Bool && f.ty == Type::Bool {
                    Type::Bool
                } else if t.ty.is_scalar() && f.ty.is_scalar() {
                    self.unify_operands(t, f, "?:")
                } else if t.ty == Type::Unknown || f.ty == Type::Unknown {
                    Type::Unknown
                } else if t.ty == f.ty {
                    t.ty.clone()
                } else {
                    let msg = format!("branches of `?:` have different types {} and {}", t.ty, f.ty);
                    self.err(Code::Type, span, msg);
                    Type::Unknown
                }
            }
            ExprKind::Cast(target, inner) => {
                self.expr(inner);
                let target = target.clone();
                if !matches!(target, Type::Int(_) | Type::Bool) {
                    self.err(Code::Type, span, format!("cannot cast to {target}"));
                    Type::Unknown
                } else if !inner.ty.is_scalar() && inner.ty != Type::Unknown {
                    let msg = format!("cannot cast {} to {target}", inner.ty);
                    self.err(Code::Type, span, msg);
                    Type::Unknown
                } else {
                    if inner.ty == Type::Lit {
                        self.coerce(inner, &target);
                    }
                    target
                }
            }
            ExprKind::Call(name, args) => {
                for a in args.iter_mut() {
                    self.expr(a);
                }
                match self.funcs.get(name).cloned() {
                    None => {
                        let msg = format!("undefined function `{name}`");
                        self.err(Code::Undefined, span, msg);
                        Type::Unknown
                    }
                    Some((ret, params)) => {
                        if params.len() != args.len() {
                            let msg = format!("`{name}` takes {} arguments, {} given", params.len(), args.len());
                            self.err(Code::Type, span, msg);
                        }
                        for (a, p) in args.iter_mut().zip(&params) {
                            self.coerce(a, p);
                        }
                        ret
                    }
                }
            }
        };
        if let Some(k) = folded {
            e.kind = k;
        }
        e.ty = ty;
    }

    fn binary(&mut self, op: BinOp, lhs: &mut Expr, rhs: &mut Expr, op_ty: &mut Type) -> Type {
        let sym = op.symbol();
        if op.is_logical() {
            self.coerce(lhs, &Type::Bool);
            self.coerce(rhs, &Type::Bool);
            *op_ty = Type::Bool;
            return Type::Bool;
        }
        if op.is_shift() {
            if let Some(v) = lit(lhs) {
                let w = if fits(v, BitWidth::signed(32)) { BitWidth::signed(32) } else { cover(v, v) };
                self.coerce(lhs, &Type::Int(w));
            }
            if let Some(v) = lit(rhs) {
                if v < 0 {
                    self.err(Code::Type, rhs.span, "negative shift amount");
                }
                self.settle(rhs);
            }
            if !(self.int_operand(lhs, sym) & self.int_operand(rhs, sym)) {
                return Type::Unknown;
            }
            *op_ty = lhs.ty.clone();
            return lhs.ty.clone();
        }
        let bool_ok = matches!(op, BinOp::And | BinOp::Or | BinOp::Xor | BinOp::Eq | BinOp::Ne);
        let t = if bool_ok && lhs.ty == Type::Bool && rhs.ty == Type::Bool {
            Type::Bool
        } else {
            self.unify_operands(lhs, rhs, sym)
        };
        *op_ty = t.clone();
        if op.is_comparison() {
            Type::Bool
        } else {
            t
        }
    }
}

fn widen(w: BitWidth, v: i128) -> BitWidth {
    if fits(v, w) {
        return w;
    }
    let (lo, hi) = range(w);
    cover(lo.min(v), hi.max(v))
}
