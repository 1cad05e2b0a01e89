// SPDX-License-Identifier: Apache-2.0

//! Tree-walking reference interpreter over typed plaintext values.
//!
//! Scalars are held as exact integers in their canonical range (`0..2^N`
//! for unsigned, two's complement range for signed). Each operation is
//! computed exactly and then wrapped into its result type.

use std::collections::HashMap;

use thiserror::Error;

use super::ast::*;
use super::wrap_to;
use crate::codec::{decode, encode, from_leaf_words, leaf_words, CodecError, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("no function named `{0}`")]
    UnknownEntry(String),
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("line {line}: loop exceeded {limit} iterations")]
    LoopLimit { line: u32, limit: u64 },
}

const LOOP_LIMIT: u64 = 1 << 24;

enum Flow {
    Next,
    Return(Value),
    Break,
    Continue,
}

struct Interp<'a> {
    p: &'a Program,
    globals: HashMap<String, Value>,
}

type Scopes = Vec<HashMap<String, Value>>;

/// Runs `entry` on typed arguments.
pub fn interpret(p: &Program, entry: &str, args: &[Value]) -> Result<Value, InterpError> {
    let f = p.function(entry).ok_or_else(|| InterpError::UnknownEntry(entry.to_string()))?;
    if f.params.len() != args.len() {
        return Err(InterpError::Arity { expected: f.params.len(), got: args.len() });
    }
    let mut args_ok = Vec::with_capacity(args.len());
    for (param, a) in f.params.iter().zip(args) {
        let layout = p.layout_of(&param.ty).expect("checked parameter type");
        args_ok.push(decode(&encode(a, &layout)?)?);
    }
    let mut it = Interp { p, globals: HashMap::new() };
    for c in &p.consts {
        let mut scopes = vec![HashMap::new()];
        let v = it.init(&mut scopes, &c.init, &c.ty)?;
        it.globals.insert(c.name.clone(), v);
    }
    it.call(f, args_ok)
}

/// Runs `entry` on one word per input leaf and returns one word per output
/// leaf, matching the IR calling convention.
pub fn interpret_leaves(p: &Program, entry: &str, words: &[u64]) -> Result<Vec<u64>, InterpError> {
    let f = p.function(entry).ok_or_else(|| InterpError::UnknownEntry(entry.to_string()))?;
    let mut args = Vec::new();
    let mut rest = words;
    for param in &f.params {
        let layout = p.layout_of(&param.ty).expect("checked parameter type");
        let n = layout.leaves("").len();
        if rest.len() < n {
            return Err(InterpError::Arity { expected: words.len() + n - rest.len(), got: words.len() });
        }
        args.push(decode(&from_leaf_words(&layout, &rest[..n])?)?);
        rest = &rest[n..];
    }
    if !rest.is_empty() {
        return Err(InterpError::Arity { expected: words.len() - rest.len(), got: words.len() });
    }
    let out = interpret(p, entry, &args)?;
    let layout = p.layout_of(&f.ret).expect("checked return type");
    Ok(leaf_words(&encode(&out, &layout)?))
}

fn int(v: &Value) -> i128 {
    v.as_int().expect("scalar value")
}

fn wrap(v: i128, ty: &Type) -> i128 {
    match ty {
        Type::Int(w) => wrap_to(v, *w),
        Type::Bool => i128::from(v & 1 != 0),
        _ => v,
    }
}

fn bits(ty: &Type) -> u32 {
    match ty {
        Type::Int(w) => w.bits(),
        _ => 1,
    }
}

impl Interp<'_> {
    fn zero(&self, ty: &Type) -> Value {
        match ty {
            Type::Array(el, n) => Value::Array(vec![self.zero(el); *n]),
            Type::Struct(name) => {
                let def = self.p.struct_def(name).expect("checked struct");
                Value::Struct(def.fields.iter().map(|(f, t)| (f.clone(), self.zero(t))).collect())
            }
            _ => Value::Int(0),
        }
    }

    fn call(&self, f: &Function, args: Vec<Value>) -> Result<Value, InterpError> {
        let mut scopes: Scopes = vec![f.params.iter().map(|p| p.name.clone()).zip(args).collect()];
        match self.block(&mut scopes, &f.body)? {
            Flow::Return(v) => Ok(v),
            _ => Ok(self.zero(&f.ret)),
        }
    }

    fn lookup<'s>(&'s self, scopes: &'s Scopes, name: &str) -> &'s Value {
        scopes.iter().rev().find_map(|s| s.get(name)).or_else(|| self.globals.get(name)).expect("checked variable")
    }

    fn init(&self, scopes: &mut Scopes, init: &Init, ty: &Type) -> Result<Value, InterpError> {
        match init {
            Init::Expr(e) => self.eval(scopes, e),
            Init::List(items, _) => {
                let mut v = self.zero(ty);
                match (&mut v, ty) {
                    (Value::Array(slots), Type::Array(el, _)) => {
                        for (slot, item) in slots.iter_mut().zip(items) {
                            *slot = self.init(scopes, item, el)?;
                        }
                    }
                    (Value::Struct(slots), Type::Struct(name)) => {
                        let def = self.p.struct_def(name).expect("checked struct");
                        for ((slot, item), (_, fty)) in slots.iter_mut().zip(items).zip(&def.fields) {
                            slot.1 = self.init(scopes, item, fty)?;
                        }
                    }
                    _ => unreachable!("checked initialiser"),
                }
                Ok(v)
            }
        }
    }

    fn block(&self, scopes: &mut Scopes, stmts: &[Stmt]) -> Result<Flow, InterpError> {
        scopes.push(HashMap::new());
        let mut flow = Flow::Next;
        for s in stmts {
            flow = self.stmt(scopes, s)?;
            if !matches!(flow, Flow::Next) {
                break;
            }
        }
        scopes.pop();
        Ok(flow)
    }

    fn stmt(&self, scopes: &mut Scopes, s: &Stmt) -> Result<Flow, InterpError> {
        match &s.kind {
            StmtKind::Decl { name, ty, init, .. } => {
                let v = match init {
                    Some(i) => self.init(scopes, i, ty)?,
                    None => self.zero(ty),
                };
                scopes.last_mut().unwrap().insert(name.clone(), v);
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval(scopes, value)?;
                let mut keys = Vec::with_capacity(target.path.len());
                for a in &target.path {
                    keys.push(match a {
                        Access::Index(i) => Ok(int(&self.eval(scopes, i)?)),
                        Access::Field(f) => Err(f.as_str()),
                    });
                }
                let slot =
                    scopes.iter_mut().rev().find_map(|s| s.get_mut(&target.base)).expect("checked assignment target");
                store(slot, &keys, v);
            }
            StmtKind::If { cond, then, els } => {
                if int(&self.eval(scopes, cond)?) != 0 {
                    return self.block(scopes, then);
                } else if let Some(els) = els {
                    return self.block(scopes, els);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                scopes.push(HashMap::new());
                if let Some(init) = init {
                    self.stmt(scopes, init)?;
                }
                let mut n = 0u64;
                let mut out = Flow::Next;
                loop {
                    if let Some(c) = cond {
                        if int(&self.eval(scopes, c)?) == 0 {
                            break;
                        }
                    }
                    n += 1;
                    if n > LOOP_LIMIT {
                        return Err(InterpError::LoopLimit { line: s.span.line, limit: LOOP_LIMIT });
                    }
                    match self.block(scopes, body)? {
                        Flow::Return(v) => {
                            out = Flow::Return(v);
                            break;
                        }
                        Flow::Break => break,
                        Flow::Next | Flow::Continue => {}
                    }
                    if let Some(step) = step {
                        self.stmt(scopes, step)?;
                    }
                }
                scopes.pop();
                return Ok(out);
            }
            StmtKind::While { cond, body } => {
                let mut n = 0u64;
                while int(&self.eval(scopes, cond)?) != 0 {
                    n += 1;
                    if n > LOOP_LIMIT {
                        return Err(InterpError::LoopLimit { line: s.span.line, limit: LOOP_LIMIT });
                    }
                    match self.block(scopes, body)? {
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Break => break,
                        Flow::Next | Flow::Continue => {}
                    }
                }
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(scopes, e)?,
                    None => Value::Int(0),
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Expr(e) => {
                self.eval(scopes, e)?;
            }
            StmtKind::Block(b) => return self.block(scopes, b),
        }
        Ok(Flow::Next)
    }

    fn eval(&self, scopes: &mut Scopes, e: &Expr) -> Result<Value, InterpError> {
        let ty = &e.ty;
        let v = match &e.kind {
            ExprKind::Int(v) => wrap(*v, ty),
            ExprKind::Bool(b) => i128::from(*b),
            ExprKind::Var(n) => return Ok(self.lookup(scopes, n).clone()),
            ExprKind::Index(b, i) => {
                let base = self.eval(scopes, b)?;
                let i = int(&self.eval(scopes, i)?);
                let Value::Array(items) = base else { unreachable!("checked index") };
                return Ok(match usize::try_from(i).ok().and_then(|i| items.get(i)) {
                    Some(v) => v.clone(),
                    None => self.zero(ty),
                });
            }
            ExprKind::Field(b, f) => {
                let Value::Struct(fields) = self.eval(scopes, b)? else { unreachable!("checked field") };
                return Ok(fields.into_iter().find(|(g, _)| g == f).expect("checked field").1);
            }
            ExprKind::Unary(op, a) => {
                let a = int(&self.eval(scopes, a)?);
                match op {
                    UnOp::Neg => wrap(-a, ty),
                    UnOp::BitNot => wrap(!a, ty),
                    UnOp::LogicNot => i128::from(a == 0),
                }
            }
            ExprKind::Binary { op, lhs, rhs, op_ty } => {
                let a = int(&self.eval(scopes, lhs)?);
                let b = int(&self.eval(scopes, rhs)?);
                binary(*op, a, b, op_ty, &rhs.ty)
            }
            ExprKind::Ternary(c, t, f) => {
                let c = int(&self.eval(scopes, c)?);
                return self.eval(scopes, if c != 0 { t } else { f });
            }
            ExprKind::Cast(target, inner) => {
                let v = int(&self.eval(scopes, inner)?);
                match target {
                    Type::Bool => i128::from(v != 0),
                    t => wrap(v, t),
                }
            }
            ExprKind::Call(name, args) => {
                let f = self.p.function(name).expect("checked call");
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(scopes, a)?);
                }
                return self.call(f, vals);
            }
        };
        Ok(Value::Int(v))
    }
}

fn binary(op: BinOp, a: i128, b: i128, op_ty: &Type, amount_ty: &Type) -> i128 {
    let w = bits(op_ty);
    let signed = op_ty.is_signed();
    match op {
        BinOp::Add => wrap(a + b, op_ty),
        BinOp::Sub => wrap(a - b, op_ty),
        BinOp::Mul => wrap(a.wrapping_mul(b), op_ty),
        BinOp::Div if b == 0 => wrap(-1, op_ty),
        BinOp::Div => wrap(a / b, op_ty),
        BinOp::Rem if b == 0 => a,
        BinOp::Rem => wrap(a % b, op_ty),
        BinOp::And => wrap(a & b, op_ty),
        BinOp::Or => wrap(a | b, op_ty),
        BinOp::Xor => wrap(a ^ b, op_ty),
        BinOp::Shl | BinOp::Shr => {
            // The amount is read as an unsigned number.
            let s = if b < 0 { b + (1i128 << bits(amount_ty)) } else { b };
            if s >= i128::from(w) {
                if op == BinOp::Shr && signed && a < 0 {
                    -1
                } else {
                    0
                }
            } else if op == BinOp::Shl {
                wrap(a << s, op_ty)
            } else {
                a >> s
            }
        }
        BinOp::Eq => i128::from(a == b),
        BinOp::Ne => i128::from(a != b),
        BinOp::Lt => i128::from(a < b),
        BinOp::Le => i128::from(a <= b),
        BinOp::Gt => i128::from(a > b),
        BinOp::Ge => i128::from(a >= b),
        BinOp::LogicAnd => i128::from(a != 0 && b != 0),
        BinOp::LogicOr => i128::from(a != 0 || b != 0),
    }
}

/// Writes `v` at `path` inside `slot`; out-of-range indices write nothing.
fn store(slot: &mut Value, path: &[Result<i128, &str>], v: Value) {
    let Some((key, rest)) = path.split_first() else {
        *slot = v;
        return;
    };
    match (slot, key) {
        (Value::Array(items), Ok(i)) => {
            if let Some(item) = usize::try_from(*i).ok().and_then(|i| items.get_mut(i)) {
                store(item, rest, v);
            }
        }
        (Value::Struct(fields), Err(f)) => {
            let item = &mut fields.iter_mut().find(|(g, _)| g == f).expect("checked field").1;
            store(item, rest, v);
        }
        _ => unreachable!("checked assignment path"),
    }
}
