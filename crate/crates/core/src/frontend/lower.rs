// SPDX-License-Identifier: Apache-2.0

//! AST to IR: loops are unrolled, branches become selects over both arms,
//! calls are inlined, and every return site is merged into one result.
//!
//! Nodes whose operands are all constant are emitted as ordinary nodes
//! (folding is the optimizer's job) but their values are tracked so that
//! loop conditions, shift amounts and indices can be resolved.

use std::collections::HashMap;

use super::ast::*;
use super::diag::{Code, Diagnostic};
use super::restrict::check_restrictions;
use crate::ir::{eval_node, mask, sign_extend, IrFunction, IrInput, IrNode, IrOutput, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowerOptions {
    /// Lowering fails once the function would exceed this many nodes.
    pub node_limit: usize,
    /// Cap on the trip count of any single loop.
    pub max_loop_iterations: u64,
}

impl Default for LowerOptions {
    fn default() -> Self {
        LowerOptions { node_limit: 1_000_000, max_loop_iterations: 1 << 20 }
    }
}

pub fn lower_to_ir(p: &Program, entry: &str) -> Result<IrFunction, Diagnostic> {
    lower_with(p, entry, LowerOptions::default())
}

#[derive(Debug, Clone)]
enum Val {
    Scalar(NodeId),
    Agg(Vec<Val>),
}

impl Val {
    fn id(&self) -> NodeId {
        match self {
            Val::Scalar(id) => *id,
            Val::Agg(_) => unreachable!("checked scalar"),
        }
    }

    fn items(self) -> Vec<Val> {
        match self {
            Val::Agg(v) => v,
            Val::Scalar(_) => unreachable!("checked aggregate"),
        }
    }

    fn flatten(&self, out: &mut Vec<NodeId>) {
        match self {
            Val::Scalar(id) => out.push(*id),
            Val::Agg(items) => items.iter().for_each(|v| v.flatten(out)),
        }
    }
}

type Scope = HashMap<String, (Val, Type)>;

#[derive(Debug, Clone)]
struct Frame {
    scopes: Vec<Scope>,
    /// 1-bit value: a return has already happened on this path.
    done: NodeId,
    ret: Option<Val>,
}

type R<T> = Result<T, Diagnostic>;

struct Lowerer<'a> {
    p: &'a Program,
    opts: LowerOptions,
    f: IrFunction,
    width: Vec<u32>,
    konst: Vec<Option<u64>>,
    lits: HashMap<(u64, u32), NodeId>,
    globals: Scope,
    span: Span,
}

fn width_of(ty: &Type) -> u32 {
    match ty {
        Type::Int(w) => w.bits(),
        Type::Bool => 1,
        other => unreachable!("scalar type expected, found {other}"),
    }
}

fn ceil_log2(n: usize) -> u32 {
    usize::BITS - (n.max(1) - 1).leading_zeros()
}

pub fn lower_with(p: &Program, entry: &str, opts: LowerOptions) -> R<IrFunction> {
    if let Some(d) = check_restrictions(p).into_iter().next() {
        return Err(d);
    }
    let f = p
        .function(entry)
        .ok_or_else(|| Diagnostic::error(Code::Entry, Span::default(), format!("no function named `{entry}`")))?;
    let mut l = Lowerer {
        p,
        opts,
        f: IrFunction::new(entry),
        width: Vec::new(),
        konst: Vec::new(),
        lits: HashMap::new(),
        globals: HashMap::new(),
        span: f.span,
    };
    let mut args = Vec::new();
    for param in &f.params {
        let layout = p.layout_of(&param.ty).expect("checked parameter type");
        let mut leaves = layout.leaves(&param.name).into_iter();
        args.push(l.input_val(&param.ty, &mut leaves));
    }
    for c in &p.consts {
        l.span = c.span;
        let mut fr = l.frame(HashMap::new());
        let v = l.init(&mut fr, &c.init, &c.ty)?;
        l.globals.insert(c.name.clone(), (v, c.ty.clone()));
    }
    let result = l.call(f, args)?;
    let mut ids = Vec::new();
    result.flatten(&mut ids);
    let layout = p.layout_of(&f.ret).expect("checked return type");
    for (leaf, id) in layout.leaves("ret").into_iter().zip(ids) {
        l.f.outputs.push(IrOutput { name: leaf.path, source: id, ty: leaf.ty });
    }
    Ok(l.f)
}

impl Lowerer<'_> {
    fn fresh(&mut self, w: u32, k: Option<u64>) -> NodeId {
        let id = NodeId(self.width.len() as u32);
        self.width.push(w);
        self.konst.push(k);
        id
    }

    fn input_val(&mut self, ty: &Type, leaves: &mut impl Iterator<Item = crate::codec::Leaf>) -> Val {
        match ty {
            Type::Array(el, n) => Val::Agg((0..*n).map(|_| self.input_val(el, leaves)).collect()),
            Type::Struct(name) => {
                let def = self.p.struct_def(name).expect("checked struct");
                Val::Agg(def.fields.iter().map(|(_, t)| self.input_val(t, leaves)).collect())
            }
            _ => {
                let leaf = leaves.next().expect("layout matches type");
                let id = self.fresh(leaf.ty.bits(), None);
                self.f.inputs.push(IrInput { id, name: leaf.path, ty: leaf.ty });
                Val::Scalar(id)
            }
        }
    }

    fn node(&mut self, kind: NodeKind, ops: &[NodeId], w: u32) -> R<NodeId> {
        if self.f.nodes.len() >= self.opts.node_limit {
            return Err(Diagnostic::error(
                Code::NodeLimit,
                self.span,
                format!("the unrolled function exceeds the node limit of {}", self.opts.node_limit),
            ));
        }
        let k = match kind {
            NodeKind::Literal(v) => Some(v),
            _ => ops
                .iter()
                .map(|o| self.konst[o.0 as usize].map(|v| (v, self.width[o.0 as usize])))
                .collect::<Option<Vec<_>>>()
                .map(|vals| eval_node(kind, w, &vals)),
        };
        let id = self.fresh(w, k);
        self.f.nodes.push(IrNode { id, kind, operands: ops.to_vec(), width: w });
        Ok(id)
    }

    fn lit(&mut self, v: u64, w: u32) -> R<NodeId> {
        let v = v & mask(w);
        if let Some(id) = self.lits.get(&(v, w)) {
            return Ok(*id);
        }
        let id = self.node(NodeKind::Literal(v), &[], w)?;
        self.lits.insert((v, w), id);
        Ok(id)
    }

    fn konst(&self, id: NodeId) -> Option<u64> {
        self.konst[id.0 as usize]
    }

    fn w(&self, id: NodeId) -> u32 {
        self.width[id.0 as usize]
    }

    fn frame(&mut self, scope: Scope) -> Frame {
        let done = self.lit(0, 1).expect("first literal fits");
        Frame { scopes: vec![scope], done, ret: None }
    }

    fn zero(&mut self, ty: &Type) -> R<Val> {
        Ok(match ty {
            Type::Array(el, n) => {
                let z = self.zero(el)?;
                Val::Agg(vec![z; *n])
            }
            Type::Struct(name) => {
                let def = self.p.struct_def(name).expect("checked struct");
                let mut items = Vec::new();
                for (_, t) in &def.fields {
                    items.push(self.zero(t)?);
                }
                Val::Agg(items)
            }
            t => Val::Scalar(self.lit(0, width_of(t))?),
        })
    }

    fn select(&mut self, c: NodeId, t: &Val, e: &Val) -> R<Val> {
        Ok(match (t, e) {
            (Val::Scalar(a), Val::Scalar(b)) => {
                if a == b {
                    Val::Scalar(*a)
                } else {
                    let w = self.w(*a);
                    Val::Scalar(self.node(NodeKind::Select, &[c, *a, *b], w)?)
                }
            }
            (Val::Agg(xs), Val::Agg(ys)) => {
                let mut out = Vec::with_capacity(xs.len());
                for (x, y) in xs.iter().zip(ys) {
                    out.push(self.select(c, x, y)?);
                }
                Val::Agg(out)
            }
            _ => unreachable!("checked select arms"),
        })
    }

    fn call(&mut self, f: &Function, args: Vec<Val>) -> R<Val> {
        let scope = f.params.iter().zip(args).map(|(p, v)| (p.name.clone(), (v, p.ty.clone()))).collect();
        let mut fr = self.frame(scope);
        self.stmts(&mut fr, &f.body)?;
        let zero = self.zero(&f.ret)?;
        match fr.ret {
            None => Ok(zero),
            Some(r) if self.konst(fr.done) == Some(1) => Ok(r),
            Some(r) => self.select(fr.done, &r, &zero),
        }
    }

    fn is_done(&self, fr: &Frame) -> bool {
        self.konst(fr.done) == Some(1)
    }

    fn stmts(&mut self, fr: &mut Frame, stmts: &[Stmt]) -> R<()> {
        fr.scopes.push(HashMap::new());
        for s in stmts {
            if self.is_done(fr) {
                break;
            }
            self.stmt(fr, s)?;
        }
        fr.scopes.pop();
        Ok(())
    }

    fn lookup<'f>(&'f self, fr: &'f Frame, name: &str) -> &'f (Val, Type) {
        fr.scopes.iter().rev().find_map(|s| s.get(name)).or_else(|| self.globals.get(name)).expect("checked variable")
    }

    fn init(&mut self, fr: &mut Frame, init: &Init, ty: &Type) -> R<Val> {
        match init {
            Init::Expr(e) => self.expr(fr, e),
            Init::List(items, _) => {
                let slots: Vec<Type> = match ty {
                    Type::Array(el, n) => vec![(**el).clone(); *n],
                    Type::Struct(name) => {
                        self.p.struct_def(name).expect("checked struct").fields.iter().map(|(_, t)| t.clone()).collect()
                    }
                    _ => unreachable!("checked initialiser"),
                };
                let mut out = Vec::with_capacity(slots.len());
                for (i, t) in slots.iter().enumerate() {
                    out.push(match items.get(i) {
                        Some(item) => self.init(fr, item, t)?,
                        None => self.zero(t)?,
                    });
                }
                Ok(Val::Agg(out))
            }
        }
    }

    fn stmt(&mut self, fr: &mut Frame, s: &Stmt) -> R<()> {
        self.span = s.span;
        match &s.kind {
            StmtKind::Decl { name, ty, init, .. } => {
                let v = match init {
                    Some(i) => self.init(fr, i, ty)?,
                    None => self.zero(ty)?,
                };
                fr.scopes.last_mut().unwrap().insert(name.clone(), (v, ty.clone()));
            }
            StmtKind::Assign { target, value } => {
                let v = self.expr(fr, value)?;
                let (old, mut ty) = self.lookup(fr, &target.base).clone();
                let mut keys = Vec::with_capacity(target.path.len());
                for a in &target.path {
                    match a {
                        Access::Index(i) => {
                            let Type::Array(el, n) = ty else { unreachable!("checked index") };
                            let idx = self.expr(fr, i)?.id();
                            keys.push(Key::Index(self.index_key(idx, &i.ty, n)?, n));
                            ty = *el;
                        }
                        Access::Field(f) => {
                            let pos = self.field_pos(&ty, f);
                            ty = self.field_type(&ty, pos);
                            keys.push(Key::Field(pos));
                        }
                    }
                }
                let new = self.store(old, &keys, v)?;
                let slot = fr
                    .scopes
                    .iter_mut()
                    .rev()
                    .find_map(|s| s.get_mut(&target.base))
                    .expect("checked assignment target");
                slot.0 = new;
            }
            StmtKind::If { cond, then, els } => {
                let c = self.expr(fr, cond)?.id();
                match self.konst(c) {
                    Some(1) => self.stmts(fr, then)?,
                    Some(_) => {
                        if let Some(els) = els {
                            self.stmts(fr, els)?;
                        }
                    }
                    None => {
                        let mut a = fr.clone();
                        self.stmts(&mut a, then)?;
                        let mut b = fr.clone();
                        if let Some(els) = els {
                            self.stmts(&mut b, els)?;
                        }
                        self.merge(fr, c, a, b)?;
                    }
                }
            }
            StmtKind::For { init, cond, step, body } => {
                fr.scopes.push(HashMap::new());
                if let Some(init) = init {
                    self.stmt(fr, init)?;
                }
                let mut trips = 0u64;
                while !self.is_done(fr) {
                    if let Some(cond) = cond {
                        self.span = cond.span;
                        let c = self.expr(fr, cond)?.id();
                        match self.konst(c) {
                            Some(0) => break,
                            Some(_) => {}
                            None => {
                                return Err(Diagnostic::error(
                                    Code::LoopBound,
                                    cond.span,
                                    "loop bound must be compile-time constant: the condition depends on runtime data",
                                ))
                            }
                        }
                    }
                    trips += 1;
                    if trips > self.opts.max_loop_iterations {
                        return Err(Diagnostic::error(
                            Code::LoopBound,
                            s.span,
                            format!("loop runs for more than {} iterations", self.opts.max_loop_iterations),
                        ));
                    }
                    self.stmts(fr, body)?;
                    if self.is_done(fr) {
                        break;
                    }
                    if let Some(step) = step {
                        self.stmt(fr, step)?;
                    }
                }
                fr.scopes.pop();
            }
            StmtKind::While { .. } => {
                return Err(Diagnostic::error(Code::UnboundedLoop, s.span, "while loops cannot be unrolled"));
            }
            StmtKind::Break | StmtKind::Continue => {
                return Err(Diagnostic::error(Code::EarlyExit, s.span, "loop exits cannot be unrolled"));
            }
            StmtKind::Return(e) => {
                let e = e.as_ref().expect("checked return value");
                let v = self.expr(fr, e)?;
                let merged = if self.konst(fr.done) == Some(0) {
                    v
                } else {
                    let old = fr.ret.clone().unwrap_or_else(|| v.clone());
                    self.select(fr.done, &old, &v)?
                };
                fr.ret = Some(merged);
                fr.done = self.lit(1, 1)?;
            }
            StmtKind::Expr(e) => {
                self.expr(fr, e)?;
            }
            StmtKind::Block(b) => self.stmts(fr, b)?,
        }
        Ok(())
    }

    /// Joins two branch frames into `fr` under condition `c`.
    fn merge(&mut self, fr: &mut Frame, c: NodeId, a: Frame, b: Frame) -> R<()> {
        for (i, scope) in fr.scopes.iter_mut().enumerate() {
            for (name, slot) in scope.iter_mut() {
                slot.0 = self.select(c, &a.scopes[i][name].0, &b.scopes[i][name].0)?;
            }
        }
        fr.done = self.select(c, &Val::Scalar(a.done), &Val::Scalar(b.done))?.id();
        fr.ret = match (a.ret, b.ret) {
            (None, None) => None,
            (x, y) => {
                // A side without a return value has not returned, so the
                // value it contributes is never observed.
                let shape = x.as_ref().or(y.as_ref()).unwrap().clone();
                let x = x.unwrap_or_else(|| shape.clone());
                let y = y.unwrap_or(shape);
                Some(self.select(c, &x, &y)?)
            }
        };
        Ok(())
    }

    fn field_pos(&self, ty: &Type, f: &str) -> usize {
        let Type::Struct(name) = ty else { unreachable!("checked field") };
        let def = self.p.struct_def(name).expect("checked struct");
        def.fields.iter().position(|(g, _)| g == f).expect("checked field")
    }

    fn field_type(&self, ty: &Type, pos: usize) -> Type {
        let Type::Struct(name) = ty else { unreachable!("checked field") };
        self.p.struct_def(name).expect("checked struct").fields[pos].1.clone()
    }

    fn extend(&mut self, x: NodeId, from: u32, to: u32, signed: bool) -> R<NodeId> {
        use std::cmp::Ordering::*;
        match to.cmp(&from) {
            Equal => Ok(x),
            Less => self.node(NodeKind::Slice(0), &[x], to),
            Greater => self.node(if signed { NodeKind::Sext } else { NodeKind::Zext }, &[x], to),
        }
    }

    fn index_key(&mut self, idx: NodeId, ty: &Type, n: usize) -> R<IndexKey> {
        let w = width_of(ty);
        let signed = ty.is_signed();
        if let Some(k) = self.konst(idx) {
            let v = if signed { i128::from(sign_extend(k, w)) } else { i128::from(k) };
            if v < 0 || v >= n as i128 {
                return Err(Diagnostic::error(
                    Code::IndexBounds,
                    self.span,
                    format!("index {v} is out of bounds for length {n}"),
                ));
            }
            return Ok(IndexKey::Const(v as usize));
        }
        let need = usize::BITS - n.leading_zeros() + 1;
        let wide = (w + 1).max(need).min(64);
        let ix = self.extend(idx, w, wide, signed)?;
        let check = signed || w >= 64 || (1u128 << w) > n as u128;
        Ok(IndexKey::Dynamic { ix, check })
    }

    /// MUX tree over the low index bits, then zero when out of range.
    fn read(&mut self, items: Vec<Val>, key: IndexKey, elem: &Type) -> R<Val> {
        let (ix, check) = match key {
            IndexKey::Const(k) => return Ok(items[k].clone()),
            IndexKey::Dynamic { ix, check } => (ix, check),
        };
        let n = items.len();
        let zero = self.zero(elem)?;
        let k = ceil_log2(n);
        let mut level = items;
        level.resize(1 << k, zero.clone());
        for j in 0..k {
            let bit = self.node(NodeKind::Slice(j), &[ix], 1)?;
            let mut next = Vec::with_capacity(level.len() / 2);
            for pair in level.chunks(2) {
                next.push(self.select(bit, &pair[1], &pair[0])?);
            }
            level = next;
        }
        let mut r = level.pop().expect("non-empty array");
        if check {
            let len = self.lit(n as u64, self.w(ix))?;
            let ok = self.node(NodeKind::Ult, &[ix, len], 1)?;
            r = self.select(ok, &r, &zero)?;
        }
        Ok(r)
    }

    fn store(&mut self, old: Val, keys: &[Key], v: Val) -> R<Val> {
        let Some((key, rest)) = keys.split_first() else { return Ok(v) };
        let mut items = old.items();
        match key {
            Key::Field(pos) | Key::Index(IndexKey::Const(pos), _) => {
                items[*pos] = self.store(items[*pos].clone(), rest, v)?;
            }
            Key::Index(IndexKey::Dynamic { ix, .. }, n) => {
                debug_assert_eq!(items.len(), *n);
                for (i, item) in items.iter_mut().enumerate() {
                    let at = self.lit(i as u64, self.w(*ix))?;
                    let hit = self.node(NodeKind::Eq, &[*ix, at], 1)?;
                    let new = self.store(item.clone(), rest, v.clone())?;
                    *item = self.select(hit, &new, item)?;
                }
            }
        }
        Ok(Val::Agg(items))
    }

    fn sign_fill(&mut self, x: NodeId, w: u32) -> R<NodeId> {
        if w == 1 {
            return Ok(x);
        }
        let top = self.node(NodeKind::Slice(w - 1), &[x], 1)?;
        self.node(NodeKind::Sext, &[top], w)
    }

    fn shift_const(&mut self, op: BinOp, x: NodeId, w: u32, s: u64, arith: bool) -> R<NodeId> {
        if s == 0 {
            return Ok(x);
        }
        if s >= u64::from(w) {
            return if arith { self.sign_fill(x, w) } else { self.lit(0, w) };
        }
        let s = s as u32;
        match (op, arith) {
            (BinOp::Shl, _) => self.node(NodeKind::ShlConst(s), &[x], w),
            (_, false) => self.node(NodeKind::ShrConst(s), &[x], w),
            (_, true) => {
                let hi = self.node(NodeKind::Slice(s), &[x], w - s)?;
                self.node(NodeKind::Sext, &[hi], w)
            }
        }
    }

    /// Barrel shifter: one select stage per amount bit below the width; any
    /// higher set bit forces the fill value.
    fn shift(&mut self, op: BinOp, x: NodeId, amt: NodeId, op_ty: &Type, amt_ty: &Type) -> R<NodeId> {
        let w = width_of(op_ty);
        let arith = op == BinOp::Shr && op_ty.is_signed();
        if let Some(s) = self.konst(amt) {
            return self.shift_const(op, x, w, s, arith);
        }
        let mut r = x;
        let mut big: Option<NodeId> = None;
        for j in 0..width_of(amt_ty) {
            let bit = self.node(NodeKind::Slice(j), &[amt], 1)?;
            if j >= 63 || (1u64 << j) >= u64::from(w) {
                big = Some(match big {
                    None => bit,
                    Some(b) => self.node(NodeKind::Or, &[b, bit], 1)?,
                });
            } else {
                let shifted = self.shift_const(op, r, w, 1 << j, arith)?;
                r = self.node(NodeKind::Select, &[bit, shifted, r], w)?;
            }
        }
        if let Some(b) = big {
            let fill = if arith { self.sign_fill(x, w)? } else { self.lit(0, w)? };
            r = self.node(NodeKind::Select, &[b, fill, r], w)?;
        }
        Ok(r)
    }

    fn convert(&mut self, x: NodeId, from: &Type, to: &Type) -> R<NodeId> {
        match to {
            Type::Bool if *from == Type::Bool => Ok(x),
            Type::Bool => {
                let z = self.lit(0, width_of(from))?;
                self.node(NodeKind::Ne, &[x, z], 1)
            }
            t => self.extend(x, width_of(from), width_of(t), from.is_signed()),
        }
    }

    fn binary(&mut self, op: BinOp, a: NodeId, b: NodeId, op_ty: &Type, amt_ty: &Type) -> R<NodeId> {
        if op.is_shift() {
            return self.shift(op, a, b, op_ty, amt_ty);
        }
        let w = width_of(op_ty);
        let s = op_ty.is_signed();
        let pick = |signed: NodeKind, unsigned: NodeKind| if s { signed } else { unsigned };
        let (kind, x, y, ow) = match op {
            BinOp::Add => (NodeKind::Add, a, b, w),
            BinOp::Sub => (NodeKind::Sub, a, b, w),
            BinOp::Mul => (NodeKind::Mul, a, b, w),
            BinOp::Div => (pick(NodeKind::SDiv, NodeKind::UDiv), a, b, w),
            BinOp::Rem => (pick(NodeKind::SMod, NodeKind::UMod), a, b, w),
            BinOp::And | BinOp::LogicAnd => (NodeKind::And, a, b, w),
            BinOp::Or | BinOp::LogicOr => (NodeKind::Or, a, b, w),
            BinOp::Xor => (NodeKind::Xor, a, b, w),
            BinOp::Eq => (NodeKind::Eq, a, b, 1),
            BinOp::Ne => (NodeKind::Ne, a, b, 1),
            BinOp::Lt => (pick(NodeKind::Slt, NodeKind::Ult), a, b, 1),
            BinOp::Le => (pick(NodeKind::Sle, NodeKind::Ule), a, b, 1),
            BinOp::Gt => (pick(NodeKind::Slt, NodeKind::Ult), b, a, 1),
            BinOp::Ge => (pick(NodeKind::Sle, NodeKind::Ule), b, a, 1),
            BinOp::Shl | BinOp::Shr => unreachable!(),
        };
        self.node(kind, &[x, y], ow)
    }

    fn expr(&mut self, fr: &mut Frame, e: &Expr) -> R<Val> {
        Ok(match &e.kind {
            ExprKind::Int(v) => Val::Scalar(self.lit(*v as u64, width_of(&e.ty))?),
            ExprKind::Bool(b) => Val::Scalar(self.lit(u64::from(*b), 1)?),
            ExprKind::Var(n) => self.lookup(fr, n).0.clone(),
            ExprKind::Index(b, i) => {
                let base = self.expr(fr, b)?.items();
                let Type::Array(el, n) = &b.ty else { unreachable!("checked index") };
                let idx = self.expr(fr, i)?.id();
                let key = self.index_key(idx, &i.ty, *n)?;
                self.read(base, key, el)?
            }
            ExprKind::Field(b, f) => {
                let pos = self.field_pos(&b.ty, f);
                self.expr(fr, b)?.items().swap_remove(pos)
            }
            ExprKind::Unary(op, a) => {
                let x = self.expr(fr, a)?.id();
                let kind = if *op == UnOp::Neg { NodeKind::Neg } else { NodeKind::Not };
                Val::Scalar(self.node(kind, &[x], width_of(&e.ty))?)
            }
            ExprKind::Binary { op, lhs, rhs, op_ty } => {
                let a = self.expr(fr, lhs)?.id();
                let b = self.expr(fr, rhs)?.id();
                let ty = if op.is_logical() { &Type::Bool } else { op_ty };
                Val::Scalar(self.binary(*op, a, b, ty, &rhs.ty)?)
            }
            ExprKind::Ternary(c, t, f) => {
                let c = self.expr(fr, c)?.id();
                match self.konst(c) {
                    Some(1) => self.expr(fr, t)?,
                    Some(_) => self.expr(fr, f)?,
                    None => {
                        let t = self.expr(fr, t)?;
                        let f = self.expr(fr, f)?;
                        self.select(c, &t, &f)?
                    }
                }
            }
            ExprKind::Cast(to, inner) => {
                let x = self.expr(fr, inner)?.id();
                Val::Scalar(self.convert(x, &inner.ty, to)?)
            }
            ExprKind::Call(name, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.expr(fr, a)?);
                }
                let f = self.p.function(name).expect("checked call");
                let span = self.span;
                let r = self.call(f, vals)?;
                self.span = span;
                r
            }
        })
    }
}

enum Key {
    Index(IndexKey, usize),
    Field(usize),
}

enum IndexKey {
    Const(usize),
    /// Index widened so that negative values compare as out of range.
    Dynamic {
        ix: NodeId,
        check: bool,
    },
}
