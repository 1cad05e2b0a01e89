// SPDX-License-Identifier: Apache-2.0

//! Data-independence rules: loops with constant trip counts, no
//! recursion, no early exits from loops. Dynamic array indices are legal
//! but reported as warnings because they cost a MUX tree per access.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::diag::{Code, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Mutable,
    /// A `const` local; `true` if its initialiser is a compile-time constant.
    Const(bool),
    Counter,
}

struct Walker {
    globals: HashSet<String>,
    scopes: Vec<HashMap<String, Var>>,
    errors: Vec<Diagnostic>,
    warnings: Vec<Diagnostic>,
}

/// Every restriction violation in `p`, in source order per function.
pub fn check_restrictions(p: &Program) -> Vec<Diagnostic> {
    let mut w = walk(p);
    w.errors.extend(recursion(p));
    w.errors
}

/// Warnings for indices that are not compile-time constants.
pub fn dynamic_index_warnings(p: &Program) -> Vec<Diagnostic> {
    walk(p).warnings
}

fn walk(p: &Program) -> Walker {
    let globals = p.consts.iter().map(|c| c.name.clone()).collect();
    let mut w = Walker { globals, scopes: Vec::new(), errors: Vec::new(), warnings: Vec::new() };
    for f in &p.functions {
        w.scopes.push(f.params.iter().map(|p| (p.name.clone(), Var::Mutable)).collect());
        w.block(&f.body);
        w.scopes.pop();
    }
    w
}

fn strip_casts(e: &Expr) -> &Expr {
    match &e.kind {
        ExprKind::Cast(_, inner) => strip_casts(inner),
        _ => e,
    }
}

impl Walker {
    fn lookup(&self, name: &str) -> Option<Var> {
        for s in self.scopes.iter().rev() {
            if let Some(v) = s.get(name) {
                return Some(*v);
            }
        }
        self.globals.contains(name).then_some(Var::Const(true))
    }

    fn is_const(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) => true,
            ExprKind::Var(n) => matches!(self.lookup(n), Some(Var::Const(true) | Var::Counter)),
            ExprKind::Index(b, i) => self.is_const(b) && self.is_const(i),
            ExprKind::Field(b, _) => self.is_const(b),
            ExprKind::Unary(_, a) | ExprKind::Cast(_, a) => self.is_const(a),
            ExprKind::Binary { lhs, rhs, .. } => self.is_const(lhs) && self.is_const(rhs),
            ExprKind::Ternary(c, t, f) => self.is_const(c) && self.is_const(t) && self.is_const(f),
            ExprKind::Call(..) => false,
        }
    }

    fn block(&mut self, stmts: &[Stmt]) {
        self.scopes.push(HashMap::new());
        for s in stmts {
            self.stmt(s);
        }
        self.scopes.pop();
    }

    fn declare(&mut self, name: &str, v: Var) {
        self.scopes.last_mut().unwrap().insert(name.to_string(), v);
    }

    fn init(&mut self, init: &Init) {
        match init {
            Init::Expr(e) => self.expr(e),
            Init::List(items, _) => items.iter().for_each(|i| self.init(i)),
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl { name, init, is_const, .. } => {
                if let Some(init) = init {
                    self.init(init);
                }
                let constant = match init {
                    Some(Init::Expr(e)) => self.is_const(e),
                    _ => false,
                };
                self.declare(name, if *is_const { Var::Const(constant) } else { Var::Mutable });
            }
            StmtKind::Assign { target, value } => {
                self.assign(target);
                self.expr(value);
            }
            StmtKind::If { cond, then, els } => {
                self.expr(cond);
                self.block(then);
                if let Some(els) = els {
                    self.block(els);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                self.for_loop(s.span, init.as_deref(), cond.as_ref(), step.as_deref(), body)
            }
            StmtKind::While { cond, body } => {
                self.errors.push(Diagnostic::error(
                    Code::UnboundedLoop,
                    s.span,
                    "while loops have a data-dependent trip count; use a for loop with constant bounds",
                ));
                self.expr(cond);
                self.block(body);
            }
            StmtKind::Break | StmtKind::Continue => {
                let kw = if s.kind == StmtKind::Break { "break" } else { "continue" };
                self.errors.push(Diagnostic::error(
                    Code::EarlyExit,
                    s.span,
                    format!("`{kw}` is not supported: loops always run their full trip count"),
                ));
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e);
                }
            }
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::Block(b) => self.block(b),
        }
    }

    fn assign(&mut self, target: &LValue) {
        for a in &target.path {
            if let Access::Index(i) = a {
                self.index(i);
            }
        }
        if self.lookup(&target.base) == Some(Var::Counter) {
            self.errors.push(Diagnostic::error(
                Code::LoopVarMutated,
                target.span,
                format!("loop counter `{}` is assigned inside the loop body", target.base),
            ));
        }
    }

    fn for_loop(&mut self, span: Span, init: Option<&Stmt>, cond: Option<&Expr>, step: Option<&Stmt>, body: &[Stmt]) {
        self.scopes.push(HashMap::new());
        let bound_err = |what: &str, span: Span| {
            Diagnostic::error(Code::LoopBound, span, format!("loop bound must be compile-time constant: {what}"))
        };
        let counter = match init.map(|s| &s.kind) {
            Some(StmtKind::Decl { name, ty: Type::Int(_), init: Some(Init::Expr(e)), .. }) => {
                self.expr(e);
                if !self.is_const(e) {
                    self.errors
                        .push(bound_err(&format!("the start value of `{name}` depends on runtime data"), e.span));
                }
                Some(name.clone())
            }
            Some(StmtKind::Assign { target, value }) if target.path.is_empty() => {
                self.expr(value);
                if !self.is_const(value) {
                    let msg = format!("the start value of `{}` depends on runtime data", target.base);
                    self.errors.push(bound_err(&msg, value.span));
                }
                Some(target.base.clone())
            }
            _ => {
                self.errors.push(Diagnostic::error(
                    Code::LoopForm,
                    span,
                    "a for loop must initialise one integer counter",
                ));
                None
            }
        };
        if let Some(c) = &counter {
            self.declare(c, Var::Mutable);
        }
        let is_counter = |e: &Expr| matches!(&strip_casts(e).kind, ExprKind::Var(n) if Some(n) == counter.as_ref());
        match cond.map(|c| (c, &c.kind)) {
            Some((c, ExprKind::Binary { op, lhs, rhs, .. }))
                if op.is_comparison() && (is_counter(lhs) || is_counter(rhs)) =>
            {
                self.expr(c);
                let bound = if is_counter(lhs) { rhs } else { lhs };
                if !self.is_const(bound) {
                    self.errors.push(bound_err("the bound depends on runtime data", bound.span));
                }
            }
            _ if counter.is_none() => {}
            _ => self.errors.push(Diagnostic::error(
                Code::LoopForm,
                cond.map_or(span, |c| c.span),
                "the loop condition must compare the counter with a constant bound",
            )),
        }
        if let Some(c) = &counter {
            self.declare(c, Var::Counter);
        }
        match step.map(|s| (s.span, &s.kind)) {
            Some((_, StmtKind::Assign { target, value }))
                if target.path.is_empty() && Some(&target.base) == counter.as_ref() =>
            {
                self.expr(value);
                if !self.is_const(value) {
                    self.errors.push(bound_err("the step depends on runtime data", value.span));
                }
            }
            _ if counter.is_none() => {}
            other => self.errors.push(Diagnostic::error(
                Code::LoopForm,
                other.map_or(span, |(s, _)| s),
                "the loop step must update the counter",
            )),
        }
        self.block(body);
        self.scopes.pop();
    }

    fn index(&mut self, i: &Expr) {
        if !self.is_const(i) {
            self.warnings.push(Diagnostic::warning(
                Code::DynamicIndex,
                i.span,
                "index is not a compile-time constant; it becomes a MUX tree over every element",
            ));
        }
        self.expr(i);
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => {}
            ExprKind::Index(b, i) => {
                self.expr(b);
                self.index(i);
            }
            ExprKind::Field(b, _) | ExprKind::Unary(_, b) | ExprKind::Cast(_, b) => self.expr(b),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
            ExprKind::Ternary(c, t, f) => {
                self.expr(c);
                self.expr(t);
                self.expr(f);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| self.expr(a)),
        }
    }
}

fn calls_in_expr(e: &Expr, out: &mut Vec<(String, Span)>) {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => {}
        ExprKind::Index(a, b) | ExprKind::Binary { lhs: a, rhs: b, .. } => {
            calls_in_expr(a, out);
            calls_in_expr(b, out);
        }
        ExprKind::Field(a, _) | ExprKind::Unary(_, a) | ExprKind::Cast(_, a) => calls_in_expr(a, out),
        ExprKind::Ternary(c, t, f) => {
            calls_in_expr(c, out);
            calls_in_expr(t, out);
            calls_in_expr(f, out);
        }
        ExprKind::Call(name, args) => {
            out.push((name.clone(), e.span));
            args.iter().for_each(|a| calls_in_expr(a, out));
        }
    }
}

fn calls_in_init(i: &Init, out: &mut Vec<(String, Span)>) {
    match i {
        Init::Expr(e) => calls_in_expr(e, out),
        Init::List(items, _) => items.iter().for_each(|i| calls_in_init(i, out)),
    }
}

fn calls_in_stmts(stmts: &[Stmt], out: &mut Vec<(String, Span)>) {
    for s in stmts {
        match &s.kind {
            StmtKind::Decl { init, .. } => {
                if let Some(i) = init {
                    calls_in_init(i, out);
                }
            }
            StmtKind::Assign { target, value } => {
                for a in &target.path {
                    if let Access::Index(i) = a {
                        calls_in_expr(i, out);
                    }
                }
                calls_in_expr(value, out);
            }
            StmtKind::If { cond, then, els } => {
                calls_in_expr(cond, out);
                calls_in_stmts(then, out);
                if let Some(e) = els {
                    calls_in_stmts(e, out);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                calls_in_stmts(init.as_deref().map(std::slice::from_ref).unwrap_or(&[]), out);
                if let Some(c) = cond {
                    calls_in_expr(c, out);
                }
                calls_in_stmts(step.as_deref().map(std::slice::from_ref).unwrap_or(&[]), out);
                calls_in_stmts(body, out);
            }
            StmtKind::While { cond, body } => {
                calls_in_expr(cond, out);
                calls_in_stmts(body, out);
            }
            StmtKind::Return(Some(e)) | StmtKind::Expr(e) => calls_in_expr(e, out),
            StmtKind::Return(None) | StmtKind::Break | StmtKind::Continue => {}
            StmtKind::Block(b) => calls_in_stmts(b, out),
        }
    }
}

/// Call graph edges, per function.
pub(crate) fn call_graph(p: &Program) -> HashMap<String, Vec<(String, Span)>> {
    p.functions
        .iter()
        .map(|f| {
            let mut out = Vec::new();
            calls_in_stmts(&f.body, &mut out);
            (f.name.clone(), out)
        })
        .collect()
}

fn reaches(graph: &HashMap<String, Vec<(String, Span)>>, from: &str, to: &str) -> bool {
    let mut seen = HashSet::new();
    let mut stack = vec![from];
    while let Some(f) = stack.pop() {
        if f == to {
            return true;
        }
        if seen.insert(f) {
            if let Some(edges) = graph.get(f) {
                stack.extend(edges.iter().map(|(g, _)| g.as_str()));
            }
        }
    }
    false
}

fn recursion(p: &Program) -> Vec<Diagnostic> {
    let graph = call_graph(p);
    let mut out = Vec::new();
    for f in &p.functions {
        for (g, span) in &graph[&f.name] {
            if !reaches(&graph, g, &f.name) {
                continue;
            }
            let msg = if *g == f.name {
                format!("recursion unsupported: `{g}` calls itself")
            } else {
                format!("recursion unsupported: `{}` calls `{g}`, which calls back into `{}`", f.name, f.name)
            };
            out.push(Diagnostic::error(Code::Recursion, *span, msg));
        }
    }
    out
}
