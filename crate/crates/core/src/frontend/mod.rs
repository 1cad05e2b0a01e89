// SPDX-License-Identifier: Apache-2.0

//! The restricted C-like source language: parsing, type checking,
//! data-independence restrictions, a reference interpreter, and lowering
//! to the multi-bit IR.

pub mod ast;
mod check;
mod diag;
mod interp;
mod lexer;
mod lower;
mod parser;
mod restrict;

pub use ast::{Function, Program, Type};
pub use diag::{Code, Diagnostic, Severity};
pub use interp::{interpret, interpret_leaves, InterpError};
pub use lower::{lower_to_ir, lower_with, LowerOptions};
pub use restrict::check_restrictions;

use crate::codec::Layout;
use crate::ir::{BitWidth, IrFunction};

/// `v` reduced into the value range of `w`.
pub(crate) fn wrap_to(v: i128, w: BitWidth) -> i128 {
    let m = 1i128 << w.bits();
    let u = v.rem_euclid(m);
    if w.is_signed() && u >= m / 2 {
        u - m
    } else {
        u
    }
}

/// Parses and type-checks `src`. On success every expression carries its
/// type and the program's dynamic-index warnings are attached.
pub fn parse(src: &str) -> Result<Program, Vec<Diagnostic>> {
    let toks = lexer::lex(src).map_err(|d| vec![d])?;
    let mut program = parser::parse_tokens(toks).map_err(|d| vec![d])?;
    let errors = check::check_program(&mut program);
    if !errors.is_empty() {
        return Err(errors);
    }
    program.warnings = restrict::dynamic_index_warnings(&program);
    Ok(program)
}

/// Output of [`compile`].
#[derive(Debug, Clone)]
pub struct Compiled {
    pub program: Program,
    pub entry: String,
    pub ir: IrFunction,
}

/// Parse, check restrictions and lower `entry` (the last function when
/// `None`).
pub fn compile(src: &str, entry: Option<&str>) -> Result<Compiled, Vec<Diagnostic>> {
    let program = parse(src)?;
    let errors = check_restrictions(&program);
    if !errors.is_empty() {
        return Err(errors);
    }
    let entry = match entry {
        Some(e) => e.to_string(),
        None => program
            .default_entry()
            .ok_or_else(|| vec![Diagnostic::error(Code::Entry, ast::Span::default(), "program has no functions")])?
            .to_string(),
    };
    let ir = lower_to_ir(&program, &entry).map_err(|d| vec![d])?;
    Ok(Compiled { program, entry, ir })
}

impl Program {
    pub fn default_entry(&self) -> Option<&str> {
        self.functions.last().map(|f| f.name.as_str())
    }

    /// Bit layout of a value of type `ty`; `None` for unresolved types.
    pub fn layout_of(&self, ty: &Type) -> Option<Layout> {
        Some(match ty {
            Type::Int(w) => Layout::Scalar(*w),
            Type::Bool => Layout::bool(),
            Type::Array(el, n) => Layout::Array(Box::new(self.layout_of(el)?), *n),
            Type::Struct(name) => Layout::Struct(
                self.struct_def(name)?
                    .fields
                    .iter()
                    .map(|(f, t)| Some((f.clone(), self.layout_of(t)?)))
                    .collect::<Option<_>>()?,
            ),
            Type::Lit | Type::Unknown => return None,
        })
    }

    /// Layouts of the parameters and of the result of `entry`.
    pub fn entry_layouts(&self, entry: &str) -> Option<(Vec<(String, Layout)>, Layout)> {
        let f = self.function(entry)?;
        let params = f.params.iter().map(|p| Some((p.name.clone(), self.layout_of(&p.ty)?))).collect::<Option<_>>()?;
        Some((params, self.layout_of(&f.ret)?))
    }
}

#[cfg(test)]
mod tests;
