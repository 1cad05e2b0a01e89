// SPDX-License-Identifier: Apache-2.0

//! Typed plaintext values to bit vectors and back, plus per-bit
//! encryption of whole values.
//!
//! Bits are LSB first. Struct fields are packed in declaration order and
//! array elements from index 0, with no padding. A layout also names its
//! scalar leaves (`p`, `xs[2]`, `p.pos.x`); circuits take one input group
//! per leaf in that order.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::backend::{BackendError, CiphertextBit, SchemeParams, SecretKey};
use crate::ir::BitWidth;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Layout {
    Scalar(BitWidth),
    Array(Box<Layout>, usize),
    Struct(Vec<(String, Layout)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub path: String,
    pub ty: BitWidth,
    pub offset: usize,
}

impl Layout {
    pub fn bool() -> Self {
        Layout::Scalar(BitWidth::unsigned(1))
    }

    pub fn total_bits(&self) -> usize {
        match self {
            Layout::Scalar(t) => t.bits() as usize,
            Layout::Array(e, n) => e.total_bits() * n,
            Layout::Struct(fs) => fs.iter().map(|(_, l)| l.total_bits()).sum(),
        }
    }

    /// Scalar leaves in bit order, named relative to `root`.
    pub fn leaves(&self, root: &str) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.collect_leaves(root.to_string(), &mut 0, &mut out);
        out
    }

    fn collect_leaves(&self, path: String, offset: &mut usize, out: &mut Vec<Leaf>) {
        match self {
            Layout::Scalar(ty) => {
                out.push(Leaf { path, ty: *ty, offset: *offset });
                *offset += ty.bits() as usize;
            }
            Layout::Array(e, n) => {
                for i in 0..*n {
                    e.collect_leaves(format!("{path}[{i}]"), offset, out);
                }
            }
            Layout::Struct(fs) => {
                for (name, l) in fs {
                    l.collect_leaves(format!("{path}.{name}"), offset, out);
                }
            }
        }
    }

    /// One line per leaf: path, bit range, type.
    pub fn dump(&self, root: &str) -> String {
        let mut out = String::new();
        for leaf in self.leaves(root) {
            let end = leaf.offset + leaf.ty.bits() as usize;
            writeln!(out, "{} bits {}..{} {}", leaf.path, leaf.offset, end, leaf.ty).unwrap();
        }
        out
    }

    /// Rebuilds the layouts of top-level values from named leaves, such as
    /// the input groups of a `.gates` file. Leaves of one value must be
    /// adjacent and in layout order.
    pub fn from_leaves<'a>(
        leaves: impl IntoIterator<Item = (&'a str, BitWidth)>,
    ) -> Result<Vec<(String, Layout)>, CodecError> {
        let mut roots: Vec<(String, Node)> = Vec::new();
        for (path, ty) in leaves {
            let (root, rest) = split_root(path);
            if roots.last().map(|(r, _)| r.as_str()) != Some(root) {
                if roots.iter().any(|(r, _)| r == root) {
                    return Err(CodecError::shape(path, "leaves of one value are not adjacent"));
                }
                roots.push((root.to_string(), Node::Empty));
            }
            let node = &mut roots.last_mut().unwrap().1;
            node.insert(path, rest, ty)?;
        }
        roots.into_iter().map(|(r, n)| n.finish(&r).map(|l| (r, l))).collect()
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layout::Scalar(t) => write!(f, "{t}"),
            Layout::Array(e, n) => write!(f, "{e}[{n}]"),
            Layout::Struct(fs) => {
                f.write_str("{")?;
                for (i, (name, l)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{name}: {l}")?;
                }
                f.write_str("}")
            }
        }
    }
}

fn split_root(path: &str) -> (&str, &str) {
    let cut = path.find(['[', '.']).unwrap_or(path.len());
    path.split_at(cut)
}

/// Partially built layout while reading leaves.
enum Node {
    Empty,
    Scalar(BitWidth),
    Array(Vec<Node>),
    Struct(Vec<(String, Node)>),
}

impl Node {
    fn insert(&mut self, full: &str, rest: &str, ty: BitWidth) -> Result<(), CodecError> {
        if rest.is_empty() {
            return match self {
                Node::Empty => {
                    *self = Node::Scalar(ty);
                    Ok(())
                }
                _ => Err(CodecError::shape(full, "duplicate leaf")),
            };
        }
        if let Some(after) = rest.strip_prefix('[') {
            let close = after.find(']').ok_or_else(|| CodecError::shape(full, "missing `]`"))?;
            let idx: usize = after[..close].parse().map_err(|_| CodecError::shape(full, "bad index"))?;
            let tail = &after[close + 1..];
            if let Node::Empty = self {
                *self = Node::Array(Vec::new());
            }
            let Node::Array(items) = self else {
                return Err(CodecError::shape(full, "mixes array and non-array leaves"));
            };
            if idx == items.len() {
                items.push(Node::Empty);
            } else if idx + 1 != items.len() {
                return Err(CodecError::shape(full, "array leaves out of order"));
            }
            return items.last_mut().unwrap().insert(full, tail, ty);
        }
        let after = rest.strip_prefix('.').ok_or_else(|| CodecError::shape(full, "bad path"))?;
        let cut = after.find(['[', '.']).unwrap_or(after.len());
        let (field, tail) = after.split_at(cut);
        if let Node::Empty = self {
            *self = Node::Struct(Vec::new());
        }
        let Node::Struct(fields) = self else {
            return Err(CodecError::shape(full, "mixes struct and non-struct leaves"));
        };
        if fields.last().map(|(f, _)| f.as_str()) != Some(field) {
            if fields.iter().any(|(f, _)| f == field) {
                return Err(CodecError::shape(full, "field leaves out of order"));
            }
            fields.push((field.to_string(), Node::Empty));
        }
        fields.last_mut().unwrap().1.insert(full, tail, ty)
    }

    fn finish(self, path: &str) -> Result<Layout, CodecError> {
        match self {
            Node::Empty => Err(CodecError::shape(path, "no leaves")),
            Node::Scalar(t) => Ok(Layout::Scalar(t)),
            Node::Struct(fs) => fs
                .into_iter()
                .map(|(f, n)| n.finish(&format!("{path}.{f}")).map(|l| (f, l)))
                .collect::<Result<_, _>>()
                .map(Layout::Struct),
            Node::Array(items) => {
                let n = items.len();
                let mut layouts = items.into_iter().enumerate().map(|(i, it)| it.finish(&format!("{path}[{i}]")));
                let first = layouts.next().unwrap()?;
                for l in layouts {
                    if l? != first {
                        return Err(CodecError::shape(path, "array elements differ in layout"));
                    }
                }
                Ok(Layout::Array(Box::new(first), n))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i128),
    Array(Vec<Value>),
    Struct(Vec<(String, Value)>),
}

impl Value {
    pub fn as_int(&self) -> Option<i128> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Bytes of a u8 array with trailing zero padding removed.
    pub fn as_string(&self) -> Option<String> {
        let Value::Array(items) = self else { return None };
        let bytes: Vec<u8> =
            items.iter().map(|v| v.as_int().and_then(|i| u8::try_from(i).ok())).collect::<Option<_>>()?;
        Some(unpad_string(&bytes))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Array(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Struct(fs) => {
                f.write_str("{")?;
                for (i, (name, v)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{name}: {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("{path}: value {value} out of range for {ty}")]
    OutOfRange { path: String, value: i128, ty: BitWidth },
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
    #[error("string of {len} bytes exceeds maximum length {max}")]
    StringTooLong { len: usize, max: usize },
    #[error("expected {expected} bits, got {got}")]
    BitCount { expected: usize, got: usize },
    #[error("bit {bit}: {source}")]
    Decrypt { bit: usize, source: BackendError },
    #[error("at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

impl CodecError {
    fn shape(path: &str, message: &str) -> Self {
        CodecError::Shape { path: path.to_string(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedValue {
    pub layout: Layout,
    pub bits: Vec<bool>,
}

impl EncodedValue {
    pub fn new(layout: Layout, bits: Vec<bool>) -> Result<Self, CodecError> {
        if bits.len() != layout.total_bits() {
            return Err(CodecError::BitCount { expected: layout.total_bits(), got: bits.len() });
        }
        Ok(EncodedValue { layout, bits })
    }

    /// The bits split into one vector per leaf.
    pub fn leaf_bits(&self) -> Vec<Vec<bool>> {
        split_leaves(&self.layout, &self.bits)
    }
}

fn split_leaves<T: Clone>(layout: &Layout, bits: &[T]) -> Vec<Vec<T>> {
    layout.leaves("").iter().map(|l| bits[l.offset..l.offset + l.ty.bits() as usize].to_vec()).collect()
}

fn scalar_range(ty: BitWidth) -> (i128, i128) {
    let b = ty.bits();
    if ty.is_signed() {
        (-(1i128 << (b - 1)), (1i128 << (b - 1)) - 1)
    } else {
        (0, (1i128 << b) - 1)
    }
}

pub fn encode(value: &Value, layout: &Layout) -> Result<EncodedValue, CodecError> {
    let mut bits = Vec::with_capacity(layout.total_bits());
    encode_into(value, layout, "value", &mut bits)?;
    Ok(EncodedValue { layout: layout.clone(), bits })
}

fn encode_into(value: &Value, layout: &Layout, path: &str, bits: &mut Vec<bool>) -> Result<(), CodecError> {
    match (value, layout) {
        (Value::Int(v), Layout::Scalar(ty)) => {
            let (lo, hi) = scalar_range(*ty);
            if *v < lo || *v > hi {
                return Err(CodecError::OutOfRange { path: path.to_string(), value: *v, ty: *ty });
            }
            let raw = *v as u128;
            bits.extend((0..ty.bits()).map(|i| raw >> i & 1 == 1));
            Ok(())
        }
        (Value::Array(items), Layout::Array(e, n)) => {
            if items.len() != *n {
                return Err(CodecError::shape(path, &format!("expected {n} elements, got {}", items.len())));
            }
            for (i, item) in items.iter().enumerate() {
                encode_into(item, e, &format!("{path}[{i}]"), bits)?;
            }
            Ok(())
        }
        (Value::Struct(vals), Layout::Struct(fields)) => {
            for (name, l) in fields {
                let v = vals
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| v)
                    .ok_or_else(|| CodecError::shape(path, &format!("missing field `{name}`")))?;
                encode_into(v, l, &format!("{path}.{name}"), bits)?;
            }
            if let Some((extra, _)) = vals.iter().find(|(n, _)| !fields.iter().any(|(f, _)| f == n)) {
                return Err(CodecError::shape(path, &format!("unknown field `{extra}`")));
            }
            Ok(())
        }
        (_, l) => Err(CodecError::shape(path, &format!("value does not match layout {l}"))),
    }
}

pub fn decode(e: &EncodedValue) -> Result<Value, CodecError> {
    if e.bits.len() != e.layout.total_bits() {
        return Err(CodecError::BitCount { expected: e.layout.total_bits(), got: e.bits.len() });
    }
    let mut pos = 0;
    Ok(decode_from(&e.layout, &e.bits, &mut pos))
}

fn decode_from(layout: &Layout, bits: &[bool], pos: &mut usize) -> Value {
    match layout {
        Layout::Scalar(ty) => {
            let b = ty.bits() as usize;
            let raw =
                bits[*pos..*pos + b].iter().enumerate().fold(0u128, |acc, (i, &bit)| acc | (u128::from(bit) << i));
            *pos += b;
            let v = if ty.is_signed() && raw >> (b - 1) & 1 == 1 { raw as i128 - (1i128 << b) } else { raw as i128 };
            Value::Int(v)
        }
        Layout::Array(e, n) => Value::Array((0..*n).map(|_| decode_from(e, bits, pos)).collect()),
        Layout::Struct(fs) => Value::Struct(fs.iter().map(|(n, l)| (n.clone(), decode_from(l, bits, pos))).collect()),
    }
}

/// Word per leaf (unsigned bit pattern), in leaf order.
pub fn leaf_words(e: &EncodedValue) -> Vec<u64> {
    e.leaf_bits()
        .iter()
        .map(|bits| bits.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i)))
        .collect()
}

/// Inverse of [`leaf_words`].
pub fn from_leaf_words(layout: &Layout, words: &[u64]) -> Result<EncodedValue, CodecError> {
    let leaves = layout.leaves("");
    if leaves.len() != words.len() {
        return Err(CodecError::shape("value", &format!("expected {} leaves, got {}", leaves.len(), words.len())));
    }
    let mut bits = Vec::with_capacity(layout.total_bits());
    for (l, w) in leaves.iter().zip(words) {
        bits.extend((0..l.ty.bits()).map(|i| w >> i & 1 == 1));
    }
    Ok(EncodedValue { layout: layout.clone(), bits })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FheValue {
    pub layout: Layout,
    pub bits: Vec<CiphertextBit>,
}

impl FheValue {
    pub fn leaf_bits(&self) -> Vec<Vec<CiphertextBit>> {
        split_leaves(&self.layout, &self.bits)
    }
}

pub fn encrypt_value(key: &SecretKey, e: &EncodedValue, params: &SchemeParams) -> FheValue {
    FheValue { layout: e.layout.clone(), bits: e.bits.iter().map(|&b| key.encrypt_bit(b, params)).collect() }
}

pub fn decrypt_value(key: &SecretKey, v: &FheValue, params: &SchemeParams) -> Result<EncodedValue, CodecError> {
    let bits = v
        .bits
        .iter()
        .enumerate()
        .map(|(bit, c)| key.decrypt_bit(c, params).map_err(|source| CodecError::Decrypt { bit, source }))
        .collect::<Result<Vec<_>, _>>()?;
    EncodedValue::new(v.layout.clone(), bits)
}

/// Bytes of `s` followed by zeros, exactly `max_len` long.
pub fn pad_string(s: &str, max_len: usize) -> Result<Vec<u8>, CodecError> {
    let bytes = s.as_bytes();
    if bytes.len() > max_len {
        return Err(CodecError::StringTooLong { len: bytes.len(), max: max_len });
    }
    let mut out = bytes.to_vec();
    out.resize(max_len, 0);
    Ok(out)
}

/// Strips trailing zero bytes. Interior zeros are kept.
pub fn unpad_string(bytes: &[u8]) -> String {
    let end = bytes.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    String::from_utf8_lossy(&bytes[..end]).into_owned()
}

/// Parses a value literal: `5`, `-3`, `true`, `[1, 2]`, `{x: 3, y: 10}`,
/// or `"hi"`. Strings need the layout to know their padded length, so the
/// layout guides parsing.
pub fn parse_value(text: &str, layout: &Layout) -> Result<Value, CodecError> {
    let mut p = ValueParser { s: text.as_bytes(), pos: 0 };
    let v = p.value(layout)?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.error("trailing input"));
    }
    Ok(v)
}

struct ValueParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl ValueParser<'_> {
    fn error(&self, message: &str) -> CodecError {
        CodecError::Parse { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.s.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), CodecError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn word(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.s.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_' || *c == b'-') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap()
    }

    fn value(&mut self, layout: &Layout) -> Result<Value, CodecError> {
        self.skip_ws();
        match (self.s.get(self.pos), layout) {
            (Some(b'"'), Layout::Array(_, n)) => {
                self.pos += 1;
                let start = self.pos;
                while self.s.get(self.pos).is_some_and(|&c| c != b'"') {
                    self.pos += 1;
                }
                let body = std::str::from_utf8(&self.s[start..self.pos]).map_err(|_| self.error("bad utf-8"))?;
                let body = body.to_string();
                self.expect(b'"')?;
                let bytes = pad_string(&body, *n)?;
                Ok(Value::Array(bytes.into_iter().map(|b| Value::Int(b.into())).collect()))
            }
            (Some(b'['), Layout::Array(e, _)) => {
                self.pos += 1;
                let mut items = Vec::new();
                if !self.eat(b']') {
                    loop {
                        items.push(self.value(e)?);
                        if self.eat(b']') {
                            break;
                        }
                        self.expect(b',')?;
                    }
                }
                Ok(Value::Array(items))
            }
            (Some(b'{'), Layout::Struct(fields)) => {
                self.pos += 1;
                let mut vals = Vec::new();
                if !self.eat(b'}') {
                    loop {
                        let at = self.pos;
                        let name = self.word().to_string();
                        let l = fields
                            .iter()
                            .find(|(f, _)| *f == name)
                            .map(|(_, l)| l)
                            .ok_or(CodecError::Parse { offset: at, message: format!("unknown field `{name}`") })?;
                        self.expect(b':')?;
                        vals.push((name, self.value(l)?));
                        if self.eat(b'}') {
                            break;
                        }
                        self.expect(b',')?;
                    }
                }
                Ok(Value::Struct(vals))
            }
            (_, Layout::Scalar(_)) => {
                let at = self.pos;
                let w = self.word().to_string();
                let v = match w.as_str() {
                    "true" => 1,
                    "false" => 0,
                    _ => {
                        parse_int(&w).ok_or(CodecError::Parse { offset: at, message: format!("bad integer `{w}`") })?
                    }
                };
                Ok(Value::Int(v))
            }
            (_, l) => Err(self.error(&format!("expected a value of layout {l}"))),
        }
    }
}

fn parse_int(w: &str) -> Option<i128> {
    let (neg, digits) = match w.strip_prefix('-') {
        Some(d) => (true, d),
        None => (false, w),
    };
    let v = if let Some(h) = digits.strip_prefix("0x") {
        i128::from_str_radix(h, 16).ok()?
    } else if let Some(b) = digits.strip_prefix("0b") {
        i128::from_str_radix(b, 2).ok()?
    } else {
        digits.parse().ok()?
    };
    Some(if neg { -v } else { v })
}
