// SPDX-License-Identifier: Apache-2.0

//! `name=value` assignments and testbench batch lines.

use fhec::codec::{encode, parse_value, Layout, Value};

/// Splits on whitespace outside brackets, braces and quotes.
pub fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut quoted, mut start) = (0i32, false, None);
    for (i, c) in s.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '[' | '{' if !quoted => depth += 1,
            ']' | '}' if !quoted => depth -= 1,
            c if c.is_whitespace() && depth == 0 && !quoted => {
                if let Some(st) = start.take() {
                    out.push(&s[st..i]);
                }
                continue;
            }
            _ => {}
        }
        start.get_or_insert(i);
    }
    if let Some(st) = start {
        out.push(&s[st..]);
    }
    out
}

/// Binds `name=value` and positional tokens to the parameter list.
/// Positional tokens fill parameters in order; named ones may come in any
/// order. Every parameter must end up bound exactly once.
pub fn bind(tokens: &[&str], params: &[(String, Layout)]) -> Result<Vec<Value>, String> {
    let mut slots: Vec<Option<Value>> = vec![None; params.len()];
    let mut next = 0;
    for tok in tokens {
        let (idx, text) = match tok.split_once('=') {
            Some((name, text)) if is_name(name) => {
                let idx = params
                    .iter()
                    .position(|(p, _)| p == name.trim())
                    .ok_or_else(|| format!("no parameter named `{}`", name.trim()))?;
                (idx, text)
            }
            _ => {
                while next < params.len() && slots[next].is_some() {
                    next += 1;
                }
                if next == params.len() {
                    return Err(format!("too many inputs at `{tok}`"));
                }
                (next, *tok)
            }
        };
        let (name, layout) = &params[idx];
        if slots[idx].is_some() {
            return Err(format!("parameter `{name}` given twice"));
        }
        let v = parse_value(text.trim(), layout)
            .and_then(|v| encode(&v, layout).map(|_| v))
            .map_err(|e| format!("input `{name}` ({layout}): {e}"))?;
        slots[idx] = Some(v);
    }
    slots
        .into_iter()
        .zip(params)
        .map(|(v, (name, layout))| v.ok_or_else(|| format!("missing input `{name}` ({layout})")))
        .collect()
}

fn is_name(s: &str) -> bool {
    let s = s.trim();
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// One testbench case.
#[derive(Debug, Clone)]
pub struct Case {
    pub line: usize,
    pub text: String,
    pub args: Vec<Value>,
    pub expected: Vec<Value>,
}

/// Parses `inputs... => expected...`. Blank lines and `#` comments are
/// skipped.
pub fn parse_batch(text: &str, params: &[(String, Layout)], results: &[(String, Layout)]) -> Result<Vec<Case>, String> {
    let mut cases = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) =
            line.split_once("=>").ok_or_else(|| format!("line {}: expected `inputs... => expected`", i + 1))?;
        let args = bind(&split_top_level(lhs), params).map_err(|e| format!("line {}: {e}", i + 1))?;
        let expected = bind(&split_top_level(rhs), results).map_err(|e| format!("line {}: {e}", i + 1))?;
        cases.push(Case { line: i + 1, text: line.to_string(), args, expected });
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fhec::ir::BitWidth;

    fn params() -> Vec<(String, Layout)> {
        let u8_ = Layout::Scalar(BitWidth::unsigned(8));
        vec![
            ("a".into(), u8_.clone()),
            ("xs".into(), Layout::Array(Box::new(u8_.clone()), 2)),
            (
                "p".into(),
                Layout::Struct(vec![("x".into(), u8_.clone()), ("y".into(), Layout::Scalar(BitWidth::signed(4)))]),
            ),
        ]
    }

    #[test]
    fn splitting_respects_brackets() {
        assert_eq!(split_top_level(" a=1  xs=[1, 2] p={x: 3, y: -1} "), ["a=1", "xs=[1, 2]", "p={x: 3, y: -1}"]);
        assert_eq!(split_top_level("s=\"a b\" 4"), ["s=\"a b\"", "4"]);
    }

    #[test]
    fn named_and_positional() {
        let p = params();
        let v = bind(&["p={x:3,y:-1}", "7", "[1,2]"], &p).unwrap();
        assert_eq!(v[0], Value::Int(7));
        assert_eq!(v[1].to_string(), "[1, 2]");
        assert_eq!(v[2].to_string(), "{x: 3, y: -1}");
        assert!(bind(&["a=1", "a=2"], &p).unwrap_err().contains("twice"));
        assert!(bind(&["a=1"], &p).unwrap_err().contains("missing input `xs`"));
        assert!(bind(&["q=1"], &p).unwrap_err().contains("no parameter"));
        assert!(bind(&["a=300", "xs=[1,2]", "p={x:1,y:1}"], &p).is_err());
    }

    #[test]
    fn batch_lines() {
        let u = Layout::Scalar(BitWidth::unsigned(8));
        let params = vec![("a".into(), u.clone()), ("b".into(), u.clone())];
        let results = vec![("ret".into(), u)];
        let cases = parse_batch("# sums\n3 5 => 8\n\na=1 b=2 => ret=3\n", &params, &results).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[1].line, 4);
        assert_eq!(cases[1].expected, [Value::Int(3)]);
        assert!(parse_batch("3 5 8", &params, &results).unwrap_err().starts_with("line 1"));
    }
}
