//! Generated values and their text and JSON forms.
//!
//! Text: `Node(Node(Leaf, 3, Leaf), 25, Leaf)`, tuples as `(1, 2.5)`.
//! JSON: `{"c":"Node","args":[...]}`, tuples as arrays, numbers as numbers.
//! Floats always print with a `.` or an exponent so both forms round-trip.
//! All operations are iterative, so very deep values are fine.

use std::fmt;

use serde::Deserialize;

#[derive(Debug)]
pub enum GenValue {
    Ctor { name: String, args: Vec<GenValue> },
    Tuple(Vec<GenValue>),
    Int(i64),
    Float(f64),
}

impl Drop for GenValue {
    fn drop(&mut self) {
        let mut stack: Vec<GenValue> = match self {
            GenValue::Ctor { args, .. } | GenValue::Tuple(args) if !args.is_empty() => std::mem::take(args),
            _ => return,
        };
        while let Some(mut v) = stack.pop() {
            if let GenValue::Ctor { args, .. } | GenValue::Tuple(args) = &mut v {
                stack.append(args);
            }
        }
    }
}

impl PartialEq for GenValue {
    fn eq(&self, other: &Self) -> bool {
        let mut stack = vec![(self, other)];
        while let Some((a, b)) = stack.pop() {
            match (a, b) {
                (GenValue::Int(x), GenValue::Int(y)) if x == y => {}
                (GenValue::Float(x), GenValue::Float(y)) if x == y || (x.is_nan() && y.is_nan()) => {}
                (GenValue::Ctor { name: n1, args: a1 }, GenValue::Ctor { name: n2, args: a2 })
                    if n1 == n2 && a1.len() == a2.len() =>
                {
                    stack.extend(a1.iter().zip(a2));
                }
                (GenValue::Tuple(a1), GenValue::Tuple(a2)) if a1.len() == a2.len() => stack.extend(a1.iter().zip(a2)),
                _ => return false,
            }
        }
        true
    }
}

impl Clone for GenValue {
    fn clone(&self) -> Self {
        // (source node, clones of its children made so far)
        let mut frames: Vec<(&GenValue, Vec<GenValue>)> = vec![(self, Vec::new())];
        loop {
            let (src, done) = frames.last_mut().expect("root frame");
            let kids = src.children();
            if done.len() < kids.len() {
                let next = &kids[done.len()];
                frames.push((next, Vec::with_capacity(next.children().len())));
                continue;
            }
            let (src, done) = frames.pop().expect("frame exists");
            let copy = match src {
                GenValue::Ctor { name, .. } => GenValue::Ctor { name: name.clone(), args: done },
                GenValue::Tuple(_) => GenValue::Tuple(done),
                GenValue::Int(i) => GenValue::Int(*i),
                GenValue::Float(x) => GenValue::Float(*x),
            };
            match frames.last_mut() {
                Some((_, parent_done)) => parent_done.push(copy),
                None => return copy,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at offset {offset}")]
pub struct ValueParseError {
    pub offset: usize,
    pub message: String,
}

impl GenValue {
    pub fn ctor(name: impl Into<String>, args: Vec<GenValue>) -> GenValue {
        GenValue::Ctor { name: name.into(), args }
    }

    /// Children of a constructor or tuple.
    pub fn children(&self) -> &[GenValue] {
        match self {
            GenValue::Ctor { args, .. } | GenValue::Tuple(args) => args,
            _ => &[],
        }
    }

    /// Number of nodes in the value.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        let mut stack = vec![self];
        while let Some(v) = stack.pop() {
            n += 1;
            stack.extend(v.children());
        }
        n
    }

    pub fn parse(text: &str) -> Result<GenValue, ValueParseError> {
        TextParser { src: text.as_bytes(), pos: 0 }.parse()
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        write_tokens(self, &mut out, true).expect("writing to a String cannot fail");
        out
    }

    pub fn from_json(text: &str) -> Result<GenValue, ValueParseError> {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let de = serde_stacker::Deserializer::new(&mut de);
        let v = serde_json::Value::deserialize(de)
            .map_err(|e| ValueParseError { offset: e.column(), message: e.to_string() })?;
        from_json_value(v)
    }
}

enum Tok<'a> {
    Val(&'a GenValue),
    Lit(&'static str),
}

fn write_float(out: &mut impl fmt::Write, x: f64) -> fmt::Result {
    // Debug keeps a `.` or exponent and round-trips exactly
    write!(out, "{x:?}")
}

fn write_tokens(v: &GenValue, out: &mut impl fmt::Write, json: bool) -> fmt::Result {
    let mut stack = vec![Tok::Val(v)];
    while let Some(t) = stack.pop() {
        let v = match t {
            Tok::Lit(s) => {
                out.write_str(s)?;
                continue;
            }
            Tok::Val(v) => v,
        };
        let sep = if json { "," } else { ", " };
        let (open, close, args) = match v {
            GenValue::Int(i) => {
                write!(out, "{i}")?;
                continue;
            }
            GenValue::Float(x) => {
                if json && !x.is_finite() {
                    out.write_str("null")?;
                } else {
                    write_float(out, *x)?;
                }
                continue;
            }
            GenValue::Ctor { name, args } => {
                if json {
                    write!(out, "{{\"c\":{},\"args\":[", serde_json::Value::String(name.clone()))?;
                    ("", "]}", args)
                } else {
                    out.write_str(name)?;
                    if args.is_empty() {
                        continue;
                    }
                    ("(", ")", args)
                }
            }
            GenValue::Tuple(items) => {
                if json {
                    ("[", "]", items)
                } else {
                    ("(", ")", items)
                }
            }
        };
        out.write_str(open)?;
        stack.push(Tok::Lit(close));
        for (i, a) in args.iter().enumerate().rev() {
            stack.push(Tok::Val(a));
            if i > 0 {
                stack.push(Tok::Lit(sep));
            }
        }
    }
    Ok(())
}

impl fmt::Display for GenValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_tokens(self, &mut s, false)?;
        f.write_str(&s)
    }
}

struct TextParser<'a> {
    src: &'a [u8],
    pos: usize,
}

/// Partially parsed constructor application or tuple.
struct Frame {
    name: Option<String>,
    args: Vec<GenValue>,
}

impl TextParser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ValueParseError> {
        Err(ValueParseError { offset: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<GenValue, ValueParseError> {
        let mut frames: Vec<Frame> = Vec::new();
        loop {
            // parse one value start; atoms complete immediately
            let mut done = match self.peek() {
                None => return self.err("unexpected end of input"),
                Some(b'(') => {
                    self.pos += 1;
                    frames.push(Frame { name: None, args: Vec::new() });
                    continue;
                }
                Some(c) if c.is_ascii_uppercase() => {
                    let start = self.pos;
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric() || matches!(self.src[self.pos], b'_' | b'\''))
                    {
                        self.pos += 1;
                    }
                    let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                    if self.peek() == Some(b'(') {
                        self.pos += 1;
                        frames.push(Frame { name: Some(name), args: Vec::new() });
                        continue;
                    }
                    GenValue::Ctor { name, args: Vec::new() }
                }
                Some(_) => self.number()?,
            };
            // close finished frames
            loop {
                let Some(top) = frames.last_mut() else {
                    if self.peek().is_some() {
                        return self.err("trailing input");
                    }
                    return Ok(done);
                };
                top.args.push(done);
                match self.peek() {
                    Some(b',') => {
                        self.pos += 1;
                        break;
                    }
                    Some(b')') => {
                        self.pos += 1;
                        let mut f = frames.pop().expect("frame exists");
                        done = match f.name.take() {
                            Some(name) => GenValue::Ctor { name, args: std::mem::take(&mut f.args) },
                            None if f.args.len() == 1 => f.args.pop().expect("one element"),
                            None => GenValue::Tuple(std::mem::take(&mut f.args)),
                        };
                    }
                    _ => return self.err("expected `,` or `)`"),
                }
            }
        }
    }

    fn number(&mut self) -> Result<GenValue, ValueParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && !matches!(self.src[self.pos], b',' | b')' | b'(')
            && !self.src[self.pos].is_ascii_whitespace()
        {
            self.pos += 1;
        }
        let tok = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if tok.is_empty() {
            return self.err("expected a value");
        }
        if let Ok(i) = tok.parse::<i64>() {
            return Ok(GenValue::Int(i));
        }
        match tok.parse::<f64>() {
            Ok(x) => Ok(GenValue::Float(x)),
            Err(_) => {
                self.pos = start;
                self.err(format!("bad literal `{tok}`"))
            }
        }
    }
}

fn from_json_value(v: serde_json::Value) -> Result<GenValue, ValueParseError> {
    use serde_json::Value;
    let bad = |m: &str| ValueParseError { offset: 0, message: m.to_string() };

    // frames hold pending children (reversed) and finished ones
    enum Kind {
        Ctor(String),
        Tuple,
    }
    struct Pending {
        kind: Kind,
        todo: Vec<Value>,
        done: Vec<GenValue>,
    }
    let mut frames: Vec<Pending> = Vec::new();
    let mut next = Some(v);
    loop {
        let finished = match next.take() {
            Some(Value::Number(n)) => {
                if let Some(i) = n.as_i64() {
                    GenValue::Int(i)
                } else {
                    GenValue::Float(n.as_f64().ok_or_else(|| bad("number out of range"))?)
                }
            }
            Some(Value::Null) => GenValue::Float(f64::NAN),
            Some(Value::Array(mut items)) => {
                items.reverse();
                frames.push(Pending { kind: Kind::Tuple, todo: items, done: Vec::new() });
                next = frames.last_mut().and_then(|f| f.todo.pop());
                if next.is_some() {
                    continue;
                }
                let f = frames.pop().expect("just pushed");
                GenValue::Tuple(f.done)
            }
            Some(Value::Object(mut map)) => {
                let name = match map.remove("c") {
                    Some(Value::String(s)) => s,
                    _ => return Err(bad("constructor object needs a string field `c`")),
                };
                let mut args = match map.remove("args") {
                    Some(Value::Array(a)) => a,
                    None => Vec::new(),
                    _ => return Err(bad("`args` must be an array")),
                };
                if !map.is_empty() {
                    return Err(bad("unexpected field in constructor object"));
                }
                args.reverse();
                frames.push(Pending { kind: Kind::Ctor(name), todo: args, done: Vec::new() });
                next = frames.last_mut().and_then(|f| f.todo.pop());
                if next.is_some() {
                    continue;
                }
                let f = frames.pop().expect("just pushed");
                match f.kind {
                    Kind::Ctor(name) => GenValue::Ctor { name, args: f.done },
                    Kind::Tuple => unreachable!(),
                }
            }
            Some(_) => return Err(bad("expected a number, array or constructor object")),
            None => unreachable!("a value is always pending here"),
        };
        let mut finished = finished;
        loop {
            let Some(top) = frames.last_mut() else {
                return Ok(finished);
            };
            top.done.push(finished);
            if let Some(n) = top.todo.pop() {
                next = Some(n);
                break;
            }
            let f = frames.pop().expect("frame exists");
            finished = match f.kind {
                Kind::Ctor(name) => GenValue::Ctor { name, args: f.done },
                Kind::Tuple => GenValue::Tuple(f.done),
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn leaf() -> GenValue {
        GenValue::ctor("Leaf", vec![])
    }

    fn sample() -> GenValue {
        GenValue::ctor(
            "Node",
            vec![GenValue::ctor("Node", vec![leaf(), GenValue::Int(3), leaf()]), GenValue::Int(25), leaf()],
        )
    }

    #[test]
    fn text_form() {
        assert_eq!(sample().to_string(), "Node(Node(Leaf, 3, Leaf), 25, Leaf)");
        assert_eq!(GenValue::parse("Node(Node(Leaf, 3, Leaf), 25, Leaf)").unwrap(), sample());
        let t = GenValue::Tuple(vec![GenValue::Int(-1), GenValue::Float(2.0)]);
        assert_eq!(t.to_string(), "(-1, 2.0)");
        assert_eq!(GenValue::parse("( -1 ,2.0 )").unwrap(), t);
    }

    #[test]
    fn json_form() {
        let j = sample().to_json();
        assert_eq!(
            j,
            r#"{"c":"Node","args":[{"c":"Node","args":[{"c":"Leaf","args":[]},3,{"c":"Leaf","args":[]}]},25,{"c":"Leaf","args":[]}]}"#
        );
        assert_eq!(GenValue::from_json(&j).unwrap(), sample());
        assert_eq!(
            GenValue::from_json("[1, 1.5]").unwrap(),
            GenValue::Tuple(vec![GenValue::Int(1), GenValue::Float(1.5)])
        );
    }

    #[test]
    fn parse_errors() {
        assert!(GenValue::parse("Node(Leaf").is_err());
        assert!(GenValue::parse("Leaf Leaf").is_err());
        assert!(GenValue::parse("12abc").is_err());
        assert!(GenValue::from_json(r#"{"args":[]}"#).is_err());
    }

    #[test]
    fn deep_values() {
        let mut v = GenValue::ctor("Nil", vec![]);
        for i in 0..200_000 {
            v = GenValue::ctor("Cons", vec![GenValue::Int(i), v]);
        }
        let text = v.to_string();
        let json = v.to_json();
        assert_eq!(GenValue::parse(&text).unwrap(), v);
        assert_eq!(GenValue::from_json(&json).unwrap().node_count(), v.node_count());
    }

    fn arb_value() -> impl Strategy<Value = GenValue> {
        let leaf = prop_oneof![
            any::<i64>().prop_map(GenValue::Int),
            (-1e12f64..1e12).prop_map(GenValue::Float),
            "[A-Z][a-z]{0,3}".prop_map(|n| GenValue::ctor(n, vec![])),
        ];
        leaf.prop_recursive(4, 32, 4, |inner| {
            prop_oneof![
                ("[A-Z][a-z]{0,3}", prop::collection::vec(inner.clone(), 1..4)).prop_map(|(n, a)| GenValue::ctor(n, a)),
                prop::collection::vec(inner, 2..4).prop_map(GenValue::Tuple),
            ]
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(v in arb_value()) {
            prop_assert_eq!(GenValue::parse(&v.to_string()).unwrap(), v);
        }

        #[test]
        fn json_round_trip(v in arb_value()) {
            prop_assert_eq!(GenValue::from_json(&v.to_json()).unwrap(), v);
        }
    }
}
