//! Located error reports for input documents.

use jsonc_parser::ast::{ObjectPropName, Value};
use jsonc_parser::common::Ranged;
use jsonc_parser::{parse_to_ast, CollectOptions, ParseOptions};
use serde::Serialize;

/// One problem in an input document. `line` and `column` are 1-based and
/// point at the value named by the JSON pointer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub pointer: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "{}:{}: {} ({at})", self.line, self.column, self.message)
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn unescape(segment: &str) -> String {
    segment.replace("~1", "/").replace("~0", "~")
}

/// Byte offset of the value at `pointer`, or of its deepest existing parent.
fn offset_of(value: &Value, pointer: &str) -> usize {
    let mut node = value;
    for segment in pointer.split('/').skip(1).map(unescape) {
        let next = match node {
            Value::Object(obj) => obj
                .properties
                .iter()
                .find(|p| match &p.name {
                    ObjectPropName::String(s) => s.value == segment,
                    ObjectPropName::Word(w) => w.value == segment,
                })
                .map(|p| &p.value),
            Value::Array(arr) => segment.parse::<usize>().ok().and_then(|i| arr.elements.get(i)),
            _ => None,
        };
        match next {
            Some(v) => node = v,
            None => break,
        }
    }
    node.start()
}

/// Maps JSON pointers of a parsed document back to source positions.
pub struct SourceMap<'a> {
    text: &'a str,
    root: Option<Value<'a>>,
}

impl<'a> SourceMap<'a> {
    pub fn new(text: &'a str) -> Self {
        let root = parse_to_ast(text, &CollectOptions::default(), &ParseOptions::default())
            .ok()
            .and_then(|r| r.value);
        Self { text, root }
    }

    pub fn diagnostic(&self, pointer: &str, message: impl Into<String>) -> Diagnostic {
        let offset = self.root.as_ref().map_or(0, |v| offset_of(v, pointer));
        let (line, column) = line_column(self.text, offset);
        Diagnostic {
            pointer: pointer.to_string(),
            line,
            column,
            message: message.into(),
        }
    }
}

/// Collects problems as `(pointer, message)` while a document is checked.
#[derive(Default, Debug)]
pub struct Collector {
    issues: Vec<(String, String)>,
}

impl Collector {
    pub fn push(&mut self, pointer: impl Into<String>, message: impl Into<String>) {
        self.issues.push((pointer.into(), message.into()));
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// Records the error of `result` at `pointer` and drops it.
    pub fn check<T, E: std::fmt::Display>(&mut self, pointer: &str, result: Result<T, E>) -> Option<T> {
        match result {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(pointer, e.to_string());
                None
            }
        }
    }

    pub fn locate(self, map: &SourceMap) -> Vec<Diagnostic> {
        self.issues.iter().map(|(p, m)| map.diagnostic(p, m.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointers_resolve_to_lines() {
        let text = "{\n  \"a\": [\n    1,\n    {\"b~c\": 2}\n  ]\n}\n";
        let map = SourceMap::new(text);
        let d = map.diagnostic("/a/1/b~0c", "bad");
        assert_eq!((d.line, d.column), (4, 13));
        let d = map.diagnostic("/a/0", "bad");
        assert_eq!((d.line, d.column), (3, 5));
        // missing children fall back to the deepest parent
        let d = map.diagnostic("/a/7", "bad");
        assert_eq!(d.line, 2);
    }
}
