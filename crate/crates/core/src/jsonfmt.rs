//! Deterministic JSON writer for machine-readable outputs.
//!
//! Field order is the insertion order and every floating-point number is
//! written with 17 significant digits, so an `f64` survives a write/parse
//! cycle bit-exactly and two runs over identical inputs produce identical
//! bytes. Parsing goes through `serde_json`.

use crate::Scalar;

/// Formats a finite number with 17 significant digits in exponent notation.
///
/// Non-finite values are written as `null`; JSON has no spelling for them.
pub fn fmt17<T: Scalar>(x: T) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else {
        "null".to_string()
    }
}

/// Escapes a string as a JSON string literal, quotes included.
pub fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization is infallible")
}

#[derive(Debug, Clone, Default)]
pub struct JsonObject {
    fields: Vec<(String, String)>,
}

impl JsonObject {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num<T: Scalar>(mut self, key: &str, value: T) -> Self {
        self.fields.push((key.to_string(), fmt17(value)));
        self
    }

    pub fn int(mut self, key: &str, value: i64) -> Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn str(mut self, key: &str, value: &str) -> Self {
        self.fields.push((key.to_string(), quote(value)));
        self
    }

    pub fn bool(mut self, key: &str, value: bool) -> Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    /// Inserts already-rendered JSON (an object, array, or literal).
    pub fn raw(mut self, key: &str, json: String) -> Self {
        self.fields.push((key.to_string(), json));
        self
    }

    /// Appends the fields of `other` after the existing ones.
    pub fn extend(mut self, other: JsonObject) -> Self {
        self.fields.extend(other.fields);
        self
    }

    pub fn render(&self) -> String {
        if self.fields.is_empty() {
            return "{}".to_string();
        }
        let body: Vec<String> = self
            .fields
            .iter()
            .map(|(k, v)| format!("{}: {}", quote(k), indent_continuation(v)))
            .collect();
        format!("{{\n  {}\n}}", body.join(",\n  "))
    }
}

/// Renders a JSON array from already-rendered elements.
pub fn array(items: &[String]) -> String {
    if items.is_empty() {
        return "[]".to_string();
    }
    let body: Vec<String> = items.iter().map(|s| indent_continuation(s)).collect();
    format!("[\n  {}\n]", body.join(",\n  "))
}

/// Renders a compact single-line array of numbers.
pub fn num_array<T: Scalar>(items: &[T]) -> String {
    let body: Vec<String> = items.iter().map(|&x| fmt17(x)).collect();
    format!("[{}]", body.join(", "))
}

fn indent_continuation(s: &str) -> String {
    s.replace('\n', "\n  ")
}
