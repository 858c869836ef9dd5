//! Minimal JSON Schema checker covering the subset the published schemas
//! use: `type` (string or list), `properties` / `required` /
//! `additionalProperties`, `items` with `minItems` / `maxItems`, and `enum`.

use serde_json::Value;

/// Validate `doc` against `schema`; `Err` carries the failing JSON path.
pub fn validate(schema: &Value, doc: &Value) -> Result<(), String> {
    check(schema, doc, "$")
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                "integer"
            } else {
                "number"
            }
        }
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn matches_type(expected: &str, doc: &Value) -> bool {
    let actual = type_name(doc);
    expected == actual || (expected == "number" && actual == "integer")
}

fn check(schema: &Value, doc: &Value, path: &str) -> Result<(), String> {
    let obj = schema
        .as_object()
        .ok_or_else(|| format!("{path}: schema node is not an object"))?;

    if let Some(ty) = obj.get("type") {
        let ok = match ty {
            Value::String(t) => matches_type(t, doc),
            Value::Array(ts) => ts
                .iter()
                .filter_map(|t| t.as_str())
                .any(|t| matches_type(t, doc)),
            _ => false,
        };
        if !ok {
            return Err(format!(
                "{path}: expected type {ty}, found {}",
                type_name(doc)
            ));
        }
    }

    if let Some(allowed) = obj.get("enum").and_then(Value::as_array) {
        if !allowed.contains(doc) {
            return Err(format!("{path}: value {doc} not in enum"));
        }
    }

    if let Some(props) = obj.get("properties").and_then(Value::as_object) {
        if let Some(map) = doc.as_object() {
            for (key, sub) in props {
                if let Some(child) = map.get(key) {
                    check(sub, child, &format!("{path}.{key}"))?;
                }
            }
            if obj.get("additionalProperties") == Some(&Value::Bool(false)) {
                for key in map.keys() {
                    if !props.contains_key(key) {
                        return Err(format!("{path}: unexpected property `{key}`"));
                    }
                }
            }
        }
    }

    if let Some(required) = obj.get("required").and_then(Value::as_array) {
        if let Some(map) = doc.as_object() {
            for key in required.iter().filter_map(Value::as_str) {
                if !map.contains_key(key) {
                    return Err(format!("{path}: missing required property `{key}`"));
                }
            }
        }
    }

    if let Some(arr) = doc.as_array() {
        if let Some(min) = obj.get("minItems").and_then(Value::as_u64) {
            if (arr.len() as u64) < min {
                return Err(format!("{path}: fewer than {min} items"));
            }
        }
        if let Some(max) = obj.get("maxItems").and_then(Value::as_u64) {
            if (arr.len() as u64) > max {
                return Err(format!("{path}: more than {max} items"));
            }
        }
        if let Some(items) = obj.get("items") {
            for (i, child) in arr.iter().enumerate() {
                check(items, child, &format!("{path}[{i}]"))?;
            }
        }
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn subset_semantics() {
        let schema = json!({
            "type": "object",
            "properties": {
                "a": {"type": "number"},
                "b": {"type": ["string", "null"]},
                "c": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                "e": {"type": "string", "enum": ["x", "y"]},
            },
            "required": ["a", "c", "e"],
            "additionalProperties": false,
        });
        let ok = json!({"a": 1, "b": null, "c": [1, 2], "e": "x"});
        assert!(validate(&schema, &ok).is_ok());
        let missing = json!({"a": 1, "c": [1], "e": "y", "b": "s"});
        assert!(validate(&schema, &missing).is_ok());
        assert!(validate(&schema, &json!({"c": [1], "e": "x"})).is_err());
        assert!(validate(&schema, &json!({"a": 1, "c": [], "e": "x"})).is_err());
        assert!(validate(&schema, &json!({"a": 1, "c": [1], "e": "z"})).is_err());
        assert!(validate(&schema, &json!({"a": 1, "c": [1], "e": "x", "zz": 0})).is_err());
        assert!(validate(&schema, &json!({"a": "no", "c": [1], "e": "x"})).is_err());
    }
}
