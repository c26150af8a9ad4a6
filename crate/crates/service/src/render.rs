//! Human-readable tables for `--pretty` output.

use serde_json::Value;
use unicode_width::UnicodeWidthStr;

/// A result cell as text: lemmas for nodes, `a -[type]-> b` for edges,
/// lemmas joined by arrows for paths.
pub fn cell_text(cell: &Value) -> String {
    match cell.get("kind").and_then(Value::as_str) {
        Some("node") => str_field(cell, "lemma"),
        Some("text") => str_field(cell, "value"),
        Some("null") => String::new(),
        Some("edge") => {
            let detail = match cell.get("detail").and_then(Value::as_str) {
                Some(d) => format!(" ({d})"),
                None => String::new(),
            };
            format!(
                "{} -[{}]-> {}{detail}",
                str_field(cell, "src_lemma"),
                str_field(cell, "relation_type"),
                str_field(cell, "dst_lemma")
            )
        }
        Some("path") => cell
            .get("lemmas")
            .and_then(Value::as_array)
            .map(|ls| ls.iter().filter_map(Value::as_str).collect::<Vec<_>>().join(" -> "))
            .unwrap_or_default(),
        _ => scalar(cell),
    }
}

fn str_field(v: &Value, key: &str) -> String {
    v.get(key).and_then(Value::as_str).unwrap_or_default().to_string()
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Aligned columns under a header rule.
pub fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.width()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.width());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w.saturating_sub(c.width()))))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

fn result_table(result: &Value) -> String {
    let header: Vec<String> = result["columns"]
        .as_array()
        .map(|cs| cs.iter().map(scalar).collect())
        .unwrap_or_default();
    let rows: Vec<Vec<String>> = result["rows"]
        .as_array()
        .map(|rs| {
            rs.iter()
                .map(|r| r.as_array().map(|cs| cs.iter().map(cell_text).collect()).unwrap_or_default())
                .collect()
        })
        .unwrap_or_default();
    let mut out = table(&header, &rows);
    match rows.len() {
        0 => out.push_str("(no matches)\n"),
        n => out.push_str(&format!("({n} row{})\n", if n == 1 { "" } else { "s" })),
    }
    if result["truncated"] == Value::Bool(true) {
        out.push_str("(truncated)\n");
    }
    out
}

fn key_values(obj: &serde_json::Map<String, Value>) -> String {
    let rows: Vec<Vec<String>> = obj
        .iter()
        .map(|(k, v)| {
            let text = match v {
                Value::Object(m) if m.values().all(|x| !x.is_object() && !x.is_array()) => m
                    .iter()
                    .map(|(k, x)| format!("{k}={}", scalar(x)))
                    .collect::<Vec<_>>()
                    .join(", "),
                Value::Array(xs) if xs.iter().all(|x| !x.is_object() && !x.is_array()) => {
                    xs.iter().map(scalar).collect::<Vec<_>>().join(", ")
                }
                other => scalar(other),
            };
            vec![k.clone(), text]
        })
        .collect();
    table(&["key".into(), "value".into()], &rows)
}

/// Renders a command's JSON output for a terminal.
pub fn pretty(v: &Value) -> String {
    if v.get("columns").is_some() && v.get("rows").is_some() {
        return result_table(v);
    }
    if let Some(result) = v.get("result").filter(|r| r.get("rows").is_some()) {
        let mut out = String::new();
        for key in ["nl_english", "nl_sanskrit", "gql"] {
            if let Some(s) = v.get(key).and_then(Value::as_str) {
                out.push_str(s);
                out.push('\n');
            }
        }
        out.push('\n');
        out.push_str(&result_table(result));
        return out;
    }
    if let Some(list) = v.get("suggestions").and_then(Value::as_array) {
        if list.is_empty() {
            return "(no suggestions)\n".into();
        }
        return list.iter().map(|s| format!("{}\n", scalar(s))).collect();
    }
    if let Some(templates) = v.get("templates").and_then(Value::as_array) {
        let rows: Vec<Vec<String>> = templates
            .iter()
            .map(|t| {
                ["template_id", "category", "nl_english"]
                    .iter()
                    .map(|k| str_field(t, k))
                    .collect()
            })
            .collect();
        return table(&["template".into(), "category".into(), "question".into()], &rows);
    }
    match v {
        Value::Object(obj) => key_values(obj),
        other => format!("{}\n", serde_json::to_string_pretty(other).unwrap_or_default()),
    }
}
