//! JSON and markdown rendering of engine values. JSON keys serialize in
//! sorted order, so equal inputs always produce byte-identical output.

use gorshift::cech_oracle::GorensteinCertificate;
use gorshift::shift_calculus::{Cond, LinValue, ShiftFunction, ShiftReport};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
}

impl Format {
    pub fn parse(text: &str) -> Result<Format, String> {
        match text {
            "json" => Ok(Format::Json),
            "markdown" => Ok(Format::Markdown),
            other => Err(format!("unknown format {other:?}; expected json or markdown")),
        }
    }
}

/// A case value: plain integers stay numbers; symbolic values render as
/// their expression text ("g - 4", "coht(p) - 3").
pub fn value_json(v: LinValue) -> Value {
    if v.is_plain() {
        json!(v.constant)
    } else {
        json!(v.text())
    }
}

fn case_json(cond: &Cond, v: LinValue) -> Value {
    match cond {
        Cond::Else => json!({ "else": value_json(v) }),
        Cond::Contains(_) => json!({ "when": cond.text(), "value": value_json(v) }),
    }
}

pub fn cases_json(shift: &ShiftFunction) -> Value {
    Value::Array(shift.cases.iter().map(|(c, v)| case_json(c, *v)).collect())
}

pub fn shift_json(shift: &ShiftFunction, ring_text: &str) -> Value {
    json!({
        "ring": ring_text,
        "scope": shift.scope.text(),
        "cases": cases_json(shift),
        "trace": shift.trace,
    })
}

pub fn report_json(report: &ShiftReport, ring_text: &str) -> Value {
    json!({
        "ring": ring_text,
        "scope": report.shift.scope.text(),
        "cases": cases_json(&report.shift),
        "lgd": report.lgd,
        "trace": report.trace,
    })
}

pub fn certificate_json(cert: &GorensteinCertificate) -> Value {
    json!({
        "vanishing": cert.vanishing,
        "match": cert.matches,
        "nu": cert.nu,
        "window": [cert.window.0, cert.window.1],
        "truncation": cert.truncation,
    })
}

/// The one-line text of a piecewise shift: `cond -> value; ...; else -> value`.
pub fn cases_text(shift: &ShiftFunction) -> String {
    if let Some(v) = shift.is_constant() {
        return v.text();
    }
    shift
        .cases
        .iter()
        .map(|(c, v)| format!("{} -> {}", c.text(), v.text()))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Key-value markdown lines for a flat JSON object; arrays inline.
pub fn object_markdown(value: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(map) = value {
        for (k, v) in map {
            out.push_str(&format!("- **{k}**: {}\n", inline(v)));
        }
    } else {
        out.push_str(&format!("{}\n", inline(value)));
    }
    out
}

fn inline(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn to_pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON rendering cannot fail");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use gorshift::ring_dsl::parse_ring;
    use gorshift::shift_calculus::{pipeline_shift, rsop_function};

    #[test]
    fn shift_cases_follow_the_wire_shape() {
        let r = parse_ring("Z[v:2]").unwrap();
        let f = rsop_function(&r).unwrap();
        let v = cases_json(&f);
        assert_eq!(
            v,
            json!([{ "when": "contains v", "value": -2 }, { "else": 0 }])
        );
    }

    #[test]
    fn constant_shifts_render_one_case() {
        let r = parse_ring("Z[v:2]").unwrap();
        let f = pipeline_shift(&r).unwrap();
        assert_eq!(cases_json(&f), json!([{ "else": -2 }]));
        assert_eq!(cases_text(&f), "-2");
    }
}
