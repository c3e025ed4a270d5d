//! Versioned JSON documents read and written by the binary.

use std::fmt::Write as _;
use std::path::Path;

use morsefam::cubical::Cubulation;
use morsefam::family::FamilyDescriptor;
use morsefam::morse::MorseData;
use morsefam::novikov::NovikovComplexData;
use morsefam::spectral::PageTable;
use serde::de::IgnoredAny;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA: &str = "morsefam/1";

/// Top-level input document. Exactly one payload field is set; `config` and `report` are
/// accepted so that emitted files can be fed back in.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    pub schema: String,
    #[serde(default, rename = "config")]
    _config: Option<IgnoredAny>,
    #[serde(default, rename = "report")]
    _report: Option<IgnoredAny>,
    #[serde(default)]
    pub family: Option<FamilyDescriptor>,
    #[serde(default)]
    pub cubical: Option<Cubulation>,
    #[serde(default)]
    pub morse: Option<MorseData>,
    #[serde(default)]
    pub novikov: Option<NovikovComplexData>,
}

#[derive(Debug)]
pub enum Payload {
    Family(FamilyDescriptor),
    Cubical(Cubulation),
    Morse(MorseData),
    Novikov(NovikovComplexData),
}

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("{path}: {message}")]
    At { path: String, message: String },
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
}

fn at(path: &str, message: impl Into<String>) -> SchemaError {
    SchemaError::At {
        path: path.to_string(),
        message: message.into(),
    }
}

pub fn parse_input(text: &str) -> Result<Payload, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: InputDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        at(
            if path.is_empty() { "." } else { &path },
            e.inner().to_string(),
        )
    })?;
    if doc.schema != SCHEMA {
        return Err(at(
            "schema",
            format!("expected \"{SCHEMA}\", found \"{}\"", doc.schema),
        ));
    }
    let mut found = Vec::new();
    if let Some(d) = doc.family {
        found.push(Payload::Family(d));
    }
    if let Some(k) = doc.cubical {
        found.push(Payload::Cubical(k));
    }
    if let Some(m) = doc.morse {
        found.push(Payload::Morse(m));
    }
    if let Some(n) = doc.novikov {
        found.push(Payload::Novikov(n));
    }
    match found.len() {
        1 => Ok(found.pop().expect("one payload")),
        0 => Err(at(
            ".",
            "expected one of `family`, `cubical`, `morse`, `novikov`",
        )),
        _ => Err(at(".", "more than one payload field is set")),
    }
}

pub fn read_input(path: &Path) -> Result<Payload, SchemaError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SchemaError::Io(path.display().to_string(), e))?;
    parse_input(&text)
}

/// Wraps a payload with the schema tag and the configuration that produced it.
#[derive(Debug, Serialize)]
pub struct OutputDoc<'a> {
    pub schema: &'static str,
    pub config: &'a Value,
    #[serde(flatten)]
    pub body: Value,
}

pub fn render(config: &Value, body: Value) -> String {
    let doc = OutputDoc {
        schema: SCHEMA,
        config,
        body,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("output serializes");
    s.push('\n');
    s
}

/// Flat `page,i,j,free_rank,torsion` rows, torsion coefficients separated by spaces.
pub fn pages_csv(pages: &[(String, PageTable)]) -> String {
    let mut s = String::from("page,i,j,free_rank,torsion\n");
    for (name, p) in pages {
        for e in &p.entries {
            let tors: Vec<String> = e.torsion.iter().map(ToString::to_string).collect();
            writeln!(
                s,
                "{name},{},{},{},{}",
                e.i,
                e.j,
                e.free_rank,
                tors.join(" ")
            )
            .expect("write to string");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrong_schema_tag_is_reported() {
        let err = parse_input(
            r#"{"schema": "morsefam/0", "morse": {"critical_points": [], "flows": []}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("schema:"), "{err}");
    }

    #[test]
    fn nested_errors_carry_a_path() {
        let err = parse_input(r#"{"schema": "morsefam/1", "morse": {"critical_points": [{"label": "a", "index": -1}], "flows": []}}"#)
            .unwrap_err();
        assert!(
            err.to_string()
                .starts_with("morse.critical_points[0].index"),
            "{err}"
        );
    }

    #[test]
    fn exactly_one_payload() {
        assert!(parse_input(r#"{"schema": "morsefam/1"}"#).is_err());
    }
}
