//! Query views and their file format.
//!
//! A query view document is YAML (JSON is accepted too, being a subset):
//!
//! ```yaml
//! attributes: [employee, address]
//! tuples:
//!   - employee: Raul CF
//! ```
//!
//! `attributes` is required and non-empty. `tuples` is optional; each tuple
//! maps a subset of the attributes to a scalar example value.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{normalize_attribute, normalize_cell};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ValueConstraint {
    pub attribute: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryView {
    /// Normalized attribute names in user order.
    pub attributes: Vec<String>,
    /// Partial example tuples keyed by normalized attribute name.
    pub example_tuples: Vec<BTreeMap<String, String>>,
}

impl QueryView {
    pub fn new<A, T>(attributes: A, tuples: T) -> Result<Self>
    where
        A: IntoIterator,
        A::Item: AsRef<str>,
        T: IntoIterator<Item = Vec<(String, String)>>,
    {
        let mut attrs: Vec<String> = Vec::new();
        for a in attributes {
            let n = normalize_attribute(a.as_ref());
            if n.is_empty() {
                return Err(Error::QueryView("attributes: empty attribute name".into()));
            }
            if !attrs.contains(&n) {
                attrs.push(n);
            }
        }
        if attrs.is_empty() {
            return Err(Error::QueryView("attributes: at least one attribute is required".into()));
        }
        let mut example_tuples = Vec::new();
        for (i, t) in tuples.into_iter().enumerate() {
            let mut m = BTreeMap::new();
            for (k, v) in t {
                let nk = normalize_attribute(&k);
                if !attrs.contains(&nk) {
                    return Err(Error::QueryView(format!(
                        "tuples[{i}].{k}: not one of the declared attributes"
                    )));
                }
                let nv = normalize_cell(&v);
                if !nv.is_empty() {
                    m.insert(nk, nv);
                }
            }
            if !m.is_empty() {
                example_tuples.push(m);
            }
        }
        Ok(QueryView {
            attributes: attrs,
            example_tuples,
        })
    }

    /// Parse a YAML or JSON query view document.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: RawQueryView = serde_yaml::from_str(text).map_err(|e| {
            let loc = e
                .location()
                .map(|l| format!("line {}, column {}: ", l.line(), l.column()))
                .unwrap_or_default();
            Error::QueryView(format!("{loc}{e}"))
        })?;
        let tuples = doc.tuples.into_iter().map(|t| {
            t.into_iter()
                .map(|(k, v)| (k, scalar_text(&v)))
                .collect::<Vec<_>>()
        });
        QueryView::new(doc.attributes, tuples).map_err(|e| match e {
            Error::QueryView(msg) => Error::QueryView(with_line(text, &msg)),
            other => other,
        })
    }

    /// Every distinct (attribute, value) constraint.
    pub fn value_constraints(&self) -> BTreeSet<ValueConstraint> {
        self.example_tuples
            .iter()
            .flat_map(|t| {
                t.iter().map(|(a, v)| ValueConstraint {
                    attribute: a.clone(),
                    value: v.clone(),
                })
            })
            .collect()
    }

    pub fn constraint_count(&self) -> usize {
        self.attributes.len() + self.value_constraints().len()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQueryView {
    attributes: Vec<String>,
    #[serde(default)]
    tuples: Vec<BTreeMap<String, serde_yaml::Value>>,
}

fn scalar_text(v: &serde_yaml::Value) -> String {
    match v {
        serde_yaml::Value::String(s) => s.clone(),
        serde_yaml::Value::Number(n) => n.to_string(),
        serde_yaml::Value::Bool(b) => b.to_string(),
        serde_yaml::Value::Null => String::new(),
        other => serde_yaml::to_string(other).unwrap_or_default().trim().to_string(),
    }
}

/// Prefix a `tuples[i].key` validation message with the line of the offending key.
fn with_line(text: &str, msg: &str) -> String {
    let key = msg
        .split_once(':')
        .and_then(|(path, _)| path.rsplit_once('.'))
        .map(|(_, k)| k.to_string());
    let Some(key) = key else {
        return msg.to_string();
    };
    let tuples_start = text.lines().position(|l| l.trim_start().starts_with("tuples"));
    let found = text.lines().enumerate().skip(tuples_start.unwrap_or(0)).find(|(_, l)| {
        let l = l.trim_start().trim_start_matches("- ").trim_start_matches('{').trim_start();
        l.starts_with(&format!("{key}:")) || l.contains(&format!("{key}:")) || l.contains(&format!("\"{key}\""))
    });
    match found {
        Some((n, _)) => format!("line {}: {msg}", n + 1),
        None => msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_yaml_and_json() {
        let y = QueryView::parse("attributes: [Employee, address]\ntuples:\n  - employee: Raul CF\n").unwrap();
        let j = QueryView::parse(r#"{"attributes": ["employee", "address"], "tuples": [{"employee": "Raul CF"}]}"#)
            .unwrap();
        assert_eq!(y, j);
        assert_eq!(y.attributes, vec!["employee", "address"]);
        assert_eq!(y.constraint_count(), 3);
    }

    #[test]
    fn numbers_become_text() {
        let q = QueryView::parse("attributes: [eid]\ntuples: [{eid: 7}]").unwrap();
        assert_eq!(q.example_tuples[0]["eid"], "7");
    }

    #[test]
    fn unknown_tuple_key_reports_path_and_line() {
        let err = QueryView::parse("attributes: [employee]\ntuples:\n  - salary: 10\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("tuples[0].salary"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = QueryView::parse("attributes: [a\n").unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn empty_attributes_rejected() {
        assert!(QueryView::parse("attributes: []").is_err());
        assert!(QueryView::parse("tuples: []").is_err());
    }
}
