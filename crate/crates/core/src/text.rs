//! Text normalization shared by indexing, search, joins and hashing.

use serde::{Deserialize, Serialize};

/// Normalize an attribute name: lowercase, trim, collapse internal whitespace.
pub fn normalize_attribute(name: &str) -> String {
    collapse_whitespace(name).to_lowercase()
}

/// Normalize a cell: trim and collapse internal whitespace. Case is kept.
pub fn normalize_cell(cell: &str) -> String {
    collapse_whitespace(cell)
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Lowercased alphanumeric tokens of a string.
pub fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Case-insensitive match used by value search and materializability checks:
/// equal after normalization, or every token of `needle` appears in `cell`.
pub fn value_matches(cell: &str, needle: &str) -> bool {
    let cell_norm = normalize_cell(cell).to_lowercase();
    let needle_norm = normalize_cell(needle).to_lowercase();
    if needle_norm.is_empty() {
        return false;
    }
    if cell_norm == needle_norm {
        return true;
    }
    let needle_tokens = tokens(&needle_norm);
    if needle_tokens.is_empty() {
        return false;
    }
    let cell_tokens = tokens(&cell_norm);
    needle_tokens.iter().all(|t| cell_tokens.contains(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Text,
    Integer,
    Real,
}

impl ValueType {
    pub fn is_numeric(self) -> bool {
        matches!(self, ValueType::Integer | ValueType::Real)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ValueType::Text => "text",
            ValueType::Integer => "integer",
            ValueType::Real => "real",
        }
    }

    /// Infer the narrowest type that fits every non-empty value.
    pub fn infer<'a>(values: impl IntoIterator<Item = &'a str>) -> ValueType {
        let mut seen = false;
        let mut all_int = true;
        let mut all_real = true;
        for v in values {
            let v = v.trim();
            if v.is_empty() {
                continue;
            }
            seen = true;
            if all_int && v.parse::<i64>().is_err() {
                all_int = false;
            }
            if all_real && !parse_real(v).is_some_and(f64::is_finite) {
                all_real = false;
            }
            if !all_int && !all_real {
                break;
            }
        }
        match (seen, all_int, all_real) {
            (false, _, _) => ValueType::Text,
            (true, true, _) => ValueType::Integer,
            (true, false, true) => ValueType::Real,
            _ => ValueType::Text,
        }
    }
}

fn parse_real(v: &str) -> Option<f64> {
    // Reject things f64::from_str accepts that are not numbers in a CSV sense.
    if v.eq_ignore_ascii_case("nan") || v.to_ascii_lowercase().contains("inf") {
        return None;
    }
    v.parse::<f64>().ok()
}

/// Canonical text of a cell for a column of the given type. Numbers render
/// without leading zeros or trailing fractional zeros so `007`, `7` and `7.0`
/// compare equal. Empty cells stay empty.
pub fn canonical(cell: &str, ty: ValueType) -> String {
    let norm = normalize_cell(cell);
    if norm.is_empty() || !ty.is_numeric() {
        return norm;
    }
    if let Ok(i) = norm.parse::<i64>() {
        return i.to_string();
    }
    match parse_real(&norm) {
        Some(f) if f.fract() == 0.0 && f.abs() < 9.0e15 => (f as i64).to_string(),
        Some(f) => format!("{f}"),
        None => norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attribute_normalization() {
        assert_eq!(normalize_attribute("  Address "), "address");
        assert_eq!(normalize_attribute("Home\t  Address"), "home address");
    }

    #[test]
    fn type_inference() {
        assert_eq!(ValueType::infer(["1", "2", ""]), ValueType::Integer);
        assert_eq!(ValueType::infer(["1", "2.5"]), ValueType::Real);
        assert_eq!(ValueType::infer(["1", "x"]), ValueType::Text);
        assert_eq!(ValueType::infer(["nan"]), ValueType::Text);
        assert_eq!(ValueType::infer(Vec::<&str>::new()), ValueType::Text);
    }

    #[test]
    fn canonical_numbers() {
        assert_eq!(canonical("007", ValueType::Integer), "7");
        assert_eq!(canonical("7.0", ValueType::Real), "7");
        assert_eq!(canonical("1.50", ValueType::Real), "1.5");
        assert_eq!(canonical(" 007 ", ValueType::Text), "007");
    }

    #[test]
    fn value_matching() {
        assert!(value_matches("Raul CF", "raul cf"));
        assert!(value_matches("Raul  Castro Fernandez", "Raul Fernandez"));
        assert!(!value_matches("Raul", "Raul CF"));
        assert!(!value_matches("anything", "  "));
    }
}
