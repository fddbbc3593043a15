//! The JSON system-spec format.
//!
//! ```json
//! {
//!   "name": "period-doubling",
//!   "dim": 1,
//!   "colors": ["a","b"],
//!   "lattice_basis": [["1"]],
//!   "expansion": [[2]],
//!   "digits": [
//!     [[[0]],[[0],[1]]],
//!     [[[1]],[]]
//!   ],
//!   "seed": [[[0]],[]]
//! }
//! ```
//!
//! `digits[i][j]` lists `D_ij`, so that `Λ_i ⊇ Q Λ_j + D_ij`. Points and
//! digits are integer vectors in lattice coordinates; the basis is given
//! row by row with its columns as basis vectors.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result, SchemaViolation};
use crate::lattice::{ExpansionMatrix, IntMatrix, LatticeBasis, Rational};
use crate::substitution::{Cluster, SubstitutionSystem};

const FIELDS: [&str; 7] = [
    "name",
    "dim",
    "colors",
    "lattice_basis",
    "expansion",
    "digits",
    "seed",
];

pub const BUNDLED: [(&str, &str); 6] = [
    ("abcd", include_str!("../../specs/abcd.json")),
    ("gasket", include_str!("../../specs/gasket.json")),
    ("ex310", include_str!("../../specs/ex310.json")),
    ("period-doubling", include_str!("../../specs/period-doubling.json")),
    ("thue-morse", include_str!("../../specs/thue-morse.json")),
    ("chair", include_str!("../../specs/chair.json")),
];

/// A bundled system by name.
pub fn bundled(name: &str) -> Result<SubstitutionSystem> {
    let text = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::InvalidSystem(format!("no bundled system named {name}")))?;
    parse_spec_str(text)
}

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Reads a spec file; a name without a path separator that matches a
/// bundled system and does not exist on disk resolves to the bundled copy.
pub fn parse_spec(path: &Path) -> Result<SubstitutionSystem> {
    if !path.exists() {
        let stem = path
            .to_str()
            .map(|s| s.trim_end_matches(".json").trim_end_matches(".spec"));
        if let Some(s) = stem {
            if !s.contains('/') && BUNDLED.iter().any(|(n, _)| *n == s) {
                return bundled(s);
            }
        }
    }
    let text = std::fs::read_to_string(path)?;
    parse_spec_str(&text)
}

struct Checker {
    violations: Vec<SchemaViolation>,
}

impl Checker {
    fn fail(&mut self, field: impl Into<String>, reason: impl Into<String>) {
        self.violations.push(SchemaViolation {
            field: field.into(),
            reason: reason.into(),
        });
    }

    fn int(&mut self, v: &Value, field: &str, lattice_point: bool) -> Option<i64> {
        match v {
            Value::Number(n) => match n.as_i64() {
                Some(x) => Some(x),
                None => {
                    if lattice_point {
                        self.fail(field, format!("{n} is not an integer in lattice coordinates"));
                    } else {
                        self.fail(field, format!("{n} is not a 64-bit integer"));
                    }
                    None
                }
            },
            other => {
                self.fail(field, format!("expected an integer, found {}", kind(other)));
                None
            }
        }
    }

    fn array<'a>(&mut self, v: &'a Value, field: &str, len: Option<usize>) -> Option<&'a Vec<Value>> {
        match v {
            Value::Array(a) => {
                if let Some(n) = len {
                    if a.len() != n {
                        self.fail(field, format!("expected {n} entries, found {}", a.len()));
                        return None;
                    }
                }
                Some(a)
            }
            other => {
                self.fail(field, format!("expected an array, found {}", kind(other)));
                None
            }
        }
    }

    fn vector(&mut self, v: &Value, field: &str, dim: Option<usize>) -> Option<Vec<i64>> {
        let a = self.array(v, field, dim)?;
        let mut out = Vec::with_capacity(a.len());
        let mut ok = true;
        for (k, x) in a.iter().enumerate() {
            match self.int(x, &format!("{field}[{k}]"), true) {
                Some(x) => out.push(x),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn point_list(&mut self, v: &Value, field: &str, dim: Option<usize>) -> Option<Vec<Vec<i64>>> {
        let a = self.array(v, field, None)?;
        let mut out = Vec::with_capacity(a.len());
        let mut ok = true;
        for (k, p) in a.iter().enumerate() {
            match self.vector(p, &format!("{field}[{k}]"), dim) {
                Some(p) => out.push(p),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().ok()?;
            let q: i64 = q.trim().parse().ok()?;
            (q != 0).then(|| Rational::new(p, q))
        }
        None => s.parse().ok().map(Rational::from_integer),
    }
}

pub(crate) fn rational_string(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses and validates a spec, reporting every violation found.
pub fn parse_spec_str(text: &str) -> Result<SubstitutionSystem> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        Error::Schema(vec![SchemaViolation {
            field: "<document>".into(),
            reason: format!("malformed JSON: {e}"),
        }])
    })?;
    let mut ck = Checker { violations: Vec::new() };
    let Value::Object(obj) = &root else {
        ck.fail("<document>", format!("expected an object, found {}", kind(&root)));
        return Err(Error::Schema(ck.violations));
    };
    for key in obj.keys() {
        if !FIELDS.contains(&key.as_str()) {
            ck.fail(key.clone(), "unknown field");
        }
    }
    let get = |ck: &mut Checker, key: &str| -> Option<&Value> {
        let v = obj.get(key);
        if v.is_none() {
            ck.fail(key, "missing");
        }
        v
    };

    let name = match get(&mut ck, "name") {
        Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
        Some(v) => {
            ck.fail("name", format!("expected a non-empty string, found {}", kind(v)));
            None
        }
        None => None,
    };
    let dim = get(&mut ck, "dim").and_then(|v| ck.int(v, "dim", false)).and_then(|d| {
        if d >= 1 {
            Some(d as usize)
        } else {
            ck.fail("dim", "must be at least 1");
            None
        }
    });
    let colors: Option<Vec<String>> = get(&mut ck, "colors").and_then(|v| {
        let a = ck.array(v, "colors", None)?;
        let mut out = Vec::new();
        for (k, c) in a.iter().enumerate() {
            match c {
                Value::String(s) if !s.is_empty() => out.push(s.clone()),
                other => ck.fail(format!("colors[{k}]"), format!("expected a label, found {}", kind(other))),
            }
        }
        let mut sorted = out.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != out.len() {
            ck.fail("colors", "labels must be distinct");
        }
        if a.is_empty() {
            ck.fail("colors", "at least one color is required");
        }
        (out.len() == a.len() && !a.is_empty()).then_some(out)
    });
    let m = colors.as_ref().map(Vec::len);

    let basis: Option<Vec<Vec<Rational>>> = get(&mut ck, "lattice_basis").and_then(|v| {
        let rows = ck.array(v, "lattice_basis", dim)?;
        let mut out = Vec::new();
        let mut ok = true;
        for (r, row) in rows.iter().enumerate() {
            let Some(cells) = ck.array(row, &format!("lattice_basis[{r}]"), dim) else {
                ok = false;
                continue;
            };
            let mut parsed = Vec::new();
            for (c, cell) in cells.iter().enumerate() {
                let f = format!("lattice_basis[{r}][{c}]");
                let val = match cell {
                    Value::String(s) => parse_rational(s),
                    Value::Number(n) => n.as_i64().map(Rational::from_integer),
                    _ => None,
                };
                match val {
                    Some(x) => parsed.push(x),
                    None => {
                        ck.fail(f, "expected a rational such as \"1/2\"");
                        ok = false;
                    }
                }
            }
            out.push(parsed);
        }
        ok.then_some(out)
    });

    let expansion: Option<Vec<Vec<i64>>> = get(&mut ck, "expansion").and_then(|v| {
        let rows = ck.array(v, "expansion", dim)?;
        let mut out = Vec::new();
        let mut ok = true;
        for (r, row) in rows.iter().enumerate() {
            let Some(cells) = ck.array(row, &format!("expansion[{r}]"), dim) else {
                ok = false;
                continue;
            };
            let mut parsed = Vec::new();
            for (c, cell) in cells.iter().enumerate() {
                match ck.int(cell, &format!("expansion[{r}][{c}]"), false) {
                    Some(x) => parsed.push(x),
                    None => ok = false,
                }
            }
            out.push(parsed);
        }
        ok.then_some(out)
    });

    let digits: Option<Vec<Vec<Vec<Vec<i64>>>>> = get(&mut ck, "digits").and_then(|v| {
        let rows = ck.array(v, "digits", m)?;
        let mut out = Vec::new();
        let mut ok = true;
        for (i, row) in rows.iter().enumerate() {
            let Some(cells) = ck.array(row, &format!("digits[{i}]"), m) else {
                ok = false;
                continue;
            };
            let mut parsed = Vec::new();
            for (j, cell) in cells.iter().enumerate() {
                match ck.point_list(cell, &format!("digits[{i}][{j}]"), dim) {
                    Some(p) => parsed.push(p),
                    None => ok = false,
                }
            }
            out.push(parsed);
        }
        ok.then_some(out)
    });

    let seed: Option<Vec<Vec<Vec<i64>>>> = get(&mut ck, "seed").and_then(|v| {
        let lists = ck.array(v, "seed", m)?;
        let mut out = Vec::new();
        let mut ok = true;
        for (i, l) in lists.iter().enumerate() {
            match ck.point_list(l, &format!("seed[{i}]"), dim) {
                Some(p) => out.push(p),
                None => ok = false,
            }
        }
        ok.then_some(out)
    });

    let lattice = basis.and_then(|b| match LatticeBasis::new(&b) {
        Ok(l) => Some(l),
        Err(e) => {
            ck.fail("lattice_basis", e.to_string());
            None
        }
    });
    let q = expansion.and_then(|rows| {
        match IntMatrix::from_rows(&rows).and_then(ExpansionMatrix::new) {
            Ok(q) => Some(q),
            Err(e) => {
                ck.fail("expansion", e.to_string());
                None
            }
        }
    });

    if !ck.violations.is_empty() {
        return Err(Error::Schema(ck.violations));
    }
    let (Some(name), Some(colors), Some(lattice), Some(q), Some(digits), Some(seed)) =
        (name, colors, lattice, q, digits, seed)
    else {
        ck.fail("<document>", "incomplete specification");
        return Err(Error::Schema(ck.violations));
    };
    SubstitutionSystem::new(name, colors, lattice, q, digits, Cluster::from_lists(seed)).map_err(|e| {
        Error::Schema(vec![SchemaViolation {
            field: "<system>".into(),
            reason: e.to_string(),
        }])
    })
}

fn compact<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

/// Canonical text of a system: fixed key order, one digit row per line,
/// sorted digit sets and seed lists, reduced rationals.
pub fn serialize_spec(sys: &SubstitutionSystem) -> String {
    let basis: Vec<Vec<String>> = sys
        .lattice
        .rows()
        .iter()
        .map(|r| r.iter().map(rational_string).collect())
        .collect();
    let rows: Vec<String> = sys.digits.iter().map(|r| format!("    {}", compact(r))).collect();
    format!(
        "{{\n  \"name\": {},\n  \"dim\": {},\n  \"colors\": {},\n  \"lattice_basis\": {},\n  \"expansion\": {},\n  \"digits\": [\n{}\n  ],\n  \"seed\": {}\n}}\n",
        compact(&sys.name),
        sys.dim(),
        compact(&sys.colors),
        compact(&basis),
        compact(&sys.q.matrix().to_rows()),
        rows.join(",\n"),
        compact(&sys.seed.lists()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_specs_are_canonical() {
        for (name, text) in BUNDLED {
            let sys = parse_spec_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(serialize_spec(&sys), text, "{name} is not in canonical form");
        }
    }

    #[test]
    fn abcd_shape() {
        let s = bundled("abcd").unwrap();
        assert_eq!((s.dim(), s.num_colors(), s.q.q()), (1, 4, 3));
        assert_eq!(s.digits.iter().flatten().map(Vec::len).sum::<usize>(), 12);
    }

    #[test]
    fn all_violations_reported() {
        let text = r#"{"name": "", "dim": 1, "colors": ["a"], "lattice_basis": [["x"]],
            "expansion": [[2]], "digits": [[[[0.5]]]], "seed": [[[0]]], "extra": 1}"#;
        match parse_spec_str(text) {
            Err(Error::Schema(v)) => {
                let fields: Vec<&str> = v.iter().map(|s| s.field.as_str()).collect();
                assert!(fields.contains(&"extra"));
                assert!(fields.contains(&"name"));
                assert!(fields.contains(&"lattice_basis[0][0]"));
                assert!(fields.contains(&"digits[0][0][0][0]"));
                assert!(v.iter().any(|s| s.reason.contains("lattice coordinates")));
            }
            other => panic!("expected schema errors, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = &BUNDLED[0].1[..40];
        assert!(matches!(parse_spec_str(text), Err(Error::Schema(_))));
    }
}
