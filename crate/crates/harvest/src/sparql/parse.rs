use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ClientError;

/// One result row: variable name to lexical value. Unbound variables are absent.
pub type Bindings = BTreeMap<String, String>;

#[derive(Deserialize)]
struct ResultsDoc {
    #[allow(dead_code)]
    head: Head,
    results: Results,
}

#[derive(Deserialize, Serialize)]
struct Head {
    #[serde(default)]
    vars: Vec<String>,
}

#[derive(Deserialize)]
struct Results {
    bindings: Vec<BTreeMap<String, Term>>,
}

#[derive(Deserialize, Serialize)]
struct Term {
    #[serde(rename = "type")]
    kind: String,
    value: String,
}

/// Parses a `application/sparql-results+json` SELECT document.
pub fn parse_select_results(body: &[u8]) -> Result<Vec<Bindings>, ClientError> {
    let doc: ResultsDoc = serde_json::from_slice(body).map_err(|e| ClientError::Parse {
        offset: byte_offset(body, e.line(), e.column()),
        message: e.to_string(),
    })?;
    Ok(doc
        .results
        .bindings
        .into_iter()
        .map(|row| row.into_iter().map(|(k, t)| (k, t.value)).collect())
        .collect())
}

/// Inverse of [`parse_select_results`]; every value is written as a plain literal.
pub fn encode_select_results(vars: &[&str], rows: &[Bindings]) -> Vec<u8> {
    let bindings: Vec<BTreeMap<&str, Term>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|(k, v)| {
                    let kind = if v.starts_with("http://") || v.starts_with("https://") {
                        "uri"
                    } else {
                        "literal"
                    };
                    (
                        k.as_str(),
                        Term {
                            kind: kind.to_owned(),
                            value: v.clone(),
                        },
                    )
                })
                .collect()
        })
        .collect();
    let doc = serde_json::json!({
        "head": { "vars": vars },
        "results": { "bindings": bindings },
    });
    serde_json::to_vec(&doc).expect("in-memory JSON serialization cannot fail")
}

// serde_json reports 1-based line and column (column counted in bytes).
fn byte_offset(body: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut start = 0;
    for _ in 1..line {
        match body[start..].iter().position(|&b| b == b'\n') {
            Some(p) => start += p + 1,
            None => break,
        }
    }
    (start + column.saturating_sub(1)).min(body.len())
}
