//! Code description files.
//!
//! Three layouts are accepted:
//! - a JSON object `{"q": 2, "format": "decimal", "k": 4, "columns": [...]}`
//!   or `{"q": 2, "format": "matrix", "rows": [[...], ...]}`;
//! - plain text with one generator row per line (`format = matrix`);
//! - plain text with comma or space separated decimal columns
//!   (`format = decimal`, least significant digit in the first row).
//!
//! Text files may carry `q = ..`, `k = ..` and `format = ..` directive lines
//! and `#` comments. Command-line flags override directives. The names
//! `c1`..`c4`, `parity3` and `repetition2` refer to the built-in codes.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use codedpir::code::LinearCode;
use codedpir::field::Field;
use codedpir::fixtures;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Matrix,
    #[value(alias = "decimal-columns")]
    #[serde(alias = "decimal-columns")]
    Decimal,
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub q: Option<u32>,
    pub k: Option<usize>,
    pub format: Option<Format>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonSpec {
    #[serde(default = "two")]
    q: u32,
    format: Format,
    k: Option<usize>,
    columns: Option<Vec<u64>>,
    rows: Option<Vec<Vec<u32>>>,
}

fn two() -> u32 {
    2
}

pub struct NamedCode {
    pub name: String,
    pub code: LinearCode,
}

pub fn builtin(name: &str) -> Option<LinearCode> {
    Some(match name.to_ascii_lowercase().as_str() {
        "c1" => fixtures::c1(),
        "c2" => fixtures::c2(),
        "c3" => fixtures::c3(),
        "c4" => fixtures::c4(),
        "parity3" => fixtures::parity3(),
        "repetition2" => fixtures::repetition2(),
        _ => return None,
    })
}

/// Loads a code from a path or a built-in name.
pub fn load(source: &str, overrides: Overrides) -> Result<NamedCode> {
    let path = Path::new(source);
    if !path.exists() {
        if let Some(code) = builtin(source) {
            return Ok(NamedCode {
                name: source.to_ascii_uppercase(),
                code,
            });
        }
    }
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read code file {source}"))?;
    let name = path
        .file_stem()
        .map_or_else(|| source.to_string(), |s| s.to_string_lossy().into_owned());
    let code = parse(&text, overrides).with_context(|| format!("in {source}"))?;
    Ok(NamedCode { name, code })
}

pub fn parse(text: &str, overrides: Overrides) -> Result<LinearCode> {
    if text.trim_start().starts_with('{') {
        return parse_json(text, overrides);
    }
    let mut q = None;
    let mut k = None;
    let mut format = None;
    let mut lines: Vec<(usize, Vec<u64>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            match key.trim().to_ascii_lowercase().as_str() {
                "q" => {
                    q = Some(value.parse().map_err(|_| {
                        anyhow!("line {line_no}: q must be an integer, got '{value}'")
                    })?)
                }
                "k" => {
                    k = Some(value.parse().map_err(|_| {
                        anyhow!("line {line_no}: k must be an integer, got '{value}'")
                    })?)
                }
                "format" => {
                    format = Some(
                        Format::from_str(value, true)
                            .map_err(|_| anyhow!("line {line_no}: unknown format '{value}'"))?,
                    )
                }
                other => bail!("line {line_no}: unknown directive '{other}'"),
            }
            continue;
        }
        let entries = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u64>()
                    .map_err(|_| anyhow!("line {line_no}: '{t}' is not a nonnegative integer"))
            })
            .collect::<Result<Vec<_>>>()?;
        lines.push((line_no, entries));
    }
    let q = overrides.q.or(q).unwrap_or(2);
    let k = overrides.k.or(k);
    let format = overrides.format.or(format).unwrap_or(Format::Matrix);
    if lines.is_empty() {
        bail!("no generator data");
    }
    let field = Field::new(q).with_context(|| format!("q = {q}"))?;
    match format {
        Format::Decimal => {
            let k =
                k.ok_or_else(|| anyhow!("decimal columns need k (directive 'k = ..' or --k)"))?;
            let columns: Vec<u64> = lines.into_iter().flat_map(|(_, c)| c).collect();
            Ok(LinearCode::from_decimal_columns(field, k, &columns)?)
        }
        Format::Matrix => {
            let width = lines[0].1.len();
            let mut rows = Vec::with_capacity(lines.len());
            for (line_no, entries) in lines {
                if entries.len() != width {
                    bail!(
                        "line {line_no}: row has {} entries, expected {width}",
                        entries.len()
                    );
                }
                let row = entries
                    .iter()
                    .map(|&v| {
                        if v >= q as u64 {
                            Err(anyhow!("line {line_no}: symbol {v} is not in GF({q})"))
                        } else {
                            Ok(v as u32)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.push(row);
            }
            if let Some(k) = k {
                if k != rows.len() {
                    bail!("k = {k} but the matrix has {} rows", rows.len());
                }
            }
            Ok(LinearCode::new(field, rows)?)
        }
    }
}

fn parse_json(text: &str, overrides: Overrides) -> Result<LinearCode> {
    let spec: JsonSpec = serde_json::from_str(text).context("malformed code JSON")?;
    let field = Field::new(overrides.q.unwrap_or(spec.q))?;
    match overrides.format.unwrap_or(spec.format) {
        Format::Decimal => {
            let k = overrides
                .k
                .or(spec.k)
                .ok_or_else(|| anyhow!("decimal columns need \"k\""))?;
            let columns = spec
                .columns
                .ok_or_else(|| anyhow!("decimal format needs \"columns\""))?;
            Ok(LinearCode::from_decimal_columns(field, k, &columns)?)
        }
        Format::Matrix => {
            let rows = spec
                .rows
                .ok_or_else(|| anyhow!("matrix format needs \"rows\""))?;
            Ok(LinearCode::new(field, rows)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_columns_with_directives() {
        let code = parse(
            "# C3\nq = 2\nk = 4\nformat = decimal\n1,2,4,8,8,14,5\n",
            Overrides::default(),
        )
        .unwrap();
        assert!(code.same_code(&fixtures::c3()));
    }

    #[test]
    fn matrix_rows() {
        let code = parse("1 0 0 1 0\n0 1 0 1 0\n0 0 1 0 1\n", Overrides::default()).unwrap();
        assert!(code.same_code(&fixtures::c1()));
    }

    #[test]
    fn json_layouts() {
        let code = parse(
            r#"{"q": 2, "format": "decimal", "k": 4, "columns": [1,2,4,8,8,14,5]}"#,
            Overrides::default(),
        )
        .unwrap();
        assert!(code.same_code(&fixtures::c3()));
        let code = parse(
            r#"{"format": "matrix", "rows": [[1,1]]}"#,
            Overrides::default(),
        )
        .unwrap();
        assert!(code.same_code(&fixtures::repetition2()));
    }

    #[test]
    fn diagnostics_name_the_line() {
        let err = parse("1 0 1\n0 x 1\n", Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse("1 0 1\n0 1\n", Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse("1 0 2\n", Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("GF(2)"), "{err}");
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            q: None,
            k: Some(4),
            format: Some(Format::Decimal),
        };
        assert!(parse("1 2 4 8 8 14 5", o)
            .unwrap()
            .same_code(&fixtures::c3()));
        assert!(parse("1 2 4 8 8 14 5", Overrides::default()).is_err());
    }
}
