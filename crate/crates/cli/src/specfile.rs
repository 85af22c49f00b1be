//! Surface spec files.
//!
//! A spec is a sequence of `key=value` tokens separated by whitespace or
//! newlines; `#` starts a comment. A catalog surface names its `family`:
//!
//! ```text
//! family=geodesic_sphere_S n=4 nu=1 rho=1.0471975511965976
//! ```
//!
//! An expression chart gives `n`, `nu` and then an `expr:` block that runs to
//! the end of the file, with entries separated by `;` or newlines:
//!
//! ```text
//! n=3 nu=0
//! expr: f1=u1; f2=u2; f3=u3
//! f4 = u1^2 + u2^2 + u3^2
//! domain=-1:1,-1:1,-1:1
//! ```
//!
//! `domain` defaults to `[-0.5, 0.5]` on every axis.

use std::collections::BTreeMap;

use hyperholonomy::catalog::{self, Family};

use crate::config::{check_variables, ExprSurface, FamilySurface, SurfaceConfig};
use crate::error::CliError;
use crate::expr::{parse_expr, SyntaxError};

const TOP_KEYS: [&str; 9] = ["family", "n", "nu", "k", "r", "rho", "t", "amplitude", "frequency"];
const DEFAULT_EXPR_DOMAIN: [f64; 2] = [-0.5, 0.5];

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> CliError {
    CliError::Syntax(SyntaxError { line, column, message: message.into() })
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

/// Splits `text` at `sep` into `(column offset, piece)` pairs.
fn pieces(text: &str, sep: impl Fn(char) -> bool) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (col, (byte, c)) in text.char_indices().enumerate() {
        match (sep(c), start) {
            (true, Some((s_col, s_byte))) => {
                out.push((s_col, &text[s_byte..byte]));
                start = None;
            }
            (false, None) => start = Some((col, byte)),
            _ => {}
        }
    }
    if let Some((s_col, s_byte)) = start {
        out.push((s_col, &text[s_byte..]));
    }
    out
}

fn split_entry(piece: &str, line: usize, column: usize) -> Result<(String, Entry), CliError> {
    let Some(eq) = piece.find('=') else {
        return Err(syntax(line, column, format!("expected key=value, found '{piece}'")));
    };
    let key = piece[..eq].trim();
    let raw = &piece[eq + 1..];
    let lead = raw.chars().take_while(|c| c.is_whitespace()).count();
    let value = raw.trim();
    if key.is_empty() {
        return Err(syntax(line, column, "missing key before '='"));
    }
    let value_col = column + piece[..eq + 1].chars().count() + lead;
    if value.is_empty() {
        return Err(syntax(line, value_col, format!("missing value for '{key}'")));
    }
    Ok((key.to_string(), Entry { value: value.to_string(), line, column: value_col }))
}

fn insert(map: &mut BTreeMap<String, Entry>, key: String, entry: Entry) -> Result<(), CliError> {
    if map.contains_key(&key) {
        return Err(CliError::semantic(key, "given more than once"));
    }
    map.insert(key, entry);
    Ok(())
}

fn number(entry: &Entry, key: &str) -> Result<f64, CliError> {
    let v: f64 = entry
        .value
        .parse()
        .map_err(|_| syntax(entry.line, entry.column, format!("{key}: '{}' is not a number", entry.value)))?;
    if !v.is_finite() {
        return Err(CliError::semantic(key, "must be finite"));
    }
    Ok(v)
}

fn integer(entry: &Entry, key: &str) -> Result<usize, CliError> {
    entry
        .value
        .parse()
        .map_err(|_| syntax(entry.line, entry.column, format!("{key}: '{}' is not a non-negative integer", entry.value)))
}

fn domain(entry: &Entry) -> Result<Vec<[f64; 2]>, CliError> {
    let mut out = Vec::new();
    for (offset, part) in pieces(&entry.value, |c| c == ',') {
        let column = entry.column + offset;
        let (lo, hi) = part
            .split_once(':')
            .ok_or_else(|| syntax(entry.line, column, format!("domain: expected lo:hi, found '{}'", part.trim())))?;
        let parse = |s: &str| -> Result<f64, CliError> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| syntax(entry.line, column, format!("domain: '{}' is not a number", s.trim())))
        };
        out.push([parse(lo)?, parse(hi)?]);
    }
    Ok(out)
}

/// Parses a surface spec into a validated [`SurfaceConfig`].
pub fn parse_surface_spec(text: &str) -> Result<SurfaceConfig, CliError> {
    let mut top: BTreeMap<String, Entry> = BTreeMap::new();
    let mut block: Option<BTreeMap<String, Entry>> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line);
        if let Some(entries) = block.as_mut() {
            for (col, piece) in pieces(line, |c| c == ';') {
                if piece.trim().is_empty() {
                    continue;
                }
                let (key, entry) = split_entry(piece, line_no, col + 1)?;
                insert(entries, key, entry)?;
            }
            continue;
        }
        for (col, token) in pieces(line, char::is_whitespace) {
            if let Some(rest_start) = token.strip_prefix("expr:").map(|_| col + "expr:".len()) {
                let rest: String = line.chars().skip(rest_start).collect();
                let mut entries = BTreeMap::new();
                for (c, piece) in pieces(&rest, |c| c == ';') {
                    if piece.trim().is_empty() {
                        continue;
                    }
                    let (key, entry) = split_entry(piece, line_no, rest_start + c + 1)?;
                    insert(&mut entries, key, entry)?;
                }
                block = Some(entries);
                break;
            }
            let (key, entry) = split_entry(token, line_no, col + 1)?;
            if !TOP_KEYS.contains(&key.as_str()) {
                return Err(CliError::semantic(key, "unknown key"));
            }
            insert(&mut top, key, entry)?;
        }
    }
    match block {
        Some(entries) => expression_surface(top, entries),
        None => family_surface(top),
    }
}

fn family_surface(top: BTreeMap<String, Entry>) -> Result<SurfaceConfig, CliError> {
    let fam_entry = top.get("family").ok_or_else(|| CliError::semantic("family", "missing (or give an expr: block)"))?;
    let family: Family = fam_entry
        .value
        .parse()
        .map_err(|_| CliError::semantic("family", format!("unknown family '{}'", fam_entry.value)))?;
    let n = integer(top.get("n").ok_or_else(|| CliError::semantic("n", "missing"))?, "n")?;
    let nu = top.get("nu").map(|e| number(e, "nu")).transpose()?.unwrap_or(family.default_nu());
    let real = |key: &str| top.get(key).map(|e| number(e, key)).transpose();
    let surface = FamilySurface {
        family: family.name().to_string(),
        n,
        nu,
        k: top.get("k").map(|e| integer(e, "k")).transpose()?,
        r: real("r")?,
        rho: real("rho")?,
        t: real("t")?,
        amplitude: real("amplitude")?,
        frequency: real("frequency")?,
    };
    catalog::build_smoke(&surface.to_spec()?)?;
    Ok(SurfaceConfig::Family(surface))
}

fn expression_surface(top: BTreeMap<String, Entry>, entries: BTreeMap<String, Entry>) -> Result<SurfaceConfig, CliError> {
    if let Some(key) = top.keys().find(|k| !matches!(k.as_str(), "n" | "nu")) {
        return Err(CliError::semantic(key.clone(), "not allowed together with an expr: block"));
    }
    let n = integer(top.get("n").ok_or_else(|| CliError::semantic("n", "missing"))?, "n")?;
    let nu = number(top.get("nu").ok_or_else(|| CliError::semantic("nu", "missing"))?, "nu")?;
    let mut components: Vec<(usize, &Entry)> = Vec::new();
    let mut dom = None;
    for (key, entry) in &entries {
        if key == "domain" {
            dom = Some(domain(entry)?);
            continue;
        }
        let index = key
            .strip_prefix('f')
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&i| i >= 1)
            .ok_or_else(|| CliError::semantic(key.clone(), "unknown key in expr: block (expected f1, f2, ... or domain)"))?;
        components.push((index, entry));
    }
    components.sort_by_key(|(i, _)| *i);
    if let Some(pos) = components.iter().enumerate().position(|(p, (i, _))| *i != p + 1) {
        return Err(CliError::semantic(format!("f{}", pos + 1), "missing; components must be numbered f1, f2, ... without gaps"));
    }
    let exprs = components
        .iter()
        .map(|(_, e)| parse_expr(&e.value, e.line, e.column))
        .collect::<Result<Vec<_>, _>>()?;
    check_variables(&exprs, n)?;
    let surface = ExprSurface {
        n,
        nu,
        components: components.iter().map(|(_, e)| e.value.clone()).collect(),
        domain: dom.unwrap_or_else(|| vec![DEFAULT_EXPR_DOMAIN; n]),
    };
    surface.compile()?;
    Ok(SurfaceConfig::Expr(surface))
}
