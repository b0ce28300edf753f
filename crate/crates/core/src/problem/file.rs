//! Line-oriented problem files.
//!
//! ```text
//! [meta] name=ex5 n=1 m=2 p=4
//! [cone] rows=2
//! 6 -2
//! -7 10
//! e= 1 1
//! [box]
//! 2.335 4.401
//! [functions]
//! 2*x1^2 + exp(x1) + (i-3)/2
//! (x1/2)*cos(x1) + ((3-i)/2)*sin(x1)^2
//! ```
//!
//! `key=value` pairs may follow a section header or sit on their own lines. Omitting
//! `[cone]` selects the nonnegative orthant with `e = (1, ..., 1)`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{ProblemSpec, VectorFunctions};
use crate::cone::ConeSpec;
use crate::error::{Error, Result};
use crate::expr::{parse_at, Expr, ExprError};

struct DslFunctions {
    exprs: Vec<Expr>,
    n: usize,
}

impl DslFunctions {
    fn lift(&self, i: usize, x: &[f64], err: ExprError) -> Error {
        match err {
            ExprError::Domain { .. } => Error::Domain {
                function: i + 1,
                x: x.to_vec(),
                detail: err.to_string(),
            },
            other => Error::Expr(other),
        }
    }
}

impl VectorFunctions for DslFunctions {
    fn value(&self, i: usize, x: &[f64]) -> Result<DVector<f64>> {
        let vals: Vec<f64> = self
            .exprs
            .iter()
            .map(|e| e.eval(x, i + 1))
            .collect::<std::result::Result<_, _>>()
            .map_err(|err| self.lift(i, x, err))?;
        Ok(DVector::from_vec(vals))
    }

    fn jacobian(&self, i: usize, x: &[f64]) -> Result<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.exprs.len(), self.n);
        for (r, e) in self.exprs.iter().enumerate() {
            let (d, nonsmooth) = e
                .eval_dual_flagged(x, i + 1)
                .map_err(|err| self.lift(i, x, err))?;
            if nonsmooth {
                log::debug!("f^{} component {}: abs() differentiated at 0", i + 1, r + 1);
            }
            for (c, g) in d.grad.iter().enumerate() {
                jac[(r, c)] = *g;
            }
        }
        Ok(jac)
    }
}

/// Reads and parses a problem file.
pub fn load(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".into());
    parse_problem(&text, &stem)
}

#[derive(Default)]
struct Meta {
    name: Option<String>,
    n: Option<usize>,
    m: Option<usize>,
    p: Option<usize>,
}

#[derive(Default)]
struct ConeBlock {
    header_line: usize,
    rows: Option<usize>,
    a: Vec<(usize, Vec<f64>)>,
    e: Option<(usize, Vec<f64>)>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Meta,
    Cone,
    Box,
    Functions,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::None => "top",
            Section::Meta => "meta",
            Section::Cone => "cone",
            Section::Box => "box",
            Section::Functions => "functions",
        }
    }
}

fn format_err(section: Section, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        section: section.name().into(),
        line,
        message: message.into(),
    }
}

/// Splits `key=value` pairs; tolerates spaces around `=`.
fn pairs(text: &str) -> Vec<(String, String)> {
    let mut joined = String::new();
    let mut chars = text.trim().chars().peekable();
    while let Some(c) = chars.next() {
        if c == '=' {
            while joined.ends_with(' ') {
                joined.pop();
            }
            joined.push('=');
            while chars.peek() == Some(&' ') {
                chars.next();
            }
        } else {
            joined.push(c);
        }
    }
    joined
        .split_whitespace()
        .map(|tok| match tok.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => (tok.to_string(), String::new()),
        })
        .collect()
}

fn numbers(text: &str, section: Section, line: usize) -> Result<Vec<f64>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format_err(section, line, format!("not a number: {t:?}")))
        })
        .collect()
}

fn count(value: &str, key: &str, section: Section, line: usize) -> Result<usize> {
    value.parse::<usize>().map_err(|_| {
        format_err(
            section,
            line,
            format!("{key} must be a non-negative integer, got {value:?}"),
        )
    })
}

fn apply_meta(meta: &mut Meta, text: &str, line: usize) -> Result<()> {
    for (k, v) in pairs(text) {
        match k.as_str() {
            "name" => meta.name = Some(v),
            "n" => meta.n = Some(count(&v, "n", Section::Meta, line)?),
            "m" => meta.m = Some(count(&v, "m", Section::Meta, line)?),
            "p" => meta.p = Some(count(&v, "p", Section::Meta, line)?),
            _ => {
                return Err(format_err(
                    Section::Meta,
                    line,
                    format!("unknown key {k:?}"),
                ))
            }
        }
    }
    Ok(())
}

fn apply_cone_keys(cone: &mut ConeBlock, text: &str, line: usize) -> Result<()> {
    for (k, v) in pairs(text) {
        match k.as_str() {
            "rows" => cone.rows = Some(count(&v, "rows", Section::Cone, line)?),
            _ => {
                return Err(format_err(
                    Section::Cone,
                    line,
                    format!("unknown key {k:?}"),
                ))
            }
        }
    }
    Ok(())
}

/// Parses problem-file text; `default_name` is used when `[meta]` has no `name`.
pub fn parse_problem(text: &str, default_name: &str) -> Result<ProblemSpec> {
    let mut section = Section::None;
    let mut meta = Meta::default();
    let mut meta_line = 0;
    let mut cone: Option<ConeBlock> = None;
    let mut bounds: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut functions: Vec<(usize, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let (head, tail) = rest
                .split_once(']')
                .ok_or_else(|| format_err(section, line, "unterminated section header"))?;
            section = match head.trim() {
                "meta" => Section::Meta,
                "cone" => Section::Cone,
                "box" => Section::Box,
                "functions" => Section::Functions,
                other => {
                    return Err(format_err(
                        section,
                        line,
                        format!("unknown section [{other}]"),
                    ))
                }
            };
            match section {
                Section::Meta => {
                    meta_line = line;
                    apply_meta(&mut meta, tail, line)?;
                }
                Section::Cone => {
                    let block = cone.insert(ConeBlock {
                        header_line: line,
                        ..Default::default()
                    });
                    apply_cone_keys(block, tail, line)?;
                }
                _ if !tail.trim().is_empty() => {
                    return Err(format_err(
                        section,
                        line,
                        "unexpected text after section header",
                    ))
                }
                _ => {}
            }
            continue;
        }
        match section {
            Section::None => {
                return Err(format_err(
                    section,
                    line,
                    "content before the first section",
                ))
            }
            Section::Meta => apply_meta(&mut meta, trimmed, line)?,
            Section::Cone => {
                let block = cone.as_mut().expect("cone section open");
                if let Some(rest) = trimmed.strip_prefix("e=").or_else(|| {
                    trimmed
                        .strip_prefix('e')
                        .and_then(|r| r.trim_start().strip_prefix('='))
                }) {
                    block.e = Some((line, numbers(rest, section, line)?));
                } else if trimmed.starts_with("rows") {
                    apply_cone_keys(block, trimmed, line)?;
                } else {
                    block.a.push((line, numbers(trimmed, section, line)?));
                }
            }
            Section::Box => bounds.push((line, numbers(trimmed, section, line)?)),
            // keep the untrimmed prefix so reported columns match the file
            Section::Functions => functions.push((line, content.to_string())),
        }
    }

    let missing = |key: &str| format_err(Section::Meta, meta_line, format!("missing {key}"));
    let n = meta.n.ok_or_else(|| missing("n"))?;
    let m = meta.m.ok_or_else(|| missing("m"))?;
    let p = meta.p.ok_or_else(|| missing("p"))?;
    for (key, v) in [("n", n), ("m", m), ("p", p)] {
        if v == 0 {
            return Err(format_err(
                Section::Meta,
                meta_line,
                format!("{key} must be at least 1"),
            ));
        }
    }

    let cone = match cone {
        None => ConeSpec::nonnegative_orthant(m),
        Some(block) => build_cone(block, m)?,
    };

    if bounds.len() != n {
        let line = bounds.last().map_or(0, |b| b.0);
        return Err(format_err(
            Section::Box,
            line,
            format!("expected {n} interval lines, found {}", bounds.len()),
        ));
    }
    let mut sample_box = Vec::with_capacity(n);
    for (line, b) in bounds {
        match b[..] {
            [lo, hi] if lo <= hi => sample_box.push((lo, hi)),
            _ => {
                return Err(format_err(
                    Section::Box,
                    line,
                    "expected `lo hi` with lo <= hi",
                ))
            }
        }
    }

    if functions.len() != m {
        let line = functions.last().map_or(0, |f| f.0);
        return Err(format_err(
            Section::Functions,
            line,
            format!("expected {m} expression lines, found {}", functions.len()),
        ));
    }
    let exprs = functions
        .iter()
        .map(|(line, src)| parse_at(src, n, *line).map_err(|e| Error::from(e).at_line(*line)))
        .collect::<Result<Vec<_>>>()?;

    let ps = ProblemSpec::new(
        meta.name.unwrap_or_else(|| default_name.to_string()),
        n,
        m,
        p,
        cone,
        sample_box,
        Arc::new(DslFunctions { exprs, n }),
    )?;
    ps.check_total_on_box()?;
    Ok(ps)
}

fn build_cone(block: ConeBlock, m: usize) -> Result<ConeSpec> {
    let header = block.header_line;
    if let Some(q) = block.rows {
        if q != block.a.len() {
            return Err(format_err(
                Section::Cone,
                header,
                format!("rows={q} but {} matrix rows given", block.a.len()),
            ));
        }
    }
    if block.a.is_empty() {
        return Err(format_err(Section::Cone, header, "cone has no rows"));
    }
    for (line, row) in &block.a {
        if row.len() != m {
            return Err(format_err(
                Section::Cone,
                *line,
                format!("expected {m} entries, found {}", row.len()),
            ));
        }
    }
    let e = match block.e {
        Some((line, e)) if e.len() != m => {
            return Err(format_err(
                Section::Cone,
                line,
                format!("e needs {m} entries, found {}", e.len()),
            ))
        }
        Some((_, e)) => e,
        None => vec![1.0; m],
    };
    let rows: Vec<Vec<f64>> = block.a.into_iter().map(|(_, r)| r).collect();
    ConeSpec::from_rows(&rows, &e).map_err(|err| err.at_line(header))
}
