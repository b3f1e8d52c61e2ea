use std::fs;
use std::io::Write;
use std::path::Path;

use super::topology::{check_slot, check_weight, Topology};
use crate::error::{Error, Result};

/// Reads an edge list: one `i j [w]` per line, 0-based, default weight 1.
///
/// Lines starting with `#` are comments, except `# nodes N`, which fixes the
/// node count (otherwise it is the largest index plus one). Duplicate slots
/// are summed. With `directed == false` every line also adds `(j, i)`.
pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<Topology> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, directed, path)
}

/// Parses edge-list text; `origin` is only used in error messages.
pub fn parse_edge_list(text: &str, directed: bool, origin: &Path) -> Result<Topology> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut declared_n: Option<usize> = None;
    let mut triples = Vec::new();
    let mut max_index: Option<usize> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("nodes") {
                let n = parts
                    .next()
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| parse_err(lineno, "malformed `# nodes` header".into()))?;
                declared_n = Some(n);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_err(
                lineno,
                format!("expected `i j [w]`, found {} fields", fields.len()),
            ));
        }
        let index = |t: &str| {
            t.parse::<usize>()
                .map_err(|e| parse_err(lineno, format!("bad node index `{t}`: {e}")))
        };
        let i = index(fields[0])?;
        let j = index(fields[1])?;
        let w = match fields.get(2) {
            Some(t) => t
                .parse::<f64>()
                .map_err(|e| parse_err(lineno, format!("bad weight `{t}`: {e}")))?,
            None => 1.0,
        };
        if i == j {
            return Err(Error::SelfLoop {
                node: i,
                location: format!("{}:{lineno}", origin.display()),
            });
        }
        check_weight(w, &format!("{}:{lineno}", origin.display()))?;
        max_index = Some(max_index.map_or(i.max(j), |m: usize| m.max(i).max(j)));
        triples.push((i, j, w));
        if !directed {
            triples.push((j, i, w));
        }
    }

    let inferred = max_index.map_or(0, |m| m + 1);
    let n = match declared_n {
        Some(n) if n < inferred => {
            return Err(parse_err(
                0,
                format!("`# nodes {n}` but index {} appears", inferred - 1),
            ))
        }
        Some(n) => n,
        None => inferred,
    };
    for &(i, j, _) in &triples {
        check_slot(n, i, j, &origin.display().to_string())?;
    }
    Ok(Topology::from_checked_triples(n, triples))
}

/// Writes every stored entry as `i j w`, preceded by a `# nodes N` header.
pub fn write_edge_list(topology: &Topology, mut out: impl Write) -> Result<()> {
    writeln!(out, "# nodes {}", topology.n())?;
    for (i, j, w) in topology.entries() {
        writeln!(out, "{i} {j} {w:?}")?;
    }
    Ok(())
}

/// Reads one opinion per line (`#` comments allowed); checks the length when
/// `n` is given.
pub fn load_opinions(path: impl AsRef<Path>, n: Option<usize>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message: format!("bad opinion `{line}`: {e}"),
        })?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                location: format!("{}:{}", path.display(), lineno + 1),
            });
        }
        values.push(v);
    }
    if let Some(n) = n {
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                what: "opinion file",
                expected: n,
                actual: values.len(),
            });
        }
    }
    Ok(values)
}

pub fn write_opinions(values: &[f64], mut out: impl Write) -> Result<()> {
    for v in values {
        writeln!(out, "{v:?}")?;
    }
    Ok(())
}
