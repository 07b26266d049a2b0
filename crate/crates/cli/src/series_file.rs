//! Flat-text series files.
//!
//! The first non-comment line declares the space, the remaining lines hold
//! one observation each as comma-separated reals:
//!
//! ```text
//! # comments start with '#'
//! space=matrix;rows=2;cols=2
//! 0.1,0.2,0.3,0.4
//! ```
//!
//! Header forms: `space=vector;dim=D`, `space=matrix;rows=R;cols=C` (entries
//! row-major) and `space=functional;grid=uniform:N` or
//! `space=functional;grid=0,0.25,...,1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use autohsic::{ObjectSeries, Space};

use crate::error::{CliError, CliResult};

pub fn read(path: &Path) -> CliResult<ObjectSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, path)
}

/// Parses file contents; `origin` only labels error messages.
pub fn parse(text: &str, origin: &Path) -> CliResult<ObjectSeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| CliError::config(format!("{}: empty series file", origin.display())))?;
    let space = parse_header(header).map_err(|m| CliError::at_line(origin, header_line, m))?;
    let width = space.element_len();

    let mut data = Vec::new();
    let mut rows = 0usize;
    for (line_no, line) in lines {
        let before = data.len();
        for (col, field) in line.split(',').enumerate() {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| {
                CliError::at_line(origin, line_no, format!("field {}: cannot parse {field:?} as a number", col + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::at_line(origin, line_no, format!("field {}: non-finite value", col + 1)));
            }
            data.push(v);
        }
        let found = data.len() - before;
        if found != width {
            return Err(CliError::at_line(
                origin,
                line_no,
                format!("expected {width} values, found {found}"),
            ));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::config(format!("{}: no observations after the header", origin.display())));
    }
    Ok(ObjectSeries::new(space, data)?)
}

fn parse_header(header: &str) -> Result<Space, String> {
    let mut fields = BTreeMap::new();
    for part in header.split(';') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("header field {part:?} is not key=value"))?;
        if fields.insert(k.trim(), v.trim()).is_some() {
            return Err(format!("header key {:?} given twice", k.trim()));
        }
    }
    let kind = fields.remove("space").ok_or("header lacks space=...")?;
    let mut take = |key: &str| -> Result<&str, String> {
        fields
            .remove(key)
            .ok_or_else(|| format!("space={kind} needs {key}=..."))
    };
    let count = |key: &str, v: &str| -> Result<usize, String> {
        v.parse()
            .map_err(|_| format!("{key}={v:?} is not a positive integer"))
    };
    let space = match kind {
        "vector" => Space::euclidean(count("dim", take("dim")?)?),
        "matrix" => {
            let rows = count("rows", take("rows")?)?;
            let cols = count("cols", take("cols")?)?;
            Space::matrix(rows, cols)
        }
        "functional" => {
            let grid = take("grid")?;
            match grid.strip_prefix("uniform:") {
                Some(n) => Space::uniform_grid(count("grid", n)?),
                None => {
                    let points = grid
                        .split(',')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| format!("grid {grid:?} is not a list of numbers"))?;
                    Space::functional(points)
                }
            }
        }
        other => return Err(format!("unknown space {other:?}; expected vector, matrix or functional")),
    }
    .map_err(|e| e.to_string())?;
    if let Some(extra) = fields.keys().next() {
        return Err(format!("unknown header key {extra:?}"));
    }
    Ok(space)
}

/// Header line for `space`, the inverse of header parsing.
pub fn header(space: &Space) -> String {
    match space {
        Space::Euclidean { dim } => format!("space=vector;dim={dim}"),
        Space::Matrix { rows, cols } => format!("space=matrix;rows={rows};cols={cols}"),
        Space::Functional { grid, .. } => {
            let n = grid.len();
            let uniform = Space::uniform_grid(n).is_ok_and(|u| &u == space);
            if uniform {
                format!("space=functional;grid=uniform:{n}")
            } else {
                let pts: Vec<String> = grid.iter().map(|g| format!("{g:?}")).collect();
                format!("space=functional;grid={}", pts.join(","))
            }
        }
    }
}

/// Renders a series in the file format, with values in shortest round-trip form.
pub fn render(series: &ObjectSeries, comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    out.push_str(&header(series.space()));
    out.push('\n');
    for obs in series.iter() {
        let row: Vec<String> = obs.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> CliResult<ObjectSeries> {
        parse(s, Path::new("input.txt"))
    }

    #[test]
    fn vector_file_with_comments() {
        let s = parse_str("# two points\nspace=vector;dim=2\n1,2\n\n# mid comment\n3.5,-4e-1\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.get(1), &[3.5, -0.4]);
    }

    #[test]
    fn matrix_and_functional_headers() {
        let m = parse_str("space=matrix;rows=2;cols=3\n1,2,3,4,5,6\n").unwrap();
        assert_eq!(m.space(), &Space::matrix(2, 3).unwrap());
        let f = parse_str("space=functional;grid=uniform:3\n0,1,2\n").unwrap();
        assert_eq!(f.space(), &Space::uniform_grid(3).unwrap());
        let g = parse_str("space=functional;grid=0,0.3,1\n0,1,2\n").unwrap();
        assert_eq!(g.space(), &Space::functional(vec![0.0, 0.3, 1.0]).unwrap());
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_str("space=vector;dim=2\n1,2\n1,2,3\n").unwrap_err();
        assert!(err.to_string().contains("input.txt:3:"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let err = parse_str("# c\nspace=vector;dim=2\n1,x\n").unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
        let err = parse_str("\nspace=vector\n").unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn header_rejects_unknown_keys_and_spaces() {
        assert!(parse_str("space=vector;dim=1;colour=red\n1\n").is_err());
        assert!(parse_str("space=graph\n1\n").is_err());
        assert!(parse_str("space=functional;grid=0,0.5\n1,2\n").is_err());
        assert!(parse_str("space=vector;dim=1\n").is_err());
        assert!(parse_str("space=vector;dim=1\nnan\n").is_err());
    }

    #[test]
    fn render_round_trips() {
        for text in [
            "space=vector;dim=2\n0.1,-2.5\n3.0,1e-300\n",
            "space=matrix;rows=1;cols=2\n1.0,2.0\n",
            "space=functional;grid=uniform:3\n0.0,0.5,1.0\n",
            "space=functional;grid=0.0,0.1,1.0\n0.0,0.5,1.0\n",
        ] {
            let s = parse_str(text).unwrap();
            let back = render(&s, None);
            assert_eq!(parse_str(&back).unwrap(), s);
            assert_eq!(back, render(&parse_str(&back).unwrap(), None));
        }
    }
}
