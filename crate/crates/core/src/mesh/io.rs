use std::fmt::Write as _;
use std::path::Path;

use super::{extract_topology, Mesh, Point};
use crate::error::{Error, Result};

/// ASCII mesh text: header `"<n_vertices> <n_tets>"`, one `x y z` line per
/// vertex, one `i0 i1 i2 i3` line per tetrahedron (0-based). `#` starts a
/// comment.
pub fn serialize_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", mesh.n_vertices(), mesh.n_tets()).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v.x, v.y, v.z).unwrap();
    }
    for t in mesh.tets() {
        writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    out
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serialize_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then(|| (i + 1, content))
    });

    let err = |line: usize, message: String| Error::Parse { line, message };
    let (hline, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing header line".into()))?;
    let counts = parse_tokens::<usize>(hline, header, 2, "count")?;
    let (nv, nt) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, content) = lines
            .next()
            .ok_or_else(|| err(hline, format!("expected {nv} vertex lines")))?;
        let c = parse_tokens::<f64>(line, content, 3, "coordinate")?;
        vertices.push(Point::new(c[0], c[1], c[2]));
    }

    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, content) = lines
            .next()
            .ok_or_else(|| err(hline, format!("expected {nt} tetrahedron lines")))?;
        let idx = parse_tokens::<usize>(line, content, 4, "vertex index")?;
        if let Some(&bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(err(
                line,
                format!("vertex index {bad} out of range for {nv} vertices"),
            ));
        }
        tets.push([idx[0], idx[1], idx[2], idx[3]]);
    }

    if let Some((line, _)) = lines.next() {
        return Err(err(line, "unexpected trailing content".into()));
    }

    extract_topology(vertices, tets)
}

fn parse_tokens<T: std::str::FromStr>(
    line: usize,
    content: &str,
    expected: usize,
    what: &str,
) -> Result<Vec<T>> {
    let tokens: Vec<&str> = content.split_whitespace().collect();
    if tokens.len() != expected {
        return Err(Error::Parse {
            line,
            message: format!("expected {expected} tokens, found {}", tokens.len()),
        });
    }
    tokens
        .iter()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| Error::Parse {
                line,
                message: format!("invalid {what} '{tok}'"),
            })
        })
        .collect()
}
