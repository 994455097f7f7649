//! The `POLYMESH 1` ASCII format.
//!
//! ```text
//! POLYMESH 1
//! <V> <F>
//! x y z        (V lines)
//! i j k        (F lines, 0-based, counter-clockwise seen from outside)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{PolypotError, Result};
use crate::geometry::SurfaceMesh;

pub fn load_mesh(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PolypotError::Io { path: path.into(), source })?;
    parse_mesh(&text, path)
}

pub fn save_mesh(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_mesh(mesh)).map_err(|source| PolypotError::Io { path: path.into(), source })
}

/// Serializes with round-trip exact floats.
pub fn format_mesh(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "POLYMESH 1\n{} {}", mesh.vertices().len(), mesh.len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]);
    }
    for [a, b, c] in mesh.faces() {
        let _ = writeln!(s, "{a} {b} {c}");
    }
    s
}

/// Parses mesh text; `origin` only labels error messages.
pub fn parse_mesh(text: &str, origin: &Path) -> Result<SurfaceMesh> {
    let err = |line: usize, message: String| PolypotError::Parse { path: origin.into(), line, message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    if header.split_whitespace().collect::<Vec<_>>() != ["POLYMESH", "1"] {
        return Err(err(ln, format!("expected `POLYMESH 1`, found `{header}`")));
    }
    let (ln, counts) = lines.next().ok_or_else(|| err(ln + 1, "missing `<V> <F>` line".into()))?;
    let [nv, nf] = fields::<usize, 2>(counts).map_err(|m| err(ln, m))?;

    let mut last = ln;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| err(last + 1, format!("expected {nv} vertices")))?;
        vertices.push(fields::<f64, 3>(l).map_err(|m| err(ln, m))?);
        last = ln;
    }
    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| err(last + 1, format!("expected {nf} faces")))?;
        let idx = fields::<usize, 3>(l).map_err(|m| err(ln, m))?;
        if let Some(&i) = idx.iter().find(|&&i| i >= nv) {
            return Err(err(ln, format!("face {f} references vertex {i}, but only {nv} vertices exist")));
        }
        faces.push(idx);
        last = ln;
    }
    if let Some((ln, l)) = lines.next() {
        return Err(err(ln, format!("unexpected trailing content `{l}`")));
    }
    SurfaceMesh::new(vertices, faces)
}

fn fields<T: std::str::FromStr, const K: usize>(line: &str) -> std::result::Result<[T; K], String> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != K {
        return Err(format!("expected {K} fields, found {}", parts.len()));
    }
    let mut out = Vec::with_capacity(K);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| format!("cannot parse `{p}`"))?);
    }
    out.try_into().map_err(|_| unreachable!())
}
