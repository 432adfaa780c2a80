//! Plain-text graph formats.
//!
//! Edge list: header `n m`, then `m` lines `i j w` with 0-based indices.
//! MatrixMarket: `coordinate real|integer|pattern symmetric`, 1-based, diagonal
//! entries are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {line}: expected a number")))
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(no, l)| (no + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (no, header) = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
    let mut tok = header.split_whitespace();
    let n: usize = parse(tok.next(), no)?;
    let m: usize = parse(tok.next(), no)?;
    let mut edges = Vec::with_capacity(m);
    for (no, line) in lines {
        let mut tok = line.split_whitespace();
        let i: usize = parse(tok.next(), no)?;
        let j: usize = parse(tok.next(), no)?;
        let w: f64 = parse(tok.next(), no)?;
        edges.push((i, j, w));
    }
    if edges.len() != m {
        return Err(Error::Parse(format!("header declares {m} edges, found {}", edges.len())));
    }
    Graph::from_edges(n, edges)
}

pub fn parse_matrix_market(text: &str) -> Result<Graph> {
    let mut lines = text.lines().enumerate().map(|(no, l)| (no + 1, l.trim()));
    let (_, banner) = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let banner = banner.to_ascii_lowercase();
    let fields: Vec<&str> = banner.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::Parse("expected a MatrixMarket coordinate banner".into()));
    }
    if fields[4] != "symmetric" {
        return Err(Error::Parse(format!("unsupported symmetry '{}'", fields[4])));
    }
    let pattern = match fields[3] {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(Error::Parse(format!("unsupported field '{other}'"))),
    };
    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (no, size) = body.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let mut tok = size.split_whitespace();
    let rows: usize = parse(tok.next(), no)?;
    let cols: usize = parse(tok.next(), no)?;
    let nnz: usize = parse(tok.next(), no)?;
    if rows != cols {
        return Err(Error::Parse(format!("matrix is {rows}x{cols}, not square")));
    }
    let mut edges = Vec::with_capacity(nnz);
    let mut seen = 0;
    for (no, line) in body {
        let mut tok = line.split_whitespace();
        let i: usize = parse(tok.next(), no)?;
        let j: usize = parse(tok.next(), no)?;
        let w: f64 = if pattern { 1.0 } else { parse(tok.next(), no)? };
        seen += 1;
        if i == 0 || j == 0 {
            return Err(Error::Parse(format!("line {no}: indices are 1-based")));
        }
        if i != j {
            edges.push((i - 1, j - 1, w));
        }
    }
    if seen != nnz {
        return Err(Error::Parse(format!("size line declares {nnz} entries, found {seen}")));
    }
    Graph::from_edges(rows, edges)
}

pub fn read_edge_list(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text)
}

pub fn read_matrix_market(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text)
}

/// Reads either format, picking MatrixMarket when the banner is present.
pub fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(&text)
    } else {
        parse_edge_list(&text)
    }
}

pub fn write_edge_list(g: &Graph, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", g.n(), g.edge_count()));
    for e in g.edges() {
        // {:?} prints the shortest representation that round-trips
        out.push_str(&format!("{} {} {:?}\n", e.i, e.j, e.w));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_parses() {
        let g = parse_edge_list("3 2\n0 1 0.5\n# comment\n2 1 1.25\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges()[1].w, 1.25);
        assert!(g.is_connected());
    }

    #[test]
    fn edge_list_count_mismatch() {
        assert!(matches!(parse_edge_list("3 2\n0 1 0.5\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn matrix_market_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 3\n1 1 4.0\n2 1 0.5\n3 2 2.0\n";
        let g = parse_matrix_market(text).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edges()[0].w, 0.5);
    }

    #[test]
    fn edge_list_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        let g = Graph::from_edges(4, [(0, 1, 0.1), (1, 2, 1.0 / 3.0), (0, 3, 2.5e-7)]).unwrap();
        write_edge_list(&g, &path).unwrap();
        let back = read_graph(&path).unwrap();
        assert_eq!(back.edges(), g.edges());
    }
}
