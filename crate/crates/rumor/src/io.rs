//! Graph file formats.
//!
//! Vertices are numbered from 1 in files and from 0 in memory.
//!
//! * Adjacency text: one line per vertex, `v: u1 u2 ... ud`. A loop at `v`
//!   lists `v` twice, once per edge-end. Blank lines and lines starting with
//!   `#` are ignored.
//! * Edge-list CSV: header `u,v`, then one row per undirected edge. A loop is
//!   a single row `v,v`.

use std::fmt::Write as _;
use std::path::Path;

use rumor_core::{Graph, Vertex};

use crate::error::{io_err, Error, Result};

pub fn parse_adjacency(text: &str) -> Result<Graph> {
    let mut rows: Vec<Option<Vec<Vertex>>> = Vec::new();
    let mut d = None;
    let mut seen = 0usize;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::Parse { line: line_no, msg: msg.to_string() };
        let (head, tail) = line.split_once(':').ok_or_else(|| bad("expected `v: u1 ... ud`"))?;
        let v = parse_vertex(head.trim(), line_no)?;
        let nbrs = tail
            .split_whitespace()
            .map(|tok| parse_vertex(tok, line_no))
            .collect::<Result<Vec<_>>>()?;
        match d {
            None => d = Some(nbrs.len()),
            Some(k) if k != nbrs.len() => return Err(bad("all vertices must have the same degree")),
            _ => {}
        }
        if rows.len() <= v as usize {
            rows.resize(v as usize + 1, None);
        }
        if rows[v as usize].replace(nbrs).is_some() {
            return Err(bad("vertex listed twice"));
        }
        seen += 1;
    }
    let d = d.ok_or(Error::Parse { line: 0, msg: "no vertices".into() })?;
    if seen != rows.len() {
        let missing = rows.iter().position(Option::is_none).unwrap_or(0);
        return Err(Error::Parse { line: 0, msg: format!("vertex {} has no line", missing + 1) });
    }
    let n = rows.len();
    let ends = rows.into_iter().flatten().flatten().collect();
    Ok(Graph::from_edge_ends(n, d, ends)?)
}

fn parse_vertex(tok: &str, line: usize) -> Result<Vertex> {
    match tok.parse::<u64>() {
        Ok(v) if v >= 1 && v <= Vertex::MAX as u64 => Ok((v - 1) as Vertex),
        _ => Err(Error::Parse { line, msg: format!("`{tok}` is not a vertex id (ids start at 1)") }),
    }
}

pub fn format_adjacency(g: &Graph) -> String {
    let mut out = String::new();
    for v in 0..g.n() as Vertex {
        let _ = write!(out, "{}:", v + 1);
        for &u in g.neighbors(v) {
            let _ = write!(out, " {}", u + 1);
        }
        out.push('\n');
    }
    out
}

pub fn parse_edge_csv(text: &str) -> Result<Graph> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut edges = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        if row.len() != 2 {
            return Err(Error::Parse { line, msg: "expected two columns u,v".into() });
        }
        edges.push((parse_vertex(&row[0], line)?, parse_vertex(&row[1], line)?));
    }
    let n = edges.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0);
    if n == 0 || (2 * edges.len()) % n != 0 {
        return Err(Error::Parse { line: 0, msg: "edge list does not describe a regular graph".into() });
    }
    Ok(Graph::from_edges(n, 2 * edges.len() / n, &edges)?)
}

pub fn format_edge_csv(g: &Graph) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["u", "v"])?;
    for (u, v) in g.edges() {
        w.serialize((u + 1, v + 1))?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a graph, choosing the format by extension (`.csv` for edge lists,
/// anything else for adjacency text).
pub fn read_graph(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    if is_csv(path) {
        parse_edge_csv(&text)
    } else {
        parse_adjacency(&text)
    }
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    let text = if is_csv(path) { format_edge_csv(g)? } else { format_adjacency(g) };
    std::fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rumor_core::fixtures;

    #[test]
    fn adjacency_round_trip() {
        for g in [fixtures::complete(4), fixtures::petersen()] {
            assert_eq!(parse_adjacency(&format_adjacency(&g)).unwrap(), g);
        }
        let loops = Graph::from_edges(2, 3, &[(0, 0), (0, 1), (1, 1)]).unwrap();
        let text = format_adjacency(&loops);
        assert_eq!(text, "1: 1 1 2\n2: 1 2 2\n");
        assert_eq!(parse_adjacency(&text).unwrap(), loops);
    }

    #[test]
    fn edge_csv_round_trip() {
        let g = fixtures::petersen();
        let text = format_edge_csv(&g).unwrap();
        assert!(text.starts_with("u,v\n1,2\n"));
        assert_eq!(text.lines().count(), 16);
        assert_eq!(parse_edge_csv(&text).unwrap(), g);
        let loops = Graph::from_edges(2, 3, &[(0, 0), (0, 1), (1, 1)]).unwrap();
        assert_eq!(parse_edge_csv(&format_edge_csv(&loops).unwrap()).unwrap(), loops);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_adjacency("1 2 3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_adjacency("0: 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_adjacency("1: 2\n2: 1 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_adjacency("1: 2\n1: 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_adjacency("1: 3\n3: 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_adjacency("1: 2\n2: 2\n"), Err(Error::Core(_))));
        assert!(parse_edge_csv("u,v\n1,2\n2,3\n").is_err());
    }
}
