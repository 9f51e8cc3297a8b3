//! Graph text formats.
//!
//! Edge list: `# vertices=N`, then one `src dst` pair per line (0-based).
//! Label sidecar: `# communities=K` and `# dominating=i j ...`, then
//! `vertex community` lines; roots carry the label `root` and a member of
//! several communities gets one line per community.
//! Scores: CSV `vertex,score,community` with communities joined by `;`.

use std::io::{BufRead, Write};

use super::CommunityGraph;
use crate::error::{Error, Result};

pub fn write_edge_list<W: Write>(g: &CommunityGraph, mut w: W) -> Result<()> {
    writeln!(w, "# vertices={}", g.n_vertices())?;
    for (a, b) in g.edges() {
        writeln!(w, "{a} {b}")?;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad value {s:?}")))
}

/// Vertex count (declared, or one past the largest id) and edges.
pub fn read_edge_list<R: BufRead>(r: R) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut declared = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if let Some(meta) = t.strip_prefix('#') {
            if let Some(v) = meta.trim().strip_prefix("vertices=") {
                declared = Some(parse(v, i + 1)?);
            }
            continue;
        }
        if t.is_empty() {
            continue;
        }
        let mut parts = t.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("line {}: expected `src dst`", i + 1)));
        };
        edges.push((parse(a, i + 1)?, parse(b, i + 1)?));
    }
    let implied = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    Ok((declared.unwrap_or(implied), edges))
}

pub fn write_community_labels<W: Write>(g: &CommunityGraph, mut w: W) -> Result<()> {
    writeln!(w, "# communities={}", g.n_communities())?;
    let dom: Vec<String> = (0..g.n_communities())
        .filter(|&c| g.is_dominating_community(c))
        .map(|c| c.to_string())
        .collect();
    writeln!(w, "# dominating={}", dom.join(" "))?;
    let mut is_root = vec![false; g.n_vertices()];
    for &r in g.roots() {
        is_root[r] = true;
    }
    for (v, &root) in is_root.iter().enumerate() {
        if root {
            writeln!(w, "{v} root")?;
        }
        for c in g.communities_of(v) {
            writeln!(w, "{v} {c}")?;
        }
    }
    Ok(())
}

/// Rebuilds a graph from an edge list, a label sidecar and per-vertex
/// weights (empty for all zeros).
pub fn read_graph<E: BufRead, L: BufRead>(edges: E, labels: L, weights: Vec<f64>) -> Result<CommunityGraph> {
    let (n, edges) = read_edge_list(edges)?;
    let mut n_communities = 0usize;
    let mut dominating_ids: Vec<usize> = Vec::new();
    let mut roots = Vec::new();
    let mut memberships = vec![Vec::new(); n];
    for (i, line) in labels.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if let Some(meta) = t.strip_prefix('#') {
            if let Some((k, v)) = meta.trim().split_once('=') {
                match k.trim() {
                    "communities" => n_communities = parse(v, i + 1)?,
                    "dominating" => {
                        dominating_ids = v.split_whitespace().map(|s| parse(s, i + 1)).collect::<Result<_>>()?;
                    }
                    _ => {}
                }
            }
            continue;
        }
        if t.is_empty() {
            continue;
        }
        let Some((v, c)) = t.split_once(char::is_whitespace) else {
            return Err(Error::Parse(format!("line {}: expected `vertex community`", i + 1)));
        };
        let v: usize = parse(v, i + 1)?;
        if v >= n {
            return Err(Error::Parse(format!("line {}: vertex {v} outside {n} vertices", i + 1)));
        }
        match c.trim() {
            "root" => roots.push(v),
            c => memberships[v].push(parse(c, i + 1)?),
        }
    }
    let mut dominating = vec![false; n_communities];
    for c in dominating_ids {
        *dominating
            .get_mut(c)
            .ok_or_else(|| Error::Parse(format!("dominating community {c} not declared")))? = true;
    }
    CommunityGraph::new(n, edges, weights, roots, memberships, dominating)
}

pub fn write_scores_csv<W: Write>(g: &CommunityGraph, scores: &[f64], mut w: W) -> Result<()> {
    if scores.len() != g.n_vertices() {
        return Err(Error::Config("one score per vertex required".into()));
    }
    let mut is_root = vec![false; g.n_vertices()];
    for &r in g.roots() {
        is_root[r] = true;
    }
    writeln!(w, "vertex,score,community")?;
    for (v, s) in scores.iter().enumerate() {
        let label = if is_root[v] {
            "root".to_string()
        } else {
            g.communities_of(v).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
        };
        writeln!(w, "{v},{s},{label}")?;
    }
    Ok(())
}

/// Scores in vertex order; vertices must be listed as `0, 1, 2, ...`.
pub fn read_scores_csv<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "vertex,score,community" {
                return Err(Error::Parse("expected header vertex,score,community".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        let (Some(v), Some(s)) = (parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("line {}: expected vertex,score,community", i + 1)));
        };
        let v: usize = parse(v, i + 1)?;
        if v != out.len() {
            return Err(Error::Parse(format!("line {}: vertex {v} out of order", i + 1)));
        }
        out.push(parse(s, i + 1)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CommunityGraph {
        CommunityGraph::new(
            4,
            vec![(2, 0), (3, 0), (3, 1)],
            vec![0.1, 0.2, 5.0, 7.5],
            vec![0, 1],
            vec![vec![], vec![], vec![0], vec![0, 1]],
            vec![true, false],
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let g = sample();
        let (mut e, mut l, mut s) = (Vec::new(), Vec::new(), Vec::new());
        write_edge_list(&g, &mut e).unwrap();
        write_community_labels(&g, &mut l).unwrap();
        write_scores_csv(&g, g.weights(), &mut s).unwrap();
        let text = String::from_utf8(s.clone()).unwrap();
        assert!(text.contains("\n3,7.5,0;1\n"));
        assert!(text.contains("\n0,0.1,root\n"));
        let w = read_scores_csv(s.as_slice()).unwrap();
        assert_eq!(read_graph(e.as_slice(), l.as_slice(), w).unwrap(), g);
    }

    #[test]
    fn edge_list_format() {
        let mut e = Vec::new();
        write_edge_list(&sample(), &mut e).unwrap();
        assert_eq!(String::from_utf8(e).unwrap(), "# vertices=4\n2 0\n3 0\n3 1\n");
        let (n, edges) = read_edge_list(&b"0 1\n1 2\n"[..]).unwrap();
        assert_eq!((n, edges), (3, vec![(0, 1), (1, 2)]));
        assert!(read_edge_list(&b"0 1 2\n"[..]).is_err());
        assert!(read_edge_list(&b"0 x\n"[..]).is_err());
    }

    #[test]
    fn bad_labels() {
        let e = b"# vertices=2\n1 0\n";
        assert!(read_graph(&e[..], &b"5 root\n"[..], vec![]).is_err());
        assert!(read_graph(&e[..], &b"# communities=1\n# dominating=3\n"[..], vec![]).is_err());
        assert!(read_graph(&e[..], &b"1 0\n"[..], vec![]).is_err());
    }
}
