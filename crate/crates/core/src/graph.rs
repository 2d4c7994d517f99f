//! Complete signed graphs stored by their positive edges.
//!
//! Every pair that is not a stored `+` edge is an implicit `-` edge. Vertex
//! ids are dense (`0..n`). Neighborhoods follow the closed convention: a
//! vertex always belongs to its own neighborhood, so `d(v) = |adj(v)| + 1`.
//! The self id is injected during set merges and never stored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Immutable signed graph with sorted CSR adjacency over the `+` edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedGraph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl SignedGraph {
    /// Builds a graph on `n` vertices. Pairs are unordered and duplicates
    /// collapse; self-loops and out-of-range ids are rejected.
    pub fn from_edges<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = Vec::new();
        for (u, v) in pairs {
            if u == v {
                return Err(Error::Domain(format!("self-loop on vertex {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::Domain(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        edges.dedup();

        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; offsets[n]];
        for &(u, v) in &edges {
            neighbors[fill[u]] = v;
            fill[u] += 1;
            neighbors[fill[v]] = u;
            fill[v] += 1;
        }
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Ok(Self {
            offsets,
            neighbors,
            edges,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self::from_edges(n, std::iter::empty()).expect("empty graph is valid")
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of `+` edges.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `+` edges as `(u, v)` with `u < v`, sorted lexicographically. Edge
    /// indices used throughout the crate refer to positions in this slice.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Open adjacency: sorted positive neighbors, without `v` itself.
    pub fn adj(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Closed degree `d(v) = |N(v)|`, counting `v` itself.
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v] + 1
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && u < self.n() && v < self.n() && self.adj(u).binary_search(&v).is_ok()
    }

    /// Index of edge `{u, v}` in [`edges`](Self::edges).
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n() {
            return Err(Error::Domain(format!(
                "vertex {v} out of range for n = {}",
                self.n()
            )));
        }
        Ok(())
    }

    /// `N(v) = adj(v) ∪ {v}`, sorted.
    pub fn closed_neighborhood(&self, v: usize) -> Result<Vec<usize>> {
        self.check_vertex(v)?;
        let adj = self.adj(v);
        let split = adj.partition_point(|&w| w < v);
        let mut out = Vec::with_capacity(adj.len() + 1);
        out.extend_from_slice(&adj[..split]);
        out.push(v);
        out.extend_from_slice(&adj[split..]);
        Ok(out)
    }

    /// `|N(u) △ N(v)|` over closed neighborhoods.
    pub fn sym_diff_size(&self, u: usize, v: usize) -> Result<usize> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::Domain(format!(
                "symmetric difference needs distinct vertices, got {u} twice"
            )));
        }
        Ok(self.sym_diff_unchecked(u, v))
    }

    /// Sorted merge in `O(d(u) + d(v))`; callers guarantee `u != v`, both in range.
    pub(crate) fn sym_diff_unchecked(&self, u: usize, v: usize) -> usize {
        let common = merge_count_common(
            ClosedIter::new(self.adj(u), u),
            ClosedIter::new(self.adj(v), v),
        );
        self.degree(u) + self.degree(v) - 2 * common
    }

    /// Writes the edge-list text format: a `# n=<count>` header followed by
    /// one `u v` line per edge in sorted order.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(self.to_edge_list_string().as_bytes())
    }

    pub fn to_edge_list_string(&self) -> String {
        let mut s = String::with_capacity(16 + self.edges.len() * 12);
        let _ = writeln!(s, "# n={}", self.n());
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    /// Reads the edge-list format. `n` is the declared header count if one
    /// is present, otherwise `1 + max id`.
    pub fn load_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut pairs = Vec::new();
        let mut max_id: Option<usize> = None;
        for (idx, line) in input.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(count) = comment.trim().strip_prefix("n=") {
                    if declared.is_some() || !pairs.is_empty() {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: "vertex-count header must precede all edges and appear once"
                                .into(),
                        });
                    }
                    let count = count.trim().parse::<usize>().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad vertex count `{}`", count.trim()),
                    })?;
                    declared = Some(count);
                }
                continue;
            }
            let (u, v) = parse_pair(trimmed, lineno)?;
            if u == v {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("self-loop on vertex {u}"),
                });
            }
            if let Some(n) = declared {
                if u >= n || v >= n {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("vertex id exceeds declared count n={n}"),
                    });
                }
            }
            max_id = Some(max_id.map_or(u.max(v), |m: usize| m.max(u).max(v)));
            pairs.push((u, v));
        }
        let n = declared.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
        Self::from_edges(n, pairs)
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("expected `u v`, got `{line}`"),
        });
    };
    let parse = |tok: &str| -> Result<usize> {
        let value = tok.parse::<i64>().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("`{tok}` is not an integer vertex id"),
        })?;
        if value < 0 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("negative vertex id {value}"),
            });
        }
        Ok(value as usize)
    };
    Ok((parse(a)?, parse(b)?))
}

/// Sorted iterator over `adj ∪ {center}` without materializing it.
pub(crate) struct ClosedIter<'a> {
    adj: &'a [usize],
    pos: usize,
    center: usize,
    center_done: bool,
}

impl<'a> ClosedIter<'a> {
    pub(crate) fn new(adj: &'a [usize], center: usize) -> Self {
        Self {
            adj,
            pos: 0,
            center,
            center_done: false,
        }
    }
}

impl Iterator for ClosedIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let next_adj = self.adj.get(self.pos).copied();
        match (self.center_done, next_adj) {
            (false, Some(w)) if w < self.center => {
                self.pos += 1;
                Some(w)
            }
            (false, _) => {
                self.center_done = true;
                Some(self.center)
            }
            (true, Some(w)) => {
                self.pos += 1;
                Some(w)
            }
            (true, None) => None,
        }
    }
}

/// Size of the intersection of two sorted, duplicate-free streams.
pub(crate) fn merge_count_common<A, B>(a: A, b: B) -> usize
where
    A: IntoIterator<Item = usize>,
    B: IntoIterator<Item = usize>,
{
    let mut a = a.into_iter().peekable();
    let mut b = b.into_iter().peekable();
    let mut common = 0;
    while let (Some(&x), Some(&y)) = (a.peek(), b.peek()) {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => {
                a.next();
            }
            std::cmp::Ordering::Greater => {
                b.next();
            }
            std::cmp::Ordering::Equal => {
                common += 1;
                a.next();
                b.next();
            }
        }
    }
    common
}

/// Maps arbitrary vertex labels in input files to dense ids.
#[derive(Clone, Debug, Default)]
pub struct IdMap {
    to_id: HashMap<String, usize>,
    labels: Vec<String>,
}

impl IdMap {
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&id) = self.to_id.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.to_id.insert(label.to_owned(), id);
        self.labels.push(label.to_owned());
        id
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.to_id.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Reads `label label` lines with arbitrary tokens, assigning dense ids in
/// order of first appearance.
pub fn load_labeled_edge_list<R: BufRead>(input: R) -> Result<(SignedGraph, IdMap)> {
    let mut ids = IdMap::default();
    let mut pairs = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected two labels, got `{trimmed}`"),
            });
        };
        if a == b {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("self-loop on `{a}`"),
            });
        }
        pairs.push((ids.intern(a), ids.intern(b)));
    }
    let g = SignedGraph::from_edges(ids.len(), pairs)?;
    Ok((g, ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn path3() -> SignedGraph {
        SignedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn closed_set(g: &SignedGraph, v: usize) -> BTreeSet<usize> {
        (0..g.n()).filter(|&w| w == v || g.has_edge(v, w)).collect()
    }

    #[test]
    fn empty_stream_with_header() {
        let g = SignedGraph::load_edge_list("# n=3\n".as_bytes()).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn parses_simple_lines() {
        let g = SignedGraph::load_edge_list("0 1\n1 2".as_bytes()).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.adj(1), &[0, 2]);
    }

    #[test]
    fn duplicate_lines_collapse() {
        let g = SignedGraph::load_edge_list("0 1\n1 0\n0 1\n".as_bytes()).unwrap();
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn parse_errors_name_the_line() {
        for (text, line) in [
            ("0 1\n2 2\n", 2),
            ("0 1\n# c\n0 -3\n", 3),
            ("0 x\n", 1),
            ("0 1 2\n", 1),
            ("# n=2\n0 5\n", 2),
        ] {
            match SignedGraph::load_edge_list(text.as_bytes()) {
                Err(Error::Parse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn closed_neighborhood_convention() {
        let g = SignedGraph::from_edges(3, [(0, 1)]).unwrap();
        assert_eq!(g.closed_neighborhood(2).unwrap(), vec![2]);
        assert_eq!(g.degree(2), 1);
        assert_eq!(g.closed_neighborhood(0).unwrap(), vec![0, 1]);
        assert_eq!(g.degree(0), 2);
        let star = SignedGraph::from_edges(5, (1..5).map(|l| (0, l))).unwrap();
        assert_eq!(star.closed_neighborhood(0).unwrap().len(), 5);
        assert!(matches!(g.closed_neighborhood(3), Err(Error::Domain(_))));
    }

    #[test]
    fn sym_diff_examples() {
        let edge = SignedGraph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(edge.sym_diff_size(0, 1).unwrap(), 0);
        assert_eq!(path3().sym_diff_size(0, 2).unwrap(), 2);
        let k4 =
            SignedGraph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                if u != v {
                    assert_eq!(k4.sym_diff_size(u, v).unwrap(), 0);
                }
            }
        }
        assert!(matches!(edge.sym_diff_size(1, 1), Err(Error::Domain(_))));
        assert!(matches!(edge.sym_diff_size(0, 9), Err(Error::Domain(_))));
    }

    #[test]
    fn labeled_loader_assigns_dense_ids() {
        let (g, ids) = load_labeled_edge_list("alice bob\nbob carol\n".as_bytes()).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(ids.id("carol"), Some(2));
        assert!(g.has_edge(ids.id("alice").unwrap(), ids.id("bob").unwrap()));
        assert_eq!(ids.label(0), Some("alice"));
    }

    #[test]
    fn writer_is_bit_exact() {
        let g = SignedGraph::from_edges(6, [(4, 1), (0, 5), (2, 3)]).unwrap();
        let text = g.to_edge_list_string();
        assert_eq!(text, "# n=6\n0 5\n1 4\n2 3\n");
        let back = SignedGraph::load_edge_list(text.as_bytes()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_edge_list_string(), text);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn graph_strategy() -> impl Strategy<Value = SignedGraph> {
            (1usize..64).prop_flat_map(|n| {
                proptest::collection::vec((0..n, 0..n), 0..(n * 3)).prop_map(move |pairs| {
                    SignedGraph::from_edges(n, pairs.into_iter().filter(|(a, b)| a != b)).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn sym_diff_matches_scan_oracle(g in graph_strategy()) {
                let n = g.n();
                for u in 0..n {
                    for v in (u + 1)..n {
                        let a = closed_set(&g, u);
                        let b = closed_set(&g, v);
                        let oracle = a.symmetric_difference(&b).count();
                        let got = g.sym_diff_size(u, v).unwrap();
                        prop_assert_eq!(got, oracle);
                        prop_assert_eq!(got, g.sym_diff_size(v, u).unwrap());
                        let inter = a.intersection(&b).count();
                        prop_assert_eq!(got, g.degree(u) + g.degree(v) - 2 * inter);
                        prop_assert!(g.degree(u).abs_diff(g.degree(v)) <= got);
                    }
                }
            }

            #[test]
            fn adjacency_is_symmetric(g in graph_strategy()) {
                let total: usize = (0..g.n()).map(|v| g.adj(v).len()).sum();
                prop_assert_eq!(total, 2 * g.num_edges());
                for v in 0..g.n() {
                    prop_assert!(!g.adj(v).contains(&v));
                    for &w in g.adj(v) {
                        prop_assert!(g.adj(w).contains(&v));
                    }
                }
            }

            #[test]
            fn edge_list_round_trip(g in graph_strategy()) {
                let text = g.to_edge_list_string();
                let back = SignedGraph::load_edge_list(text.as_bytes()).unwrap();
                prop_assert_eq!(back.to_edge_list_string(), text);
                prop_assert_eq!(back, g);
            }
        }
    }
}
