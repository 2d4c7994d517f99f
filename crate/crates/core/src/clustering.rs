//! Partitions of the vertex set, the union-find used to compute them, and the
//! clustering text format (`vertex cluster_id is_singleton_light`).

use std::fmt::Write as _;
use std::io::BufRead;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] += 1;
        }
        true
    }

    /// Component label per vertex: the smallest vertex id in its component.
    pub fn min_labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut min_of_root = vec![usize::MAX; n];
        for v in 0..n {
            let r = self.find(v);
            min_of_root[r] = min_of_root[r].min(v);
        }
        (0..n).map(|v| min_of_root[self.find(v)]).collect()
    }
}

/// Connected components of the graph on `0..n` with the given edges,
/// labelled by smallest member.
pub fn components(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut uf = UnionFind::new(n);
    for (u, v) in edges {
        uf.union(u, v);
    }
    uf.min_labels()
}

/// A partition of `0..n`. Cluster ids are contiguous and ordered by the
/// smallest vertex each cluster contains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Clustering {
    assignment: Vec<usize>,
    singleton_light: Vec<bool>,
}

impl Clustering {
    /// Canonicalizes arbitrary labels. Each flagged vertex must be alone in
    /// its cluster.
    pub fn new(labels: &[usize], singleton_light: Vec<bool>) -> Result<Self> {
        if labels.len() != singleton_light.len() {
            return Err(Error::Domain(format!(
                "{} labels but {} light flags",
                labels.len(),
                singleton_light.len()
            )));
        }
        let assignment = canonical_ids(labels);
        let mut sizes = vec![0usize; labels.len()];
        for &c in &assignment {
            sizes[c] += 1;
        }
        for (v, &light) in singleton_light.iter().enumerate() {
            if light && sizes[assignment[v]] != 1 {
                return Err(Error::Contract(format!(
                    "light vertex {v} shares cluster {}",
                    assignment[v]
                )));
            }
        }
        Ok(Self {
            assignment,
            singleton_light,
        })
    }

    pub fn from_labels(labels: &[usize]) -> Self {
        Self::new(labels, vec![false; labels.len()]).expect("no light flags")
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn one_cluster(n: usize) -> Self {
        Self::from_labels(&vec![0; n])
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn is_singleton_light(&self, v: usize) -> bool {
        self.singleton_light[v]
    }

    pub fn singleton_light(&self) -> &[bool] {
        &self.singleton_light
    }

    pub fn num_clusters(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    pub fn same_cluster(&self, u: usize, v: usize) -> bool {
        self.assignment[u] == self.assignment[v]
    }

    /// Members of each cluster, in cluster-id order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    /// Same partition, ignoring light flags.
    pub fn same_partition(&self, other: &Clustering) -> bool {
        self.assignment == other.assignment
    }

    /// Body lines of the text format, without header comments.
    pub fn body_lines(&self) -> String {
        let mut out = String::with_capacity(self.n() * 8);
        for v in 0..self.n() {
            let _ = writeln!(
                out,
                "{v} {} {}",
                self.assignment[v],
                u8::from(self.singleton_light[v])
            );
        }
        out
    }

    /// Full clustering file: `#`-prefixed header lines then the body.
    pub fn to_text(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(&self.body_lines());
        out
    }

    /// Parses the clustering format. Every vertex `0..n` must appear exactly once.
    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut rows: Vec<(usize, usize, bool)> = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 2 && fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected `vertex cluster [light]`, got `{trimmed}`"),
                });
            }
            let num = |tok: &str| {
                tok.parse::<usize>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("`{tok}` is not a nonnegative integer"),
                })
            };
            let light = match fields.get(2) {
                None | Some(&"0") => false,
                Some(&"1") => true,
                Some(other) => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("light flag must be 0 or 1, got `{other}`"),
                    })
                }
            };
            rows.push((num(fields[0])?, num(fields[1])?, light));
        }
        let n = rows.len();
        let mut labels = vec![usize::MAX; n];
        let mut light = vec![false; n];
        for &(v, c, l) in &rows {
            if v >= n || labels[v] != usize::MAX {
                return Err(Error::Domain(format!(
                    "clustering must list each vertex 0..{n} exactly once (offending vertex {v})"
                )));
            }
            labels[v] = c;
            light[v] = l;
        }
        Self::new(&labels, light)
    }
}

fn canonical_ids(labels: &[usize]) -> Vec<usize> {
    let mut remap = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = remap.len();
            *remap.entry(l).or_insert(next)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_ordered_by_smallest_member() {
        let c = Clustering::from_labels(&[7, 3, 7, 9, 3]);
        assert_eq!(c.assignment(), &[0, 1, 0, 2, 1]);
        assert_eq!(c.num_clusters(), 3);
        assert_eq!(c.clusters(), vec![vec![0, 2], vec![1, 4], vec![3]]);
    }

    #[test]
    fn light_vertices_must_be_alone() {
        assert!(Clustering::new(&[0, 0, 1], vec![true, false, false]).is_err());
        let c = Clustering::new(&[0, 0, 1], vec![false, false, true]).unwrap();
        assert!(c.is_singleton_light(2));
    }

    #[test]
    fn text_round_trip() {
        let c = Clustering::new(&[4, 4, 2, 8], vec![false, false, false, true]).unwrap();
        let text = c.to_text(&["test".to_string()]);
        assert_eq!(text, "# test\n0 0 0\n1 0 0\n2 1 0\n3 2 1\n");
        assert_eq!(Clustering::read(text.as_bytes()).unwrap(), c);
    }

    #[test]
    fn read_rejects_gaps_and_duplicates() {
        assert!(Clustering::read("0 0\n0 1\n".as_bytes()).is_err());
        assert!(Clustering::read("0 0\n2 1\n".as_bytes()).is_err());
        assert!(matches!(
            Clustering::read("0 0 2\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn union_find_components() {
        let labels = components(6, [(4, 5), (1, 2), (2, 4)]);
        assert_eq!(labels, vec![0, 1, 1, 3, 1, 1]);
    }
}
