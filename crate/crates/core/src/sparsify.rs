//! Steps shared by the private pipeline and the reference procedure once the
//! per-edge discard decisions are known: removal counts, light-light removal,
//! components and cluster emission.

use crate::clustering::{components, Clustering};
use crate::graph::SignedGraph;

/// `l(v)`: number of discarded edges incident to each vertex.
pub(crate) fn removed_counts(g: &SignedGraph, discarded: &[bool]) -> Vec<usize> {
    let mut l = vec![0usize; g.n()];
    for (&(u, v), &gone) in g.edges().iter().zip(discarded) {
        if gone {
            l[u] += 1;
            l[v] += 1;
        }
    }
    l
}

pub(crate) struct Finished {
    /// Per edge: present in the sparsified graph.
    pub kept: Vec<bool>,
    pub clustering: Clustering,
}

/// Drops light-light edges, computes components of what remains and emits
/// clusters. With `light_singletons`, heavy vertices of a component form one
/// cluster and each light vertex is its own singleton; otherwise whole
/// components are clusters.
pub(crate) fn finish(
    g: &SignedGraph,
    discarded: &[bool],
    light: &[bool],
    light_singletons: bool,
) -> Finished {
    let kept: Vec<bool> = g
        .edges()
        .iter()
        .zip(discarded)
        .map(|(&(u, v), &gone)| !gone && !(light[u] && light[v]))
        .collect();
    let labels = components(
        g.n(),
        g.edges()
            .iter()
            .zip(&kept)
            .filter(|(_, &k)| k)
            .map(|(&e, _)| e),
    );
    let clustering = emit(&labels, light, light_singletons);
    Finished { kept, clustering }
}

/// Turns component labels into a clustering, optionally isolating light vertices.
pub(crate) fn emit(component: &[usize], light: &[bool], light_singletons: bool) -> Clustering {
    let n = component.len();
    if !light_singletons {
        return Clustering::from_labels(component);
    }
    // light vertices get fresh labels n + v so they never collide with components
    let labels: Vec<usize> = (0..n)
        .map(|v| if light[v] { n + v } else { component[v] })
        .collect();
    Clustering::new(&labels, light.to_vec()).expect("light vertices are isolated by construction")
}
