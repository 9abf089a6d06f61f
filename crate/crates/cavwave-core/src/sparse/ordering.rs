//! Fill-reducing ordering by the classic minimum-degree heuristic on the
//! symmetrized matrix graph. One ordering is computed per sparsity pattern
//! and reused by every harmonic system sharing that pattern.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Elimination order for a symmetric adjacency structure.
///
/// Returns `perm` with `perm[k]` = the original index eliminated at step `k`.
/// Deterministic: ties are broken toward the smallest node index.
pub fn minimum_degree(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut adj: Vec<Vec<usize>> = adjacency.to_vec();
    for (i, list) in adj.iter_mut().enumerate() {
        list.retain(|&j| j != i);
        list.sort_unstable();
        list.dedup();
    }
    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n)
        .map(|i| Reverse((adj[i].len(), i)))
        .collect();
    let mut perm = Vec::with_capacity(n);

    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || adj[v].len() != deg {
            continue; // stale heap entry
        }
        eliminated[v] = true;
        perm.push(v);
        let neighbors = std::mem::take(&mut adj[v]);
        // Form the elimination clique among the remaining neighbors.
        for &u in &neighbors {
            if eliminated[u] {
                continue;
            }
            let lu = &mut adj[u];
            lu.retain(|&x| x != v);
            for &w in &neighbors {
                if w != u && !eliminated[w] {
                    if lu.binary_search(&w).is_err() {
                        let pos = lu.partition_point(|&x| x < w);
                        lu.insert(pos, w);
                    }
                }
            }
            heap.push(Reverse((lu.len(), u)));
        }
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> Vec<Vec<usize>> {
        (0..n)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            })
            .collect()
    }

    #[test]
    fn permutation_is_valid() {
        let adj = path_graph(17);
        let perm = minimum_degree(&adj);
        let mut seen = vec![false; 17];
        for &p in &perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn path_graph_eliminates_endpoints_first() {
        let perm = minimum_degree(&path_graph(5));
        // Degree-1 endpoints come before any interior node.
        assert!(perm[0] == 0 || perm[0] == 4);
    }

    #[test]
    fn deterministic_across_calls() {
        let mut adj = vec![vec![]; 30];
        for i in 0..30usize {
            for j in 0..30usize {
                if i != j && (i * 7 + j * 13) % 9 == 0 {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let p1 = minimum_degree(&adj);
        let p2 = minimum_degree(&adj);
        assert_eq!(p1, p2);
    }

    #[test]
    fn isolated_nodes_are_handled() {
        let adj = vec![vec![], vec![], vec![]];
        let perm = minimum_degree(&adj);
        assert_eq!(perm.len(), 3);
    }
}
