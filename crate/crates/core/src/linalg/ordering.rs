use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Minimum-degree elimination order on a symmetric adjacency structure.
///
/// Works on the explicit elimination graph: eliminating a node turns its
/// neighbourhood into a clique. Ties go to the smaller index, so the result is
/// deterministic. Returns `perm` with `perm[k]` = node eliminated at step `k`.
pub fn minimum_degree(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut graph: Vec<Vec<usize>> = adj.to_vec();
    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|i| Reverse((graph[i].len(), i))).collect();
    let mut perm = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some(Reverse((deg, p))) = heap.pop() {
        if eliminated[p] || deg != graph[p].len() {
            continue;
        }
        eliminated[p] = true;
        perm.push(p);
        let nbrs = std::mem::take(&mut graph[p]);
        for &u in &nbrs {
            merged.clear();
            let a = &graph[u];
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < nbrs.len() {
                let next = match (a.get(i), nbrs.get(j)) {
                    (Some(&x), Some(&y)) if x == y => {
                        i += 1;
                        j += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        i += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        j += 1;
                        y
                    }
                    (Some(&x), None) => {
                        i += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        j += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if next != u && next != p {
                    merged.push(next);
                }
            }
            graph[u].clear();
            graph[u].extend_from_slice(&merged);
            heap.push(Reverse((graph[u].len(), u)));
        }
    }
    perm
}

/// Inverse of a permutation.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}
