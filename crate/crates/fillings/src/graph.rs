//! Finite multigraphs: BFS metrics, geodesic spanning trees, spanning-tree
//! counting and enumeration.

use std::collections::VecDeque;

/// An undirected multigraph on vertices `0..n`; loops and parallel edges are
/// allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
}

pub const UNREACHABLE: usize = usize::MAX;

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Graph {
        let mut adj = vec![Vec::new(); n];
        for (i, &(u, v)) in edges.iter().enumerate() {
            assert!(u < n && v < n, "edge endpoint out of range");
            adj[u].push((v, i));
            if u != v {
                adj[v].push((u, i));
            }
        }
        Graph { n, edges, adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> (usize, usize) {
        self.edges[i]
    }

    /// Neighbours of `v` as `(neighbour, edge index)` pairs.
    pub fn neighbours(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    /// BFS distances using only the edges for which `allowed` is true.
    pub fn distances_within(&self, src: usize, allowed: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut d = vec![UNREACHABLE; self.n];
        if self.n == 0 {
            return d;
        }
        d[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &(w, e) in &self.adj[u] {
                if d[w] == UNREACHABLE && allowed(e) {
                    d[w] = d[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        d
    }

    pub fn distances_from(&self, src: usize) -> Vec<usize> {
        self.distances_within(src, |_| true)
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.distances_from(0).iter().all(|&d| d != UNREACHABLE)
    }

    /// Largest distance between two vertices, or `None` if disconnected.
    pub fn diameter(&self) -> Option<usize> {
        self.diameter_within(|_| true)
    }

    /// Diameter of the spanning subgraph with the allowed edges.
    pub fn diameter_within(&self, allowed: impl Fn(usize) -> bool + Copy) -> Option<usize> {
        let mut best = 0;
        for v in 0..self.n {
            for d in self.distances_within(v, allowed) {
                if d == UNREACHABLE {
                    return None;
                }
                best = best.max(d);
            }
        }
        Some(best)
    }

    /// Diameter of a tree given by its edge set (two BFS passes).
    pub fn tree_diameter(&self, tree: &[usize]) -> usize {
        if self.n <= 1 {
            return 0;
        }
        let mut mask = vec![false; self.edges.len()];
        for &e in tree {
            mask[e] = true;
        }
        let d0 = self.distances_within(0, |e| mask[e]);
        let far = (0..self.n).max_by_key(|&v| (d0[v], std::cmp::Reverse(v))).expect("non-empty");
        let d1 = self.distances_within(far, |e| mask[e]);
        d1.into_iter().max().unwrap_or(0)
    }

    /// True if `tree` has n − 1 edges, no loops, and connects every vertex.
    pub fn is_spanning_tree(&self, tree: &[usize]) -> bool {
        if self.n == 0 {
            return tree.is_empty();
        }
        if tree.len() != self.n - 1 {
            return false;
        }
        let mut uf = UnionFind::new(self.n);
        tree.iter().all(|&e| {
            let (u, v) = self.edges[e];
            uf.union(u, v)
        })
    }

    /// A BFS tree from `root` in which every vertex's tree distance equals its
    /// graph distance; each vertex takes the lowest-index parent at the
    /// previous level, joined by the lowest-index edge.
    pub fn geodesic_spanning_tree(&self, root: usize) -> Vec<usize> {
        let d = self.distances_from(root);
        let mut tree = Vec::new();
        for v in 0..self.n {
            if v == root || d[v] == UNREACHABLE {
                continue;
            }
            let (_, e) = self.adj[v]
                .iter()
                .filter(|&&(u, _)| d[u] != UNREACHABLE && d[u] + 1 == d[v])
                .min()
                .copied()
                .expect("BFS parent exists");
            tree.push(e);
        }
        tree.sort_unstable();
        tree
    }

    /// Number of spanning trees by the Matrix-Tree theorem (Bareiss
    /// elimination on a reduced Laplacian). `None` on overflow.
    pub fn spanning_tree_count(&self) -> Option<u128> {
        if self.n <= 1 {
            return Some(1);
        }
        let m = self.n - 1;
        let mut a = vec![vec![0i128; m]; m];
        for &(u, v) in &self.edges {
            if u == v {
                continue;
            }
            for (x, y) in [(u, v), (v, u)] {
                if x < m {
                    a[x][x] += 1;
                    if y < m {
                        a[x][y] -= 1;
                    }
                }
            }
        }
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..m {
            if a[k][k] == 0 {
                let Some(r) = (k + 1..m).find(|&r| a[r][k] != 0) else {
                    return Some(0);
                };
                a.swap(k, r);
                sign = -sign;
            }
            for i in k + 1..m {
                for j in k + 1..m {
                    let t = a[i][j].checked_mul(a[k][k])?.checked_sub(a[i][k].checked_mul(a[k][j])?)?;
                    a[i][j] = t / prev;
                }
            }
            prev = a[k][k];
        }
        u128::try_from(sign * a[m - 1][m - 1]).ok()
    }

    /// Visits every spanning tree (as a sorted edge list) in lexicographic
    /// order. The callback returns `false` to stop early.
    pub fn for_each_spanning_tree(&self, mut f: impl FnMut(&[usize]) -> bool) {
        if self.n == 0 {
            f(&[]);
            return;
        }
        if !self.is_connected() {
            return;
        }
        let mut chosen = Vec::with_capacity(self.n.saturating_sub(1));
        let mut excluded = vec![false; self.edges.len()];
        self.enumerate(0, &mut chosen, &mut excluded, &mut f);
    }

    fn enumerate(&self, i: usize, chosen: &mut Vec<usize>, excluded: &mut [bool], f: &mut impl FnMut(&[usize]) -> bool) -> bool {
        if chosen.len() == self.n - 1 {
            return f(chosen);
        }
        if i == self.edges.len() {
            return true;
        }
        let (u, v) = self.edges[i];
        let mut uf = UnionFind::new(self.n);
        for &e in chosen.iter() {
            let (a, b) = self.edges[e];
            uf.union(a, b);
        }
        if u != v && uf.find(u) != uf.find(v) {
            chosen.push(i);
            let go_on = self.enumerate(i + 1, chosen, excluded, f);
            chosen.pop();
            if !go_on {
                return false;
            }
        }
        // Exclude edge i if the chosen edges plus the later edges still span.
        excluded[i] = true;
        let mut uf = UnionFind::new(self.n);
        let mut components = self.n;
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let usable = chosen.contains(&e) || (e > i && !excluded[e]);
            if usable && uf.union(a, b) {
                components -= 1;
            }
        }
        let go_on = if components == 1 { self.enumerate(i + 1, chosen, excluded, f) } else { true };
        excluded[i] = false;
        go_on
    }
}

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins the classes of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Graph {
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
    }

    fn grid(r: usize, c: usize) -> Graph {
        let id = |i: usize, j: usize| i * (c + 1) + j;
        let mut edges = Vec::new();
        for i in 0..=r {
            for j in 0..=c {
                if j < c {
                    edges.push((id(i, j), id(i, j + 1)));
                }
                if i < r {
                    edges.push((id(i, j), id(i + 1, j)));
                }
            }
        }
        Graph::new((r + 1) * (c + 1), edges)
    }

    #[test]
    fn four_cycle_geodesic_tree() {
        let g = cycle(4);
        let t = g.geodesic_spanning_tree(0);
        assert!(g.is_spanning_tree(&t));
        let d = g.distances_within(0, |e| t.contains(&e));
        assert_eq!(d, vec![0, 1, 2, 1]);
        assert_eq!(Graph::new(1, vec![]).geodesic_spanning_tree(0), Vec::<usize>::new());
    }

    #[test]
    fn matrix_tree_counts() {
        assert_eq!(cycle(4).spanning_tree_count(), Some(4));
        assert_eq!(grid(2, 2).spanning_tree_count(), Some(192));
        let k4 = Graph::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(k4.spanning_tree_count(), Some(16));
        let parallel = Graph::new(2, vec![(0, 1), (0, 1), (1, 1)]);
        assert_eq!(parallel.spanning_tree_count(), Some(2));
        assert_eq!(Graph::new(2, vec![]).spanning_tree_count(), Some(0));
    }

    #[test]
    fn enumeration_matches_count() {
        for g in [cycle(5), grid(2, 2), grid(1, 3), Graph::new(2, vec![(0, 1), (0, 1), (1, 1)])] {
            let mut seen = Vec::new();
            g.for_each_spanning_tree(|t| {
                assert!(g.is_spanning_tree(t));
                seen.push(t.to_vec());
                true
            });
            let mut sorted = seen.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted, seen, "lexicographic and duplicate-free");
            assert_eq!(seen.len() as u128, g.spanning_tree_count().unwrap());
        }
    }

    #[test]
    fn diameters() {
        assert_eq!(cycle(4).diameter(), Some(2));
        assert_eq!(grid(2, 2).diameter(), Some(4));
        assert_eq!(Graph::new(2, vec![]).diameter(), None);
        let path = Graph::new(4, vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(path.tree_diameter(&[0, 1, 2]), 3);
    }
}
