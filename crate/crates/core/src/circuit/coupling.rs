use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected qubit connectivity graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingMap {
    n_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

impl CouplingMap {
    pub fn new(n_qubits: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n_qubits || b >= n_qubits {
                return Err(Error::Dimension(format!("edge ({a},{b}) outside {n_qubits} qubits")));
            }
            if a == b {
                return Err(Error::Argument(format!("self-loop on qubit {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut adjacency = vec![Vec::new(); n_qubits];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        adjacency.iter_mut().for_each(|v| v.sort_unstable());
        Ok(CouplingMap {
            n_qubits,
            edges: set,
            adjacency,
        })
    }

    /// Linear chain `0 - 1 - … - n-1`.
    pub fn line(n_qubits: usize) -> Self {
        Self::new(n_qubits, (1..n_qubits).map(|q| (q - 1, q))).expect("valid chain")
    }

    pub fn all_to_all(n_qubits: usize) -> Self {
        let edges = (0..n_qubits).flat_map(|a| (a + 1..n_qubits).map(move |b| (a, b)));
        Self::new(n_qubits, edges).expect("valid complete graph")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adjacency[q].len()
    }

    /// `histogram[k]` = number of vertices of degree `k`.
    pub fn degree_histogram(&self) -> Vec<usize> {
        let max = (0..self.n_qubits).map(|q| self.degree(q)).max().unwrap_or(0);
        let mut h = vec![0; max + 1];
        for q in 0..self.n_qubits {
            h[self.degree(q)] += 1;
        }
        h
    }

    pub fn are_coupled(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Breadth-first shortest path from `a` to `b` inclusive; neighbours are
    /// visited in ascending order so ties resolve to the lowest index.
    pub fn shortest_path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        if a >= self.n_qubits || b >= self.n_qubits {
            return None;
        }
        let mut prev = vec![usize::MAX; self.n_qubits];
        prev[a] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(u) = queue.pop_front() {
            if u == b {
                break;
            }
            for &v in &self.adjacency[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[b] == usize::MAX {
            return None;
        }
        let mut path = vec![b];
        while *path.last().unwrap() != a {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        Some(path)
    }

    pub fn is_connected(&self) -> bool {
        self.n_qubits == 0 || (0..self.n_qubits).all(|q| self.shortest_path(0, q).is_some())
    }

    /// Subgraph induced on qubits `0..n`.
    pub fn induced(&self, n: usize) -> Result<Self> {
        if n > self.n_qubits {
            return Err(Error::Dimension(format!("cannot take {n} of {} qubits", self.n_qubits)));
        }
        Self::new(n, self.edges().filter(|&(a, b)| a < n && b < n))
    }
}

/// Closed-form `(nodes, edges)` of [`heavy_hex`] at the given distance.
pub fn heavy_hex_counts(distance: usize) -> (usize, usize) {
    let d = distance;
    (5 * d * d + 8 * d - 1, 6 * d * d + 8 * d - 2)
}

/// Heavy-hexagon lattice on a `distance × distance` patch of hexagons: a
/// honeycomb with an extra qubit on every edge.
///
/// Qubits are numbered in breadth-first order from a corner, so every prefix
/// `0..k` is connected.
pub fn heavy_hex(distance: usize) -> Result<CouplingMap> {
    if distance == 0 {
        return Err(Error::Argument("heavy-hex distance must be at least 1".into()));
    }
    let d = distance;
    // brick-wall honeycomb: vertex (line, x); hexagon (r, c) spans lines r, r+1
    let mut hex_edges: BTreeSet<((usize, usize), (usize, usize))> = BTreeSet::new();
    for r in 0..d {
        for c in 0..d {
            let x0 = 2 * c + r % 2;
            for line in [r, r + 1] {
                hex_edges.insert(((line, x0), (line, x0 + 1)));
                hex_edges.insert(((line, x0 + 1), (line, x0 + 2)));
            }
            hex_edges.insert(((r, x0), (r + 1, x0)));
            hex_edges.insert(((r, x0 + 2), (r + 1, x0 + 2)));
        }
    }
    let vertices: BTreeSet<(usize, usize)> = hex_edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let vid: BTreeMap<(usize, usize), usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let nv = vertices.len();
    let n = nv + hex_edges.len();
    let mut adjacency = vec![Vec::new(); n];
    for (k, &(a, b)) in hex_edges.iter().enumerate() {
        let mid = nv + k;
        for end in [vid[&a], vid[&b]] {
            adjacency[end].push(mid);
            adjacency[mid].push(end);
        }
    }
    adjacency.iter_mut().for_each(|v| v.sort_unstable());

    let mut order = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::from([0usize]);
    order[0] = 0;
    next += 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if order[v] == usize::MAX {
                order[v] = next;
                next += 1;
                queue.push_back(v);
            }
        }
    }
    let edges = adjacency
        .iter()
        .enumerate()
        .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
        .filter(|(u, v)| u < v)
        .map(|(u, v)| (order[u], order[v]));
    CouplingMap::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_paths() {
        let m = CouplingMap::line(4);
        assert_eq!(m.shortest_path(0, 3), Some(vec![0, 1, 2, 3]));
        assert!(m.are_coupled(2, 1));
        assert!(!m.are_coupled(0, 2));
        let split = CouplingMap::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(split.shortest_path(0, 3), None);
        assert!(!split.is_connected());
    }

    #[test]
    fn tie_break_prefers_low_index() {
        // square 0-1-3, 0-2-3
        let m = CouplingMap::new(4, [(0, 2), (2, 3), (0, 1), (1, 3)]).unwrap();
        assert_eq!(m.shortest_path(0, 3), Some(vec![0, 1, 3]));
    }

    #[test]
    fn heavy_hex_small() {
        let m = heavy_hex(1).unwrap();
        assert_eq!((m.n_qubits(), m.n_edges()), (12, 12));
        assert!((0..12).all(|q| m.degree(q) == 2));
        for d in 1..=5 {
            let m = heavy_hex(d).unwrap();
            assert_eq!((m.n_qubits(), m.n_edges()), heavy_hex_counts(d));
            assert!((0..m.n_qubits()).all(|q| m.degree(q) <= 3));
            assert!(m.is_connected());
            for k in 1..m.n_qubits() {
                assert!(m.induced(k).unwrap().is_connected());
            }
        }
        assert!(heavy_hex(0).is_err());
    }
}
