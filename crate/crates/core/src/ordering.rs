//! Open-path TSP heuristics for putting an unordered codebook into a short visiting order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantizer::Codebook;
use crate::vectors::dist;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    /// Nearest-neighbor construction from every start; the shortest path wins.
    NearestNeighbor,
    /// Greedy edge matching: shortest edges first, no degree-3 vertices, no early cycles.
    Greedy,
    /// MST + greedy odd-vertex matching + Euler tour shortcut, cut at its longest edge.
    ///
    /// Not Christofides proper: the minimum-weight perfect matching is replaced by repeatedly
    /// pairing the closest unmatched odd vertices, so the 1.5 approximation bound is lost.
    ChristofidesLike,
    Identity,
}

impl Heuristic {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NearestNeighbor => "nearest_neighbor",
            Self::Greedy => "greedy",
            Self::ChristofidesLike => "christofides_like",
            Self::Identity => "identity",
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn" | "nearest_neighbor" => Ok(Self::NearestNeighbor),
            "greedy" => Ok(Self::Greedy),
            "christofides" | "christofides_like" => Ok(Self::ChristofidesLike),
            "identity" => Ok(Self::Identity),
            other => Err(Error::InvalidConfig(format!("unknown heuristic {other}"))),
        }
    }
}

/// A visiting order over a codebook's codewords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathOrder {
    permutation: Vec<usize>,
    heuristic: Heuristic,
}

impl PathOrder {
    pub fn new(permutation: Vec<usize>, heuristic: Heuristic) -> Result<Self> {
        validate_permutation(&permutation, permutation.len())?;
        Ok(Self {
            permutation,
            heuristic,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            permutation: (0..n).collect(),
            heuristic: Heuristic::Identity,
        }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn heuristic(&self) -> Heuristic {
        self.heuristic
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn reversed(&self) -> Self {
        Self {
            permutation: self.permutation.iter().rev().copied().collect(),
            heuristic: self.heuristic,
        }
    }
}

pub(crate) fn validate_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::Permutation(format!(
            "{} entries for {n} codewords",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Permutation(format!(
                "index {i} out of range or repeated"
            )));
        }
    }
    Ok(())
}

pub fn path_length(codebook: &Codebook, order: &PathOrder) -> Result<f64> {
    validate_permutation(order.permutation(), codebook.len())?;
    Ok(order
        .permutation()
        .windows(2)
        .map(|w| dist(codebook.codeword(w[0]), codebook.codeword(w[1])))
        .sum())
}

pub fn order_path(codebook: &Codebook, heuristic: Heuristic) -> Result<PathOrder> {
    let n = codebook.len();
    if n < 2 {
        return Err(Error::TooSmall { needed: 2, got: n });
    }
    let d = DistanceMatrix::new(codebook);
    let permutation = match heuristic {
        Heuristic::Identity => (0..n).collect(),
        Heuristic::NearestNeighbor => nearest_neighbor(&d),
        Heuristic::Greedy => greedy(&d),
        Heuristic::ChristofidesLike => christofides_like(&d),
    };
    PathOrder::new(permutation, heuristic)
}

struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    fn new(codebook: &Codebook) -> Self {
        let n = codebook.len();
        let d = (0..n * n)
            .map(|k| dist(codebook.codeword(k / n), codebook.codeword(k % n)))
            .collect();
        Self { n, d }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    fn path_len(&self, path: &[usize]) -> f64 {
        path.windows(2).map(|w| self.at(w[0], w[1])).sum()
    }

    /// All unordered pairs sorted by (distance, i, j).
    fn sorted_edges(&self, vertices: &[usize]) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(vertices.len() * vertices.len() / 2);
        for (a, &i) in vertices.iter().enumerate() {
            for &j in &vertices[a + 1..] {
                edges.push((i.min(j), i.max(j)));
            }
        }
        edges.sort_by(|&(a, b), &(c, d)| {
            self.at(a, b)
                .total_cmp(&self.at(c, d))
                .then((a, b).cmp(&(c, d)))
        });
        edges
    }
}

fn nn_from(d: &DistanceMatrix, start: usize) -> Vec<usize> {
    let mut visited = vec![false; d.n];
    let mut path = Vec::with_capacity(d.n);
    let mut cur = start;
    visited[cur] = true;
    path.push(cur);
    for _ in 1..d.n {
        let mut best = usize::MAX;
        for j in 0..d.n {
            if !visited[j] && (best == usize::MAX || d.at(cur, j) < d.at(cur, best)) {
                best = j;
            }
        }
        visited[best] = true;
        path.push(best);
        cur = best;
    }
    path
}

fn nearest_neighbor(d: &DistanceMatrix) -> Vec<usize> {
    (0..d.n)
        .into_par_iter()
        .map(|s| {
            let p = nn_from(d, s);
            (d.path_len(&p), s, p)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, _, p)| p)
        .expect("at least two vertices")
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn greedy(d: &DistanceMatrix) -> Vec<usize> {
    let n = d.n;
    let all: Vec<usize> = (0..n).collect();
    let mut degree = vec![0u8; n];
    let mut sets = DisjointSets::new(n);
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(2); n];
    let mut added = 0;
    for (i, j) in d.sorted_edges(&all) {
        if added == n - 1 {
            break;
        }
        if degree[i] < 2 && degree[j] < 2 && sets.union(i, j) {
            degree[i] += 1;
            degree[j] += 1;
            adj[i].push(j);
            adj[j].push(i);
            added += 1;
        }
    }
    // n-1 acyclic edges with max degree 2 form one path; walk it from its lower endpoint
    let start = (0..n)
        .find(|&v| degree[v] <= 1)
        .expect("a path has endpoints");
    let mut path = Vec::with_capacity(n);
    let (mut prev, mut cur) = (usize::MAX, start);
    loop {
        path.push(cur);
        match adj[cur].iter().find(|&&v| v != prev) {
            Some(&next) => {
                prev = cur;
                cur = next;
            }
            None => break,
        }
    }
    path
}

fn christofides_like(d: &DistanceMatrix) -> Vec<usize> {
    let n = d.n;
    // Prim from vertex 0, lowest index on ties
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut link = vec![usize::MAX; n];
    let mut multigraph: Vec<Vec<usize>> = vec![Vec::new(); n];
    best[0] = 0.0;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
            .expect("vertex left");
        in_tree[u] = true;
        if link[u] != usize::MAX {
            multigraph[u].push(link[u]);
            multigraph[link[u]].push(u);
        }
        for v in 0..n {
            if !in_tree[v] && d.at(u, v) < best[v] {
                best[v] = d.at(u, v);
                link[v] = u;
            }
        }
    }

    let odd: Vec<usize> = (0..n).filter(|&v| multigraph[v].len() % 2 == 1).collect();
    let mut matched = vec![false; n];
    for (i, j) in d.sorted_edges(&odd) {
        if !matched[i] && !matched[j] {
            matched[i] = true;
            matched[j] = true;
            multigraph[i].push(j);
            multigraph[j].push(i);
        }
    }

    let circuit = euler_circuit(multigraph);
    let mut seen = vec![false; n];
    let tour: Vec<usize> = circuit
        .into_iter()
        .filter(|&v| !std::mem::replace(&mut seen[v], true))
        .collect();

    // open the tour at its longest edge (first one on ties)
    let mut cut = 0;
    let mut longest = f64::NEG_INFINITY;
    for k in 0..n {
        let w = d.at(tour[k], tour[(k + 1) % n]);
        if w > longest {
            longest = w;
            cut = k;
        }
    }
    (1..=n).map(|s| tour[(cut + s) % n]).collect()
}

/// Hierholzer's algorithm from vertex 0 on a connected multigraph with all degrees even.
fn euler_circuit(mut adj: Vec<Vec<usize>>) -> Vec<usize> {
    for list in adj.iter_mut() {
        // pop() takes the lowest neighbor first
        list.sort_unstable_by(|a, b| b.cmp(a));
    }
    let mut stack = vec![0];
    let mut circuit = Vec::new();
    while let Some(&v) = stack.last() {
        match adj[v].pop() {
            Some(u) => {
                let pos = adj[u]
                    .iter()
                    .rposition(|&w| w == v)
                    .expect("edge stored both ways");
                adj[u].remove(pos);
                stack.push(u);
            }
            None => {
                circuit.push(v);
                stack.pop();
            }
        }
    }
    circuit.reverse();
    circuit
}
