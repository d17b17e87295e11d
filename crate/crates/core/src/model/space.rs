use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::matrix::Matrix;

/// States `0..d`, optionally equipped with a pairwise distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteStateSpace {
    d: usize,
    dist: Option<Matrix<f64>>,
}

impl FiniteStateSpace {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return input("state space needs at least one state");
        }
        Ok(Self { d, dist: None })
    }

    /// The distance must be symmetric with zero diagonal and strictly positive
    /// off-diagonal entries.
    pub fn with_distance(dist: Matrix<f64>) -> Result<Self> {
        validate_distance(&dist)?;
        Ok(Self {
            d: dist.rows(),
            dist: Some(dist),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn distance(&self) -> Option<&Matrix<f64>> {
        self.dist.as_ref()
    }
}

pub fn validate_distance(dist: &Matrix<f64>) -> Result<()> {
    if !dist.is_square() || dist.rows() == 0 {
        return input("distance matrix must be square and nonempty");
    }
    let d = dist.rows();
    for i in 0..d {
        if dist[(i, i)] != 0.0 {
            return input(format!("distance diagonal entry {i} is {}", dist[(i, i)]));
        }
        for j in 0..d {
            let v = dist[(i, j)];
            if !v.is_finite() {
                return input(format!("distance ({i},{j}) is not finite"));
            }
            if i != j && v <= 0.0 {
                return input(format!("distance ({i},{j}) = {v} must be positive"));
            }
            if v != dist[(j, i)] {
                return input(format!("distance not symmetric at ({i},{j})"));
            }
        }
    }
    Ok(())
}

/// Undirected simple graph on nodes `0..d` (no self loops stored).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if d == 0 {
            return input("graph needs at least one node");
        }
        let mut adjacency = vec![Vec::new(); d];
        for &(a, b) in edges {
            if a >= d || b >= d {
                return input(format!("edge ({a},{b}) refers to a node outside 0..{d}"));
            }
            if a == b {
                continue;
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        Ok(Self { adjacency })
    }

    pub fn complete(d: usize) -> Result<Self> {
        let edges: Vec<_> = (0..d)
            .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
            .collect();
        Self::from_edges(d, &edges)
    }

    /// Rectangular lattice, nodes numbered row by row.
    pub fn lattice(rows: usize, cols: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Self::from_edges(rows * cols, &edges)
    }

    /// Parses an edge list: one `x x'` pair per line, `#` comments allowed.
    pub fn parse_edge_list(d: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<_> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Input(format!("line {}: bad node {s:?}", lineno + 1)))
            };
            match parts.as_slice() {
                [a, b] => edges.push((parse(a)?, parse(b)?)),
                _ => return input(format!("line {}: expected two node labels", lineno + 1)),
            }
        }
        Self::from_edges(d, &edges)
    }

    pub fn d(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.d())
            .flat_map(|a| {
                self.adjacency[a]
                    .iter()
                    .filter(move |&&b| b > a)
                    .map(move |&b| (a, b))
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.d()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.d())
            .filter(|&v| self.adjacency[v].is_empty() && self.d() > 1)
            .collect()
    }
}

/// Per-state admissible action sets `D(x) ⊆ {0..m}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleActions {
    m: usize,
    sets: Vec<Vec<usize>>,
}

impl AdmissibleActions {
    pub fn new(m: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() {
            return input("admissible actions need at least one state");
        }
        let mut sets = sets;
        for (x, set) in sets.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return input(format!("D({x}) is empty"));
            }
            if let Some(&a) = set.iter().find(|&&a| a >= m) {
                return input(format!("D({x}) contains action {a} outside 0..{m}"));
            }
        }
        Ok(Self { m, sets })
    }

    /// Every action available in every state.
    pub fn uniform(d: usize, m: usize) -> Result<Self> {
        Self::new(m, vec![(0..m).collect(); d])
    }

    /// Movement on a graph: actions are target nodes, `D(x)` is the
    /// neighbourhood of `x` together with `x` itself.
    pub fn from_graph(graph: &Graph) -> Result<Self> {
        let sets = (0..graph.d())
            .map(|x| {
                let mut s = graph.neighbors(x).to_vec();
                s.push(x);
                s
            })
            .collect();
        Self::new(graph.d(), sets)
    }

    pub fn d(&self) -> usize {
        self.sets.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn of(&self, x: usize) -> &[usize] {
        &self.sets[x]
    }

    pub fn contains(&self, x: usize, a: usize) -> bool {
        self.sets[x].binary_search(&a).is_ok()
    }

    /// True when `D(x)` is the full state space for every `x` (actions are
    /// states).
    pub fn is_complete(&self) -> bool {
        self.m == self.d() && self.sets.iter().all(|s| s.len() == self.m)
    }

    /// Number of joint actions `|D(x_1)| * ... * |D(x_N)|` for a configuration.
    pub fn product_size(&self, states: &[usize]) -> u128 {
        states.iter().map(|&x| self.sets[x].len() as u128).product()
    }
}
