//! Elastic graph structures: vertices, weighted edges, weighted k-stars,
//! primitive-star derivation, and Cartesian products of elastic graphs.
//!
//! Vertices are dense indices `0..n`. An [`ElasticGraph`] owns its edge and
//! star lists in a canonical sorted order, so two graphs built from the same
//! elements compare equal and every downstream accumulation is reproducible.
//! Graphs are immutable after construction; growth operations build new ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cap on how many vertices a product expansion may materialize.
pub const DEFAULT_VERTEX_BUDGET: usize = 100_000;

/// How star moduli are assigned when stars are derived from the topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StarScaling {
    /// Every derived star carries the same modulus.
    #[default]
    Uniform,
    /// A k-star carries modulus `mu / k`.
    InverseK,
}

/// An undirected edge with its stretching modulus.
///
/// The endpoint pair is unordered; construction normalizes it to `u <= v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub lambda: f64,
}

impl Edge {
    pub fn new(a: usize, b: usize, lambda: f64) -> Self {
        if a <= b {
            Edge { u: a, v: b, lambda }
        } else {
            Edge { u: b, v: a, lambda }
        }
    }

    pub fn key(&self) -> (usize, usize) {
        (self.u, self.v)
    }
}

/// A k-star: a center vertex joined to `k >= 2` leaves, with its bending
/// modulus. Leaves are kept sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Star {
    pub center: usize,
    pub leaves: Vec<usize>,
    pub mu: f64,
}

impl Star {
    pub fn new(center: usize, mut leaves: Vec<usize>, mu: f64) -> Self {
        leaves.sort_unstable();
        Star { center, leaves, mu }
    }

    pub fn k(&self) -> usize {
        self.leaves.len()
    }
}

/// A simple undirected graph with elastic moduli on its edges and on a
/// selected family of k-stars.
///
/// Moduli are accepted as finite non-negative reals. The elastic regime of
/// interest has strictly positive moduli; zero moduli are admitted so the
/// k-means limit of the fitting algorithm can be exercised directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    stars: Vec<Star>,
}

impl ElasticGraph {
    /// Builds and validates a graph. Edges and stars are normalized into
    /// canonical order (edges by endpoint pair, star leaves ascending,
    /// stars by center then leaves).
    pub fn new(vertex_count: usize, edges: Vec<Edge>, stars: Vec<Star>) -> Result<Self> {
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| Edge::new(e.u, e.v, e.lambda))
            .collect();
        edges.sort_by_key(Edge::key);

        for e in &edges {
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", e.u)));
            }
            if e.v >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) exceeds vertex count {}",
                    e.u, e.v, vertex_count
                )));
            }
            if !e.lambda.is_finite() || e.lambda < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has invalid modulus {}",
                    e.u, e.v, e.lambda
                )));
            }
        }
        for w in edges.windows(2) {
            if w[0].key() == w[1].key() {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    w[0].u, w[0].v
                )));
            }
        }

        let mut stars: Vec<Star> = stars
            .into_iter()
            .map(|s| Star::new(s.center, s.leaves, s.mu))
            .collect();
        stars.sort_by(|a, b| (a.center, &a.leaves).cmp(&(b.center, &b.leaves)));

        let graph = ElasticGraph {
            vertex_count,
            edges,
            stars,
        };
        for s in &graph.stars {
            if s.k() < 2 {
                return Err(Error::InvalidGraph(format!(
                    "star at {} has {} leaves; need at least 2",
                    s.center,
                    s.k()
                )));
            }
            if s.center >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "star center {} exceeds vertex count {}",
                    s.center, vertex_count
                )));
            }
            if !s.mu.is_finite() || s.mu < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "star at {} has invalid modulus {}",
                    s.center, s.mu
                )));
            }
            for w in s.leaves.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::InvalidGraph(format!(
                        "star at {} repeats leaf {}",
                        s.center, w[0]
                    )));
                }
            }
            for &leaf in &s.leaves {
                if leaf >= vertex_count {
                    return Err(Error::InvalidGraph(format!(
                        "star leaf {} exceeds vertex count {}",
                        leaf, vertex_count
                    )));
                }
                if leaf == s.center {
                    return Err(Error::InvalidGraph(format!(
                        "star at {} lists its center as a leaf",
                        s.center
                    )));
                }
                if !graph.has_edge(s.center, leaf) {
                    return Err(Error::InvalidGraph(format!(
                        "star at {} claims leaf {} without an edge",
                        s.center, leaf
                    )));
                }
            }
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn stars(&self) -> &[Star] {
        &self.stars
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.edges.binary_search_by_key(&key, Edge::key).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.vertex_count];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Replaces the star list with the primitive one: every vertex of degree
    /// `k >= 2` becomes the center of a k-star over its full neighbor set,
    /// all with modulus `mu`. Edges are unchanged. Terminal and isolated
    /// vertices contribute no star.
    pub fn with_primitive_stars(&self, mu: f64) -> Result<Self> {
        self.with_primitive_stars_scaled(mu, StarScaling::Uniform)
    }

    /// Primitive stars with an optional per-k modulus scaling.
    pub fn with_primitive_stars_scaled(&self, mu: f64, scaling: StarScaling) -> Result<Self> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "star modulus must be finite and non-negative, got {mu}"
            )));
        }
        let stars = self
            .adjacency()
            .into_iter()
            .enumerate()
            .filter(|(_, nbrs)| nbrs.len() >= 2)
            .map(|(center, leaves)| {
                let k = leaves.len() as f64;
                let m = match scaling {
                    StarScaling::Uniform => mu,
                    StarScaling::InverseK => mu / k,
                };
                Star::new(center, leaves, m)
            })
            .collect();
        ElasticGraph::new(self.vertex_count, self.edges.clone(), stars)
    }

    /// True when the star list is exactly the primitive family: one star per
    /// vertex of degree >= 2 covering its full neighbor set. Moduli are not
    /// compared.
    pub fn is_primitive(&self) -> bool {
        let adj = self.adjacency();
        let expected: Vec<(usize, &[usize])> = adj
            .iter()
            .enumerate()
            .filter(|(_, n)| n.len() >= 2)
            .map(|(c, n)| (c, n.as_slice()))
            .collect();
        if expected.len() != self.stars.len() {
            return false;
        }
        // Both sides are sorted by center, so compare positionally.
        expected
            .iter()
            .zip(&self.stars)
            .all(|(&(c, leaves), s)| s.center == c && s.leaves == leaves)
    }

    /// True when every pair of vertices is joined by some edge path.
    pub fn is_connected(&self) -> bool {
        if self.vertex_count <= 1 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.vertex_count
    }
}

/// A Cartesian product of elastic graphs, kept in factorized form.
///
/// The product vertex set is the Cartesian product of the factor vertex
/// sets. A multi-index `(v_1, ..., v_r)` flattens row-major: the first
/// factor varies slowest. Edges and stars of the product are the union over
/// all copies of all factors and are only materialized by [`expand`].
///
/// [`expand`]: ProductGraph::expand
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGraph {
    factors: Vec<ElasticGraph>,
}

impl ProductGraph {
    pub fn new(factors: Vec<ElasticGraph>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument(
                "product needs at least one factor".into(),
            ));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.vertex_count() == 0 {
                return Err(Error::InvalidArgument(format!(
                    "factor {i} has no vertices"
                )));
            }
        }
        Ok(ProductGraph { factors })
    }

    pub fn factors(&self) -> &[ElasticGraph] {
        &self.factors
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    /// Vertex counts of the factors, in order.
    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(ElasticGraph::vertex_count).collect()
    }

    /// Number of vertices of the expanded product, or `None` on overflow.
    pub fn checked_vertex_count(&self) -> Option<usize> {
        self.factors
            .iter()
            .try_fold(1usize, |acc, f| acc.checked_mul(f.vertex_count()))
    }

    /// Row-major strides: `flat = sum_j multi[j] * strides[j]`.
    pub fn strides(&self) -> Vec<usize> {
        let dims = self.dims();
        let mut strides = vec![1usize; dims.len()];
        for j in (0..dims.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * dims[j + 1];
        }
        strides
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        let strides = self.strides();
        multi.iter().zip(&strides).map(|(v, s)| v * s).sum()
    }

    /// All copies of factor `i`, one per assignment of the other factor
    /// coordinates. Each copy maps a vertex of the factor to its flattened
    /// product index. Copies are ordered row-major over the fixed
    /// coordinates; per factor, the copy images partition the product
    /// vertex set.
    pub fn copies_of_factor(&self, i: usize) -> Result<Vec<Vec<usize>>> {
        if i >= self.factors.len() {
            return Err(Error::InvalidArgument(format!(
                "factor index {i} out of range for {} factors",
                self.factors.len()
            )));
        }
        let dims = self.dims();
        let strides = self.strides();
        let other: Vec<usize> = (0..dims.len()).filter(|&j| j != i).collect();
        let copy_count: usize = other.iter().map(|&j| dims[j]).product();
        let mut copies = Vec::with_capacity(copy_count);
        for rank in 0..copy_count {
            // Decompose the copy rank over the remaining dims, row-major.
            let mut rest = rank;
            let mut base = 0usize;
            for &j in other.iter().rev() {
                base += (rest % dims[j]) * strides[j];
                rest /= dims[j];
            }
            copies.push((0..dims[i]).map(|v| base + v * strides[i]).collect());
        }
        Ok(copies)
    }

    /// Materializes the product as a flat elastic graph under the default
    /// vertex budget.
    pub fn expand(&self) -> Result<ElasticGraph> {
        self.expand_with_budget(DEFAULT_VERTEX_BUDGET)
    }

    /// Materializes the product: the edge and star lists are the unions over
    /// all copies of all factors, each element inheriting its factor
    /// modulus. Fails when the expansion would exceed `budget` vertices.
    pub fn expand_with_budget(&self, budget: usize) -> Result<ElasticGraph> {
        let n = self.checked_vertex_count().ok_or(Error::ExpansionTooLarge {
            vertices: usize::MAX,
            budget,
        })?;
        if n > budget {
            return Err(Error::ExpansionTooLarge {
                vertices: n,
                budget,
            });
        }
        let mut edges = Vec::new();
        let mut stars = Vec::new();
        for (i, factor) in self.factors.iter().enumerate() {
            for map in self.copies_of_factor(i)? {
                for e in factor.edges() {
                    edges.push(Edge::new(map[e.u], map[e.v], e.lambda));
                }
                for s in factor.stars() {
                    stars.push(Star::new(
                        map[s.center],
                        s.leaves.iter().map(|&l| map[l]).collect(),
                        s.mu,
                    ));
                }
            }
        }
        ElasticGraph::new(n, edges, stars)
    }
}
