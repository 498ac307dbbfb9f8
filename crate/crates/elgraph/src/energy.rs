//! Elastic graph energy, data-approximation energy, and the spring
//! decomposition of star energy.
//!
//! All sums accumulate in ascending element order so repeated evaluation of
//! the same state is bit-for-bit reproducible.

use crate::error::{Error, Result};
use crate::graph::{ElasticGraph, Star};

/// Per-vertex positions of an embedded graph: the map from vertices to R^m,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    dim: usize,
    data: Vec<f64>,
}

impl Embedding {
    pub fn from_flat(vertex_count: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension is zero".into()));
        }
        if data.len() != vertex_count * dim {
            return Err(Error::DimensionMismatch(format!(
                "embedding of {} vertices in R^{} needs {} entries, got {}",
                vertex_count,
                dim,
                vertex_count * dim,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "embedding contains a non-finite coordinate".into(),
            ));
        }
        Ok(Embedding { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(
                "embedding rows have inconsistent lengths".into(),
            ));
        }
        Embedding::from_flat(rows.len(), dim, rows.concat())
    }

    pub fn zeros(vertex_count: usize, dim: usize) -> Self {
        Embedding {
            dim,
            data: vec![0.0; vertex_count * dim],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }
}

/// Weighted points in R^m.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DataSet {
    /// Builds a dataset from row-major coordinates. `weights` defaults to
    /// all ones; weights must be non-negative with at least one positive.
    pub fn from_flat(
        count: usize,
        dim: usize,
        points: Vec<f64>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidData("point dimension is zero".into()));
        }
        if points.len() != count * dim {
            return Err(Error::DimensionMismatch(format!(
                "{count} points in R^{dim} need {} coordinates, got {}",
                count * dim,
                points.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidData(
                "dataset contains a non-finite coordinate".into(),
            ));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; count]);
        if weights.len() != count {
            return Err(Error::DimensionMismatch(format!(
                "{count} points but {} weights",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidData(
                "weights must be finite and non-negative".into(),
            ));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidData("all point weights are zero".into()));
        }
        Ok(DataSet {
            dim,
            points,
            weights,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], weights: Option<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(
                "data rows have inconsistent lengths".into(),
            ));
        }
        DataSet::from_flat(rows.len(), dim, rows.concat(), weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Rescales all weights so they sum to one. This is how the `normalize`
    /// option is realized: the approximation energy formula itself stays an
    /// unnormalized weighted sum.
    pub fn normalize_weights(&self) -> DataSet {
        let total = self.total_weight();
        DataSet {
            dim: self.dim,
            points: self.points.clone(),
            weights: self.weights.iter().map(|w| w / total).collect(),
        }
    }

    /// Diagonal of the axis-aligned bounding box; the length scale used for
    /// placement offsets.
    pub fn bbox_diameter(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points.chunks_exact(self.dim) {
            for (d, &x) in p.iter().enumerate() {
                lo[d] = lo[d].min(x);
                hi[d] = hi[d].max(x);
            }
        }
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Pads every point with trailing zero coordinates up to `dim`.
    pub fn pad_to_dim(&self, dim: usize) -> DataSet {
        if dim <= self.dim {
            return self.clone();
        }
        let mut points = Vec::with_capacity(self.len() * dim);
        for p in self.points.chunks_exact(self.dim) {
            points.extend_from_slice(p);
            points.extend(std::iter::repeat(0.0).take(dim - self.dim));
        }
        DataSet {
            dim,
            points,
            weights: self.weights.clone(),
        }
    }
}

/// Assignment of every data point to its owning vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    owner: Vec<usize>,
    vertex_count: usize,
}

impl Partition {
    pub fn new(owner: Vec<usize>, vertex_count: usize) -> Result<Self> {
        if let Some(&bad) = owner.iter().find(|&&o| o >= vertex_count) {
            return Err(Error::InvalidArgument(format!(
                "owner index {bad} exceeds vertex count {vertex_count}"
            )));
        }
        Ok(Partition {
            owner,
            vertex_count,
        })
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    pub fn owner(&self, point: usize) -> usize {
        self.owner[point]
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// The inverse map: point indices grouped by owning vertex.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut clusters = vec![Vec::new(); self.vertex_count];
        for (p, &o) in self.owner.iter().enumerate() {
            clusters[o].push(p);
        }
        clusters
    }

    /// Total data weight attached to each vertex.
    pub fn cluster_weights(&self, data: &DataSet) -> Vec<f64> {
        let mut w = vec![0.0; self.vertex_count];
        for (p, &o) in self.owner.iter().enumerate() {
            w[o] += data.weight(p);
        }
        w
    }
}

/// Graph and approximation energy of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySplit {
    pub graph: f64,
    pub approximation: f64,
}

impl EnergySplit {
    pub fn total(&self) -> f64 {
        self.graph + self.approximation
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

fn check_graph_embedding(graph: &ElasticGraph, emb: &Embedding) -> Result<()> {
    if emb.vertex_count() != graph.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "embedding has {} vertices, graph has {}",
            emb.vertex_count(),
            graph.vertex_count()
        )));
    }
    Ok(())
}

fn check_partition(graph: &ElasticGraph, data: &DataSet, part: &Partition) -> Result<()> {
    if part.len() != data.len() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} points, dataset has {}",
            part.len(),
            data.len()
        )));
    }
    if part.vertex_count() != graph.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "partition is over {} vertices, graph has {}",
            part.vertex_count(),
            graph.vertex_count()
        )));
    }
    Ok(())
}

/// Sum of quadratic edge-stretching and star-bending terms:
/// `sum_i lambda_i |phi(u_i) - phi(v_i)|^2 +
///  sum_j mu_j |sum_leaves phi - k phi(center)|^2`.
pub fn graph_energy(graph: &ElasticGraph, emb: &Embedding) -> Result<f64> {
    check_graph_embedding(graph, emb)?;
    let mut energy = 0.0;
    for e in graph.edges() {
        energy += e.lambda * sq_dist(emb.row(e.u), emb.row(e.v));
    }
    for s in graph.stars() {
        energy += s.mu * star_stress_sq(s, emb);
    }
    Ok(energy)
}

/// `|sum_leaves phi - k phi(center)|^2` for one star.
pub(crate) fn star_stress_sq(star: &Star, emb: &Embedding) -> f64 {
    let k = star.k() as f64;
    let center = emb.row(star.center);
    let dim = emb.dim();
    let mut acc = 0.0;
    for d in 0..dim {
        let mut s = 0.0;
        for &leaf in &star.leaves {
            s += emb.row(leaf)[d];
        }
        s -= k * center[d];
        acc += s * s;
    }
    acc
}

/// Weighted squared distances from each point to its owner vertex,
/// accumulated in ascending point order. Unnormalized.
pub fn approximation_energy(
    graph: &ElasticGraph,
    emb: &Embedding,
    data: &DataSet,
    part: &Partition,
) -> Result<f64> {
    check_graph_embedding(graph, emb)?;
    check_partition(graph, data, part)?;
    if data.dim() != emb.dim() {
        return Err(Error::DimensionMismatch(format!(
            "data in R^{}, embedding in R^{}",
            data.dim(),
            emb.dim()
        )));
    }
    let mut energy = 0.0;
    for p in 0..data.len() {
        energy += data.weight(p) * sq_dist(data.point(p), emb.row(part.owner(p)));
    }
    Ok(energy)
}

/// Both energy terms of one state.
pub fn energies(
    graph: &ElasticGraph,
    emb: &Embedding,
    data: &DataSet,
    part: &Partition,
) -> Result<EnergySplit> {
    Ok(EnergySplit {
        graph: graph_energy(graph, emb)?,
        approximation: approximation_energy(graph, emb, data, part)?,
    })
}

/// `approximation_energy + graph_energy`.
pub fn total_energy(
    graph: &ElasticGraph,
    emb: &Embedding,
    data: &DataSet,
    part: &Partition,
) -> Result<f64> {
    energies(graph, emb, data, part).map(|e| e.total())
}

/// One spring of the star decomposition: `coefficient * |phi(a) - phi(b)|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spring {
    pub a: usize,
    pub b: usize,
    pub coefficient: f64,
}

/// A star energy written two ways: directly, and as a sum of springs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpringDecomposition {
    /// `mu * |sum_leaves phi - k phi(center)|^2`.
    pub direct: f64,
    /// The same quantity evaluated from the spring lists.
    pub spring_form: f64,
    /// `k` center-to-leaf springs with coefficient `k * mu`.
    pub positive_springs: Vec<Spring>,
    /// `k(k-1)/2` leaf-to-leaf springs with coefficient `-mu`.
    pub negative_springs: Vec<Spring>,
}

/// Rewrites a k-star's energy as a system of springs: k positive springs
/// from the center to each leaf with coefficient `k * mu`, and one negative
/// spring of coefficient `-mu` per unordered leaf pair. Both evaluations are
/// returned; they agree up to rounding.
pub fn star_spring_decomposition(star: &Star, emb: &Embedding) -> Result<SpringDecomposition> {
    if star.leaves.iter().chain([&star.center]).any(|&v| v >= emb.vertex_count()) {
        return Err(Error::DimensionMismatch(
            "star references a vertex outside the embedding".into(),
        ));
    }
    let k = star.k() as f64;
    let direct = star.mu * star_stress_sq(star, emb);

    let positive_springs: Vec<Spring> = star
        .leaves
        .iter()
        .map(|&leaf| Spring {
            a: star.center,
            b: leaf,
            coefficient: k * star.mu,
        })
        .collect();
    let mut negative_springs = Vec::with_capacity(star.k() * (star.k() - 1) / 2);
    for (i, &li) in star.leaves.iter().enumerate() {
        for &lj in &star.leaves[i + 1..] {
            negative_springs.push(Spring {
                a: li,
                b: lj,
                coefficient: -star.mu,
            });
        }
    }

    let mut spring_form = 0.0;
    for s in positive_springs.iter().chain(&negative_springs) {
        spring_form += s.coefficient * sq_dist(emb.row(s.a), emb.row(s.b));
    }

    Ok(SpringDecomposition {
        direct,
        spring_form,
        positive_springs,
        negative_springs,
    })
}
