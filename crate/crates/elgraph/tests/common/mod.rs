//! Independent oracles and instance generators shared by the integration
//! suites. Everything here recomputes the textbook formulas directly and
//! never calls into the solver paths it is used to check.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use elgraph::energy::{DataSet, Embedding, Partition};
use elgraph::graph::{Edge, ElasticGraph, Star};

/// Total energy from the defining sums, nothing shared with the solver.
pub fn oracle_total_energy(
    graph: &ElasticGraph,
    positions: &[f64],
    dim: usize,
    data: &DataSet,
    owners: &[usize],
) -> f64 {
    let row = |v: usize| &positions[v * dim..(v + 1) * dim];
    let mut energy = 0.0;
    for p in 0..data.len() {
        let x = data.point(p);
        let phi = row(owners[p]);
        let mut d2 = 0.0;
        for d in 0..dim {
            let diff = x[d] - phi[d];
            d2 += diff * diff;
        }
        energy += data.weight(p) * d2;
    }
    for e in graph.edges() {
        let (u, v) = (row(e.u), row(e.v));
        let mut d2 = 0.0;
        for d in 0..dim {
            let diff = u[d] - v[d];
            d2 += diff * diff;
        }
        energy += e.lambda * d2;
    }
    for s in graph.stars() {
        let k = s.k() as f64;
        let center = row(s.center);
        let mut stress = 0.0;
        for d in 0..dim {
            let mut acc = 0.0;
            for &leaf in &s.leaves {
                acc += row(leaf)[d];
            }
            acc -= k * center[d];
            stress += acc * acc;
        }
        energy += s.mu * stress;
    }
    energy
}

/// Analytic gradient of [`oracle_total_energy`] in the positions.
pub fn oracle_gradient(
    graph: &ElasticGraph,
    positions: &[f64],
    dim: usize,
    data: &DataSet,
    owners: &[usize],
) -> Vec<f64> {
    let mut grad = vec![0.0; positions.len()];
    for p in 0..data.len() {
        let o = owners[p];
        let w = data.weight(p);
        let x = data.point(p);
        for d in 0..dim {
            grad[o * dim + d] += 2.0 * w * (positions[o * dim + d] - x[d]);
        }
    }
    for e in graph.edges() {
        for d in 0..dim {
            let diff = positions[e.u * dim + d] - positions[e.v * dim + d];
            grad[e.u * dim + d] += 2.0 * e.lambda * diff;
            grad[e.v * dim + d] -= 2.0 * e.lambda * diff;
        }
    }
    for s in graph.stars() {
        let k = s.k() as f64;
        for d in 0..dim {
            let mut stress = 0.0;
            for &leaf in &s.leaves {
                stress += positions[leaf * dim + d];
            }
            stress -= k * positions[s.center * dim + d];
            grad[s.center * dim + d] -= 2.0 * s.mu * k * stress;
            for &leaf in &s.leaves {
                grad[leaf * dim + d] += 2.0 * s.mu * stress;
            }
        }
    }
    grad
}

/// Brute-force steepest descent with exact line search on the quadratic
/// energy, for a fixed partition. The Hessian action is taken from gradient
/// differences, so only the energy's own gradient is ever evaluated.
pub fn oracle_gd_minimize(
    graph: &ElasticGraph,
    data: &DataSet,
    owners: &[usize],
    start: &[f64],
    dim: usize,
) -> Vec<f64> {
    let mut x = start.to_vec();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let scale = 1.0 + oracle_total_energy(graph, &x, dim, data, owners).abs();
    for _ in 0..300_000 {
        let g = oracle_gradient(graph, &x, dim, data, owners);
        let gg = dot(&g, &g);
        if gg <= 1e-28 * scale {
            break;
        }
        let shifted: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + gi).collect();
        let g_shifted = oracle_gradient(graph, &shifted, dim, data, owners);
        let hg: Vec<f64> = g_shifted.iter().zip(&g).map(|(a, b)| a - b).collect();
        let ghg = dot(&g, &hg);
        if ghg <= 0.0 {
            break;
        }
        let alpha = gg / ghg;
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= alpha * gi;
        }
        // Exact-line-search descent per step is alpha * gg / 2.
        if 0.5 * alpha * gg <= 1e-16 * scale {
            break;
        }
    }
    x
}

/// One Lloyd iteration: nearest-centroid assignment (ties to the lowest
/// index), then weighted means; empty clusters keep their centroid.
pub fn lloyd_step(centroids: &mut [f64], dim: usize, data: &DataSet) -> Vec<usize> {
    let k = centroids.len() / dim;
    let mut owners = Vec::with_capacity(data.len());
    for p in 0..data.len() {
        let x = data.point(p);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let mut d2 = 0.0;
            for d in 0..dim {
                let diff = x[d] - centroids[c * dim + d];
                d2 += diff * diff;
            }
            if d2 < best_d {
                best = c;
                best_d = d2;
            }
        }
        owners.push(best);
    }
    let mut sums = vec![0.0; k * dim];
    let mut weights = vec![0.0; k];
    for p in 0..data.len() {
        let o = owners[p];
        let w = data.weight(p);
        weights[o] += w;
        let x = data.point(p);
        for d in 0..dim {
            sums[o * dim + d] += w * x[d];
        }
    }
    for c in 0..k {
        if weights[c] > 0.0 {
            for d in 0..dim {
                centroids[c * dim + d] = sums[c * dim + d] / weights[c];
            }
        }
    }
    owners
}

/// Random tree-shaped elastic graph with per-element moduli, random weighted
/// points, a random starting embedding, and a round-robin partition (so
/// every vertex owns data and the quadratic system is positive definite).
pub struct RandomInstance {
    pub graph: ElasticGraph,
    pub data: DataSet,
    pub emb0: Embedding,
    pub part: Partition,
}

pub fn random_instance(
    rng: &mut ChaCha8Rng,
    min_vertices: usize,
    max_vertices: usize,
    max_points: usize,
    max_dim: usize,
) -> RandomInstance {
    let n = rng.random_range(min_vertices..=max_vertices);
    let dim = rng.random_range(1..=max_dim);
    let points = rng.random_range(n..=max_points.max(n));

    let edges: Vec<Edge> = (1..n)
        .map(|v| Edge::new(rng.random_range(0..v), v, rng.random_range(0.1..2.0)))
        .collect();
    let skeleton = ElasticGraph::new(n, edges, vec![]).unwrap();
    let derived = skeleton.with_primitive_stars(1.0).unwrap();
    let stars: Vec<Star> = derived
        .stars()
        .iter()
        .map(|s| Star::new(s.center, s.leaves.clone(), rng.random_range(0.1..2.0)))
        .collect();
    let graph = ElasticGraph::new(n, skeleton.edges().to_vec(), stars).unwrap();

    let coords: Vec<f64> = (0..points * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    let weights: Vec<f64> = (0..points).map(|_| rng.random_range(0.5..2.0)).collect();
    let data = DataSet::from_flat(points, dim, coords, Some(weights)).unwrap();

    let emb0 = Embedding::from_flat(
        n,
        dim,
        (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect(),
    )
    .unwrap();
    let part = Partition::new((0..points).map(|p| p % n).collect(), n).unwrap();
    RandomInstance {
        graph,
        data,
        emb0,
        part,
    }
}
