//! The splitting algorithm: alternate nearest-vertex partitioning with an
//! exact minimization of the quadratic energy, solved per coordinate as a
//! sparse symmetric positive-definite linear system.
//!
//! For a fixed partition the total energy is quadratic in the vertex
//! positions; its normal equations `A * Phi = B` share one matrix across all
//! coordinates. `A` is the data-weight diagonal plus the elastic quadratic
//! form of the edges and stars. When a connected component of the graph
//! carries no data weight the system is singular; the solve then anchors the
//! shifted system at the previous embedding, so unloaded vertices hold their
//! position.

use nalgebra::DMatrix;

use crate::energy::{self, sq_dist, DataSet, Embedding, EnergySplit, Partition};
use crate::error::{Error, Result};
use crate::graph::ElasticGraph;
use crate::pca;

/// Vertex count up to which the dense direct factorization is used;
/// larger systems go through preconditioned conjugate gradients.
const DENSE_LIMIT: usize = 2000;

/// Relative residual tolerance of the iterative solver.
const CG_TOLERANCE: f64 = 1e-10;

/// Distance-tie policy during partitioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Exact ties go to the lowest vertex index.
    #[default]
    LowestIndex,
}

/// Numeric realization of the "stop when no change" iteration.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Converged when the relative total-energy change drops below this.
    pub epsilon: f64,
    /// Cap on splitting iterations.
    pub max_iterations: usize,
    /// Ridge scale for singular systems: the diagonal shift is
    /// `ridge * trace(A) / n`, anchored at the previous embedding.
    pub ridge: f64,
    pub tie_break: TieBreak,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-5,
            max_iterations: 100,
            ridge: 1e-9,
            tie_break: TieBreak::LowestIndex,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::Config(format!(
                "ridge must be non-negative, got {}",
                self.ridge
            )));
        }
        Ok(())
    }
}

/// What one `fit` call did.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub iterations: usize,
    /// Energies per iteration, starting with the initial state.
    pub trace: Vec<EnergySplit>,
    pub converged: bool,
    /// True when any solve went through the ridge path (some vertices were
    /// held in place because their component carried no data weight).
    pub ridge_used: bool,
}

/// Assigns every data point to the vertex minimizing squared Euclidean
/// distance; exact ties go to the lowest vertex index.
pub fn partition_data(emb: &Embedding, data: &DataSet) -> Result<Partition> {
    if emb.dim() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "embedding in R^{}, data in R^{}",
            emb.dim(),
            data.dim()
        )));
    }
    let n = emb.vertex_count();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "cannot partition onto an empty embedding".into(),
        ));
    }
    let mut owner = Vec::with_capacity(data.len());
    for p in 0..data.len() {
        let point = data.point(p);
        let mut best = 0usize;
        let mut best_d = sq_dist(point, emb.row(0));
        for v in 1..n {
            let d = sq_dist(point, emb.row(v));
            if d < best_d {
                best = v;
                best_d = d;
            }
        }
        owner.push(best);
    }
    Partition::new(owner, n)
}

/// Sparse symmetric matrix in compressed row form. Both triangles are
/// stored; every diagonal entry is structurally present.
#[derive(Debug, Clone)]
pub struct SymSparse {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl SymSparse {
    fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        // Stable sort keeps duplicate-entry accumulation order fixed.
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
            row_ptr[r + 1] = col_idx.len();
        }
        // Rows with no entries inherit the running offset.
        for r in 0..n {
            if row_ptr[r + 1] < row_ptr[r] {
                row_ptr[r + 1] = row_ptr[r];
            }
        }
        let mut diag = vec![usize::MAX; n];
        for r in 0..n {
            for k in row_ptr[r]..row_ptr[r + 1] {
                if col_idx[k] == r {
                    diag[r] = k;
                }
            }
        }
        debug_assert!(diag.iter().all(|&d| d != usize::MAX));
        SymSparse {
            n,
            row_ptr,
            col_idx,
            values,
            diag,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().map(|&k| self.values[k]).sum()
    }

    pub fn diag_value(&self, i: usize) -> f64 {
        self.values[self.diag[i]]
    }

    fn add_to_diag(&mut self, i: usize, v: f64) {
        self.values[self.diag[i]] += v;
    }

    fn off_diagonal_all_zero(&self) -> bool {
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] != r && self.values[k] != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] += self.values[k];
            }
        }
        m
    }

    /// True when some connected component (over the nonzero off-diagonal
    /// pattern) has an all-over entry sum of zero. The elastic part of each
    /// component row-sums to zero, so that sum equals the component's data
    /// weight; a zero means the restricted system is singular.
    fn has_unloaded_component(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                if c != r && self.values[k] != 0.0 {
                    let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        let mut sums = vec![0.0; self.n];
        let mut seen = vec![false; self.n];
        for r in 0..self.n {
            let root = find(&mut parent, r);
            seen[root] = true;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                sums[root] += self.values[k];
            }
        }
        let threshold = 1e-12 * (1.0 + self.trace().abs());
        (0..self.n).any(|r| seen[r] && sums[r] <= threshold)
    }
}

/// The normal equations of the quadratic energy for one fixed partition:
/// `matrix * Phi = rhs` column-wise, `rhs` stored row-major `n x dim`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: SymSparse,
    pub rhs: Vec<f64>,
    pub dim: usize,
}

/// The elastic quadratic form of a fixed topology. Only the data diagonal
/// and the right-hand side change between splitting iterations, so the
/// pattern is assembled once per topology and reused.
#[derive(Debug, Clone)]
pub(crate) struct ElasticPattern {
    base: SymSparse,
}

impl ElasticPattern {
    pub(crate) fn new(graph: &ElasticGraph) -> Self {
        let n = graph.vertex_count();
        let mut triplets: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 0.0)).collect();
        for e in graph.edges() {
            triplets.push((e.u, e.u, e.lambda));
            triplets.push((e.v, e.v, e.lambda));
            triplets.push((e.u, e.v, -e.lambda));
            triplets.push((e.v, e.u, -e.lambda));
        }
        for s in graph.stars() {
            let k = s.k() as f64;
            triplets.push((s.center, s.center, k * k * s.mu));
            for &l in &s.leaves {
                triplets.push((l, l, s.mu));
                triplets.push((s.center, l, -k * s.mu));
                triplets.push((l, s.center, -k * s.mu));
            }
            for (i, &li) in s.leaves.iter().enumerate() {
                for &lj in &s.leaves[i + 1..] {
                    triplets.push((li, lj, s.mu));
                    triplets.push((lj, li, s.mu));
                }
            }
        }
        ElasticPattern {
            base: SymSparse::from_triplets(n, triplets),
        }
    }

    pub(crate) fn assemble(&self, data: &DataSet, part: &Partition) -> AssembledSystem {
        let n = self.base.n;
        let m = data.dim();
        let mut matrix = self.base.clone();
        let mut rhs = vec![0.0; n * m];
        let mut cluster_weight = vec![0.0; n];
        for p in 0..data.len() {
            let o = part.owner(p);
            let w = data.weight(p);
            cluster_weight[o] += w;
            let x = data.point(p);
            let row = &mut rhs[o * m..(o + 1) * m];
            for (acc, xd) in row.iter_mut().zip(x) {
                *acc += w * xd;
            }
        }
        for (i, &w) in cluster_weight.iter().enumerate() {
            matrix.add_to_diag(i, w);
        }
        AssembledSystem { matrix, rhs, dim: m }
    }
}

/// Builds the normal equations `A * Phi = B` of the total energy for the
/// given partition: `A = diag(cluster weights) + L_edges + L_stars`, and row
/// `y` of `B` is the weighted coordinate sum of the points owned by `y`.
pub fn assemble_system(
    graph: &ElasticGraph,
    data: &DataSet,
    part: &Partition,
) -> Result<AssembledSystem> {
    if part.vertex_count() != graph.vertex_count() || part.len() != data.len() {
        return Err(Error::DimensionMismatch(
            "partition does not match graph and dataset".into(),
        ));
    }
    Ok(ElasticPattern::new(graph).assemble(data, part))
}

fn rhs_column(rhs: &[f64], dim: usize, c: usize) -> Vec<f64> {
    rhs.iter().skip(c).step_by(dim).copied().collect()
}

fn solve_dense(matrix: &SymSparse, rhs: &[f64], dim: usize) -> Option<Vec<f64>> {
    let n = matrix.n();
    let chol = matrix.to_dense().cholesky()?;
    let b = DMatrix::from_fn(n, dim, |r, c| rhs[r * dim + c]);
    let x = chol.solve(&b);
    let mut flat = vec![0.0; n * dim];
    for r in 0..n {
        for c in 0..dim {
            flat[r * dim + c] = x[(r, c)];
        }
    }
    Some(flat)
}

/// Jacobi-preconditioned conjugate gradients on one coordinate.
/// Returns the solution or the final residual norm on non-convergence.
fn cg_column(
    matrix: &SymSparse,
    b: &[f64],
    x0: &[f64],
) -> std::result::Result<Vec<f64>, f64> {
    let n = matrix.n();
    let precond: Vec<f64> = (0..n)
        .map(|i| {
            let d = matrix.diag_value(i);
            if d > 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let tol = CG_TOLERANCE * (1.0 + norm(b));
    let mut x = x0.to_vec();
    let mut ax = vec![0.0; n];
    matrix.matvec(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    if norm(&r) <= tol {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(ri, m)| ri * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 2 * n + 200;
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        matrix.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return Err(norm(&r));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * precond[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(norm(&r))
}

fn solve_cg(
    matrix: &SymSparse,
    rhs: &[f64],
    prev: &Embedding,
    dim: usize,
) -> std::result::Result<Vec<f64>, f64> {
    let n = matrix.n();
    let mut flat = vec![0.0; n * dim];
    for c in 0..dim {
        let b = rhs_column(rhs, dim, c);
        let x0: Vec<f64> = (0..n).map(|r| prev.row(r)[c]).collect();
        let x = cg_column(matrix, &b, &x0)?;
        for r in 0..n {
            flat[r * dim + c] = x[r];
        }
    }
    Ok(flat)
}

/// Solves `A * Phi = B` per coordinate. Diagonal systems are solved by exact
/// division. A singular system (some connected component carries zero data
/// weight) is shifted by `ridge * trace(A)/n` and anchored at `prev`, so the
/// affected vertices keep their previous positions; the returned flag
/// reports that the ridge path ran.
pub fn solve_embedding(
    system: &AssembledSystem,
    prev: &Embedding,
    config: &SolverConfig,
) -> Result<(Embedding, bool)> {
    config.validate()?;
    let n = system.matrix.n();
    let dim = system.dim;
    if prev.vertex_count() != n || prev.dim() != dim {
        return Err(Error::DimensionMismatch(
            "previous embedding does not match the system".into(),
        ));
    }

    if system.matrix.off_diagonal_all_zero() {
        let mut flat = vec![0.0; n * dim];
        let mut held = false;
        for r in 0..n {
            let d = system.matrix.diag_value(r);
            let row = &mut flat[r * dim..(r + 1) * dim];
            if d == 0.0 {
                row.copy_from_slice(prev.row(r));
                held = true;
            } else {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = system.rhs[r * dim + c] / d;
                }
            }
        }
        return Ok((Embedding::from_flat(n, dim, flat)?, held));
    }

    let mut matrix = system.matrix.clone();
    let mut rhs = system.rhs.clone();
    let mut ridged = false;
    let apply_ridge = |matrix: &mut SymSparse, rhs: &mut Vec<f64>| {
        let shift = config.ridge * matrix.trace() / n as f64;
        for i in 0..n {
            matrix.add_to_diag(i, shift);
            for c in 0..dim {
                rhs[i * dim + c] += shift * prev.row(i)[c];
            }
        }
    };

    if matrix.has_unloaded_component() {
        apply_ridge(&mut matrix, &mut rhs);
        ridged = true;
    }

    let flat = if n <= DENSE_LIMIT {
        match solve_dense(&matrix, &rhs, dim) {
            Some(x) => x,
            None => {
                if !ridged {
                    apply_ridge(&mut matrix, &mut rhs);
                    ridged = true;
                }
                match solve_dense(&matrix, &rhs, dim) {
                    Some(x) => x,
                    None => solve_cg(&matrix, &rhs, prev, dim)
                        .map_err(|residual| Error::SolverBreakdown { residual })?,
                }
            }
        }
    } else {
        match solve_cg(&matrix, &rhs, prev, dim) {
            Ok(x) => x,
            Err(_) if !ridged => {
                apply_ridge(&mut matrix, &mut rhs);
                ridged = true;
                solve_cg(&matrix, &rhs, prev, dim)
                    .map_err(|residual| Error::SolverBreakdown { residual })?
            }
            Err(residual) => return Err(Error::SolverBreakdown { residual }),
        }
    };

    if flat.iter().any(|x| !x.is_finite()) {
        return Err(Error::SolverBreakdown { residual: f64::NAN });
    }
    Ok((Embedding::from_flat(n, dim, flat)?, ridged))
}

/// Alternates partitioning and exact quadratic minimization until the
/// partition repeats, the relative energy change drops below `epsilon`, or
/// `max_iterations` is reached. The energy trace is non-increasing.
pub fn fit(
    graph: &ElasticGraph,
    data: &DataSet,
    emb0: &Embedding,
    config: &SolverConfig,
) -> Result<(Embedding, Partition, FitReport)> {
    config.validate()?;
    if emb0.vertex_count() != graph.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "initial embedding has {} vertices, graph has {}",
            emb0.vertex_count(),
            graph.vertex_count()
        )));
    }
    let pattern = ElasticPattern::new(graph);
    let mut emb = emb0.clone();
    let mut part = partition_data(&emb, data)?;
    let mut split = energy_state(graph, &emb, data, &part)?;
    let mut trace = vec![split];
    let mut converged = false;
    let mut ridge_used = false;
    let mut iterations = 0;

    for _ in 0..config.max_iterations {
        let system = pattern.assemble(data, &part);
        let (next, ridged) = solve_embedding(&system, &emb, config)?;
        ridge_used |= ridged;
        emb = next;
        let next_part = partition_data(&emb, data)?;
        let next_split = energy_state(graph, &emb, data, &next_part)?;
        iterations += 1;
        trace.push(next_split);

        let unchanged = next_part.owners() == part.owners();
        let small_change = (split.total() - next_split.total()).abs()
            <= config.epsilon * (1.0 + split.total().abs());
        part = next_part;
        split = next_split;
        if unchanged || small_change {
            converged = true;
            break;
        }
    }

    debug_assert!(trace.windows(2).all(|w| {
        w[1].total() <= w[0].total() + 1e-9 * (1.0 + trace[0].total().abs())
    }));

    Ok((
        emb,
        part,
        FitReport {
            iterations,
            trace,
            converged,
            ridge_used,
        },
    ))
}

fn energy_state(
    graph: &ElasticGraph,
    emb: &Embedding,
    data: &DataSet,
    part: &Partition,
) -> Result<EnergySplit> {
    energy::energies(graph, emb, data, part)
}

/// Places two vertices at the weighted mean plus/minus one standard
/// deviation along the first principal component. Zero-variance data falls
/// back to the mean offset by half a unit either way on axis 0; the flag
/// reports the fallback.
pub fn pca_initialize(data: &DataSet) -> Result<(Embedding, bool)> {
    if data.is_empty() {
        return Err(Error::InvalidData("cannot initialize from no data".into()));
    }
    let axes = pca::principal_axes(data, 1)?;
    let mean = &axes.mean;
    let (variance, axis) = &axes.axes[0];
    let scale = 1.0 + mean.iter().map(|x| x * x).sum::<f64>();
    let degenerate = *variance <= 1e-24 * scale;
    let rows: Vec<Vec<f64>> = if degenerate {
        let mut lo = mean.clone();
        let mut hi = mean.clone();
        lo[0] -= 0.5;
        hi[0] += 0.5;
        vec![lo, hi]
    } else {
        let sigma = variance.sqrt();
        let place = |sign: f64| {
            mean.iter()
                .zip(axis)
                .map(|(m, u)| m + sign * sigma * u)
                .collect::<Vec<f64>>()
        };
        vec![place(-1.0), place(1.0)]
    };
    Ok((Embedding::from_rows(&rows)?, degenerate))
}
