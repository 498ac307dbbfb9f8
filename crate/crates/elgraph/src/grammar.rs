//! Production-rule engine over primitive elastic graphs.
//!
//! A rule rewrites the topology at a site; stars are re-derived from the
//! new topology, so every intermediate graph stays primitive. Growth
//! enumerates all rule applications, trial-optimizes each on a copy, applies
//! the one with the lowest resulting total energy, then fully refits. The
//! two rules of the built-in set are "add a node to a node" and "bisect an
//! edge"; further rules can be registered through [`ProductionRule`].

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::energy::{self, sq_dist, DataSet, Embedding, EnergySplit, Partition};
use crate::error::{Error, Result};
use crate::graph::{ElasticGraph, Edge, StarScaling, DEFAULT_VERTEX_BUDGET};
use crate::optimizer::{self, SolverConfig};

/// Where a rule applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    Vertex(usize),
    /// Canonical endpoint order `u < v`.
    Edge(usize, usize),
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Site::Vertex(v) => write!(f, "vertex {v}"),
            Site::Edge(u, v) => write!(f, "edge ({u}, {v})"),
        }
    }
}

/// One concrete rule application: which rule of the rule set, and where.
/// Ordering is the canonical enumeration order (rules first, then sites).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Application {
    pub rule_index: usize,
    pub site: Site,
}

/// Initial position recipe for a vertex created by a rewrite, expressed
/// over pre-rewrite vertices. This keeps placement independent of where the
/// positions live, so products can apply the same recipe slice-wise.
#[derive(Debug, Clone, PartialEq)]
pub enum PlacementStencil {
    /// Linear combination of existing vertex positions.
    Affine(Vec<(usize, f64)>),
    /// Position of an isolated vertex, nudged along axis 0 by the
    /// configured offset.
    OffsetFrom(usize),
}

pub(crate) fn stencil_position<'a, F>(
    stencil: &PlacementStencil,
    dim: usize,
    isolated_offset: f64,
    row: F,
) -> Vec<f64>
where
    F: Fn(usize) -> &'a [f64],
{
    match stencil {
        PlacementStencil::Affine(terms) => {
            let mut pos = vec![0.0; dim];
            for &(v, c) in terms {
                for (acc, x) in pos.iter_mut().zip(row(v)) {
                    *acc += c * x;
                }
            }
            pos
        }
        PlacementStencil::OffsetFrom(v) => {
            let mut pos = row(*v).to_vec();
            pos[0] += isolated_offset;
            pos
        }
    }
}

/// Result of a structural rewrite: the new graph, plus one placement
/// stencil per appended vertex (new vertices take indices `n, n+1, ...`).
#[derive(Debug, Clone)]
pub struct RewriteOutcome {
    pub graph: ElasticGraph,
    pub placements: Vec<PlacementStencil>,
}

/// Moduli and placement scales given to rewrites.
#[derive(Debug, Clone, Copy)]
pub struct ElasticDefaults {
    pub lambda: f64,
    pub mu: f64,
    pub star_scaling: StarScaling,
    /// Nudge distance for vertices added to an isolated vertex
    /// (1e-3 of the data bounding-box diameter).
    pub isolated_offset: f64,
}

/// A production rule over primitive elastic graphs.
pub trait ProductionRule: Send + Sync {
    fn id(&self) -> &'static str;

    /// All sites the rule applies to, in canonical order.
    fn sites(&self, graph: &ElasticGraph) -> Vec<Site>;

    /// Rewrites the topology at `site`. The result must be primitive.
    fn rewrite(
        &self,
        graph: &ElasticGraph,
        site: Site,
        defaults: &ElasticDefaults,
    ) -> Result<RewriteOutcome>;

    /// Energy of the matched copy with its incident edges and stars plus
    /// the approximation energy it carries; the preselection score.
    fn local_energy(
        &self,
        graph: &ElasticGraph,
        emb: &Embedding,
        data: &DataSet,
        part: &Partition,
        site: Site,
    ) -> Result<f64>;
}

fn cluster_approx_energy(
    emb: &Embedding,
    data: &DataSet,
    part: &Partition,
    vertex: usize,
) -> f64 {
    let mut acc = 0.0;
    for p in 0..data.len() {
        if part.owner(p) == vertex {
            acc += data.weight(p) * sq_dist(data.point(p), emb.row(vertex));
        }
    }
    acc
}

/// "Add a node to a node": appends a vertex `z` and the edge `(y, z)`.
/// `z` starts at the extrapolation `2 phi(y) - centroid(phi(neighbors))`,
/// which leaves the new star at `y` unstressed.
#[derive(Debug, Clone, Copy, Default)]
pub struct AddNode;

impl ProductionRule for AddNode {
    fn id(&self) -> &'static str {
        "add_node"
    }

    fn sites(&self, graph: &ElasticGraph) -> Vec<Site> {
        (0..graph.vertex_count()).map(Site::Vertex).collect()
    }

    fn rewrite(
        &self,
        graph: &ElasticGraph,
        site: Site,
        defaults: &ElasticDefaults,
    ) -> Result<RewriteOutcome> {
        let Site::Vertex(y) = site else {
            return Err(Error::InvalidArgument(format!(
                "add_node expects a vertex site, got {site}"
            )));
        };
        let n = graph.vertex_count();
        if y >= n {
            return Err(Error::InvalidArgument(format!(
                "add_node site {y} out of range"
            )));
        }
        let mut edges = graph.edges().to_vec();
        edges.push(Edge::new(y, n, defaults.lambda));
        let rewritten = ElasticGraph::new(n + 1, edges, vec![])?
            .with_primitive_stars_scaled(defaults.mu, defaults.star_scaling)?;

        let neighbors = &graph.adjacency()[y];
        let placement = if neighbors.is_empty() {
            PlacementStencil::OffsetFrom(y)
        } else {
            let c = 1.0 / neighbors.len() as f64;
            let mut terms = vec![(y, 2.0)];
            terms.extend(neighbors.iter().map(|&b| (b, -c)));
            PlacementStencil::Affine(terms)
        };
        Ok(RewriteOutcome {
            graph: rewritten,
            placements: vec![placement],
        })
    }

    fn local_energy(
        &self,
        graph: &ElasticGraph,
        emb: &Embedding,
        data: &DataSet,
        part: &Partition,
        site: Site,
    ) -> Result<f64> {
        let Site::Vertex(y) = site else {
            return Err(Error::InvalidArgument(format!(
                "add_node expects a vertex site, got {site}"
            )));
        };
        let mut acc = cluster_approx_energy(emb, data, part, y);
        for e in graph.edges() {
            if e.u == y || e.v == y {
                acc += e.lambda * sq_dist(emb.row(e.u), emb.row(e.v));
            }
        }
        for s in graph.stars() {
            if s.center == y || s.leaves.contains(&y) {
                acc += s.mu * energy::star_stress_sq(s, emb);
            }
        }
        Ok(acc)
    }
}

/// "Bisect an edge": replaces `(y, y')` by `(y, z)` and `(z, y')` with `z`
/// starting at the midpoint.
#[derive(Debug, Clone, Copy, Default)]
pub struct BisectEdge;

impl ProductionRule for BisectEdge {
    fn id(&self) -> &'static str {
        "bisect_edge"
    }

    fn sites(&self, graph: &ElasticGraph) -> Vec<Site> {
        graph.edges().iter().map(|e| Site::Edge(e.u, e.v)).collect()
    }

    fn rewrite(
        &self,
        graph: &ElasticGraph,
        site: Site,
        defaults: &ElasticDefaults,
    ) -> Result<RewriteOutcome> {
        let Site::Edge(u, v) = site else {
            return Err(Error::InvalidArgument(format!(
                "bisect_edge expects an edge site, got {site}"
            )));
        };
        if !graph.has_edge(u, v) {
            return Err(Error::InvalidArgument(format!(
                "bisect_edge site ({u}, {v}) is not an edge"
            )));
        }
        let n = graph.vertex_count();
        let mut edges: Vec<Edge> = graph
            .edges()
            .iter()
            .filter(|e| e.key() != (u.min(v), u.max(v)))
            .copied()
            .collect();
        edges.push(Edge::new(u, n, defaults.lambda));
        edges.push(Edge::new(v, n, defaults.lambda));
        let rewritten = ElasticGraph::new(n + 1, edges, vec![])?
            .with_primitive_stars_scaled(defaults.mu, defaults.star_scaling)?;
        Ok(RewriteOutcome {
            graph: rewritten,
            placements: vec![PlacementStencil::Affine(vec![(u, 0.5), (v, 0.5)])],
        })
    }

    fn local_energy(
        &self,
        graph: &ElasticGraph,
        emb: &Embedding,
        data: &DataSet,
        part: &Partition,
        site: Site,
    ) -> Result<f64> {
        let Site::Edge(u, v) = site else {
            return Err(Error::InvalidArgument(format!(
                "bisect_edge expects an edge site, got {site}"
            )));
        };
        let lambda = graph
            .edges()
            .iter()
            .find(|e| e.key() == (u.min(v), u.max(v)))
            .map(|e| e.lambda)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("bisect_edge site ({u}, {v}) is not an edge"))
            })?;
        Ok(lambda * sq_dist(emb.row(u), emb.row(v))
            + cluster_approx_energy(emb, data, part, u)
            + cluster_approx_energy(emb, data, part, v))
    }
}

/// The built-in two-rule set.
pub fn default_rules() -> Vec<Arc<dyn ProductionRule>> {
    vec![Arc::new(AddNode), Arc::new(BisectEdge)]
}

/// Rule set restricted to edge bisection; grows paths into finer paths.
pub fn curve_rules() -> Vec<Arc<dyn ProductionRule>> {
    vec![Arc::new(BisectEdge)]
}

/// All applications of all rules, rules in set order and sites in each
/// rule's canonical order.
pub fn enumerate_applications(
    graph: &ElasticGraph,
    rules: &[Arc<dyn ProductionRule>],
) -> Vec<Application> {
    rules
        .iter()
        .enumerate()
        .flat_map(|(rule_index, rule)| {
            rule.sites(graph)
                .into_iter()
                .map(move |site| Application { rule_index, site })
        })
        .collect()
}

/// Applies one rule application, extending the embedding with the rule's
/// placement stencils.
pub fn apply(
    graph: &ElasticGraph,
    emb: &Embedding,
    app: Application,
    rules: &[Arc<dyn ProductionRule>],
    defaults: &ElasticDefaults,
) -> Result<(ElasticGraph, Embedding)> {
    let rule = rules.get(app.rule_index).ok_or_else(|| {
        Error::InvalidArgument(format!("rule index {} out of range", app.rule_index))
    })?;
    let outcome = rule.rewrite(graph, app.site, defaults)?;
    let mut extended = emb.clone();
    for stencil in &outcome.placements {
        let pos = stencil_position(stencil, emb.dim(), defaults.isolated_offset, |v| emb.row(v));
        extended.push_row(&pos);
    }
    if extended.vertex_count() != outcome.graph.vertex_count() {
        return Err(Error::InvalidGraph(format!(
            "rule {} produced {} vertices but {} placements",
            rule.id(),
            outcome.graph.vertex_count(),
            outcome.placements.len()
        )));
    }
    Ok((outcome.graph, extended))
}

/// A trial-optimized rule application.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub application: Application,
    pub energy: EnergySplit,
    pub graph: ElasticGraph,
    pub embedding: Embedding,
    pub partition: Partition,
}

/// Applies `app` to a copy and runs the splitting algorithm under the trial
/// iteration cap; the inputs are untouched.
pub fn evaluate_application(
    graph: &ElasticGraph,
    emb: &Embedding,
    data: &DataSet,
    app: Application,
    rules: &[Arc<dyn ProductionRule>],
    defaults: &ElasticDefaults,
    trial: &SolverConfig,
) -> Result<Candidate> {
    let tag = |source: Error| Error::Evaluation {
        rule: rules
            .get(app.rule_index)
            .map(|r| r.id().to_string())
            .unwrap_or_else(|| format!("rule#{}", app.rule_index)),
        site: app.site.to_string(),
        source: Box::new(source),
    };
    let (candidate_graph, candidate_emb) = apply(graph, emb, app, rules, defaults).map_err(tag)?;
    let (embedding, partition, report) =
        optimizer::fit(&candidate_graph, data, &candidate_emb, trial).map_err(tag)?;
    let energy = *report.trace.last().expect("fit trace is never empty");
    Ok(Candidate {
        application: app,
        energy,
        graph: candidate_graph,
        embedding,
        partition,
    })
}

/// Ranks applications by the local energy of the matched copy, descending,
/// and keeps the top `ceil(q * len)`. `q = 1` returns the list unchanged.
pub fn preselect(
    graph: &ElasticGraph,
    emb: &Embedding,
    data: &DataSet,
    apps: &[Application],
    q: f64,
    rules: &[Arc<dyn ProductionRule>],
) -> Result<Vec<Application>> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "preselect fraction must be in (0, 1], got {q}"
        )));
    }
    if q == 1.0 {
        return Ok(apps.to_vec());
    }
    let part = optimizer::partition_data(emb, data)?;
    let mut scored = Vec::with_capacity(apps.len());
    for &app in apps {
        let rule = rules.get(app.rule_index).ok_or_else(|| {
            Error::InvalidArgument(format!("rule index {} out of range", app.rule_index))
        })?;
        scored.push((rule.local_energy(graph, emb, data, &part, app.site)?, app));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let keep = ((q * apps.len() as f64).ceil() as usize).max(1).min(apps.len());
    Ok(scored.into_iter().take(keep).map(|(_, app)| app).collect())
}

/// Preselection mode of the growth loop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Preselect {
    #[default]
    Off,
    /// Evaluate only the top fraction `q` of applications by local energy.
    TopFraction(f64),
}

/// Growth-loop settings shared by plain and factorized growth.
#[derive(Clone)]
pub struct GrowthConfig {
    pub rules: Vec<Arc<dyn ProductionRule>>,
    /// Number of accepted transformations.
    pub max_transformations: usize,
    /// Stop early once the approximation energy drops this low.
    pub target_approximation: Option<f64>,
    /// Splitting-iteration cap for trial optimization of candidates.
    pub trial_iterations: usize,
    pub preselect: Preselect,
    /// Growth repetitions from jittered initializations; the best final
    /// energy wins. Restart 0 uses the initialization verbatim.
    pub restarts: usize,
    pub seed: u64,
    /// Modulus of edges created by rewrites.
    pub lambda: f64,
    /// Modulus of re-derived stars.
    pub mu: f64,
    pub star_scaling: StarScaling,
    pub solver: SolverConfig,
    /// Factorized growth only: cap on the number of factors.
    pub factor_budget: usize,
    /// Factorized growth only: cap on expanded product vertices.
    pub vertex_budget: usize,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            rules: default_rules(),
            max_transformations: 10,
            target_approximation: None,
            trial_iterations: 5,
            preselect: Preselect::Off,
            restarts: 1,
            seed: 0,
            lambda: 0.01,
            mu: 0.1,
            star_scaling: StarScaling::Uniform,
            solver: SolverConfig::default(),
            factor_budget: 3,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
        }
    }
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.rules.is_empty() {
            return Err(Error::Config("growth needs at least one rule".into()));
        }
        if self.trial_iterations == 0 {
            return Err(Error::Config("trial_iterations must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.factor_budget == 0 {
            return Err(Error::Config("factor_budget must be at least 1".into()));
        }
        if let Preselect::TopFraction(q) = self.preselect {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::Config(format!(
                    "preselect fraction must be in (0, 1], got {q}"
                )));
            }
        }
        for (name, value) in [("lambda", self.lambda), ("mu", self.mu)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn defaults_for(&self, data: &DataSet) -> ElasticDefaults {
        ElasticDefaults {
            lambda: self.lambda,
            mu: self.mu,
            star_scaling: self.star_scaling,
            isolated_offset: 1e-3 * data.bbox_diameter(),
        }
    }

    pub(crate) fn trial_solver(&self) -> SolverConfig {
        SolverConfig {
            max_iterations: self.trial_iterations,
            ..self.solver
        }
    }
}

/// One accepted transformation.
#[derive(Debug, Clone)]
pub struct GrowthStep {
    /// 1-based step number.
    pub step: usize,
    pub rule: String,
    /// Site of the application; `None` for a new product factor.
    pub site: Option<Site>,
    /// Factorized growth: which factor was rewritten.
    pub factor: Option<usize>,
    /// Energies after the step's full refit.
    pub energy: EnergySplit,
    /// Vertex count after the step (expanded count for products).
    pub vertices: usize,
    /// Factorized growth: vertex count per factor.
    pub factor_dims: Option<Vec<usize>>,
    /// Factorized growth: number of non-trivial factors.
    pub dimension: Option<usize>,
}

/// Record of one growth run.
#[derive(Debug, Clone)]
pub struct GrowthReport {
    pub steps: Vec<GrowthStep>,
    pub restarts: usize,
    pub seed: u64,
    pub final_energy: EnergySplit,
}

pub(crate) fn jitter_embedding(
    emb: &Embedding,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> Embedding {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let data: Vec<f64> = emb
        .as_slice()
        .iter()
        .map(|x| x + scale * normal.sample(rng))
        .collect();
    Embedding::from_flat(emb.vertex_count(), emb.dim(), data).expect("finite jitter")
}

/// Grows `graph0` by repeatedly applying the rule application with the
/// largest energy descent, refitting fully after each accepted step. Stops
/// at `max_transformations` or at the target approximation energy.
pub fn grow(
    graph0: &ElasticGraph,
    emb0: &Embedding,
    data: &DataSet,
    config: &GrowthConfig,
) -> Result<(ElasticGraph, Embedding, GrowthReport)> {
    config.validate()?;
    if !graph0.is_primitive() {
        return Err(Error::InvalidArgument(
            "grow requires a primitive elastic graph".into(),
        ));
    }
    let defaults = config.defaults_for(data);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let jitter_scale = 1e-2 * data.bbox_diameter();
    let mut best: Option<(ElasticGraph, Embedding, GrowthReport)> = None;
    for restart in 0..config.restarts {
        let emb_start = if restart == 0 {
            emb0.clone()
        } else {
            jitter_embedding(emb0, jitter_scale, &mut rng)
        };
        let result = grow_once(graph0, &emb_start, data, config, &defaults)?;
        let improves = best
            .as_ref()
            .map(|(_, _, b)| result.2.final_energy.total() < b.final_energy.total())
            .unwrap_or(true);
        if improves {
            best = Some(result);
        }
    }
    let mut out = best.expect("at least one restart ran");
    out.2.restarts = config.restarts;
    out.2.seed = config.seed;
    Ok(out)
}

fn grow_once(
    graph0: &ElasticGraph,
    emb_start: &Embedding,
    data: &DataSet,
    config: &GrowthConfig,
    defaults: &ElasticDefaults,
) -> Result<(ElasticGraph, Embedding, GrowthReport)> {
    let mut graph = graph0.clone();
    let (mut emb, _, report) = optimizer::fit(&graph, data, emb_start, &config.solver)?;
    let mut current = *report.trace.last().expect("fit trace is never empty");
    let trial = config.trial_solver();
    let mut steps = Vec::new();

    for step in 1..=config.max_transformations {
        if let Some(target) = config.target_approximation {
            if current.approximation <= target {
                break;
            }
        }
        let apps = enumerate_applications(&graph, &config.rules);
        if apps.is_empty() {
            break;
        }
        let survivors = match config.preselect {
            Preselect::Off => apps,
            Preselect::TopFraction(q) => {
                preselect(&graph, &emb, data, &apps, q, &config.rules)?
            }
        };
        let candidates: Vec<Candidate> = survivors
            .par_iter()
            .map(|&app| evaluate_application(&graph, &emb, data, app, &config.rules, defaults, &trial))
            .collect::<Result<_>>()?;
        let winner = candidates
            .into_iter()
            .min_by(|a, b| {
                a.energy
                    .total()
                    .total_cmp(&b.energy.total())
                    .then(a.application.cmp(&b.application))
            })
            .expect("survivor list is never empty");

        graph = winner.graph;
        debug_assert!(graph.is_primitive() && graph.is_connected());
        let (next_emb, next_part, _) =
            optimizer::fit(&graph, data, &winner.embedding, &config.solver)?;
        emb = next_emb;
        current = energy::energies(&graph, &emb, data, &next_part)?;
        steps.push(GrowthStep {
            step,
            rule: config.rules[winner.application.rule_index].id().to_string(),
            site: Some(winner.application.site),
            factor: None,
            energy: current,
            vertices: graph.vertex_count(),
            factor_dims: None,
            dimension: None,
        });
    }

    let report = GrowthReport {
        steps,
        restarts: 1,
        seed: config.seed,
        final_energy: current,
    };
    Ok((graph, emb, report))
}
