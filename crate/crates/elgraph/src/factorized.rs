//! Grammar-driven growth for factorized elastic graphs.
//!
//! Transformations are applied to the factors of a Cartesian product while
//! optimization always runs on the expanded product. A dedicated pseudo-rule
//! appends a new single-edge factor, so the number of non-trivial factors —
//! the dimension of the resulting cubic complex — is itself selected by
//! energy descent.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{self, DataSet, Embedding, Partition};
use crate::error::{Error, Result};
use crate::grammar::{
    self, jitter_embedding, stencil_position, Application, ElasticDefaults, GrowthConfig,
    GrowthReport, GrowthStep, ProductionRule,
};
use crate::graph::{ElasticGraph, Edge, ProductGraph};
use crate::optimizer::{self};

/// A product of primitive elastic factors together with the embedding of
/// its expanded vertex set.
#[derive(Debug, Clone)]
pub struct FactorizedModel {
    product: ProductGraph,
    embedding: Embedding,
}

impl FactorizedModel {
    pub fn new(product: ProductGraph, embedding: Embedding) -> Result<Self> {
        let expected = product
            .checked_vertex_count()
            .ok_or(Error::ExpansionTooLarge {
                vertices: usize::MAX,
                budget: usize::MAX,
            })?;
        if embedding.vertex_count() != expected {
            return Err(Error::DimensionMismatch(format!(
                "product expands to {} vertices, embedding has {}",
                expected,
                embedding.vertex_count()
            )));
        }
        Ok(FactorizedModel { product, embedding })
    }

    pub fn product(&self) -> &ProductGraph {
        &self.product
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn factor_dims(&self) -> Vec<usize> {
        self.product.dims()
    }

    /// Number of factors with at least two vertices: the dimension of the
    /// cubic complex the model represents.
    pub fn dimension(&self) -> usize {
        self.product
            .factors()
            .iter()
            .filter(|f| f.vertex_count() >= 2)
            .count()
    }

    pub fn expand(&self, vertex_budget: usize) -> Result<ElasticGraph> {
        self.product.expand_with_budget(vertex_budget)
    }
}

/// One candidate move of factorized growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorApplication {
    /// Apply a rule inside one factor.
    Local { factor: usize, app: Application },
    /// Append a new single-edge factor.
    NewFactor,
}

/// Factor-local applications of every rule on every factor, in factor order,
/// followed by the new-factor move. The new-factor pseudo-rule applies only
/// when the factor budget allows it and some vertex still has residual
/// spread orthogonal to the complex (see [`width_seed_directions`]); a
/// complex that already explains the data's spread admits no new dimension.
pub fn enumerate_factor_applications(
    model: &FactorizedModel,
    data: &DataSet,
    part: &Partition,
    rules: &[std::sync::Arc<dyn ProductionRule>],
    config: &GrowthConfig,
) -> Result<Vec<FactorApplication>> {
    let mut apps = Vec::new();
    for (factor, graph) in model.product.factors().iter().enumerate() {
        for app in grammar::enumerate_applications(graph, rules) {
            apps.push(FactorApplication::Local { factor, app });
        }
    }
    if model.product.factor_count() < config.factor_budget {
        let defaults = config.defaults_for(data);
        let seeds = width_seed_directions(model, data, part, &defaults, config.vertex_budget)?;
        if seeds.iter().any(Option::is_some) {
            apps.push(FactorApplication::NewFactor);
        }
    }
    Ok(apps)
}

/// Rewrites one factor and re-expands. Embeddings of pre-existing product
/// vertices are preserved by multi-index identity; each new slice is
/// initialized by the rule's placement stencil applied slice-wise.
pub fn apply_to_factor(
    model: &FactorizedModel,
    factor: usize,
    app: Application,
    rules: &[std::sync::Arc<dyn ProductionRule>],
    defaults: &ElasticDefaults,
    vertex_budget: usize,
) -> Result<FactorizedModel> {
    let factors = model.product.factors();
    if factor >= factors.len() {
        return Err(Error::InvalidArgument(format!(
            "factor index {factor} out of range for {} factors",
            factors.len()
        )));
    }
    let rule = rules.get(app.rule_index).ok_or_else(|| {
        Error::InvalidArgument(format!("rule index {} out of range", app.rule_index))
    })?;
    let outcome = rule.rewrite(&factors[factor], app.site, defaults)?;
    let old_factor_count = factors[factor].vertex_count();

    let old_dims = model.product.dims();
    let old_strides = model.product.strides();
    let old_total = model.embedding.vertex_count();

    let mut new_factors = factors.to_vec();
    new_factors[factor] = outcome.graph;
    let new_product = ProductGraph::new(new_factors)?;
    let new_total = new_product
        .checked_vertex_count()
        .ok_or(Error::ExpansionTooLarge {
            vertices: usize::MAX,
            budget: vertex_budget,
        })?;
    if new_total > vertex_budget {
        return Err(Error::ExpansionTooLarge {
            vertices: new_total,
            budget: vertex_budget,
        });
    }
    let new_strides = new_product.strides();
    let dim = model.embedding.dim();
    let mut flat = vec![0.0; new_total * dim];

    // Pass 1: carry every existing product vertex over by multi-index.
    for old_flat in 0..old_total {
        let mut new_flat = 0usize;
        for j in 0..old_dims.len() {
            let coord = (old_flat / old_strides[j]) % old_dims[j];
            new_flat += coord * new_strides[j];
        }
        flat[new_flat * dim..(new_flat + 1) * dim]
            .copy_from_slice(model.embedding.row(old_flat));
    }

    // Pass 2: place the new slices, one context at a time.
    for copy in new_product.copies_of_factor(factor)? {
        for (s, stencil) in outcome.placements.iter().enumerate() {
            let target = copy[old_factor_count + s];
            let pos = stencil_position(stencil, dim, defaults.isolated_offset, |fv| {
                &flat[copy[fv] * dim..(copy[fv] + 1) * dim]
            });
            flat[target * dim..(target + 1) * dim].copy_from_slice(&pos);
        }
    }

    FactorizedModel::new(new_product, Embedding::from_flat(new_total, dim, flat)?)
}

/// Fraction of a cluster's residual variance that must lie orthogonal to
/// the local tangent space before a duplicate slice is seeded away from its
/// vertex. Below it the residuals carry no direction the complex fails to
/// explain.
const WIDTH_SEED_RATIO: f64 = 0.05;

/// Per-vertex seed offsets for a new trivial factor: `isolated_offset`
/// along the leading principal direction of the vertex cluster's residuals
/// orthogonal to the local tangent space (the span of the incident edges).
/// `None` where the cluster is empty or its residual variance lies
/// essentially inside the tangent space — there the data shows no width the
/// new dimension could explain.
pub fn width_seed_directions(
    model: &FactorizedModel,
    data: &DataSet,
    part: &Partition,
    defaults: &ElasticDefaults,
    vertex_budget: usize,
) -> Result<Vec<Option<Vec<f64>>>> {
    let total = model.embedding.vertex_count();
    if part.vertex_count() != total || part.len() != data.len() {
        return Err(Error::DimensionMismatch(
            "partition does not match the expanded model".into(),
        ));
    }
    let dim = model.embedding.dim();
    let adjacency = model.product.expand_with_budget(vertex_budget)?.adjacency();

    // Weighted residual covariance per vertex.
    let mut cov = vec![DMatrix::<f64>::zeros(dim, dim); total];
    let mut weight = vec![0.0; total];
    for p in 0..data.len() {
        let o = part.owner(p);
        let w = data.weight(p);
        weight[o] += w;
        let phi = model.embedding.row(o);
        let r: Vec<f64> = data.point(p).iter().zip(phi).map(|(x, f)| x - f).collect();
        for i in 0..dim {
            for j in 0..dim {
                cov[o][(i, j)] += w * r[i] * r[j];
            }
        }
    }

    let delta = defaults.isolated_offset;
    let mut seeds = Vec::with_capacity(total);
    for v in 0..total {
        if weight[v] <= 0.0 {
            seeds.push(None);
            continue;
        }
        let row = model.embedding.row(v);
        // Orthonormal basis of the local tangent space.
        let mut tangent: Vec<DVector<f64>> = Vec::new();
        for &nbr in &adjacency[v] {
            let mut t = DVector::from_iterator(
                dim,
                model.embedding.row(nbr).iter().zip(row).map(|(a, b)| a - b),
            );
            for b in &tangent {
                let proj = b.dot(&t);
                t -= b * proj;
            }
            let norm = t.norm();
            if norm > 1e-9 * (1.0 + delta) {
                tangent.push(t / norm);
            }
        }
        let mut projected = cov[v].clone() / weight[v];
        for b in &tangent {
            let p = DMatrix::identity(dim, dim) - b * b.transpose();
            projected = &p * projected * &p;
        }
        let eig = projected.symmetric_eigen();
        let lead = (0..dim)
            .max_by(|&a, &b| {
                eig.eigenvalues[a]
                    .total_cmp(&eig.eigenvalues[b])
                    .then(b.cmp(&a))
            })
            .expect("dim >= 1");
        let total_variance = cov[v].trace() / weight[v];
        if eig.eigenvalues[lead] <= 0.0
            || eig.eigenvalues[lead] < WIDTH_SEED_RATIO * total_variance
        {
            seeds.push(None);
            continue;
        }
        let mut direction: Vec<f64> = eig.eigenvectors.column(lead).iter().copied().collect();
        if let Some(&first) = direction.iter().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                for x in direction.iter_mut() {
                    *x = -*x;
                }
            }
        }
        for x in direction.iter_mut() {
            *x *= delta;
        }
        seeds.push(Some(direction));
    }
    Ok(seeds)
}

/// Appends a single-edge factor. Each vertex's duplicate slice starts at
/// the vertex plus its width seed offset; vertices without a seed keep a
/// coincident duplicate.
pub fn add_trivial_factor(
    model: &FactorizedModel,
    data: &DataSet,
    part: &Partition,
    defaults: &ElasticDefaults,
    vertex_budget: usize,
) -> Result<FactorizedModel> {
    let old_total = model.embedding.vertex_count();
    let new_total = old_total.checked_mul(2).ok_or(Error::ExpansionTooLarge {
        vertices: usize::MAX,
        budget: vertex_budget,
    })?;
    if new_total > vertex_budget {
        return Err(Error::ExpansionTooLarge {
            vertices: new_total,
            budget: vertex_budget,
        });
    }
    let seeds = width_seed_directions(model, data, part, defaults, vertex_budget)?;
    let dim = model.embedding.dim();

    let mut flat = vec![0.0; new_total * dim];
    for v in 0..old_total {
        let row = model.embedding.row(v);
        flat[v * 2 * dim..(v * 2 + 1) * dim].copy_from_slice(row);
        let offset_row = &mut flat[(v * 2 + 1) * dim..(v * 2 + 2) * dim];
        offset_row.copy_from_slice(row);
        if let Some(offset) = &seeds[v] {
            for (x, d) in offset_row.iter_mut().zip(offset) {
                *x += d;
            }
        }
    }

    let mut new_factors = model.product.factors().to_vec();
    new_factors.push(ElasticGraph::new(
        2,
        vec![Edge::new(0, 1, defaults.lambda)],
        vec![],
    )?);
    FactorizedModel::new(
        ProductGraph::new(new_factors)?,
        Embedding::from_flat(new_total, dim, flat)?,
    )
}

fn describe(app: &FactorApplication, rules: &[std::sync::Arc<dyn ProductionRule>]) -> (String, Option<grammar::Site>, Option<usize>) {
    match app {
        FactorApplication::Local { factor, app } => (
            rules
                .get(app.rule_index)
                .map(|r| r.id().to_string())
                .unwrap_or_else(|| format!("rule#{}", app.rule_index)),
            Some(app.site),
            Some(*factor),
        ),
        FactorApplication::NewFactor => ("new_factor".to_string(), None, None),
    }
}

/// Grows a principal cubic complex from a PCA-initialized segment: the same
/// largest-descent selection loop as plain growth, but over factor
/// applications, with every optimization running on the expanded product.
pub fn grow_complex(data: &DataSet, config: &GrowthConfig) -> Result<(FactorizedModel, GrowthReport)> {
    config.validate()?;
    let defaults = config.defaults_for(data);
    let (emb0, _) = optimizer::pca_initialize(data)?;
    let seed_factor = ElasticGraph::new(2, vec![Edge::new(0, 1, config.lambda)], vec![])?;
    let product = ProductGraph::new(vec![seed_factor])?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let jitter_scale = 1e-2 * data.bbox_diameter();
    let mut best: Option<(FactorizedModel, GrowthReport)> = None;
    for restart in 0..config.restarts {
        let emb_start = if restart == 0 {
            emb0.clone()
        } else {
            jitter_embedding(&emb0, jitter_scale, &mut rng)
        };
        let model = FactorizedModel::new(product.clone(), emb_start)?;
        let result = grow_complex_once(model, data, config, &defaults)?;
        let improves = best
            .as_ref()
            .map(|(_, b)| result.1.final_energy.total() < b.final_energy.total())
            .unwrap_or(true);
        if improves {
            best = Some(result);
        }
    }
    let mut out = best.expect("at least one restart ran");
    out.1.restarts = config.restarts;
    out.1.seed = config.seed;
    Ok(out)
}

fn grow_complex_once(
    mut model: FactorizedModel,
    data: &DataSet,
    config: &GrowthConfig,
    defaults: &ElasticDefaults,
) -> Result<(FactorizedModel, GrowthReport)> {
    let trial = config.trial_solver();

    let expanded = model.expand(config.vertex_budget)?;
    let (emb, _, report) = optimizer::fit(&expanded, data, &model.embedding, &config.solver)?;
    model.embedding = emb;
    let mut current = *report.trace.last().expect("fit trace is never empty");
    let mut steps = Vec::new();

    for step in 1..=config.max_transformations {
        if let Some(target) = config.target_approximation {
            if current.approximation <= target {
                break;
            }
        }
        let part = optimizer::partition_data(&model.embedding, data)?;
        let apps = enumerate_factor_applications(&model, data, &part, &config.rules, config)?;
        if apps.is_empty() {
            break;
        }

        // Trial-optimize every candidate on its own copy.
        let candidates: Vec<(usize, FactorizedModel, energy::EnergySplit)> = apps
            .par_iter()
            .enumerate()
            .map(|(idx, app)| {
                let candidate = match app {
                    FactorApplication::Local { factor, app } => apply_to_factor(
                        &model,
                        *factor,
                        *app,
                        &config.rules,
                        defaults,
                        config.vertex_budget,
                    )?,
                    FactorApplication::NewFactor => {
                        add_trivial_factor(&model, data, &part, defaults, config.vertex_budget)?
                    }
                };
                let expanded = candidate.expand(config.vertex_budget)?;
                let (emb, _, report) =
                    optimizer::fit(&expanded, data, &candidate.embedding, &trial)?;
                let energy = *report.trace.last().expect("fit trace is never empty");
                Ok((
                    idx,
                    FactorizedModel {
                        product: candidate.product,
                        embedding: emb,
                    },
                    energy,
                ))
            })
            .collect::<Result<_>>()?;

        let (winner_idx, winner_model, _) = candidates
            .into_iter()
            .min_by(|a, b| a.2.total().total_cmp(&b.2.total()).then(a.0.cmp(&b.0)))
            .expect("candidate list is never empty");

        debug_assert!(winner_model
            .product
            .factors()
            .iter()
            .all(|f| f.is_primitive() && f.is_connected()));
        let expanded = winner_model.expand(config.vertex_budget)?;
        let (emb, part, _) =
            optimizer::fit(&expanded, data, &winner_model.embedding, &config.solver)?;
        model = FactorizedModel {
            product: winner_model.product,
            embedding: emb,
        };
        current = energy::energies(&expanded, &model.embedding, data, &part)?;

        let (rule, site, factor) = describe(&apps[winner_idx], &config.rules);
        steps.push(GrowthStep {
            step,
            rule,
            site,
            factor,
            energy: current,
            vertices: model.embedding.vertex_count(),
            factor_dims: Some(model.factor_dims()),
            dimension: Some(model.dimension()),
        });
    }

    let report = GrowthReport {
        steps,
        restarts: 1,
        seed: config.seed,
        final_energy: current,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{default_rules, Site};
    use crate::graph::testutil::{p2, path};
    use crate::graph::DEFAULT_VERTEX_BUDGET;

    fn defaults() -> ElasticDefaults {
        ElasticDefaults {
            lambda: 0.01,
            mu: 0.1,
            star_scaling: crate::graph::StarScaling::Uniform,
            isolated_offset: 1e-3,
        }
    }

    fn model_p3_p2() -> FactorizedModel {
        let product = ProductGraph::new(vec![path(3, 0.01, 0.1), p2(0.01)]).unwrap();
        // Multi-index (a, b) at position (a, b) in the plane.
        let rows: Vec<Vec<f64>> = (0..3)
            .flat_map(|a| (0..2).map(move |b| vec![a as f64, b as f64]))
            .collect();
        FactorizedModel::new(product, Embedding::from_rows(&rows).unwrap()).unwrap()
    }

    fn wide_data() -> DataSet {
        let rows: Vec<Vec<f64>> = (0..8)
            .flat_map(|i| {
                (0..4).map(move |j| vec![i as f64 / 7.0, j as f64 / 3.0 - 0.5])
            })
            .collect();
        DataSet::from_rows(&rows, None).unwrap()
    }

    fn enumerate(
        model: &FactorizedModel,
        data: &DataSet,
        budget: usize,
    ) -> Vec<FactorApplication> {
        let part = optimizer::partition_data(model.embedding(), data).unwrap();
        let config = GrowthConfig {
            factor_budget: budget,
            ..GrowthConfig::default()
        };
        enumerate_factor_applications(model, data, &part, &config.rules, &config).unwrap()
    }

    #[test]
    fn enumeration_covers_factors_and_budget() {
        let single = FactorizedModel::new(
            ProductGraph::new(vec![p2(1.0)]).unwrap(),
            Embedding::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        // Planar data around a segment: 2 add_node + 1 bisect, plus the
        // new-factor move (the data has unexplained width).
        let data = wide_data();
        assert_eq!(enumerate(&single, &data, 3).len(), 4);
        // Budget reached: no new-factor move.
        assert_eq!(enumerate(&single, &data, 1).len(), 3);

        // Data tight on the segment: the new-factor move does not apply.
        let narrow: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64 / 11.0, 1e-6 * ((i % 3) as f64 - 1.0)])
            .collect();
        let narrow = DataSet::from_rows(&narrow, None).unwrap();
        assert_eq!(enumerate(&single, &narrow, 3).len(), 3);

        // A plane-filling product in the plane: factor-local moves only.
        let double = model_p3_p2();
        let plane: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![2.0 * (i % 8) as f64 / 7.0, (i / 8) as f64 / 4.0])
            .collect();
        let plane = DataSet::from_rows(&plane, None).unwrap();
        assert_eq!(enumerate(&double, &plane, 3).len(), 8);
    }

    #[test]
    fn bisecting_second_factor_adds_midpoint_slice() {
        let rules = default_rules();
        let model = model_p3_p2();
        let next = apply_to_factor(
            &model,
            1,
            Application { rule_index: 1, site: Site::Edge(0, 1) },
            &rules,
            &defaults(),
            DEFAULT_VERTEX_BUDGET,
        )
        .unwrap();
        assert_eq!(next.factor_dims(), vec![3, 3]);
        assert_eq!(next.embedding().vertex_count(), 9);
        // Preserved vertices keep their positions by multi-index.
        for a in 0..3 {
            for b in 0..2 {
                let old = model.embedding().row(a * 2 + b);
                let new = next.embedding().row(a * 3 + b);
                assert_eq!(old, new);
            }
        }
        // The new slice (factor-2 vertex index 2) sits midway between
        // slices 0 and 1 of the old product.
        for a in 0..3 {
            assert_eq!(next.embedding().row(a * 3 + 2), &[a as f64, 0.5]);
        }
    }

    #[test]
    fn adding_node_to_first_factor_extrapolates_slice() {
        let rules = default_rules();
        let model = model_p3_p2();
        let next = apply_to_factor(
            &model,
            0,
            Application { rule_index: 0, site: Site::Vertex(2) },
            &rules,
            &defaults(),
            DEFAULT_VERTEX_BUDGET,
        )
        .unwrap();
        assert_eq!(next.factor_dims(), vec![4, 2]);
        // New slice: 2 * phi(a=2) - phi(a=1), per context b.
        for b in 0..2 {
            assert_eq!(next.embedding().row(3 * 2 + b), &[3.0, b as f64]);
        }
    }

    #[test]
    fn expansion_counts_satisfy_copy_formula() {
        let rules = default_rules();
        let model = model_p3_p2();
        let next = apply_to_factor(
            &model,
            1,
            Application { rule_index: 1, site: Site::Edge(0, 1) },
            &rules,
            &defaults(),
            DEFAULT_VERTEX_BUDGET,
        )
        .unwrap();
        let expanded = next.expand(DEFAULT_VERTEX_BUDGET).unwrap();
        let product = next.product();
        let mut expected_edges = 0;
        let mut expected_stars = 0;
        for (i, f) in product.factors().iter().enumerate() {
            let copies = product.copies_of_factor(i).unwrap().len();
            expected_edges += copies * f.edges().len();
            expected_stars += copies * f.stars().len();
        }
        assert_eq!(expanded.edges().len(), expected_edges);
        assert_eq!(expanded.stars().len(), expected_stars);
    }

    #[test]
    fn new_factor_doubles_vertices_and_fit_improves_on_planar_data() {
        // Data fills a square; a path along x cannot explain the y spread.
        let rows: Vec<Vec<f64>> = (0..10)
            .flat_map(|i| {
                (0..5).map(move |j| vec![i as f64 / 9.0, j as f64 / 4.0 - 0.5])
            })
            .collect();
        let data = DataSet::from_rows(&rows, None).unwrap();
        let factor = path(4, 0.01, 0.1);
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64 / 3.0, 0.0]).collect();
        let model = FactorizedModel::new(
            ProductGraph::new(vec![factor]).unwrap(),
            Embedding::from_rows(&rows).unwrap(),
        )
        .unwrap();
        let d = ElasticDefaults {
            isolated_offset: 1e-3 * data.bbox_diameter(),
            ..defaults()
        };
        let part = optimizer::partition_data(model.embedding(), &data).unwrap();
        let expanded = model.expand(DEFAULT_VERTEX_BUDGET).unwrap();
        let before = energy::total_energy(&expanded, model.embedding(), &data, &part).unwrap();

        let next = add_trivial_factor(&model, &data, &part, &d, DEFAULT_VERTEX_BUDGET).unwrap();
        assert_eq!(next.factor_dims(), vec![4, 2]);
        assert_eq!(next.embedding().vertex_count(), 8);
        // Slice 0 preserved exactly.
        for v in 0..4 {
            assert_eq!(next.embedding().row(v * 2), model.embedding().row(v));
        }
        let expanded = next.expand(DEFAULT_VERTEX_BUDGET).unwrap();
        let cfg = crate::optimizer::SolverConfig::default();
        let (emb, part, _) = optimizer::fit(&expanded, &data, next.embedding(), &cfg).unwrap();
        let after = energy::total_energy(&expanded, &emb, &data, &part).unwrap();
        assert!(
            after < before,
            "fit after adding a factor should reduce energy: {before} -> {after}"
        );
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let rules = default_rules();
        let model = model_p3_p2();
        let err = apply_to_factor(
            &model,
            0,
            Application { rule_index: 0, site: Site::Vertex(0) },
            &rules,
            &defaults(),
            7,
        );
        assert!(matches!(err, Err(Error::ExpansionTooLarge { vertices: 8, budget: 7 })));
    }

    fn segment_data() -> DataSet {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64 / 29.0;
                vec![t, 0.03 * (((i * 13) % 17) as f64 / 17.0 - 0.5)]
            })
            .collect();
        DataSet::from_rows(&rows, None).unwrap()
    }

    #[test]
    fn factor_budget_one_matches_plain_growth() {
        let data = segment_data();
        let config = GrowthConfig {
            max_transformations: 5,
            factor_budget: 1,
            ..GrowthConfig::default()
        };
        let (model, complex_report) = grow_complex(&data, &config).unwrap();
        assert_eq!(model.dimension(), 1);

        let (emb0, _) = optimizer::pca_initialize(&data).unwrap();
        let g0 = ElasticGraph::new(2, vec![Edge::new(0, 1, config.lambda)], vec![]).unwrap();
        let (_, _, plain_report) = grammar::grow(&g0, &emb0, &data, &config).unwrap();

        let complex_seq: Vec<_> = complex_report
            .steps
            .iter()
            .map(|s| (s.rule.clone(), s.site))
            .collect();
        let plain_seq: Vec<_> = plain_report
            .steps
            .iter()
            .map(|s| (s.rule.clone(), s.site))
            .collect();
        assert_eq!(complex_seq, plain_seq);
        assert!(
            (complex_report.final_energy.total() - plain_report.final_energy.total()).abs()
                <= 1e-12 * (1.0 + plain_report.final_energy.total().abs())
        );
    }
}
