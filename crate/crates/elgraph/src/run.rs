//! End-to-end runs: load a dataset, initialize, fit or grow, and write the
//! requested artifacts (graph JSON, projection CSV, report JSONL, SVG).

use std::fs;
use std::path::{Path, PathBuf};

use crate::energy::{DataSet, Embedding, EnergySplit};
use crate::error::{Error, Result};
use crate::factorized;
use crate::grammar::{self, GrowthConfig, GrowthReport, Preselect};
use crate::graph::{Edge, ElasticGraph};
use crate::io;
use crate::optimizer::{self, SolverConfig};
use crate::svg;

/// Topology class produced by a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Bisect-only growth of a path: a principal curve.
    Curve,
    /// Both grammar rules: a principal tree.
    Tree,
    /// Factorized growth: a principal cubic complex.
    Complex,
}

/// Everything one CLI invocation needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub weights_col: Option<String>,
    pub lambda: f64,
    pub mu: f64,
    pub mode: Mode,
    /// Number of growth transformations; 0 fits the initialization only.
    pub steps: usize,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub preselect: Option<f64>,
    pub seed: u64,
    pub normalize: bool,
    pub max_factors: usize,
    /// Warm-start graph JSON (with positions) instead of the PCA segment.
    pub graph_in: Option<PathBuf>,
    pub out_graph: Option<PathBuf>,
    pub out_proj: Option<PathBuf>,
    pub out_report: Option<PathBuf>,
    pub out_svg: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            weights_col: None,
            lambda: 0.01,
            mu: 0.1,
            mode: Mode::Tree,
            steps: 0,
            epsilon: 1e-5,
            max_iterations: 100,
            preselect: None,
            seed: 0,
            normalize: false,
            max_factors: 3,
            graph_in: None,
            out_graph: None,
            out_proj: None,
            out_report: None,
            out_svg: None,
        }
    }

    fn growth_config(&self) -> GrowthConfig {
        GrowthConfig {
            rules: match self.mode {
                Mode::Curve => grammar::curve_rules(),
                Mode::Tree | Mode::Complex => grammar::default_rules(),
            },
            max_transformations: self.steps,
            preselect: match self.preselect {
                None => Preselect::Off,
                Some(q) => Preselect::TopFraction(q),
            },
            seed: self.seed,
            lambda: self.lambda,
            mu: self.mu,
            solver: SolverConfig {
                epsilon: self.epsilon,
                max_iterations: self.max_iterations,
                ..SolverConfig::default()
            },
            factor_budget: self.max_factors,
            ..GrowthConfig::default()
        }
    }
}

/// What a run produced, for callers that want more than the exit status.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub vertices: usize,
    pub energy: EnergySplit,
    pub steps_taken: usize,
    /// Complex mode: number of non-trivial factors.
    pub dimension: Option<usize>,
}

fn load_start_state(config: &RunConfig, data: &DataSet) -> Result<(ElasticGraph, Embedding)> {
    match &config.graph_in {
        None => {
            let (emb, _) = optimizer::pca_initialize(data)?;
            let graph = ElasticGraph::new(2, vec![Edge::new(0, 1, config.lambda)], vec![])?;
            Ok((graph, emb))
        }
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let (graph, positions, _) = io::graph_from_json(&text)?;
            let emb = positions.ok_or_else(|| {
                Error::GraphJson(format!(
                    "{}: warm-start graph needs a positions array",
                    path.display()
                ))
            })?;
            if emb.dim() != data.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "graph positions in R^{}, data in R^{}",
                    emb.dim(),
                    data.dim()
                )));
            }
            Ok((graph, emb))
        }
    }
}

struct ArtifactWriter {
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    fn new() -> Self {
        ArtifactWriter { written: Vec::new() }
    }

    fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        fs::write(path, contents).map_err(|e| Error::io(path, e))?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    fn discard_all(&self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
    }
}

/// Runs one configuration end to end. Artifacts are only left on disk when
/// the whole run succeeds; identical config and input produce byte-identical
/// artifacts.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let data = io::load_csv(&config.input, config.weights_col.as_deref())?;
    let data = if config.normalize {
        data.normalize_weights()
    } else {
        data
    };

    let growth = config.growth_config();
    let fitted: Fitted = match config.mode {
        Mode::Curve | Mode::Tree => {
            let (graph0, emb0) = load_start_state(config, &data)?;
            let (graph, emb, report) = grammar::grow(&graph0, &emb0, &data, &growth)?;
            Fitted {
                graph,
                emb,
                report,
                factors: None,
                dimension: None,
            }
        }
        Mode::Complex => {
            if config.graph_in.is_some() {
                return Err(Error::Config(
                    "complex mode does not take a warm-start graph".into(),
                ));
            }
            let (model, report) = factorized::grow_complex(&data, &growth)?;
            let graph = model.expand(growth.vertex_budget)?;
            Fitted {
                graph,
                emb: model.embedding().clone(),
                dimension: Some(model.dimension()),
                factors: Some(model.product().factors().to_vec()),
                report,
            }
        }
    };

    let part = optimizer::partition_data(&fitted.emb, &data)?;
    let energy = crate::energy::energies(&fitted.graph, &fitted.emb, &data, &part)?;

    let mut writer = ArtifactWriter::new();
    let emit = (|| -> Result<()> {
        if let Some(path) = &config.out_graph {
            let text = io::graph_to_json(
                &fitted.graph,
                Some(&fitted.emb),
                fitted.factors.as_deref(),
            );
            writer.write(path, &text)?;
        }
        if let Some(path) = &config.out_proj {
            let records = io::project_points(&fitted.emb, &data, &part)?;
            writer.write(path, &io::projection_csv(&records))?;
        }
        if let Some(path) = &config.out_report {
            writer.write(path, &io::report_jsonl(&fitted.report.steps))?;
        }
        if let Some(path) = &config.out_svg {
            writer.write(path, &svg::emit_svg(&fitted.emb, &data, &fitted.graph)?)?;
        }
        Ok(())
    })();
    if let Err(e) = emit {
        writer.discard_all();
        return Err(e);
    }

    Ok(RunSummary {
        vertices: fitted.graph.vertex_count(),
        energy,
        steps_taken: fitted.report.steps.len(),
        dimension: fitted.dimension,
    })
}

struct Fitted {
    graph: ElasticGraph,
    emb: Embedding,
    report: GrowthReport,
    factors: Option<Vec<ElasticGraph>>,
    dimension: Option<usize>,
}
