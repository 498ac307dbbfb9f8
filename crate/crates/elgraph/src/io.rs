//! File formats: CSV ingestion, graph JSON, per-point projection records,
//! and the growth-report JSONL.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::energy::{sq_dist, DataSet, Embedding, Partition};
use crate::error::{Error, Result};
use crate::grammar::{GrowthStep, Site};
use crate::graph::{Edge, ElasticGraph, ProductGraph, Star};

/// Reads a dataset from CSV. All columns are numeric except an optional
/// weight column selected by header name; a header row is assumed when any
/// cell of the first row is non-numeric. Weights default to 1.
pub fn load_csv(path: impl AsRef<Path>, weight_col: Option<&str>) -> Result<DataSet> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, weight_col)
}

/// CSV parsing behind [`load_csv`]; row numbers in errors are 1-based file
/// lines, counting the header.
pub fn parse_csv(reader: impl Read, weight_col: Option<&str>) -> Result<DataSet> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = Vec::new();
    for record in csv_reader.records() {
        records.push(record.map_err(|e| Error::Csv(e.to_string()))?);
    }
    if records.is_empty() {
        return Err(Error::Csv("no rows".into()));
    }

    let arity = records[0].len();
    let has_header = records[0].iter().any(|cell| cell.parse::<f64>().is_err());
    let data_start = usize::from(has_header);
    if records.len() == data_start {
        return Err(Error::Csv("no data rows".into()));
    }

    let weight_idx = match weight_col {
        None => None,
        Some(name) => {
            if !has_header {
                return Err(Error::Csv(format!(
                    "weight column '{name}' requires a header row"
                )));
            }
            let idx = records[0]
                .iter()
                .position(|cell| cell == name)
                .ok_or_else(|| Error::Csv(format!("weight column '{name}' not found")))?;
            if arity == 1 {
                return Err(Error::Csv(
                    "weight column leaves no coordinate columns".into(),
                ));
            }
            Some(idx)
        }
    };

    let mut rows = Vec::with_capacity(records.len() - data_start);
    let mut weights = weight_idx.map(|_| Vec::with_capacity(records.len() - data_start));
    for (offset, record) in records[data_start..].iter().enumerate() {
        let row_number = data_start + offset + 1;
        if record.len() != arity {
            return Err(Error::CsvRow {
                row: row_number,
                msg: format!("expected {arity} fields, got {}", record.len()),
            });
        }
        let mut coords = Vec::with_capacity(arity - usize::from(weight_idx.is_some()));
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::CsvRow {
                row: row_number,
                msg: format!("non-numeric value '{cell}' in column {}", col + 1),
            })?;
            if !value.is_finite() {
                return Err(Error::CsvRow {
                    row: row_number,
                    msg: format!("non-finite value '{cell}' in column {}", col + 1),
                });
            }
            if Some(col) == weight_idx {
                weights.as_mut().expect("weight vector exists").push(value);
            } else {
                coords.push(value);
            }
        }
        rows.push(coords);
    }
    DataSet::from_rows(&rows, weights)
}

/// One data point's projection onto the embedded graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRecord {
    pub point_id: usize,
    pub owner: usize,
    pub dist2: f64,
    pub owner_position: Vec<f64>,
}

/// Per-point owner and squared distance. The weighted distance sum equals
/// the approximation energy bit-for-bit (same accumulation order).
pub fn project_points(
    emb: &Embedding,
    data: &DataSet,
    part: &Partition,
) -> Result<Vec<ProjectionRecord>> {
    if part.len() != data.len() || part.vertex_count() != emb.vertex_count() {
        return Err(Error::DimensionMismatch(
            "partition does not match embedding and dataset".into(),
        ));
    }
    if emb.dim() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "embedding in R^{}, data in R^{}",
            emb.dim(),
            data.dim()
        )));
    }
    Ok((0..data.len())
        .map(|p| {
            let owner = part.owner(p);
            ProjectionRecord {
                point_id: p,
                owner,
                dist2: sq_dist(data.point(p), emb.row(owner)),
                owner_position: emb.row(owner).to_vec(),
            }
        })
        .collect())
}

/// `point_id,owner,dist2` rows in point order.
pub fn projection_csv(records: &[ProjectionRecord]) -> String {
    let mut out = String::from("point_id,owner,dist2\n");
    for r in records {
        out.push_str(&format!("{},{},{}\n", r.point_id, r.owner, r.dist2));
    }
    out
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: usize,
    edges: Vec<Edge>,
    stars: Vec<Star>,
    #[serde(skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<GraphJson>>,
}

fn graph_json_value(graph: &ElasticGraph, positions: Option<&Embedding>) -> GraphJson {
    GraphJson {
        vertices: graph.vertex_count(),
        edges: graph.edges().to_vec(),
        stars: graph.stars().to_vec(),
        positions: positions.map(|emb| emb.rows().map(<[f64]>::to_vec).collect()),
        factors: None,
    }
}

/// Serializes a graph (optionally with positions and product factors) into
/// the graph JSON schema.
pub fn graph_to_json(
    graph: &ElasticGraph,
    positions: Option<&Embedding>,
    factors: Option<&[ElasticGraph]>,
) -> String {
    let mut root = graph_json_value(graph, positions);
    root.factors =
        factors.map(|fs| fs.iter().map(|f| graph_json_value(f, None)).collect());
    let mut out = serde_json::to_string_pretty(&root).expect("graph schema serializes");
    out.push('\n');
    out
}

/// Parses and validates graph JSON. Returns the graph, its positions when
/// present, and the product factors when present.
pub fn graph_from_json(
    text: &str,
) -> Result<(ElasticGraph, Option<Embedding>, Option<Vec<ElasticGraph>>)> {
    let parsed: GraphJson =
        serde_json::from_str(text).map_err(|e| Error::GraphJson(e.to_string()))?;
    let graph = ElasticGraph::new(parsed.vertices, parsed.edges, parsed.stars)?;
    let positions = match parsed.positions {
        None => None,
        Some(rows) => {
            if rows.len() != graph.vertex_count() {
                return Err(Error::GraphJson(format!(
                    "{} position rows for {} vertices",
                    rows.len(),
                    graph.vertex_count()
                )));
            }
            Some(Embedding::from_rows(&rows)?)
        }
    };
    let factors = match parsed.factors {
        None => None,
        Some(list) => {
            let factors: Vec<ElasticGraph> = list
                .into_iter()
                .map(|f| ElasticGraph::new(f.vertices, f.edges, f.stars))
                .collect::<Result<_>>()?;
            let expected = ProductGraph::new(factors.clone())?
                .checked_vertex_count()
                .ok_or_else(|| Error::GraphJson("factor product overflows".into()))?;
            if expected != graph.vertex_count() {
                return Err(Error::GraphJson(format!(
                    "factors expand to {expected} vertices, graph has {}",
                    graph.vertex_count()
                )));
            }
            Some(factors)
        }
    };
    Ok((graph, positions, factors))
}

fn site_json(site: &Option<Site>) -> serde_json::Value {
    match site {
        Some(Site::Vertex(v)) => json!(v),
        Some(Site::Edge(u, v)) => json!([u, v]),
        None => serde_json::Value::Null,
    }
}

/// One JSONL record per growth step.
pub fn report_jsonl(steps: &[GrowthStep]) -> String {
    let mut out = String::new();
    for s in steps {
        let mut record = serde_json::Map::new();
        record.insert("step".into(), json!(s.step));
        record.insert("rule".into(), json!(s.rule));
        record.insert("site".into(), site_json(&s.site));
        if let Some(factor) = s.factor {
            record.insert("factor".into(), json!(factor));
        }
        record.insert("energy_total".into(), json!(s.energy.total()));
        record.insert("energy_approx".into(), json!(s.energy.approximation));
        record.insert("energy_graph".into(), json!(s.energy.graph));
        record.insert("vertices".into(), json!(s.vertices));
        if let Some(dims) = &s.factor_dims {
            record.insert("factors".into(), json!(dims));
        }
        if let Some(dimension) = s.dimension {
            record.insert("dimension".into(), json!(dimension));
        }
        out.push_str(&serde_json::Value::Object(record).to_string());
        out.push('\n');
    }
    out
}
