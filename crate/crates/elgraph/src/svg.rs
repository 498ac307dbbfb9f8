//! SVG emission: data and graph drawn in the plane of the first two
//! principal components of the data.

use crate::energy::{DataSet, Embedding};
use crate::error::{Error, Result};
use crate::graph::ElasticGraph;
use crate::pca;

fn pad_embedding(emb: &Embedding, dim: usize) -> Result<Embedding> {
    if emb.dim() >= dim {
        return Ok(emb.clone());
    }
    let rows: Vec<Vec<f64>> = emb
        .rows()
        .map(|r| {
            let mut row = r.to_vec();
            row.resize(dim, 0.0);
            row
        })
        .collect();
    Embedding::from_rows(&rows)
}

/// Renders data points, graph vertices, and edges (straight segments
/// between linked vertex images) projected onto the first two principal
/// components. One-dimensional inputs are padded with a zero coordinate.
/// The viewBox fits all content with a 5% margin. Output is deterministic.
pub fn emit_svg(emb: &Embedding, data: &DataSet, graph: &ElasticGraph) -> Result<String> {
    if emb.vertex_count() != graph.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "embedding has {} vertices, graph has {}",
            emb.vertex_count(),
            graph.vertex_count()
        )));
    }
    if emb.dim() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "embedding in R^{}, data in R^{}",
            emb.dim(),
            data.dim()
        )));
    }
    let data = data.pad_to_dim(2);
    let emb = pad_embedding(emb, 2)?;
    let axes = pca::principal_axes(&data, 2)?;

    // Screen y points down; flip the second component.
    let project = |point: &[f64]| {
        let (x, y) = axes.project2(point, 0, 1);
        (x, -y)
    };
    let points: Vec<(f64, f64)> = (0..data.len()).map(|p| project(data.point(p))).collect();
    let vertices: Vec<(f64, f64)> = emb.rows().map(project).collect();

    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points.iter().chain(&vertices) {
        lo.0 = lo.0.min(x);
        lo.1 = lo.1.min(y);
        hi.0 = hi.0.max(x);
        hi.1 = hi.1.max(y);
    }
    let mut width = hi.0 - lo.0;
    let mut height = hi.1 - lo.1;
    if !(width > 0.0) {
        lo.0 -= 0.5;
        width = 1.0;
    }
    if !(height > 0.0) {
        lo.1 -= 0.5;
        height = 1.0;
    }
    let margin_x = 0.05 * width;
    let margin_y = 0.05 * height;
    let extent = width.max(height);
    let point_r = 0.006 * extent;
    let vertex_r = 0.012 * extent;
    let stroke = 0.004 * extent;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">\n",
        lo.0 - margin_x,
        lo.1 - margin_y,
        width + 2.0 * margin_x,
        height + 2.0 * margin_y
    ));
    svg.push_str("  <g class=\"data\" fill=\"#7f7f7f\" fill-opacity=\"0.6\">\n");
    for &(x, y) in &points {
        svg.push_str(&format!(
            "    <circle cx=\"{x:.6}\" cy=\"{y:.6}\" r=\"{point_r:.6}\"/>\n"
        ));
    }
    svg.push_str("  </g>\n");
    svg.push_str(&format!(
        "  <g class=\"edges\" stroke=\"#d62728\" stroke-width=\"{stroke:.6}\">\n"
    ));
    for e in graph.edges() {
        let (x1, y1) = vertices[e.u];
        let (x2, y2) = vertices[e.v];
        svg.push_str(&format!(
            "    <line x1=\"{x1:.6}\" y1=\"{y1:.6}\" x2=\"{x2:.6}\" y2=\"{y2:.6}\"/>\n"
        ));
    }
    svg.push_str("  </g>\n");
    svg.push_str("  <g class=\"vertices\" fill=\"#d62728\">\n");
    for &(x, y) in &vertices {
        svg.push_str(&format!(
            "    <circle cx=\"{x:.6}\" cy=\"{y:.6}\" r=\"{vertex_r:.6}\"/>\n"
        ));
    }
    svg.push_str("  </g>\n</svg>\n");
    Ok(svg)
}
