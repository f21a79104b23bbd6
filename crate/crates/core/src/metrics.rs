//! Corpus-level reconstruction metrics: average human-human and
//! human-object collision, and average depth-ordering loss restricted to
//! human pixels or extended to human-plus-object pixels. All four are
//! plain means over scenes, so duplicating the corpus never moves them;
//! summation is pairwise to keep aggregates independent of traversal
//! batching.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::DepthPairs;
use crate::raster::IndexMap;
use crate::scene::{collision_total_hh, collision_total_ho, scene_depth_loss, Scene};

/// One scene queued for evaluation. Collision terms need the scene's SDF
/// grids prepared; the depth terms need the ground-truth index map.
pub struct EvalCase {
    pub name: String,
    pub scene: Scene,
    pub gt_index: Option<IndexMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub name: String,
    pub e_h_col: f64,
    pub e_ho_col: f64,
    pub e_h_depth: f64,
    pub e_ho_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scene_count: usize,
    pub e_h_col: f64,
    pub e_ho_col: f64,
    pub e_h_depth: f64,
    pub e_ho_depth: f64,
    pub per_scene: Vec<SceneMetrics>,
}

/// Sums by halving: the result depends only on the sequence, not on any
/// accumulation batching, and doubling a corpus doubles the sum exactly.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

/// All four metrics of a single scene.
pub fn scene_metrics(case: &EvalCase, delta: f64) -> Result<SceneMetrics> {
    let gt = case.gt_index.as_ref().ok_or_else(|| {
        Error::MissingData(format!(
            "scene {:?} has no ground-truth index map; depth metrics need one",
            case.name
        ))
    })?;
    Ok(SceneMetrics {
        name: case.name.clone(),
        e_h_col: collision_total_hh(&case.scene, delta)?,
        e_ho_col: collision_total_ho(&case.scene, delta)?,
        e_h_depth: scene_depth_loss(&case.scene, gt, DepthPairs::HumanHuman)?,
        e_ho_depth: scene_depth_loss(&case.scene, gt, DepthPairs::All)?,
    })
}

/// Evaluates every case and aggregates by per-metric means.
pub fn evaluate_corpus(cases: &[EvalCase], delta: f64) -> Result<MetricReport> {
    if cases.is_empty() {
        return Err(Error::MissingData(
            "evaluation corpus is empty; metrics are means over at least one scene".into(),
        ));
    }
    let per_scene = cases
        .iter()
        .map(|c| scene_metrics(c, delta))
        .collect::<Result<Vec<_>>>()?;
    let column = |f: fn(&SceneMetrics) -> f64| -> Vec<f64> { per_scene.iter().map(f).collect() };
    Ok(MetricReport {
        scene_count: per_scene.len(),
        e_h_col: mean(&column(|m| m.e_h_col)),
        e_ho_col: mean(&column(|m| m.e_ho_col)),
        e_h_depth: mean(&column(|m| m.e_h_depth)),
        e_ho_depth: mean(&column(|m| m.e_ho_depth)),
        per_scene,
    })
}

/// Per-scene breakdown, one row per scene plus a trailing mean row.
pub fn write_report_csv<W: Write>(report: &MetricReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::Configuration(format!("metric report csv: {e}"));
    w.write_record(["scene", "e_h_col", "e_ho_col", "e_h_depth", "e_ho_depth"])
        .map_err(fail)?;
    let row = |w: &mut csv::Writer<W>, name: &str, a: f64, b: f64, c: f64, d: f64| {
        w.write_record([
            name.to_string(),
            format!("{a:.17e}"),
            format!("{b:.17e}"),
            format!("{c:.17e}"),
            format!("{d:.17e}"),
        ])
        .map_err(fail)
    };
    for m in &report.per_scene {
        row(&mut w, &m.name, m.e_h_col, m.e_ho_col, m.e_h_depth, m.e_ho_depth)?;
    }
    row(
        &mut w,
        "mean",
        report.e_h_col,
        report.e_ho_col,
        report.e_h_depth,
        report.e_ho_depth,
    )?;
    w.flush()
        .map_err(|e| Error::Configuration(format!("metric report csv: {e}")))?;
    Ok(())
}

pub fn write_report_json<W: Write>(report: &MetricReport, mut writer: W) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Configuration(format!("metric report json: {e}")))?;
    writer
        .write_all(text.as_bytes())
        .and_then(|_| writer.write_all(b"\n"))
        .map_err(|e| Error::Configuration(format!("metric report json: {e}")))
}
