//! Per-model, per-axis descriptive statistics and the multi-axis battery.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::axis::ScoreTable;
use crate::error::{Error, Result};

/// `(image_relpth, score)`.
pub type RankedImage = (String, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSummary {
    pub model_id: String,
    pub axis_name: String,
    pub n_total: usize,
    pub pct_right: f64,
    pub pct_left: f64,
    pub pct_zero: f64,
    /// Population standard deviation of the raw scores.
    pub sigma: f64,
    pub mean: f64,
    pub top_right: Vec<RankedImage>,
    pub top_left: Vec<RankedImage>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (divide-by-N) standard deviation, two-pass.
pub fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Pearson correlation; `None` when either vector is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return None;
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties receiving the average of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Descending by score, ties by image id ascending.
pub(crate) fn by_score_desc(a: &RankedImage, b: &RankedImage) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

fn by_score_asc(a: &RankedImage, b: &RankedImage) -> Ordering {
    a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0))
}

pub fn summarize(table: &ScoreTable, k: usize) -> Result<AxisSummary> {
    let n = table.len();
    if n == 0 {
        return Err(Error::EmptyTable);
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={n}, got {k}"
        )));
    }
    let scores = table.scores();
    let (mut right, mut left, mut zero) = (0usize, 0usize, 0usize);
    for &s in &scores {
        if s > 0.0 {
            right += 1;
        } else if s < 0.0 {
            left += 1;
        } else {
            zero += 1;
        }
    }
    let pct = |c: usize| 100.0 * c as f64 / n as f64;

    let mut ranked: Vec<RankedImage> = table
        .rows
        .iter()
        .map(|r| (r.image_relpth.clone(), r.score_axis))
        .collect();
    ranked.sort_by(by_score_desc);
    let top_right = ranked[..k].to_vec();
    ranked.sort_by(by_score_asc);
    let top_left = ranked[..k].to_vec();

    Ok(AxisSummary {
        model_id: table.model_id.clone(),
        axis_name: table.axis_name.clone(),
        n_total: n,
        pct_right: pct(right),
        pct_left: pct(left),
        pct_zero: pct(zero),
        sigma: population_std(&scores),
        mean: mean(&scores),
        top_right,
        top_left,
    })
}

/// Score tables for every `(model, axis)` cell.
#[derive(Debug, Clone, Default)]
pub struct ScoreGrid {
    pub models: Vec<String>,
    pub axes: Vec<String>,
    cells: HashMap<(String, String), ScoreTable>,
}

impl ScoreGrid {
    pub fn new(models: Vec<String>, axes: Vec<String>) -> Self {
        Self {
            models,
            axes,
            cells: HashMap::new(),
        }
    }

    pub fn insert(&mut self, table: ScoreTable) {
        self.cells
            .insert((table.model_id.clone(), table.axis_name.clone()), table);
    }

    pub fn get(&self, model: &str, axis: &str) -> Option<&ScoreTable> {
        self.cells.get(&(model.to_string(), axis.to_string()))
    }

    pub fn missing_cells(&self) -> Vec<(String, String)> {
        let mut missing = Vec::new();
        for m in &self.models {
            for a in &self.axes {
                if self.get(m, a).is_none() {
                    missing.push((m.clone(), a.clone()));
                }
            }
        }
        missing
    }

    /// Tables of one axis across all models, in model order.
    pub fn axis_tables(&self, axis: &str) -> Vec<&ScoreTable> {
        self.models
            .iter()
            .filter_map(|m| self.get(m, axis))
            .collect()
    }
}

/// Spearman correlations between axis score vectors of one model. Entries
/// are `None` where a score vector is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisCorrelations {
    pub axes: Vec<String>,
    pub matrix: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySummary {
    pub models: Vec<String>,
    pub axes: Vec<String>,
    /// `summaries[model][axis]`.
    pub summaries: BTreeMap<String, BTreeMap<String, AxisSummary>>,
    pub mean_sigma: BTreeMap<String, f64>,
    /// Models by ascending mean sigma (most coherent first).
    pub stability_order: Vec<String>,
    pub axis_correlations: BTreeMap<String, AxisCorrelations>,
}

impl BatterySummary {
    pub fn summary(&self, model: &str, axis: &str) -> Option<&AxisSummary> {
        self.summaries.get(model)?.get(axis)
    }
}

/// Sorts models by ascending mean sigma; ties by model id.
pub fn stability_order(mean_sigma: &[(String, f64)]) -> Vec<String> {
    let mut v = mean_sigma.to_vec();
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    v.into_iter().map(|(m, _)| m).collect()
}

pub(crate) fn check_aligned(tables: &[&ScoreTable]) -> Result<()> {
    let first = tables[0];
    for t in &tables[1..] {
        if t.len() != first.len() || !t.image_ids().eq(first.image_ids()) {
            return Err(Error::Alignment(format!(
                "tables ({}, {}) and ({}, {}) cover different images",
                first.model_id, first.axis_name, t.model_id, t.axis_name
            )));
        }
    }
    Ok(())
}

pub fn battery(grid: &ScoreGrid, k: usize) -> Result<BatterySummary> {
    let missing = grid.missing_cells();
    if !missing.is_empty() {
        return Err(Error::IncompleteGrid(missing));
    }
    if grid.models.is_empty() || grid.axes.is_empty() {
        return Err(Error::InvalidArgument(
            "battery needs at least one model and one axis".into(),
        ));
    }
    let all: Vec<&ScoreTable> = grid
        .models
        .iter()
        .flat_map(|m| grid.axes.iter().map(move |a| grid.get(m, a).unwrap()))
        .collect();
    check_aligned(&all)?;

    let mut summaries = BTreeMap::new();
    let mut mean_sigma = BTreeMap::new();
    let mut sigma_pairs = Vec::new();
    let mut axis_correlations = BTreeMap::new();
    for m in &grid.models {
        let mut per_axis = BTreeMap::new();
        let mut sigma_sum = 0.0;
        for a in &grid.axes {
            let s = summarize(grid.get(m, a).unwrap(), k)?;
            sigma_sum += s.sigma;
            per_axis.insert(a.clone(), s);
        }
        let ms = sigma_sum / grid.axes.len() as f64;
        mean_sigma.insert(m.clone(), ms);
        sigma_pairs.push((m.clone(), ms));
        summaries.insert(m.clone(), per_axis);

        let vectors: Vec<Vec<f64>> = grid
            .axes
            .iter()
            .map(|a| grid.get(m, a).unwrap().scores())
            .collect();
        let n = vectors.len();
        let mut matrix = vec![vec![None; n]; n];
        for i in 0..n {
            matrix[i][i] = Some(1.0);
            for j in i + 1..n {
                let r = spearman(&vectors[i], &vectors[j]);
                matrix[i][j] = r;
                matrix[j][i] = r;
            }
        }
        axis_correlations.insert(
            m.clone(),
            AxisCorrelations {
                axes: grid.axes.clone(),
                matrix,
            },
        );
    }
    Ok(BatterySummary {
        models: grid.models.clone(),
        axes: grid.axes.clone(),
        summaries,
        mean_sigma,
        stability_order: stability_order(&sigma_pairs),
        axis_correlations,
    })
}
