//! Inter-model diagnostics on aligned score tables of one axis.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::axis::ScoreTable;
use crate::error::{Error, Result};
use crate::stats::{self, check_aligned};

/// How per-image contrast between two models is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContrastMode {
    /// `|s_a - s_b|` on raw scores.
    Raw,
    /// `|z_a - z_b|` on per-model standard scores.
    #[default]
    Zscore,
}

impl fmt::Display for ContrastMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContrastMode::Raw => "raw",
            ContrastMode::Zscore => "zscore",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastedImage {
    pub image_relpth: String,
    pub score_a: f64,
    pub score_b: f64,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiagnostics {
    pub model_a: String,
    pub model_b: String,
    pub pct_right_a: f64,
    pub pct_right_b: f64,
    /// `|pct_right_a - pct_right_b|` in percentage points.
    pub gap_pp: f64,
    /// `None` when a score vector is constant.
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    /// Share of all images placed on opposite poles; zero scores never count.
    pub sign_disagreement_pct: f64,
    pub contrast_mode: ContrastMode,
    pub contrasted: Vec<ContrastedImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub axis_name: String,
    pub model_pairs: Vec<PairDiagnostics>,
    pub max_gap_pp: f64,
    pub max_gap_pair: (String, String),
}

fn pct_right(scores: &[f64]) -> f64 {
    100.0 * scores.iter().filter(|&&s| s > 0.0).count() as f64 / scores.len() as f64
}

fn standardize(t: &ScoreTable, scores: &[f64]) -> Result<Vec<f64>> {
    let m = stats::mean(scores);
    let sd = stats::population_std(scores);
    if sd == 0.0 {
        return Err(Error::ZeroVariance {
            model_id: t.model_id.clone(),
            axis_name: t.axis_name.clone(),
        });
    }
    Ok(scores.iter().map(|s| (s - m) / sd).collect())
}

pub fn pair_diagnostics(
    a: &ScoreTable,
    b: &ScoreTable,
    k: usize,
    contrast_mode: ContrastMode,
) -> Result<PairDiagnostics> {
    if a.axis_name != b.axis_name {
        return Err(Error::Alignment(format!(
            "comparing axis {} with axis {}",
            a.axis_name, b.axis_name
        )));
    }
    check_aligned(&[a, b])?;
    let n = a.len();
    if n == 0 {
        return Err(Error::EmptyTable);
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k must be at most {n}, got {k}"
        )));
    }
    let sa = a.scores();
    let sb = b.scores();

    let (ca, cb) = match contrast_mode {
        ContrastMode::Raw => (sa.clone(), sb.clone()),
        ContrastMode::Zscore => (standardize(a, &sa)?, standardize(b, &sb)?),
    };
    let mut contrasted: Vec<ContrastedImage> = a
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| ContrastedImage {
            image_relpth: r.image_relpth.clone(),
            score_a: sa[i],
            score_b: sb[i],
            contrast: (ca[i] - cb[i]).abs(),
        })
        .collect();
    contrasted.sort_by(|x, y| {
        y.contrast
            .total_cmp(&x.contrast)
            .then_with(|| x.image_relpth.cmp(&y.image_relpth))
    });
    contrasted.truncate(k);

    let disagree = sa
        .iter()
        .zip(&sb)
        .filter(|(x, y)| (**x > 0.0 && **y < 0.0) || (**x < 0.0 && **y > 0.0))
        .count();

    let (pa, pb) = (pct_right(&sa), pct_right(&sb));
    Ok(PairDiagnostics {
        model_a: a.model_id.clone(),
        model_b: b.model_id.clone(),
        pct_right_a: pa,
        pct_right_b: pb,
        gap_pp: (pa - pb).abs(),
        pearson: stats::pearson(&sa, &sb),
        spearman: stats::spearman(&sa, &sb),
        sign_disagreement_pct: 100.0 * disagree as f64 / n as f64,
        contrast_mode,
        contrasted,
    })
}

/// All pairwise diagnostics (input order, `i < j`) for one axis.
pub fn axis_divergence(
    tables: &[&ScoreTable],
    k: usize,
    contrast_mode: ContrastMode,
) -> Result<DivergenceReport> {
    if tables.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "divergence needs at least 2 models, got {}",
            tables.len()
        )));
    }
    let mut model_pairs = Vec::new();
    for i in 0..tables.len() {
        for j in i + 1..tables.len() {
            model_pairs.push(pair_diagnostics(tables[i], tables[j], k, contrast_mode)?);
        }
    }
    let best = model_pairs.iter().fold(&model_pairs[0], |best, p| {
        if p.gap_pp > best.gap_pp {
            p
        } else {
            best
        }
    });
    Ok(DivergenceReport {
        axis_name: tables[0].axis_name.clone(),
        max_gap_pp: best.gap_pp,
        max_gap_pair: (best.model_a.clone(), best.model_b.clone()),
        model_pairs,
    })
}

/// `(axis_name, max_gap_pp)` by descending gap, ties by axis name.
pub fn rank_axes_by_divergence(reports: &[DivergenceReport]) -> Vec<(String, f64)> {
    let mut ranked: Vec<_> = reports
        .iter()
        .map(|r| (r.axis_name.clone(), r.max_gap_pp))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}
