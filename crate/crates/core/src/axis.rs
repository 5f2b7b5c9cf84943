//! Bipolar semantic axes and image scoring.
//!
//! An axis is a pair of text poles embedded by the same model as the images.
//! Two scoring modes are offered:
//!
//! * `margin`: `cos(v, right) - cos(v, left)`, the reference mode;
//! * `projection`: `<v, normalize(right - left)>`.
//!
//! Both give the same image ordering since `margin = projection * |right - left|`.
//! Positive scores lean toward the right pole.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingMatrix, TextBank};
use crate::error::{Error, Result};
use crate::vector;

/// Axes shipped with the crate: luminance, object, political and the
/// five-axis concept battery.
pub const DEFAULT_AXES_TOML: &str = include_str!("../axes/default.toml");

const DEGENERATE_POLE_DISTANCE: f64 = 1e-9;

/// How a multi-phrase pole becomes one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    /// Normalized mean of the unit phrase embeddings.
    #[default]
    Centroid,
    /// Phrases joined by single spaces, looked up as one prompt.
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub name: String,
    pub left_phrases: Vec<String>,
    pub right_phrases: Vec<String>,
    #[serde(default)]
    pub combine_mode: CombineMode,
}

impl AxisSpec {
    pub fn new(
        name: impl Into<String>,
        left: &[&str],
        right: &[&str],
        combine_mode: CombineMode,
    ) -> Self {
        Self {
            name: name.into(),
            left_phrases: left.iter().map(|s| s.to_string()).collect(),
            right_phrases: right.iter().map(|s| s.to_string()).collect(),
            combine_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.name.is_empty() {
            problems.push("axis with empty name".to_string());
        }
        if self.left_phrases.is_empty() {
            problems.push(format!("axis {}: left_phrases is empty", self.name));
        }
        if self.right_phrases.is_empty() {
            problems.push(format!("axis {}: right_phrases is empty", self.name));
        }
        let left: HashSet<_> = self.left_phrases.iter().collect();
        let right: HashSet<_> = self.right_phrases.iter().collect();
        if !left.is_empty() && left == right {
            problems.push(format!(
                "axis {}: left and right poles are the same phrases",
                self.name
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// The same axis with its poles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            name: self.name.clone(),
            left_phrases: self.right_phrases.clone(),
            right_phrases: self.left_phrases.clone(),
            combine_mode: self.combine_mode,
        }
    }

    /// Every text-bank key this axis needs under its combine mode.
    pub fn required_phrases(&self) -> Vec<String> {
        match self.combine_mode {
            CombineMode::Centroid => self
                .left_phrases
                .iter()
                .chain(&self.right_phrases)
                .cloned()
                .collect(),
            CombineMode::Single => vec![self.left_phrases.join(" "), self.right_phrases.join(" ")],
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct AxisFile {
    axis: Vec<AxisSpec>,
}

/// Parses an axes file (TOML, one `[[axis]]` table per axis).
pub fn parse_axes(text: &str) -> std::result::Result<Vec<AxisSpec>, String> {
    let file: AxisFile = toml::from_str(text).map_err(|e| e.to_string())?;
    Ok(file.axis)
}

fn validate_axes(axes: &[AxisSpec]) -> Result<()> {
    let mut problems = Vec::new();
    let mut names = HashSet::new();
    for a in axes {
        if let Err(Error::Validation(p)) = a.validate() {
            problems.extend(p);
        }
        if !names.insert(a.name.as_str()) {
            problems.push(format!("duplicate axis name {:?}", a.name));
        }
    }
    if axes.is_empty() {
        problems.push("axes file defines no axis".to_string());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

pub fn load_axes(path: impl AsRef<Path>) -> Result<Vec<AxisSpec>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let axes = parse_axes(&text).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })?;
    validate_axes(&axes)?;
    Ok(axes)
}

pub fn default_axes() -> Vec<AxisSpec> {
    let axes = parse_axes(DEFAULT_AXES_TOML).expect("bundled axes file parses");
    validate_axes(&axes).expect("bundled axes file is valid");
    axes
}

/// Pole vectors of one axis for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisVectors {
    pub model_id: String,
    pub axis_name: String,
    pub t_left: Vec<f64>,
    pub t_right: Vec<f64>,
    /// `normalize(t_right - t_left)`.
    pub direction: Vec<f64>,
    /// `|t_right - t_left|`, the factor between margin and projection scores.
    pub pole_distance: f64,
}

impl AxisVectors {
    /// Builds an axis from two pole vectors, normalizing both.
    pub fn from_poles(
        model_id: impl Into<String>,
        axis_name: impl Into<String>,
        left: &[f64],
        right: &[f64],
    ) -> Result<Self> {
        let axis_name = axis_name.into();
        if left.len() != right.len() {
            return Err(Error::DimMismatch {
                expected: left.len(),
                actual: right.len(),
            });
        }
        let t_left = vector::unit(left)
            .ok_or_else(|| Error::Numeric(format!("axis {axis_name}: zero left pole")))?;
        let t_right = vector::unit(right)
            .ok_or_else(|| Error::Numeric(format!("axis {axis_name}: zero right pole")))?;
        let diff: Vec<f64> = t_right.iter().zip(&t_left).map(|(r, l)| r - l).collect();
        let pole_distance = vector::norm(&diff);
        if pole_distance < DEGENERATE_POLE_DISTANCE {
            return Err(Error::DegenerateAxis(axis_name));
        }
        let direction = diff.iter().map(|x| x / pole_distance).collect();
        Ok(Self {
            model_id: model_id.into(),
            axis_name,
            t_left,
            t_right,
            direction,
            pole_distance,
        })
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }
}

fn pole_vector(phrases: &[String], mode: CombineMode, bank: &TextBank) -> Result<Vec<f64>> {
    let lookup = |p: &str| {
        bank.get(p).ok_or_else(|| Error::MissingPhrase {
            phrase: p.to_string(),
            model_id: bank.model_id().to_string(),
        })
    };
    match mode {
        CombineMode::Single => Ok(lookup(&phrases.join(" "))?.to_vec()),
        CombineMode::Centroid => {
            let mut sum = vec![0.0; bank.dim()];
            for p in phrases {
                for (s, x) in sum.iter_mut().zip(lookup(p)?) {
                    *s += x;
                }
            }
            let n = phrases.len() as f64;
            sum.iter_mut().for_each(|s| *s /= n);
            Ok(sum)
        }
    }
}

pub fn build_axis(spec: &AxisSpec, bank: &TextBank) -> Result<AxisVectors> {
    spec.validate()?;
    let left = pole_vector(&spec.left_phrases, spec.combine_mode, bank)?;
    let right = pole_vector(&spec.right_phrases, spec.combine_mode, bank)?;
    if vector::norm(&left) == 0.0 || vector::norm(&right) == 0.0 {
        // opposite phrase vectors can cancel inside a centroid
        return Err(Error::DegenerateAxis(spec.name.clone()));
    }
    AxisVectors::from_poles(bank.model_id(), &spec.name, &left, &right)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    #[default]
    Margin,
    Projection,
}

impl ScoreMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMode::Margin => "margin",
            ScoreMode::Projection => "projection",
        }
    }
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScoreMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "margin" => Ok(ScoreMode::Margin),
            "projection" => Ok(ScoreMode::Projection),
            other => Err(format!("unknown certainty mode {other:?}")),
        }
    }
}

/// Score of one vector against one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageScore {
    pub cos_left: f64,
    pub cos_right: f64,
    pub score_axis: f64,
    pub certainty_mode: ScoreMode,
    pub certainty: f64,
}

impl ImageScore {
    /// Margin score from already computed pole cosines.
    pub fn from_cosines(cos_left: f64, cos_right: f64) -> Self {
        let score_axis = cos_right - cos_left;
        Self {
            cos_left,
            cos_right,
            score_axis,
            certainty_mode: ScoreMode::Margin,
            certainty: score_axis.abs(),
        }
    }
}

pub fn score_image(v: &[f64], axis: &AxisVectors, mode: ScoreMode) -> Result<ImageScore> {
    if v.len() != axis.dim() {
        return Err(Error::DimMismatch {
            expected: axis.dim(),
            actual: v.len(),
        });
    }
    let cos_left = vector::dot(v, &axis.t_left);
    let cos_right = vector::dot(v, &axis.t_right);
    Ok(match mode {
        ScoreMode::Margin => ImageScore::from_cosines(cos_left, cos_right),
        ScoreMode::Projection => {
            let score_axis = vector::dot(v, &axis.direction);
            ImageScore {
                cos_left,
                cos_right,
                score_axis,
                certainty_mode: ScoreMode::Projection,
                certainty: score_axis.abs(),
            }
        }
    })
}

/// One row of a score table, in the published CSV column order.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisScore {
    pub image_index: usize,
    pub image_relpth: String,
    pub score_axis: f64,
    pub cos_left: f64,
    pub cos_right: f64,
    pub certainty_mode: ScoreMode,
    pub certainty: f64,
}

impl AxisScore {
    pub fn new(image_index: usize, image_relpth: impl Into<String>, s: ImageScore) -> Self {
        Self {
            image_index,
            image_relpth: image_relpth.into(),
            score_axis: s.score_axis,
            cos_left: s.cos_left,
            cos_right: s.cos_right,
            certainty_mode: s.certainty_mode,
            certainty: s.certainty,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub model_id: String,
    pub axis_name: String,
    pub mode: ScoreMode,
    pub rows: Vec<AxisScore>,
}

impl ScoreTable {
    /// A table from bare scores, with synthetic cosines
    /// (`cos_left = 0`, `cos_right = score`). Handy for statistics that only
    /// look at `score_axis`.
    pub fn from_scores(
        model_id: impl Into<String>,
        axis_name: impl Into<String>,
        image_ids: &[String],
        scores: &[f64],
    ) -> Self {
        assert_eq!(image_ids.len(), scores.len(), "one score per image");
        let rows = image_ids
            .iter()
            .zip(scores)
            .enumerate()
            .map(|(i, (id, &s))| AxisScore::new(i, id.clone(), ImageScore::from_cosines(0.0, s)))
            .collect();
        Self {
            model_id: model_id.into(),
            axis_name: axis_name.into(),
            mode: ScoreMode::Margin,
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.score_axis).collect()
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.image_relpth.as_str())
    }
}

pub fn score_corpus(
    m: &EmbeddingMatrix,
    axis: &AxisVectors,
    mode: ScoreMode,
) -> Result<ScoreTable> {
    if m.model_id() != axis.model_id {
        return Err(Error::InvalidArgument(format!(
            "matrix of model {} scored against axis built for {}",
            m.model_id(),
            axis.model_id
        )));
    }
    if m.dim() != axis.dim() {
        return Err(Error::DimMismatch {
            expected: axis.dim(),
            actual: m.dim(),
        });
    }
    let rows = m
        .image_ids()
        .par_iter()
        .enumerate()
        .map(|(i, id)| {
            let s = score_image(m.row(i), axis, mode).map_err(|e| match e {
                Error::DimMismatch { .. } => Error::Numeric(format!("image {id}: {e}")),
                e => e,
            })?;
            if !s.score_axis.is_finite() {
                return Err(Error::Numeric(format!("image {id}: non-finite score")));
            }
            Ok(AxisScore::new(i, id.clone(), s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreTable {
        model_id: m.model_id().to_string(),
        axis_name: axis.axis_name.clone(),
        mode,
        rows,
    })
}
