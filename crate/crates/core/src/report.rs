//! File outputs: score CSVs, JSON reports, layout tables and SVG scatter plots.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! stored f64 is recovered exactly when the file is parsed back.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::axis::ScoreTable;
use crate::divergence::DivergenceReport;
use crate::error::{Error, Result};
use crate::stats::{AxisSummary, BatterySummary};
use crate::tsne::TsneLayout;

pub const SCORE_CSV_HEADER: &str =
    "image_index,image_relpth,score_axis,cos_left,cos_right,certainty_mode,certainty";

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty path"),
        ));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// RFC 4180 quoting, applied only when needed.
fn csv_field(out: &mut String, field: &str) {
    if field.contains([',', '"', '\n', '\r']) {
        out.push('"');
        out.push_str(&field.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(field);
    }
}

pub fn score_csv_string(table: &ScoreTable) -> String {
    let mut out = String::with_capacity(64 * (table.len() + 1));
    out.push_str(SCORE_CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        write!(out, "{},", r.image_index).unwrap();
        csv_field(&mut out, &r.image_relpth);
        writeln!(
            out,
            ",{},{},{},{},{}",
            r.score_axis, r.cos_left, r.cos_right, r.certainty_mode, r.certainty
        )
        .unwrap();
    }
    out
}

pub fn write_score_csv(table: &ScoreTable, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), score_csv_string(table).as_bytes())
}

/// Rounds for display, e.g. `59.4`.
pub fn display_1dp(x: f64) -> String {
    format!("{x:.1}")
}

fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &to_json_bytes(value))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
        }
    }
}

/// Rounded companions of the full-precision statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDisplay {
    pub model_id: String,
    pub axis_name: String,
    pub pct_right: String,
    pub pct_left: String,
    pub pct_zero: String,
    pub sigma: String,
}

impl From<&AxisSummary> for SummaryDisplay {
    fn from(s: &AxisSummary) -> Self {
        Self {
            model_id: s.model_id.clone(),
            axis_name: s.axis_name.clone(),
            pct_right: display_1dp(s.pct_right),
            pct_left: display_1dp(s.pct_left),
            pct_zero: display_1dp(s.pct_zero),
            sigma: format!("{:.3}", s.sigma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAxis {
    pub axis_name: String,
    pub max_gap_pp: f64,
    pub max_gap_pp_display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: ToolInfo,
    /// Resolved run configuration.
    pub config: serde_json::Value,
    pub notes: Vec<String>,
    pub battery: BatterySummary,
    pub display: Vec<SummaryDisplay>,
    pub mean_sigma_display: Vec<(String, String)>,
    pub divergences: Vec<DivergenceReport>,
    pub ranked_axes: Vec<RankedAxis>,
}

pub const SIGMA_NOTE: &str = "sigma is the population standard deviation of raw score_axis values";
pub const PERCENT_NOTE: &str =
    "pct_right/pct_left count strictly positive/negative scores; exact zeros are reported as pct_zero";

impl ReportDocument {
    pub fn new(
        battery: &BatterySummary,
        divergences: &[DivergenceReport],
        config: serde_json::Value,
    ) -> Self {
        let display = battery
            .models
            .iter()
            .flat_map(|m| battery.axes.iter().map(move |a| (m, a)))
            .filter_map(|(m, a)| battery.summary(m, a))
            .map(SummaryDisplay::from)
            .collect();
        let mean_sigma_display = battery
            .stability_order
            .iter()
            .map(|m| (m.clone(), format!("{:.3}", battery.mean_sigma[m])))
            .collect();
        let ranked_axes = crate::divergence::rank_axes_by_divergence(divergences)
            .into_iter()
            .map(|(axis_name, gap)| RankedAxis {
                axis_name,
                max_gap_pp: gap,
                max_gap_pp_display: display_1dp(gap),
            })
            .collect();
        Self {
            tool: ToolInfo::default(),
            config,
            notes: vec![SIGMA_NOTE.to_string(), PERCENT_NOTE.to_string()],
            battery: battery.clone(),
            display,
            mean_sigma_display,
            divergences: divergences.to_vec(),
            ranked_axes,
        }
    }
}

pub fn write_reports_json(
    battery: &BatterySummary,
    divergences: &[DivergenceReport],
    config: serde_json::Value,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_json(&ReportDocument::new(battery, divergences, config), path)
}

pub fn write_layout_csv(
    layout: &TsneLayout,
    image_ids: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    if image_ids.len() != layout.y.len() {
        return Err(Error::DimMismatch {
            expected: layout.y.len(),
            actual: image_ids.len(),
        });
    }
    let mut out = String::from("image_index,image_relpth,y0,y1\n");
    for (i, (id, p)) in image_ids.iter().zip(&layout.y).enumerate() {
        write!(out, "{i},").unwrap();
        csv_field(&mut out, id);
        writeln!(out, ",{},{}", p[0], p[1]).unwrap();
    }
    write_file(path.as_ref(), out.as_bytes())
}

pub fn write_kl_trace_csv(layout: &TsneLayout, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("iteration,kl\n");
    for (t, kl) in layout.kl_trace.iter().enumerate() {
        writeln!(out, "{t},{kl}").unwrap();
    }
    write_file(path.as_ref(), out.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Labels {
    #[default]
    None,
    /// The `k` points with the largest absolute score (needs coloring).
    TopK(usize),
    All,
}

#[derive(Debug, Clone)]
pub struct RenderSpec<'a> {
    pub layout: &'a TsneLayout,
    pub image_ids: &'a [String],
    pub coloring: Option<&'a ScoreTable>,
    pub labels: Labels,
    pub width: u32,
    pub height: u32,
    pub point_radius: f64,
}

impl<'a> RenderSpec<'a> {
    pub fn new(layout: &'a TsneLayout, image_ids: &'a [String]) -> Self {
        Self {
            layout,
            image_ids,
            coloring: None,
            labels: Labels::None,
            width: 800,
            height: 800,
            point_radius: 4.0,
        }
    }
}

const NEGATIVE_RGB: [f64; 3] = [33.0, 102.0, 172.0];
const NEUTRAL_RGB: [f64; 3] = [247.0, 247.0, 247.0];
const POSITIVE_RGB: [f64; 3] = [178.0, 24.0, 43.0];

/// Two-hue diverging ramp: `t` in `[-1, 1]`, 0 maps to the neutral midpoint.
pub fn diverging_color(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let end = if t < 0.0 { NEGATIVE_RGB } else { POSITIVE_RGB };
    let a = t.abs();
    let c: Vec<u8> = (0..3)
        .map(|i| (NEUTRAL_RGB[i] + (end[i] - NEUTRAL_RGB[i]) * a).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn svg_string(spec: &RenderSpec<'_>) -> Result<String> {
    let n = spec.layout.y.len();
    if spec.image_ids.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            actual: spec.image_ids.len(),
        });
    }
    if let Some(t) = spec.coloring {
        if t.len() != n || !t.image_ids().eq(spec.image_ids.iter().map(String::as_str)) {
            return Err(Error::Alignment(
                "coloring table does not match the layout's images".into(),
            ));
        }
    }
    let (w, h) = (spec.width as f64, spec.height as f64);
    let margin = 20.0 + spec.point_radius;
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in &spec.layout.y {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let span = (xmax - xmin).max(ymax - ymin);
    let scale = if span > 0.0 {
        ((w - 2.0 * margin).min(h - 2.0 * margin)).max(0.0) / span
    } else {
        0.0
    };
    let (cx, cy) = ((xmin + xmax) / 2.0, (ymin + ymax) / 2.0);
    let map = |p: [f64; 2]| (w / 2.0 + (p[0] - cx) * scale, h / 2.0 - (p[1] - cy) * scale);

    let scores = spec.coloring.map(ScoreTable::scores);
    let max_abs = scores
        .as_ref()
        .map(|s| s.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        .unwrap_or(0.0);
    let labelled: Vec<bool> = match (spec.labels, &scores) {
        (Labels::None, _) => vec![false; n],
        (Labels::All, _) => vec![true; n],
        (Labels::TopK(_), None) => vec![false; n],
        (Labels::TopK(k), Some(s)) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                s[b].abs()
                    .total_cmp(&s[a].abs())
                    .then_with(|| spec.image_ids[a].cmp(&spec.image_ids[b]))
            });
            let mut mark = vec![false; n];
            for &i in order.iter().take(k) {
                mark[i] = true;
            }
            mark
        }
    };

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        spec.width, spec.height, spec.width, spec.height
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (i, p) in spec.layout.y.iter().enumerate() {
        let (x, y) = map(*p);
        let fill = match &scores {
            Some(s) if max_abs > 0.0 => diverging_color(s[i] / max_abs),
            Some(_) => diverging_color(0.0),
            None => "#4d4d4d".to_string(),
        };
        let id = xml_escape(&spec.image_ids[i]);
        writeln!(
            out,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="{fill}" stroke="#333333" stroke-width="0.5"><title>{id}</title></circle>"##,
            spec.point_radius
        )
        .unwrap();
        if labelled[i] {
            writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="9">{id}</text>"#,
                x + spec.point_radius + 1.0,
                y - spec.point_radius
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_svg(spec: &RenderSpec<'_>, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), svg_string(spec)?.as_bytes())
}
