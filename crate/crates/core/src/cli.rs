//! Command-line driver.
//!
//! Output layout under `--out`:
//!
//! ```text
//! run.json                          resolved configuration
//! <model>/<axis>/scores.csv         score table
//! <model>/<axis>/summary.json       axis summary (score)
//! battery.json                      battery + divergence report (battery)
//! divergence/<axis>.json            pairwise diagnostics (battery)
//! ranked_axes.csv                   axes by max percentage-point gap (battery)
//! tsne/<model>/layout.csv           2-D layout (tsne)
//! tsne/<model>/kl_trace.csv
//! tsne/<model>/layout.svg           with --render
//! ```
//!
//! Model and axis names are used as path components with every character
//! outside `[A-Za-z0-9._-]` replaced by `_`.
//!
//! Exit codes: 0 success, 1 usage or precondition, 2 data validation,
//! 3 numeric failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::axis::{self, AxisSpec, ScoreMode};
use crate::corpus::{self, CorpusManifest};
use crate::divergence::{self, ContrastMode};
use crate::error::{Error, Result};
use crate::report::{self, Labels, RenderSpec};
use crate::stats::{self, ScoreGrid};
use crate::tsne::{self, TsneConfig};

#[derive(Debug, Parser)]
#[command(
    name = "latent-probe",
    version,
    about = "Probe embedding spaces with bipolar semantic axes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus and print per-model diagnostics.
    Ingest(IngestArgs),
    /// Score one model on one axis.
    Score(ScoreArgs),
    /// Score every model on every axis, summarize and compare models.
    Battery(BatteryArgs),
    /// Compute a t-SNE layout of one model's image embeddings.
    Tsne(TsneArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    model: String,
    #[arg(long)]
    axis: String,
    /// Axes file; defaults to the manifest's axes_file, then the bundled axes.
    #[arg(long)]
    axes: Option<PathBuf>,
    #[arg(long, default_value = "margin")]
    mode: ScoreMode,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BatteryArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    axes: Option<PathBuf>,
    /// Restrict to these models (repeatable); all manifest models by default.
    #[arg(long)]
    model: Vec<String>,
    #[arg(long, default_value = "margin")]
    mode: ScoreMode,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value = "zscore", value_parser = parse_contrast)]
    contrast: ContrastMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TsneArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 30.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 200.0)]
    lr: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write an SVG scatter plot.
    #[arg(long)]
    render: bool,
    /// Color the rendering by this axis' scores.
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    axes: Option<PathBuf>,
    #[arg(long, default_value = "margin")]
    mode: ScoreMode,
    /// Number of labelled points in the rendering.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_contrast(s: &str) -> std::result::Result<ContrastMode, String> {
    match s {
        "raw" => Ok(ContrastMode::Raw),
        "zscore" => Ok(ContrastMode::Zscore),
        other => Err(format!("unknown contrast mode {other:?} (raw|zscore)")),
    }
}

#[derive(Debug, Serialize)]
struct RunConfig<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    manifest: String,
    corpus_id: &'a str,
    models: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    axes_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    axes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<ScoreMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contrast: Option<ContrastMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tsne: Option<TsneConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    render: Option<bool>,
    out: String,
}

impl<'a> RunConfig<'a> {
    fn new(
        subcommand: &'static str,
        manifest_path: &Path,
        manifest: &'a CorpusManifest,
        out: &Path,
    ) -> Self {
        Self {
            tool: report::TOOL_NAME,
            version: report::TOOL_VERSION,
            subcommand,
            manifest: manifest_path.display().to_string(),
            corpus_id: &manifest.corpus_id,
            models: vec![],
            axes_file: None,
            axes: None,
            mode: None,
            k: None,
            contrast: None,
            tsne: None,
            render: None,
            out: out.display().to_string(),
        }
    }
}

/// Replaces characters that are unsafe in a path component.
pub fn path_component(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s == "." || s == ".." {
        format!("_{s}")
    } else {
        s
    }
}

/// Axes from `--axes`, else the manifest's axes file, else the bundled set.
fn resolve_axes(flag: Option<&Path>, manifest: &CorpusManifest) -> Result<(Vec<AxisSpec>, String)> {
    if let Some(p) = flag {
        return Ok((axis::load_axes(p)?, p.display().to_string()));
    }
    if let Some(p) = manifest.axes_path() {
        return Ok((axis::load_axes(&p)?, p.display().to_string()));
    }
    Ok((axis::default_axes(), "<bundled>".to_string()))
}

fn require_model(manifest: &CorpusManifest, model: &str) -> Result<()> {
    if manifest.model(model).is_none() {
        return Err(Error::InvalidArgument(format!(
            "model {model:?} not in manifest (available: {})",
            manifest.model_ids().join(", ")
        )));
    }
    Ok(())
}

fn find_axis<'a>(axes: &'a [AxisSpec], name: &str) -> Result<&'a AxisSpec> {
    axes.iter().find(|a| a.name == name).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "axis {name:?} not defined (available: {})",
            axes.iter()
                .map(|a| a.name.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ))
    })
}

fn write_run_json(out: &Path, config: &RunConfig<'_>) -> Result<()> {
    report::write_json(config, out.join("run.json"))
}

fn cmd_ingest(args: &IngestArgs) -> Result<String> {
    let manifest = corpus::load_manifest(&args.manifest)?;
    let mut msg = String::new();
    writeln!(
        msg,
        "corpus {}: {} images, {} models",
        manifest.corpus_id,
        manifest.len(),
        manifest.models.len()
    )
    .unwrap();
    let mut problems = Vec::new();
    let mut matrices = Vec::new();
    let axes = match manifest.axes_path() {
        Some(p) => Some(axis::load_axes(&p)?),
        None => None,
    };
    for entry in &manifest.models {
        let path = manifest.resolve(&entry.image_matrix_file);
        let raw = match corpus::read_matrix_file(&path) {
            Ok(raw) => raw,
            Err(e) => {
                problems.push(e.to_string());
                continue;
            }
        };
        let norms: Vec<f64> = raw
            .values
            .chunks_exact(raw.dim.max(1))
            .map(|r| r.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt())
            .collect();
        match corpus::load_embeddings(&manifest, &entry.model_id) {
            Ok(m) => {
                let (lo, hi) = norms
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &n| {
                        (lo.min(n), hi.max(n))
                    });
                writeln!(
                    msg,
                    "model {}: rows {} dim {} raw norms min {:.6} max {:.6} mean {:.6}",
                    entry.model_id,
                    m.n_rows(),
                    m.dim(),
                    lo,
                    hi,
                    stats::mean(&norms)
                )
                .unwrap();
                matrices.push(m);
            }
            Err(e) => {
                problems.push(e.to_string());
                continue;
            }
        }
        if entry.text_bank_file.is_some() {
            match corpus::load_text_bank(&manifest, &entry.model_id) {
                Ok(bank) => {
                    write!(msg, "  text bank: {} phrases", bank.len()).unwrap();
                    if let Some(axes) = &axes {
                        let missing: Vec<String> = axes
                            .iter()
                            .flat_map(|a| a.required_phrases())
                            .filter(|p| bank.get(p).is_none())
                            .collect();
                        write!(msg, ", {} axis phrases missing", missing.len()).unwrap();
                    }
                    msg.push('\n');
                }
                Err(e) => problems.push(e.to_string()),
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    if matrices.len() >= 2 {
        let aligned = corpus::align(matrices)?;
        writeln!(
            msg,
            "aligned {} models over {} images",
            aligned.model_ids().len(),
            aligned.len()
        )
        .unwrap();
    }
    if let Some(out) = &args.out {
        let mut cfg = RunConfig::new("ingest", &args.manifest, &manifest, out);
        cfg.models = manifest.model_ids().iter().map(|s| s.to_string()).collect();
        write_run_json(out, &cfg)?;
    }
    Ok(msg)
}

fn cmd_score(args: &ScoreArgs) -> Result<String> {
    let manifest = corpus::load_manifest(&args.manifest)?;
    require_model(&manifest, &args.model)?;
    let (axes, axes_file) = resolve_axes(args.axes.as_deref(), &manifest)?;
    let spec = find_axis(&axes, &args.axis)?;
    let k = args.k.clamp(1, manifest.len());

    let m = corpus::load_embeddings(&manifest, &args.model)?;
    let bank = corpus::load_text_bank(&manifest, &args.model)?;
    let axis_vectors = axis::build_axis(spec, &bank)?;
    let table = axis::score_corpus(&m, &axis_vectors, args.mode)?;
    let summary = stats::summarize(&table, k)?;

    let dir = args
        .out
        .join(path_component(&args.model))
        .join(path_component(&spec.name));
    report::write_score_csv(&table, dir.join("scores.csv"))?;
    report::write_json(&summary, dir.join("summary.json"))?;
    let mut cfg = RunConfig::new("score", &args.manifest, &manifest, &args.out);
    cfg.models = vec![args.model.clone()];
    cfg.axes_file = Some(axes_file);
    cfg.axes = Some(vec![spec.name.clone()]);
    cfg.mode = Some(args.mode);
    cfg.k = Some(k);
    write_run_json(&args.out, &cfg)?;

    Ok(format!(
        "{} / {} ({}): pct_left {} pct_right {} pct_zero {} sigma {:.4}\n",
        args.model,
        spec.name,
        args.mode,
        report::display_1dp(summary.pct_left),
        report::display_1dp(summary.pct_right),
        report::display_1dp(summary.pct_zero),
        summary.sigma
    ))
}

fn cmd_battery(args: &BatteryArgs) -> Result<String> {
    let manifest = corpus::load_manifest(&args.manifest)?;
    let models: Vec<String> = if args.model.is_empty() {
        manifest.model_ids().iter().map(|s| s.to_string()).collect()
    } else {
        for m in &args.model {
            require_model(&manifest, m)?;
        }
        args.model.clone()
    };
    let (axes, axes_file) = resolve_axes(args.axes.as_deref(), &manifest)?;
    let k = args.k.clamp(1, manifest.len());

    let axis_names: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
    let mut grid = ScoreGrid::new(models.clone(), axis_names.clone());
    for model in &models {
        let m = corpus::load_embeddings(&manifest, model)?;
        let bank = match corpus::load_text_bank(&manifest, model) {
            Ok(b) => b,
            // no text bank at all: every cell of this model is missing
            Err(Error::Validation(_)) => continue,
            Err(e) => return Err(e),
        };
        for spec in &axes {
            match axis::build_axis(spec, &bank) {
                Ok(v) => grid.insert(axis::score_corpus(&m, &v, args.mode)?),
                Err(Error::MissingPhrase { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let battery = stats::battery(&grid, k)?;

    let mut divergences = Vec::new();
    if models.len() >= 2 {
        for a in &axis_names {
            divergences.push(divergence::axis_divergence(
                &grid.axis_tables(a),
                k,
                args.contrast,
            )?);
        }
    }

    for model in &models {
        for a in &axis_names {
            let dir = args.out.join(path_component(model)).join(path_component(a));
            report::write_score_csv(grid.get(model, a).unwrap(), dir.join("scores.csv"))?;
        }
    }
    for d in &divergences {
        report::write_json(
            d,
            args.out
                .join("divergence")
                .join(format!("{}.json", path_component(&d.axis_name))),
        )?;
    }
    let ranked = divergence::rank_axes_by_divergence(&divergences);
    let mut ranked_csv = String::from("rank,axis_name,max_gap_pp\n");
    for (i, (a, gap)) in ranked.iter().enumerate() {
        writeln!(ranked_csv, "{},{},{}", i + 1, a, gap).unwrap();
    }
    if !ranked.is_empty() {
        std::fs::write(args.out.join("ranked_axes.csv"), ranked_csv)
            .map_err(|e| Error::io(args.out.join("ranked_axes.csv"), e))?;
    }

    let mut cfg = RunConfig::new("battery", &args.manifest, &manifest, &args.out);
    cfg.models = models.clone();
    cfg.axes_file = Some(axes_file);
    cfg.axes = Some(axis_names.clone());
    cfg.mode = Some(args.mode);
    cfg.k = Some(k);
    cfg.contrast = Some(args.contrast);
    let cfg_value = serde_json::to_value(&cfg).expect("config serializes");
    report::write_reports_json(
        &battery,
        &divergences,
        cfg_value,
        args.out.join("battery.json"),
    )?;
    write_run_json(&args.out, &cfg)?;

    let mut msg = String::new();
    writeln!(msg, "stability order (ascending mean sigma):").unwrap();
    for m in &battery.stability_order {
        writeln!(msg, "  {m}: {:.4}", battery.mean_sigma[m]).unwrap();
    }
    if !ranked.is_empty() {
        writeln!(msg, "axes by max gap (pp):").unwrap();
        for (a, gap) in &ranked {
            writeln!(msg, "  {a}: {}", report::display_1dp(*gap)).unwrap();
        }
    }
    Ok(msg)
}

fn cmd_tsne(args: &TsneArgs) -> Result<String> {
    let manifest = corpus::load_manifest(&args.manifest)?;
    require_model(&manifest, &args.model)?;
    let config = TsneConfig {
        perplexity: args.perplexity,
        n_iter: args.iters,
        learning_rate: args.lr,
        seed: args.seed,
        ..TsneConfig::default()
    };
    let config = TsneConfig {
        exaggeration_iters: config.exaggeration_iters.min(config.n_iter),
        momentum_switch_iter: config.momentum_switch_iter.min(config.n_iter),
        ..config
    };
    config.validate(manifest.len())?;

    let coloring_axis = match &args.axis {
        Some(name) => {
            let (axes, _) = resolve_axes(args.axes.as_deref(), &manifest)?;
            Some(find_axis(&axes, name)?.clone())
        }
        None => None,
    };

    let m = corpus::load_embeddings(&manifest, &args.model)?;
    let layout = tsne::embed(&m, &config)?;
    let dir = args.out.join("tsne").join(path_component(&args.model));
    report::write_layout_csv(&layout, m.image_ids(), dir.join("layout.csv"))?;
    report::write_kl_trace_csv(&layout, dir.join("kl_trace.csv"))?;

    if args.render {
        let table = match &coloring_axis {
            Some(spec) => {
                let bank = corpus::load_text_bank(&manifest, &args.model)?;
                Some(axis::score_corpus(
                    &m,
                    &axis::build_axis(spec, &bank)?,
                    args.mode,
                )?)
            }
            None => None,
        };
        let spec = RenderSpec {
            coloring: table.as_ref(),
            labels: if table.is_some() {
                Labels::TopK(args.k)
            } else {
                Labels::None
            },
            ..RenderSpec::new(&layout, m.image_ids())
        };
        report::render_svg(&spec, dir.join("layout.svg"))?;
    }

    let mut cfg = RunConfig::new("tsne", &args.manifest, &manifest, &args.out);
    cfg.models = vec![args.model.clone()];
    cfg.tsne = Some(config);
    cfg.render = Some(args.render);
    if let Some(spec) = &coloring_axis {
        cfg.axes = Some(vec![spec.name.clone()]);
        cfg.mode = Some(args.mode);
        cfg.k = Some(args.k);
    }
    write_run_json(&args.out, &cfg)?;
    Ok(format!(
        "{}: {} points, KL after exaggeration {:.4}, final KL {:.4}\n",
        args.model,
        layout.y.len(),
        layout.kl_after_exaggeration(),
        layout.final_kl()
    ))
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Score(a) => cmd_score(a),
        Command::Battery(a) => cmd_battery(a),
        Command::Tsne(a) => cmd_tsne(a),
    };
    match result {
        Ok(msg) => {
            print!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_components() {
        assert_eq!(
            path_component("openai/clip-vit-large@14"),
            "openai_clip-vit-large_14"
        );
        assert_eq!(path_component(".."), "_..");
        assert_eq!(path_component("body_norm"), "body_norm");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["latent-probe", "score", "--manifest", "x.json"]), 1);
        assert_eq!(run(["latent-probe", "frobnicate"]), 1);
        assert_eq!(run(["latent-probe", "--help"]), 0);
    }

    #[test]
    fn missing_manifest_exits_two() {
        assert_eq!(
            run([
                "latent-probe",
                "ingest",
                "--manifest",
                "/nonexistent/manifest.json"
            ]),
            2
        );
    }
}
