//! Compares three models on one axis: pole-percentage gaps, rank agreement,
//! sign disagreement and the images they disagree on most. Axes are then
//! ranked by their widest gap.

use latent_probe::{axis_divergence, rank_axes_by_divergence, ContrastMode, ScoreTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scores with `pct` percent on the right pole, plus a shared latent signal
/// so the models are correlated.
fn table(model: &str, axis: &str, latent: &[f64], pct: f64, rng: &mut ChaCha8Rng) -> ScoreTable {
    let n = latent.len();
    let mut raw: Vec<f64> = latent
        .iter()
        .map(|z| z + rng.random_range(-0.5..0.5))
        .collect();
    let mut sorted = raw.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cut = sorted[((pct / 100.0 * n as f64).round() as usize).min(n - 1)];
    raw.iter_mut().for_each(|s| *s = (*s - cut) * 0.02);
    let ids: Vec<String> = (0..n).map(|i| format!("work_{i:04}.jpg")).collect();
    ScoreTable::from_scores(model, axis, &ids, &raw)
}

fn main() -> latent_probe::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let latent: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let setups = [
        ("political_aesthetics", [9.2, 69.6, 81.8]),
        ("political", [59.4, 33.3, 4.0]),
        ("power", [40.0, 45.0, 47.0]),
    ];
    let mut reports = Vec::new();
    for (axis, pcts) in setups {
        let tables: Vec<ScoreTable> = ["siglip", "openai_clip", "openclip_laion"]
            .iter()
            .zip(pcts)
            .map(|(m, p)| table(m, axis, &latent, p, &mut rng))
            .collect();
        let report = axis_divergence(&tables.iter().collect::<Vec<_>>(), 3, ContrastMode::Zscore)?;
        println!(
            "{axis}: max gap {:.1} pp between {} and {}",
            report.max_gap_pp, report.max_gap_pair.0, report.max_gap_pair.1
        );
        for p in &report.model_pairs {
            println!(
                "  {:>14} vs {:<14} gap {:>5.1}  pearson {:+.3}  spearman {:+.3}  opposite poles {:.1}%",
                p.model_a,
                p.model_b,
                p.gap_pp,
                p.pearson.unwrap_or(f64::NAN),
                p.spearman.unwrap_or(f64::NAN),
                p.sign_disagreement_pct
            );
        }
        let worst = &report.model_pairs[0].contrasted[0];
        println!(
            "  largest z-score contrast: {} ({:+.4} vs {:+.4})",
            worst.image_relpth, worst.score_a, worst.score_b
        );
        reports.push(report);
    }
    println!("\naxes by divergence:");
    for (i, (axis, gap)) in rank_axes_by_divergence(&reports).iter().enumerate() {
        println!("  {}. {axis} ({gap:.1} pp)", i + 1);
    }
    Ok(())
}
