//! Scores three synthetic models on the eight bundled axes and prints the
//! per-axis summaries, the stability ordering and axis correlations.

use std::collections::BTreeSet;

use latent_probe::axis::default_axes;
use latent_probe::report::display_1dp;
use latent_probe::{
    battery, build_axis, score_corpus, EmbeddingMatrix, ScoreGrid, ScoreMode, TextBank,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn main() -> latent_probe::Result<()> {
    let axes = default_axes();
    let phrases: BTreeSet<String> = axes.iter().flat_map(|a| a.required_phrases()).collect();
    let n = 200;
    let ids: Vec<String> = (0..n).map(|i| format!("work_{i:03}.jpg")).collect();
    let models = [("openai_clip", 48), ("openclip_laion", 48), ("siglip", 64)];

    let mut grid = ScoreGrid::new(
        models.iter().map(|m| m.0.to_string()).collect(),
        axes.iter().map(|a| a.name.clone()).collect(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (model, dim) in models {
        let m = EmbeddingMatrix::new(model, "demo", ids.clone(), dim, gaussian(&mut rng, n * dim))?;
        let mut bank = TextBank::new(model, dim);
        for p in &phrases {
            bank.insert(p.clone(), gaussian(&mut rng, dim))?;
        }
        for spec in &axes {
            grid.insert(score_corpus(
                &m,
                &build_axis(spec, &bank)?,
                ScoreMode::Margin,
            )?);
        }
    }

    let b = battery(&grid, 3)?;
    println!(
        "{:<24} {:<16} {:>7} {:>7} {:>7}",
        "axis", "model", "left", "right", "sigma"
    );
    for a in &b.axes {
        for m in &b.models {
            let s = b.summary(m, a).expect("full grid");
            println!(
                "{a:<24} {m:<16} {:>7} {:>7} {:>7.3}",
                display_1dp(s.pct_left),
                display_1dp(s.pct_right),
                s.sigma
            );
        }
    }
    println!("\nmost stable first:");
    for m in &b.stability_order {
        println!("  {m}: mean sigma {:.4}", b.mean_sigma[m]);
    }
    let corr = &b.axis_correlations["openai_clip"];
    println!(
        "\nopenai_clip Spearman, {} vs {}: {:?}",
        corr.axes[0], corr.axes[1], corr.matrix[0][1]
    );
    let top = &b.summary("siglip", "political").expect("cell").top_right;
    println!("siglip, most political: {:?}", top);
    Ok(())
}
