//! Lays out a clustered corpus with exact t-SNE and writes the layout CSV,
//! the KL trace and an SVG colored by axis scores.

use latent_probe::report::{self, Labels, RenderSpec};
use latent_probe::tsne::{embed, TsneConfig};
use latent_probe::{EmbeddingMatrix, ScoreTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> latent_probe::Result<()> {
    let (per_cluster, dim) = (30, 32);
    let noise = Normal::new(0.0, 0.3).expect("valid");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut data = Vec::new();
    let mut ids = Vec::new();
    for (c, school) in ["impressionism", "expressionism", "conceptual"]
        .iter()
        .enumerate()
    {
        for i in 0..per_cluster {
            ids.push(format!("{school}_{i:02}.jpg"));
            data.extend((0..dim).map(|d| if d == c { 1.0 } else { 0.0 } + noise.sample(&mut rng)));
        }
    }
    let m = EmbeddingMatrix::new("openai_clip", "schools", ids.clone(), dim, data)?;
    let config = TsneConfig {
        perplexity: 15.0,
        ..TsneConfig::default()
    };
    let layout = embed(&m, &config)?;
    println!(
        "KL after exaggeration {:.4}, final {:.4}",
        layout.kl_after_exaggeration(),
        layout.final_kl()
    );

    // color by the first coordinate, as if it were an axis score
    let scores: Vec<f64> = (0..m.n_rows()).map(|i| m.row(i)[0] - m.row(i)[2]).collect();
    let table = ScoreTable::from_scores("openai_clip", "luminance", &ids, &scores);

    let out = std::env::temp_dir().join("latent-probe-tsne-example");
    report::write_layout_csv(&layout, &ids, out.join("layout.csv"))?;
    report::write_kl_trace_csv(&layout, out.join("kl_trace.csv"))?;
    let spec = RenderSpec {
        coloring: Some(&table),
        labels: Labels::TopK(5),
        ..RenderSpec::new(&layout, &ids)
    };
    report::render_svg(&spec, out.join("layout.svg"))?;
    println!("wrote {}", out.display());
    Ok(())
}
