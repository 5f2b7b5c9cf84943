//! How layout quality depends on perplexity: for each setting, the final KL
//! and how often a point's 10 nearest layout neighbours share its cluster.

use latent_probe::tsne::{
    conditional_affinities, run_tsne, TsneConfig, DEFAULT_PERPLEXITY_TOLERANCE,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn purity(y: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..y.len() {
        let mut d: Vec<(f64, usize)> = (0..y.len())
            .filter(|&j| j != i)
            .map(|j| ((y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        total += d[..k]
            .iter()
            .filter(|(_, j)| labels[*j] == labels[i])
            .count() as f64
            / k as f64;
    }
    total / y.len() as f64
}

fn main() -> latent_probe::Result<()> {
    let (n_clusters, per_cluster, dim) = (4, 25, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for c in 0..n_clusters {
        for _ in 0..per_cluster {
            for d in 0..dim {
                let x: f64 = StandardNormal.sample(&mut rng);
                data.push(x + if d == c { 4.0 } else { 0.0 });
            }
            labels.push(c);
        }
    }
    let n = labels.len();
    let keys: Vec<String> = (0..n).map(|i| format!("p{i:03}")).collect();

    println!("{:>10} {:>10} {:>10}", "perplexity", "final KL", "purity");
    for perplexity in [2.0, 5.0, 10.0, 20.0, 30.0] {
        let p =
            conditional_affinities(&data, dim, perplexity, DEFAULT_PERPLEXITY_TOLERANCE, 1e-12)?;
        let config = TsneConfig {
            perplexity,
            ..TsneConfig::default()
        };
        let layout = run_tsne(&p, &config, &keys)?;
        println!(
            "{perplexity:>10} {:>10.4} {:>10.3}",
            layout.final_kl(),
            purity(&layout.y, &labels, 10)
        );
    }

    // (N - 1) / 3 is the upper bound
    let too_high = TsneConfig {
        perplexity: 40.0,
        ..TsneConfig::default()
    };
    if let Err(e) = too_high.validate(n) {
        println!("perplexity 40 with N = {n}: {e}");
    }
    Ok(())
}
