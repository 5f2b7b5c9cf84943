//! Scores a handful of images on the political axis in both modes.
//!
//! The poles sit on the first two coordinates, so each image's cosines can be
//! chosen directly; these are the African mask rows of the published table.

use latent_probe::axis::ImageScore;
use latent_probe::{
    build_axis, score_corpus, AxisSpec, CombineMode, EmbeddingMatrix, ScoreMode, TextBank,
};

fn main() -> latent_probe::Result<()> {
    let masks = [
        (
            "masque_africain_1.jpeg",
            0.13917076587677002,
            0.13645406067371368,
        ),
        (
            "masque_africain_5.jpg",
            0.1515263170003891,
            0.1236598864197731,
        ),
        (
            "masque_africain_7.jpg",
            0.1429780274629593,
            0.14155761897563934,
        ),
    ];
    let mut bank = TextBank::new("openai_clip", 3);
    bank.insert("apolitical neutral", vec![1.0, 0.0, 0.0])?;
    bank.insert("political engaged", vec![0.0, 1.0, 0.0])?;
    let spec = AxisSpec::new(
        "political",
        &["apolitical neutral"],
        &["political engaged"],
        CombineMode::Centroid,
    );
    let axis = build_axis(&spec, &bank)?;

    let ids: Vec<String> = masks.iter().map(|m| m.0.to_string()).collect();
    let data: Vec<f64> = masks
        .iter()
        .flat_map(|&(_, l, r)| [l, r, (1.0f64 - l * l - r * r).sqrt()])
        .collect();
    let m = EmbeddingMatrix::new("openai_clip", "masks", ids, 3, data)?;

    for mode in [ScoreMode::Margin, ScoreMode::Projection] {
        let table = score_corpus(&m, &axis, mode)?;
        println!("{mode} (pole distance {:.4})", axis.pole_distance);
        for r in &table.rows {
            println!(
                "  {:<24} {:+.6}  certainty {:.6}",
                r.image_relpth, r.score_axis, r.certainty
            );
        }
    }

    // margin straight from a pair of cosines
    let s = ImageScore::from_cosines(0.1515263170003891, 0.1236598864197731);
    println!(
        "masque_africain_5.jpg margin {} (published -0.027866430580615997)",
        s.score_axis
    );

    // swapping the poles flips every sign
    let flipped = score_corpus(&m, &build_axis(&spec.swapped(), &bank)?, ScoreMode::Margin)?;
    println!("swapped poles: {:?}", flipped.scores());
    Ok(())
}
