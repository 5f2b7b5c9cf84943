//! Writes a small two-model corpus (manifest, LEVS matrices, LEVT text banks),
//! loads it back and aligns the models row by row.

use std::collections::BTreeMap;

use latent_probe::corpus::{self, CorpusManifest, ModelEntry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> latent_probe::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let image_ids: Vec<String> = [
        "a/kirchner.jpg",
        "b/kosuth_neon.jpg",
        "c/masque_1.jpg",
        "d/signac.jpg",
    ]
    .map(String::from)
    .to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut models = Vec::new();
    for (model_id, dim) in [("openai_clip", 768usize), ("siglip", 1024)] {
        // raw encoder output, not normalized: the loader does that
        let values: Vec<f32> = (0..image_ids.len() * dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let matrix_file = format!("{model_id}.levs");
        corpus::write_matrix_raw(dir.path().join(&matrix_file), image_ids.len(), dim, &values)?;

        let phrases = ["apolitical neutral", "political engaged"];
        let vectors: Vec<Vec<f32>> = phrases
            .iter()
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let bank_file = format!("{model_id}.levt");
        corpus::write_text_bank_raw(
            dir.path().join(&bank_file),
            dim,
            phrases
                .iter()
                .copied()
                .zip(vectors.iter().map(Vec::as_slice)),
        )?;
        models.push(ModelEntry {
            model_id: model_id.into(),
            dim: dim as i64,
            image_matrix_file: matrix_file,
            text_bank_file: Some(bank_file),
            extra: BTreeMap::new(),
        });
    }
    let manifest = CorpusManifest {
        corpus_id: "demo".into(),
        image_ids,
        models,
        axes_file: None,
        base_dir: Default::default(),
    };
    let path = dir.path().join("manifest.json");
    manifest.save(&path)?;

    let manifest = corpus::load_manifest(&path)?;
    let mut matrices = Vec::new();
    for id in manifest.model_ids() {
        let m = corpus::load_embeddings(&manifest, id)?;
        let bank = corpus::load_text_bank(&manifest, id)?;
        let norm: f64 = m.row(0).iter().map(|x| x * x).sum::<f64>().sqrt();
        println!(
            "{id}: {} rows x {} dims, row 0 norm {norm:.6}, {} phrases",
            m.n_rows(),
            m.dim(),
            bank.len()
        );
        matrices.push(m);
    }
    let aligned = corpus::align(matrices)?;
    for row in aligned.iter() {
        let dims: Vec<usize> = row.rows.iter().map(|r| r.len()).collect();
        println!(
            "{:>2} {:<20} dims {:?}",
            row.image_index, row.image_id, dims
        );
    }

    // a header that does not match the manifest is reported with the file name
    let bad = dir.path().join("siglip.levs");
    let mut bytes = std::fs::read(&bad).expect("read");
    bytes[0] = b'X';
    std::fs::write(&bad, bytes).expect("write");
    if let Err(e) = corpus::load_embeddings(&manifest, "siglip") {
        println!("corrupted file: {e} (exit code {})", e.exit_code());
    }
    Ok(())
}
