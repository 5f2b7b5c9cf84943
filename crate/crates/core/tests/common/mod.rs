//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use latent_probe::corpus::{self, CorpusManifest, ModelEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v = gaussian(rng, dim);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("img_{i:04}.jpg")).collect()
}

/// Random orthogonal transform as a product of Householder reflections.
pub struct Orthogonal {
    reflectors: Vec<Vec<f64>>,
}

impl Orthogonal {
    pub fn random(rng: &mut ChaCha8Rng, dim: usize) -> Self {
        Self {
            reflectors: (0..dim.min(6)).map(|_| unit_vector(rng, dim)).collect(),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for u in &self.reflectors {
            let d: f64 = u.iter().zip(&out).map(|(a, b)| a * b).sum();
            for (o, ui) in out.iter_mut().zip(u) {
                *o -= 2.0 * d * ui;
            }
        }
        out
    }
}

/// Brute-force sign counter and two-pass population std.
pub struct BruteSummary {
    pub right: usize,
    pub left: usize,
    pub zero: usize,
    pub sigma: f64,
}

pub fn brute_summary(scores: &[f64]) -> BruteSummary {
    let mut right = 0;
    let mut left = 0;
    let mut zero = 0;
    for s in scores {
        match s.partial_cmp(&0.0).unwrap() {
            std::cmp::Ordering::Greater => right += 1,
            std::cmp::Ordering::Less => left += 1,
            std::cmp::Ordering::Equal => zero += 1,
        }
    }
    let n = scores.len() as f64;
    let mut total = 0.0;
    for s in scores {
        total += s;
    }
    let mean = total / n;
    let mut ss = 0.0;
    for s in scores {
        ss += (s - mean).powi(2);
    }
    BruteSummary {
        right,
        left,
        zero,
        sigma: (ss / n).sqrt(),
    }
}

/// Textbook Pearson: covariance over the product of standard deviations,
/// each from its own population formula.
pub fn textbook_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / n;
    let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / n).sqrt();
    cov / (sx * sy)
}

/// Rank by counting: 1 + #smaller + (#equal - 1) / 2.
pub fn counting_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let smaller = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn textbook_spearman(x: &[f64], y: &[f64]) -> f64 {
    textbook_pearson(&counting_ranks(x), &counting_ranks(y))
}

/// The 15 published `(image_relpth, score, cos_left, cos_right, certainty)`
/// rows with their published `image_index`.
pub struct PublishedRow {
    pub image_index: usize,
    pub image_relpth: String,
    pub score_axis: f64,
    pub cos_left: f64,
    pub cos_right: f64,
    pub certainty: f64,
    pub line: String,
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
}

pub fn published_rows() -> Vec<PublishedRow> {
    let text = std::fs::read_to_string(fixtures_dir().join("political_masks_openai.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            PublishedRow {
                image_index: f[0].parse().unwrap(),
                image_relpth: f[1].to_string(),
                score_axis: f[2].parse().unwrap(),
                cos_left: f[3].parse().unwrap(),
                cos_right: f[4].parse().unwrap(),
                certainty: f[6].parse().unwrap(),
                line: line.to_string(),
            }
        })
        .collect()
}

pub struct ModelFixture {
    pub model_id: String,
    pub dim: usize,
    pub rows: Vec<Vec<f32>>,
    /// `None` writes no text bank.
    pub bank: Option<Vec<(String, Vec<f32>)>>,
}

/// Writes a manifest plus LEVS/LEVT files into `dir`; returns the manifest path.
pub fn write_corpus(
    dir: &Path,
    corpus_id: &str,
    image_ids: &[String],
    models: &[ModelFixture],
) -> PathBuf {
    let mut entries = Vec::new();
    for m in models {
        let file = format!("{}.levs", m.model_id);
        let flat: Vec<f32> = m.rows.iter().flatten().copied().collect();
        corpus::write_matrix_raw(dir.join(&file), m.rows.len(), m.dim, &flat).unwrap();
        let text_bank_file = m.bank.as_ref().map(|bank| {
            let file = format!("{}.levt", m.model_id);
            corpus::write_text_bank_raw(
                dir.join(&file),
                m.dim,
                bank.iter().map(|(p, v)| (p.as_str(), v.as_slice())),
            )
            .unwrap();
            file
        });
        entries.push(ModelEntry {
            model_id: m.model_id.clone(),
            dim: m.dim as i64,
            image_matrix_file: file,
            text_bank_file,
            extra: BTreeMap::new(),
        });
    }
    let manifest = CorpusManifest {
        corpus_id: corpus_id.into(),
        image_ids: image_ids.to_vec(),
        models: entries,
        axes_file: None,
        base_dir: PathBuf::new(),
    };
    let path = dir.join("manifest.json");
    manifest.save(&path).unwrap();
    path
}

/// A one-model corpus whose political-axis cosines reproduce the published
/// mask rows at their published indices, preceded by filler images.
///
/// Poles are the first two basis vectors of a 3-D space; an image with
/// cosines `(l, r)` is `(l, r, sqrt(1 - l^2 - r^2))`.
pub fn mask_corpus(dir: &Path) -> PathBuf {
    let published = published_rows();
    let first = published[0].image_index;
    let mut image_ids = Vec::new();
    let mut rows = Vec::new();
    let mut r = rng(7);
    for i in 0..first {
        image_ids.push(format!("filler_{i:03}.jpg"));
        let l: f64 = r.random_range(-0.3..0.3);
        let rr: f64 = r.random_range(-0.3..0.3);
        rows.push(vec![
            l as f32,
            rr as f32,
            (1.0 - l * l - rr * rr).sqrt() as f32,
        ]);
    }
    for p in &published {
        image_ids.push(p.image_relpth.clone());
        let z = (1.0 - p.cos_left * p.cos_left - p.cos_right * p.cos_right).sqrt();
        rows.push(vec![p.cos_left as f32, p.cos_right as f32, z as f32]);
    }
    let bank = vec![
        ("apolitical neutral".to_string(), vec![1.0f32, 0.0, 0.0]),
        ("political engaged".to_string(), vec![0.0f32, 1.0, 0.0]),
    ];
    write_corpus(
        dir,
        "masks",
        &image_ids,
        &[ModelFixture {
            model_id: "openai_clip".into(),
            dim: 3,
            rows,
            bank: Some(bank),
        }],
    )
}

/// Three well-separated Gaussian clusters in `dim` dimensions,
/// `per_cluster` points each. Returns row-major data and labels.
pub fn clusters(seed: u64, per_cluster: usize, dim: usize) -> (Vec<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for c in 0..3 {
        let mut center = vec![0.0; dim];
        center[c] = 10.0;
        for _ in 0..per_cluster {
            let noise = gaussian(&mut r, dim);
            data.extend(center.iter().zip(&noise).map(|(a, b)| a + b));
            labels.push(c);
        }
    }
    (data, labels)
}

/// Mean fraction of each point's `k` nearest layout neighbours sharing its label.
pub fn knn_purity(y: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
    let n = y.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let same = d
            .iter()
            .take(k)
            .filter(|(_, j)| labels[*j] == labels[i])
            .count();
        total += same as f64 / k as f64;
    }
    total / n as f64
}
