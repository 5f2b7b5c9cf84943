//! Probing how vision-language models organize one image corpus.
//!
//! Precomputed image and phrase embeddings are loaded from a manifest
//! ([`corpus`]), projected onto bipolar semantic axes ([`axis`]), summarized
//! per model ([`stats`]), compared across models ([`divergence`]), laid out
//! with exact t-SNE ([`tsne`]) and written to CSV, JSON and SVG ([`report`]).
//!
//! Runnable walkthroughs of each capability live in `examples/`:
//!
//! ```bash
//! cargo run -p latent-probe --example corpus_files
//! cargo run -p latent-probe --example margin_scoring
//! cargo run -p latent-probe --example axis_battery
//! cargo run -p latent-probe --example model_divergence
//! cargo run -p latent-probe --example tsne_layout
//! cargo run -p latent-probe --example perplexity_sweep
//! ```

pub mod axis;
pub mod cli;
pub mod corpus;
pub mod divergence;
pub mod error;
pub mod report;
pub mod stats;
pub mod tsne;
pub mod vector;

pub use axis::{
    build_axis, score_corpus, score_image, AxisSpec, AxisVectors, CombineMode, ScoreMode,
    ScoreTable,
};
pub use corpus::{
    align, load_embeddings, load_manifest, load_text_bank, CorpusManifest, EmbeddingMatrix,
    TextBank,
};
pub use divergence::{
    axis_divergence, pair_diagnostics, rank_axes_by_divergence, ContrastMode, DivergenceReport,
};
pub use error::{Error, Result};
pub use stats::{battery, summarize, AxisSummary, BatterySummary, ScoreGrid};
pub use tsne::{conditional_affinities, kl_divergence, run_tsne, TsneConfig, TsneLayout};
