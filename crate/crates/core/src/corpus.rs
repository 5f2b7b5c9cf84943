//! On-disk corpus: a JSON manifest plus one binary embedding matrix (`LEVS`)
//! and one optional text bank (`LEVT`) per model.
//!
//! Matrix file layout (all little-endian):
//!
//! ```text
//! [0..4)   b"LEVS"
//! [4..6)   version u16 = 1
//! [6..10)  rows u32
//! [10..14) dim u32
//! [14..)   rows * dim f32, row-major
//! ```
//!
//! Text bank layout: the same 14-byte header with magic `b"LEVT"` where
//! `rows` is the entry count, followed by `rows` records of
//! `u32 byte length | UTF-8 phrase | dim f32`.
//!
//! Rows are normalized to unit length when loaded, never when written.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector;

pub const MATRIX_MAGIC: &[u8; 4] = b"LEVS";
pub const TEXT_BANK_MAGIC: &[u8; 4] = b"LEVT";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub model_id: String,
    pub dim: i64,
    pub image_matrix_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_bank_file: Option<String>,
    /// Free-form provenance (checkpoint name, preprocessing id, template...).
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub corpus_id: String,
    pub image_ids: Vec<String>,
    pub models: Vec<ModelEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes_file: Option<String>,
    /// Directory relative file names are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.image_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image_ids.is_empty()
    }

    pub fn model(&self, model_id: &str) -> Option<&ModelEntry> {
        self.models.iter().find(|m| m.model_id == model_id)
    }

    pub fn model_ids(&self) -> Vec<&str> {
        self.models.iter().map(|m| m.model_id.as_str()).collect()
    }

    pub fn resolve(&self, file: &str) -> PathBuf {
        self.base_dir.join(file)
    }

    pub fn axes_path(&self) -> Option<PathBuf> {
        self.axes_file.as_deref().map(|f| self.resolve(f))
    }

    /// Structural checks plus existence of every referenced file.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.corpus_id.is_empty() {
            problems.push("corpus_id is empty".to_string());
        }
        if self.image_ids.is_empty() {
            problems.push("image_ids is empty".to_string());
        }
        let mut seen = HashSet::new();
        for (i, id) in self.image_ids.iter().enumerate() {
            if id.is_empty() {
                problems.push(format!("image_ids[{i}] is empty"));
            } else if !seen.insert(id.as_str()) {
                problems.push(format!("duplicate image id {id:?} at index {i}"));
            }
        }
        if self.models.is_empty() {
            problems.push("no models listed".to_string());
        }
        let mut model_seen = HashSet::new();
        for m in &self.models {
            if !model_seen.insert(m.model_id.as_str()) {
                problems.push(format!("duplicate model id {:?}", m.model_id));
            }
            if m.dim <= 0 {
                problems.push(format!(
                    "model {}: dim must be positive, got {}",
                    m.model_id, m.dim
                ));
            }
            let path = self.resolve(&m.image_matrix_file);
            if !path.is_file() {
                problems.push(format!(
                    "model {}: image matrix file {} not found",
                    m.model_id,
                    path.display()
                ));
            }
            if let Some(bank) = &m.text_bank_file {
                let path = self.resolve(bank);
                if !path.is_file() {
                    problems.push(format!(
                        "model {}: text bank file {} not found",
                        m.model_id,
                        path.display()
                    ));
                }
            }
        }
        if let Some(axes) = self.axes_path() {
            if !axes.is_file() {
                problems.push(format!("axes file {} not found", axes.display()));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Reads and validates a manifest. File names inside it are resolved
/// relative to the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<CorpusManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest: CorpusManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    manifest.validate()?;
    Ok(manifest)
}

/// Unit-normalized embeddings of one model over one corpus, row `i` being
/// `image_ids[i]`. Values are held in f64.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    model_id: String,
    corpus_id: String,
    image_ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Builds a matrix from raw row-major values, rejecting non-finite
    /// entries and zero rows, then normalizing every row.
    pub fn new(
        model_id: impl Into<String>,
        corpus_id: impl Into<String>,
        image_ids: Vec<String>,
        dim: usize,
        mut data: Vec<f64>,
    ) -> Result<Self> {
        let model_id = model_id.into();
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        if data.len() != image_ids.len() * dim {
            return Err(Error::DimMismatch {
                expected: image_ids.len() * dim,
                actual: data.len(),
            });
        }
        for (i, row) in data.chunks_exact_mut(dim).enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!(
                    "model {model_id}: non-finite value in row of image {}",
                    image_ids[i]
                )));
            }
            if vector::normalize_in_place(row).is_none() {
                return Err(Error::Numeric(format!(
                    "model {model_id}: zero-norm row for image {}",
                    image_ids[i]
                )));
            }
        }
        Ok(Self {
            model_id,
            corpus_id: corpus_id.into(),
            image_ids,
            dim,
            data,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn corpus_id(&self) -> &str {
        &self.corpus_id
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.image_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Flat row-major view.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Unit embeddings of pole phrases for one model, keyed verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct TextBank {
    model_id: String,
    dim: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

impl TextBank {
    pub fn new(model_id: impl Into<String>, dim: usize) -> Self {
        Self {
            model_id: model_id.into(),
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// Inserts (or replaces) a phrase; the vector is normalized.
    pub fn insert(&mut self, phrase: impl Into<String>, mut v: Vec<f64>) -> Result<()> {
        let phrase = phrase.into();
        if v.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) || vector::normalize_in_place(&mut v).is_none() {
            return Err(Error::Numeric(format!(
                "model {}: phrase {phrase:?} has a zero or non-finite embedding",
                self.model_id
            )));
        }
        self.entries.insert(phrase, v);
        Ok(())
    }

    pub fn get(&self, phrase: &str) -> Option<&[f64]> {
        self.entries.get(phrase).map(Vec::as_slice)
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_header(path: &Path, bytes: &[u8], magic: &[u8; 4]) -> Result<(usize, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            path,
            format!("file is {} bytes, shorter than the header", bytes.len()),
        ));
    }
    if &bytes[0..4] != magic {
        return Err(format_err(
            path,
            format!(
                "bad magic {:?}, expected {:?}",
                &bytes[0..4],
                std::str::from_utf8(magic).unwrap()
            ),
        ));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    Ok((rows, dim))
}

fn write_header(buf: &mut Vec<u8>, magic: &[u8; 4], rows: usize, dim: usize) -> Result<()> {
    let rows = u32::try_from(rows).map_err(|_| Error::InvalidArgument("too many rows".into()))?;
    let dim = u32::try_from(dim).map_err(|_| Error::InvalidArgument("dim too large".into()))?;
    buf.extend_from_slice(magic);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&dim.to_le_bytes());
    Ok(())
}

/// Raw contents of a `LEVS` file: shape and f32 values, no normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub rows: usize,
    pub dim: usize,
    pub values: Vec<f32>,
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<RawMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (rows, dim) = parse_header(path, &bytes, MATRIX_MAGIC)?;
    let expected = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| format_err(path, "shape overflows"))?;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!(
                "expected {expected} bytes for {rows}x{dim}, found {}",
                bytes.len()
            ),
        ));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(RawMatrix { rows, dim, values })
}

/// Writes row-major f32 values verbatim under a `LEVS` header.
pub fn write_matrix_raw(
    path: impl AsRef<Path>,
    rows: usize,
    dim: usize,
    values: &[f32],
) -> Result<()> {
    let path = path.as_ref();
    if values.len() != rows * dim {
        return Err(Error::DimMismatch {
            expected: rows * dim,
            actual: values.len(),
        });
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + values.len() * 4);
    write_header(&mut buf, MATRIX_MAGIC, rows, dim)?;
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Writes a loaded matrix back to disk, rounding values to f32.
pub fn write_matrix(path: impl AsRef<Path>, m: &EmbeddingMatrix) -> Result<()> {
    let values: Vec<f32> = m.as_slice().iter().map(|&x| x as f32).collect();
    write_matrix_raw(path, m.n_rows(), m.dim(), &values)
}

pub fn load_embeddings(manifest: &CorpusManifest, model_id: &str) -> Result<EmbeddingMatrix> {
    let entry = manifest
        .model(model_id)
        .ok_or_else(|| Error::InvalidArgument(format!("model {model_id:?} not in manifest")))?;
    let path = manifest.resolve(&entry.image_matrix_file);
    let raw = read_matrix_file(&path)?;
    if raw.rows != manifest.len() {
        return Err(format_err(
            &path,
            format!(
                "{} rows but manifest lists {} images",
                raw.rows,
                manifest.len()
            ),
        ));
    }
    if entry.dim <= 0 || raw.dim != entry.dim as usize {
        return Err(format_err(
            &path,
            format!("dim {} but manifest declares {}", raw.dim, entry.dim),
        ));
    }
    let data = raw.values.iter().map(|&x| x as f64).collect();
    EmbeddingMatrix::new(
        model_id,
        manifest.corpus_id.clone(),
        manifest.image_ids.clone(),
        raw.dim,
        data,
    )
}

pub fn read_text_bank(path: impl AsRef<Path>, model_id: &str) -> Result<TextBank> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (count, dim) = parse_header(path, &bytes, TEXT_BANK_MAGIC)?;
    let mut bank = TextBank::new(model_id, dim);
    let mut pos = HEADER_LEN;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        let end = pos
            .checked_add(n)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| format_err(path, format!("truncated record at byte {}", *pos)))?;
        let s = &bytes[*pos..end];
        *pos = end;
        Ok(s)
    };
    for _ in 0..count {
        let len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let phrase = std::str::from_utf8(take(&mut pos, len)?)
            .map_err(|e| format_err(path, format!("phrase is not UTF-8: {e}")))?
            .to_string();
        let v: Vec<f64> = take(&mut pos, dim * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        if bank.get(&phrase).is_some() {
            return Err(format_err(path, format!("duplicate phrase {phrase:?}")));
        }
        bank.insert(phrase, v)?;
    }
    if pos != bytes.len() {
        return Err(format_err(
            path,
            format!("{} trailing bytes", bytes.len() - pos),
        ));
    }
    Ok(bank)
}

/// Writes `(phrase, vector)` records verbatim under a `LEVT` header.
pub fn write_text_bank_raw<'a, I>(path: impl AsRef<Path>, dim: usize, entries: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a [f32])>,
{
    let path = path.as_ref();
    let mut body = Vec::new();
    let mut count = 0usize;
    for (phrase, v) in entries {
        if v.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        let len = u32::try_from(phrase.len())
            .map_err(|_| Error::InvalidArgument("phrase too long".into()))?;
        body.extend_from_slice(&len.to_le_bytes());
        body.extend_from_slice(phrase.as_bytes());
        for x in v {
            body.extend_from_slice(&x.to_le_bytes());
        }
        count += 1;
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + body.len());
    write_header(&mut buf, TEXT_BANK_MAGIC, count, dim)?;
    buf.extend_from_slice(&body);
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn write_text_bank(path: impl AsRef<Path>, bank: &TextBank) -> Result<()> {
    let converted: Vec<(&str, Vec<f32>)> = bank
        .entries
        .iter()
        .map(|(k, v)| (k.as_str(), v.iter().map(|&x| x as f32).collect()))
        .collect();
    write_text_bank_raw(
        path,
        bank.dim,
        converted.iter().map(|(k, v)| (*k, v.as_slice())),
    )
}

pub fn load_text_bank(manifest: &CorpusManifest, model_id: &str) -> Result<TextBank> {
    let entry = manifest
        .model(model_id)
        .ok_or_else(|| Error::InvalidArgument(format!("model {model_id:?} not in manifest")))?;
    let file = entry.text_bank_file.as_deref().ok_or_else(|| {
        Error::Validation(vec![format!("model {model_id} has no text_bank_file")])
    })?;
    let path = manifest.resolve(file);
    let bank = read_text_bank(&path, model_id)?;
    if entry.dim <= 0 || bank.dim() != entry.dim as usize {
        return Err(format_err(
            &path,
            format!("dim {} but manifest declares {}", bank.dim(), entry.dim),
        ));
    }
    Ok(bank)
}

/// Several models' matrices over the same corpus, indexed by image.
#[derive(Debug, Clone)]
pub struct AlignedCorpus {
    matrices: Vec<EmbeddingMatrix>,
}

/// One image and its row in every model, in model order.
#[derive(Debug)]
pub struct AlignedRow<'a> {
    pub image_index: usize,
    pub image_id: &'a str,
    pub rows: Vec<&'a [f64]>,
}

pub fn align(models: Vec<EmbeddingMatrix>) -> Result<AlignedCorpus> {
    if models.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "alignment needs at least 2 matrices, got {}",
            models.len()
        )));
    }
    let first = &models[0];
    for m in &models[1..] {
        if m.corpus_id != first.corpus_id {
            return Err(Error::Alignment(format!(
                "model {} is from corpus {:?}, model {} from {:?}",
                first.model_id, first.corpus_id, m.model_id, m.corpus_id
            )));
        }
        if m.image_ids != first.image_ids {
            return Err(Error::Alignment(format!(
                "models {} and {} list different image ids",
                first.model_id, m.model_id
            )));
        }
    }
    Ok(AlignedCorpus { matrices: models })
}

impl AlignedCorpus {
    pub fn len(&self) -> usize {
        self.matrices[0].n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn corpus_id(&self) -> &str {
        self.matrices[0].corpus_id()
    }

    pub fn image_ids(&self) -> &[String] {
        self.matrices[0].image_ids()
    }

    pub fn model_ids(&self) -> Vec<&str> {
        self.matrices
            .iter()
            .map(EmbeddingMatrix::model_id)
            .collect()
    }

    pub fn matrices(&self) -> &[EmbeddingMatrix] {
        &self.matrices
    }

    pub fn get(&self, image_index: usize) -> AlignedRow<'_> {
        AlignedRow {
            image_index,
            image_id: &self.image_ids()[image_index],
            rows: self.matrices.iter().map(|m| m.row(image_index)).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = AlignedRow<'_>> {
        (0..self.len()).map(move |i| self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img_{i}.jpg")).collect()
    }

    fn fixture(dir: &Path, image_ids: Vec<String>, dim: usize) -> PathBuf {
        let n = image_ids.len();
        let values: Vec<f32> = (0..n * dim).map(|i| (i % 7) as f32 + 1.0).collect();
        write_matrix_raw(dir.join("m.levs"), n, dim, &values).unwrap();
        let manifest = CorpusManifest {
            corpus_id: "c".into(),
            image_ids,
            models: vec![ModelEntry {
                model_id: "m".into(),
                dim: dim as i64,
                image_matrix_file: "m.levs".into(),
                text_bank_file: None,
                extra: BTreeMap::new(),
            }],
            axes_file: None,
            base_dir: PathBuf::new(),
        };
        let path = dir.join("manifest.json");
        manifest.save(&path).unwrap();
        path
    }

    #[test]
    fn manifest_order_defines_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = fixture(
            dir.path(),
            vec!["c.jpg".into(), "a.jpg".into(), "b.jpg".into()],
            4,
        );
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.image_ids, vec!["c.jpg", "a.jpg", "b.jpg"]);
        let e = load_embeddings(&m, "m").unwrap();
        assert_eq!(e.n_rows(), 3);
        assert_eq!(e.image_ids()[1], "a.jpg");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = fixture(dir.path(), vec!["a.jpg".into(), "a.jpg".into()], 4);
        match load_manifest(&path) {
            Err(Error::Validation(p)) => assert!(p[0].contains("duplicate image id \"a.jpg\"")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_matrix_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = fixture(dir.path(), ids(3), 4);
        fs::remove_file(dir.path().join("m.levs")).unwrap();
        let err = load_manifest(&path).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err
            .to_string()
            .contains(&dir.path().join("m.levs").display().to_string()));
    }

    #[test]
    fn nonpositive_dim_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = fixture(dir.path(), ids(2), 4);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"dim\": 4", "\"dim\": 0");
        fs::write(&path, text).unwrap();
        assert!(matches!(load_manifest(&path), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_manifest_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        fs::write(&path, "{ not json").unwrap();
        assert!(matches!(load_manifest(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn three_four_five_row_normalized_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = fixture(dir.path(), ids(1), 4);
        write_matrix_raw(dir.path().join("m.levs"), 1, 4, &[3.0, 4.0, 0.0, 0.0]).unwrap();
        let m = load_manifest(&path).unwrap();
        let e = load_embeddings(&m, "m").unwrap();
        assert_eq!(e.row(0), &[0.6, 0.8, 0.0, 0.0]);
    }

    #[test]
    fn row_count_mismatch_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = fixture(dir.path(), ids(3), 2);
        write_matrix_raw(dir.path().join("m.levs"), 2, 2, &[1.0; 4]).unwrap();
        let m = load_manifest(&path).unwrap();
        assert!(matches!(
            load_embeddings(&m, "m"),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn truncated_and_bad_magic_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = fixture(dir.path(), ids(2), 2);
        let m = load_manifest(&path).unwrap();
        let file = dir.path().join("m.levs");
        let mut bytes = fs::read(&file).unwrap();
        bytes.pop();
        fs::write(&file, &bytes).unwrap();
        assert!(matches!(
            load_embeddings(&m, "m"),
            Err(Error::Format { .. })
        ));
        bytes.push(0);
        bytes[0] = b'X';
        fs::write(&file, &bytes).unwrap();
        let err = load_embeddings(&m, "m").unwrap_err();
        assert!(err.to_string().contains("bad magic"));
    }

    #[test]
    fn zero_row_names_the_image() {
        let dir = tempfile::tempdir().unwrap();
        let path = fixture(dir.path(), vec!["ok.jpg".into(), "blank.jpg".into()], 2);
        write_matrix_raw(dir.path().join("m.levs"), 2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let m = load_manifest(&path).unwrap();
        let err = load_embeddings(&m, "m").unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
        assert!(err.to_string().contains("blank.jpg"));
    }

    #[test]
    fn nan_row_rejected() {
        let r = EmbeddingMatrix::new("m", "c", ids(1), 2, vec![f64::NAN, 1.0]);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }

    #[test]
    fn text_bank_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.levt");
        let a = [1.0f32, 0.0, 0.0];
        let b = [0.0f32, 3.0, 4.0];
        write_text_bank_raw(
            &path,
            3,
            [("Apolitical, neutral", &a[..]), ("élan", &b[..])],
        )
        .unwrap();
        let bank = read_text_bank(&path, "m").unwrap();
        assert_eq!(bank.len(), 2);
        assert_eq!(bank.get("Apolitical, neutral"), Some(&[1.0, 0.0, 0.0][..]));
        assert_eq!(bank.get("élan"), Some(&[0.0, 0.6, 0.8][..]));
        assert!(bank.get("apolitical, neutral").is_none());

        let again = dir.path().join("bank2.levt");
        write_text_bank(&again, &bank).unwrap();
        let reread = read_text_bank(&again, "m").unwrap();
        for phrase in bank.phrases() {
            let (x, y) = (bank.get(phrase).unwrap(), reread.get(phrase).unwrap());
            assert!(x.iter().zip(y).all(|(a, b)| (a - b).abs() < 1e-7));
        }
    }

    #[test]
    fn truncated_text_bank() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.levt");
        write_text_bank_raw(&path, 2, [("x", &[1.0f32, 0.0][..])]).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 2);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_text_bank(&path, "m"),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn align_checks_corpus() {
        let a = EmbeddingMatrix::new("a", "c1", ids(3), 2, vec![1.0; 6]).unwrap();
        let b = EmbeddingMatrix::new("b", "c1", ids(3), 3, vec![1.0; 9]).unwrap();
        let c = EmbeddingMatrix::new("c", "c2", ids(3), 2, vec![1.0; 6]).unwrap();
        let aligned = align(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(aligned.len(), 3);
        let rows: Vec<_> = aligned.iter().collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].rows[0], a.row(2));
        assert_eq!(rows[2].rows[1], b.row(2));
        assert!(matches!(align(vec![a, c]), Err(Error::Alignment(_))));
    }
}
