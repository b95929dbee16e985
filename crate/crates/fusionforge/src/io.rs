//! On-disk formats: feature files, manifests, model files and CSV outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use fusionforge_core::codec::{decode_feature_file, encode_feature_file};
use fusionforge_core::fusion::{decode_model, encode_model, TrainingMeta};
use fusionforge_core::{Dataset, FeatureRecord, FusionModel, ManifestEntry, ModalitySpec, Pooling, Split};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn core_at(path: &Path) -> impl FnOnce(fusionforge_core::Error) -> Error + '_ {
    move |e| Error::file(path, e.to_string())
}

pub fn write_feature_file(records: &[FeatureRecord], dim: usize, path: &Path) -> Result<()> {
    let bytes = encode_feature_file(records, dim)?;
    write_bytes(path, &bytes)
}

/// Records in file order, plus the header dim.
pub fn read_feature_file(path: &Path) -> Result<(usize, Vec<FeatureRecord>)> {
    decode_feature_file(&read_bytes(path)?).map_err(|e| match e {
        // keep the typed error for callers that match on it
        e @ (fusionforge_core::Error::BadMagic { .. }
        | fusionforge_core::Error::Truncated { .. }
        | fusionforge_core::Error::CountMismatch { .. }) => Error::Core(e),
        other => core_at(path)(other),
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::file(path, e.to_string())
}

fn check_header(path: &Path, reader: &mut csv::Reader<fs::File>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(csv_err(path))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::file(
            path,
            format!("expected header {:?}, found {:?}", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    check_header(path, &mut reader, header)?;
    Ok(reader)
}

fn create_csv(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(csv_err(path))?;
    Ok(w)
}

fn label_name(vocab: &[String], label: Option<usize>) -> &str {
    label.map_or("", |l| vocab[l].as_str())
}

fn parse_label(path: &Path, vocab: &[String], name: &str) -> Result<Option<usize>> {
    if name.is_empty() {
        return Ok(None);
    }
    vocab
        .iter()
        .position(|l| l == name)
        .map(Some)
        .ok_or_else(|| Error::file(path, fusionforge_core::Error::UnknownLabel(name.to_string()).to_string()))
}

pub const MANIFEST_HEADER: [&str; 3] = ["sample_id", "split", "label"];

pub fn read_manifest(path: &Path, vocab: &[String]) -> Result<Vec<ManifestEntry>> {
    let mut reader = open_csv(path, &MANIFEST_HEADER)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_err(path))?;
        let split: Split = row[1].parse().map_err(core_at(path))?;
        let entry = ManifestEntry {
            sample_id: row[0].to_string(),
            split,
            label: parse_label(path, vocab, &row[2])?,
        };
        entry.validate().map_err(core_at(path))?;
        out.push(entry);
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry], vocab: &[String]) -> Result<()> {
    let mut w = create_csv(path, &MANIFEST_HEADER)?;
    for e in entries {
        w.write_record([e.sample_id.as_str(), e.split.as_str(), label_name(vocab, e.label)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the manifest and every declared modality file and pools them.
pub fn load_dataset(
    manifest_path: &Path,
    modality_files: &[(ModalitySpec, PathBuf)],
    vocab: &[String],
    pooling: Pooling,
) -> Result<Dataset> {
    let entries = read_manifest(manifest_path, vocab)?;
    let mut modalities = Vec::with_capacity(modality_files.len());
    for (spec, path) in modality_files {
        let (dim, records) = read_feature_file(path)?;
        if dim != spec.dim {
            return Err(Error::file(
                path,
                format!("header dim {dim} does not match declared dim {} of {}", spec.dim, spec.id),
            ));
        }
        modalities.push((spec.clone(), records));
    }
    Ok(Dataset::assemble(vocab.to_vec(), modalities, entries, pooling)?)
}

/// Sidecar written next to every model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub group_spec: String,
    pub fusion: String,
    pub label_vocab: Vec<String>,
    pub training: TrainingMeta,
}

pub fn sidecar_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("json")
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, to_json_pretty(value).as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the binary model and its JSON sidecar.
pub fn save_model(model: &FusionModel, path: &Path) -> Result<()> {
    write_bytes(path, &encode_model(model)?)?;
    write_json(
        &sidecar_path(path),
        &ModelSidecar {
            group_spec: model.spec.to_string(),
            fusion: model.mode.as_str().to_string(),
            label_vocab: model.label_vocab.clone(),
            training: model.meta.clone(),
        },
    )
}

/// Reads a model file; training metadata comes from the sidecar when present.
pub fn load_model(path: &Path) -> Result<FusionModel> {
    let mut model = decode_model(&read_bytes(path)?).map_err(core_at(path))?;
    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        let meta: ModelSidecar = read_json(&sidecar)?;
        model.meta = meta.training;
    }
    Ok(model)
}

pub const ANSWERS_HEADER: [&str; 4] = ["sample_id", "split", "label", "conflict_modality"];

/// Sealed labels keyed by sample id.
pub fn read_answers(path: &Path, vocab: &[String]) -> Result<BTreeMap<String, usize>> {
    let mut reader = open_csv(path, &ANSWERS_HEADER)?;
    let mut out = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(csv_err(path))?;
        let label = parse_label(path, vocab, &row[2])?
            .ok_or_else(|| Error::file(path, format!("answer for {:?} has no label", &row[0])))?;
        out.insert(row[0].to_string(), label);
    }
    Ok(out)
}

pub struct CsvTable {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvTable {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            writer: create_csv(path, header)?,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(csv_err(&self.path))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Rows of a headed CSV file, checked against `header`.
pub fn read_csv_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut reader = open_csv(path, header)?;
    reader
        .records()
        .map(|r| {
            r.map(|row| row.iter().map(str::to_string).collect())
                .map_err(csv_err(path))
        })
        .collect()
}
