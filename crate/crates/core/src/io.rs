//! On-disk artifacts.
//!
//! Every file is one JSON document:
//!
//! ```json
//! { "format": "msax", "format_version": 1, "kind": "codebook", "payload": { ... } }
//! ```
//!
//! Floats are written in shortest round-trip form and parsed exactly, so
//! `load(save(x)) == x` bit for bit. The envelope is checked before the
//! payload is decoded, which lets a newer file fail with a version error
//! instead of a parse error.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::codebook::{Codebook, Lut, TrainingMeta, LUT_TOL};
use crate::discover::{MotifQuery, MotifResult};
use crate::encode::SymbolSequence;
use crate::error::{Error, Result};
use crate::geometry::{validate, Manifold, ManifoldPoint};
use crate::stats::ManifoldSequence;

pub const FORMAT: &str = "msax";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Dataset,
    Codebook,
    Encoded,
    Motifs,
    BenchReport,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Dataset => "dataset",
            Kind::Codebook => "codebook",
            Kind::Encoded => "encoded",
            Kind::Motifs => "motifs",
            Kind::BenchReport => "bench_report",
        }
    }
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    format: &'a str,
    format_version: u32,
    kind: &'a str,
    payload: &'a T,
}

pub fn to_string<T: Serialize>(kind: Kind, payload: &T) -> Result<String> {
    let env = EnvelopeOut {
        format: FORMAT,
        format_version: FORMAT_VERSION,
        kind: kind.as_str(),
        payload,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn from_str<T: DeserializeOwned>(kind: Kind, text: &str) -> Result<T> {
    let mut v: Value = serde_json::from_str(text)?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::Format("top level is not an object".into()))?;
    match obj.get("format").and_then(Value::as_str) {
        Some(FORMAT) => {}
        other => return Err(Error::Format(format!("not an {FORMAT} artifact (format = {other:?})"))),
    }
    let version = obj
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Format("missing format_version".into()))?;
    if version > FORMAT_VERSION as u64 || version == 0 {
        return Err(Error::Version {
            found: version.min(u32::MAX as u64) as u32,
            supported: FORMAT_VERSION,
        });
    }
    let found = obj.get("kind").and_then(Value::as_str).unwrap_or("");
    if found != kind.as_str() {
        return Err(Error::ArtifactKind {
            expected: kind.as_str().into(),
            found: found.into(),
        });
    }
    let payload = obj
        .remove("payload")
        .ok_or_else(|| Error::Format("missing payload".into()))?;
    Ok(serde_json::from_value(payload)?)
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn write_file<T: Serialize>(path: impl AsRef<Path>, kind: Kind, payload: &T) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_string(kind, payload)?).map_err(|e| with_path(path, e))
}

pub fn read_file<T: DeserializeOwned>(path: impl AsRef<Path>, kind: Kind) -> Result<T> {
    let path = path.as_ref();
    from_str(kind, &fs::read_to_string(path).map_err(|e| with_path(path, e))?)
}

// ---------------------------------------------------------------- datasets

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub scenario: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Ground-truth span `[start, start + len)` of one sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub sequence: usize,
    pub start: usize,
    pub len: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Annotations {
    /// Generating centres or class anchors, as raw coordinates.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub templates: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<Segment>,
    /// Generating component of every point, in sequence order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub point_labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub descriptor: Manifold,
    pub sequences: Vec<ManifoldSequence>,
    pub provenance: Option<Provenance>,
    pub annotations: Annotations,
}

impl DatasetFile {
    /// All points of all sequences, in order.
    pub fn pooled_points(&self) -> Vec<ManifoldPoint> {
        self.sequences.iter().flat_map(|s| s.points().iter().cloned()).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct SequenceDto {
    id: String,
    #[serde(default)]
    label: Option<String>,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DatasetDto {
    descriptor: Manifold,
    sequences: Vec<SequenceDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
    #[serde(default)]
    annotations: Annotations,
}

fn dataset_to_dto(d: &DatasetFile) -> DatasetDto {
    DatasetDto {
        descriptor: d.descriptor,
        sequences: d
            .sequences
            .iter()
            .map(|s| SequenceDto {
                id: s.id.clone(),
                label: s.label.clone(),
                points: s.points().iter().map(|p| p.data().to_vec()).collect(),
            })
            .collect(),
        provenance: d.provenance.clone(),
        annotations: d.annotations.clone(),
    }
}

fn dataset_from_dto(dto: DatasetDto) -> Result<DatasetFile> {
    dto.descriptor.check()?;
    let mut sequences = Vec::with_capacity(dto.sequences.len());
    for s in dto.sequences {
        let mut points = Vec::with_capacity(s.points.len());
        for (frame, p) in s.points.into_iter().enumerate() {
            if let Err(violation) = validate(&dto.descriptor, &p) {
                return Err(Error::SequenceValidation {
                    sequence: s.id,
                    frame,
                    violation,
                });
            }
            points.push(ManifoldPoint::new(dto.descriptor, p)?);
        }
        sequences.push(ManifoldSequence::new(s.id, s.label, points)?);
    }
    Ok(DatasetFile {
        descriptor: dto.descriptor,
        sequences,
        provenance: dto.provenance,
        annotations: dto.annotations,
    })
}

pub fn dataset_to_string(d: &DatasetFile) -> Result<String> {
    to_string(Kind::Dataset, &dataset_to_dto(d))
}

pub fn dataset_from_str(text: &str) -> Result<DatasetFile> {
    dataset_from_dto(from_str(Kind::Dataset, text)?)
}

pub fn save_dataset(path: impl AsRef<Path>, d: &DatasetFile) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset_to_string(d)?).map_err(|e| with_path(path, e))?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<DatasetFile> {
    let path = path.as_ref();
    dataset_from_str(&fs::read_to_string(path).map_err(|e| with_path(path, e))?)
}

// --------------------------------------------------------------- codebooks

#[derive(Serialize, Deserialize)]
struct CodebookDto {
    descriptor: Manifold,
    id: String,
    training: TrainingMeta,
    alphabet: Vec<String>,
    symbols: Vec<Vec<f64>>,
    lut: Vec<Vec<f64>>,
}

pub fn codebook_to_string(cb: &Codebook) -> Result<String> {
    to_string(
        Kind::Codebook,
        &CodebookDto {
            descriptor: *cb.manifold(),
            id: cb.id().to_string(),
            training: cb.training.clone(),
            alphabet: cb.alphabet(),
            symbols: cb.symbols().iter().map(|p| p.data().to_vec()).collect(),
            lut: cb.lut().rows(),
        },
    )
}

/// Rebuilds the codebook from its symbols and checks the stored table and id
/// against the recomputed ones.
pub fn codebook_from_str(text: &str) -> Result<Codebook> {
    let dto: CodebookDto = from_str(Kind::Codebook, text)?;
    dto.descriptor.check()?;
    let symbols = dto
        .symbols
        .into_iter()
        .map(|s| ManifoldPoint::new(dto.descriptor, s))
        .collect::<Result<Vec<_>>>()?;
    let cb = Codebook::new(symbols, dto.training)?;
    let stored = Lut::from_rows(&dto.lut)?;
    let diff = stored.max_abs_diff(cb.lut());
    if !(diff <= LUT_TOL) {
        return Err(Error::Integrity(format!(
            "lookup table differs from symbol distances by {diff:e}"
        )));
    }
    if dto.id != cb.id() {
        return Err(Error::Integrity(format!("stored id {} but symbols hash to {}", dto.id, cb.id())));
    }
    Ok(cb)
}

pub fn save_codebook(path: impl AsRef<Path>, cb: &Codebook) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, codebook_to_string(cb)?).map_err(|e| with_path(path, e))?;
    Ok(())
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    let path = path.as_ref();
    codebook_from_str(&fs::read_to_string(path).map_err(|e| with_path(path, e))?)
}

// --------------------------------------------------------------- encodings

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedFile {
    pub codebook_id: String,
    pub window: usize,
    pub sequences: Vec<SymbolSequence>,
}

impl EncodedFile {
    pub fn new(codebook_id: impl Into<String>, window: usize, sequences: Vec<SymbolSequence>) -> Result<Self> {
        let f = Self {
            codebook_id: codebook_id.into(),
            window,
            sequences,
        };
        f.check()?;
        Ok(f)
    }

    fn check(&self) -> Result<()> {
        for s in &self.sequences {
            if s.codebook_id != self.codebook_id {
                return Err(Error::CodebookMismatch {
                    expected: self.codebook_id.clone(),
                    found: s.codebook_id.clone(),
                });
            }
            if s.window != self.window {
                return Err(Error::Format(format!("sequence `{}` has window {}", s.id, s.window)));
            }
            s.check(u32::MAX as usize)?;
        }
        Ok(())
    }
}

pub fn save_encoded(path: impl AsRef<Path>, f: &EncodedFile) -> Result<()> {
    write_file(path, Kind::Encoded, f)
}

pub fn load_encoded(path: impl AsRef<Path>) -> Result<EncodedFile> {
    let f: EncodedFile = read_file(path, Kind::Encoded)?;
    f.check()?;
    Ok(f)
}

/// One `id<TAB>string` line per sequence, rendered through the alphabet.
pub fn to_text_lines(f: &EncodedFile, cb: &Codebook) -> Result<String> {
    cb.ensure_id(&f.codebook_id)?;
    let mut out = String::new();
    for s in &f.sequences {
        s.check(cb.len())?;
        out.push_str(&s.id);
        out.push('\t');
        out.push_str(&cb.render(&s.symbols));
        out.push('\n');
    }
    Ok(out)
}

// ------------------------------------------------------------------ motifs

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifFile {
    pub codebook_id: String,
    pub source_id: String,
    pub query: MotifQuery,
    pub motifs: Vec<MotifResult>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

pub fn save_motifs(path: impl AsRef<Path>, f: &MotifFile) -> Result<()> {
    write_file(path, Kind::Motifs, f)
}

pub fn load_motifs(path: impl AsRef<Path>) -> Result<MotifFile> {
    read_file(path, Kind::Motifs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::TrainingMeta;
    use crate::geometry::random_point;

    fn sphere_dataset() -> DatasetFile {
        let m = Manifold::Hypersphere { ambient: 3 };
        let sequences = (0..3)
            .map(|s| {
                let pts = (0..4).map(|i| random_point(m, 10 * s + i).unwrap()).collect();
                ManifoldSequence::new(format!("s{s}"), Some(format!("c{}", s % 2)), pts).unwrap()
            })
            .collect();
        DatasetFile {
            descriptor: m,
            sequences,
            provenance: Some(Provenance {
                generator: "test".into(),
                scenario: "none".into(),
                seed: 1,
                notes: vec![],
            }),
            annotations: Annotations::default(),
        }
    }

    fn codebook() -> Codebook {
        let m = Manifold::Hypersphere { ambient: 3 };
        Codebook::new((0..4).map(|i| random_point(m, 50 + i).unwrap()).collect(), TrainingMeta::manual()).unwrap()
    }

    #[test]
    fn dataset_round_trip() {
        let d = sphere_dataset();
        let text = dataset_to_string(&d).unwrap();
        assert_eq!(dataset_from_str(&text).unwrap(), d);
        assert_eq!(dataset_to_string(&dataset_from_str(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn codebook_round_trip_and_tamper() {
        let cb = codebook();
        let text = codebook_to_string(&cb).unwrap();
        assert_eq!(codebook_from_str(&text).unwrap(), cb);

        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["payload"]["lut"][0][1] = Value::from(0.123);
        let tampered = serde_json::to_string(&v).unwrap();
        let err = codebook_from_str(&tampered).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)), "{err}");
    }

    #[test]
    fn future_version_is_rejected() {
        let text = dataset_to_string(&sphere_dataset()).unwrap();
        let future = text.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(dataset_from_str(&future), Err(Error::Version { found: 2, .. })));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let text = dataset_to_string(&sphere_dataset()).unwrap();
        assert!(matches!(codebook_from_str(&text), Err(Error::ArtifactKind { .. })));
    }

    #[test]
    fn invalid_point_names_sequence_and_frame() {
        let text = dataset_to_string(&sphere_dataset()).unwrap();
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["payload"]["sequences"][1]["points"][2] = serde_json::json!([1.0, 1.0, 0.0]);
        match dataset_from_str(&serde_json::to_string(&v).unwrap()) {
            Err(Error::SequenceValidation { sequence, frame, .. }) => {
                assert_eq!(sequence, "s1");
                assert_eq!(frame, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn encoded_and_text_export() {
        let cb = codebook();
        let s = SymbolSequence {
            codebook_id: cb.id().into(),
            window: 2,
            symbols: vec![0, 3, 1],
            source_len: 5,
            label: None,
            id: "x".into(),
        };
        let f = EncodedFile::new(cb.id(), 2, vec![s]).unwrap();
        let text = to_string(Kind::Encoded, &f).unwrap();
        assert_eq!(from_str::<EncodedFile>(Kind::Encoded, &text).unwrap(), f);
        assert_eq!(to_text_lines(&f, &cb).unwrap(), "x\tadb\n");
    }
}
