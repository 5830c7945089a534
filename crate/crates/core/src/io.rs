//! JSONL inputs and outputs: object detections, generated QA pairs and
//! reference questions.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::conllu::{parse_conllu, DepTree};
use crate::error::{Error, Result};
use crate::types::QAPair;

/// A detector output: lowercase label plus confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    pub label: String,
    pub score: f64,
}

impl DetectedObject {
    pub fn new(label: &str, score: f64) -> Self {
        DetectedObject {
            label: label.trim().to_lowercase(),
            score,
        }
    }
}

/// Everything known about one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub objects: Vec<DetectedObject>,
    pub captions: Vec<DepTree>,
}

impl ImageRecord {
    pub fn new(image_id: &str, objects: Vec<DetectedObject>, captions: Vec<DepTree>) -> Result<Self> {
        if let Some(bad) = captions.iter().find(|c| c.image_id != image_id) {
            return Err(Error::Contract(format!(
                "caption {} belongs to image {}, not {image_id}",
                bad.sentence_id, bad.image_id
            )));
        }
        Ok(ImageRecord {
            image_id: image_id.to_string(),
            objects,
            captions,
        })
    }
}

/// Accepts string or integer ids (MSCOCO uses integers).
fn id_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        Str(String),
        Int(i64),
    }
    Ok(match Id::deserialize(d)? {
        Id::Str(s) => s,
        Id::Int(i) => i.to_string(),
    })
}

fn opt_id_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    id_string(d).map(Some)
}

#[derive(Deserialize)]
struct ObjectsLine {
    #[serde(deserialize_with = "id_string")]
    image_id: String,
    objects: Vec<DetectedObject>,
}

#[derive(Deserialize)]
struct ReferenceLine {
    #[serde(deserialize_with = "id_string")]
    image_id: String,
    #[serde(default, deserialize_with = "opt_id_string")]
    caption_id: Option<String>,
    question: String,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-empty lines with their 1-based line numbers.
fn jsonl_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn read_captions(path: impl AsRef<Path>) -> Result<Vec<DepTree>> {
    let path = path.as_ref();
    parse_conllu(&read_text(path)?).map_err(|e| e.in_file(path))
}

/// Parses objects JSONL. Labels are trimmed and lowercased; repeated
/// image ids have their object lists concatenated in file order.
pub fn parse_objects(text: &str) -> Result<BTreeMap<String, Vec<DetectedObject>>> {
    let mut out: BTreeMap<String, Vec<DetectedObject>> = BTreeMap::new();
    for (line, raw) in jsonl_lines(text) {
        let rec: ObjectsLine =
            serde_json::from_str(raw).map_err(|source| Error::Json { line, source })?;
        let entry = out.entry(rec.image_id).or_default();
        for obj in rec.objects {
            let obj = DetectedObject::new(&obj.label, obj.score);
            if obj.label.is_empty() {
                return Err(Error::format(line, "object label is empty"));
            }
            if !obj.score.is_finite() {
                return Err(Error::format(line, "object score is not a finite number"));
            }
            entry.push(obj);
        }
    }
    Ok(out)
}

pub fn read_objects(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<DetectedObject>>> {
    let path = path.as_ref();
    parse_objects(&read_text(path)?).map_err(|e| e.in_file(path))
}

/// Groups captions by image in order of first appearance and attaches each
/// image's detections (an image without a detections line gets none).
pub fn group_records(
    captions: Vec<DepTree>,
    objects: &BTreeMap<String, Vec<DetectedObject>>,
) -> Vec<ImageRecord> {
    let mut order: Vec<String> = Vec::new();
    let mut by_image: BTreeMap<String, Vec<DepTree>> = BTreeMap::new();
    for tree in captions {
        if !by_image.contains_key(&tree.image_id) {
            order.push(tree.image_id.clone());
        }
        by_image.entry(tree.image_id.clone()).or_default().push(tree);
    }
    order
        .into_iter()
        .map(|image_id| {
            let captions = by_image.remove(&image_id).unwrap_or_default();
            ImageRecord {
                objects: objects.get(&image_id).cloned().unwrap_or_default(),
                image_id,
                captions,
            }
        })
        .collect()
}

/// One compact JSON object per line.
pub fn qa_to_jsonl(pairs: &[QAPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p).expect("QAPair serializes"));
        out.push('\n');
    }
    out
}

pub fn write_qa(pairs: &[QAPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(qa_to_jsonl(pairs).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn parse_qa(text: &str) -> Result<Vec<QAPair>> {
    jsonl_lines(text)
        .map(|(line, raw)| serde_json::from_str(raw).map_err(|source| Error::Json { line, source }))
        .collect()
}

pub fn read_qa(path: impl AsRef<Path>) -> Result<Vec<QAPair>> {
    let path = path.as_ref();
    parse_qa(&read_text(path)?).map_err(|e| e.in_file(path))
}

/// Reference questions, keyed either by exact caption or by image.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct References {
    pub by_caption: BTreeMap<(String, String), Vec<String>>,
    pub by_image: BTreeMap<String, Vec<String>>,
}

impl References {
    pub fn add(&mut self, image_id: &str, caption_id: Option<&str>, question: &str) {
        match caption_id {
            Some(c) => self
                .by_caption
                .entry((image_id.to_string(), c.to_string()))
                .or_default()
                .push(question.to_string()),
            None => self
                .by_image
                .entry(image_id.to_string())
                .or_default()
                .push(question.to_string()),
        }
    }

    /// Caption-level references when present, otherwise image-level ones.
    pub fn lookup(&self, image_id: &str, caption_id: &str) -> &[String] {
        if let Some(r) = self
            .by_caption
            .get(&(image_id.to_string(), caption_id.to_string()))
        {
            return r;
        }
        self.by_image.get(image_id).map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn parse_references(text: &str) -> Result<References> {
    let mut refs = References::default();
    for (line, raw) in jsonl_lines(text) {
        let r: ReferenceLine =
            serde_json::from_str(raw).map_err(|source| Error::Json { line, source })?;
        refs.add(&r.image_id, r.caption_id.as_deref(), &r.question);
    }
    Ok(refs)
}

pub fn read_references(path: impl AsRef<Path>) -> Result<References> {
    let path = path.as_ref();
    parse_references(&read_text(path)?).map_err(|e| e.in_file(path))
}
