//! Labeled narrative datasets: the seven-class label set, document model,
//! JSONL/CSV ingestion, deduplication, distribution statistics and
//! stratified fold construction.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess;

/// Number of narrative classes. Fixed for the whole pipeline.
pub const NUM_CLASSES: usize = 7;

/// The seven narrative categories, in canonical order. The index of a class
/// in [`NarrativeClass::ALL`] is stable and shared by every module (class
/// probability vectors, confusion matrices, reports).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NarrativeClass {
    /// Vaccine-related conspiracies.
    Cons,
    /// Development, provision and access.
    #[serde(rename = "DPA")]
    Dpa,
    /// Liberty / freedom.
    #[serde(rename = "LF")]
    Lf,
    /// Morality, religiosity and ethics.
    #[serde(rename = "MRE")]
    Mre,
    /// Politics and economics.
    #[serde(rename = "PE")]
    Pe,
    /// Safety, efficacy and necessity.
    #[serde(rename = "SEN")]
    Sen,
    /// Animal vaccination.
    AnimalVac,
}

impl NarrativeClass {
    pub const ALL: [NarrativeClass; NUM_CLASSES] = [
        NarrativeClass::Cons,
        NarrativeClass::Dpa,
        NarrativeClass::Lf,
        NarrativeClass::Mre,
        NarrativeClass::Pe,
        NarrativeClass::Sen,
        NarrativeClass::AnimalVac,
    ];

    /// Stable index in [0, 7).
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap()
    }

    pub fn from_index(index: usize) -> Option<NarrativeClass> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            NarrativeClass::Cons => "Cons",
            NarrativeClass::Dpa => "DPA",
            NarrativeClass::Lf => "LF",
            NarrativeClass::Mre => "MRE",
            NarrativeClass::Pe => "PE",
            NarrativeClass::Sen => "SEN",
            NarrativeClass::AnimalVac => "AnimalVac",
        }
    }

    /// Parse a label, trimming whitespace and ignoring case.
    pub fn parse(value: &str) -> Option<NarrativeClass> {
        let v = value.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(v))
    }
}

impl fmt::Display for NarrativeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Source platform of a post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Twitter,
    Facebook,
    Instagram,
    News,
    #[default]
    Other,
}

impl Platform {
    pub fn parse(value: &str) -> Option<Platform> {
        match value.trim().to_ascii_lowercase().as_str() {
            "twitter" => Some(Platform::Twitter),
            "facebook" => Some(Platform::Facebook),
            "instagram" => Some(Platform::Instagram),
            "news" => Some(Platform::News),
            "other" | "" => Some(Platform::Other),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Platform::Twitter => "twitter",
            Platform::Facebook => "facebook",
            Platform::Instagram => "instagram",
            Platform::News => "news",
            Platform::Other => "other",
        }
    }
}

/// Provenance of a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// Fact-checker annotated source data.
    Fd,
    /// Collected through keyword/hashtag augmentation.
    Augmented,
    #[default]
    Unlabeled,
}

impl Origin {
    pub fn parse(value: &str) -> Option<Origin> {
        match value.trim().to_ascii_lowercase().as_str() {
            "fd" => Some(Origin::Fd),
            "augmented" => Some(Origin::Augmented),
            "unlabeled" | "" => Some(Origin::Unlabeled),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Origin::Fd => "fd",
            Origin::Augmented => "augmented",
            Origin::Unlabeled => "unlabeled",
        }
    }
}

/// One social-media post or claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub platform: Platform,
    #[serde(default)]
    pub label: Option<NarrativeClass>,
    #[serde(default)]
    pub origin: Origin,
    #[serde(default)]
    pub alt_text: Option<String>,
}

impl Document {
    /// Text and alt text combined with a single space. This is the string
    /// every downstream stage (cleaning, matching, deduplication) sees.
    pub fn content(&self) -> String {
        match &self.alt_text {
            Some(alt) if !alt.trim().is_empty() => {
                if self.text.trim().is_empty() {
                    alt.clone()
                } else {
                    format!("{} {}", self.text, alt)
                }
            }
            _ => self.text.clone(),
        }
    }

    fn has_content(&self) -> bool {
        !self.content().trim().is_empty()
    }
}

/// Per-class counts over a labeled dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: [usize; NUM_CLASSES],
    pub total: usize,
}

impl ClassDistribution {
    /// Exact fractions count/total. All zero when the dataset is empty.
    pub fn proportions(&self) -> [f64; NUM_CLASSES] {
        let mut out = [0.0; NUM_CLASSES];
        if self.total > 0 {
            for (o, c) in out.iter_mut().zip(self.counts.iter()) {
                *o = *c as f64 / self.total as f64;
            }
        }
        out
    }

    /// Percentages rounded to integers, for display only.
    pub fn rounded_percentages(&self) -> [u32; NUM_CLASSES] {
        let props = self.proportions();
        let mut out = [0u32; NUM_CLASSES];
        for (o, p) in out.iter_mut().zip(props.iter()) {
            *o = (p * 100.0).round() as u32;
        }
        out
    }
}

/// Mapping of labeled documents to cross-validation folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub assignment: HashMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    /// Ids assigned to a given fold, sorted for determinism.
    pub fn fold_members(&self, fold: usize) -> Vec<&str> {
        let mut members: Vec<&str> = self
            .assignment
            .iter()
            .filter(|(_, f)| **f == fold)
            .map(|(id, _)| id.as_str())
            .collect();
        members.sort_unstable();
        members
    }
}

/// Supported ingestion formats. JSONL is the canonical storage format;
/// CSV is accepted for ingestion only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Jsonl,
    Csv,
}

impl DatasetFormat {
    /// Guess from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> DatasetFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

/// Result of loading a dataset file.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub documents: Vec<Document>,
    /// Rows skipped because text and alt text were both empty.
    pub skipped_empty: usize,
}

/// Load a dataset from JSONL or CSV, in file order.
///
/// Unknown label values are a hard error naming the offending line. Rows
/// whose combined text and alt text are empty are skipped and counted.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<LoadReport> {
    match format {
        DatasetFormat::Jsonl => load_jsonl(path),
        DatasetFormat::Csv => load_csv(path),
    }
}

fn load_jsonl(path: &Path) -> Result<LoadReport> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut documents = Vec::new();
    let mut skipped_empty = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        match raw.into_document(line_no)? {
            Some(doc) => documents.push(doc),
            None => skipped_empty += 1,
        }
    }
    Ok(LoadReport {
        documents,
        skipped_empty,
    })
}

fn load_csv(path: &Path) -> Result<LoadReport> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file);

    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("missing required CSV column {name:?}"),
            })
    };
    let (c_id, c_text, c_platform, c_label, c_origin, c_alt) = (
        col("id")?,
        col("text")?,
        col("platform")?,
        col("label")?,
        col("origin")?,
        col("alt_text")?,
    );

    let mut documents = Vec::new();
    let mut skipped_empty = 0usize;
    for (idx, record) in reader.records().enumerate() {
        let line_no = idx + 2; // header is line 1
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let opt = |s: String| if s.is_empty() { None } else { Some(s) };
        let raw = RawRecord {
            id: field(c_id),
            text: field(c_text),
            platform: opt(field(c_platform)),
            label: opt(field(c_label)),
            origin: opt(field(c_origin)),
            alt_text: opt(field(c_alt)),
        };
        match raw.into_document(line_no)? {
            Some(doc) => documents.push(doc),
            None => skipped_empty += 1,
        }
    }
    Ok(LoadReport {
        documents,
        skipped_empty,
    })
}

/// Write documents as canonical JSONL, one per line.
pub fn save_jsonl(docs: &[Document], path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    for doc in docs {
        serde_json::to_writer(&mut writer, doc)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    #[serde(default)]
    platform: Option<String>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    origin: Option<String>,
    #[serde(default)]
    alt_text: Option<String>,
}

impl RawRecord {
    fn into_document(self, line: usize) -> Result<Option<Document>> {
        let label = match self.label.as_deref() {
            None | Some("") => None,
            Some(value) => Some(NarrativeClass::parse(value).ok_or_else(|| {
                Error::UnknownLabel {
                    line,
                    value: value.to_string(),
                }
            })?),
        };
        let platform = match self.platform.as_deref() {
            None => Platform::Other,
            Some(value) => Platform::parse(value).ok_or_else(|| Error::Parse {
                line,
                msg: format!("unknown platform {value:?}"),
            })?,
        };
        let origin = match self.origin.as_deref() {
            None => Origin::Unlabeled,
            Some(value) => Origin::parse(value).ok_or_else(|| Error::Parse {
                line,
                msg: format!("unknown origin {value:?}"),
            })?,
        };
        let doc = Document {
            id: self.id,
            text: self.text,
            platform,
            label,
            origin,
            alt_text: self.alt_text.filter(|s| !s.is_empty()),
        };
        if doc.has_content() {
            Ok(Some(doc))
        } else {
            Ok(None)
        }
    }
}

/// Deduplication key: cleaned, case-folded combined text.
pub fn dedup_key(doc: &Document) -> String {
    preprocess::clean(&doc.content()).as_str().to_lowercase()
}

/// Remove duplicate documents, keeping the first occurrence. Two documents
/// are duplicates when their cleaned, case-folded texts are identical.
/// Returns the surviving documents and the removal count.
pub fn deduplicate(docs: Vec<Document>) -> (Vec<Document>, usize) {
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(docs.len());
    let mut removed = 0usize;
    for doc in docs {
        if seen.insert(dedup_key(&doc)) {
            kept.push(doc);
        } else {
            removed += 1;
        }
    }
    (kept, removed)
}

/// Per-class counts for a fully labeled dataset.
pub fn class_distribution(docs: &[Document]) -> Result<ClassDistribution> {
    let mut counts = [0usize; NUM_CLASSES];
    for doc in docs {
        let label = doc.label.ok_or_else(|| Error::MissingLabel {
            id: doc.id.clone(),
        })?;
        counts[label.index()] += 1;
    }
    Ok(ClassDistribution {
        counts,
        total: docs.len(),
    })
}

/// Deterministic stratified k-fold assignment over the labeled documents.
///
/// Documents are grouped by class, shuffled with a seeded generator, and
/// dealt to folds by a single round-robin counter that carries over between
/// classes. This keeps per-class fold counts within 1 of each other and
/// overall fold sizes within 1 as well.
pub fn stratified_kfold(docs: &[Document], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::BadFoldCount { k });
    }
    let mut by_class: Vec<Vec<&str>> = vec![Vec::new(); NUM_CLASSES];
    let mut ids = HashSet::new();
    for doc in docs {
        if let Some(label) = doc.label {
            if !ids.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: doc.id.clone(),
                });
            }
            by_class[label.index()].push(&doc.id);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = HashMap::new();
    let mut next_fold = 0usize;
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        for id in members.iter() {
            assignment.insert((*id).to_string(), next_fold);
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok(FoldAssignment { k, assignment })
}
