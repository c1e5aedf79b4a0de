//! Keyword/hashtag rule engine for collecting minority-class candidates,
//! the annotation round-trip, and balance reporting.
//!
//! Matching runs on raw text, before cleaning, because preprocessing strips
//! the hashtags the rules rely on.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{dedup_key, Document, NarrativeClass, Origin, Platform, NUM_CLASSES};
use crate::error::{Error, Result};

/// The rule lists shipped with the crate, one entry per augmentation class.
pub const DEFAULT_RULES_JSON: &str = include_str!("../assets/default_rules.json");

/// Patterns that nominate documents for one target class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRule {
    pub target_class: NarrativeClass,
    /// Case-insensitive phrases matched on word boundaries.
    pub keywords: Vec<String>,
    /// Case-insensitive whole-hashtag patterns, each starting with '#'.
    pub hashtags: Vec<String>,
}

impl KeywordRule {
    pub fn validate(&self) -> Result<()> {
        if self.keywords.is_empty() && self.hashtags.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "rule for {} has neither keywords nor hashtags",
                self.target_class
            )));
        }
        for tag in &self.hashtags {
            if !tag.starts_with('#') || tag.len() < 2 {
                return Err(Error::InvalidConfig(format!(
                    "hashtag pattern {tag:?} must start with '#'"
                )));
            }
        }
        Ok(())
    }
}

/// All rule hits for one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub doc_id: String,
    /// (target class, pattern verbatim from the rule file) pairs.
    pub matches: Vec<(NarrativeClass, String)>,
}

impl MatchResult {
    pub fn matched_classes(&self) -> Vec<NarrativeClass> {
        let mut classes: Vec<NarrativeClass> = Vec::new();
        for (class, _) in &self.matches {
            if !classes.contains(class) {
                classes.push(*class);
            }
        }
        classes
    }
}

/// Per-class counts against augmentation targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub current: [usize; NUM_CLASSES],
    pub target: [usize; NUM_CLASSES],
    pub deficit: [usize; NUM_CLASSES],
}

#[derive(Deserialize)]
struct RuleSpec {
    #[serde(default)]
    keywords: Vec<String>,
    #[serde(default)]
    hashtags: Vec<String>,
}

/// Parse a rules file: JSON object of {class: {keywords, hashtags}}.
/// Rules come back in canonical class order regardless of JSON key order.
pub fn parse_rules(json: &str) -> Result<Vec<KeywordRule>> {
    let raw: HashMap<String, RuleSpec> = serde_json::from_str(json)?;
    let mut rules = Vec::new();
    let mut seen = HashSet::new();
    for (key, _) in raw.iter() {
        if NarrativeClass::parse(key).is_none() {
            return Err(Error::Invalid(format!("unknown class {key:?} in rules file")));
        }
    }
    for class in NarrativeClass::ALL {
        if let Some(spec) = raw.get(class.name()) {
            let rule = KeywordRule {
                target_class: class,
                keywords: spec.keywords.clone(),
                hashtags: spec.hashtags.clone(),
            };
            rule.validate()?;
            seen.insert(class);
            rules.push(rule);
        }
    }
    Ok(rules)
}

/// The Table-3 rule set shipped with the crate.
pub fn default_rules() -> Vec<KeywordRule> {
    parse_rules(DEFAULT_RULES_JSON).expect("bundled rules parse")
}

pub fn load_rules(path: &Path) -> Result<Vec<KeywordRule>> {
    let json = std::fs::read_to_string(path)?;
    parse_rules(&json)
}

fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case-insensitive phrase search with word boundaries on both sides.
fn keyword_hits(haystack_lower: &str, phrase: &str) -> bool {
    let needle = normalize_ws(&phrase.to_lowercase());
    if needle.is_empty() {
        return false;
    }
    let hay: Vec<char> = haystack_lower.chars().collect();
    let pat: Vec<char> = needle.chars().collect();
    if pat.len() > hay.len() {
        return false;
    }
    for start in 0..=(hay.len() - pat.len()) {
        if hay[start..start + pat.len()] != pat[..] {
            continue;
        }
        let before_ok = start == 0 || !hay[start - 1].is_alphanumeric();
        let end = start + pat.len();
        let after_ok = end == hay.len() || !hay[end].is_alphanumeric();
        if before_ok && after_ok {
            return true;
        }
    }
    false
}

/// Extract hashtag tokens (without trailing punctuation) from raw text.
fn hashtags_in(text: &str) -> HashSet<String> {
    let mut tags = HashSet::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '#' && (i == 0 || !chars[i - 1].is_alphanumeric()) {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            if j > i + 1 {
                let tag: String = chars[i + 1..j].iter().collect();
                tags.insert(tag.to_lowercase());
            }
            i = j;
        } else {
            i += 1;
        }
    }
    tags
}

/// Match one document against the rule set. Keywords are matched on word
/// boundaries in the raw (uncleaned) text; hashtag patterns only match
/// whole hashtag tokens, never plain words.
pub fn match_rules(doc: &Document, rules: &[KeywordRule]) -> MatchResult {
    let raw = doc.content();
    let lower = normalize_ws(&raw.to_lowercase());
    let tags = hashtags_in(&raw);
    let mut matches = Vec::new();
    for rule in rules {
        for keyword in &rule.keywords {
            if keyword_hits(&lower, keyword) {
                matches.push((rule.target_class, keyword.clone()));
            }
        }
        for tag in &rule.hashtags {
            let bare = tag.trim_start_matches('#').to_lowercase();
            if tags.contains(&bare) {
                matches.push((rule.target_class, tag.clone()));
            }
        }
    }
    MatchResult {
        doc_id: doc.id.clone(),
        matches,
    }
}

/// Keep only documents with at least one rule hit, dropping duplicates of
/// an optional existing dataset and duplicates within the stream (same
/// criterion as corpus deduplication). Output is sorted by document id.
pub fn filter_candidates(
    docs: &[Document],
    rules: &[KeywordRule],
    existing: Option<&[Document]>,
) -> Vec<(Document, MatchResult)> {
    let mut seen: HashSet<String> = existing
        .map(|ds| ds.iter().map(dedup_key).collect())
        .unwrap_or_default();
    let mut out = Vec::new();
    for doc in docs {
        let result = match_rules(doc, rules);
        if result.matches.is_empty() {
            continue;
        }
        if !seen.insert(dedup_key(doc)) {
            continue;
        }
        out.push((doc.clone(), result));
    }
    out.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    out
}

/// Write candidates as an annotation queue CSV with columns
/// id,text,suggested_classes,label. The label column is left empty for the
/// annotator; suggested classes are separated by ';'.
pub fn export_annotation_queue(
    candidates: &[(Document, MatchResult)],
    path: &Path,
) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::Invalid("no candidates to export".into()));
    }
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    writer.write_record(["id", "text", "suggested_classes", "label"])?;
    for (doc, result) in candidates {
        let suggested = result
            .matched_classes()
            .iter()
            .map(|c| c.name())
            .collect::<Vec<_>>()
            .join(";");
        writer.write_record([doc.id.as_str(), &doc.content(), &suggested, ""])?;
    }
    writer.flush()?;
    Ok(())
}

/// Read back an annotated queue. Every row must carry a label from the
/// label set (trimmed, case-insensitive); anything else is an error naming
/// the row. Imported documents get origin `augmented`.
pub fn import_annotations(path: &Path) -> Result<Vec<Document>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(File::open(path)?);
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("annotation queue is missing column {name:?}"),
            })
    };
    let (c_id, c_text, c_label) = (col("id")?, col("text")?, col("label")?);

    let mut docs = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record?;
        let label_raw = record.get(c_label).unwrap_or("").trim();
        if label_raw.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "unlabeled annotation row".into(),
            });
        }
        let label = NarrativeClass::parse(label_raw).ok_or_else(|| Error::UnknownLabel {
            line,
            value: label_raw.to_string(),
        })?;
        docs.push(Document {
            id: record.get(c_id).unwrap_or("").to_string(),
            text: record.get(c_text).unwrap_or("").to_string(),
            platform: Platform::Other,
            label: Some(label),
            origin: Origin::Augmented,
            alt_text: None,
        });
    }
    Ok(docs)
}

/// Deficits per class against target counts, clamped at zero.
pub fn balance_report(
    current: &[usize; NUM_CLASSES],
    target: &[usize; NUM_CLASSES],
) -> BalanceReport {
    let mut deficit = [0usize; NUM_CLASSES];
    for i in 0..NUM_CLASSES {
        deficit[i] = target[i].saturating_sub(current[i]);
    }
    BalanceReport {
        current: *current,
        target: *target,
        deficit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.to_string(),
            text: text.to_string(),
            platform: Platform::Twitter,
            label: None,
            origin: Origin::Unlabeled,
            alt_text: None,
        }
    }

    #[test]
    fn default_rules_cover_four_classes() {
        let rules = default_rules();
        let classes: Vec<NarrativeClass> = rules.iter().map(|r| r.target_class).collect();
        assert_eq!(
            classes,
            [
                NarrativeClass::Cons,
                NarrativeClass::Lf,
                NarrativeClass::Mre,
                NarrativeClass::AnimalVac
            ]
        );
        for rule in &rules {
            rule.validate().unwrap();
        }
    }

    #[test]
    fn multi_class_match() {
        let rules = default_rules();
        let result = match_rules(
            &doc("d1", "Filled with nano particles to alter our DNA!"),
            &rules,
        );
        let classes = result.matched_classes();
        assert!(classes.contains(&NarrativeClass::Cons), "nano -> Cons");
        assert!(classes.contains(&NarrativeClass::Mre), "DNA -> MRE");
    }

    #[test]
    fn hashtag_matches_case_insensitively() {
        let rules = default_rules();
        let result = match_rules(
            &doc(
                "d1",
                "…the #nojabnopay discriminates against free choice…",
            ),
            &rules,
        );
        assert!(result
            .matches
            .iter()
            .any(|(c, p)| *c == NarrativeClass::Lf && p == "#NoJabNoPay"));
    }

    #[test]
    fn no_match_for_neutral_text() {
        let rules = default_rules();
        let result = match_rules(&doc("d1", "The weather is nice"), &rules);
        assert!(result.matches.is_empty());
    }

    #[test]
    fn hashtag_rule_never_matches_plain_word() {
        let rules = default_rules();
        let result = match_rules(&doc("d1", "freedom and liberty for all"), &rules);
        assert!(result.matches.is_empty());
    }

    #[test]
    fn keyword_respects_word_boundaries() {
        let rules = default_rules();
        // "nano" must not fire inside a longer word.
        let result = match_rules(&doc("d1", "a nanosecond later"), &rules);
        assert!(result.matches.is_empty());
    }

    #[test]
    fn filter_keeps_only_matching_docs() {
        let rules = default_rules();
        let docs = vec![
            doc("a", "nothing here"),
            doc("b", "the deep state did it"),
            doc("c", "also nothing"),
        ];
        let out = filter_candidates(&docs, &rules, None);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0.id, "b");
    }

    #[test]
    fn filter_dedups_against_existing() {
        let rules = default_rules();
        let existing = vec![doc("old", "the deep state did it")];
        let docs = vec![doc("new", "The deep state did it")];
        let out = filter_candidates(&docs, &rules, Some(&existing));
        assert!(out.is_empty());
    }

    #[test]
    fn filter_reports_both_classes_once() {
        let rules = default_rules();
        let docs = vec![doc("x", "mRNA shots are a deep state plot")];
        let out = filter_candidates(&docs, &rules, None);
        assert_eq!(out.len(), 1);
        let classes = out[0].1.matched_classes();
        assert!(classes.contains(&NarrativeClass::Mre));
        assert!(classes.contains(&NarrativeClass::Cons));
    }

    #[test]
    fn annotation_roundtrip() {
        let rules = default_rules();
        let docs = vec![
            doc("a", "we are not lab rats"),
            doc("b", "mandatory vaccination now"),
        ];
        let candidates = filter_candidates(&docs, &rules, None);
        assert_eq!(candidates.len(), 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("queue.csv");
        export_annotation_queue(&candidates, &path).unwrap();

        // Simulate annotation: fill the label column.
        let content = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = content.lines().map(|l| l.to_string()).collect();
        assert_eq!(lines.len(), 3);
        lines[1].push_str("mre ");
        lines[2].push_str("LF");
        std::fs::write(&path, lines.join("\n")).unwrap();

        let imported = import_annotations(&path).unwrap();
        assert_eq!(imported.len(), 2);
        assert_eq!(imported[0].label, Some(NarrativeClass::Mre));
        assert_eq!(imported[0].origin, Origin::Augmented);
        assert_eq!(imported[1].label, Some(NarrativeClass::Lf));
    }

    #[test]
    fn import_rejects_unknown_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("queue.csv");
        std::fs::write(&path, "id,text,suggested_classes,label\na,t,Cons,Vaccine\n").unwrap();
        match import_annotations(&path) {
            Err(Error::UnknownLabel { line, value }) => {
                assert_eq!(line, 2);
                assert_eq!(value, "Vaccine");
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn import_rejects_unlabeled_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("queue.csv");
        std::fs::write(&path, "id,text,suggested_classes,label\na,t,Cons,\n").unwrap();
        assert!(matches!(
            import_annotations(&path),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn balance_deficits_from_source_counts() {
        // FD counts vs augmented targets.
        let current = [26, 116, 37, 7, 108, 134, 0];
        let target = [107, 116, 93, 151, 108, 134, 96];
        let report = balance_report(&current, &target);
        assert_eq!(report.deficit, [81, 0, 56, 144, 0, 0, 96]);
    }

    #[test]
    fn balance_clamps_surplus_to_zero() {
        let current = [10, 0, 0, 0, 0, 0, 0];
        let target = [5, 0, 0, 0, 0, 0, 0];
        let report = balance_report(&current, &target);
        assert_eq!(report.deficit, [0; 7]);
    }

    proptest! {
        #[test]
        fn matches_only_classes_with_rules(text in "[a-z#@ 5gdnao]{0,40}") {
            let rules = default_rules();
            let ruled: HashSet<NarrativeClass> =
                rules.iter().map(|r| r.target_class).collect();
            let result = match_rules(&doc("p", &text), &rules);
            for (class, _) in &result.matches {
                prop_assert!(ruled.contains(class));
            }
        }

        #[test]
        fn filter_output_subset_and_idempotent(texts in proptest::collection::vec("[a-z ]{0,20}(deep state)?[a-z ]{0,10}", 0..12)) {
            let rules = default_rules();
            let docs: Vec<Document> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| doc(&format!("d{i:02}"), t))
                .collect();
            let once = filter_candidates(&docs, &rules, None);
            prop_assert!(once.len() <= docs.len());
            let once_docs: Vec<Document> = once.iter().map(|(d, _)| d.clone()).collect();
            let twice = filter_candidates(&once_docs, &rules, None);
            prop_assert_eq!(once, twice);
        }
    }
}
