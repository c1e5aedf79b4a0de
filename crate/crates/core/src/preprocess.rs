//! Text cleaning, tokenization, truncation strategies, vocabulary
//! construction and bag-of-words vectorization.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Function words excluded from vocabulary construction. Applied only when
/// building the vocabulary, never to the token sequence fed to encoders.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "had", "has", "have",
    "he", "her", "his", "i", "if", "in", "into", "is", "it", "its", "me", "my", "no", "not", "of",
    "on", "or", "our", "she", "so", "that", "the", "their", "them", "they", "this", "to", "was",
    "we", "were", "what", "when", "which", "who", "will", "with", "you", "your",
];

/// Text with user mentions, URLs, hashtag tokens and emoji removed and
/// whitespace normalized. Casing is preserved; case-folding happens at
/// tokenization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanText(String);

impl CleanText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercased whitespace tokens with edge punctuation stripped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> TokenSeq {
        TokenSeq(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// How over-long token sequences are reduced to a fixed budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TruncationStrategy {
    /// Keep the first `head_len` tokens.
    Head { head_len: usize },
    /// Keep the last `tail_len` tokens.
    Tail { tail_len: usize },
    /// Keep the first `head_len` and the last `tail_len` tokens.
    HeadTail { head_len: usize, tail_len: usize },
}

impl TruncationStrategy {
    pub fn validate(&self) -> Result<()> {
        match self {
            TruncationStrategy::Head { head_len } if *head_len == 0 => Err(Error::InvalidConfig(
                "head truncation requires head_len > 0".into(),
            )),
            TruncationStrategy::Tail { tail_len } if *tail_len == 0 => Err(Error::InvalidConfig(
                "tail truncation requires tail_len > 0".into(),
            )),
            TruncationStrategy::HeadTail { head_len, tail_len }
                if *head_len == 0 || *tail_len == 0 =>
            {
                Err(Error::InvalidConfig(
                    "head_tail truncation requires both budgets > 0".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn budget(&self) -> usize {
        match self {
            TruncationStrategy::Head { head_len } => *head_len,
            TruncationStrategy::Tail { tail_len } => *tail_len,
            TruncationStrategy::HeadTail { head_len, tail_len } => head_len + tail_len,
        }
    }
}

impl Default for TruncationStrategy {
    /// First 400 tokens: the best-performing setting in the source study.
    fn default() -> Self {
        TruncationStrategy::Head { head_len: 400 }
    }
}

fn is_emoji(c: char) -> bool {
    matches!(u32::from(c),
        0x1F000..=0x1F0FF   // mahjong, dominoes, playing cards
        | 0x1F170..=0x1F251 // enclosed alphanumeric/ideographic supplement
        | 0x1F300..=0x1F5FF // misc symbols and pictographs
        | 0x1F600..=0x1F64F // emoticons
        | 0x1F680..=0x1F6FF // transport and map symbols
        | 0x1F900..=0x1F9FF // supplemental symbols and pictographs
        | 0x1FA00..=0x1FAFF // symbols and pictographs extended-A
        | 0x2600..=0x26FF   // miscellaneous symbols
        | 0x2700..=0x27BF   // dingbats
        | 0x2B00..=0x2BFF   // misc symbols and arrows (stars etc.)
        | 0x1F1E6..=0x1F1FF // regional indicators
        | 0xFE00..=0xFE0F   // variation selectors
        | 0x200D..=0x200D   // zero-width joiner
        | 0x20E3..=0x20E3   // combining enclosing keycap
    )
}

fn looks_like_url(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn clean_pass(text: &str) -> String {
    let mut kept: Vec<String> = Vec::new();
    for token in text.split_whitespace() {
        // Removal order: URLs, then mentions, then hashtag tokens, then emoji.
        if looks_like_url(token) {
            continue;
        }
        if token.starts_with('@') && token.chars().count() > 1 {
            continue;
        }
        if token.starts_with('#') && token.chars().count() > 1 {
            continue;
        }
        let stripped: String = token.chars().filter(|c| !is_emoji(*c)).collect();
        if !stripped.is_empty() {
            kept.push(stripped);
        }
    }
    kept.join(" ")
}

/// Remove URLs, user mentions, hashtag tokens and emoji; collapse whitespace.
///
/// Emoji stripping can expose a mention or hashtag that was hidden behind a
/// leading emoji, so passes repeat until the text is stable. This makes the
/// operation idempotent.
pub fn clean(text: &str) -> CleanText {
    let mut current = clean_pass(text);
    loop {
        let next = clean_pass(&current);
        if next == current {
            return CleanText(current);
        }
        current = next;
    }
}

/// Lowercase, split on whitespace, strip punctuation from token edges and
/// drop tokens that were punctuation only. Internal punctuation (hyphens,
/// apostrophes) is preserved.
pub fn tokenize(clean: &CleanText) -> TokenSeq {
    let mut tokens = Vec::new();
    for raw in clean.as_str().split_whitespace() {
        let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if !trimmed.is_empty() {
            tokens.push(trimmed.to_lowercase());
        }
    }
    TokenSeq(tokens)
}

/// Apply a truncation strategy. Sequences within budget pass unchanged.
pub fn truncate(tokens: &TokenSeq, strategy: TruncationStrategy) -> TokenSeq {
    let n = tokens.len();
    let slice = tokens.tokens();
    let out: Vec<String> = match strategy {
        TruncationStrategy::Head { head_len } => slice.iter().take(head_len).cloned().collect(),
        TruncationStrategy::Tail { tail_len } => {
            slice[n.saturating_sub(tail_len)..].to_vec()
        }
        TruncationStrategy::HeadTail { head_len, tail_len } => {
            if head_len + tail_len >= n {
                slice.to_vec()
            } else {
                let mut head: Vec<String> = slice[..head_len].to_vec();
                head.extend_from_slice(&slice[n - tail_len..]);
                head
            }
        }
    };
    TokenSeq(out)
}

/// Bijective token/index mapping with contiguous indices in [0, V).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index_of: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocabulary> {
        if tokens.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut index_of = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index_of.insert(t.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocabulary { index_of, tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index_of.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(|s| s.as_str())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Newline-delimited token list; line number = index.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        for token in &self.tokens {
            writeln!(writer, "{token}")?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let reader = BufReader::new(File::open(path)?);
        let tokens: Vec<String> = reader
            .lines()
            .collect::<std::io::Result<Vec<String>>>()?
            .into_iter()
            .filter(|l| !l.is_empty())
            .collect();
        Vocabulary::from_tokens(tokens)
    }
}

/// Vocabulary construction parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VocabConfig {
    pub min_df: usize,
    pub max_vocab: usize,
    /// None means [`DEFAULT_STOPWORDS`].
    #[serde(default)]
    pub stopwords: Option<Vec<String>>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_df: 2,
            max_vocab: 10_000,
            stopwords: None,
        }
    }
}

impl VocabConfig {
    pub fn stopword_set(&self) -> HashSet<String> {
        match &self.stopwords {
            Some(list) => list.iter().map(|s| s.to_lowercase()).collect(),
            None => DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Build a vocabulary from tokenized documents.
///
/// Tokens must appear in at least `min_df` documents and not be stopwords.
/// Ranking is by total frequency, ties broken lexicographically, truncated
/// to `max_vocab` entries.
pub fn build_vocab(
    docs: &[TokenSeq],
    min_df: usize,
    max_vocab: usize,
    stopwords: &HashSet<String>,
) -> Result<Vocabulary> {
    if min_df < 1 || max_vocab < 1 {
        return Err(Error::InvalidConfig(
            "build_vocab requires min_df >= 1 and max_vocab >= 1".into(),
        ));
    }
    let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let mut seen = HashSet::new();
        for token in doc.tokens() {
            *total_freq.entry(token).or_insert(0) += 1;
            if seen.insert(token.as_str()) {
                *doc_freq.entry(token).or_insert(0) += 1;
            }
        }
    }
    let mut candidates: Vec<(&str, usize)> = total_freq
        .into_iter()
        .filter(|(token, _)| doc_freq[token] >= min_df && !stopwords.contains(*token))
        .collect();
    // Frequency descending, then lexicographic ascending.
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    candidates.truncate(max_vocab);
    let tokens: Vec<String> = candidates.into_iter().map(|(t, _)| t.to_string()).collect();
    Vocabulary::from_tokens(tokens)
}

/// Sparse bag-of-words counts over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowVector {
    pub counts: BTreeMap<usize, u32>,
    pub vocab_size: usize,
}

impl BowVector {
    pub fn total(&self) -> u32 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Count in-vocabulary tokens; out-of-vocabulary tokens are dropped.
pub fn to_bow(tokens: &TokenSeq, vocab: &Vocabulary) -> BowVector {
    let mut counts = BTreeMap::new();
    for token in tokens.tokens() {
        if let Some(idx) = vocab.index_of(token) {
            *counts.entry(idx).or_insert(0u32) += 1;
        }
    }
    BowVector {
        counts,
        vocab_size: vocab.len(),
    }
}

/// Full preprocessing chain for one raw text.
pub fn pipeline(text: &str, strategy: TruncationStrategy) -> TokenSeq {
    truncate(&tokenize(&clean(text)), strategy)
}
