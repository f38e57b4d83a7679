//! Word normalization and vocabulary building.
//!
//! The token pipeline is fixed: tokenize → normalize → stop-filter → count.
//! Stop lists are themselves stored in normalized form so that surface
//! variants ("cells"/"cell") are filtered identically.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::corpus::TextUnit;
use crate::error::{Error, Result};

/// The USPTO full-text search stop word list, bundled as the default.
const BUNDLED_USPTO: &str = include_str!("../data/uspto_stopwords.txt");

/// Where a stop word list came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopListOrigin {
    BundledUspto,
    UserFile,
}

impl fmt::Display for StopListOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopListOrigin::BundledUspto => write!(f, "bundled-uspto"),
            StopListOrigin::UserFile => write!(f, "user-file"),
        }
    }
}

/// A set of words to exclude from the vocabulary, kept in normalized form.
#[derive(Debug, Clone)]
pub struct StopWordList {
    entries: HashSet<String>,
    origin: StopListOrigin,
}

impl StopWordList {
    /// The bundled USPTO list.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_USPTO, StopListOrigin::BundledUspto)
    }

    /// Load a user list: one word per line, `#` lines are comments.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::parse(&text, StopListOrigin::UserFile))
    }

    fn parse(text: &str, origin: StopListOrigin) -> Self {
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(normalize)
            .collect();
        StopWordList { entries, origin }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn origin(&self) -> StopListOrigin {
        self.origin
    }
}

/// Split text into maximal runs of alphabetic characters. Digits, hyphens,
/// and punctuation all act as separators; order is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Lowercase a token and strip one trailing `s` when the word is at least
/// four characters long and does not end in a double `s`.
///
/// The rule is literal character stripping, not lemmatization:
/// "butterflies" becomes "butterflie". It is idempotent because the strip
/// only fires when the character before the final `s` is itself not an `s`,
/// so the result never ends in `s`.
pub fn normalize(token: &str) -> String {
    let lower = token.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let n = chars.len();
    if n >= 4 && chars[n - 1] == 's' && chars[n - 2] != 's' {
        chars[..n - 1].iter().collect()
    } else {
        lower
    }
}

/// Drop words that appear in the stop list; order is otherwise preserved.
/// Input words must already be normalized.
pub fn filter_stopwords(words: Vec<String>, list: &StopWordList) -> Vec<String> {
    words.into_iter().filter(|w| !list.contains(w)).collect()
}

/// One vocabulary entry: a normalized word with its corpus counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    /// Dense id, assigned in descending total_freq with lexicographic tie-break.
    pub word_id: usize,
    pub surface: String,
    /// Occurrences over all units.
    pub total_freq: u32,
    /// Number of units containing the word at least once.
    pub unit_freq: u32,
}

/// Normalized word inventory with frequencies, in word-id order.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    /// Post-filter token count over the corpus; equals the sum of total_freq.
    pub token_count: u64,
    /// Token count before stop-word filtering.
    pub raw_token_count: u64,
}

impl Vocabulary {
    /// Build a vocabulary from explicit (surface, total_freq, unit_freq)
    /// triples, applying the canonical id assignment.
    pub fn from_frequencies<I>(freqs: I) -> Self
    where
        I: IntoIterator<Item = (String, u32, u32)>,
    {
        let mut entries: Vec<VocabEntry> = freqs
            .into_iter()
            .map(|(surface, total_freq, unit_freq)| VocabEntry {
                word_id: 0,
                surface,
                total_freq,
                unit_freq,
            })
            .collect();
        entries.sort_by(|a, b| {
            b.total_freq
                .cmp(&a.total_freq)
                .then_with(|| a.surface.cmp(&b.surface))
        });
        let token_count = entries.iter().map(|e| u64::from(e.total_freq)).sum();
        for (id, e) in entries.iter_mut().enumerate() {
            e.word_id = id;
        }
        Vocabulary {
            entries,
            token_count,
            raw_token_count: token_count,
        }
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, surface: &str) -> Option<&VocabEntry> {
        self.entries.iter().find(|e| e.surface == surface)
    }
}

/// Count every post-filter normalized word across all units.
///
/// Emits a warning and returns an empty vocabulary when no unit yields any
/// countable word.
pub fn build_vocabulary(units: &[TextUnit], list: &StopWordList) -> Vocabulary {
    let mut total: HashMap<String, u32> = HashMap::new();
    let mut unit_count: HashMap<String, u32> = HashMap::new();
    let mut raw_token_count = 0u64;
    for unit in units {
        let tokens = tokenize(&unit.text);
        raw_token_count += tokens.len() as u64;
        let words = filter_stopwords(tokens.iter().map(|t| normalize(t)).collect(), list);
        let mut seen: HashSet<&str> = HashSet::new();
        for w in &words {
            *total.entry(w.clone()).or_insert(0) += 1;
            if seen.insert(w) {
                *unit_count.entry(w.clone()).or_insert(0) += 1;
            }
        }
    }
    if total.is_empty() {
        log::warn!("corpus yields an empty vocabulary");
    }
    let mut vocab = Vocabulary::from_frequencies(
        total
            .into_iter()
            .map(|(surface, tf)| {
                let uf = unit_count[&surface];
                (surface, tf, uf)
            })
            .collect::<Vec<_>>(),
    );
    vocab.raw_token_count = raw_token_count;
    vocab
}

/// The cap-driven inclusion set.
#[derive(Debug, Clone)]
pub struct WordSelection {
    /// Effective occurrence threshold actually applied.
    pub min_freq: u32,
    /// Configured cap.
    pub max_words: usize,
    /// Selected words in word-id order.
    pub selected: Vec<VocabEntry>,
    /// True when the top frequency tier alone exceeded the cap and the
    /// lexicographic fallback was applied.
    pub tie_break_fallback: bool,
}

impl WordSelection {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn surfaces(&self) -> Vec<String> {
        self.selected.iter().map(|e| e.surface.clone()).collect()
    }
}

/// Choose the analysis vocabulary under the word cap.
///
/// Candidate thresholds are `min_freq` and every attained frequency above
/// it, scanned in ascending order; the first candidate whose selection fits
/// the cap wins. When even the top frequency tier exceeds the cap, the
/// lexicographically first `max_words` words of that tier are taken instead
/// and the selection is flagged.
pub fn select_words(vocab: &Vocabulary, min_freq: u32, max_words: usize) -> Result<WordSelection> {
    if min_freq < 1 {
        return Err(Error::Config("min_freq must be at least 1".into()));
    }
    if max_words < 1 {
        return Err(Error::Config("max_words must be at least 1".into()));
    }
    let entries = vocab.entries();

    let mut candidates: Vec<u32> = vec![min_freq];
    candidates.extend(
        entries
            .iter()
            .map(|e| e.total_freq)
            .filter(|&f| f > min_freq),
    );
    candidates.sort_unstable();
    candidates.dedup();

    for t in candidates {
        let count = entries.iter().filter(|e| e.total_freq >= t).count();
        if count <= max_words {
            let selected: Vec<VocabEntry> = entries
                .iter()
                .filter(|e| e.total_freq >= t)
                .cloned()
                .collect();
            if selected.is_empty() {
                log::warn!("no word reaches the occurrence threshold {t}; selection is empty");
            }
            return Ok(WordSelection {
                min_freq: t,
                max_words,
                selected,
                tie_break_fallback: false,
            });
        }
    }

    // Top tier alone exceeds the cap: take its lexicographically first
    // max_words. Within the tier word-id order is lexicographic already.
    let top_freq = entries.iter().map(|e| e.total_freq).max().unwrap_or(0);
    let selected: Vec<VocabEntry> = entries
        .iter()
        .filter(|e| e.total_freq == top_freq)
        .take(max_words)
        .cloned()
        .collect();
    log::warn!(
        "top frequency tier ({top_freq} occurrences) exceeds the cap of {max_words} words; \
         taking the lexicographically first {max_words}"
    );
    Ok(WordSelection {
        min_freq: top_freq,
        max_words,
        selected,
        tie_break_fallback: true,
    })
}
