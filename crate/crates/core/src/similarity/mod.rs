//! Label similarity measures.
//!
//! Every measure maps a pair of [`TokenizedName`]s to a score in `[0, 1]`,
//! with `score(m, x, x) == 1` for all inputs. Character-level measures work on
//! the lowercase tokens joined without separators, so `first_name` and
//! `firstName` compare as identical.

mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use oracle::{levenshtein_oracle, ORACLE_MAX_LEN};

/// The similarity measures list agents sample from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MeasureId {
    #[serde(rename = "levenshtein")]
    LevenshteinNorm,
    #[serde(rename = "jaro-winkler")]
    JaroWinkler,
    #[serde(rename = "bigram-dice")]
    BigramDice,
    #[serde(rename = "trigram-jaccard")]
    TrigramJaccard,
    #[serde(rename = "monge-elkan")]
    MongeElkanLevenshtein,
}

impl MeasureId {
    pub const ALL: [MeasureId; 5] = [
        MeasureId::LevenshteinNorm,
        MeasureId::JaroWinkler,
        MeasureId::BigramDice,
        MeasureId::TrigramJaccard,
        MeasureId::MongeElkanLevenshtein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureId::LevenshteinNorm => "levenshtein",
            MeasureId::JaroWinkler => "jaro-winkler",
            MeasureId::BigramDice => "bigram-dice",
            MeasureId::TrigramJaccard => "trigram-jaccard",
            MeasureId::MongeElkanLevenshtein => "monge-elkan",
        }
    }

    /// Whether `score(m, x, y) == score(m, y, x)` holds for every input.
    pub fn is_symmetric(self) -> bool {
        !matches!(self, MeasureId::MongeElkanLevenshtein)
    }
}

impl fmt::Display for MeasureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMeasure(pub String);

impl fmt::Display for UnknownMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown measure {:?} (expected one of ", self.0)?;
        for (i, m) in MeasureId::ALL.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(m.name())?;
        }
        f.write_str(")")
    }
}

impl std::error::Error for UnknownMeasure {}

impl FromStr for MeasureId {
    type Err = UnknownMeasure;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MeasureId::ALL.into_iter().find(|m| m.name() == s.trim()).ok_or_else(|| UnknownMeasure(s.to_owned()))
    }
}

/// An element label split into lowercase tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedName {
    pub original: String,
    pub tokens: Vec<String>,
    joined: Vec<char>,
}

impl TokenizedName {
    /// The tokens concatenated without separators.
    pub fn joined(&self) -> String {
        self.joined.iter().collect()
    }
}

/// Splits a label on camelCase humps, letter/digit boundaries and any
/// non-alphanumeric character, lowercasing every token.
///
/// An all-caps run followed by a capitalized word splits before the last
/// capital: `XMLHttp` gives `["xml", "http"]`.
pub fn normalize(name: &str) -> TokenizedName {
    let chars: Vec<char> = name.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            flush(&mut current, &mut tokens);
            continue;
        }
        if let Some(&prev) = i.checked_sub(1).map(|j| &chars[j]) {
            if prev.is_alphanumeric() && !current.is_empty() {
                let next = chars.get(i + 1).copied();
                let hump = prev.is_lowercase() && c.is_uppercase();
                let digit_edge = prev.is_numeric() != c.is_numeric();
                let acronym_end = prev.is_uppercase() && c.is_uppercase() && next.is_some_and(char::is_lowercase);
                if hump || digit_edge || acronym_end {
                    flush(&mut current, &mut tokens);
                }
            }
        }
        current.push(c);
    }
    flush(&mut current, &mut tokens);
    let joined = tokens.iter().flat_map(|t| t.chars()).collect();
    TokenizedName { original: name.to_owned(), tokens, joined }
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(current.to_lowercase());
        current.clear();
    }
}

pub fn score(measure: MeasureId, a: &TokenizedName, b: &TokenizedName) -> f64 {
    let s = match measure {
        MeasureId::LevenshteinNorm => levenshtein_similarity(&a.joined, &b.joined),
        MeasureId::JaroWinkler => jaro_winkler(&a.joined, &b.joined),
        MeasureId::BigramDice => ngram_dice(&a.joined, &b.joined, 2),
        MeasureId::TrigramJaccard => ngram_jaccard(&a.joined, &b.joined, 3),
        MeasureId::MongeElkanLevenshtein => monge_elkan(&a.tokens, &b.tokens),
    };
    s.clamp(0.0, 1.0)
}

/// Convenience wrapper normalizing both labels first.
pub fn score_names(measure: MeasureId, a: &str, b: &str) -> f64 {
    score(measure, &normalize(a), &normalize(b))
}

/// Edit distance with unit insert, delete and substitute costs.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            curr[j + 1] = (prev[j + 1] + 1).min(curr[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

fn levenshtein_similarity(a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

fn jaro(a: &[char], b: &[char]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut a_hit = vec![false; a.len()];
    let mut b_hit = vec![false; b.len()];
    let mut matches = 0usize;
    for (i, ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_hit[j] && b[j] == *ca {
                a_hit[i] = true;
                b_hit[j] = true;
                matches += 1;
                break;
            }
        }
    }
    if matches == 0 {
        return 0.0;
    }
    let a_seq = a.iter().zip(&a_hit).filter(|(_, h)| **h).map(|(c, _)| c);
    let b_seq = b.iter().zip(&b_hit).filter(|(_, h)| **h).map(|(c, _)| c);
    let half_transpositions = a_seq.zip(b_seq).filter(|(x, y)| x != y).count();
    let m = matches as f64;
    let t = half_transpositions as f64 / 2.0;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

const WINKLER_SCALING: f64 = 0.1;
const WINKLER_PREFIX_CAP: usize = 4;

fn jaro_winkler(a: &[char], b: &[char]) -> f64 {
    let j = jaro(a, b);
    let prefix = a.iter().zip(b).take(WINKLER_PREFIX_CAP).take_while(|(x, y)| x == y).count();
    j + prefix as f64 * WINKLER_SCALING * (1.0 - j)
}

/// Sorted n-gram windows; a sorted multiset.
fn ngrams(s: &[char], n: usize) -> Vec<&[char]> {
    let mut grams: Vec<&[char]> = s.windows(n).collect();
    grams.sort_unstable();
    grams
}

fn multiset_intersection(a: &[&[char]], b: &[&[char]]) -> usize {
    let (mut i, mut j, mut shared) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    shared
}

/// Strings too short to have any n-gram only match when they are equal.
fn ngram_score(a: &[char], b: &[char], n: usize, f: impl Fn(usize, usize, usize) -> f64) -> f64 {
    let (ga, gb) = (ngrams(a, n), ngrams(b, n));
    match (ga.is_empty(), gb.is_empty()) {
        (true, true) => f64::from(u8::from(a == b)),
        (true, false) | (false, true) => 0.0,
        (false, false) => f(multiset_intersection(&ga, &gb), ga.len(), gb.len()),
    }
}

fn ngram_dice(a: &[char], b: &[char], n: usize) -> f64 {
    ngram_score(a, b, n, |shared, la, lb| 2.0 * shared as f64 / (la + lb) as f64)
}

fn ngram_jaccard(a: &[char], b: &[char], n: usize) -> f64 {
    ngram_score(a, b, n, |shared, la, lb| shared as f64 / (la + lb - shared) as f64)
}

/// Mean over the tokens of `a` of the best Levenshtein similarity in `b`.
/// Not symmetric.
fn monge_elkan(a: &[String], b: &[String]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let b_chars: Vec<Vec<char>> = b.iter().map(|t| t.chars().collect()).collect();
    let total: f64 = a
        .iter()
        .map(|ta| {
            let ta: Vec<char> = ta.chars().collect();
            b_chars.iter().map(|tb| levenshtein_similarity(&ta, tb)).fold(0.0, f64::max)
        })
        .sum();
    total / a.len() as f64
}
