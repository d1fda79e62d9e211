//! Flesch reading ease with a vowel-group syllable heuristic.

use crate::error::{Error, Result};
use crate::text::{split_sentences, tokenize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadabilityStats {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

impl ReadabilityStats {
    pub fn of(text: &str) -> Result<Self> {
        let words = tokenize(text);
        if words.is_empty() {
            return Err(Error::Invalid("readability needs at least one word".into()));
        }
        Ok(Self {
            words: words.len(),
            sentences: split_sentences(text).len().max(1),
            syllables: words.iter().map(|w| count_syllables(w)).sum(),
        })
    }

    pub fn flesch(&self) -> f64 {
        206.835
            - 1.015 * (self.words as f64 / self.sentences as f64)
            - 84.6 * (self.syllables as f64 / self.words as f64)
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Maximal vowel groups (`aeiouy`), minus one for a terminal silent `e`
/// (but not `le`), never below one.
pub fn count_syllables(word: &str) -> usize {
    let w: Vec<char> = word.to_lowercase().chars().collect();
    let mut groups = 0usize;
    let mut prev_vowel = false;
    for &c in &w {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = w.len();
    if n >= 2 && w[n - 1] == 'e' && w[n - 2] != 'l' {
        groups = groups.saturating_sub(1);
    }
    groups.max(1)
}

/// Unclamped Flesch reading ease.
pub fn flesch_reading_ease_raw(text: &str) -> Result<f64> {
    Ok(ReadabilityStats::of(text)?.flesch())
}

/// Flesch reading ease clamped to the conventional 0–100 scale.
pub fn flesch_reading_ease(text: &str) -> Result<f64> {
    Ok(flesch_reading_ease_raw(text)?.clamp(0.0, 100.0))
}
