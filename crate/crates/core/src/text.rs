//! Tokenization and sentence splitting shared by every module.
//!
//! Tokens are lowercase runs of alphanumeric characters; anything else is a
//! separator. Sentences end at `.`, `?` or `!` when followed by whitespace or
//! the end of the text.

/// Lowercase the text and split it on every non-alphanumeric run.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Number of tokens `tokenize` would produce, without allocating them.
pub fn token_count(text: &str) -> usize {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .count()
}

/// Tokens joined by single spaces. This is the identity key for graph nodes
/// and the string fuzzy matching compares.
pub fn normalize(text: &str) -> String {
    tokenize(text).join(" ")
}

/// Collapse every whitespace run to a single space and trim.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

/// Byte spans of sentences, untrimmed, covering the whole input.
pub(crate) fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !is_terminator(c) {
            continue;
        }
        let end = i + c.len_utf8();
        match chars.peek() {
            None => {}
            Some((_, next)) if next.is_whitespace() => {}
            Some(_) => continue,
        }
        spans.push((start, end));
        start = end;
    }
    if start < text.len() {
        spans.push((start, text.len()));
    }
    spans
}

/// Split text into trimmed, non-empty sentences. Terminators stay attached.
pub fn split_sentences(text: &str) -> Vec<String> {
    sentence_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].trim())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}
