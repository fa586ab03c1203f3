//! Sentence segmentation for meta-prompts.
//!
//! Rule: a sentence ends at `.`, `!` or `?` followed by whitespace or
//! end-of-text. Abbreviations are not special-cased. Each sentence is
//! trimmed and has internal whitespace collapsed, which makes the rule
//! idempotent: joining the output with single spaces and re-segmenting
//! is a fixed point.

/// Collapses runs of whitespace to single spaces and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(ch) = chars.next() {
        current.push(ch);
        if matches!(ch, '.' | '!' | '?') {
            let at_boundary = match chars.peek() {
                None => true,
                Some(next) => next.is_whitespace(),
            };
            if at_boundary {
                push_sentence(&mut sentences, &mut current);
            }
        }
    }
    push_sentence(&mut sentences, &mut current);
    sentences
}

fn push_sentence(sentences: &mut Vec<String>, current: &mut String) {
    let normalized = normalize_whitespace(current);
    if !normalized.is_empty() {
        sentences.push(normalized);
    }
    current.clear();
}
