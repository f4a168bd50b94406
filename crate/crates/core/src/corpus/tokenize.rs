//! Identifier-aware tokenizer shared by code and report text.

/// Splits `text` into lowercase tokens.
///
/// Words are maximal runs of alphanumerics and underscores. A compound word
/// is emitted lowercased, followed by its snake_case parts and, for each
/// part, its camelCase pieces. Tokens shorter than two characters are
/// dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !(c.is_alphanumeric() || c == '_')) {
        let word = word.trim_matches('_');
        if word.is_empty() {
            continue;
        }
        push(&mut out, word);
        let parts: Vec<&str> = word.split('_').filter(|p| !p.is_empty()).collect();
        if parts.len() > 1 {
            for part in parts {
                push(&mut out, part);
                push_camel_pieces(&mut out, part);
            }
        } else {
            push_camel_pieces(&mut out, word);
        }
    }
    out
}

fn push(out: &mut Vec<String>, token: &str) {
    if token.chars().count() >= 2 {
        out.push(token.to_lowercase());
    }
}

fn push_camel_pieces(out: &mut Vec<String>, word: &str) {
    let pieces = camel_pieces(word);
    if pieces.len() > 1 {
        for piece in pieces {
            push(out, piece);
        }
    }
}

/// Splits at lower→Upper, digit→Upper and ACRONYM→Word boundaries. Digits
/// stay attached to the piece they follow.
fn camel_pieces(word: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    let mut pieces = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let (offset, c) = chars[i];
        let prev = chars[i - 1].1;
        let boundary = c.is_uppercase()
            && ((prev.is_lowercase() || prev.is_numeric())
                || (prev.is_uppercase()
                    && chars.get(i + 1).is_some_and(|&(_, n)| n.is_lowercase())));
        if boundary {
            pieces.push(&word[start..offset]);
            start = offset;
        }
    }
    pieces.push(&word[start..]);
    pieces
}
