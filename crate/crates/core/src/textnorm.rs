//! Canonical transcript normalization.
//!
//! Output is lowercase and contains only letters, digits, apostrophes,
//! hyphens, and single spaces. Any Unicode punctuation or symbol is removed;
//! whitespace separates tokens. Typographic apostrophes and hyphens are
//! folded to their ASCII forms first. Tokens left with no letter or digit
//! (a bare `-` or `'`) are dropped.

use alloc::string::String;

fn fold(c: char) -> char {
    match c {
        '\u{2019}' | '\u{2018}' | '\u{02BC}' | '\u{FF07}' => '\'',
        '\u{2010}' | '\u{2011}' => '-',
        other => other,
    }
}

fn is_kept_word_char(c: char) -> bool {
    c.is_alphanumeric() && !c.is_uppercase()
}

/// Normalizes a raw transcript. Idempotent.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut token = String::new();
    let mut has_word_char = false;

    let flush = |token: &mut String, has_word_char: &mut bool, out: &mut String| {
        if *has_word_char {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(token);
        }
        token.clear();
        *has_word_char = false;
    };

    for c in raw.chars().map(fold) {
        if c.is_whitespace() {
            flush(&mut token, &mut has_word_char, &mut out);
        } else if c == '\'' || c == '-' {
            token.push(c);
        } else if c.is_alphanumeric() {
            for lc in c.to_lowercase().filter(|&lc| is_kept_word_char(lc)) {
                token.push(lc);
                has_word_char = true;
            }
        }
    }
    flush(&mut token, &mut has_word_char, &mut out);
    out
}

/// Whitespace token count of already-normalized text.
pub fn token_count(normalized: &str) -> usize {
    normalized.split_whitespace().count()
}

/// True when `s` satisfies the normalized-text invariants.
pub fn is_normalized(s: &str) -> bool {
    if s.starts_with(' ') || s.ends_with(' ') || s.contains("  ") {
        return false;
    }
    s.chars().all(|c| c == ' ' || c == '\'' || c == '-' || is_kept_word_char(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_examples() {
        assert_eq!(normalize_text("Hello, it's a WELL-known fact!"), "hello it's a well-known fact");
        assert_eq!(normalize_text("Okay."), "okay");
        assert_eq!(normalize_text("re-enter   (quietly)"), "re-enter quietly");
    }

    #[test]
    fn typographic_apostrophe_is_folded() {
        assert_eq!(normalize_text("Don\u{2019}t STOP"), "don't stop");
    }

    #[test]
    fn digits_are_kept() {
        assert_eq!(normalize_text("Call me at 5 p.m., OK?"), "call me at 5 pm ok");
    }

    #[test]
    fn empty_and_punctuation_only() {
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("  ... !!! -- ' "), "");
        assert_eq!(token_count(""), 0);
    }

    #[test]
    fn unicode_punctuation_is_stripped() {
        assert_eq!(normalize_text("«Bonjour» — ça va¿"), "bonjour ça va");
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC*") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once.clone());
            prop_assert!(is_normalized(&once), "{:?}", once);
        }

        #[test]
        fn token_count_matches_split(s in "[a-zA-Z ,.!'-]{0,64}") {
            let n = normalize_text(&s);
            prop_assert_eq!(token_count(&n), n.split(' ').filter(|t| !t.is_empty()).count());
        }
    }
}
