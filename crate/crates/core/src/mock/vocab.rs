//! Closed-class vocabulary shared by the generator, the mock embedders, and
//! the mock paraphraser.

/// Interchangeable function-word variants. The first variant of each slot is
/// the corpus-global default the mock paraphraser rewrites to.
pub const SLOTS: &[&[&str]] = &[
    &["yeah", "yes", "yep", "right", "sure", "okay"],
    &["maybe", "probably", "perhaps", "possibly", "likely"],
    &["very", "really", "pretty", "quite", "totally", "super"],
    &["and", "plus", "also", "then", "besides"],
    &["but", "though", "however", "still", "yet"],
    &["actually", "basically", "honestly", "literally", "anyway", "seriously"],
    &["many", "lots", "tons", "plenty", "loads"],
    &["think", "guess", "suppose", "believe", "reckon", "figure"],
    &["things", "stuff", "items", "bits"],
    &["little", "bit", "slightly", "somewhat"],
];

/// Slot whose words a condensing paraphraser drops entirely.
pub const DISCOURSE_SLOT: usize = 5;

pub const FILLERS: &[&str] = &["uh", "um", "er", "ah", "hmm", "mhm"];

/// Function words every speaker uses at the same rate.
pub const COMMON: &[&str] = &[
    "i", "you", "the", "a", "it", "to", "of", "that", "is", "was", "we", "they", "in", "on", "for", "with",
    "have", "do", "know", "so", "just", "not", "my", "this",
];

pub fn slot_of(word: &str) -> Option<(usize, usize)> {
    SLOTS
        .iter()
        .enumerate()
        .find_map(|(s, variants)| variants.iter().position(|v| *v == word).map(|i| (s, i)))
}

pub fn is_filler(word: &str) -> bool {
    FILLERS.contains(&word)
}

pub fn is_function_word(word: &str) -> bool {
    is_filler(word) || COMMON.contains(&word) || slot_of(word).is_some()
}
