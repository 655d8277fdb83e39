//! Shared tokenizer used by BM25 and every n-gram metric.
//!
//! Rules, frozen for reproducibility:
//!
//! 1. split on Unicode whitespace;
//! 2. within each chunk, emoji scalars become standalone tokens (so informal
//!    rewrites keep their emoji signal even when an emoji touches a word);
//! 3. the remaining segments are lowercased and stripped of leading/trailing
//!    punctuation (interior punctuation such as apostrophes is preserved);
//! 4. empty segments are dropped. Joiner codepoints (ZWJ, variation
//!    selectors) are discarded.

/// Tokenize `text` under the shared rules.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut segment = String::new();
        for ch in chunk.chars() {
            if is_joiner(ch) {
                continue;
            }
            if is_emoji(ch) {
                push_segment(&mut tokens, &mut segment);
                tokens.push(ch.to_string());
            } else {
                segment.push(ch);
            }
        }
        push_segment(&mut tokens, &mut segment);
    }
    tokens
}

/// Number of tokens in `text` under the shared rules.
pub fn token_count(text: &str) -> usize {
    tokenize(text).len()
}

fn push_segment(tokens: &mut Vec<String>, segment: &mut String) {
    if segment.is_empty() {
        return;
    }
    let trimmed = segment.trim_matches(|c: char| !c.is_alphanumeric());
    if !trimmed.is_empty() {
        tokens.push(trimmed.to_lowercase());
    }
    segment.clear();
}

// Emoji and pictograph blocks. Coverage is intentionally coarse: the goal is
// a stable token boundary, not Unicode-complete emoji classification.
fn is_emoji(ch: char) -> bool {
    matches!(u32::from(ch),
        0x1F000..=0x1F02F   // mahjong/domino tiles
        | 0x1F0A0..=0x1F0FF // playing cards
        | 0x1F300..=0x1F5FF // misc symbols and pictographs
        | 0x1F600..=0x1F64F // emoticons
        | 0x1F680..=0x1F6FF // transport
        | 0x1F900..=0x1F9FF // supplemental symbols
        | 0x1FA00..=0x1FAFF // extended-A
        | 0x2600..=0x27BF   // misc symbols, dingbats
        | 0x2B00..=0x2BFF   // arrows and stars (covers U+2B50)
        | 0x1F1E6..=0x1F1FF // regional indicators
    )
}

fn is_joiner(ch: char) -> bool {
    matches!(u32::from(ch), 0x200D | 0xFE00..=0xFE0F)
}
