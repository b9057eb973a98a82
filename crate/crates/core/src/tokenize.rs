//! The single tokenizer shared by indexing, vectorization and label matching.

/// A lowercased word and its ordinal within the field it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub position: u32,
}

/// Splits on every non-alphanumeric character and lowercases (Unicode aware).
/// No stemming, no stop words.
pub fn tokens(text: &str) -> impl Iterator<Item = Token> + '_ {
    words(text).enumerate().map(|(i, surface)| Token {
        surface,
        position: i as u32,
    })
}

/// Lowercased word surfaces only.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

pub fn word_vec(text: &str) -> Vec<String> {
    words(text).collect()
}

/// True when `phrase` occurs in `haystack` as a run of consecutive whole tokens.
pub fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.len() >= phrase.len() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_and_lowercases() {
        let t: Vec<_> = tokens("Deep-Learning, for  ROBOTICS!").collect();
        let s: Vec<_> = t.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(s, ["deep", "learning", "for", "robotics"]);
        assert_eq!(t[3].position, 3);
    }

    #[test]
    fn unicode_letters_are_word_characters() {
        assert_eq!(word_vec("Études Über"), ["études", "über"]);
    }

    #[test]
    fn phrase_requires_whole_tokens() {
        let hay = word_vec("mycological methods in the field");
        assert!(!contains_phrase(&hay, &word_vec("mycology")));
        assert!(contains_phrase(&hay, &word_vec("mycological methods")));
        assert!(!contains_phrase(&hay, &word_vec("methods mycological")));
        assert!(!contains_phrase(&hay, &[]));
    }
}
