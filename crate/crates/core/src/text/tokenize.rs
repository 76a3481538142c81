use unicode_normalization::UnicodeNormalization;

use super::{PunctuationConfig, Token, EM_DASH};

const QUOTE: char = '"';

/// Splits text into word and punctuation tokens.
///
/// Input is NFC-normalized first. Whitespace separates words and every
/// configured mark becomes its own token; characters that are not marks
/// (including intra-word apostrophes and hyphens) stay inside words.
pub fn tokenize(raw: &str, cfg: &PunctuationConfig) -> Vec<Token> {
    let text: String = raw.nfc().collect();
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut start = None;
        for (i, c) in chunk.char_indices() {
            if cfg.is_mark(c) {
                if let Some(s) = start.take() {
                    tokens.push(Token::word(&chunk[s..i]));
                }
                tokens.push(Token::punct(c));
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            tokens.push(Token::word(&chunk[s..]));
        }
    }
    tokens
}

/// Renders tokens back to text.
///
/// Words are space separated; marks attach to the preceding token, except
/// that an opening double quote attaches to the following one and an em-dash
/// attaches on both sides. Re-tokenizing the output gives back `tokens`.
pub fn detokenize(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut quotes_seen = 0usize;
    let mut glue_next = true;
    for tok in tokens {
        let opening_quote = tok.is_punct() && tok.surface.starts_with(QUOTE) && quotes_seen % 2 == 0;
        if tok.is_punct() && tok.surface.starts_with(QUOTE) {
            quotes_seen += 1;
        }
        let wants_space = tok.is_word() || opening_quote;
        if wants_space && !glue_next {
            out.push(' ');
        }
        out.push_str(&tok.surface);
        glue_next = opening_quote || (tok.is_punct() && tok.surface.starts_with(EM_DASH));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::TokenKind;
    use proptest::prelude::*;

    /// Character-at-a-time reference tokenizer used as an oracle.
    fn reference_tokenize(raw: &str, cfg: &PunctuationConfig) -> Vec<(String, TokenKind)> {
        let mut out = Vec::new();
        let mut word = String::new();
        for c in raw.nfc() {
            if c.is_whitespace() || cfg.is_mark(c) {
                if !word.is_empty() {
                    out.push((std::mem::take(&mut word), TokenKind::Word));
                }
                if cfg.is_mark(c) {
                    out.push((c.to_string(), TokenKind::Punct));
                }
            } else {
                word.push(c);
            }
        }
        if !word.is_empty() {
            out.push((word, TokenKind::Word));
        }
        out
    }

    fn pairs(tokens: &[Token]) -> Vec<(String, TokenKind)> {
        tokens.iter().map(|t| (t.surface.clone(), t.kind)).collect()
    }

    #[test]
    fn hello_world() {
        let cfg = PunctuationConfig::default();
        let got = tokenize("Hello, world.", &cfg);
        assert_eq!(
            got,
            vec![Token::word("Hello"), Token::punct(','), Token::word("world"), Token::punct('.')]
        );
        assert_eq!(pairs(&got), reference_tokenize("Hello, world.", &cfg));
    }

    #[test]
    fn empty_and_whitespace() {
        let cfg = PunctuationConfig::default();
        assert!(tokenize("", &cfg).is_empty());
        assert!(tokenize("  \t\n", &cfg).is_empty());
    }

    #[test]
    fn intra_word_characters_stay_inside() {
        let cfg = PunctuationConfig::default();
        assert_eq!(tokenize("don't stop", &cfg), vec![Token::word("don't"), Token::word("stop")]);
        assert_eq!(tokenize("well-known", &cfg), vec![Token::word("well-known")]);
    }

    #[test]
    fn em_dash_and_quotes() {
        let cfg = PunctuationConfig::default();
        let toks = tokenize("He said, \"Wait\u{2014}no.\"", &cfg);
        assert_eq!(
            pairs(&toks),
            reference_tokenize("He said, \"Wait\u{2014}no.\"", &cfg)
        );
        assert_eq!(detokenize(&toks), "He said, \"Wait\u{2014}no.\"");
    }

    #[test]
    fn nfc_normalization() {
        let cfg = PunctuationConfig::default();
        let decomposed = "cafe\u{301}";
        assert_eq!(tokenize(decomposed, &cfg), vec![Token::word("caf\u{e9}")]);
    }

    #[test]
    fn detokenize_basic() {
        let cfg = PunctuationConfig::default();
        for text in ["Hello, world.", "Go now!", "a b c", "What? Yes; no: maybe."] {
            assert_eq!(detokenize(&tokenize(text, &cfg)), text);
        }
    }

    fn token_strategy() -> impl Strategy<Value = Token> {
        prop_oneof![
            "[a-zA-Z'\\-]{1,6}".prop_map(Token::word),
            prop::sample::select(vec!['.', ',', '?', '!', ';', ':', '"', EM_DASH]).prop_map(Token::punct),
        ]
    }

    proptest! {
        #[test]
        fn tokenize_matches_reference(text in "[a-zA-Z '\\-.,?!;:\"\u{2014}\t]{0,40}") {
            let cfg = PunctuationConfig::default();
            prop_assert_eq!(pairs(&tokenize(&text, &cfg)), reference_tokenize(&text, &cfg));
        }

        #[test]
        fn tokens_round_trip(tokens in prop::collection::vec(token_strategy(), 0..20)) {
            let cfg = PunctuationConfig::default();
            let text = detokenize(&tokens);
            prop_assert_eq!(&tokenize(&text, &cfg), &tokens);
            prop_assert_eq!(detokenize(&tokenize(&text, &cfg)), text);
        }
    }
}
