//! Character vocabulary shared by both output modes.

use serde::{Deserialize, Serialize};

use crate::text::PunctuationConfig;
use crate::{Error, Result};

pub const BLANK_SYMBOL: &str = "<blank>";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct CharVocab {
    symbols: Vec<String>,
}

impl CharVocab {
    /// Blank, space, lowercase and uppercase ASCII letters, then the
    /// configured punctuation marks and intra-word characters.
    pub fn from_punctuation(cfg: &PunctuationConfig) -> Self {
        let mut symbols = vec![BLANK_SYMBOL.to_string(), " ".to_string()];
        symbols.extend(('a'..='z').map(String::from));
        symbols.extend(('A'..='Z').map(String::from));
        symbols.extend(cfg.marks.iter().map(|c| c.to_string()));
        symbols.extend(cfg.intra_word_chars.iter().map(|c| c.to_string()));
        Self { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn blank(&self) -> usize {
        0
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        let mut buf = [0u8; 4];
        let s: &str = c.encode_utf8(&mut buf);
        self.symbols.iter().skip(1).position(|x| x == s).map(|i| i + 1)
    }

    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        text.chars()
            .map(|c| self.index_of(c).ok_or(Error::OutOfVocabulary(c)))
            .collect()
    }

    pub fn decode(&self, tokens: &[usize]) -> String {
        tokens
            .iter()
            .filter(|&&t| t != self.blank() && t < self.symbols.len())
            .map(|&t| self.symbols[t].as_str())
            .collect()
    }
}

impl TryFrom<Vec<String>> for CharVocab {
    type Error = String;

    fn try_from(symbols: Vec<String>) -> std::result::Result<Self, String> {
        if symbols.first().map(String::as_str) != Some(BLANK_SYMBOL) {
            return Err(format!("vocabulary must start with {BLANK_SYMBOL}"));
        }
        if let Some(bad) = symbols.iter().skip(1).find(|s| s.chars().count() != 1) {
            return Err(format!("vocabulary entry {bad:?} is not a single character"));
        }
        Ok(Self { symbols })
    }
}

impl From<CharVocab> for Vec<String> {
    fn from(v: CharVocab) -> Self {
        v.symbols
    }
}
