//! Punctuated text as token sequences.
//!
//! Punctuation marks are standalone tokens so that every mark is one
//! alignment unit; words carry their casing. The four [`ViewKind`]s project a
//! token sequence onto the presence/absence of punctuation and casing, which
//! is what the scoring module differences to isolate punctuation and case
//! errors from word errors.

mod restore;
mod tokenize;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use restore::{restore, CommandRestorer, IdentityRestorer, Restorer, RuleRestorer};
pub use tokenize::{detokenize, tokenize};

pub const EM_DASH: char = '\u{2014}';

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Punct,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn word(surface: impl Into<String>) -> Self {
        Self {
            surface: surface.into(),
            kind: TokenKind::Word,
        }
    }

    pub fn punct(mark: char) -> Self {
        Self {
            surface: mark.to_string(),
            kind: TokenKind::Punct,
        }
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }

    pub fn is_punct(&self) -> bool {
        self.kind == TokenKind::Punct
    }

    /// A word is cased when it contains at least one uppercase letter.
    pub fn is_cased(&self) -> bool {
        self.is_word() && self.surface.chars().any(char::is_uppercase)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

/// Which of punctuation and casing survive a projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewKind {
    /// punctuated, cased
    PC,
    /// punctuated, uncased
    PNC,
    /// unpunctuated, cased
    NPC,
    /// unpunctuated, uncased
    NPNC,
}

impl ViewKind {
    pub const ALL: [ViewKind; 4] = [ViewKind::PC, ViewKind::PNC, ViewKind::NPC, ViewKind::NPNC];

    pub fn keeps_punctuation(self) -> bool {
        matches!(self, ViewKind::PC | ViewKind::PNC)
    }

    pub fn keeps_case(self) -> bool {
        matches!(self, ViewKind::PC | ViewKind::NPC)
    }

    pub fn label(self) -> &'static str {
        match self {
            ViewKind::PC => "p-c",
            ViewKind::PNC => "p-nc",
            ViewKind::NPC => "np-c",
            ViewKind::NPNC => "np-nc",
        }
    }
}

impl std::str::FromStr for ViewKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "pc" | "p-c" => Ok(ViewKind::PC),
            "pnc" | "p-nc" => Ok(ViewKind::PNC),
            "npc" | "np-c" => Ok(ViewKind::NPC),
            "npnc" | "np-nc" => Ok(ViewKind::NPNC),
            other => Err(Error::InvalidArgument(format!("unknown view `{other}`"))),
        }
    }
}

/// The punctuation inventory used for tokenization and scoring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PunctuationConfig {
    pub marks: BTreeSet<char>,
    pub intra_word_chars: BTreeSet<char>,
}

impl Default for PunctuationConfig {
    fn default() -> Self {
        Self {
            marks: ['.', ',', '?', '!', ';', ':', '"', EM_DASH].into_iter().collect(),
            intra_word_chars: ['\'', '-'].into_iter().collect(),
        }
    }
}

impl PunctuationConfig {
    pub fn new(
        marks: impl IntoIterator<Item = char>,
        intra_word_chars: impl IntoIterator<Item = char>,
    ) -> Result<Self> {
        let cfg = Self {
            marks: marks.into_iter().collect(),
            intra_word_chars: intra_word_chars.into_iter().collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.marks.intersection(&self.intra_word_chars).next() {
            return Err(Error::Config(format!(
                "{c:?} is both a punctuation mark and an intra-word character"
            )));
        }
        if let Some(c) = self
            .marks
            .iter()
            .chain(&self.intra_word_chars)
            .find(|c| c.is_whitespace() || c.is_alphanumeric())
        {
            return Err(Error::Config(format!(
                "{c:?} cannot be used as punctuation (whitespace or alphanumeric)"
            )));
        }
        Ok(())
    }

    pub fn is_mark(&self, c: char) -> bool {
        self.marks.contains(&c)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// One utterance worth of text.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub utterance_id: String,
    pub tokens: Vec<Token>,
    /// Only used for real-time-factor bookkeeping.
    pub audio_seconds: Option<f64>,
}

/// On-disk JSON form of a [`Transcript`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_seconds: Option<f64>,
}

impl Transcript {
    pub fn new(utterance_id: impl Into<String>, tokens: Vec<Token>) -> Self {
        Self {
            utterance_id: utterance_id.into(),
            tokens,
            audio_seconds: None,
        }
    }

    pub fn from_text(utterance_id: impl Into<String>, text: &str, cfg: &PunctuationConfig) -> Self {
        Self::new(utterance_id, tokenize(text, cfg))
    }

    pub fn with_audio_seconds(mut self, seconds: Option<f64>) -> Self {
        self.audio_seconds = seconds;
        self
    }

    pub fn text(&self) -> String {
        detokenize(&self.tokens)
    }

    /// True when the transcript is a valid normalized reference: no marks and
    /// no uppercase letters.
    pub fn is_normalized(&self) -> bool {
        self.tokens.iter().all(|t| t.is_word() && !t.is_cased())
    }

    pub fn from_record(record: &TranscriptRecord, cfg: &PunctuationConfig) -> Self {
        Self::from_text(record.id.clone(), &record.text, cfg).with_audio_seconds(record.audio_seconds)
    }

    pub fn to_record(&self) -> TranscriptRecord {
        TranscriptRecord {
            id: self.utterance_id.clone(),
            text: self.text(),
            audio_seconds: self.audio_seconds,
        }
    }
}

/// Projects a token sequence onto one of the four scoring views.
pub fn project(tokens: &[Token], view: ViewKind) -> Vec<Token> {
    tokens
        .iter()
        .filter(|t| view.keeps_punctuation() || t.is_word())
        .map(|t| {
            if view.keeps_case() || t.is_punct() {
                t.clone()
            } else {
                Token::word(t.surface.to_lowercase())
            }
        })
        .collect()
}

/// Drops punctuation and lowercases, keeping the id and audio length.
pub fn normalize(t: &Transcript) -> Transcript {
    Transcript {
        utterance_id: t.utterance_id.clone(),
        tokens: project(&t.tokens, ViewKind::NPNC),
        audio_seconds: t.audio_seconds,
    }
}

/// Flags sentences whose letters are all uppercase, such as chapter titles.
pub fn is_erroneous(t: &Transcript) -> bool {
    let mut letters = t
        .tokens
        .iter()
        .filter(|tok| tok.is_word())
        .flat_map(|tok| tok.surface.chars())
        .filter(|c| c.is_alphabetic())
        .peekable();
    letters.peek().is_some() && letters.all(char::is_uppercase)
}
