//! Punctuation and case restoration backends.

use std::io::Write;
use std::process::{Command, Stdio};

use super::{detokenize, PunctuationConfig, Transcript};
use crate::{Error, Result};

/// Turns normalized text into punctuated, cased text.
pub trait Restorer: Send + Sync {
    fn restore_text(&self, text: &str) -> std::result::Result<String, String>;
}

/// Returns its input unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityRestorer;

impl Restorer for IdentityRestorer {
    fn restore_text(&self, text: &str) -> std::result::Result<String, String> {
        Ok(text.to_string())
    }
}

/// Capitalizes the first word and ends the text with a period.
#[derive(Clone, Copy, Debug, Default)]
pub struct RuleRestorer;

impl Restorer for RuleRestorer {
    fn restore_text(&self, text: &str) -> std::result::Result<String, String> {
        let trimmed = text.trim();
        let mut chars = trimmed.chars();
        match chars.next() {
            None => Ok(String::new()),
            Some(first) => Ok(format!("{}{}.", first.to_uppercase(), chars.as_str())),
        }
    }
}

/// Pipes each utterance through an external program, one line in and one
/// line out.
#[derive(Clone, Debug)]
pub struct CommandRestorer {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandRestorer {
    /// Splits a command line on whitespace; no shell quoting is applied.
    pub fn from_command_line(cmd: &str) -> Result<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::Config("empty restorer command".into()))?;
        Ok(Self {
            program,
            args: parts.collect(),
        })
    }
}

impl Restorer for CommandRestorer {
    fn restore_text(&self, text: &str) -> std::result::Result<String, String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| format!("cannot start `{}`: {e}", self.program))?;
        child
            .stdin
            .take()
            .expect("stdin is piped")
            .write_all(format!("{text}\n").as_bytes())
            .map_err(|e| e.to_string())?;
        let output = child.wait_with_output().map_err(|e| e.to_string())?;
        if !output.status.success() {
            return Err(format!(
                "`{}` exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            ));
        }
        let out = String::from_utf8(output.stdout).map_err(|e| e.to_string())?;
        Ok(out.trim_end_matches(['\n', '\r']).to_string())
    }
}

/// Produces an auto-punctuated transcript from a normalized one.
pub fn restore(t_norm: &Transcript, restorer: &dyn Restorer, cfg: &PunctuationConfig) -> Result<Transcript> {
    if !t_norm.is_normalized() {
        return Err(Error::InvalidArgument(format!(
            "utterance `{}` is not normalized",
            t_norm.utterance_id
        )));
    }
    let restored = restorer
        .restore_text(&detokenize(&t_norm.tokens))
        .map_err(|message| Error::Restore {
            id: t_norm.utterance_id.clone(),
            message,
        })?;
    Ok(Transcript {
        utterance_id: t_norm.utterance_id.clone(),
        tokens: super::tokenize(&restored, cfg),
        audio_seconds: t_norm.audio_seconds,
    })
}
