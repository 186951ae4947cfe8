//! Instruction vocabulary, tokenization, templated generation, and the dataset file format.

mod dataset;
mod generate;
mod vocab;

pub use dataset::{parse_dataset, write_dataset, DatasetRecord};
pub use generate::{generate_instruction, instruction_text, turn_words};
pub use vocab::{Vocabulary, BOS, COLORS, EOS, NUMBERS, ORDINALS, PAD, UNK};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default maximum instruction length, BOS and EOS included.
pub const DEFAULT_MAX_LEN: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LanguageError {
    #[error("empty instruction text")]
    Empty,
    #[error("instruction has {len} tokens, limit is {max}")]
    TooLong { len: usize, max: usize },
    #[error("token index {0} is outside the vocabulary")]
    BadIndex(usize),
    #[error("vocabulary: {0}")]
    Vocabulary(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Token indices framed by BOS and EOS, tagged with the route it describes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub tokens: Vec<usize>,
    pub route_id: u64,
}

impl Instruction {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn validate(&self, vocab: &Vocabulary, max_len: usize) -> Result<(), LanguageError> {
        if self.tokens.is_empty() {
            return Err(LanguageError::Empty);
        }
        if self.tokens.len() > max_len {
            return Err(LanguageError::TooLong { len: self.tokens.len(), max: max_len });
        }
        match self.tokens.iter().find(|&&t| t >= vocab.len()) {
            Some(&bad) => Err(LanguageError::BadIndex(bad)),
            None => Ok(()),
        }
    }
}

fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_lowercase)
}

/// Lowercased words joined by single spaces; punctuation is dropped.
pub fn normalize(text: &str) -> String {
    words(text).collect::<Vec<_>>().join(" ")
}

pub fn tokenize(text: &str, vocab: &Vocabulary) -> Result<Instruction, LanguageError> {
    tokenize_with(text, vocab, DEFAULT_MAX_LEN)
}

/// Splits on whitespace and punctuation, maps unknown words to UNK and adds BOS/EOS.
pub fn tokenize_with(text: &str, vocab: &Vocabulary, max_len: usize) -> Result<Instruction, LanguageError> {
    let mut tokens = vec![BOS];
    tokens.extend(words(text).map(|w| vocab.index_of(&w).unwrap_or(UNK)));
    if tokens.len() == 1 {
        return Err(LanguageError::Empty);
    }
    tokens.push(EOS);
    if tokens.len() > max_len {
        return Err(LanguageError::TooLong { len: tokens.len(), max: max_len });
    }
    Ok(Instruction { tokens, route_id: 0 })
}

/// Text of the content tokens; BOS, EOS and PAD are omitted.
pub fn detokenize(instruction: &Instruction, vocab: &Vocabulary) -> Result<String, LanguageError> {
    let mut out = Vec::with_capacity(instruction.tokens.len());
    for &t in &instruction.tokens {
        if matches!(t, PAD | BOS | EOS) {
            continue;
        }
        out.push(vocab.token(t).ok_or(LanguageError::BadIndex(t))?);
    }
    Ok(out.join(" "))
}
