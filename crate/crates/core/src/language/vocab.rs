use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::LanguageError;
use crate::world::LandmarkKind;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;

const SPECIALS: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

pub const ORDINALS: [&str; 10] =
    ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth"];

pub const NUMBERS: [&str; 20] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve", "thirteen",
    "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
];

pub const COLORS: [&str; 8] = ["red", "black", "green", "blue", "yellow", "white", "gray", "brown"];

const WORDS: &[&str] = &[
    "a", "after", "ahead", "along", "and", "are", "at", "avenue", "be", "before", "beside", "block", "blocks",
    "by", "can", "continue", "corner", "crossing", "destination", "down", "end", "final", "for", "forward", "go",
    "going", "head", "here", "intersection", "is", "it", "just", "keep", "last", "left", "make", "near", "next",
    "of", "on", "once", "onward", "past", "proceed", "reach", "right", "road", "see", "should", "spot", "start",
    "stop", "straight", "street", "take", "that", "the", "then", "there", "this", "through", "to", "turn", "until",
    "up", "walk", "walking", "when", "where", "will", "with", "you", "your",
];

/// Token ↔ index bijection with reserved indices 0..=3 for PAD, UNK, BOS, EOS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// The fixed vocabulary of the instruction templates.
    pub fn standard() -> Self {
        let mut words: Vec<&str> = WORDS.to_vec();
        words.extend(ORDINALS);
        words.extend(NUMBERS);
        words.extend(COLORS);
        words.extend(LandmarkKind::ALL.iter().map(|k| k.name()));
        words.sort_unstable();
        words.dedup();
        Self::from_tokens(SPECIALS.iter().chain(words.iter()).map(|s| s.to_string()).collect())
            .expect("standard vocabulary is a bijection")
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, LanguageError> {
        if tokens.len() < SPECIALS.len() || tokens[..4].iter().zip(SPECIALS).any(|(a, b)| a != b) {
            return Err(LanguageError::Vocabulary("reserved tokens must occupy indices 0..=3".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(LanguageError::Vocabulary(format!("duplicate token `{t}`")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        if self.index.is_empty() {
            return self.tokens.iter().position(|t| t == token);
        }
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}
