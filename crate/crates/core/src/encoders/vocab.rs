use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EncoderError;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

/// Word-level vocabulary. Ids are positions in `tokens`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    max_len: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
    max_len: usize,
}

impl TryFrom<VocabRepr> for Vocab {
    type Error = EncoderError;
    fn try_from(r: VocabRepr) -> Result<Self, Self::Error> {
        Vocab::from_tokens(r.tokens, r.max_len)
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr { tokens: v.tokens, max_len: v.max_len }
    }
}

/// A tokenized text: exactly `max_len` ids and the eos position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokens {
    pub ids: Vec<usize>,
    pub eos: usize,
}

/// Lowercase, then split on every run of characters outside `[a-z0-9]`.
pub fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

impl Vocab {
    /// Rebuild from an ordered token list whose first four entries are the reserved tokens.
    pub fn from_tokens(tokens: Vec<String>, max_len: usize) -> Result<Self, EncoderError> {
        if max_len < 2 {
            return Err(EncoderError::Invalid(format!("max_len must be >= 2, got {max_len}")));
        }
        if tokens.len() < RESERVED.len() || tokens[..4].iter().zip(RESERVED).any(|(a, b)| a != b) {
            return Err(EncoderError::Invalid("vocabulary must start with the reserved tokens".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(EncoderError::Invalid(format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocab { tokens, index, max_len })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// `[bos] words… [eos]` padded to `max_len`; words past the budget are dropped.
    pub fn tokenize(&self, text: &str) -> Tokens {
        let mut ids = Vec::with_capacity(self.max_len);
        ids.push(BOS);
        ids.extend(words(text).into_iter().take(self.max_len - 2).map(|w| self.id(&w).unwrap_or(UNK)));
        let eos = ids.len();
        ids.push(EOS);
        ids.resize(self.max_len, PAD);
        Tokens { ids, eos }
    }
}

/// Keep the `max_size − 4` most frequent words, ties broken lexicographically.
pub fn build_vocab<S: AsRef<str>>(texts: &[S], max_size: usize, max_len: usize) -> Result<Vocab, EncoderError> {
    if texts.is_empty() {
        return Err(EncoderError::EmptyCorpus);
    }
    if max_size < RESERVED.len() + 1 {
        return Err(EncoderError::Invalid(format!("max_size must be >= 5, got {max_size}")));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for t in texts {
        for w in words(t.as_ref()) {
            *counts.entry(w).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().filter(|(w, _)| !RESERVED.contains(&w.as_str())).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    tokens.extend(ranked.into_iter().take(max_size - RESERVED.len()).map(|(w, _)| w));
    Vocab::from_tokens(tokens, max_len)
}

/// Tokenize with `vocab`.
pub fn tokenize(text: &str, vocab: &Vocab) -> Tokens {
    vocab.tokenize(text)
}
