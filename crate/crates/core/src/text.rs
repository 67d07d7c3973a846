// SPDX-License-Identifier: Apache-2.0

//! Tokenization and the token vocabulary shared by the index and the scorer.
//!
//! Token ids are dense `u32`s. The low ids are reserved: the end-of-document
//! sentinel is always `0` (it must sort below every other symbol when suffixes
//! are ordered), followed by the six view delimiters and 256 byte-fallback
//! tokens. Content words start at [`FIRST_CONTENT_ID`].

use std::collections::{BTreeSet, HashMap};

pub type TokenId = u32;

pub const EOD: TokenId = 0;
pub const TITLE_START: TokenId = 1;
pub const TITLE_END: TokenId = 2;
pub const BODY_START: TokenId = 3;
pub const BODY_END: TokenId = 4;
pub const QUERY_START: TokenId = 5;
pub const QUERY_END: TokenId = 6;
const FIRST_BYTE_ID: TokenId = 7;
pub const FIRST_CONTENT_ID: TokenId = FIRST_BYTE_ID + 256;

const RESERVED_NAMES: [&str; 7] = ["<EOD>", "<TS>", "<TE>", "<BS>", "<BE>", "<QS>", "<QE>"];

/// True for the sentinel and the six view delimiters.
pub fn is_structural(id: TokenId) -> bool {
    id < FIRST_BYTE_ID
}

/// True for ids that may appear inside identifier content.
pub fn is_content(id: TokenId) -> bool {
    id >= FIRST_BYTE_ID
}

/// Splits text into normalized word tokens.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;

    /// Canonical surface form of a text under this tokenizer.
    fn normalize(&self, text: &str) -> String {
        self.tokenize(text).join(" ")
    }
}

/// Lowercased word tokenizer: alphanumeric runs are words, every other
/// non-whitespace character is a token of its own.
#[derive(Debug, Default, Clone, Copy)]
pub struct WordTokenizer;

impl Tokenizer for WordTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut word = String::new();
        for ch in text.chars() {
            if ch.is_alphanumeric() {
                word.extend(ch.to_lowercase());
                continue;
            }
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            if !ch.is_whitespace() {
                out.push(ch.to_lowercase().collect());
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
        out
    }
}

/// FNV-1a, used wherever a hash must be stable across runs and platforms.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Bijection between token strings and ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Vocabulary holding only the reserved tokens.
    pub fn reserved() -> Self {
        let mut tokens: Vec<String> = RESERVED_NAMES.iter().map(|s| s.to_string()).collect();
        tokens.extend((0..=255u8).map(|b| format!("<0x{b:02X}>")));
        Self::from_tokens(tokens).expect("reserved tokens are distinct")
    }

    /// Builds a vocabulary whose content ids follow the sorted order of `words`.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Self::reserved();
        let reserved: BTreeSet<String> = vocab.tokens.iter().cloned().collect();
        let content: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().to_string())
            .filter(|w| !w.is_empty() && !reserved.contains(w))
            .collect();
        for word in content {
            let id = vocab.tokens.len() as TokenId;
            vocab.ids.insert(word.clone(), id);
            vocab.tokens.push(word);
        }
        vocab
    }

    /// Rebuilds a vocabulary from its full token table (as stored on disk).
    pub fn from_tokens(tokens: Vec<String>) -> Option<Self> {
        if tokens.len() < FIRST_CONTENT_ID as usize {
            return None;
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i as TokenId).is_some() {
                return None;
            }
        }
        let vocab = Self { tokens, ids };
        (0..FIRST_CONTENT_ID as usize)
            .all(|i| vocab.tokens[i] == Self::reserved_name(i))
            .then_some(vocab)
    }

    fn reserved_name(i: usize) -> String {
        if i < RESERVED_NAMES.len() {
            RESERVED_NAMES[i].to_string()
        } else {
            format!("<0x{:02X}>", i - RESERVED_NAMES.len())
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Encodes already-tokenized words. Unknown words fall back to one
    /// byte token per UTF-8 byte.
    pub fn encode_words<S: AsRef<str>>(&self, words: &[S]) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(words.len());
        for w in words {
            let w = w.as_ref();
            match self.ids.get(w) {
                Some(&id) if is_content(id) => out.push(id),
                _ => out.extend(w.bytes().map(|b| FIRST_BYTE_ID + TokenId::from(b))),
            }
        }
        out
    }

    pub fn encode(&self, tokenizer: &dyn Tokenizer, text: &str) -> Vec<TokenId> {
        self.encode_words(&tokenizer.tokenize(text))
    }

    /// Joins tokens with single spaces; consecutive byte tokens are merged
    /// back into one word.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        let mut words: Vec<String> = Vec::with_capacity(ids.len());
        let mut bytes: Vec<u8> = Vec::new();
        for &id in ids {
            if (FIRST_BYTE_ID..FIRST_CONTENT_ID).contains(&id) {
                bytes.push((id - FIRST_BYTE_ID) as u8);
                continue;
            }
            if !bytes.is_empty() {
                words.push(String::from_utf8_lossy(&bytes).into_owned());
                bytes.clear();
            }
            words.push(self.token(id).unwrap_or("<?>").to_string());
        }
        if !bytes.is_empty() {
            words.push(String::from_utf8_lossy(&bytes).into_owned());
        }
        words.join(" ")
    }

    /// Stable fingerprint of the token table.
    pub fn fingerprint(&self) -> u64 {
        let mut buf = Vec::new();
        for t in &self.tokens {
            buf.extend_from_slice(&(t.len() as u32).to_le_bytes());
            buf.extend_from_slice(t.as_bytes());
        }
        stable_hash(&buf)
    }
}
