//! Lower-cased byte-level BPE.
//!
//! Ids 0..256 are raw bytes, then `[SOS]`, `[EOS]`, `[PAD]`, then one id per
//! learned merge in merge order.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

pub const SOS: u32 = 256;
pub const EOS: u32 = 257;
pub const PAD: u32 = 258;
const FIRST_MERGE: u32 = 259;
/// Byte alphabet plus the three specials.
pub const MIN_VOCAB: usize = FIRST_MERGE as usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BpeVocab {
    merges: Vec<(u32, u32)>,
    vocab_size: usize,
    max_len: usize,
    #[serde(skip)]
    ranks: HashMap<(u32, u32), u32>,
}

/// Split into words, each owning its leading whitespace.
fn pre_tokenize(text: &str) -> Vec<Vec<u32>> {
    let mut words = Vec::new();
    let mut current: Vec<u32> = Vec::new();
    let mut in_word = false;
    for ch in text.chars() {
        let ws = ch.is_whitespace();
        if ws && in_word {
            words.push(std::mem::take(&mut current));
            in_word = false;
        }
        if !ws {
            in_word = true;
        }
        let mut buf = [0u8; 4];
        current.extend(ch.encode_utf8(&mut buf).bytes().map(u32::from));
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

fn merge_word(word: &mut Vec<u32>, pair: (u32, u32), id: u32) {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == pair.0 && word[i + 1] == pair.1 {
            out.push(id);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    *word = out;
}

impl BpeVocab {
    /// Greedy merge learning: repeatedly merge the most frequent adjacent
    /// pair; ties go to the lexicographically smallest byte sequence pair.
    pub fn train<S: AsRef<str>>(corpus: &[S], vocab_size: usize, max_len: usize) -> Result<Self> {
        if vocab_size < MIN_VOCAB {
            return Err(ModelError::VocabTooSmall {
                requested: vocab_size,
                minimum: MIN_VOCAB,
            });
        }
        if max_len < 2 {
            return Err(ModelError::InvalidConfig("max_len must hold [SOS] and [EOS]".into()));
        }
        let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for line in corpus {
            for w in pre_tokenize(&line.as_ref().to_lowercase()) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut words: Vec<(Vec<u32>, usize)> = counts.into_iter().collect();
        let mut vocab = Self {
            merges: Vec::new(),
            vocab_size,
            max_len,
            ranks: HashMap::new(),
        };
        let mut bytes: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        bytes.extend([Vec::new(), Vec::new(), Vec::new()]);

        while MIN_VOCAB + vocab.merges.len() < vocab_size {
            let mut pair_counts: HashMap<(u32, u32), usize> = HashMap::new();
            for (w, c) in &words {
                for p in w.windows(2) {
                    *pair_counts.entry((p[0], p[1])).or_default() += c;
                }
            }
            let best = pair_counts.into_iter().max_by(|(pa, ca), (pb, cb)| {
                ca.cmp(cb).then_with(|| {
                    let ka = (&bytes[pa.0 as usize], &bytes[pa.1 as usize]);
                    let kb = (&bytes[pb.0 as usize], &bytes[pb.1 as usize]);
                    kb.cmp(&ka)
                })
            });
            let Some((pair, _)) = best else { break };
            let id = FIRST_MERGE + vocab.merges.len() as u32;
            let mut merged = bytes[pair.0 as usize].clone();
            merged.extend_from_slice(&bytes[pair.1 as usize]);
            bytes.push(merged);
            for (w, _) in &mut words {
                merge_word(w, pair, id);
            }
            vocab.ranks.insert(pair, id);
            vocab.merges.push(pair);
        }
        Ok(vocab)
    }

    /// Restore the rank table after deserialization.
    pub fn rebuild_ranks(&mut self) {
        self.ranks = self
            .merges
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, FIRST_MERGE + i as u32))
            .collect();
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// `[SOS] tokens.. [EOS]`, truncated to `max_len` with `[EOS]` kept last.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        debug_assert_eq!(self.ranks.len(), self.merges.len(), "ranks not rebuilt");
        let mut ids = vec![SOS];
        for mut word in pre_tokenize(&text.to_lowercase()) {
            loop {
                let best = word
                    .windows(2)
                    .filter_map(|p| self.ranks.get(&(p[0], p[1])).map(|&id| (id, (p[0], p[1]))))
                    .min();
                match best {
                    Some((id, pair)) => merge_word(&mut word, pair, id),
                    None => break,
                }
            }
            ids.extend(word);
        }
        ids.truncate(self.max_len - 1);
        ids.push(EOS);
        ids
    }

    fn token_bytes(&self, id: u32, out: &mut Vec<u8>) {
        match id {
            0..=255 => out.push(id as u8),
            SOS | EOS | PAD => {}
            _ => {
                if let Some(&(a, b)) = self.merges.get((id - FIRST_MERGE) as usize) {
                    self.token_bytes(a, out);
                    self.token_bytes(b, out);
                }
            }
        }
    }

    pub fn decode(&self, ids: &[u32]) -> String {
        let mut bytes = Vec::new();
        for &id in ids {
            self.token_bytes(id, &mut bytes);
        }
        String::from_utf8_lossy(&bytes).into_owned()
    }
}
