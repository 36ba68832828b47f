use std::collections::HashMap;

use super::{AisError, Result};

/// One `!AIVDM` / `!AIVDO` sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NmeaSentence {
    pub fragment_count: u8,
    pub fragment_number: u8,
    pub sequence_id: Option<u8>,
    pub channel: Option<char>,
    pub payload: String,
    pub fill_bits: u8,
}

impl NmeaSentence {
    pub fn parse(line: &str) -> Result<Self> {
        let bad = |why: &str| AisError::MalformedSentence(format!("{why}: {line}"));
        let line = line.trim();
        let body_start = line.find('!').ok_or_else(|| bad("missing '!'"))?;
        let line = &line[body_start..];
        let (body, checksum) = match line.split_once('*') {
            Some((b, c)) => (b, Some(c)),
            None => (line, None),
        };
        if let Some(c) = checksum {
            let expected = u8::from_str_radix(c.trim(), 16).map_err(|_| bad("bad checksum"))?;
            let computed = body[1..].bytes().fold(0u8, |acc, b| acc ^ b);
            if expected != computed {
                return Err(AisError::ChecksumMismatch { expected, computed });
            }
        }
        let fields: Vec<&str> = body.split(',').collect();
        if fields.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        if !matches!(fields[0], "!AIVDM" | "!AIVDO") {
            return Err(bad("not an AIVDM/AIVDO sentence"));
        }
        let num = |s: &str| s.parse::<u8>().map_err(|_| bad("bad numeric field"));
        let fragment_count = num(fields[1])?;
        let fragment_number = num(fields[2])?;
        if fragment_count == 0 || fragment_number == 0 || fragment_number > fragment_count {
            return Err(bad("bad fragment numbering"));
        }
        Ok(Self {
            fragment_count,
            fragment_number,
            sequence_id: if fields[3].is_empty() { None } else { Some(num(fields[3])?) },
            channel: fields[4].chars().next(),
            payload: fields[5].to_string(),
            fill_bits: if fields[6].is_empty() { 0 } else { num(fields[6])? },
        })
    }
}

/// Joins multi-fragment messages. Fragments of one message must arrive in
/// order; an out-of-order fragment drops the partial message.
#[derive(Debug, Default)]
pub struct NmeaAssembler {
    pending: HashMap<(Option<u8>, Option<char>), (u8, String)>,
}

impl NmeaAssembler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the full payload and fill-bit count once the last fragment lands.
    pub fn push(&mut self, sentence: NmeaSentence) -> Option<(String, u8)> {
        if sentence.fragment_count == 1 {
            return Some((sentence.payload, sentence.fill_bits));
        }
        let key = (sentence.sequence_id, sentence.channel);
        if sentence.fragment_number == 1 {
            self.pending.insert(key, (1, sentence.payload));
            return None;
        }
        let (seen, mut payload) = self.pending.remove(&key)?;
        if seen + 1 != sentence.fragment_number {
            return None;
        }
        payload.push_str(&sentence.payload);
        if sentence.fragment_number == sentence.fragment_count {
            Some((payload, sentence.fill_bits))
        } else {
            self.pending.insert(key, (sentence.fragment_number, payload));
            None
        }
    }
}

/// Render a single-fragment sentence with checksum.
pub fn frame_sentence(payload: &str, fill_bits: u8, channel: char) -> String {
    let body = format!("AIVDM,1,1,,{channel},{payload},{fill_bits}");
    let checksum = body.bytes().fold(0u8, |acc, b| acc ^ b);
    format!("!{body}*{checksum:02X}")
}
