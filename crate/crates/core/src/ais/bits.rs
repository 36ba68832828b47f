use super::{AisError, Result};

/// Bits of an armored payload, most significant bit first per character.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitStream {
    bits: Vec<bool>,
}

impl BitStream {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    /// Unsigned field of `width` bits starting at `start`.
    pub fn uint(&self, start: usize, width: usize) -> Result<u64> {
        debug_assert!(width <= 64);
        let end = start + width;
        if end > self.bits.len() {
            return Err(AisError::TruncatedBitstream {
                needed: end,
                have: self.bits.len(),
            });
        }
        Ok(self.bits[start..end]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b)))
    }

    /// Two's-complement signed field.
    pub fn int(&self, start: usize, width: usize) -> Result<i64> {
        let raw = self.uint(start, width)?;
        let sign = 1u64 << (width - 1);
        Ok(if raw & sign != 0 {
            raw as i64 - (1i64 << width)
        } else {
            raw as i64
        })
    }

    pub fn require(&self, needed: usize) -> Result<()> {
        if self.bits.len() < needed {
            Err(AisError::TruncatedBitstream {
                needed,
                have: self.bits.len(),
            })
        } else {
            Ok(())
        }
    }
}

/// Append-only builder used by the encoders.
#[derive(Debug, Default)]
pub struct BitWriter {
    bits: Vec<bool>,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_uint(&mut self, value: u64, width: usize) -> &mut Self {
        debug_assert!(width <= 64);
        for i in (0..width).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
        self
    }

    pub fn push_zeros(&mut self, count: usize) -> &mut Self {
        self.bits.resize(self.bits.len() + count, false);
        self
    }

    pub fn push_int(&mut self, value: i64, width: usize) -> &mut Self {
        let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        self.push_uint(value as u64 & mask, width)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn finish(self) -> BitStream {
        BitStream { bits: self.bits }
    }
}

fn armor_value(ch: char, pos: usize) -> Result<u8> {
    let code = ch as u32;
    match code {
        0x30..=0x57 => Ok((code - 48) as u8),
        0x60..=0x77 => Ok((code - 56) as u8),
        _ => Err(AisError::InvalidArmorChar { ch, pos }),
    }
}

/// Strip the 6-bit ASCII armoring off a payload.
pub fn decode_sixbit(payload: &str) -> Result<BitStream> {
    if payload.is_empty() {
        return Err(AisError::EmptyPayload);
    }
    let mut writer = BitWriter::new();
    for (pos, ch) in payload.chars().enumerate() {
        let v = armor_value(ch, pos)?;
        writer.push_uint(u64::from(v), 6);
    }
    Ok(writer.finish())
}

/// Armor a bitstream; returns the payload and the number of fill bits
/// appended to reach a multiple of six.
pub fn encode_sixbit(bits: &BitStream) -> (String, u8) {
    let fill = (6 - bits.len() % 6) % 6;
    let mut out = String::with_capacity((bits.len() + fill) / 6);
    let padded = bits.as_slice().iter().copied().chain(std::iter::repeat(false).take(fill));
    let mut acc = 0u8;
    for (i, b) in padded.enumerate() {
        acc = (acc << 1) | u8::from(b);
        if i % 6 == 5 {
            let code = if acc < 40 { acc + 48 } else { acc + 56 };
            out.push(code as char);
            acc = 0;
        }
    }
    (out, fill as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_endpoints() {
        assert_eq!(decode_sixbit("0").unwrap().as_slice(), &[false; 6]);
        assert_eq!(decode_sixbit("w").unwrap().as_slice(), &[true; 6]);
        assert_eq!(decode_sixbit("W").unwrap().uint(0, 6).unwrap(), 39);
        assert_eq!(decode_sixbit("`").unwrap().uint(0, 6).unwrap(), 40);
    }

    #[test]
    fn rejects_outside_alphabet() {
        for bad in ["X", " ", ",", "x", "0_"] {
            assert!(
                matches!(decode_sixbit(bad), Err(AisError::InvalidArmorChar { .. })),
                "{bad:?} accepted"
            );
        }
        assert_eq!(decode_sixbit(""), Err(AisError::EmptyPayload));
    }

    #[test]
    fn signed_fields() {
        let mut w = BitWriter::new();
        w.push_int(-5, 8).push_int(7, 8);
        let bits = w.finish();
        assert_eq!(bits.int(0, 8).unwrap(), -5);
        assert_eq!(bits.int(8, 8).unwrap(), 7);
        assert_eq!(bits.uint(0, 8).unwrap(), 251);
    }

    #[test]
    fn every_alphabet_char_round_trips() {
        let alphabet: String = (0x30u8..=0x57).chain(0x60..=0x77).map(char::from).collect();
        let bits = decode_sixbit(&alphabet).unwrap();
        assert_eq!(bits.len(), 6 * 64);
        let (back, fill) = encode_sixbit(&bits);
        assert_eq!(fill, 0);
        assert_eq!(back, alphabet);
    }
}
