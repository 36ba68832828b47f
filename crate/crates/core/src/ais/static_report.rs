use super::bits::{BitStream, BitWriter};
use super::{AisError, Result};

pub const STATIC_MIN_BITS: usize = 240;
const STATIC_FULL_BITS: usize = 424;

/// The parts of a type 5 static/voyage report this pipeline keeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticReport {
    pub mmsi: u32,
    pub ship_type: u8,
    pub name: String,
}

fn sixbit_text(bits: &BitStream, start: usize, chars: usize) -> Result<String> {
    let mut s = String::with_capacity(chars);
    for i in 0..chars {
        let v = bits.uint(start + 6 * i, 6)? as u8;
        s.push(if v < 32 { (v + 64) as char } else { v as char });
    }
    Ok(s.trim_end_matches(['@', ' ']).to_string())
}

fn push_sixbit_text(w: &mut BitWriter, text: &str, chars: usize) -> Result<()> {
    let upper = text.to_ascii_uppercase();
    if upper.len() > chars {
        return Err(AisError::UnrepresentableValue {
            field: "name",
            value: upper.len() as f64,
        });
    }
    for ch in upper.bytes().chain(std::iter::repeat(b'@')).take(chars) {
        let v = match ch {
            64..=95 => ch - 64,
            32..=63 => ch,
            _ => {
                return Err(AisError::UnrepresentableValue {
                    field: "name",
                    value: f64::from(ch),
                })
            }
        };
        w.push_uint(v.into(), 6);
    }
    Ok(())
}

/// Read the ship-type code (bits 232..240) of a type 5 report.
pub fn decode_static_report(bits: &BitStream) -> Result<StaticReport> {
    let msg_type = bits.uint(0, 6)? as u8;
    if msg_type != 5 {
        return Err(AisError::UnsupportedMsgType(msg_type));
    }
    bits.require(STATIC_MIN_BITS)?;
    Ok(StaticReport {
        mmsi: bits.uint(8, 30)? as u32,
        ship_type: bits.uint(232, 8)? as u8,
        name: sixbit_text(bits, 112, 20)?,
    })
}

/// Build a full-length type 5 report with blank voyage fields.
pub fn encode_static_report(report: &StaticReport) -> Result<BitStream> {
    if u64::from(report.mmsi) >= 1 << 30 {
        return Err(AisError::UnrepresentableValue {
            field: "mmsi",
            value: f64::from(report.mmsi),
        });
    }
    let mut w = BitWriter::new();
    w.push_uint(5, 6)
        .push_uint(0, 2)
        .push_uint(report.mmsi.into(), 30)
        .push_uint(0, 2)
        .push_uint(0, 30);
    push_sixbit_text(&mut w, "", 7)?;
    push_sixbit_text(&mut w, &report.name, 20)?;
    w.push_uint(report.ship_type.into(), 8);
    w.push_zeros(STATIC_FULL_BITS - 240);
    debug_assert_eq!(w.len(), STATIC_FULL_BITS);
    Ok(w.finish())
}
