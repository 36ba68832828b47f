use std::collections::HashMap;
use std::io::BufRead;

use super::{
    decode_position_report, decode_sixbit, decode_static_report, parse_ais_timestamp, AisError,
    Anonymizer, DecodedAisRecord, NmeaAssembler, NmeaSentence, PositionReport, MMSI_LIMIT,
};

/// A line that could not be turned into a record.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedLine {
    pub line: usize,
    pub error: AisError,
}

#[derive(Debug, Default)]
pub struct FeedOutput {
    /// Time-sorted position records.
    pub records: Vec<DecodedAisRecord>,
    pub rejected: Vec<RejectedLine>,
    pub static_reports: usize,
}

/// Decode a text feed of `payload<TAB>timestamp` lines or timestamped NMEA
/// sentences (`timestamp<TAB>!AIVDM,...` or the reverse order).
///
/// Ship-type codes from type 5 reports are attached to every position
/// report of the same vessel, regardless of order in the feed.
pub fn decode_feed<R: BufRead>(reader: R, salt: &[u8]) -> std::io::Result<FeedOutput> {
    let mut out = FeedOutput::default();
    let mut assembler = NmeaAssembler::new();
    let mut positions: Vec<(PositionReport, i64)> = Vec::new();
    let mut ship_types: HashMap<u32, u8> = HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut reject = |error| out.rejected.push(RejectedLine { line: line_no, error });

        let fields: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
        let (ts_field, msg_field) = match fields.as_slice() {
            [a, b] if parse_ais_timestamp(a).is_ok() => (*a, *b),
            [a, b] => (*b, *a),
            _ => {
                reject(AisError::MalformedSentence(format!(
                    "expected two tab-separated fields, got {}",
                    fields.len()
                )));
                continue;
            }
        };
        let timestamp = match parse_ais_timestamp(ts_field) {
            Ok(t) => t,
            Err(e) => {
                reject(e);
                continue;
            }
        };
        let payload = if msg_field.contains('!') {
            match NmeaSentence::parse(msg_field) {
                Ok(sentence) => match assembler.push(sentence) {
                    Some((payload, _fill)) => payload,
                    None => continue,
                },
                Err(e) => {
                    reject(e);
                    continue;
                }
            }
        } else {
            msg_field.to_string()
        };

        let bits = match decode_sixbit(&payload) {
            Ok(b) => b,
            Err(e) => {
                reject(e);
                continue;
            }
        };
        let msg_type = bits.uint(0, 6).unwrap_or(0) as u8;
        let decoded = match msg_type {
            1..=3 => decode_position_report(&bits).map(|p| positions.push((p, timestamp))),
            5 => decode_static_report(&bits).map(|s| {
                out.static_reports += 1;
                ship_types.insert(s.mmsi, s.ship_type);
            }),
            other => Err(AisError::UnsupportedMsgType(other)),
        };
        if let Err(e) = decoded {
            reject(e);
        }
    }

    positions.retain(|(p, _)| {
        let ok = u64::from(p.mmsi) < MMSI_LIMIT;
        if !ok {
            out.rejected.push(RejectedLine {
                line: 0,
                error: AisError::MmsiOutOfRange(p.mmsi.into()),
            });
        }
        ok
    });
    let anonymizer = Anonymizer::build(positions.iter().map(|(p, _)| u64::from(p.mmsi)), salt)
        .expect("mmsi range checked above");
    positions.sort_by_key(|(_, t)| *t);
    out.records = positions
        .iter()
        .map(|(p, t)| {
            let id = anonymizer.id(p.mmsi).expect("every mmsi was anonymized");
            DecodedAisRecord::from_report(p, id, *t, ship_types.get(&p.mmsi).copied())
        })
        .collect();
    Ok(out)
}
