use chrono::{DateTime, NaiveDate};

use super::{AisError, Result};

const LEN: usize = "YYYYMMDDTHHMMSS.mmmZ".len();

fn digits(s: &[u8], range: std::ops::Range<usize>) -> Option<u32> {
    s[range].iter().try_fold(0u32, |acc, &c| {
        c.is_ascii_digit().then(|| acc * 10 + u32::from(c - b'0'))
    })
}

/// Parse `YYYYMMDDTHHMMSS.mmmZ` (UTC) into epoch milliseconds.
pub fn parse_ais_timestamp(s: &str) -> Result<i64> {
    let err = || AisError::MalformedTimestamp(s.to_string());
    let b = s.as_bytes();
    if b.len() != LEN || b[8] != b'T' || b[15] != b'.' || b[19] != b'Z' {
        return Err(err());
    }
    let year = digits(b, 0..4).ok_or_else(err)?;
    let month = digits(b, 4..6).ok_or_else(err)?;
    let day = digits(b, 6..8).ok_or_else(err)?;
    let hour = digits(b, 9..11).ok_or_else(err)?;
    let minute = digits(b, 11..13).ok_or_else(err)?;
    let second = digits(b, 13..15).ok_or_else(err)?;
    let millis = digits(b, 16..19).ok_or_else(err)?;
    let dt = NaiveDate::from_ymd_opt(year as i32, month, day)
        .and_then(|d| d.and_hms_milli_opt(hour, minute, second, millis))
        .ok_or_else(err)?;
    Ok(dt.and_utc().timestamp_millis())
}

pub fn format_ais_timestamp(epoch_ms: i64) -> String {
    match DateTime::from_timestamp_millis(epoch_ms) {
        Some(dt) => dt.format("%Y%m%dT%H%M%S%.3fZ").to_string(),
        None => epoch_ms.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_origin() {
        assert_eq!(parse_ais_timestamp("19700101T000000.000Z").unwrap(), 0);
    }

    #[test]
    fn rejects_malformed() {
        for s in [
            "2020-07-15",
            "20200715 000000.036Z",
            "20200715T000000.036",
            "20200715T000000.0a6Z",
            "20201315T000000.036Z",
            "20200715T000000.036 Z",
        ] {
            assert!(parse_ais_timestamp(s).is_err(), "{s}");
        }
    }

    #[test]
    fn format_round_trips() {
        let ms = parse_ais_timestamp("20200715T000000.036Z").unwrap();
        assert_eq!(format_ais_timestamp(ms), "20200715T000000.036Z");
    }
}
