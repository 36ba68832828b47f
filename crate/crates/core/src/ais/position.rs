use super::bits::{BitStream, BitWriter};
use super::{AisError, Result};

/// Minimum length of a type 1/2/3 report that still carries the heading.
pub const POSITION_MIN_BITS: usize = 144;
const POSITION_FULL_BITS: usize = 168;

const LON_RAW_LIMIT: i64 = 180 * 600_000;
const LAT_RAW_LIMIT: i64 = 90 * 600_000;
const SOG_RAW_MAX: u16 = 1022;
const COG_RAW_MAX: u16 = 3599;

/// Class A position report with every field kept at its wire resolution.
///
/// Longitude and latitude are in 1/10000 minute, speed in 0.1 kn and
/// course in 0.1 degree, exactly as transmitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositionReport {
    pub msg_type: u8,
    pub repeat: u8,
    pub mmsi: u32,
    pub nav_status: u8,
    pub rate_of_turn: i8,
    pub sog_raw: u16,
    pub position_accuracy: bool,
    pub lon_raw: i32,
    pub lat_raw: i32,
    pub cog_raw: u16,
    pub true_heading: u16,
    pub utc_second: u8,
}

impl PositionReport {
    pub fn longitude(&self) -> f64 {
        f64::from(self.lon_raw) / 600_000.0
    }

    pub fn latitude(&self) -> f64 {
        f64::from(self.lat_raw) / 600_000.0
    }

    pub fn sog_knots(&self) -> f64 {
        f64::from(self.sog_raw) / 10.0
    }

    pub fn cog_degrees(&self) -> f64 {
        f64::from(self.cog_raw) / 10.0
    }

    /// Range checks shared by the decoder and the encoder.
    fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.msg_type) {
            return Err(AisError::UnsupportedMsgType(self.msg_type));
        }
        if i64::from(self.lon_raw).abs() > LON_RAW_LIMIT {
            return Err(AisError::FieldOutOfRange {
                field: "lon",
                value: self.lon_raw.into(),
            });
        }
        if i64::from(self.lat_raw).abs() > LAT_RAW_LIMIT {
            return Err(AisError::FieldOutOfRange {
                field: "lat",
                value: self.lat_raw.into(),
            });
        }
        if self.sog_raw > SOG_RAW_MAX {
            return Err(AisError::FieldOutOfRange {
                field: "sog",
                value: self.sog_raw.into(),
            });
        }
        if self.cog_raw > COG_RAW_MAX {
            return Err(AisError::FieldOutOfRange {
                field: "cog",
                value: self.cog_raw.into(),
            });
        }
        if self.true_heading > 359 && self.true_heading != super::HEADING_UNAVAILABLE {
            return Err(AisError::FieldOutOfRange {
                field: "true_heading",
                value: self.true_heading.into(),
            });
        }
        Ok(())
    }
}

/// Extract a type 1/2/3 report. Fields past bit 144 are optional.
pub fn decode_position_report(bits: &BitStream) -> Result<PositionReport> {
    let msg_type = bits.uint(0, 6)? as u8;
    if !(1..=3).contains(&msg_type) {
        return Err(AisError::UnsupportedMsgType(msg_type));
    }
    bits.require(POSITION_MIN_BITS)?;
    let report = PositionReport {
        msg_type,
        repeat: bits.uint(6, 2)? as u8,
        mmsi: bits.uint(8, 30)? as u32,
        nav_status: bits.uint(38, 4)? as u8,
        rate_of_turn: bits.int(42, 8)? as i8,
        sog_raw: bits.uint(50, 10)? as u16,
        position_accuracy: bits.uint(60, 1)? == 1,
        lon_raw: bits.int(61, 28)? as i32,
        lat_raw: bits.int(89, 27)? as i32,
        cog_raw: bits.uint(116, 12)? as u16,
        true_heading: bits.uint(128, 9)? as u16,
        utc_second: bits.uint(137, 6)? as u8,
    };
    report.validate()?;
    Ok(report)
}

/// Inverse of [`decode_position_report`]; produces the full 168-bit layout
/// with zeroed maneuver, RAIM and radio fields.
pub fn encode_position_report(report: &PositionReport) -> Result<BitStream> {
    if report.sog_raw > SOG_RAW_MAX {
        return Err(AisError::UnrepresentableValue {
            field: "sog",
            value: report.sog_knots(),
        });
    }
    if u64::from(report.mmsi) >= 1 << 30 {
        return Err(AisError::UnrepresentableValue {
            field: "mmsi",
            value: f64::from(report.mmsi),
        });
    }
    if report.repeat > 3 || report.nav_status > 15 || report.utc_second > 63 {
        return Err(AisError::UnrepresentableValue {
            field: "header",
            value: f64::from(report.repeat.max(report.nav_status).max(report.utc_second)),
        });
    }
    report.validate().map_err(|e| match e {
        AisError::FieldOutOfRange { field, value } => AisError::UnrepresentableValue {
            field,
            value: value as f64,
        },
        other => other,
    })?;

    let mut w = BitWriter::new();
    w.push_uint(report.msg_type.into(), 6)
        .push_uint(report.repeat.into(), 2)
        .push_uint(report.mmsi.into(), 30)
        .push_uint(report.nav_status.into(), 4)
        .push_int(report.rate_of_turn.into(), 8)
        .push_uint(report.sog_raw.into(), 10)
        .push_uint(report.position_accuracy.into(), 1)
        .push_int(report.lon_raw.into(), 28)
        .push_int(report.lat_raw.into(), 27)
        .push_uint(report.cog_raw.into(), 12)
        .push_uint(report.true_heading.into(), 9)
        .push_uint(report.utc_second.into(), 6)
        .push_zeros(POSITION_FULL_BITS - 143);
    debug_assert_eq!(w.len(), POSITION_FULL_BITS);
    Ok(w.finish())
}
