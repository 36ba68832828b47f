//! AIS payload decoding.
//!
//! Covers the subset of ITU-R M.1371 needed to label hydrophone audio:
//! class A position reports (types 1, 2, 3) and static/voyage reports
//! (type 5, for the ship-type code). Payloads arrive either bare or framed
//! in `!AIVDM` sentences.

mod anonymize;
mod bits;
mod feed;
mod nmea;
mod position;
mod record;
mod static_report;
mod timestamp;

pub use anonymize::{anonymize_mmsi, Anonymizer, MMSI_LIMIT};
pub use feed::{decode_feed, FeedOutput, RejectedLine};
pub use bits::{decode_sixbit, encode_sixbit, BitStream, BitWriter};
pub use nmea::{frame_sentence, NmeaAssembler, NmeaSentence};
pub use position::{decode_position_report, encode_position_report, PositionReport};
pub use record::{DecodedAisRecord, HEADING_UNAVAILABLE};
pub use static_report::{decode_static_report, encode_static_report, StaticReport};
pub use timestamp::{format_ais_timestamp, parse_ais_timestamp};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AisError {
    #[error("empty payload")]
    EmptyPayload,
    #[error("invalid armoring character {ch:?} at position {pos}")]
    InvalidArmorChar { ch: char, pos: usize },
    #[error("unsupported message type {0}")]
    UnsupportedMsgType(u8),
    #[error("bitstream truncated: need {needed} bits, have {have}")]
    TruncatedBitstream { needed: usize, have: usize },
    #[error("field {field} out of range: {value}")]
    FieldOutOfRange { field: &'static str, value: i64 },
    #[error("value not representable in field {field}: {value}")]
    UnrepresentableValue { field: &'static str, value: f64 },
    #[error("mmsi {0} out of range")]
    MmsiOutOfRange(u64),
    #[error("malformed timestamp {0:?}")]
    MalformedTimestamp(String),
    #[error("malformed NMEA sentence: {0}")]
    MalformedSentence(String),
    #[error("NMEA checksum mismatch: expected {expected:02X}, computed {computed:02X}")]
    ChecksumMismatch { expected: u8, computed: u8 },
}

pub type Result<T> = std::result::Result<T, AisError>;
