use serde::{Deserialize, Serialize};

use super::position::PositionReport;

/// Heading value meaning "not available".
pub const HEADING_UNAVAILABLE: u16 = 511;

/// One decoded position report, keyed by an anonymized vessel id.
///
/// Serialized field names follow the public record layout (`x`, `y`, `sog`,
/// `cog`, `true_heading`, `ais_timestamp`, `id`). The raw MMSI is never
/// stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedAisRecord {
    pub x: f64,
    pub y: f64,
    pub sog: f64,
    pub cog: f64,
    pub true_heading: u16,
    /// UTC epoch milliseconds.
    pub ais_timestamp: i64,
    pub id: u32,
    pub msg_type: u8,
    #[serde(default)]
    pub ship_type_code: Option<u8>,
}

impl DecodedAisRecord {
    pub fn from_report(
        report: &PositionReport,
        id: u32,
        ais_timestamp: i64,
        ship_type_code: Option<u8>,
    ) -> Self {
        Self {
            x: report.longitude(),
            y: report.latitude(),
            sog: report.sog_knots(),
            cog: report.cog_degrees(),
            true_heading: report.true_heading,
            ais_timestamp,
            id,
            msg_type: report.msg_type,
            ship_type_code,
        }
    }

    pub fn heading_available(&self) -> bool {
        self.true_heading != HEADING_UNAVAILABLE
    }
}
