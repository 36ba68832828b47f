use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::taxonomy::INDETERMINATE;
use super::{CorpusError, Result};
use crate::ais::{DecodedAisRecord, HEADING_UNAVAILABLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Coarse,
    Fine,
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "coarse" => Ok(Self::Coarse),
            "fine" => Ok(Self::Fine),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}

/// Coarse captions are the bare category name. Fine captions add position,
/// heading and speed in a fixed template that [`parse_fine_caption`] inverts.
pub fn render_caption(
    record: &DecodedAisRecord,
    category: &str,
    granularity: Granularity,
) -> Result<String> {
    if category == INDETERMINATE {
        return Err(CorpusError::IndeterminateCategory);
    }
    Ok(match granularity {
        Granularity::Coarse => category.to_string(),
        Granularity::Fine => {
            let heading = if record.true_heading == HEADING_UNAVAILABLE {
                "heading unavailable".to_string()
            } else {
                format!("heading {} degrees", record.true_heading)
            };
            format!(
                "A {category} vessel at longitude {:.4}, latitude {:.4}, {heading}, speed {:.1} knots.",
                record.x, record.y, record.sog
            )
        }
    })
}

/// Fields recovered from a fine caption, at caption resolution
/// (1e-4 degree, 0.1 knot).
#[derive(Debug, Clone, PartialEq)]
pub struct FineCaption {
    pub category: String,
    pub x: f64,
    pub y: f64,
    pub true_heading: u16,
    pub sog: f64,
}

fn fine_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^A (.+) vessel at longitude (-?\d+\.\d{4}), latitude (-?\d+\.\d{4}), (?:heading (\d+) degrees|(heading unavailable)), speed (\d+\.\d) knots\.$",
        )
        .expect("valid regex")
    })
}

pub fn parse_fine_caption(caption: &str) -> Result<FineCaption> {
    let bad = || CorpusError::UnparseableCaption(caption.to_string());
    let caps = fine_pattern().captures(caption).ok_or_else(bad)?;
    let num = |i: usize| caps[i].parse::<f64>().map_err(|_| bad());
    let true_heading = match caps.get(4) {
        Some(h) => h.as_str().parse::<u16>().map_err(|_| bad())?,
        None => HEADING_UNAVAILABLE,
    };
    Ok(FineCaption {
        category: caps[1].to_string(),
        x: num(2)?,
        y: num(3)?,
        true_heading,
        sog: num(6)?,
    })
}
