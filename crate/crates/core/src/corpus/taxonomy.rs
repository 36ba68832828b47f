use super::{CorpusError, Result};

pub const INDETERMINATE: &str = "Indeterminate";

/// Vessel names used as text queries for retrieval and zero-shot
/// classification, in their published order.
pub const QUERY_SET: [&str; 25] = [
    "Fishing",
    "Motorboat",
    "Port Tender",
    "Spare",
    "Trawler",
    "Diving ship",
    "Dredging",
    "Towing",
    "Search and Rescue vessel",
    "Cargo",
    "Pilot Vessel",
    "Tanker",
    "Pleasure Craft",
    "Passenger",
    "RORO",
    "Sailboat",
    "Military ship",
    "Tug",
    "Ocean liner",
    "Mussel boat",
    "Law Enforcement",
    "Anti-pollution equipment",
    "Medical Transport",
    "Natural ambient noise",
    "Sailing",
];

/// Category for an AIS ship-type code. Unlisted codes are indeterminate.
pub fn map_shiptype(code: i64) -> Result<&'static str> {
    if !(0..=255).contains(&code) {
        return Err(CorpusError::CodeOutOfRange(code));
    }
    Ok(match code {
        30 => "Fishing",
        31 | 32 => "Towing",
        33 => "Dredging",
        34 => "Diving ship",
        35 => "Military ship",
        36 => "Sailing",
        37 => "Pleasure Craft",
        50 => "Pilot Vessel",
        51 => "Search and Rescue vessel",
        52 => "Tug",
        53 => "Port Tender",
        54 => "Anti-pollution equipment",
        55 => "Law Enforcement",
        56 | 57 => "Spare",
        58 => "Medical Transport",
        60..=69 => "Passenger",
        70..=79 => "Cargo",
        80..=89 => "Tanker",
        _ => INDETERMINATE,
    })
}

/// Category names plus the text query list used at evaluation time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTaxonomy {
    queries: Vec<String>,
}

impl Default for CategoryTaxonomy {
    fn default() -> Self {
        Self {
            queries: QUERY_SET.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl CategoryTaxonomy {
    /// The published list counts 26 queries but names 25; the extra slot is
    /// filled here when a deployment needs it.
    pub fn with_extra_query(mut self, name: impl Into<String>) -> Self {
        let name = name.into();
        if !self.queries.contains(&name) {
            self.queries.push(name);
        }
        self
    }

    pub fn queries(&self) -> &[String] {
        &self.queries
    }

    pub fn query_index(&self, category: &str) -> Option<usize> {
        self.queries.iter().position(|q| q == category)
    }

    /// Categories reachable from ship-type codes, in code order.
    pub fn mapped_categories() -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for code in 0..=255 {
            let c = map_shiptype(code).expect("in range");
            if c != INDETERMINATE && !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_codes() {
        assert_eq!(map_shiptype(70).unwrap(), "Cargo");
        assert_eq!(map_shiptype(79).unwrap(), "Cargo");
        assert_eq!(map_shiptype(52).unwrap(), "Tug");
        assert_eq!(map_shiptype(84).unwrap(), "Tanker");
        assert_eq!(map_shiptype(0).unwrap(), INDETERMINATE);
        assert_eq!(map_shiptype(99).unwrap(), INDETERMINATE);
        assert_eq!(map_shiptype(255).unwrap(), INDETERMINATE);
        assert!(matches!(map_shiptype(256), Err(CorpusError::CodeOutOfRange(256))));
        assert!(map_shiptype(-1).is_err());
    }

    #[test]
    fn every_mapped_category_is_queryable() {
        let tax = CategoryTaxonomy::default();
        assert_eq!(tax.queries().len(), 25);
        let mapped = CategoryTaxonomy::mapped_categories();
        assert_eq!(mapped.len(), 18);
        for c in mapped {
            assert!(tax.query_index(c).is_some(), "{c}");
        }
    }

    #[test]
    fn extra_slot() {
        let tax = CategoryTaxonomy::default().with_extra_query("Research vessel");
        assert_eq!(tax.queries().len(), 26);
        assert_eq!(tax.clone().with_extra_query("Cargo").queries().len(), 26);
    }
}
