use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::manifest::AudioTextPair;

/// Linear-interpolation quantile rules (Hyndman-Fan numbering).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantileRule {
    /// Position `(n + 1) p`; 1..=9 gives quartiles 2.5 and 7.5.
    #[default]
    Type6,
    /// Position `(n - 1) p + 1`; 1..=9 gives quartiles 3 and 7.
    Type7,
}

/// Quantile of ascending-sorted, non-empty data.
pub fn quantile(sorted: &[f64], p: f64, rule: QuantileRule) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let n = sorted.len();
    // 1-based position
    let h = match rule {
        QuantileRule::Type6 => (n as f64 + 1.0) * p,
        QuantileRule::Type7 => (n as f64 - 1.0) * p + 1.0,
    };
    if h <= 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let lo = h.floor() as usize;
    sorted[lo - 1] + (h - lo as f64) * (sorted[lo] - sorted[lo - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// Tukey fences at 1.5 IQR.
    pub fn fences(&self) -> (f64, f64) {
        (self.q1 - 1.5 * self.iqr(), self.q3 + 1.5 * self.iqr())
    }
}

pub fn five_number_summary(values: &[f64], rule: QuantileRule) -> Option<FiveNumber> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(FiveNumber {
        min: v[0],
        q1: quantile(&v, 0.25, rule),
        median: quantile(&v, 0.5, rule),
        q3: quantile(&v, 0.75, rule),
        max: v[v.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryStats {
    pub category: String,
    pub count: usize,
    pub duration_ms: i64,
    /// Dominant-frequency summary in Hz; `None` when no segment of this
    /// category had a frequency estimate.
    pub dominant_hz: Option<FiveNumber>,
    pub n_outliers: usize,
}

impl CategoryStats {
    pub fn duration_hours(&self) -> f64 {
        self.duration_ms as f64 / 3_600_000.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatsReport {
    pub categories: Vec<CategoryStats>,
    /// Categories present in the manifest with no frequency estimates.
    pub empty_summaries: Vec<String>,
}

impl StatsReport {
    pub fn total_pairs(&self) -> usize {
        self.categories.iter().map(|c| c.count).sum()
    }

    pub fn total_duration_ms(&self) -> i64 {
        self.categories.iter().map(|c| c.duration_ms).sum()
    }

    pub fn get(&self, category: &str) -> Option<&CategoryStats> {
        self.categories.iter().find(|c| c.category == category)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("category,count,duration_h,min,q1,median,q3,max,n_outliers\n");
        for c in &self.categories {
            let _ = write!(s, "{},{},{:.6}", c.category, c.count, c.duration_hours());
            match c.dominant_hz {
                Some(f) => {
                    let _ = write!(s, ",{},{},{},{},{}", f.min, f.q1, f.median, f.q3, f.max);
                }
                None => s.push_str(",,,,,"),
            }
            let _ = writeln!(s, ",{}", c.n_outliers);
        }
        s
    }
}

/// Per-category counts, durations and dominant-frequency box-plot numbers.
///
/// `dominant_hz[i]` is the estimate for `rows[i]`, if one exists.
pub fn corpus_stats(
    rows: &[AudioTextPair],
    dominant_hz: &[Option<f64>],
    rule: QuantileRule,
) -> StatsReport {
    assert_eq!(rows.len(), dominant_hz.len(), "one frequency slot per row");
    let mut grouped: BTreeMap<&str, (usize, i64, Vec<f64>)> = BTreeMap::new();
    for (row, hz) in rows.iter().zip(dominant_hz) {
        let entry = grouped.entry(&row.category).or_default();
        entry.0 += 1;
        entry.1 += row.segment.duration;
        if let Some(f) = hz {
            entry.2.push(*f);
        }
    }
    let mut report = StatsReport::default();
    for (category, (count, duration_ms, freqs)) in grouped {
        let summary = five_number_summary(&freqs, rule);
        let n_outliers = summary.map_or(0, |s| {
            let (lo, hi) = s.fences();
            freqs.iter().filter(|&&f| f < lo || f > hi).count()
        });
        if summary.is_none() {
            report.empty_summaries.push(category.to_string());
        }
        report.categories.push(CategoryStats {
            category: category.to_string(),
            count,
            duration_ms,
            dominant_hz: summary,
            n_outliers,
        });
    }
    report
}
