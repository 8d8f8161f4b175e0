use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::wilcoxon::{encode_split, wilcoxon_rank_sum};
use super::{Method, StatsError};

/// One run's answer to "which of the two partners was better at `feature`".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingRecord {
    pub agent_a: String,
    pub agent_b: String,
    pub feature: String,
    /// Name of the partner ranked first.
    pub first: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub agent_a: String,
    pub agent_b: String,
    pub feature: String,
    pub first_a: usize,
    pub first_b: usize,
    /// `"first_a:first_b"`.
    pub ratio: String,
    pub p_value: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub rows: Vec<RankingRow>,
}

/// Groups records by comparison and feature. Each run contributes +1 to
/// the partner it ranked first and -1 to the other; the p-value compares
/// the two encodings with the rank-sum test.
pub fn ranking_tables(records: &[RankingRecord]) -> Result<RankingTable, StatsError> {
    if records.is_empty() {
        return Err(StatsError::MalformedLog("no ranking runs".into()));
    }
    let mut groups: BTreeMap<(String, String, String), (usize, usize)> = BTreeMap::new();
    for r in records {
        if r.agent_a == r.agent_b {
            return Err(StatsError::MalformedLog(format!("{} is compared with itself", r.agent_a)));
        }
        let counts = groups.entry((r.agent_a.clone(), r.agent_b.clone(), r.feature.clone())).or_default();
        if r.first == r.agent_a {
            counts.0 += 1;
        } else if r.first == r.agent_b {
            counts.1 += 1;
        } else {
            return Err(StatsError::MalformedLog(format!(
                "{} ranked first in a {} vs {} comparison",
                r.first, r.agent_a, r.agent_b
            )));
        }
    }
    let mut rows = Vec::with_capacity(groups.len());
    for ((agent_a, agent_b, feature), (a, b)) in groups {
        let result = wilcoxon_rank_sum(&encode_split(a, b), &encode_split(b, a))?;
        rows.push(RankingRow {
            agent_a,
            agent_b,
            feature,
            first_a: a,
            first_b: b,
            ratio: format!("{a}:{b}"),
            p_value: result.p_value,
            method: result.method,
        });
    }
    Ok(RankingTable { rows })
}

impl RankingTable {
    /// Column-aligned text rendering.
    pub fn to_text(&self) -> String {
        let header = ["comparison", "feature", "ratio", "p"];
        let cells: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    format!("{}-{}", r.agent_a, r.agent_b),
                    r.feature.clone(),
                    r.ratio.clone(),
                    format!("{:.4}", r.p_value),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: [&str; 4]| {
            let _ = writeln!(
                out,
                "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}",
                row[0],
                row[1],
                row[2],
                row[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            );
        };
        line(&mut out, header);
        for row in &cells {
            line(&mut out, [&row[0], &row[1], &row[2], &row[3]]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn runs(a: usize, b: usize) -> Vec<RankingRecord> {
        let rec = |first: &str| RankingRecord {
            agent_a: "cnn".into(),
            agent_b: "markov".into(),
            feature: "most_fun".into(),
            first: first.into(),
        };
        (0..a).map(|_| rec("cnn")).chain((0..b).map(|_| rec("markov"))).collect()
    }

    #[test]
    fn ratio_and_accounting() {
        let table = ranking_tables(&runs(15, 13)).unwrap();
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        assert_eq!(row.ratio, "15:13");
        assert_eq!(row.first_a + row.first_b, 28);
        assert!(row.p_value > 0.05);
        assert!(table.to_text().contains("cnn-markov"));
    }

    #[test]
    fn no_runs_is_an_error() {
        assert!(matches!(ranking_tables(&[]), Err(StatsError::MalformedLog(_))));
    }

    #[test]
    fn stray_winner_is_rejected() {
        let mut r = runs(1, 1);
        r[0].first = "lstm".into();
        assert!(ranking_tables(&r).is_err());
    }
}
