//! Chi-square homogeneity tests, Krippendorff's alpha for nominal codes, and
//! the stratified sampler used to draw tweets for coding.

use std::collections::BTreeMap;
use std::io::Read;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != row_labels.len() || counts.iter().any(|r| r.len() != col_labels.len()) {
            return Err(Error::Parameter("table shape does not match its labels".into()));
        }
        Ok(ContingencyTable { row_labels, col_labels, counts })
    }

    /// Two-column table of `(label, yes, total)` rows, e.g. misinformation
    /// counts out of coded tweets per cluster.
    pub fn from_proportions(rows: &[(&str, u64, u64)]) -> Result<Self> {
        if rows.iter().any(|&(_, yes, total)| yes > total) {
            return Err(Error::Parameter("count exceeds its row total".into()));
        }
        ContingencyTable::new(
            rows.iter().map(|(l, _, _)| l.to_string()).collect(),
            vec!["yes".into(), "no".into()],
            rows.iter().map(|&(_, yes, total)| vec![yes, total - yes]).collect(),
        )
    }

    /// CSV with a header row; the first column holds row labels.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let col_labels: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut row_labels = Vec::new();
        let mut counts = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            row_labels.push(rec.get(0).unwrap_or_default().to_string());
            counts.push(
                rec.iter()
                    .skip(1)
                    .map(|f| {
                        f.trim()
                            .parse::<u64>()
                            .map_err(|_| Error::format("contingency table", format!("bad count {f:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        ContingencyTable::new(row_labels, col_labels, counts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub n: u64,
}

/// Pearson chi-square test of homogeneity (no continuity correction).
pub fn chi_square(table: &ContingencyTable) -> Result<ChiSquareResult> {
    let r = table.counts.len();
    let c = table.col_labels.len();
    if r < 2 || c < 2 {
        return Err(Error::Degenerate("need at least a 2x2 table".into()));
    }
    let row_tot: Vec<u64> = table.counts.iter().map(|row| row.iter().sum()).collect();
    let col_tot: Vec<u64> = (0..c).map(|j| table.counts.iter().map(|row| row[j]).sum()).collect();
    if row_tot.iter().chain(&col_tot).any(|&t| t == 0) {
        return Err(Error::Degenerate("table has a zero marginal".into()));
    }
    let n: u64 = row_tot.iter().sum();
    let mut statistic = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_tot[i] as f64 * col_tot[j] as f64 / n as f64;
            statistic += (obs as f64 - expected).powi(2) / expected;
        }
    }
    let df = (r - 1) * (c - 1);
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(ChiSquareResult { statistic, df, p_value: dist.sf(statistic), n })
}

pub type NominalValue = u32;

/// Coders x items nominal labels; `None` is a missing label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingMatrix {
    pub coders: Vec<String>,
    pub items: Vec<String>,
    pub values: Vec<Vec<Option<NominalValue>>>,
}

impl CodingMatrix {
    pub fn from_rows(values: Vec<Vec<Option<NominalValue>>>) -> Result<Self> {
        let items = values.first().map_or(0, Vec::len);
        if values.iter().any(|r| r.len() != items) {
            return Err(Error::Parameter("coder rows have different lengths".into()));
        }
        Ok(CodingMatrix {
            coders: (0..values.len()).map(|i| format!("coder{}", i + 1)).collect(),
            items: (0..items).map(|i| format!("item{}", i + 1)).collect(),
            values,
        })
    }

    /// CSV with a header row of item ids; the first column names the coder,
    /// blank cells are missing.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let items: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut coders = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            coders.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|f| {
                    let f = f.trim();
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse().map(Some).map_err(|_| Error::format("coding matrix", format!("bad label {f:?}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != items.len() {
                return Err(Error::format("coding matrix", "ragged row"));
            }
            values.push(row);
        }
        Ok(CodingMatrix { coders, items, values })
    }
}

/// Krippendorff's alpha at the nominal level. Items with fewer than two
/// labels carry no pairable values and are ignored.
pub fn krippendorff_alpha(matrix: &CodingMatrix) -> Result<f64> {
    let items = matrix.items.len();
    // o_cc summed over categories, and n_c per category
    let mut agreeing = 0.0;
    let mut n_c: BTreeMap<NominalValue, f64> = BTreeMap::new();
    for u in 0..items {
        let mut counts: BTreeMap<NominalValue, f64> = BTreeMap::new();
        for row in &matrix.values {
            if let Some(v) = row[u] {
                *counts.entry(v).or_insert(0.0) += 1.0;
            }
        }
        let m_u: f64 = counts.values().sum();
        if m_u < 2.0 {
            continue;
        }
        for (&c, &k) in &counts {
            agreeing += k * (k - 1.0) / (m_u - 1.0);
            *n_c.entry(c).or_insert(0.0) += k;
        }
    }
    let n: f64 = n_c.values().sum();
    if n < 2.0 {
        return Err(Error::Undefined("no pairable values".into()));
    }
    let expected_disagreement = n * n - n_c.values().map(|v| v * v).sum::<f64>();
    if expected_disagreement <= 0.0 {
        return Err(Error::Undefined("only one category is used; expected disagreement is zero".into()));
    }
    Ok(1.0 - (n - 1.0) * (n - agreeing) / expected_disagreement)
}

/// A candidate tweet for coding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCandidate {
    pub tweet_id: String,
    pub cluster: usize,
    pub community: u32,
    pub topic: String,
}

/// Draws up to `per_stratum` tweets per (cluster, topic), taking every
/// tweet when fewer exist and otherwise spreading the draw evenly over the
/// stratum's communities.
pub fn stratified_sample(candidates: &[SampleCandidate], per_stratum: usize, seed: u64) -> Vec<SampleCandidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: BTreeMap<(usize, &str), BTreeMap<u32, Vec<&SampleCandidate>>> = BTreeMap::new();
    for c in candidates {
        strata.entry((c.cluster, c.topic.as_str())).or_default().entry(c.community).or_default().push(c);
    }
    let mut out = Vec::new();
    for (_, mut by_community) in strata {
        let total: usize = by_community.values().map(Vec::len).sum();
        if total <= per_stratum {
            out.extend(by_community.values().flatten().map(|c| (*c).clone()));
            continue;
        }
        for pool in by_community.values_mut() {
            pool.sort_by(|a, b| a.tweet_id.cmp(&b.tweet_id));
            pool.shuffle(&mut rng);
        }
        let mut taken = 0;
        let mut round = 0;
        while taken < per_stratum {
            for pool in by_community.values() {
                if taken == per_stratum {
                    break;
                }
                if let Some(c) = pool.get(round) {
                    out.push((*c).clone());
                    taken += 1;
                }
            }
            round += 1;
        }
    }
    out
}
