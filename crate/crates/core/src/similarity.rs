//! Community-day trigram documents, inter-cluster cosine similarity, burst
//! scores against the running history, and a Dickey-Fuller check of the
//! stationarity that the burst score assumes.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::sync::OnceLock;

use chrono::NaiveDate;

use crate::community::CommunityLabel;
use crate::domains::ClusterAssignment;
use crate::error::{Error, Result};
use crate::ingest::{TokenDoc, TrigramCounts};
use crate::sentinel::Window;

pub const DEFAULT_MIN_HISTORY: usize = 7;
pub const DEFAULT_BURST_THRESHOLD: f64 = 2.0;
/// Standard deviations at or below this leave the burst score undefined.
pub const SD_EPSILON: f64 = 1e-12;

/// All topical tweets of one community on one day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityDayDoc {
    pub community: CommunityLabel,
    pub day: NaiveDate,
    pub trigrams: TrigramCounts,
    pub tweet_ids: Vec<String>,
}

impl CommunityDayDoc {
    pub fn new(community: CommunityLabel, day: NaiveDate) -> Self {
        CommunityDayDoc { community, day, trigrams: TrigramCounts::new(), tweet_ids: Vec::new() }
    }

    /// Adds one tweet's trigrams; trigrams never span two tweets.
    pub fn add(&mut self, tweet_id: &str, doc: &TokenDoc) {
        for (t, &c) in &doc.trigram_counts {
            *self.trigrams.entry(t.clone()).or_insert(0) += c;
        }
        self.tweet_ids.push(tweet_id.to_string());
    }

    pub fn from_tweets<'a, I>(community: CommunityLabel, day: NaiveDate, tweets: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a TokenDoc)>,
    {
        let mut doc = CommunityDayDoc::new(community, day);
        for (id, t) in tweets {
            doc.add(id, t);
        }
        doc
    }
}

/// One tweet of a community on a day, already cleaned.
#[derive(Debug, Clone, PartialEq)]
pub struct DayTweet {
    pub tweet_id: String,
    pub community: CommunityLabel,
    pub day: NaiveDate,
    pub doc: TokenDoc,
}

/// Groups cleaned tweets into per-(day, community) documents.
pub fn community_day_docs(tweets: &[DayTweet]) -> BTreeMap<(NaiveDate, CommunityLabel), CommunityDayDoc> {
    let mut docs: BTreeMap<(NaiveDate, CommunityLabel), CommunityDayDoc> = BTreeMap::new();
    for t in tweets {
        docs.entry((t.day, t.community))
            .or_insert_with(|| CommunityDayDoc::new(t.community, t.day))
            .add(&t.tweet_id, &t.doc);
    }
    docs
}

fn norm(v: &TrigramCounts) -> f64 {
    v.values().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt()
}

/// Cosine similarity of two trigram count vectors. Zero vectors are invalid.
pub fn cosine_similarity(u: &TrigramCounts, v: &TrigramCounts) -> Result<f64> {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::InvalidDocument("empty trigram vector".into()));
    }
    let (small, large) = if u.len() <= v.len() { (u, v) } else { (v, u) };
    // common keys are visited in ascending order either way, so the sum is symmetric
    let dot: f64 = small.iter().filter_map(|(t, &a)| large.get(t).map(|&b| a as f64 * b as f64)).sum();
    Ok((dot / (nu * nv)).clamp(0.0, 1.0))
}

/// Mean cosine similarity over all cross-cluster community pairs with valid
/// documents; `None` when no pair is valid.
pub fn intercluster_similarity(docs_a: &[&CommunityDayDoc], docs_b: &[&CommunityDayDoc]) -> Option<f64> {
    let mut sims: Vec<f64> = docs_a
        .iter()
        .flat_map(|a| docs_b.iter().filter_map(move |b| cosine_similarity(&a.trigrams, &b.trigrams).ok()))
        .collect();
    if sims.is_empty() {
        return None;
    }
    sims.sort_by(f64::total_cmp);
    Some(sims.iter().sum::<f64>() / sims.len() as f64)
}

/// Daily similarity between two clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilaritySeries {
    pub pair: (usize, usize),
    pub days: Vec<NaiveDate>,
    /// `None` marks a day without any valid community pair.
    pub values: Vec<Option<f64>>,
}

impl SimilaritySeries {
    pub fn position(&self, day: NaiveDate) -> Option<usize> {
        self.days.iter().position(|&d| d == day)
    }

    pub fn valid_values(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}

/// Similarity series for every unordered cluster pair over the window.
pub fn similarity_series(
    docs: &BTreeMap<(NaiveDate, CommunityLabel), CommunityDayDoc>,
    clusters: &ClusterAssignment,
    window: Window,
) -> Vec<SimilaritySeries> {
    let k = clusters.cluster_count();
    let members: Vec<Vec<CommunityLabel>> = (0..k).map(|c| clusters.members(c)).collect();
    let mut out = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let mut series = SimilaritySeries { pair: (a, b), days: Vec::new(), values: Vec::new() };
            for day in window.days() {
                let pick = |labels: &[CommunityLabel]| -> Vec<&CommunityDayDoc> {
                    labels.iter().filter_map(|&l| docs.get(&(day, l))).collect()
                };
                series.days.push(day);
                series.values.push(intercluster_similarity(&pick(&members[a]), &pick(&members[b])));
            }
            out.push(series);
        }
    }
    out
}

/// Mean and population standard deviation.
fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Burst score of a value against a history of earlier valid values.
pub fn burst_from_history(value: f64, history: &[f64], min_history: usize) -> Option<f64> {
    if history.len() < min_history.max(1) {
        return None;
    }
    let (mean, sd) = mean_sd(history);
    (sd > SD_EPSILON).then(|| (value - mean) / sd)
}

/// `H(t) = (s_t - mean_{tau<t} s_tau) / SD_{tau<t} s_tau` over valid earlier
/// days (population SD). Undefined for invalid days, short histories and
/// flat histories.
pub fn burst_score(series: &SimilaritySeries, t: usize, min_history: usize) -> Option<f64> {
    let value = (*series.values.get(t)?)?;
    let history: Vec<f64> = series.values[..t].iter().flatten().copied().collect();
    burst_from_history(value, &history, min_history)
}

pub fn burst_scores(series: &SimilaritySeries, min_history: usize) -> Vec<Option<f64>> {
    (0..series.values.len()).map(|t| burst_score(series, t, min_history)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlagRule {
    pub threshold: f64,
    /// `H >= threshold` when true, `H > threshold` otherwise.
    pub inclusive: bool,
}

impl Default for FlagRule {
    fn default() -> Self {
        FlagRule { threshold: DEFAULT_BURST_THRESHOLD, inclusive: true }
    }
}

impl FlagRule {
    pub fn flags(&self, h: f64) -> bool {
        if self.inclusive {
            h >= self.threshold
        } else {
            h > self.threshold
        }
    }
}

/// Days whose burst score is defined and meets the rule.
pub fn flag_days(series: &SimilaritySeries, scores: &[Option<f64>], rule: FlagRule) -> Vec<NaiveDate> {
    series.days.iter().zip(scores).filter(|(_, h)| h.is_some_and(|h| rule.flags(h))).map(|(&d, _)| d).collect()
}

pub fn pair_name(pair: (usize, usize)) -> String {
    format!("{}-{}", pair.0, pair.1)
}

fn parse_pair(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once('-')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

/// `day,pair,s,valid,H,flagged` rows, pair by pair.
pub fn write_series_csv<W: Write>(
    series: &[SimilaritySeries],
    min_history: usize,
    rule: FlagRule,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day", "pair", "s", "valid", "H", "flagged"])?;
    for s in series {
        let scores = burst_scores(s, min_history);
        for ((day, value), h) in s.days.iter().zip(&s.values).zip(&scores) {
            w.write_record([
                day.to_string(),
                pair_name(s.pair),
                value.map(|v| v.to_string()).unwrap_or_default(),
                value.is_some().to_string(),
                h.map(|h| h.to_string()).unwrap_or_default(),
                h.is_some_and(|h| rule.flags(h)).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the similarity columns back; burst columns are recomputed by callers.
pub fn read_series_csv<R: Read>(input: R) -> Result<Vec<SimilaritySeries>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out: Vec<SimilaritySeries> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || Error::format("similarity series", format!("bad row {:?}", rec.iter().collect::<Vec<_>>()));
        let day: NaiveDate = rec.get(0).and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let pair = rec.get(1).and_then(parse_pair).ok_or_else(bad)?;
        let valid: bool = rec.get(3).and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let value = if valid { Some(rec.get(2).and_then(|f| f.parse().ok()).ok_or_else(bad)?) } else { None };
        match out.last_mut() {
            Some(s) if s.pair == pair => {
                s.days.push(day);
                s.values.push(value);
            }
            _ => out.push(SimilaritySeries { pair, days: vec![day], values: vec![value] }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignificanceLevel {
    One,
    Five,
    Ten,
}

impl SignificanceLevel {
    fn column(self) -> usize {
        match self {
            SignificanceLevel::One => 0,
            SignificanceLevel::Five => 1,
            SignificanceLevel::Ten => 2,
        }
    }
}

impl fmt::Display for SignificanceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignificanceLevel::One => "1%",
            SignificanceLevel::Five => "5%",
            SignificanceLevel::Ten => "10%",
        })
    }
}

struct CriticalTable {
    // (nobs, None for the asymptotic row) -> [1%, 5%, 10%]
    rows: Vec<(Option<f64>, [f64; 3])>,
}

fn critical_table() -> &'static CriticalTable {
    static TABLE: OnceLock<CriticalTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let text = include_str!("../data/df_critical_values.csv");
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                let n = (f[0] != "inf").then(|| f[0].parse::<f64>().expect("table size"));
                let v = |i: usize| f[i].parse::<f64>().expect("table value");
                (n, [v(1), v(2), v(3)])
            })
            .collect();
        CriticalTable { rows }
    })
}

/// Constant-only Dickey-Fuller critical value, linearly interpolated in the
/// number of regression observations (in `1/n` towards the asymptotic row).
pub fn df_critical_value(nobs: usize, level: SignificanceLevel) -> f64 {
    let col = level.column();
    let rows = &critical_table().rows;
    let n = nobs as f64;
    let finite: Vec<(f64, f64)> = rows.iter().filter_map(|(s, v)| s.map(|s| (s, v[col]))).collect();
    let asymptotic = rows.iter().find(|(s, _)| s.is_none()).map(|(_, v)| v[col]);
    let (first, last) = (finite[0], finite[finite.len() - 1]);
    if n <= first.0 {
        return first.1;
    }
    for w in finite.windows(2) {
        let ((n0, c0), (n1, c1)) = (w[0], w[1]);
        if n <= n1 {
            return c0 + (c1 - c0) * (n - n0) / (n1 - n0);
        }
    }
    match asymptotic {
        Some(c_inf) => c_inf + (last.1 - c_inf) * last.0 / n,
        None => last.1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdfResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub level: SignificanceLevel,
    pub nobs: usize,
    /// Unit-root null rejected, i.e. the series looks stationary.
    pub reject_unit_root: bool,
}

impl fmt::Display for AdfResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ADF (constant, 0 lags): statistic={:.4} nobs={} critical({})={:.4} verdict={}",
            self.statistic,
            self.nobs,
            self.level,
            self.critical_value,
            if self.reject_unit_root { "reject unit root (stationary)" } else { "cannot reject unit root" }
        )
    }
}

/// Dickey-Fuller test with a constant and no lagged differences: regress
/// `y_t - y_{t-1}` on `1, y_{t-1}` and take the t-ratio of the slope.
pub fn adf_test(series: &[f64], level: SignificanceLevel) -> Result<AdfResult> {
    if series.len() < 10 {
        return Err(Error::Parameter(format!("series of length {} is shorter than 10", series.len())));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("series contains non-finite values".into()));
    }
    let x = &series[..series.len() - 1];
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let n = dy.len() as f64;
    let x_mean = x.iter().sum::<f64>() / n;
    let dy_mean = dy.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - x_mean).powi(2)).sum();
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    if sxx <= 1e-24 * scale * scale * n {
        return Err(Error::Undefined("constant series; regression is degenerate".into()));
    }
    let sxy: f64 = x.iter().zip(&dy).map(|(a, b)| (a - x_mean) * (b - dy_mean)).sum();
    let slope = sxy / sxx;
    let intercept = dy_mean - slope * x_mean;
    let rss: f64 = x.iter().zip(&dy).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = (rss / (n - 2.0) / sxx).sqrt();
    // an exact fit has zero standard error; the ratio is then 0 or unbounded
    let statistic = if se > 0.0 {
        slope / se
    } else if slope == 0.0 {
        0.0
    } else {
        slope.signum() * f64::INFINITY
    };
    let nobs = dy.len();
    let critical_value = df_critical_value(nobs, level);
    Ok(AdfResult { statistic, critical_value, level, nobs, reject_unit_root: statistic < critical_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Trigram;

    fn vec_of(pairs: &[(&str, u32)]) -> TrigramCounts {
        pairs.iter().map(|&(k, c)| (Trigram::from_tokens(k, "x", "y"), c)).collect()
    }

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 7, d).unwrap()
    }

    fn doc(community: CommunityLabel, v: TrigramCounts) -> CommunityDayDoc {
        CommunityDayDoc { community, day: day(1), trigrams: v, tweet_ids: vec![] }
    }

    #[test]
    fn cosine_examples() {
        let u = vec_of(&[("a", 2), ("b", 5)]);
        assert!((cosine_similarity(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&vec_of(&[("a", 1)]), &vec_of(&[("b", 1)])).unwrap(), 0.0);
        let half = cosine_similarity(&vec_of(&[("a", 1), ("b", 1)]), &vec_of(&[("a", 1), ("c", 1)])).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
        assert!(matches!(cosine_similarity(&TrigramCounts::new(), &u), Err(Error::InvalidDocument(_))));
    }

    #[test]
    fn intercluster_examples() {
        let x = doc(0, vec_of(&[("a", 1)]));
        let y = doc(1, vec_of(&[("b", 1)]));
        assert_eq!(intercluster_similarity(&[&x], &[&x.clone()]), Some(1.0));
        // sims {1, 0, 0, 1}
        assert_eq!(intercluster_similarity(&[&x, &y], &[&x, &y]), Some(0.5));
        let empty = doc(2, TrigramCounts::new());
        // valid pairs: (x,x)=1 and (y,x)=0
        assert_eq!(intercluster_similarity(&[&x, &y], &[&x, &empty]), Some(0.5));
        assert_eq!(intercluster_similarity(&[&empty], &[&x]), None);
    }

    fn series(values: &[Option<f64>]) -> SimilaritySeries {
        SimilaritySeries { pair: (0, 1), days: (1..=values.len() as u32).map(day).collect(), values: values.to_vec() }
    }

    #[test]
    fn burst_at_mean_is_zero() {
        let s = series(&[Some(0.1), Some(0.3), Some(0.2)]);
        assert_eq!(burst_score(&s, 2, 2), Some(0.0));
    }

    #[test]
    fn burst_direct_oracle() {
        let s = series(&[Some(0.1), Some(0.1), Some(0.1), Some(0.3), Some(0.45)]);
        // mean 0.15, population sd sqrt(0.0075)
        let expect = (0.45 - 0.15) / 0.0075f64.sqrt();
        assert!((burst_score(&s, 4, 4).unwrap() - expect).abs() < 1e-12);
        assert_eq!(burst_score(&s, 4, 5), None);
    }

    #[test]
    fn burst_undefined_cases() {
        let flat = series(&[Some(0.2); 9]);
        assert_eq!(burst_score(&flat, 8, 7), None);
        let gaps = series(&[Some(0.1), None, Some(0.3), None, Some(0.5)]);
        assert_eq!(burst_score(&gaps, 3, 1), None);
        // invalid days are skipped, not imputed
        assert!((burst_score(&gaps, 4, 2).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn flag_rule() {
        let s = series(&[Some(0.0), Some(0.0), Some(0.0)]);
        let h = [None, Some(2.0), Some(1.99)];
        assert_eq!(flag_days(&s, &h, FlagRule::default()), [day(2)]);
        let strict = FlagRule { inclusive: false, ..FlagRule::default() };
        assert!(flag_days(&s, &h, strict).is_empty());
        assert!(flag_days(&s, &[Some(1.0), Some(-3.0), None], FlagRule::default()).is_empty());
    }

    #[test]
    fn series_csv_round_trip() {
        let s = vec![
            series(&[Some(0.125), None, Some(0.5)]),
            SimilaritySeries { pair: (1, 2), ..series(&[Some(0.0), Some(1.0), Some(0.25)]) },
        ];
        let mut buf = Vec::new();
        write_series_csv(&s, 1, FlagRule::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "day,pair,s,valid,H,flagged\n2020-07-01,0-1,0.125,true,,false\n2020-07-02,0-1,,false,,false\n"
        ));
        assert_eq!(read_series_csv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn critical_values() {
        assert_eq!(df_critical_value(10, SignificanceLevel::Five), -3.00);
        assert_eq!(df_critical_value(100, SignificanceLevel::Five), -2.89);
        assert!((df_critical_value(75, SignificanceLevel::Five) - (-2.91)).abs() < 1e-12);
        assert!((df_critical_value(1000, SignificanceLevel::One) - (-3.435)).abs() < 1e-12);
    }

    #[test]
    fn adf_edge_cases() {
        assert!(matches!(adf_test(&[1.0; 20], SignificanceLevel::Five), Err(Error::Undefined(_))));
        assert!(adf_test(&[1.0; 5], SignificanceLevel::Five).is_err());
        let trend: Vec<f64> = (0..180).map(|t| t as f64).collect();
        let r = adf_test(&trend, SignificanceLevel::Five).unwrap();
        assert!(r.statistic.is_finite());
        assert!(!r.reject_unit_root);
        let alternating: Vec<f64> = (0..40).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = adf_test(&alternating, SignificanceLevel::One).unwrap();
        assert!(r.reject_unit_root);
        assert!(r.to_string().contains("reject unit root"));
    }
}
