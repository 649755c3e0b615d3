//! Sentinel selection per community and the active-account ledger used to
//! normalize tweet rates for account attrition.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use chrono::{DateTime, NaiveDate, Utc};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::community::{CommunityLabel, Partition};
use crate::error::{Error, Result};
use crate::graph::RetweetGraph;
use crate::ingest::TweetRecord;

pub const DEFAULT_SENTINELS_PER_COMMUNITY: usize = 15;
pub const DEFAULT_TOP_COMMUNITIES: usize = 50;

/// Decides whether a candidate community is kept (language / locale screen).
pub trait CommunityFilter {
    fn keep(&self, label: CommunityLabel, members: &BTreeSet<String>) -> bool;
}

impl<F> CommunityFilter for F
where
    F: Fn(CommunityLabel, &BTreeSet<String>) -> bool,
{
    fn keep(&self, label: CommunityLabel, members: &BTreeSet<String>) -> bool {
        self(label, members)
    }
}

pub struct AcceptAll;

impl CommunityFilter for AcceptAll {
    fn keep(&self, _: CommunityLabel, _: &BTreeSet<String>) -> bool {
        true
    }
}

/// Stand-in language screen. A tweet counts as English when at least
/// `threshold` of its letters are ASCII; a community is kept when at least
/// `threshold` of a seeded sample of its members' tweets count as English.
/// Communities without any observed text are kept.
pub struct AsciiLanguageFilter {
    texts: HashMap<String, Vec<String>>,
    pub sample_size: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl AsciiLanguageFilter {
    pub fn from_records(records: &[TweetRecord], seed: u64) -> Self {
        let mut texts: HashMap<String, Vec<String>> = HashMap::new();
        for r in records {
            texts.entry(r.author_id.clone()).or_default().push(r.text.clone());
        }
        AsciiLanguageFilter { texts, sample_size: 100, threshold: 0.8, seed }
    }

    fn looks_english(&self, text: &str) -> bool {
        let letters: Vec<char> = text.chars().filter(|c| c.is_alphabetic()).collect();
        if letters.is_empty() {
            return true;
        }
        let ascii = letters.iter().filter(|c| c.is_ascii()).count();
        ascii as f64 / letters.len() as f64 >= self.threshold
    }
}

impl CommunityFilter for AsciiLanguageFilter {
    fn keep(&self, label: CommunityLabel, members: &BTreeSet<String>) -> bool {
        let pool: Vec<&str> = members.iter().filter_map(|m| self.texts.get(m)).flatten().map(String::as_str).collect();
        if pool.is_empty() {
            return true;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ u64::from(label));
        let sample: Vec<&&str> = pool.choose_multiple(&mut rng, self.sample_size).collect();
        let english = sample.iter().filter(|t| self.looks_english(t)).count();
        english as f64 / sample.len() as f64 >= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentinelCommunity {
    pub label: CommunityLabel,
    /// `(account_id, weighted in-degree)`, in-degree descending.
    pub sentinels: Vec<(String, u64)>,
    /// Share of the community's received retweets that go to its sentinels.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentinelSet {
    pub k: usize,
    pub communities: Vec<SentinelCommunity>,
}

impl SentinelSet {
    pub fn labels(&self) -> Vec<CommunityLabel> {
        self.communities.iter().map(|c| c.label).collect()
    }

    pub fn community(&self, label: CommunityLabel) -> Option<&SentinelCommunity> {
        self.communities.iter().find(|c| c.label == label)
    }

    /// Map from sentinel account to its community.
    pub fn account_community(&self) -> BTreeMap<String, CommunityLabel> {
        self.communities.iter().flat_map(|c| c.sentinels.iter().map(move |(a, _)| (a.clone(), c.label))).collect()
    }

    pub fn write_roster<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.communities {
            for (account, deg) in &c.sentinels {
                writeln!(out, "{} {} {}", c.label, account, deg)?;
            }
        }
        Ok(())
    }

    /// Reads a roster. Coverage is not stored in the roster and comes back
    /// as NaN; `k` is the largest community roster.
    pub fn read_roster<R: BufRead>(input: R) -> Result<Self> {
        let mut communities: Vec<SentinelCommunity> = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::format("roster", format!("line {}: {line:?}", lineno + 1));
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let label: CommunityLabel = parts[0].parse().map_err(|_| bad())?;
            let deg: u64 = parts[2].parse().map_err(|_| bad())?;
            match communities.last_mut() {
                Some(c) if c.label == label => c.sentinels.push((parts[1].to_string(), deg)),
                _ => communities.push(SentinelCommunity {
                    label,
                    sentinels: vec![(parts[1].to_string(), deg)],
                    coverage: f64::NAN,
                }),
            }
        }
        let k = communities.iter().map(|c| c.sentinels.len()).max().unwrap_or(0);
        Ok(SentinelSet { k, communities })
    }
}

/// Picks the `k` most retweeted accounts (ties by account id) from each of
/// the `top_m` largest communities that pass `filter`.
pub fn select_sentinels(
    graph: &RetweetGraph,
    partition: &Partition,
    k: usize,
    top_m: usize,
    filter: &dyn CommunityFilter,
) -> Result<SentinelSet> {
    if k == 0 || top_m == 0 {
        return Err(Error::Parameter("k and top_m must be positive".into()));
    }
    partition.labels_for(graph)?;
    let mut communities = Vec::new();
    for label in partition.labels_by_size().into_iter().take(top_m) {
        let members = partition.members(label).expect("label from partition");
        if !filter.keep(label, members) {
            continue;
        }
        let mut ranked: Vec<(String, u64)> = members
            .iter()
            .map(|m| {
                let deg = graph.node_index(m).map_or(0, |i| graph.in_weight(i));
                (m.clone(), deg)
            })
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total: u64 = ranked.iter().map(|(_, d)| d).sum();
        ranked.truncate(k);
        let selected: u64 = ranked.iter().map(|(_, d)| d).sum();
        // nobody retweeted means nothing left uncovered
        let coverage = if total == 0 { 1.0 } else { selected as f64 / total as f64 };
        communities.push(SentinelCommunity { label, sentinels: ranked, coverage });
    }
    Ok(SentinelSet { k, communities })
}

/// Inclusive range of UTC calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Window {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::Parameter(format!("empty window {start}..{end}")));
        }
        Ok(Window { start, end })
    }

    pub fn len_days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.len_days())
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }

    pub fn offset(&self, day: NaiveDate) -> Option<usize> {
        self.contains(day).then(|| (day - self.start).num_days() as usize)
    }
}

/// An account is active on day `d` when it has an observed tweet on or
/// after `d` inside the window.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityLedger {
    pub window: Window,
    pub last_tweet: BTreeMap<String, DateTime<Utc>>,
    community_of: BTreeMap<String, CommunityLabel>,
}

impl ActivityLedger {
    pub fn last_active_day(&self, account: &str) -> Option<NaiveDate> {
        self.last_tweet.get(account).map(|t| t.date_naive())
    }

    pub fn is_active(&self, account: &str, day: NaiveDate) -> bool {
        self.window.contains(day) && self.last_active_day(account).is_some_and(|last| day <= last)
    }

    pub fn account_days(&self, account: &str) -> usize {
        match self.last_active_day(account) {
            Some(last) => (last - self.window.start).num_days() as usize + 1,
            None => 0,
        }
    }

    pub fn accounts(&self) -> impl Iterator<Item = &str> {
        self.community_of.keys().map(String::as_str)
    }

    pub fn community_account_days(&self, label: CommunityLabel) -> usize {
        self.community_of.iter().filter(|(_, &l)| l == label).map(|(a, _)| self.account_days(a)).sum()
    }

    /// Daily active account counts per community, indexed by window offset.
    pub fn daily_active_by_community(&self) -> BTreeMap<CommunityLabel, Vec<usize>> {
        self.daily_active_grouped(Some)
    }

    /// Daily active account counts aggregated through a community grouping
    /// (e.g. community to cluster). Unmapped communities are ignored.
    pub fn daily_active_grouped<G: Ord>(&self, group: impl Fn(CommunityLabel) -> Option<G>) -> BTreeMap<G, Vec<usize>> {
        let len = self.window.len_days();
        let mut out: BTreeMap<G, Vec<usize>> = BTreeMap::new();
        for (account, &label) in &self.community_of {
            let Some(g) = group(label) else { continue };
            let series = out.entry(g).or_insert_with(|| vec![0; len]);
            let active = self.account_days(account);
            for slot in series.iter_mut().take(active) {
                *slot += 1;
            }
        }
        out
    }
}

/// Builds the ledger for the sentinel accounts from their archived tweets.
pub fn activity(records: &[TweetRecord], sentinels: &SentinelSet, window: Window) -> ActivityLedger {
    let community_of = sentinels.account_community();
    let mut last_tweet: BTreeMap<String, DateTime<Utc>> = BTreeMap::new();
    for r in records {
        if !community_of.contains_key(&r.author_id) || !window.contains(r.day()) {
            continue;
        }
        last_tweet.entry(r.author_id.clone()).and_modify(|t| *t = (*t).max(r.created_at)).or_insert(r.created_at);
    }
    ActivityLedger { window, last_tweet, community_of }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn tweet(id: usize, author: &str, day: u32) -> TweetRecord {
        TweetRecord {
            tweet_id: id.to_string(),
            author_id: author.into(),
            created_at: Utc.with_ymd_and_hms(2020, 7, day, 9, 0, 0).unwrap(),
            text: "x".into(),
            retweeted_author_id: None,
            urls: vec![],
        }
    }

    fn window30() -> Window {
        Window::new(NaiveDate::from_ymd_opt(2020, 7, 1).unwrap(), NaiveDate::from_ymd_opt(2020, 7, 30).unwrap())
            .unwrap()
    }

    fn roster(accounts: &[&str]) -> SentinelSet {
        SentinelSet {
            k: accounts.len(),
            communities: vec![SentinelCommunity {
                label: 0,
                sentinels: accounts.iter().map(|a| (a.to_string(), 0)).collect(),
                coverage: 1.0,
            }],
        }
    }

    #[test]
    fn small_community_fully_selected() {
        // in-degrees a=5, b=2, c=0
        let g = RetweetGraph::from_arcs([("a", "b", 3), ("a", "c", 2), ("b", "c", 2)]);
        let p = Partition::one_community(g.node_ids());
        let s = select_sentinels(&g, &p, 15, 50, &AcceptAll).unwrap();
        let c = &s.communities[0];
        assert_eq!(c.sentinels, vec![("a".to_string(), 5), ("b".to_string(), 2), ("c".to_string(), 0)]);
        assert_eq!(c.coverage, 1.0);
    }

    #[test]
    fn ties_broken_by_id_and_k_respected() {
        let g = RetweetGraph::from_arcs([("b", "x", 1), ("a", "x", 1), ("c", "x", 1)]);
        let p = Partition::one_community(g.node_ids());
        let s = select_sentinels(&g, &p, 2, 50, &AcceptAll).unwrap();
        let ids: Vec<&str> = s.communities[0].sentinels.iter().map(|(a, _)| a.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert!((s.communities[0].coverage - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn parameters_validated() {
        let g = RetweetGraph::from_arcs([("a", "b", 1)]);
        let p = Partition::one_community(g.node_ids());
        assert!(matches!(select_sentinels(&g, &p, 0, 5, &AcceptAll), Err(Error::Parameter(_))));
        assert!(matches!(select_sentinels(&g, &p, 5, 0, &AcceptAll), Err(Error::Parameter(_))));
    }

    #[test]
    fn filter_and_top_m() {
        let g = RetweetGraph::from_arcs([("a", "b", 1), ("b", "c", 1), ("x", "y", 1)]);
        let p = Partition::from_assignment([("a", 0), ("b", 0), ("c", 0), ("x", 1), ("y", 1)]);
        let s = select_sentinels(&g, &p, 15, 1, &AcceptAll).unwrap();
        assert_eq!(s.labels(), [0]);
        let drop_zero = |l: CommunityLabel, _: &BTreeSet<String>| l != 0;
        let s = select_sentinels(&g, &p, 15, 50, &drop_zero).unwrap();
        assert_eq!(s.labels(), [1]);
    }

    #[test]
    fn ascii_filter() {
        let mut records: Vec<TweetRecord> = (0..10).map(|i| tweet(i, "a", 1)).collect();
        for r in records.iter_mut().take(3) {
            r.text = "Привет мир".into();
        }
        let members: BTreeSet<String> = ["a".to_string()].into();
        let mut f = AsciiLanguageFilter::from_records(&records, 1);
        assert!(!f.keep(0, &members));
        f.threshold = 0.7;
        assert!(f.keep(0, &members));
    }

    #[test]
    fn roster_round_trip() {
        let s = SentinelSet {
            k: 2,
            communities: vec![
                SentinelCommunity { label: 4, sentinels: vec![("a".into(), 9), ("b".into(), 3)], coverage: 0.5 },
                SentinelCommunity { label: 1, sentinels: vec![("c".into(), 1)], coverage: 1.0 },
            ],
        };
        let mut buf = Vec::new();
        s.write_roster(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "4 a 9\n4 b 3\n1 c 1\n");
        let back = SentinelSet::read_roster(buf.as_slice()).unwrap();
        assert_eq!(back.k, 2);
        assert_eq!(back.labels(), [4, 1]);
        assert_eq!(back.communities[0].sentinels, s.communities[0].sentinels);
    }

    #[test]
    fn activity_definitions() {
        let w = window30();
        let ledger = activity(&[tweet(1, "a", 10), tweet(2, "b", 30)], &roster(&["a", "b", "c"]), w);
        assert_eq!(ledger.account_days("a"), 10);
        assert!(ledger.is_active("a", NaiveDate::from_ymd_opt(2020, 7, 10).unwrap()));
        assert!(!ledger.is_active("a", NaiveDate::from_ymd_opt(2020, 7, 11).unwrap()));
        assert_eq!(ledger.account_days("b"), 30);
        assert_eq!(ledger.account_days("c"), 0);
        let daily = &ledger.daily_active_by_community()[&0];
        assert_eq!(daily[0], 2);
        assert_eq!(daily[9], 2);
        assert_eq!(daily[10], 1);
        assert_eq!(daily[29], 1);
    }

    #[test]
    fn fifteen_daily_accounts() {
        let accounts: Vec<String> = (0..15).map(|i| format!("s{i}")).collect();
        let refs: Vec<&str> = accounts.iter().map(String::as_str).collect();
        let mut records = Vec::new();
        for (i, a) in accounts.iter().enumerate() {
            for d in 1..=30 {
                records.push(tweet(i * 100 + d as usize, a, d));
            }
        }
        let ledger = activity(&records, &roster(&refs), window30());
        assert_eq!(ledger.community_account_days(0), 450);
    }

    #[test]
    fn empty_window_rejected() {
        let d = NaiveDate::from_ymd_opt(2020, 7, 2).unwrap();
        assert!(Window::new(d, d.pred_opt().unwrap()).is_err());
        assert_eq!(Window::new(d, d).unwrap().len_days(), 1);
    }
}
