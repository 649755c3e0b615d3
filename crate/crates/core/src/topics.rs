//! Substring lexicon filters and per-capita topic rates.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use crate::community::CommunityLabel;
use crate::error::{Error, Result};
use crate::ingest::{parse_word_list, TweetRecord};
use crate::sentinel::{ActivityLedger, Window};

/// Accounts the daily cluster rates are normalized to.
pub const DEFAULT_ACCOUNTS_PER_DAY: f64 = 15.0;

const BUILTIN_LEXICONS: &[(&str, &str)] = &[
    ("covid", include_str!("../data/lexicons/covid.txt")),
    ("plandemic", include_str!("../data/lexicons/plandemic.txt")),
    ("hydroxychloroquine", include_str!("../data/lexicons/hydroxychloroquine.txt")),
    ("facemasks", include_str!("../data/lexicons/facemasks.txt")),
    ("mortality", include_str!("../data/lexicons/mortality.txt")),
    ("severity", include_str!("../data/lexicons/severity.txt")),
    ("downplaying", include_str!("../data/lexicons/downplaying.txt")),
    ("vaccines", include_str!("../data/lexicons/vaccines.txt")),
    ("vaccine_hesitancy", include_str!("../data/lexicons/vaccine_hesitancy.txt")),
    ("vaccine_misinformation", include_str!("../data/lexicons/vaccine_misinformation.txt")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicLexicon {
    pub name: String,
    pub substrings: Vec<String>,
    pub parent: Option<String>,
}

impl TopicLexicon {
    pub fn new<S: AsRef<str>>(name: &str, substrings: &[S], parent: Option<&str>) -> Result<Self> {
        let substrings: Vec<String> = substrings.iter().map(|s| s.as_ref().to_lowercase()).collect();
        if substrings.iter().any(String::is_empty) {
            return Err(Error::Parameter(format!("lexicon {name} has an empty substring")));
        }
        Ok(TopicLexicon { name: name.to_string(), substrings, parent: parent.map(str::to_string) })
    }

    /// Parses a lexicon file. A `# parent: <name>` comment names the parent.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let parent = text.lines().find_map(|l| {
            l.trim().strip_prefix('#').and_then(|c| c.trim().strip_prefix("parent:")).map(|p| p.trim().to_string())
        });
        TopicLexicon::new(name, &parse_word_list(text), parent.as_deref())
    }

    /// Case-insensitive containment of any substring in the raw text.
    pub fn matches(&self, text: &str) -> bool {
        let lowered = text.to_lowercase();
        self.substrings.iter().any(|s| lowered.contains(s.as_str()))
    }
}

/// Records whose text matches the lexicon. Parent membership is the
/// caller's responsibility; see [`LexiconSet::filter`].
pub fn filter_topic<'a>(records: &[&'a TweetRecord], lexicon: &TopicLexicon) -> Vec<&'a TweetRecord> {
    records.iter().copied().filter(|r| lexicon.matches(&r.text)).collect()
}

/// Named lexicons with acyclic parent links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconSet {
    lexicons: BTreeMap<String, TopicLexicon>,
}

impl LexiconSet {
    pub fn new(lexicons: impl IntoIterator<Item = TopicLexicon>) -> Result<Self> {
        let lexicons: BTreeMap<String, TopicLexicon> = lexicons.into_iter().map(|l| (l.name.clone(), l)).collect();
        for lex in lexicons.values() {
            let mut seen = BTreeSet::from([lex.name.as_str()]);
            let mut cur = lex;
            while let Some(p) = &cur.parent {
                cur = lexicons
                    .get(p)
                    .ok_or_else(|| Error::Parameter(format!("lexicon {} names unknown parent {p}", cur.name)))?;
                if !seen.insert(cur.name.as_str()) {
                    return Err(Error::Parameter(format!("lexicon parent cycle through {}", lex.name)));
                }
            }
        }
        Ok(LexiconSet { lexicons })
    }

    pub fn builtin() -> Self {
        LexiconSet::new(
            BUILTIN_LEXICONS.iter().map(|(name, text)| TopicLexicon::parse(name, text).expect("builtin lexicon")),
        )
        .expect("builtin lexicons are consistent")
    }

    /// Loads every `*.txt` file in a directory; the file stem is the name.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut lexicons = Vec::new();
        let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
        entries.sort_by_key(|e| e.path());
        for entry in entries {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            lexicons.push(TopicLexicon::parse(&name, &std::fs::read_to_string(&path)?)?);
        }
        LexiconSet::new(lexicons)
    }

    pub fn get(&self, name: &str) -> Option<&TopicLexicon> {
        self.lexicons.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.lexicons.keys().map(String::as_str)
    }

    /// Lexicon and its ancestors, root first.
    pub fn chain(&self, name: &str) -> Result<Vec<&TopicLexicon>> {
        let mut chain = Vec::new();
        let mut cur = self.lexicons.get(name).ok_or_else(|| Error::Parameter(format!("unknown lexicon {name}")))?;
        chain.push(cur);
        while let Some(p) = &cur.parent {
            cur = &self.lexicons[p];
            chain.push(cur);
        }
        chain.reverse();
        Ok(chain)
    }

    /// True when the text matches the lexicon and every ancestor.
    pub fn matches(&self, name: &str, text: &str) -> Result<bool> {
        Ok(self.chain(name)?.iter().all(|l| l.matches(text)))
    }

    /// Applies the ancestor filters root first, then the named lexicon.
    pub fn filter<'a>(&self, name: &str, records: &[&'a TweetRecord]) -> Result<Vec<&'a TweetRecord>> {
        let mut current = records.to_vec();
        for lex in self.chain(name)? {
            current = filter_topic(&current, lex);
        }
        Ok(current)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityRate {
    pub community: CommunityLabel,
    pub count: u64,
    pub account_days: usize,
    /// Tweets per active account day.
    pub per_capita: f64,
    /// Share of the summed per-capita rates; `None` when all rates are zero.
    pub sum_scaled: Option<f64>,
    /// Fraction of the largest per-capita rate; `None` when all are zero.
    pub max_scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicRates {
    pub topic: String,
    pub rows: Vec<CommunityRate>,
    /// Communities dropped for having no active account days.
    pub excluded: Vec<CommunityLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyClusterRate {
    pub topic: String,
    pub cluster: usize,
    pub day: NaiveDate,
    pub count: u64,
    pub active_accounts: usize,
    /// `count * per_accounts / active_accounts`, `None` with no active accounts.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateTable {
    pub topics: Vec<TopicRates>,
    pub daily: Vec<DailyClusterRate>,
}

/// Per-capita, sum-scaled and max-scaled rates for one topic.
pub fn topic_rates(
    topic: &str,
    counts: &BTreeMap<CommunityLabel, u64>,
    account_days: &BTreeMap<CommunityLabel, usize>,
) -> TopicRates {
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for (&community, &days) in account_days {
        if days == 0 {
            excluded.push(community);
            continue;
        }
        let count = counts.get(&community).copied().unwrap_or(0);
        rows.push(CommunityRate {
            community,
            count,
            account_days: days,
            per_capita: count as f64 / days as f64,
            sum_scaled: None,
            max_scaled: None,
        });
    }
    let total: f64 = rows.iter().map(|r| r.per_capita).sum();
    let max = rows.iter().map(|r| r.per_capita).fold(0.0, f64::max);
    if total > 0.0 {
        for r in &mut rows {
            r.sum_scaled = Some(r.per_capita / total);
            r.max_scaled = Some(r.per_capita / max);
        }
    }
    TopicRates { topic: topic.to_string(), rows, excluded }
}

/// Daily rates normalized to `per_accounts` active accounts.
pub fn daily_cluster_rates(
    topic: &str,
    window: Window,
    daily_counts: &BTreeMap<usize, Vec<u64>>,
    daily_active: &BTreeMap<usize, Vec<usize>>,
    per_accounts: f64,
) -> Vec<DailyClusterRate> {
    let mut out = Vec::new();
    for (&cluster, active) in daily_active {
        let counts = daily_counts.get(&cluster);
        for (offset, day) in window.days().enumerate() {
            let count = counts.and_then(|c| c.get(offset)).copied().unwrap_or(0);
            let active_accounts = active.get(offset).copied().unwrap_or(0);
            let rate = (active_accounts > 0).then(|| count as f64 * per_accounts / active_accounts as f64);
            out.push(DailyClusterRate { topic: topic.to_string(), cluster, day, count, active_accounts, rate });
        }
    }
    out
}

/// Counts topical sentinel tweets in the ledger's window and builds the
/// full rate table. `cluster_of` maps communities to clusters for the daily
/// series; communities without a cluster only appear in per-community rows.
pub fn rate_table(
    records: &[&TweetRecord],
    community_of: &BTreeMap<String, CommunityLabel>,
    cluster_of: &BTreeMap<CommunityLabel, usize>,
    lexicons: &LexiconSet,
    topics: &[&str],
    ledger: &ActivityLedger,
    per_accounts: f64,
) -> Result<RateTable> {
    let window = ledger.window;
    let in_window: Vec<&TweetRecord> = records
        .iter()
        .copied()
        .filter(|r| window.contains(r.day()) && community_of.contains_key(&r.author_id))
        .collect();
    let labels: BTreeSet<CommunityLabel> = community_of.values().copied().collect();
    let account_days: BTreeMap<CommunityLabel, usize> =
        labels.iter().map(|&l| (l, ledger.community_account_days(l))).collect();
    let daily_active = ledger.daily_active_grouped(|l| cluster_of.get(&l).copied());

    let mut table = RateTable::default();
    for &topic in topics {
        let matched = lexicons.filter(topic, &in_window)?;
        let mut counts: BTreeMap<CommunityLabel, u64> = BTreeMap::new();
        let mut daily: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for r in matched {
            let community = community_of[&r.author_id];
            *counts.entry(community).or_insert(0) += 1;
            if let (Some(&cluster), Some(offset)) = (cluster_of.get(&community), window.offset(r.day())) {
                daily.entry(cluster).or_insert_with(|| vec![0; window.len_days()])[offset] += 1;
            }
        }
        table.topics.push(topic_rates(topic, &counts, &account_days));
        table.daily.extend(daily_cluster_rates(topic, window, &daily, &daily_active, per_accounts));
    }
    Ok(table)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RateTable {
    pub fn write_rates_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["topic", "community", "count", "account_days", "per_capita", "sum_scaled", "max_scaled"])?;
        for t in &self.topics {
            for r in &t.rows {
                w.write_record([
                    t.topic.clone(),
                    r.community.to_string(),
                    r.count.to_string(),
                    r.account_days.to_string(),
                    r.per_capita.to_string(),
                    opt(r.sum_scaled),
                    opt(r.max_scaled),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_daily_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["topic", "cluster", "day", "count", "active_accounts", "rate"])?;
        for d in &self.daily {
            w.write_record([
                d.topic.clone(),
                d.cluster.to_string(),
                d.day.to_string(),
                d.count.to_string(),
                d.active_accounts.to_string(),
                opt(d.rate),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn topic(&self, name: &str) -> Option<&TopicRates> {
        self.topics.iter().find(|t| t.topic == name)
    }
}
