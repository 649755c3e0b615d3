//! Tweet archive ingestion: JSON Lines records, link domains and cleaned
//! token streams with word trigrams.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use chrono::{DateTime, NaiveDate, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const DEFAULT_SHORTENERS: &str = include_str!("../data/shorteners.txt");

/// One archived tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub author_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    #[serde(default)]
    pub retweeted_author_id: Option<String>,
    #[serde(default)]
    pub urls: Vec<String>,
}

impl TweetRecord {
    pub fn is_retweet(&self) -> bool {
        self.retweeted_author_id.is_some()
    }

    /// UTC calendar day of the tweet.
    pub fn day(&self) -> NaiveDate {
        self.created_at.date_naive()
    }

    fn check(&self) -> std::result::Result<(), &'static str> {
        if self.tweet_id.is_empty() {
            return Err("empty tweet_id");
        }
        if matches!(&self.retweeted_author_id, Some(a) if a.is_empty()) {
            return Err("empty retweeted_author_id");
        }
        Ok(())
    }
}

/// Records parsed from a stream, with the number of malformed lines dropped.
#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub records: Vec<TweetRecord>,
    pub skipped: usize,
}

/// Parses a JSON Lines stream. Blank lines are ignored; malformed lines,
/// records violating field invariants and duplicate tweet ids are skipped
/// and counted.
pub fn parse_tweet_stream<R: BufRead>(input: R) -> Result<ParsedCorpus> {
    let mut corpus = ParsedCorpus::default();
    let mut seen = HashSet::new();
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<TweetRecord>(line) {
            Ok(rec) if rec.check().is_ok() && seen.insert(rec.tweet_id.clone()) => corpus.records.push(rec),
            _ => corpus.skipped += 1,
        }
    }
    if corpus.records.is_empty() {
        return Err(Error::EmptyCorpus { skipped: corpus.skipped });
    }
    Ok(corpus)
}

pub fn write_tweet_stream<W: Write>(records: &[TweetRecord], mut out: W) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses a plain word list: one entry per line, `#` starts a comment,
/// entries are trimmed and lowercased.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines().map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase()).filter(|l| !l.is_empty()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopWords(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    pub fn empty() -> Self {
        StopWords(HashSet::new())
    }

    pub fn parse(text: &str) -> Self {
        StopWords(parse_word_list(text).into_iter().collect())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for StopWords {
    fn default() -> Self {
        StopWords::parse(DEFAULT_STOPWORDS)
    }
}

/// Hosts whose links are dropped from domain counts (URL shorteners).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortenerList(HashSet<String>);

impl ShortenerList {
    pub fn new<I, S>(domains: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        ShortenerList(domains.into_iter().map(|d| d.as_ref().trim().to_lowercase()).collect())
    }

    pub fn parse(text: &str) -> Self {
        ShortenerList(parse_word_list(text).into_iter().collect())
    }

    pub fn contains(&self, domain: &str) -> bool {
        self.0.contains(domain)
    }
}

impl Default for ShortenerList {
    fn default() -> Self {
        ShortenerList::parse(DEFAULT_SHORTENERS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkDomain {
    Domain(String),
    /// Twitter itself or a shortening service.
    Excluded,
}

/// Maps a URL to its lowercased host with a leading `www.` removed.
/// Links into twitter.com and to shortener hosts are excluded.
pub fn extract_domain(url: &str, shorteners: &ShortenerList) -> Result<LinkDomain> {
    let trimmed = url.trim();
    let with_scheme = if trimmed.contains("://") { trimmed.to_string() } else { format!("http://{trimmed}") };
    let parsed =
        url::Url::parse(&with_scheme).map_err(|e| Error::UrlParse { url: url.to_string(), reason: e.to_string() })?;
    let host = parsed
        .host_str()
        .filter(|h| !h.is_empty())
        .ok_or_else(|| Error::UrlParse { url: url.to_string(), reason: "no host".into() })?
        .trim_end_matches('.')
        .to_lowercase();
    let mut host = host.as_str();
    while let Some(rest) = host.strip_prefix("www.") {
        host = rest;
    }
    let host = host.to_string();
    if host.is_empty() {
        return Err(Error::UrlParse { url: url.to_string(), reason: "no host".into() });
    }
    if host == "twitter.com" || host.ends_with(".twitter.com") || shorteners.contains(&host) {
        return Ok(LinkDomain::Excluded);
    }
    Ok(LinkDomain::Domain(host))
}

/// Three consecutive cleaned tokens, stored space-joined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trigram(String);

impl Trigram {
    pub fn from_tokens(a: &str, b: &str, c: &str) -> Self {
        Trigram(format!("{a} {b} {c}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Trigram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type TrigramCounts = BTreeMap<Trigram, u32>;

/// Cleaned representation of one tweet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenDoc {
    pub tokens: Vec<String>,
    pub trigram_counts: TrigramCounts,
}

impl TokenDoc {
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let mut trigram_counts = TrigramCounts::new();
        for w in tokens.windows(3) {
            *trigram_counts.entry(Trigram::from_tokens(&w[0], &w[1], &w[2])).or_insert(0) += 1;
        }
        TokenDoc { tokens, trigram_counts }
    }

    pub fn trigram_total(&self) -> u32 {
        self.trigram_counts.values().sum()
    }

    pub fn has_trigrams(&self) -> bool {
        !self.trigram_counts.is_empty()
    }
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:[a-z][a-z0-9+.-]*://|www\.)\S*").unwrap())
}

fn mention_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").unwrap())
}

/// Strips URLs and @mentions, lowercases, splits on non-alphanumeric runs
/// and drops stopwords. Trigrams are counted over the surviving tokens.
pub fn normalize_text(text: &str, stopwords: &StopWords) -> TokenDoc {
    let no_urls = url_pattern().replace_all(text, " ");
    let cleaned = mention_pattern().replace_all(&no_urls, " ");
    let lowered = cleaned.to_lowercase();
    let tokens = lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .map(str::to_string)
        .collect();
    TokenDoc::from_tokens(tokens)
}
