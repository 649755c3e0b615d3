//! Pipeline configuration: a flat `key = value` text file, overridable by
//! `SENTINEL_*` environment variables and command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};

use crate::domains::{Linkage, DEFAULT_CLUSTERS, DEFAULT_MIN_COUNT};
use crate::error::{Error, Result};
use crate::lsa::{DEFAULT_MATCH_THRESHOLD, DEFAULT_SINGULAR_VECTORS};
use crate::sentinel::{Window, DEFAULT_SENTINELS_PER_COMMUNITY, DEFAULT_TOP_COMMUNITIES};
use crate::similarity::{FlagRule, DEFAULT_BURST_THRESHOLD, DEFAULT_MIN_HISTORY};
use crate::topics::DEFAULT_ACCOUNTS_PER_DAY;

pub const ENV_PREFIX: &str = "SENTINEL_";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Tweets used to build the retweet graph.
    pub corpus: PathBuf,
    /// Sentinel timelines; the graph corpus is reused when absent.
    pub timeline: Option<PathBuf>,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    /// Tweets before this instant form the baseline segment.
    pub split: DateTime<Utc>,
    pub sentinels_per_community: usize,
    pub top_communities: usize,
    pub min_count: u64,
    pub clusters: usize,
    pub linkage: Linkage,
    pub burst_threshold: f64,
    pub burst_inclusive: bool,
    pub min_history: usize,
    pub seed: u64,
    pub language_filter: bool,
    pub lexicon_dir: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub shorteners: Option<PathBuf>,
    pub anchor_domain: Option<String>,
    /// Empty means every loaded lexicon.
    pub topics: Vec<String>,
    pub lsa_vectors: usize,
    pub match_threshold: f64,
    pub accounts_per_day: f64,
    pub contingency: Option<PathBuf>,
    pub coding: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub resume: bool,
}

pub const KEYS: &[&str] = &[
    "corpus",
    "timeline",
    "window_start",
    "window_end",
    "split",
    "sentinels_per_community",
    "top_communities",
    "min_count",
    "clusters",
    "linkage",
    "burst_threshold",
    "burst_inclusive",
    "min_history",
    "seed",
    "language_filter",
    "lexicon_dir",
    "stopwords",
    "shorteners",
    "anchor_domain",
    "topics",
    "lsa_vectors",
    "match_threshold",
    "accounts_per_day",
    "contingency",
    "coding",
    "output_dir",
    "resume",
];

const REQUIRED: &[&str] = &["corpus", "window_start", "window_end", "split"];

fn bad(key: &str, value: &str) -> Error {
    Error::format("config", format!("invalid value {value:?} for {key}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl PipelineConfig {
    pub fn new(corpus: impl Into<PathBuf>, window: Window, split: DateTime<Utc>) -> Self {
        PipelineConfig {
            corpus: corpus.into(),
            timeline: None,
            window_start: window.start,
            window_end: window.end,
            split,
            sentinels_per_community: DEFAULT_SENTINELS_PER_COMMUNITY,
            top_communities: DEFAULT_TOP_COMMUNITIES,
            min_count: DEFAULT_MIN_COUNT,
            clusters: DEFAULT_CLUSTERS,
            linkage: Linkage::Centroid,
            burst_threshold: DEFAULT_BURST_THRESHOLD,
            burst_inclusive: true,
            min_history: DEFAULT_MIN_HISTORY,
            seed: 0,
            language_filter: true,
            lexicon_dir: None,
            stopwords: None,
            shorteners: None,
            anchor_domain: None,
            topics: Vec::new(),
            lsa_vectors: DEFAULT_SINGULAR_VECTORS,
            match_threshold: DEFAULT_MATCH_THRESHOLD,
            accounts_per_day: DEFAULT_ACCOUNTS_PER_DAY,
            contingency: None,
            coding: None,
            output_dir: PathBuf::from("out"),
            resume: false,
        }
    }

    pub fn window(&self) -> Result<Window> {
        Window::new(self.window_start, self.window_end)
    }

    pub fn flag_rule(&self) -> FlagRule {
        FlagRule { threshold: self.burst_threshold, inclusive: self.burst_inclusive }
    }

    pub fn timeline_path(&self) -> &Path {
        self.timeline.as_deref().unwrap_or(&self.corpus)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "corpus" => self.corpus = PathBuf::from(v),
            "timeline" => self.timeline = opt_path(v),
            "window_start" => self.window_start = parse_num(key, v)?,
            "window_end" => self.window_end = parse_num(key, v)?,
            "split" => self.split = DateTime::parse_from_rfc3339(v).map_err(|_| bad(key, v))?.with_timezone(&Utc),
            "sentinels_per_community" => self.sentinels_per_community = parse_num(key, v)?,
            "top_communities" => self.top_communities = parse_num(key, v)?,
            "min_count" => self.min_count = parse_num(key, v)?,
            "clusters" => self.clusters = parse_num(key, v)?,
            "linkage" => {
                self.linkage = match v {
                    "centroid" => Linkage::Centroid,
                    "average" => Linkage::Average,
                    _ => return Err(bad(key, v)),
                }
            }
            "burst_threshold" => self.burst_threshold = parse_num(key, v)?,
            "burst_inclusive" => self.burst_inclusive = parse_num(key, v)?,
            "min_history" => self.min_history = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "language_filter" => self.language_filter = parse_num(key, v)?,
            "lexicon_dir" => self.lexicon_dir = opt_path(v),
            "stopwords" => self.stopwords = opt_path(v),
            "shorteners" => self.shorteners = opt_path(v),
            "anchor_domain" => self.anchor_domain = (!v.is_empty()).then(|| v.to_string()),
            "topics" => {
                self.topics = v.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::to_string).collect()
            }
            "lsa_vectors" => self.lsa_vectors = parse_num(key, v)?,
            "match_threshold" => self.match_threshold = parse_num(key, v)?,
            "accounts_per_day" => self.accounts_per_day = parse_num(key, v)?,
            "contingency" => self.contingency = opt_path(v),
            "coding" => self.coding = opt_path(v),
            "output_dir" => self.output_dir = PathBuf::from(v),
            "resume" => self.resume = parse_num(key, v)?,
            _ => return Err(Error::format("config", format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses the flat text format. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let epoch = NaiveDate::default();
        let mut cfg = PipelineConfig::new("", Window { start: epoch, end: epoch }, DateTime::<Utc>::default());
        let mut seen = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::format("config", format!("line {} has no '='", n + 1)))?;
            let key = key.trim();
            cfg.set(key, value)?;
            seen.push(key.to_string());
        }
        if let Some(missing) = REQUIRED.iter().find(|k| !seen.iter().any(|s| s == *k)) {
            return Err(Error::format("config", format!("missing required key {missing}")));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        PipelineConfig::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies `SENTINEL_<KEY>` overrides from the given variables.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            let Some(key) = k.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            if KEYS.contains(&key.as_str()) {
                self.set(&key, v.as_ref())?;
            }
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("corpus", self.corpus.display().to_string());
        put("timeline", path(&self.timeline));
        put("window_start", self.window_start.to_string());
        put("window_end", self.window_end.to_string());
        put("split", self.split.to_rfc3339());
        put("sentinels_per_community", self.sentinels_per_community.to_string());
        put("top_communities", self.top_communities.to_string());
        put("min_count", self.min_count.to_string());
        put("clusters", self.clusters.to_string());
        put(
            "linkage",
            match self.linkage {
                Linkage::Centroid => "centroid",
                Linkage::Average => "average",
            }
            .into(),
        );
        put("burst_threshold", self.burst_threshold.to_string());
        put("burst_inclusive", self.burst_inclusive.to_string());
        put("min_history", self.min_history.to_string());
        put("seed", self.seed.to_string());
        put("language_filter", self.language_filter.to_string());
        put("lexicon_dir", path(&self.lexicon_dir));
        put("stopwords", path(&self.stopwords));
        put("shorteners", path(&self.shorteners));
        put("anchor_domain", self.anchor_domain.clone().unwrap_or_default());
        put("topics", self.topics.join(","));
        put("lsa_vectors", self.lsa_vectors.to_string());
        put("match_threshold", self.match_threshold.to_string());
        put("accounts_per_day", self.accounts_per_day.to_string());
        put("contingency", path(&self.contingency));
        put("coding", path(&self.coding));
        put("output_dir", self.output_dir.display().to_string());
        put("resume", self.resume.to_string());
        out
    }

    /// Checks parameter ranges, the split position and that input files exist.
    pub fn validate(&self) -> Result<()> {
        let window = self.window()?;
        if !window.contains(self.split.date_naive()) {
            return Err(Error::Parameter(format!(
                "split {} lies outside the window {}..={}",
                self.split, window.start, window.end
            )));
        }
        let counts = [
            ("sentinels_per_community", self.sentinels_per_community),
            ("top_communities", self.top_communities),
            ("clusters", self.clusters),
            ("min_history", self.min_history),
            ("lsa_vectors", self.lsa_vectors),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Parameter(format!("{name} must be positive")));
        }
        if !(self.burst_threshold.is_finite() && self.accounts_per_day > 0.0) {
            return Err(Error::Parameter("burst threshold must be finite and accounts_per_day positive".into()));
        }
        if !(0.0..=1.0).contains(&self.match_threshold) {
            return Err(Error::Parameter("match_threshold must lie in [0, 1]".into()));
        }
        let files = [
            Some(&self.corpus),
            self.timeline.as_ref(),
            self.lexicon_dir.as_ref(),
            self.stopwords.as_ref(),
            self.shorteners.as_ref(),
            self.contingency.as_ref(),
            self.coding.as_ref(),
        ];
        for f in files.into_iter().flatten() {
            if !f.exists() {
                return Err(Error::Parameter(format!("{} does not exist", f.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn sample() -> PipelineConfig {
        let d = |m, day| NaiveDate::from_ymd_opt(2020, m, day).unwrap();
        let mut c = PipelineConfig::new(
            "tweets.jsonl",
            Window::new(d(8, 1), d(11, 30)).unwrap(),
            Utc.with_ymd_and_hms(2020, 10, 4, 4, 0, 0).unwrap(),
        );
        c.topics = vec!["covid".into(), "vaccines".into()];
        c.anchor_domain = Some("example.com".into());
        c.burst_threshold = 2.25;
        c.linkage = Linkage::Average;
        c
    }

    #[test]
    fn round_trip() {
        let c = sample();
        assert_eq!(PipelineConfig::parse(&c.serialize()).unwrap(), c);
    }

    #[test]
    fn missing_and_unknown_keys() {
        assert!(PipelineConfig::parse("corpus = x\n").is_err());
        let text = sample().serialize() + "colour = blue\n";
        assert!(PipelineConfig::parse(&text).is_err());
    }

    #[test]
    fn env_overrides() {
        let mut c = sample();
        c.apply_env([("SENTINEL_SEED", "42"), ("HOME", "/root"), ("SENTINEL_TOPICS", "masks")]).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.topics, ["masks"]);
        assert!(c.apply_env([("SENTINEL_CLUSTERS", "three")]).is_err());
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("c.jsonl");
        std::fs::write(&corpus, "").unwrap();
        let mut c = sample();
        assert!(c.validate().is_err());
        c.corpus = corpus;
        c.validate().unwrap();
        c.split = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
        assert!(c.validate().is_err());
        c.split = sample().split;
        c.clusters = 0;
        assert!(c.validate().is_err());
    }
}
