//! Seeded synthetic corpora with planted structure: retweet communities
//! grouped into leaning clusters, sentinel timelines with cluster-specific
//! vocabulary and link preferences, and an optional viral message posted in
//! two clusters on one day.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PipelineConfig;
use crate::ingest::{StopWords, TweetRecord};
use crate::sentinel::Window;
use crate::topics::LexiconSet;

const LEFT_DOMAINS: [&str; 3] = ["leftpost.example", "bluewire.example", "progressive-daily.example"];
const RIGHT_DOMAINS: [&str; 3] = ["redwire.example", "patriot-news.example", "libertyherald.example"];
const NEUTRAL_DOMAINS: [&str; 2] = ["wire-service.example", "health-agency.example"];
pub const ANCHOR_DOMAIN: &str = "redwire.example";

const PHRASES: usize = 5;
const PHRASE_LEN: usize = 5;
const WORDS_PER_TWEET: usize = 10;
const VIRAL_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ViralInjection {
    /// Zero-based day offset into the window.
    pub day: usize,
    pub clusters: (usize, usize),
    pub copies_per_community: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub clusters: usize,
    pub communities_per_cluster: usize,
    pub hubs: usize,
    pub followers: usize,
    pub start: NaiveDate,
    pub days: usize,
    pub baseline_days: usize,
    pub tweets_per_hub: usize,
    pub viral: Option<ViralInjection>,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            clusters: 3,
            communities_per_cluster: 3,
            hubs: 15,
            followers: 45,
            start: NaiveDate::from_ymd_opt(2020, 7, 1).expect("valid date"),
            days: 30,
            baseline_days: 10,
            tweets_per_hub: 3,
            viral: Some(ViralInjection { day: 24, clusters: (0, 2), copies_per_community: 6 }),
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    /// Retweets and timeline tweets in chronological order.
    pub records: Vec<TweetRecord>,
    pub window: Window,
    pub split: DateTime<Utc>,
    /// Planted community of every account.
    pub community_of: BTreeMap<String, usize>,
    pub cluster_of_community: Vec<usize>,
    /// Planted left (-) to right (+) position of each community.
    pub leaning: Vec<f64>,
    pub hubs: Vec<Vec<String>>,
    pub viral_day: Option<NaiveDate>,
    pub viral_text: Option<String>,
    pub viral_tweet_ids: BTreeSet<String>,
}

impl SyntheticCorpus {
    /// Pipeline settings matching the planted structure.
    pub fn config(&self, corpus: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> PipelineConfig {
        let mut cfg = PipelineConfig::new(corpus, self.window, self.split);
        cfg.sentinels_per_community = self.hubs.first().map_or(1, Vec::len);
        cfg.top_communities = self.hubs.len();
        cfg.clusters = self.cluster_of_community.iter().max().map_or(1, |m| m + 1);
        cfg.anchor_domain = Some(ANCHOR_DOMAIN.to_string());
        cfg.output_dir = output_dir.into();
        cfg
    }
}

struct WordMint {
    rng: ChaCha8Rng,
    used: BTreeSet<String>,
    stopwords: StopWords,
    lexicons: LexiconSet,
}

impl WordMint {
    // no c, h, m, q, w, x, y: keeps minted words clear of the topic lexicons
    const CONSONANTS: &'static [u8] = b"bdfgklnprstvz";
    const VOWELS: &'static [u8] = b"aeiou";

    fn word(&mut self) -> String {
        loop {
            let mut w = String::new();
            for _ in 0..3 {
                w.push(*Self::CONSONANTS.choose(&mut self.rng).expect("non-empty") as char);
                w.push(*Self::VOWELS.choose(&mut self.rng).expect("non-empty") as char);
            }
            let clashes = self.stopwords.contains(&w)
                || self.lexicons.names().any(|n| self.lexicons.matches(n, &w).unwrap_or(true));
            if !clashes && self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn words(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.word()).collect()
    }
}

fn at(day: NaiveDate, minutes: i64) -> DateTime<Utc> {
    Utc.from_utc_datetime(&day.and_hms_opt(0, 0, 0).expect("midnight")) + Duration::minutes(minutes)
}

/// Share of a community's daily tweets that carry a stock phrase; a weekly
/// cycle keeps the cross-cluster similarity periodic.
fn shared_fraction(day: usize) -> f64 {
    0.35 + 0.15 * (2.0 * std::f64::consts::PI * day as f64 / 7.0).sin()
}

fn pick_domain(rng: &mut ChaCha8Rng, leaning: f64) -> &'static str {
    let u: f64 = rng.random();
    let left = 0.8 * (1.0 - leaning) / 2.0;
    if u < left {
        LEFT_DOMAINS.choose(rng).expect("non-empty")
    } else if u < 0.8 {
        RIGHT_DOMAINS.choose(rng).expect("non-empty")
    } else {
        NEUTRAL_DOMAINS.choose(rng).expect("non-empty")
    }
}

pub fn generate(opts: &SynthOptions) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut mint = WordMint {
        rng: ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed),
        used: BTreeSet::new(),
        stopwords: StopWords::default(),
        lexicons: LexiconSet::builtin(),
    };
    let n_comm = opts.clusters * opts.communities_per_cluster;
    let cluster_of_community: Vec<usize> = (0..n_comm).map(|c| c / opts.communities_per_cluster).collect();
    let leaning: Vec<f64> = (0..n_comm)
        .map(|c| {
            let g = cluster_of_community[c];
            let centre = if opts.clusters > 1 { -0.8 + 1.6 * g as f64 / (opts.clusters - 1) as f64 } else { 0.0 };
            let jitter = opts.communities_per_cluster.saturating_sub(1).max(1) as f64;
            centre - 0.1 + 0.2 * (c % opts.communities_per_cluster) as f64 / jitter
        })
        .collect();
    let vocab: Vec<Vec<String>> = (0..opts.clusters).map(|_| mint.words(400)).collect();
    let phrases: Vec<String> = (0..PHRASES).map(|_| mint.words(PHRASE_LEN).join(" ")).collect();
    let viral_text = opts.viral.as_ref().map(|_| format!("covid {}", mint.words(VIRAL_LEN).join(" ")));

    let hubs: Vec<Vec<String>> =
        (0..n_comm).map(|c| (0..opts.hubs).map(|i| format!("c{c}h{i:02}")).collect()).collect();
    let followers: Vec<Vec<String>> =
        (0..n_comm).map(|c| (0..opts.followers).map(|i| format!("c{c}f{i:02}")).collect()).collect();
    let mut community_of = BTreeMap::new();
    for c in 0..n_comm {
        for a in hubs[c].iter().chain(&followers[c]) {
            community_of.insert(a.clone(), c);
        }
    }

    // (time, author, text, retweeted, urls); ids are assigned after sorting
    // (time, author, text, retweeted author, urls)
    type Raw = (DateTime<Utc>, String, String, Option<String>, Vec<String>);
    let mut raw: Vec<Raw> = Vec::new();
    let recruit_start = opts.start - Duration::days(30);
    for c in 0..n_comm {
        let g = cluster_of_community[c];
        for (fi, f) in followers[c].iter().enumerate() {
            let mut targets: Vec<&String> = hubs[c].choose_multiple(&mut rng, 6.min(opts.hubs)).collect();
            if fi == 0 && n_comm > 1 {
                targets.push(&hubs[(c + 1) % n_comm][0]);
            }
            for h in targets {
                for _ in 0..rng.random_range(1..=3) {
                    let words: Vec<&String> = vocab[g].choose_multiple(&mut rng, 6).collect();
                    let text = format!("RT covid {}", words.iter().map(|w| w.as_str()).collect::<Vec<_>>().join(" "));
                    let t = at(recruit_start, rng.random_range(0..28 * 24 * 60));
                    raw.push((t, f.clone(), text, Some(h.clone()), Vec::new()));
                }
            }
        }
    }

    let mut viral_marks = Vec::new();
    for d in 0..opts.days {
        let day = opts.start + Duration::days(d as i64);
        let per_comm = opts.hubs * opts.tweets_per_hub;
        let shared = (per_comm as f64 * shared_fraction(d)).round() as usize;
        for c in 0..n_comm {
            let g = cluster_of_community[c];
            let mask_rate = 0.3 - 0.2 * (leaning[c] + 1.0) / 2.0;
            for j in 0..per_comm {
                let author = &hubs[c][j % opts.hubs];
                let words: Vec<&String> = vocab[g].choose_multiple(&mut rng, WORDS_PER_TWEET).collect();
                let body = words.iter().map(|w| w.as_str()).collect::<Vec<_>>().join(" ");
                let mut text =
                    if j < shared { format!("{} covid {body}", phrases[j % PHRASES]) } else { format!("covid {body}") };
                if rng.random_bool(mask_rate) {
                    text.push_str(" mask");
                }
                if rng.random_bool(0.1) {
                    text.push_str(" vaccine");
                }
                let mut urls = Vec::new();
                if rng.random_bool(0.6) {
                    let domain = if rng.random_bool(0.05) { "bit.ly" } else { pick_domain(&mut rng, leaning[c]) };
                    urls.push(format!("https://{domain}/story/{}", rng.random_range(0..100_000)));
                }
                raw.push((at(day, 6 * 60 + (j * 10) as i64), author.clone(), text, None, urls));
            }
            if let (Some(v), Some(text)) = (&opts.viral, &viral_text) {
                if d == v.day && (g == v.clusters.0 || g == v.clusters.1) {
                    for i in 0..v.copies_per_community {
                        let author = hubs[c][i % opts.hubs].clone();
                        viral_marks.push(raw.len());
                        raw.push((at(day, 20 * 60 + i as i64), author, text.clone(), None, Vec::new()));
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[a].0.cmp(&raw[b].0).then(raw[a].1.cmp(&raw[b].1)).then(a.cmp(&b)));
    let mut rank = vec![0; raw.len()];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos;
    }
    let id = |pos: usize| format!("{:09}", pos + 1);
    let viral_tweet_ids = viral_marks.iter().map(|&i| id(rank[i])).collect();
    // shuffle the within-minute order away from generation order, then settle by time
    order.shuffle(&mut rng);
    order.sort_by_key(|&i| rank[i]);
    let records = order
        .into_iter()
        .map(|i| {
            let (created_at, author_id, text, retweeted_author_id, urls) = raw[i].clone();
            TweetRecord { tweet_id: id(rank[i]), author_id, created_at, text, retweeted_author_id, urls }
        })
        .collect();

    let end = opts.start + Duration::days(opts.days.max(1) as i64 - 1);
    SyntheticCorpus {
        records,
        window: Window::new(opts.start, end).expect("start precedes end"),
        split: at(opts.start + Duration::days(opts.baseline_days as i64), 0),
        community_of,
        cluster_of_community,
        leaning,
        hubs,
        viral_day: opts.viral.as_ref().map(|v| opts.start + Duration::days(v.day as i64)),
        viral_text,
        viral_tweet_ids,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let opts = SynthOptions {
            days: 5,
            viral: Some(ViralInjection { day: 3, clusters: (0, 1), copies_per_community: 2 }),
            ..SynthOptions::default()
        };
        let a = generate(&opts);
        assert_eq!(a.records, generate(&opts).records);
        let ids: BTreeSet<&str> = a.records.iter().map(|r| r.tweet_id.as_str()).collect();
        assert_eq!(ids.len(), a.records.len());
        assert!(a.records.windows(2).all(|w| w[0].created_at <= w[1].created_at));
        assert_eq!(a.viral_tweet_ids.len(), 2 * 6);
        let text = a.viral_text.as_deref().unwrap();
        for r in a.records.iter().filter(|r| a.viral_tweet_ids.contains(&r.tweet_id)) {
            assert_eq!(r.text, text);
            assert_eq!(Some(r.day()), a.viral_day);
        }
    }
}
