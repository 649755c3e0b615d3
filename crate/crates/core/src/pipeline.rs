//! End-to-end run: every stage writes its artifact into the output
//! directory, and with `resume` set a stage whose artifact already exists is
//! loaded instead of recomputed.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use crate::community::{louvain_with, modularity, CommunityLabel, LouvainOptions, Partition};
use crate::config::PipelineConfig;
use crate::domains::{
    cluster_scores, clusters_from_scores, domain_frequency_matrix, first_principal_component, read_scores_csv,
    write_scores_csv, ClusterAssignment, DomainMatrix, SignConvention,
};
use crate::error::{Error, Result};
use crate::graph::{build_retweet_graph, largest_component, RetweetGraph};
use crate::ingest::{normalize_text, parse_tweet_stream, ShortenerList, StopWords, TokenDoc, TweetRecord};
use crate::lsa::{confirm_drivers, lsa_topical_tweets, TopicalExtraction};
use crate::sentinel::{
    activity, select_sentinels, AcceptAll, AsciiLanguageFilter, CommunityFilter, SentinelSet, Window,
};
use crate::similarity::{
    adf_test, burst_scores, community_day_docs, flag_days, pair_name, read_series_csv, similarity_series,
    write_series_csv, AdfResult, DayTweet, FlagRule, SignificanceLevel, SimilaritySeries,
};
use crate::stats::{chi_square, krippendorff_alpha, ChiSquareResult, CodingMatrix, ContingencyTable, SampleCandidate};
use crate::topics::{rate_table, LexiconSet, RateTable};

pub const CONFIG: &str = "config.txt";
pub const INGEST: &str = "ingest.txt";
pub const EDGES: &str = "edges.txt";
pub const PARTITION: &str = "partition.txt";
pub const ROSTER: &str = "roster.txt";
pub const DOMAIN_MATRIX: &str = "domain_matrix.csv";
pub const LOADINGS: &str = "loadings.csv";
pub const SCORES: &str = "scores.csv";
pub const CLUSTERS: &str = "clusters.csv";
pub const RATES: &str = "rates.csv";
pub const DAILY_RATES: &str = "daily_rates.csv";
pub const SIMILARITY: &str = "similarity.csv";
pub const FLAGS: &str = "flags.csv";
pub const ADF: &str = "adf.txt";
pub const LSA: &str = "lsa.json";
pub const STATS: &str = "stats.txt";
pub const SAMPLE: &str = "sample.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlaggedDay {
    pub pair: (usize, usize),
    pub day: NaiveDate,
    pub h: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub records: usize,
    pub skipped: usize,
    pub graph_nodes: usize,
    pub graph_arcs: usize,
    pub communities: usize,
    pub modularity: f64,
    pub sentinels: SentinelSet,
    pub scores: Vec<(CommunityLabel, f64)>,
    pub clusters: ClusterAssignment,
    pub series: Vec<SimilaritySeries>,
    pub flagged: Vec<FlaggedDay>,
    pub drivers: Vec<TopicalExtraction>,
    pub adf: Vec<PairAdf>,
    pub chi_square: Option<ChiSquareResult>,
    pub alpha: Option<f64>,
    pub output_dir: PathBuf,
}

fn in_stage<T>(stage: &'static str, path: &Path, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| Error::Stage { stage, path: path.to_path_buf(), source: Box::new(e) })
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    f(&mut out)?;
    out.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

/// Reads a JSON Lines corpus from disk.
pub fn ingest_file(path: &Path) -> Result<(Vec<TweetRecord>, usize)> {
    let corpus = parse_tweet_stream(open(path)?)?;
    Ok((corpus.records, corpus.skipped))
}

pub fn load_stopwords(path: Option<&Path>) -> Result<StopWords> {
    Ok(match path {
        Some(p) => StopWords::parse(&fs::read_to_string(p)?),
        None => StopWords::default(),
    })
}

pub fn load_shorteners(path: Option<&Path>) -> Result<ShortenerList> {
    Ok(match path {
        Some(p) => ShortenerList::parse(&fs::read_to_string(p)?),
        None => ShortenerList::default(),
    })
}

pub fn load_lexicons(dir: Option<&Path>) -> Result<LexiconSet> {
    match dir {
        Some(d) => LexiconSet::load_dir(d),
        None => Ok(LexiconSet::builtin()),
    }
}

/// Sentinel tweets grouped by community, optionally restricted by a predicate.
pub fn sentinel_tweets<'a>(
    records: &'a [TweetRecord],
    sentinels: &SentinelSet,
    keep: impl Fn(&TweetRecord) -> bool,
) -> BTreeMap<CommunityLabel, Vec<&'a TweetRecord>> {
    let community_of = sentinels.account_community();
    let mut out: BTreeMap<CommunityLabel, Vec<&TweetRecord>> =
        sentinels.labels().into_iter().map(|l| (l, Vec::new())).collect();
    for r in records {
        if let Some(&l) = community_of.get(&r.author_id) {
            if keep(r) {
                out.entry(l).or_default().push(r);
            }
        }
    }
    out
}

/// Domain matrix over communities that have at least one retained link.
pub fn baseline_domain_matrix(
    by_community: &BTreeMap<CommunityLabel, Vec<&TweetRecord>>,
    shorteners: &ShortenerList,
    min_count: u64,
) -> DomainMatrix {
    let full = domain_frequency_matrix(by_community.iter().map(|(&l, v)| (l, v.clone())), shorteners, min_count);
    if full.empty_rows.is_empty() {
        return full;
    }
    let empty: BTreeSet<CommunityLabel> = full.empty_rows.iter().copied().collect();
    let mut kept = domain_frequency_matrix(
        by_community.iter().filter(|(l, _)| !empty.contains(l)).map(|(&l, v)| (l, v.clone())),
        shorteners,
        min_count,
    );
    kept.empty_rows = full.empty_rows;
    kept
}

/// Cleaned sentinel tweets inside the window.
pub fn day_tweets(
    records: &[TweetRecord],
    sentinels: &SentinelSet,
    window: Window,
    stopwords: &StopWords,
) -> Vec<DayTweet> {
    let community_of = sentinels.account_community();
    records
        .iter()
        .filter(|r| window.contains(r.day()))
        .filter_map(|r| {
            community_of.get(&r.author_id).map(|&community| DayTweet {
                tweet_id: r.tweet_id.clone(),
                community,
                day: r.day(),
                doc: normalize_text(&r.text, stopwords),
            })
        })
        .collect()
}

/// LSA extraction and removal check for one flagged day of a cluster pair.
#[allow(clippy::too_many_arguments)]
pub fn examine_flag(
    series: &SimilaritySeries,
    day: NaiveDate,
    tweets: &[DayTweet],
    clusters: &ClusterAssignment,
    vectors: usize,
    match_threshold: f64,
    min_history: usize,
    rule: FlagRule,
) -> Result<TopicalExtraction> {
    let (a, b) = series.pair;
    let of_cluster = |c: usize| -> Vec<&DayTweet> {
        tweets.iter().filter(|t| t.day == day && clusters.cluster_of(t.community) == Some(c)).collect()
    };
    let (ta, tb) = (of_cluster(a), of_cluster(b));
    let view_a: Vec<(&str, &TokenDoc)> = ta.iter().map(|t| (t.tweet_id.as_str(), &t.doc)).collect();
    let view_b: Vec<(&str, &TokenDoc)> = tb.iter().map(|t| (t.tweet_id.as_str(), &t.doc)).collect();
    let ext_a = lsa_topical_tweets(&view_a, vectors)?;
    let ext_b = lsa_topical_tweets(&view_b, vectors)?;
    let check = confirm_drivers(series, day, &ta, &tb, &ext_a, &ext_b, match_threshold, min_history, rule)?;
    Ok(TopicalExtraction {
        day,
        pair: (a, b),
        common_topical: check.common_a.union(&check.common_b).cloned().collect(),
        cluster_a: ext_a,
        cluster_b: ext_b,
        check,
    })
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Graph,
    Communities,
    Sentinels,
    Domains,
    Cluster,
    Rates,
    Similarity,
    Flag,
    Lsa,
    Stats,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Graph => "graph",
            Stage::Communities => "communities",
            Stage::Sentinels => "sentinels",
            Stage::Domains => "domains",
            Stage::Cluster => "cluster",
            Stage::Rates => "rates",
            Stage::Similarity => "similarity",
            Stage::Flag => "flag",
            Stage::Lsa => "lsa",
            Stage::Stats => "stats",
        }
    }
}

/// Parsed inputs shared by the stages.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub records: Vec<TweetRecord>,
    pub skipped: usize,
    pub timeline: Vec<TweetRecord>,
    pub timeline_skipped: usize,
    pub stopwords: StopWords,
    pub shorteners: ShortenerList,
}

/// Runs stages on demand, memoizing their outputs. Stages with consumers
/// downstream load their artifact instead of recomputing when reuse is on
/// and the artifact exists; the forced stage is always recomputed.
pub struct Runner<'c> {
    cfg: &'c PipelineConfig,
    reuse: bool,
    force: Option<Stage>,
    inputs: Option<Inputs>,
    graph: Option<RetweetGraph>,
    partition: Option<Partition>,
    sentinels: Option<SentinelSet>,
    scores: Option<Vec<(CommunityLabel, f64)>>,
    clusters: Option<ClusterAssignment>,
    tweets: Option<Vec<DayTweet>>,
    series: Option<Vec<SimilaritySeries>>,
    flagged: Option<Vec<FlaggedDay>>,
}

impl<'c> Runner<'c> {
    /// Runner for a full run: reuse follows the config's `resume` flag.
    pub fn new(cfg: &'c PipelineConfig) -> Self {
        Runner {
            cfg,
            reuse: cfg.resume,
            force: None,
            inputs: None,
            graph: None,
            partition: None,
            sentinels: None,
            scores: None,
            clusters: None,
            tweets: None,
            series: None,
            flagged: None,
        }
    }

    /// Runner for a single stage: upstream artifacts are reused when present.
    pub fn for_stage(cfg: &'c PipelineConfig, stage: Stage) -> Self {
        Runner { reuse: true, force: Some(stage), ..Runner::new(cfg) }
    }

    pub fn config(&self) -> &PipelineConfig {
        self.cfg
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn reusable(&self, stage: Stage, name: &str) -> bool {
        self.reuse && self.force != Some(stage) && self.artifact(name).exists()
    }

    fn window(&self) -> Result<Window> {
        self.cfg.window()
    }

    pub fn inputs(&mut self) -> Result<&Inputs> {
        if self.inputs.is_none() {
            let cfg = self.cfg;
            fs::create_dir_all(&cfg.output_dir)?;
            let (records, skipped) = in_stage("ingest", &cfg.corpus, || ingest_file(&cfg.corpus))?;
            let (timeline, timeline_skipped) = match &cfg.timeline {
                Some(p) if p != &cfg.corpus => in_stage("ingest", p, || ingest_file(p))?,
                _ => (records.clone(), 0),
            };
            let builtin = Path::new("<builtin>");
            let stopwords = in_stage("ingest", cfg.stopwords.as_deref().unwrap_or(builtin), || {
                load_stopwords(cfg.stopwords.as_deref())
            })?;
            let shorteners = in_stage("ingest", cfg.shorteners.as_deref().unwrap_or(builtin), || {
                load_shorteners(cfg.shorteners.as_deref())
            })?;
            let path = self.artifact(INGEST);
            in_stage("ingest", &path, || {
                fs::write(
                    &path,
                    format!(
                        "corpus_records {}\ncorpus_skipped {skipped}\ntimeline_records {}\ntimeline_skipped {timeline_skipped}\n",
                        records.len(),
                        timeline.len()
                    ),
                )?;
                Ok(())
            })?;
            self.inputs = Some(Inputs { records, skipped, timeline, timeline_skipped, stopwords, shorteners });
        }
        Ok(self.inputs.as_ref().expect("just set"))
    }

    pub fn graph(&mut self) -> Result<&RetweetGraph> {
        if self.graph.is_none() {
            let path = self.artifact(EDGES);
            let g = if self.reusable(Stage::Graph, EDGES) {
                in_stage("graph", &path, || RetweetGraph::read_edge_list(open(&path)?))?
            } else {
                let records = &self.inputs()?.records;
                in_stage("graph", &path, || {
                    let g = largest_component(&build_retweet_graph(records))?;
                    write_with(&path, |w| g.write_edge_list(w))?;
                    Ok(g)
                })?
            };
            self.graph = Some(g);
        }
        Ok(self.graph.as_ref().expect("just set"))
    }

    pub fn partition(&mut self) -> Result<&Partition> {
        if self.partition.is_none() {
            let path = self.artifact(PARTITION);
            let p = if self.reusable(Stage::Communities, PARTITION) {
                in_stage("communities", &path, || Partition::read_from(open(&path)?))?
            } else {
                let seed = self.cfg.seed;
                let graph = self.graph()?;
                in_stage("communities", &path, || {
                    let run = louvain_with(graph, LouvainOptions { seed, ..LouvainOptions::default() })?;
                    write_with(&path, |w| run.partition.write_to(w))?;
                    Ok(run.partition)
                })?
            };
            self.partition = Some(p);
        }
        Ok(self.partition.as_ref().expect("just set"))
    }

    pub fn modularity(&mut self) -> Result<f64> {
        self.graph()?;
        self.partition()?;
        let (g, p) = (self.graph.as_ref().expect("loaded"), self.partition.as_ref().expect("loaded"));
        in_stage("communities", &self.artifact(PARTITION), || modularity(g, p))
    }

    pub fn sentinels(&mut self) -> Result<&SentinelSet> {
        if self.sentinels.is_none() {
            let path = self.artifact(ROSTER);
            let s = if self.reusable(Stage::Sentinels, ROSTER) {
                in_stage("sentinels", &path, || SentinelSet::read_roster(open(&path)?))?
            } else {
                self.graph()?;
                self.partition()?;
                self.inputs()?;
                let cfg = self.cfg;
                let graph = self.graph.as_ref().expect("loaded");
                let partition = self.partition.as_ref().expect("loaded");
                let records = &self.inputs.as_ref().expect("loaded").records;
                in_stage("sentinels", &path, || {
                    let language;
                    let filter: &dyn CommunityFilter = if cfg.language_filter {
                        language = AsciiLanguageFilter::from_records(records, cfg.seed);
                        &language
                    } else {
                        &AcceptAll
                    };
                    let s =
                        select_sentinels(graph, partition, cfg.sentinels_per_community, cfg.top_communities, filter)?;
                    write_with(&path, |w| s.write_roster(w))?;
                    Ok(s)
                })?
            };
            self.sentinels = Some(s);
        }
        Ok(self.sentinels.as_ref().expect("just set"))
    }

    /// Linked-domain scores of the baseline segment.
    pub fn scores(&mut self) -> Result<&[(CommunityLabel, f64)]> {
        if self.scores.is_none() {
            let path = self.artifact(SCORES);
            let scores = if self.reusable(Stage::Domains, SCORES) {
                in_stage("domains", &path, || {
                    Ok(read_scores_csv(open(&path)?)?.into_iter().map(|(l, s, _)| (l, s)).collect())
                })?
            } else {
                self.sentinels()?;
                self.inputs()?;
                let cfg = self.cfg;
                let window = self.window()?;
                let sentinels = self.sentinels.as_ref().expect("loaded");
                let inputs = self.inputs.as_ref().expect("loaded");
                let (matrix_path, loadings_path) = (self.artifact(DOMAIN_MATRIX), self.artifact(LOADINGS));
                in_stage("domains", &path, || {
                    let baseline = sentinel_tweets(&inputs.timeline, sentinels, |r| {
                        window.contains(r.day()) && r.created_at < cfg.split
                    });
                    let matrix = baseline_domain_matrix(&baseline, &inputs.shorteners, cfg.min_count);
                    write_with(&matrix_path, |w| matrix.write_csv(w))?;
                    let sign = match &cfg.anchor_domain {
                        Some(d) => SignConvention::AnchorPositive(d.clone()),
                        None => SignConvention::LargestLoadingPositive,
                    };
                    let pc = first_principal_component(&matrix, &sign)?;
                    write_with(&loadings_path, |w| pc.write_loadings_csv(w))?;
                    let scores = pc.score_pairs();
                    write_with(&path, |w| write_scores_csv(&scores, None, w))?;
                    Ok(scores)
                })?
            };
            self.scores = Some(scores);
        }
        Ok(self.scores.as_deref().expect("just set"))
    }

    pub fn clusters(&mut self) -> Result<&ClusterAssignment> {
        if self.clusters.is_none() {
            let path = self.artifact(CLUSTERS);
            let c = if self.reusable(Stage::Cluster, CLUSTERS) {
                in_stage("cluster", &path, || clusters_from_scores(&read_scores_csv(open(&path)?)?))?
            } else {
                let (k, linkage) = (self.cfg.clusters, self.cfg.linkage);
                let scores = self.scores()?;
                in_stage("cluster", &path, || {
                    let c = cluster_scores(scores, k, linkage)?;
                    write_with(&path, |w| write_scores_csv(scores, Some(&c), w))?;
                    Ok(c)
                })?
            };
            self.clusters = Some(c);
        }
        Ok(self.clusters.as_ref().expect("just set"))
    }

    /// Topic rate tables; always regenerated.
    pub fn rates(&mut self) -> Result<RateTable> {
        self.clusters()?;
        self.sentinels()?;
        self.inputs()?;
        let cfg = self.cfg;
        let window = self.window()?;
        let (rates_path, daily_path) = (self.artifact(RATES), self.artifact(DAILY_RATES));
        let sentinels = self.sentinels.as_ref().expect("loaded");
        let clusters = self.clusters.as_ref().expect("loaded");
        let timeline = &self.inputs.as_ref().expect("loaded").timeline;
        in_stage("rates", &rates_path, || {
            let lexicons = load_lexicons(cfg.lexicon_dir.as_deref())?;
            let topics: Vec<&str> = if cfg.topics.is_empty() {
                lexicons.names().collect()
            } else {
                cfg.topics.iter().map(String::as_str).collect()
            };
            let ledger = activity(timeline, sentinels, window);
            let refs: Vec<&TweetRecord> = timeline.iter().collect();
            let table = rate_table(
                &refs,
                &sentinels.account_community(),
                &clusters.assignment,
                &lexicons,
                &topics,
                &ledger,
                cfg.accounts_per_day,
            )?;
            write_with(&rates_path, |w| table.write_rates_csv(w))?;
            write_with(&daily_path, |w| table.write_daily_csv(w))?;
            Ok(table)
        })
    }

    /// Cleaned sentinel tweets of the window.
    pub fn tweets(&mut self) -> Result<&[DayTweet]> {
        if self.tweets.is_none() {
            self.sentinels()?;
            self.inputs()?;
            let window = self.window()?;
            let inputs = self.inputs.as_ref().expect("loaded");
            let t = day_tweets(&inputs.timeline, self.sentinels.as_ref().expect("loaded"), window, &inputs.stopwords);
            self.tweets = Some(t);
        }
        Ok(self.tweets.as_deref().expect("just set"))
    }

    pub fn series(&mut self) -> Result<&[SimilaritySeries]> {
        if self.series.is_none() {
            let path = self.artifact(SIMILARITY);
            let s = if self.reusable(Stage::Similarity, SIMILARITY) {
                in_stage("similarity", &path, || read_series_csv(open(&path)?))?
            } else {
                self.clusters()?;
                self.tweets()?;
                let cfg = self.cfg;
                let window = self.window()?;
                let clusters = self.clusters.as_ref().expect("loaded");
                let tweets = self.tweets.as_ref().expect("loaded");
                in_stage("similarity", &path, || {
                    let series = similarity_series(&community_day_docs(tweets), clusters, window);
                    write_with(&path, |w| write_series_csv(&series, cfg.min_history, cfg.flag_rule(), w))?;
                    Ok(series)
                })?
            };
            self.series = Some(s);
        }
        Ok(self.series.as_deref().expect("just set"))
    }

    /// Flagged days and per-pair ADF results; always regenerated.
    pub fn flags(&mut self) -> Result<(Vec<FlaggedDay>, Vec<PairAdf>)> {
        let (min_history, rule) = (self.cfg.min_history, self.cfg.flag_rule());
        let (flags_path, adf_path) = (self.artifact(FLAGS), self.artifact(ADF));
        let series = self.series()?;
        let mut flagged = Vec::new();
        for s in series {
            let h = burst_scores(s, min_history);
            for day in flag_days(s, &h, rule) {
                let t = s.position(day).expect("flagged day is in the series");
                flagged.push(FlaggedDay { pair: s.pair, day, h: h[t].expect("flagged days have a score") });
            }
        }
        in_stage("flag", &flags_path, || {
            write_with(&flags_path, |w| {
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record(["day", "pair", "H"])?;
                for f in &flagged {
                    csv.write_record([f.day.to_string(), pair_name(f.pair), f.h.to_string()])?;
                }
                csv.flush()?;
                Ok(())
            })
        })?;
        let adf: Vec<PairAdf> =
            series.iter().map(|s| (s.pair, adf_test(&s.valid_values(), SignificanceLevel::Five).ok())).collect();
        in_stage("flag", &adf_path, || {
            write_with(&adf_path, |w| {
                for (pair, r) in &adf {
                    match r {
                        Some(r) => writeln!(w, "{} {r}", pair_name(*pair))?,
                        None => writeln!(w, "{} undefined", pair_name(*pair))?,
                    }
                }
                Ok(())
            })
        })?;
        self.flagged = Some(flagged.clone());
        Ok((flagged, adf))
    }

    /// LSA driver checks for every flagged day; always regenerated.
    pub fn lsa(&mut self) -> Result<Vec<TopicalExtraction>> {
        if self.flagged.is_none() {
            self.flags()?;
        }
        self.clusters()?;
        self.tweets()?;
        let cfg = self.cfg;
        let path = self.artifact(LSA);
        let flagged = self.flagged.as_ref().expect("loaded");
        let series = self.series.as_ref().expect("loaded");
        let tweets = self.tweets.as_ref().expect("loaded");
        let clusters = self.clusters.as_ref().expect("loaded");
        in_stage("lsa", &path, || {
            let mut drivers = Vec::new();
            for f in flagged {
                let s = series.iter().find(|s| s.pair == f.pair).expect("pair has a series");
                drivers.push(examine_flag(
                    s,
                    f.day,
                    tweets,
                    clusters,
                    cfg.lsa_vectors,
                    cfg.match_threshold,
                    cfg.min_history,
                    cfg.flag_rule(),
                )?);
            }
            write_with(&path, |w| {
                serde_json::to_writer_pretty(&mut *w, &drivers)?;
                writeln!(w)?;
                Ok(())
            })?;
            Ok(drivers)
        })
    }

    /// Chi-square and alpha for the configured tables; always regenerated.
    pub fn stats(&mut self) -> Result<(Option<ChiSquareResult>, Option<f64>)> {
        let cfg = self.cfg;
        fs::create_dir_all(&cfg.output_dir)?;
        let chi = match &cfg.contingency {
            Some(p) => Some(in_stage("stats", p, || chi_square(&ContingencyTable::read_csv(open(p)?)?))?),
            None => None,
        };
        let alpha = match &cfg.coding {
            Some(p) => Some(in_stage("stats", p, || krippendorff_alpha(&CodingMatrix::read_csv(open(p)?)?))?),
            None => None,
        };
        let path = self.artifact(STATS);
        in_stage("stats", &path, || {
            write_with(&path, |w| {
                match &chi {
                    Some(c) => writeln!(w, "chi_square {} df {} p {:e} n {}", c.statistic, c.df, c.p_value, c.n)?,
                    None => writeln!(w, "chi_square not requested")?,
                }
                match alpha {
                    Some(a) => writeln!(w, "krippendorff_alpha {a}")?,
                    None => writeln!(w, "krippendorff_alpha not requested")?,
                }
                Ok(())
            })
        })?;
        Ok((chi, alpha))
    }
}

pub type PairAdf = ((usize, usize), Option<AdfResult>);

/// Runs every stage in order and collects the results.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    in_stage("config", Path::new(CONFIG), || cfg.validate())?;
    fs::create_dir_all(&cfg.output_dir)?;
    let config_path = cfg.output_dir.join(CONFIG);
    in_stage("config", &config_path, || Ok(fs::write(&config_path, cfg.serialize())?))?;

    let mut run = Runner::new(cfg);
    let (records, skipped) = {
        let i = run.inputs()?;
        (i.records.len(), i.skipped)
    };
    let (graph_nodes, graph_arcs) = {
        let g = run.graph()?;
        (g.node_count(), g.arc_count())
    };
    let communities = run.partition()?.community_count();
    let modularity = run.modularity()?;
    let sentinels = run.sentinels()?.clone();
    let scores = run.scores()?.to_vec();
    let clusters = run.clusters()?.clone();
    run.rates()?;
    let series = run.series()?.to_vec();
    let (flagged, adf) = run.flags()?;
    let drivers = run.lsa()?;
    let (chi_square, alpha) = run.stats()?;
    Ok(PipelineReport {
        records,
        skipped,
        graph_nodes,
        graph_arcs,
        communities,
        modularity,
        sentinels,
        scores,
        clusters,
        series,
        flagged,
        drivers,
        adf,
        chi_square,
        alpha,
        output_dir: cfg.output_dir.clone(),
    })
}

/// Topical sentinel tweets of the window as coding candidates, one per
/// (tweet, topic) match.
pub fn coding_candidates(run: &mut Runner<'_>) -> Result<Vec<SampleCandidate>> {
    run.clusters()?;
    run.sentinels()?;
    run.inputs()?;
    let cfg = run.config();
    let window = cfg.window()?;
    let lexicons = load_lexicons(cfg.lexicon_dir.as_deref())?;
    let topics: Vec<String> =
        if cfg.topics.is_empty() { lexicons.names().map(str::to_string).collect() } else { cfg.topics.clone() };
    let community_of = run.sentinels.as_ref().expect("loaded").account_community();
    let clusters = run.clusters.as_ref().expect("loaded");
    let timeline: Vec<&TweetRecord> =
        run.inputs.as_ref().expect("loaded").timeline.iter().filter(|r| window.contains(r.day())).collect();
    let mut out = Vec::new();
    for topic in &topics {
        for r in lexicons.filter(topic, &timeline)? {
            let community = community_of[&r.author_id];
            if let Some(cluster) = clusters.cluster_of(community) {
                out.push(SampleCandidate { tweet_id: r.tweet_id.clone(), cluster, community, topic: topic.clone() });
            }
        }
    }
    Ok(out)
}

pub fn write_sample_csv<W: Write>(sample: &[SampleCandidate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tweet_id", "cluster", "community", "topic"])?;
    for c in sample {
        w.write_record([c.tweet_id.clone(), c.cluster.to_string(), c.community.to_string(), c.topic.clone()])?;
    }
    w.flush()?;
    Ok(())
}
