use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand};

use sentinel_core::community::{rand_index, restrict_to_common, z_rand, Partition};
use sentinel_core::config::PipelineConfig;
use sentinel_core::ingest::normalize_text;
use sentinel_core::pipeline::{self, coding_candidates, run_pipeline, write_sample_csv, Runner, Stage};
use sentinel_core::sentinel::Window;
use sentinel_core::similarity::pair_name;
use sentinel_core::stats::stratified_sample;
use sentinel_core::{Error, Result};

#[derive(Parser)]
#[command(name = "sentinel", version, about = "Sentinel-node monitoring of retweet communities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides for config keys; each flag matches the key of the same name.
#[derive(Args, Default)]
struct ConfigArgs {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    timeline: Option<String>,
    #[arg(long)]
    window_start: Option<String>,
    #[arg(long)]
    window_end: Option<String>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    sentinels_per_community: Option<String>,
    #[arg(long)]
    top_communities: Option<String>,
    #[arg(long)]
    min_count: Option<String>,
    #[arg(long)]
    clusters: Option<String>,
    #[arg(long)]
    linkage: Option<String>,
    #[arg(long)]
    burst_threshold: Option<String>,
    #[arg(long)]
    burst_inclusive: Option<String>,
    #[arg(long)]
    min_history: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    language_filter: Option<String>,
    #[arg(long)]
    lexicon_dir: Option<String>,
    #[arg(long)]
    stopwords: Option<String>,
    #[arg(long)]
    shorteners: Option<String>,
    #[arg(long)]
    anchor_domain: Option<String>,
    #[arg(long)]
    topics: Option<String>,
    #[arg(long)]
    lsa_vectors: Option<String>,
    #[arg(long)]
    match_threshold: Option<String>,
    #[arg(long)]
    accounts_per_day: Option<String>,
    #[arg(long)]
    contingency: Option<String>,
    #[arg(long)]
    coding: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    resume: Option<String>,
}

impl ConfigArgs {
    fn pairs(&self) -> [(&'static str, Option<&String>); 27] {
        [
            ("corpus", self.corpus.as_ref()),
            ("timeline", self.timeline.as_ref()),
            ("window_start", self.window_start.as_ref()),
            ("window_end", self.window_end.as_ref()),
            ("split", self.split.as_ref()),
            ("sentinels_per_community", self.sentinels_per_community.as_ref()),
            ("top_communities", self.top_communities.as_ref()),
            ("min_count", self.min_count.as_ref()),
            ("clusters", self.clusters.as_ref()),
            ("linkage", self.linkage.as_ref()),
            ("burst_threshold", self.burst_threshold.as_ref()),
            ("burst_inclusive", self.burst_inclusive.as_ref()),
            ("min_history", self.min_history.as_ref()),
            ("seed", self.seed.as_ref()),
            ("language_filter", self.language_filter.as_ref()),
            ("lexicon_dir", self.lexicon_dir.as_ref()),
            ("stopwords", self.stopwords.as_ref()),
            ("shorteners", self.shorteners.as_ref()),
            ("anchor_domain", self.anchor_domain.as_ref()),
            ("topics", self.topics.as_ref()),
            ("lsa_vectors", self.lsa_vectors.as_ref()),
            ("match_threshold", self.match_threshold.as_ref()),
            ("accounts_per_day", self.accounts_per_day.as_ref()),
            ("contingency", self.contingency.as_ref()),
            ("coding", self.coding.as_ref()),
            ("output_dir", self.output_dir.as_ref()),
            ("resume", self.resume.as_ref()),
        ]
    }

    /// Defaults, then the config file, then `SENTINEL_*` variables, then flags.
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => {
                let epoch = NaiveDate::default();
                PipelineConfig::new("", Window { start: epoch, end: epoch }, DateTime::<Utc>::default())
            }
        };
        cfg.apply_env(std::env::vars())?;
        for (key, value) in self.pairs() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse the corpus and report record counts; optionally print cleaned tokens.
    Ingest {
        #[arg(long)]
        tokens: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Build the retweet graph and keep its largest weak component.
    Graph {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Louvain communities of the graph.
    Communities {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Rand and z-Rand scores of two partition files over their common nodes.
    ComparePartitions { first: PathBuf, second: PathBuf },
    /// Sentinel roster of the largest communities.
    Sentinels {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Baseline domain matrix and first-component scores.
    Domains {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Cluster communities by score.
    Cluster {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Count corpus tweets matching each topic lexicon.
    Topics {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Topic rate tables.
    Rates {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Daily intercluster similarity series.
    Similarity {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Burst flags and ADF tests.
    Flag {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// LSA topical extraction and driver checks on flagged days.
    Lsa {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Chi-square and Krippendorff's alpha for the configured tables.
    Stats {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Full pipeline.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Stratified sample of topical sentinel tweets for manual coding.
    Sample {
        #[arg(long, default_value_t = 100)]
        per_stratum: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn stage_runner(cfg: &PipelineConfig, stage: Stage) -> Runner<'_> {
    Runner::for_stage(cfg, stage)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest { tokens, cfg } => {
            let cfg = cfg.resolve()?;
            let mut run = stage_runner(&cfg, Stage::Ingest);
            let inputs = run.inputs()?;
            println!("{} records, {} malformed lines skipped", inputs.records.len(), inputs.skipped);
            if tokens {
                let stdout = std::io::stdout();
                let mut out = stdout.lock();
                for r in &inputs.records {
                    use std::io::Write;
                    let doc = normalize_text(&r.text, &inputs.stopwords);
                    writeln!(out, "{}\t{}", r.tweet_id, doc.tokens.join(" "))?;
                }
            }
        }
        Command::Graph { cfg } => {
            let cfg = cfg.resolve()?;
            let mut run = stage_runner(&cfg, Stage::Graph);
            let g = run.graph()?;
            println!("{} nodes, {} arcs, total weight {}", g.node_count(), g.arc_count(), g.total_weight());
        }
        Command::Communities { cfg } => {
            let cfg = cfg.resolve()?;
            let mut run = stage_runner(&cfg, Stage::Communities);
            let count = run.partition()?.community_count();
            println!("{count} communities, modularity {:.6}", run.modularity()?);
        }
        Command::ComparePartitions { first, second } => {
            let a = Partition::read_from(BufReader::new(File::open(&first)?))?;
            let b = Partition::read_from(BufReader::new(File::open(&second)?))?;
            let (a, b) = restrict_to_common(&a, &b);
            println!("common nodes {}", a.node_count());
            println!("rand {:.6}", rand_index(&a, &b)?);
            match z_rand(&a, &b) {
                Ok(z) => println!("z_rand {z:.4}"),
                Err(e) => println!("z_rand undefined ({e})"),
            }
        }
        Command::Sentinels { cfg } => {
            let cfg = cfg.resolve()?;
            let mut run = stage_runner(&cfg, Stage::Sentinels);
            for c in &run.sentinels()?.communities {
                println!("community {} sentinels {} coverage {:.3}", c.label, c.sentinels.len(), c.coverage);
            }
        }
        Command::Domains { cfg } => {
            let cfg = cfg.resolve()?;
            let mut run = stage_runner(&cfg, Stage::Domains);
            for (label, score) in run.scores()? {
                println!("community {label} score {score:.6}");
            }
        }
        Command::Cluster { cfg } => {
            let cfg = cfg.resolve()?;
            let mut run = stage_runner(&cfg, Stage::Cluster);
            let c = run.clusters()?;
            for k in 0..c.cluster_count() {
                println!("cluster {k} centroid {:.6} members {:?}", c.centroids[k], c.members(k));
            }
        }
        Command::Topics { cfg } => {
            let cfg = cfg.resolve()?;
            let lexicons = pipeline::load_lexicons(cfg.lexicon_dir.as_deref())?;
            let mut run = stage_runner(&cfg, Stage::Ingest);
            let records: Vec<_> = run.inputs()?.timeline.iter().collect();
            for name in lexicons.names() {
                let n = lexicons.filter(name, &records)?.len();
                let parent = lexicons.get(name).and_then(|l| l.parent.clone()).unwrap_or_default();
                println!("{name}\tparent={parent}\tmatches={n}");
            }
        }
        Command::Rates { cfg } => {
            let cfg = cfg.resolve()?;
            let table = stage_runner(&cfg, Stage::Rates).rates()?;
            for t in &table.topics {
                println!("{}: {} communities, {} excluded", t.topic, t.rows.len(), t.excluded.len());
            }
        }
        Command::Similarity { cfg } => {
            let cfg = cfg.resolve()?;
            let mut run = stage_runner(&cfg, Stage::Similarity);
            for s in run.series()? {
                println!("pair {} valid days {}/{}", pair_name(s.pair), s.valid_values().len(), s.days.len());
            }
        }
        Command::Flag { cfg } => {
            let cfg = cfg.resolve()?;
            let (flagged, adf) = stage_runner(&cfg, Stage::Flag).flags()?;
            for f in &flagged {
                println!("flagged {} pair {} H {:.4}", f.day, pair_name(f.pair), f.h);
            }
            for (pair, r) in &adf {
                match r {
                    Some(r) => println!("{} {r}", pair_name(*pair)),
                    None => println!("{} ADF undefined", pair_name(*pair)),
                }
            }
        }
        Command::Lsa { cfg } => {
            let cfg = cfg.resolve()?;
            for d in stage_runner(&cfg, Stage::Lsa).lsa()? {
                println!(
                    "{} pair {}: {} common topical tweets, H {:?} -> {:?}, driver {}",
                    d.day,
                    pair_name(d.pair),
                    d.common_topical.len(),
                    d.check.original_h,
                    d.check.recomputed_h,
                    d.check.is_driver
                );
            }
        }
        Command::Stats { cfg } => {
            let cfg = cfg.resolve()?;
            let (chi, alpha) = stage_runner(&cfg, Stage::Stats).stats()?;
            if let Some(c) = chi {
                println!("chi-square {:.4} (df {}) p = {:.4e}", c.statistic, c.df, c.p_value);
            }
            if let Some(a) = alpha {
                println!("krippendorff alpha {a:.4}");
            }
        }
        Command::Run { cfg } => {
            let cfg = cfg.resolve()?;
            let report = run_pipeline(&cfg)?;
            println!(
                "{} records; graph {} nodes; {} communities (Q = {:.4}); {} sentinel communities",
                report.records,
                report.graph_nodes,
                report.communities,
                report.modularity,
                report.sentinels.communities.len()
            );
            for f in &report.flagged {
                println!("flagged {} pair {} H {:.4}", f.day, pair_name(f.pair), f.h);
            }
            println!("artifacts in {}", report.output_dir.display());
        }
        Command::Sample { per_stratum, cfg } => {
            let cfg = cfg.resolve()?;
            // every stage is upstream of the sampler, so all artifacts are reused
            let mut run = stage_runner(&cfg, Stage::Stats);
            let candidates = coding_candidates(&mut run)?;
            let sample = stratified_sample(&candidates, per_stratum, cfg.seed);
            let path = cfg.output_dir.join(pipeline::SAMPLE);
            write_sample_csv(&sample, BufWriter::new(File::create(&path)?))?;
            println!("{} of {} candidates written to {}", sample.len(), candidates.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Stage { .. }) {
                return ExitCode::from(2);
            }
            ExitCode::FAILURE
        }
    }
}
