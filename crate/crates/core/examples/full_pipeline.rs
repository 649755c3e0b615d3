//! Generates the bundled synthetic corpus, runs every stage and prints the
//! flagged days with their LSA driver checks.
//!
//! cargo run --example full_pipeline [output-dir]

use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use sentinel_core::ingest::write_tweet_stream;
use sentinel_core::pipeline::run_pipeline;
use sentinel_core::synth::{generate, SynthOptions};

fn main() -> sentinel_core::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sentinel-full-pipeline"));
    std::fs::create_dir_all(&out)?;
    let corpus = generate(&SynthOptions::default());
    let path = out.join("corpus.jsonl");
    write_tweet_stream(&corpus.records, BufWriter::new(File::create(&path)?))?;

    let cfg = corpus.config(&path, &out);
    let started = Instant::now();
    let report = run_pipeline(&cfg)?;
    println!("{} records, {} skipped", report.records, report.skipped);
    println!(
        "graph: {} nodes, {} arcs; {} communities, Q = {:.4}",
        report.graph_nodes, report.graph_arcs, report.communities, report.modularity
    );
    for (label, score) in &report.scores {
        println!("community {label:>2}  score {score:+.4}  cluster {:?}", report.clusters.cluster_of(*label));
    }
    for s in &report.series {
        let valid = s.values.iter().flatten().count();
        println!("pair {:?}: similarity on {valid} of {} days", s.pair, s.days.len());
    }
    for f in &report.flagged {
        println!("flagged {} pair {:?}  H = {:.2}", f.day, f.pair, f.h);
    }
    for d in &report.drivers {
        println!(
            "{} {:?}: {} common topical tweets, H {:?} -> {:?}, driver = {}",
            d.day,
            d.pair,
            d.common_topical.len(),
            d.check.original_h,
            d.check.recomputed_h,
            d.check.is_driver
        );
    }
    println!("viral ids: {}", corpus.viral_tweet_ids.len());
    println!("finished in {:.2?}; artifacts in {}", started.elapsed(), out.display());
    Ok(())
}
