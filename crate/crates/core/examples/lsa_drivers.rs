//! For each flagged day, pulls topical tweets out of both clusters with
//! LSA and checks whether dropping the shared ones removes the burst.

use sentinel_core::pipeline::Runner;
use sentinel_core::synth::{generate, SynthOptions};

fn main() -> sentinel_core::Result<()> {
    let corpus = generate(&SynthOptions::default());
    let dir = std::env::temp_dir().join("sentinel-lsa-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("corpus.jsonl");
    sentinel_core::ingest::write_tweet_stream(&corpus.records, std::fs::File::create(&path)?)?;
    let cfg = corpus.config(&path, &dir);

    let mut run = Runner::new(&cfg);
    let (flagged, _) = run.flags()?;
    println!(
        "flagged: {:?}",
        flagged.iter().map(|f| (f.day, f.pair, (f.h * 100.0).round() / 100.0)).collect::<Vec<_>>()
    );
    for d in run.lsa()? {
        println!("\n{} clusters {:?}", d.day, d.pair);
        println!(
            "  leading singular values {:?}",
            d.cluster_a.singular_values.iter().map(|s| (s * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
        println!("  topical tweets: {} and {}", d.cluster_a.topical.len(), d.cluster_b.topical.len());
        println!("  shared across clusters: {}", d.common_topical.len());
        let planted = d.common_topical.iter().filter(|t| corpus.viral_tweet_ids.contains(*t)).count();
        println!("  of which planted: {planted} (planted total {})", corpus.viral_tweet_ids.len());
        println!(
            "  similarity {:?} -> {:?}; H {:?} -> {:?}; driver: {}",
            d.check.original_similarity,
            d.check.recomputed_similarity,
            d.check.original_h,
            d.check.recomputed_h,
            d.check.is_driver
        );
    }
    if let Some(text) = &corpus.viral_text {
        println!("\nplanted text: {text}");
    }
    Ok(())
}
