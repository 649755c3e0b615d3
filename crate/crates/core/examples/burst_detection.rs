//! Daily inter-cluster trigram similarity, burst scores and flagged days,
//! followed by a stationarity check of each series.

use sentinel_core::pipeline::Runner;
use sentinel_core::similarity::{adf_test, burst_scores, flag_days, FlagRule, SignificanceLevel};
use sentinel_core::synth::{generate, SynthOptions};

fn main() -> sentinel_core::Result<()> {
    let corpus = generate(&SynthOptions::default());
    let dir = std::env::temp_dir().join("sentinel-burst-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("corpus.jsonl");
    sentinel_core::ingest::write_tweet_stream(&corpus.records, std::fs::File::create(&path)?)?;
    let cfg = corpus.config(&path, &dir);

    let mut run = Runner::new(&cfg);
    let series = run.series()?.to_vec();
    let rule = FlagRule::default();
    for s in &series {
        let h = burst_scores(s, 7);
        println!("cluster pair {:?}", s.pair);
        for ((day, v), h) in s.days.iter().zip(&s.values).zip(&h) {
            if let (Some(v), Some(h)) = (v, h) {
                let mark = if rule.flags(*h) { "  <- burst" } else { "" };
                println!("  {day}  similarity {v:.4}  H {h:+.2}{mark}");
            }
        }
        println!("  flagged: {:?}", flag_days(s, &h, rule));
        match adf_test(&s.valid_values(), SignificanceLevel::Five) {
            Ok(adf) => println!("  {adf}"),
            Err(e) => println!("  ADF not available: {e}"),
        }
    }
    Ok(())
}
