//! Per-capita topic rates of each sentinel community and daily cluster
//! rates, with the built-in lexicons.

use std::collections::BTreeMap;

use sentinel_core::community::louvain;
use sentinel_core::domains::{cluster_scores, first_principal_component, Linkage, SignConvention};
use sentinel_core::graph::{build_retweet_graph, largest_component};
use sentinel_core::ingest::ShortenerList;
use sentinel_core::pipeline::{baseline_domain_matrix, sentinel_tweets};
use sentinel_core::sentinel::{activity, select_sentinels, AcceptAll};
use sentinel_core::synth::{generate, SynthOptions, ANCHOR_DOMAIN};
use sentinel_core::topics::{rate_table, LexiconSet};

fn main() -> sentinel_core::Result<()> {
    let corpus = generate(&SynthOptions::default());
    let graph = largest_component(&build_retweet_graph(&corpus.records))?;
    let set = select_sentinels(&graph, &louvain(&graph, 7)?, 15, 9, &AcceptAll)?;
    let baseline = sentinel_tweets(&corpus.records, &set, |r| !r.is_retweet() && r.created_at < corpus.split);
    let matrix = baseline_domain_matrix(&baseline, &ShortenerList::new(["bit.ly"]), 3);
    let pc = first_principal_component(&matrix, &SignConvention::AnchorPositive(ANCHOR_DOMAIN.into()))?;
    let clusters = cluster_scores(&pc.score_pairs(), 3, Linkage::Centroid)?;

    let lexicons = LexiconSet::builtin();
    let topics: Vec<&str> = lexicons.names().collect();
    let ledger = activity(&corpus.records, &set, corpus.window);
    let records: Vec<_> = corpus.records.iter().filter(|r| !r.is_retweet()).collect();
    let table =
        rate_table(&records, &set.account_community(), &clusters.assignment, &lexicons, &topics, &ledger, 15.0)?;

    for t in &table.topics {
        let by_cluster: BTreeMap<usize, u64> = t.rows.iter().fold(BTreeMap::new(), |mut m, r| {
            *m.entry(clusters.cluster_of(r.community).unwrap()).or_insert(0) += r.count;
            m
        });
        let top = t.rows.iter().max_by(|a, b| a.per_capita.total_cmp(&b.per_capita)).unwrap();
        println!(
            "{:<16} tweets per cluster {:?}; highest per-capita rate {:.3} in community {}",
            t.topic, by_cluster, top.per_capita, top.community
        );
    }

    let mut daily = Vec::new();
    table.write_daily_csv(&mut daily)?;
    println!("\ndaily rates, first lines:");
    for line in String::from_utf8_lossy(&daily).lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}
