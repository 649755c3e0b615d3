//! Community x domain link fractions from the baseline segment, the first
//! principal component score, and clustering of communities on it.

use sentinel_core::community::louvain;
use sentinel_core::domains::{cluster_scores, first_principal_component, Linkage, SignConvention};
use sentinel_core::graph::{build_retweet_graph, largest_component};
use sentinel_core::ingest::ShortenerList;
use sentinel_core::pipeline::{baseline_domain_matrix, sentinel_tweets};
use sentinel_core::sentinel::{select_sentinels, AcceptAll};
use sentinel_core::synth::{generate, SynthOptions, ANCHOR_DOMAIN};

fn main() -> sentinel_core::Result<()> {
    let corpus = generate(&SynthOptions::default());
    let graph = largest_component(&build_retweet_graph(&corpus.records))?;
    let partition = louvain(&graph, 7)?;
    let set = select_sentinels(&graph, &partition, 15, 9, &AcceptAll)?;

    let baseline = sentinel_tweets(&corpus.records, &set, |r| !r.is_retweet() && r.created_at < corpus.split);
    let matrix = baseline_domain_matrix(&baseline, &ShortenerList::new(["bit.ly"]), 3);
    println!("{} communities x {} domains", matrix.rows.len(), matrix.columns.len());

    let pc = first_principal_component(&matrix, &SignConvention::AnchorPositive(ANCHOR_DOMAIN.into()))?;
    let mut loadings: Vec<(&String, f64)> = pc.domains.iter().zip(pc.loadings.iter().copied()).collect();
    loadings.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("highest loadings: {:?}", &loadings[..3]);
    println!("lowest loadings:  {:?}", &loadings[loadings.len() - 3..]);

    let clusters = cluster_scores(&pc.score_pairs(), 3, Linkage::Centroid)?;
    let community_of_hub =
        |label| set.community(label).and_then(|c| corpus.community_of.get(&c.sentinels[0].0)).copied();
    for (label, score) in pc.score_pairs() {
        let planted = community_of_hub(label).unwrap();
        println!(
            "community {label:>2}: score {score:+.3}  cluster {}  planted leaning {:+.2}",
            clusters.cluster_of(label).unwrap(),
            corpus.leaning[planted]
        );
    }
    println!("cluster centroids: {:?}", clusters.centroids);
    Ok(())
}
