//! Builds the weighted retweet graph of the synthetic corpus and keeps its
//! largest weakly connected component.

use sentinel_core::graph::{build_retweet_graph, largest_component};
use sentinel_core::synth::{generate, SynthOptions};

fn main() -> sentinel_core::Result<()> {
    let corpus = generate(&SynthOptions::default());
    let full = build_retweet_graph(&corpus.records);
    let lcc = largest_component(&full)?;
    println!("full graph: {} nodes, {} arcs, weight {}", full.node_count(), full.arc_count(), full.total_weight());
    println!("components: {}", full.weak_components().len());
    println!("largest:    {} nodes, {} arcs", lcc.node_count(), lcc.arc_count());

    // the most retweeted accounts are the sources with the largest in-weight
    let mut ranked: Vec<(usize, u64)> = (0..lcc.node_count()).map(|i| (i, lcc.in_weight(i))).collect();
    ranked.sort_by_key(|&(_, w)| std::cmp::Reverse(w));
    for (i, w) in ranked.iter().take(5) {
        println!("  {} retweeted {w} times", lcc.node_ids()[*i]);
    }

    let mut edges = Vec::new();
    lcc.write_edge_list(&mut edges)?;
    println!("\nedge list, first lines:");
    for line in String::from_utf8_lossy(&edges).lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
