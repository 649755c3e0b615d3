//! Louvain on the synthetic retweet graph, scored against the planted
//! communities and across seeds with the Rand index and z-Rand.

use sentinel_core::community::{
    louvain_with, modularity, rand_index, restrict_to_common, z_rand, LouvainOptions, Partition,
};
use sentinel_core::graph::{build_retweet_graph, largest_component};
use sentinel_core::synth::{generate, SynthOptions};

fn main() -> sentinel_core::Result<()> {
    let corpus = generate(&SynthOptions::default());
    let graph = largest_component(&build_retweet_graph(&corpus.records))?;

    let run = louvain_with(&graph, LouvainOptions { seed: 1, ..LouvainOptions::default() })?;
    println!("seed 1: {} communities, Q = {:.4}", run.partition.community_count(), run.modularity);
    println!("modularity after each level: {:?}", run.level_modularity);

    let planted = Partition::from_assignment(corpus.community_of.iter().map(|(a, &c)| (a.clone(), c as u32)));
    let (found, truth) = restrict_to_common(&run.partition, &planted);
    println!(
        "planted partition Q = {:.4}",
        modularity(&graph, &planted.restrict(graph.node_ids().iter().map(String::as_str)))?
    );
    println!("vs planted: Rand {:.4}, z-Rand {:.1}", rand_index(&found, &truth)?, z_rand(&found, &truth)?);

    let other = louvain_with(&graph, LouvainOptions { seed: 2, ..LouvainOptions::default() })?;
    println!(
        "seed 1 vs seed 2: Rand {:.4}, z-Rand {:.1}",
        rand_index(&run.partition, &other.partition)?,
        z_rand(&run.partition, &other.partition)?
    );
    Ok(())
}
