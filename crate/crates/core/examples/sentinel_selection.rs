//! Chooses the most retweeted accounts of the largest communities and
//! tracks when they are active.

use sentinel_core::community::louvain;
use sentinel_core::graph::{build_retweet_graph, largest_component};
use sentinel_core::sentinel::{activity, select_sentinels, AsciiLanguageFilter};
use sentinel_core::synth::{generate, SynthOptions};

fn main() -> sentinel_core::Result<()> {
    let corpus = generate(&SynthOptions::default());
    let graph = largest_component(&build_retweet_graph(&corpus.records))?;
    let partition = louvain(&graph, 7)?;

    let filter = AsciiLanguageFilter::from_records(&corpus.records, 7);
    let set = select_sentinels(&graph, &partition, 5, 6, &filter)?;
    for c in &set.communities {
        let names: Vec<String> = c.sentinels.iter().map(|(a, d)| format!("{a}({d})")).collect();
        println!("community {:>2}: coverage {:.2}  {}", c.label, c.coverage, names.join(" "));
    }

    let ledger = activity(&corpus.records, &set, corpus.window);
    println!("\naccount days inside {} .. {}:", corpus.window.start, corpus.window.end);
    for label in set.labels() {
        println!("  community {label:>2}: {}", ledger.community_account_days(label));
    }
    let mut roster = Vec::new();
    set.write_roster(&mut roster)?;
    println!("\nroster file:\n{}", String::from_utf8_lossy(&roster).lines().take(6).collect::<Vec<_>>().join("\n"));
    Ok(())
}
