//! Weighted directed retweet graph.
//!
//! Arc `i -> j` carries `A_ij`, the number of times account `j` retweeted
//! account `i`. The weighted in-degree of a node is therefore the number of
//! times it was retweeted and its out-degree the number of retweets it made.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ingest::TweetRecord;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetweetGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    arcs: BTreeMap<(usize, usize), u64>,
    in_weight: Vec<u64>,
    out_weight: Vec<u64>,
    total: u64,
}

impl RetweetGraph {
    /// Builds a graph from `(source, retweeter, weight)` triples. Self-loops
    /// and zero weights are dropped; repeated arcs accumulate.
    pub fn from_arcs<I, S>(arcs: I) -> Self
    where
        I: IntoIterator<Item = (S, S, u64)>,
        S: Into<String>,
    {
        let mut named: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (src, dst, w) in arcs {
            let (src, dst) = (src.into(), dst.into());
            if src == dst || w == 0 {
                continue;
            }
            *named.entry((src, dst)).or_insert(0) += w;
        }
        let ids: Vec<String> =
            named.keys().flat_map(|(a, b)| [a.clone(), b.clone()]).collect::<BTreeSet<_>>().into_iter().collect();
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let n = ids.len();
        let mut graph =
            RetweetGraph { ids, index, arcs: BTreeMap::new(), in_weight: vec![0; n], out_weight: vec![0; n], total: 0 };
        for ((src, dst), w) in named {
            let (i, j) = (graph.index[&src], graph.index[&dst]);
            graph.arcs.insert((i, j), w);
            graph.in_weight[i] += w;
            graph.out_weight[j] += w;
            graph.total += w;
        }
        graph
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Node ids in ascending order; positions are the node indices.
    pub fn node_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Arcs as `((source, retweeter), weight)` in index order.
    pub fn arcs(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.arcs.iter().map(|(&k, &w)| (k, w))
    }

    pub fn weight(&self, source: usize, retweeter: usize) -> u64 {
        self.arcs.get(&(source, retweeter)).copied().unwrap_or(0)
    }

    /// Times node `i` was retweeted.
    pub fn in_weight(&self, i: usize) -> u64 {
        self.in_weight[i]
    }

    /// Times node `i` retweeted someone else.
    pub fn out_weight(&self, i: usize) -> u64 {
        self.out_weight[i]
    }

    pub fn in_weights(&self) -> &[u64] {
        &self.in_weight
    }

    pub fn out_weights(&self) -> &[u64] {
        &self.out_weight
    }

    pub fn total_weight(&self) -> u64 {
        self.total
    }

    /// Subgraph induced on the given node indices.
    pub fn induced(&self, nodes: &BTreeSet<usize>) -> RetweetGraph {
        RetweetGraph::from_arcs(
            self.arcs
                .iter()
                .filter(|((i, j), _)| nodes.contains(i) && nodes.contains(j))
                .map(|(&(i, j), &w)| (self.ids[i].as_str(), self.ids[j].as_str(), w)),
        )
    }

    /// Weakly connected components as sets of node indices, largest first;
    /// equal sizes are ordered by their smallest node id.
    pub fn weak_components(&self) -> Vec<BTreeSet<usize>> {
        let n = self.node_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(i, j) in self.arcs.keys() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for v in 0..n {
            let root = find(&mut parent, v);
            groups.entry(root).or_default().insert(v);
        }
        let mut comps: Vec<BTreeSet<usize>> = groups.into_values().collect();
        // ids are sorted, so the smallest index is the lexicographically smallest id
        comps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.first().cmp(&b.first())));
        comps
    }

    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for (&(i, j), &w) in &self.arcs {
            for id in [&self.ids[i], &self.ids[j]] {
                if id.chars().any(char::is_whitespace) {
                    return Err(Error::format("edge list", format!("node id {id:?} contains whitespace")));
                }
            }
            writeln!(out, "{} {} {}", self.ids[i], self.ids[j], w)?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut arcs = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::format("edge list", format!("line {}: {line:?}", lineno + 1));
            if parts.len() != 3 {
                return Err(bad());
            }
            let w: u64 = parts[2].parse().map_err(|_| bad())?;
            arcs.push((parts[0].to_string(), parts[1].to_string(), w));
        }
        Ok(RetweetGraph::from_arcs(arcs))
    }
}

/// Counts retweets between distinct accounts. Accounts that never retweet
/// and are never retweeted do not appear.
pub fn build_retweet_graph(records: &[TweetRecord]) -> RetweetGraph {
    RetweetGraph::from_arcs(
        records.iter().filter_map(|r| r.retweeted_author_id.as_deref().map(|src| (src, r.author_id.as_str(), 1))),
    )
}

/// Induced subgraph on the largest weakly connected component.
pub fn largest_component(graph: &RetweetGraph) -> Result<RetweetGraph> {
    let comps = graph.weak_components();
    let first = comps.first().ok_or(Error::EmptyGraph)?;
    Ok(graph.induced(first))
}
