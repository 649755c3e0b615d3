//! Directed weighted modularity, Louvain maximization and partition
//! comparison (Rand index, z-Rand).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::RetweetGraph;

pub type CommunityLabel = u32;

/// Assignment of account ids to community labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    assignment: BTreeMap<String, CommunityLabel>,
    communities: BTreeMap<CommunityLabel, BTreeSet<String>>,
}

impl Partition {
    pub fn from_assignment<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, CommunityLabel)>,
        S: Into<String>,
    {
        let mut p = Partition::default();
        for (node, label) in pairs {
            p.insert(node.into(), label);
        }
        p
    }

    fn insert(&mut self, node: String, label: CommunityLabel) {
        if let Some(old) = self.assignment.insert(node.clone(), label) {
            if let Some(members) = self.communities.get_mut(&old) {
                members.remove(&node);
                if members.is_empty() {
                    self.communities.remove(&old);
                }
            }
        }
        self.communities.entry(label).or_default().insert(node);
    }

    /// Every node in its own community, labelled by position.
    pub fn singletons<S: AsRef<str>>(nodes: &[S]) -> Self {
        Partition::from_assignment(nodes.iter().enumerate().map(|(i, n)| (n.as_ref().to_string(), i as CommunityLabel)))
    }

    pub fn one_community<S: AsRef<str>>(nodes: &[S]) -> Self {
        Partition::from_assignment(nodes.iter().map(|n| (n.as_ref().to_string(), 0)))
    }

    pub fn label(&self, node: &str) -> Option<CommunityLabel> {
        self.assignment.get(node).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<String, CommunityLabel> {
        &self.assignment
    }

    pub fn communities(&self) -> &BTreeMap<CommunityLabel, BTreeSet<String>> {
        &self.communities
    }

    pub fn members(&self, label: CommunityLabel) -> Option<&BTreeSet<String>> {
        self.communities.get(&label)
    }

    pub fn size(&self, label: CommunityLabel) -> usize {
        self.communities.get(&label).map_or(0, BTreeSet::len)
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn community_count(&self) -> usize {
        self.communities.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.assignment.keys().map(String::as_str)
    }

    /// Labels ordered by community size, largest first (ties by label).
    pub fn labels_by_size(&self) -> Vec<CommunityLabel> {
        let mut labels: Vec<_> = self.communities.keys().copied().collect();
        labels.sort_by_key(|l| (std::cmp::Reverse(self.size(*l)), *l));
        labels
    }

    /// Restriction to the given nodes.
    pub fn restrict<'a, I: IntoIterator<Item = &'a str>>(&self, nodes: I) -> Partition {
        Partition::from_assignment(nodes.into_iter().filter_map(|n| self.label(n).map(|l| (n.to_string(), l))))
    }

    /// Per-index labels for a graph; fails if a graph node is unassigned.
    pub fn labels_for(&self, graph: &RetweetGraph) -> Result<Vec<CommunityLabel>> {
        graph.node_ids().iter().map(|id| self.label(id).ok_or_else(|| Error::Coverage(id.clone()))).collect()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (node, label) in &self.assignment {
            writeln!(out, "{node} {label}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::format("partition", format!("line {}: {line:?}", lineno + 1));
            let mut parts = line.split_whitespace();
            let (Some(node), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad());
            };
            pairs.push((node.to_string(), label.parse().map_err(|_| bad())?));
        }
        Ok(Partition::from_assignment(pairs))
    }
}

/// Restricts both partitions to the nodes they have in common.
pub fn restrict_to_common(p1: &Partition, p2: &Partition) -> (Partition, Partition) {
    let common: Vec<&str> = p1.nodes().filter(|n| p2.label(n).is_some()).collect();
    (p1.restrict(common.iter().copied()), p2.restrict(common.iter().copied()))
}

/// Directed weighted modularity
/// `Q = (1/w) sum_ij (A_ij - w_i^in w_j^out / w) delta(C_i, C_j)`.
pub fn modularity(graph: &RetweetGraph, partition: &Partition) -> Result<f64> {
    let labels = partition.labels_for(graph)?;
    modularity_of_labels(graph, &labels)
}

pub(crate) fn modularity_of_labels(graph: &RetweetGraph, labels: &[CommunityLabel]) -> Result<f64> {
    let w = graph.total_weight() as f64;
    if w <= 0.0 {
        return Err(Error::Undefined("modularity of a graph without arcs".into()));
    }
    let mut internal = 0.0;
    for ((i, j), a) in graph.arcs() {
        if labels[i] == labels[j] {
            internal += a as f64;
        }
    }
    let mut tot: BTreeMap<CommunityLabel, (f64, f64)> = BTreeMap::new();
    for (v, &l) in labels.iter().enumerate() {
        let e = tot.entry(l).or_insert((0.0, 0.0));
        e.0 += graph.in_weight(v) as f64;
        e.1 += graph.out_weight(v) as f64;
    }
    let expected: f64 = tot.values().map(|(tin, tout)| tin * tout).sum();
    Ok(internal / w - expected / (w * w))
}

#[derive(Debug, Clone, Copy)]
pub struct LouvainOptions {
    pub seed: u64,
    /// Guard on local-move sweeps per level.
    pub max_sweeps: usize,
}

impl Default for LouvainOptions {
    fn default() -> Self {
        LouvainOptions { seed: 0, max_sweeps: 1_000 }
    }
}

/// Result of a Louvain run with the modularity reached after each level.
#[derive(Debug, Clone)]
pub struct LouvainRun {
    pub partition: Partition,
    pub modularity: f64,
    pub level_modularity: Vec<f64>,
}

struct Level {
    // symmetric neighbour weights A_ij + A_ji, self-loops excluded
    adj: Vec<Vec<(usize, f64)>>,
    k_in: Vec<f64>,
    k_out: Vec<f64>,
}

const GAIN_EPS: f64 = 1e-10;

/// Louvain maximization of directed modularity over the symmetrized
/// modularity matrix `B = M + M^T`. Nodes are visited in a seeded random
/// order; a node only moves on a strictly positive gain.
pub fn louvain(graph: &RetweetGraph, seed: u64) -> Result<Partition> {
    louvain_with(graph, LouvainOptions { seed, ..Default::default() }).map(|r| r.partition)
}

pub fn louvain_with(graph: &RetweetGraph, opts: LouvainOptions) -> Result<LouvainRun> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let w = graph.total_weight() as f64;
    if w <= 0.0 {
        return Err(Error::Undefined("louvain on a graph without arcs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut adj: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n];
    for ((i, j), a) in graph.arcs() {
        *adj[i].entry(j).or_insert(0.0) += a as f64;
        *adj[j].entry(i).or_insert(0.0) += a as f64;
    }
    let mut level = Level {
        adj: adj.into_iter().map(sorted_adj).collect(),
        k_in: graph.in_weights().iter().map(|&x| x as f64).collect(),
        k_out: graph.out_weights().iter().map(|&x| x as f64).collect(),
    };
    // membership of original nodes in current level nodes
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut level_modularity = Vec::new();

    loop {
        let (comm, moved) = local_moves(&level, w, &mut rng, opts.max_sweeps);
        let labels: Vec<CommunityLabel> = node_of.iter().map(|&v| comm[v] as CommunityLabel).collect();
        level_modularity.push(modularity_of_labels(graph, &labels)?);
        if !moved {
            break;
        }
        for v in node_of.iter_mut() {
            *v = comm[*v];
        }
        level = aggregate(&level, &comm);
    }

    let partition = canonical_partition(graph, &node_of);
    let modularity = modularity(graph, &partition)?;
    Ok(LouvainRun { partition, modularity, level_modularity })
}

fn sorted_adj(m: HashMap<usize, f64>) -> Vec<(usize, f64)> {
    let mut v: Vec<_> = m.into_iter().collect();
    v.sort_by_key(|&(j, _)| j);
    v
}

/// Returns contiguous community ids per level node and whether any node moved.
fn local_moves(level: &Level, w: f64, rng: &mut ChaCha8Rng, max_sweeps: usize) -> (Vec<usize>, bool) {
    let n = level.k_in.len();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut tot_in = level.k_in.clone();
    let mut tot_out = level.k_out.clone();
    let mut empty: Vec<usize> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    let mut links: HashMap<usize, f64> = HashMap::new();
    let mut any_move = false;

    for _ in 0..max_sweeps {
        order.shuffle(rng);
        let mut moved = false;
        for &i in &order {
            let own = comm[i];
            tot_in[own] -= level.k_in[i];
            tot_out[own] -= level.k_out[i];
            size[own] -= 1;

            links.clear();
            for &(j, a) in &level.adj[i] {
                *links.entry(comm[j]).or_insert(0.0) += a;
            }
            let gain = |c: usize, k_ic: f64| k_ic - (level.k_in[i] * tot_out[c] + level.k_out[i] * tot_in[c]) / w;
            let own_gain = gain(own, links.get(&own).copied().unwrap_or(0.0));
            let mut best = own;
            let mut best_gain = own_gain;
            let mut candidates: Vec<(usize, f64)> = links.iter().map(|(&c, &k)| (c, k)).collect();
            candidates.sort_by_key(|&(c, _)| c);
            for (c, k) in candidates {
                if c == own {
                    continue;
                }
                let g = gain(c, k);
                if g > best_gain + GAIN_EPS {
                    best = c;
                    best_gain = g;
                }
            }
            // isolating the node is worth zero
            if size[own] > 0 && 0.0 > best_gain + GAIN_EPS {
                best = empty.pop().expect("an empty community exists while a node is detached");
            }

            if best != own {
                moved = true;
                if size[own] == 0 {
                    empty.push(own);
                }
                if let Some(pos) = empty.iter().position(|&c| c == best) {
                    empty.swap_remove(pos);
                }
            }
            comm[i] = best;
            tot_in[best] += level.k_in[i];
            tot_out[best] += level.k_out[i];
            size[best] += 1;
        }
        if !moved {
            break;
        }
        any_move = true;
    }

    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &comm {
        let next = remap.len();
        remap.entry(c).or_insert(next);
    }
    (comm.iter().map(|c| remap[c]).collect(), any_move)
}

fn aggregate(level: &Level, comm: &[usize]) -> Level {
    let m = comm.iter().max().map_or(0, |&c| c + 1);
    let mut adj: Vec<HashMap<usize, f64>> = vec![HashMap::new(); m];
    let mut k_in = vec![0.0; m];
    let mut k_out = vec![0.0; m];
    for (i, nbrs) in level.adj.iter().enumerate() {
        let ci = comm[i];
        k_in[ci] += level.k_in[i];
        k_out[ci] += level.k_out[i];
        for &(j, a) in nbrs {
            let cj = comm[j];
            if ci != cj {
                *adj[ci].entry(cj).or_insert(0.0) += a;
            }
        }
    }
    Level { adj: adj.into_iter().map(sorted_adj).collect(), k_in, k_out }
}

/// Labels communities 0.. by decreasing size, ties by smallest member id.
fn canonical_partition(graph: &RetweetGraph, comm: &[usize]) -> Partition {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &c) in comm.iter().enumerate() {
        groups.entry(c).or_default().push(v);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    let ids = graph.node_ids();
    Partition::from_assignment(
        groups
            .iter()
            .enumerate()
            .flat_map(|(label, members)| members.iter().map(move |&v| (ids[v].clone(), label as CommunityLabel))),
    )
}

struct PairCounts {
    n: f64,
    pairs: f64,
    same1: f64,
    same2: f64,
    same_both: f64,
    cube1: f64,
    cube2: f64,
}

fn choose2(k: usize) -> f64 {
    let k = k as f64;
    k * (k - 1.0) / 2.0
}

fn pair_counts(p1: &Partition, p2: &Partition) -> Result<PairCounts> {
    if p1.node_count() != p2.node_count() || p1.nodes().any(|n| p2.label(n).is_none()) {
        return Err(Error::NodeSetMismatch);
    }
    let mut joint: HashMap<(CommunityLabel, CommunityLabel), usize> = HashMap::new();
    for (node, &l1) in p1.assignment() {
        let l2 = p2.label(node).expect("checked above");
        *joint.entry((l1, l2)).or_insert(0) += 1;
    }
    let sizes1 = p1.communities().values().map(BTreeSet::len);
    let sizes2 = p2.communities().values().map(BTreeSet::len);
    let n = p1.node_count();
    Ok(PairCounts {
        n: n as f64,
        pairs: choose2(n),
        same1: sizes1.clone().map(choose2).sum(),
        same2: sizes2.clone().map(choose2).sum(),
        same_both: joint.values().map(|&k| choose2(k)).sum(),
        cube1: sizes1.map(|s| (s as f64).powi(3)).sum(),
        cube2: sizes2.map(|s| (s as f64).powi(3)).sum(),
    })
}

/// Fraction of node pairs on which the two partitions agree.
pub fn rand_index(p1: &Partition, p2: &Partition) -> Result<f64> {
    let c = pair_counts(p1, p2)?;
    if c.pairs == 0.0 {
        return Err(Error::Undefined("rand index needs at least two nodes".into()));
    }
    Ok((c.pairs - c.same1 - c.same2 + 2.0 * c.same_both) / c.pairs)
}

/// z-score of the number of pairs co-classified by both partitions under the
/// hypergeometric (fixed community sizes) random model.
pub fn z_rand(p1: &Partition, p2: &Partition) -> Result<f64> {
    let c = pair_counts(p1, p2)?;
    let (n, m, m1, m2) = (c.n, c.pairs, c.same1, c.same2);
    if n < 4.0 {
        return Err(Error::Undefined("z-rand needs at least four nodes".into()));
    }
    let mean = m1 * m2 / m;
    let c1 = n * (n * n - 3.0 * n - 2.0) - 8.0 * (n + 1.0) * m1 + 4.0 * c.cube1;
    let c2 = n * (n * n - 3.0 * n - 2.0) - 8.0 * (n + 1.0) * m2 + 4.0 * c.cube2;
    let d1 = 4.0 * m1 - 2.0 * m;
    let d2 = 4.0 * m2 - 2.0 * m;
    let var = m / 16.0 - d1 * d1 * d2 * d2 / (256.0 * m * m)
        + c1 * c2 / (16.0 * n * (n - 1.0) * (n - 2.0))
        + (d1 * d1 - 4.0 * c1 - 4.0 * m) * (d2 * d2 - 4.0 * c2 - 4.0 * m)
            / (64.0 * n * (n - 1.0) * (n - 2.0) * (n - 3.0));
    // exact zero variance can come out as a tiny residue
    if var <= 1e-9 * m.max(1.0) {
        return Err(Error::Undefined("z-rand variance is zero".into()));
    }
    Ok((c.same_both - mean) / var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cycles() -> RetweetGraph {
        RetweetGraph::from_arcs([
            ("a", "b", 1),
            ("b", "c", 1),
            ("c", "a", 1),
            ("d", "e", 1),
            ("e", "f", 1),
            ("f", "d", 1),
            ("c", "d", 1),
        ])
    }

    /// Direct double sum over all ordered node pairs.
    fn modularity_oracle(g: &RetweetGraph, labels: &[CommunityLabel]) -> f64 {
        let n = g.node_count();
        let w = g.total_weight() as f64;
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    q += g.weight(i, j) as f64 - g.in_weight(i) as f64 * g.out_weight(j) as f64 / w;
                }
            }
        }
        q / w
    }

    #[test]
    fn one_community_is_zero() {
        let g = two_cycles();
        let p = Partition::one_community(g.node_ids());
        assert_eq!(modularity(&g, &p).unwrap(), 0.0);
    }

    #[test]
    fn singleton_closed_form() {
        let g = two_cycles();
        let w = g.total_weight() as f64;
        let expect: f64 =
            -(0..g.node_count()).map(|i| g.in_weight(i) as f64 * g.out_weight(i) as f64).sum::<f64>() / (w * w);
        let q = modularity(&g, &Partition::singletons(g.node_ids())).unwrap();
        assert!((q - expect).abs() < 1e-15);
    }

    #[test]
    fn two_cycle_partition_matches_oracle() {
        let g = two_cycles();
        let labels = [0, 0, 0, 1, 1, 1];
        let q = modularity_of_labels(&g, &labels).unwrap();
        assert!((q - modularity_oracle(&g, &labels)).abs() < 1e-12);
        // 6/7 internal, expected (3*3 + 4*3)/49... computed by hand:
        // tot_in: {a,b,c}=4 (c->d), {d,e,f}=3; tot_out: {a,b,c}=3, {d,e,f}=4
        let hand = 6.0 / 7.0 - (4.0 * 3.0 + 3.0 * 4.0) / 49.0;
        assert!((q - hand).abs() < 1e-12);
    }

    #[test]
    fn missing_node_is_coverage_error() {
        let g = two_cycles();
        let p = Partition::from_assignment([("a", 0)]);
        assert!(matches!(modularity(&g, &p), Err(Error::Coverage(_))));
    }

    #[test]
    fn louvain_splits_two_cycles() {
        let g = two_cycles();
        let p = louvain(&g, 7).unwrap();
        assert_eq!(p.community_count(), 2);
        assert_eq!(p.label("a"), p.label("b"));
        assert_eq!(p.label("b"), p.label("c"));
        assert_eq!(p.label("d"), p.label("f"));
        assert_ne!(p.label("a"), p.label("d"));
    }

    #[test]
    fn louvain_keeps_single_cycle_together() {
        let g = RetweetGraph::from_arcs([("a", "b", 1), ("b", "c", 1), ("c", "a", 1)]);
        let p = louvain(&g, 1).unwrap();
        assert_eq!(p.community_count(), 1);
    }

    #[test]
    fn louvain_is_deterministic_per_seed() {
        let g = two_cycles();
        for seed in 0..5 {
            assert_eq!(louvain(&g, seed).unwrap(), louvain(&g, seed).unwrap());
        }
    }

    #[test]
    fn louvain_on_empty_graph() {
        let g = RetweetGraph::from_arcs(Vec::<(String, String, u64)>::new());
        assert!(matches!(louvain(&g, 0), Err(Error::EmptyGraph)));
    }

    #[test]
    fn rand_examples() {
        let nodes = ["a", "b", "c", "d"];
        let one = Partition::one_community(&nodes);
        let single = Partition::singletons(&nodes);
        assert_eq!(rand_index(&one, &one).unwrap(), 1.0);
        assert_eq!(rand_index(&one, &single).unwrap(), 0.0);
        let p1 = Partition::from_assignment([("a", 0), ("b", 0), ("c", 1), ("d", 1)]);
        let p2 = Partition::from_assignment([("a", 0), ("c", 0), ("b", 1), ("d", 1)]);
        assert!((rand_index(&p1, &p2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rand_rejects_mismatched_nodes() {
        let p1 = Partition::from_assignment([("a", 0), ("b", 0)]);
        let p2 = Partition::from_assignment([("a", 0), ("c", 0)]);
        assert!(matches!(rand_index(&p1, &p2), Err(Error::NodeSetMismatch)));
        let (r1, r2) = restrict_to_common(&p1, &p2);
        assert_eq!(r1.node_count(), 1);
        assert_eq!(r2.node_count(), 1);
    }

    #[test]
    fn z_rand_identical_balanced() {
        let p = Partition::from_assignment((0..20).map(|i| (format!("n{i}"), (i % 2) as u32)));
        assert!(z_rand(&p, &p).unwrap() > 0.0);
    }

    #[test]
    fn z_rand_degenerate() {
        let nodes: Vec<String> = (0..10).map(|i| format!("n{i}")).collect();
        let one = Partition::one_community(&nodes);
        let p = Partition::from_assignment(nodes.iter().enumerate().map(|(i, n)| (n.clone(), (i % 2) as u32)));
        assert!(matches!(z_rand(&one, &p), Err(Error::Undefined(_))));
    }

    #[test]
    fn partition_io_round_trip() {
        let p = Partition::from_assignment([("x", 3), ("y", 1), ("z", 3)]);
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "x 3\ny 1\nz 3\n");
        assert_eq!(Partition::read_from(buf.as_slice()).unwrap(), p);
        assert!(Partition::read_from("x\n".as_bytes()).is_err());
    }
}
