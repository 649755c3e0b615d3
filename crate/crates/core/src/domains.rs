//! Community x domain link-fraction matrix, first-principal-component
//! linked-domain score, and agglomerative clustering of communities on it.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::community::CommunityLabel;
use crate::error::{Error, Result};
use crate::ingest::{extract_domain, LinkDomain, ShortenerList, TweetRecord};
use crate::linalg::thin_svd;

pub const DEFAULT_MIN_COUNT: u64 = 10;
pub const DEFAULT_CLUSTERS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct DomainMatrix {
    pub rows: Vec<CommunityLabel>,
    pub columns: Vec<String>,
    /// `values[(i, j)]` is the fraction of community `i`'s retained links
    /// that point to domain `j`.
    pub values: DMatrix<f64>,
    /// Retained (non-excluded, parseable) links per row.
    pub retained: Vec<u64>,
    /// Rows with no retained links at all; their entries are zero.
    pub empty_rows: Vec<CommunityLabel>,
    pub unparseable: usize,
}

impl DomainMatrix {
    pub fn from_values(rows: Vec<CommunityLabel>, columns: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != rows.len() || values.ncols() != columns.len() {
            return Err(Error::Parameter("matrix shape does not match labels".into()));
        }
        let retained = vec![0; rows.len()];
        Ok(DomainMatrix { rows, columns, values, retained, empty_rows: Vec::new(), unparseable: 0 })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["community".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (i, label) in self.rows.iter().enumerate() {
            let mut rec = vec![label.to_string()];
            rec.extend((0..self.columns.len()).map(|j| self.values[(i, j)].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let columns: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut rows = Vec::new();
        let mut data = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let bad = |f: &str| Error::format("domain matrix", format!("bad field {f:?}"));
            rows.push(rec[0].parse().map_err(|_| bad(&rec[0]))?);
            for f in rec.iter().skip(1) {
                data.push(f.parse::<f64>().map_err(|_| bad(f))?);
            }
        }
        if data.len() != rows.len() * columns.len() {
            return Err(Error::format("domain matrix", "ragged rows"));
        }
        let values = DMatrix::from_row_slice(rows.len(), columns.len(), &data);
        DomainMatrix::from_values(rows, columns, values)
    }
}

/// Builds the matrix from each community's tweets. A domain becomes a column
/// when some community links to it more than `min_count` times; row
/// denominators are all retained links of the community.
pub fn domain_frequency_matrix<'a, I>(
    records_by_community: I,
    shorteners: &ShortenerList,
    min_count: u64,
) -> DomainMatrix
where
    I: IntoIterator<Item = (CommunityLabel, Vec<&'a TweetRecord>)>,
{
    let mut counts: BTreeMap<CommunityLabel, BTreeMap<String, u64>> = BTreeMap::new();
    let mut unparseable = 0;
    for (label, records) in records_by_community {
        let row = counts.entry(label).or_default();
        for url in records.iter().flat_map(|r| r.urls.iter()) {
            match extract_domain(url, shorteners) {
                Ok(LinkDomain::Domain(d)) => *row.entry(d).or_insert(0) += 1,
                Ok(LinkDomain::Excluded) => {}
                Err(_) => unparseable += 1,
            }
        }
    }
    let columns: Vec<String> = counts
        .values()
        .flat_map(|row| row.iter().filter(|(_, &c)| c > min_count).map(|(d, _)| d.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let rows: Vec<CommunityLabel> = counts.keys().copied().collect();
    let mut values = DMatrix::zeros(rows.len(), columns.len());
    let mut retained = Vec::with_capacity(rows.len());
    let mut empty_rows = Vec::new();
    for (i, (label, row)) in counts.iter().enumerate() {
        let total: u64 = row.values().sum();
        retained.push(total);
        if total == 0 {
            empty_rows.push(*label);
            continue;
        }
        for (j, d) in columns.iter().enumerate() {
            values[(i, j)] = row.get(d).copied().unwrap_or(0) as f64 / total as f64;
        }
    }
    DomainMatrix { rows, columns, values, retained, empty_rows, unparseable }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SignConvention {
    /// The loading with the largest magnitude is positive.
    #[default]
    LargestLoadingPositive,
    /// The named domain's loading is non-negative.
    AnchorPositive(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkedDomainScore {
    pub domains: Vec<String>,
    /// Unit-norm first principal axis over domains.
    pub loadings: Vec<f64>,
    pub communities: Vec<CommunityLabel>,
    pub scores: Vec<f64>,
    pub singular_value: f64,
    pub sign_convention: SignConvention,
}

impl LinkedDomainScore {
    pub fn score_pairs(&self) -> Vec<(CommunityLabel, f64)> {
        self.communities.iter().copied().zip(self.scores.iter().copied()).collect()
    }

    pub fn write_loadings_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["domain", "loading"])?;
        for (d, l) in self.domains.iter().zip(&self.loadings) {
            w.write_record([d.clone(), l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Centered (unscaled) PCA; community scores are projections of centered
/// rows onto the first right singular vector.
pub fn first_principal_component(matrix: &DomainMatrix, sign: &SignConvention) -> Result<LinkedDomainScore> {
    let x = &matrix.values;
    let (m, n) = x.shape();
    if m < 2 || n < 1 {
        return Err(Error::Parameter(format!("need at least 2 rows and 1 column, got {m}x{n}")));
    }
    let mut centered = x.clone();
    for j in 0..n {
        let mean = centered.column(j).mean();
        centered.column_mut(j).add_scalar_mut(-mean);
    }
    let scale = x.amax().max(1.0);
    if centered.amax() <= 1e-14 * scale {
        return Err(Error::Degenerate("all rows identical; zero variance".into()));
    }
    let svd = thin_svd(&centered);
    let mut loadings: Vec<f64> = svd.v.column(0).iter().copied().collect();
    let flip = match sign {
        SignConvention::LargestLoadingPositive => {
            let mut best = 0;
            for (j, l) in loadings.iter().enumerate() {
                if l.abs() > loadings[best].abs() + 1e-12 {
                    best = j;
                }
            }
            loadings[best] < 0.0
        }
        SignConvention::AnchorPositive(domain) => {
            let j = matrix
                .columns
                .iter()
                .position(|d| d == domain)
                .ok_or_else(|| Error::Parameter(format!("anchor domain {domain:?} is not a column")))?;
            loadings[j] < 0.0
        }
    };
    if flip {
        loadings.iter_mut().for_each(|l| *l = -*l);
    }
    let axis = nalgebra::DVector::from_column_slice(&loadings);
    let scores = (&centered * axis).iter().copied().collect();
    Ok(LinkedDomainScore {
        domains: matrix.columns.clone(),
        loadings,
        communities: matrix.rows.clone(),
        scores,
        singular_value: svd.singular_values[0],
        sign_convention: sign.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linkage {
    /// Distance between cluster means.
    #[default]
    Centroid,
    /// Mean pairwise distance between members (UPGMA).
    Average,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Community to cluster index; clusters are numbered by ascending centroid.
    pub assignment: BTreeMap<CommunityLabel, usize>,
    pub centroids: Vec<f64>,
}

impl ClusterAssignment {
    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self, cluster: usize) -> Vec<CommunityLabel> {
        self.assignment.iter().filter(|(_, &c)| c == cluster).map(|(&l, _)| l).collect()
    }

    pub fn cluster_of(&self, community: CommunityLabel) -> Option<usize> {
        self.assignment.get(&community).copied()
    }
}

/// Agglomerative clustering of 1-D scores, stopped when `k` clusters remain.
pub fn cluster_scores(scores: &[(CommunityLabel, f64)], k: usize, linkage: Linkage) -> Result<ClusterAssignment> {
    if k == 0 {
        return Err(Error::Parameter("cluster count must be positive".into()));
    }
    let distinct: BTreeSet<u64> = scores.iter().map(|(_, s)| s.to_bits()).collect();
    if scores.len() < k || distinct.len() < k {
        return Err(Error::Degenerate(format!("{} distinct scores cannot form {k} clusters", distinct.len())));
    }
    let mut sorted: Vec<(CommunityLabel, f64)> = scores.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut clusters: Vec<Vec<f64>> = sorted.iter().map(|&(_, s)| vec![s]).collect();
    let mut members: Vec<Vec<CommunityLabel>> = sorted.iter().map(|&(l, _)| vec![l]).collect();

    let mean = |c: &[f64]| c.iter().sum::<f64>() / c.len() as f64;
    let distance = |a: &[f64], b: &[f64]| match linkage {
        Linkage::Centroid => (mean(a) - mean(b)).abs(),
        Linkage::Average => {
            let total: f64 = a.iter().flat_map(|x| b.iter().map(move |y| (x - y).abs())).sum();
            total / (a.len() * b.len()) as f64
        }
    };
    while clusters.len() > k {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let d = distance(&clusters[a], &clusters[b]);
                if d < best.2 {
                    best = (a, b, d);
                }
            }
        }
        let (a, b, _) = best;
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        let moved = members.remove(b);
        members[a].extend(moved);
    }

    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| mean(&clusters[a]).total_cmp(&mean(&clusters[b])));
    let mut assignment = BTreeMap::new();
    let mut centroids = Vec::with_capacity(k);
    for (idx, &c) in order.iter().enumerate() {
        centroids.push(mean(&clusters[c]));
        for &l in &members[c] {
            assignment.insert(l, idx);
        }
    }
    Ok(ClusterAssignment { assignment, centroids })
}

/// `community,score,cluster` rows in community order.
pub fn write_scores_csv<W: Write>(
    scores: &[(CommunityLabel, f64)],
    clusters: Option<&ClusterAssignment>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["community", "score", "cluster"])?;
    let mut sorted = scores.to_vec();
    sorted.sort_by_key(|&(l, _)| l);
    for (l, s) in sorted {
        let cluster = clusters.and_then(|c| c.cluster_of(l)).map(|c| c.to_string()).unwrap_or_default();
        w.write_record([l.to_string(), s.to_string(), cluster])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `community,score[,cluster]`; the cluster column may be blank.
pub fn read_scores_csv<R: Read>(input: R) -> Result<Vec<(CommunityLabel, f64, Option<usize>)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || Error::format("scores", format!("bad row {:?}", rec.iter().collect::<Vec<_>>()));
        let label = rec.get(0).and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let score = rec.get(1).and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let cluster = match rec.get(2) {
            Some(f) if !f.is_empty() => Some(f.parse().map_err(|_| bad())?),
            _ => None,
        };
        out.push((label, score, cluster));
    }
    Ok(out)
}

/// Rebuilds a cluster assignment from a scores file with a cluster column.
pub fn clusters_from_scores(rows: &[(CommunityLabel, f64, Option<usize>)]) -> Result<ClusterAssignment> {
    let mut assignment = BTreeMap::new();
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for &(l, s, c) in rows {
        let c = c.ok_or_else(|| Error::format("scores", format!("community {l} has no cluster")))?;
        assignment.insert(l, c);
        let e = sums.entry(c).or_insert((0.0, 0));
        e.0 += s;
        e.1 += 1;
    }
    let k = sums.keys().next_back().map_or(0, |&c| c + 1);
    if sums.len() != k {
        return Err(Error::format("scores", "cluster indices are not contiguous"));
    }
    let centroids = sums.values().map(|(s, n)| s / *n as f64).collect();
    Ok(ClusterAssignment { assignment, centroids })
}
