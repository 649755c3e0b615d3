//! Latent semantic analysis of a flagged day's tweets, and the removal test
//! that confirms topical tweets as burst drivers.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::community::CommunityLabel;
use crate::error::{Error, Result};
use crate::ingest::{TokenDoc, Trigram};
use crate::linalg::thin_svd;
use crate::similarity::{
    burst_from_history, intercluster_similarity, CommunityDayDoc, DayTweet, FlagRule, SimilaritySeries,
};

pub const DEFAULT_SINGULAR_VECTORS: usize = 5;
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.5;
/// Only the largest components of each document vector are searched for a drop.
pub const GAP_WINDOW: usize = 50;
/// Smallest ratio between consecutive magnitudes that counts as a drop.
pub const MIN_GAP_RATIO: f64 = 2.0;

/// Full SVD of a tweet x trigram count matrix; tweets are ordered by id.
#[derive(Debug, Clone)]
pub struct DocumentSvd {
    pub tweet_ids: Vec<String>,
    pub matrix: DMatrix<f64>,
    /// Non-increasing.
    pub singular_values: Vec<f64>,
    /// Column `i` is the document vector for `singular_values[i]`.
    pub doc_vectors: DMatrix<f64>,
}

/// Builds the count matrix over tweets with at least one trigram and
/// decomposes it. Returns `None` when no tweet has trigrams.
pub fn document_svd(tweets: &[(&str, &TokenDoc)]) -> Option<DocumentSvd> {
    let mut docs: Vec<(&str, &TokenDoc)> = tweets.iter().copied().filter(|(_, d)| d.has_trigrams()).collect();
    if docs.is_empty() {
        return None;
    }
    docs.sort_by(|a, b| a.0.cmp(b.0));
    let vocab: BTreeMap<&Trigram, usize> = docs
        .iter()
        .flat_map(|(_, d)| d.trigram_counts.keys())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(j, t)| (t, j))
        .collect();
    let mut matrix = DMatrix::zeros(docs.len(), vocab.len());
    for (i, (_, d)) in docs.iter().enumerate() {
        for (t, &c) in &d.trigram_counts {
            matrix[(i, vocab[t])] = c as f64;
        }
    }
    let svd = thin_svd(&matrix);
    Some(DocumentSvd {
        tweet_ids: docs.iter().map(|(id, _)| id.to_string()).collect(),
        matrix,
        singular_values: svd.singular_values,
        doc_vectors: svd.u,
    })
}

/// Indices of the documents above the sharpest drop in component magnitude,
/// or nothing when no drop reaches [`MIN_GAP_RATIO`].
pub fn select_above_drop(components: &[f64]) -> Vec<usize> {
    let scale = components.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mag = |i: usize| {
        let m = components[i].abs();
        if m <= 1e-12 * scale {
            0.0
        } else {
            m
        }
    };
    let mut order: Vec<usize> = (0..components.len()).collect();
    order.sort_by(|&a, &b| mag(b).total_cmp(&mag(a)).then(a.cmp(&b)));
    if order.len() == 1 {
        return order;
    }
    let top = &order[..order.len().min(GAP_WINDOW)];
    let mut best: Option<(usize, f64)> = None;
    for i in 0..top.len() - 1 {
        let (hi, lo) = (mag(top[i]), mag(top[i + 1]));
        if hi == 0.0 {
            break;
        }
        let ratio = if lo == 0.0 { f64::INFINITY } else { hi / lo };
        if best.is_none_or(|(_, r)| ratio > r) {
            best = Some((i, ratio));
        }
    }
    match best {
        Some((i, ratio)) if ratio >= MIN_GAP_RATIO => top[..=i].to_vec(),
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct LsaExtraction {
    pub singular_values: Vec<f64>,
    /// Tweets selected by each of the leading document vectors.
    pub vector_selections: Vec<Vec<String>>,
    pub topical: BTreeSet<String>,
}

/// Topical tweets from the `k` leading document vectors.
pub fn lsa_topical_tweets(tweets: &[(&str, &TokenDoc)], k: usize) -> Result<LsaExtraction> {
    if k == 0 {
        return Err(Error::Parameter("number of singular vectors must be positive".into()));
    }
    let Some(svd) = document_svd(tweets) else {
        return Ok(LsaExtraction::default());
    };
    let sigma_max = svd.singular_values.first().copied().unwrap_or(0.0);
    let mut out = LsaExtraction::default();
    for (i, &sigma) in svd.singular_values.iter().enumerate().take(k) {
        if sigma <= 1e-10 * sigma_max {
            break;
        }
        out.singular_values.push(sigma);
        let column: Vec<f64> = svd.doc_vectors.column(i).iter().copied().collect();
        let selected: Vec<String> = select_above_drop(&column).into_iter().map(|d| svd.tweet_ids[d].clone()).collect();
        out.topical.extend(selected.iter().cloned());
        out.vector_selections.push(selected);
    }
    Ok(out)
}

fn trigram_set(doc: &TokenDoc) -> BTreeSet<&Trigram> {
    doc.trigram_counts.keys().collect()
}

/// Jaccard index of two trigram sets; zero when both are empty.
pub fn trigram_jaccard(a: &TokenDoc, b: &TokenDoc) -> f64 {
    let (sa, sb) = (trigram_set(a), trigram_set(b));
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverCheck {
    /// Topical tweets of each cluster that match a topical tweet of the other.
    pub common_a: BTreeSet<String>,
    pub common_b: BTreeSet<String>,
    pub original_similarity: Option<f64>,
    pub recomputed_similarity: Option<f64>,
    pub original_h: Option<f64>,
    pub recomputed_h: Option<f64>,
    pub is_driver: bool,
}

fn cluster_docs(tweets: &[&DayTweet], drop: &BTreeSet<String>) -> Vec<CommunityDayDoc> {
    let mut docs: BTreeMap<CommunityLabel, CommunityDayDoc> = BTreeMap::new();
    for t in tweets {
        if drop.contains(&t.tweet_id) {
            continue;
        }
        docs.entry(t.community).or_insert_with(|| CommunityDayDoc::new(t.community, t.day)).add(&t.tweet_id, &t.doc);
    }
    docs.into_values().collect()
}

/// Removes the topical tweets the two clusters have in common (trigram
/// Jaccard at least `match_threshold`) and recomputes the day's similarity
/// and burst score against the unchanged history.
#[allow(clippy::too_many_arguments)]
pub fn confirm_drivers(
    series: &SimilaritySeries,
    day: NaiveDate,
    tweets_a: &[&DayTweet],
    tweets_b: &[&DayTweet],
    extraction_a: &LsaExtraction,
    extraction_b: &LsaExtraction,
    match_threshold: f64,
    min_history: usize,
    rule: FlagRule,
) -> Result<DriverCheck> {
    let t = series.position(day).ok_or_else(|| Error::Parameter(format!("day {day} is not in the series")))?;
    let history: Vec<f64> = series.values[..t].iter().flatten().copied().collect();
    let original_similarity = series.values[t];
    let original_h = original_similarity.and_then(|s| burst_from_history(s, &history, min_history));

    let topical = |tweets: &[&DayTweet], ext: &LsaExtraction| -> Vec<(String, TokenDoc)> {
        tweets
            .iter()
            .filter(|t| ext.topical.contains(&t.tweet_id))
            .map(|t| (t.tweet_id.clone(), t.doc.clone()))
            .collect()
    };
    let (top_a, top_b) = (topical(tweets_a, extraction_a), topical(tweets_b, extraction_b));
    let mut common_a = BTreeSet::new();
    let mut common_b = BTreeSet::new();
    for (ida, da) in &top_a {
        for (idb, db) in &top_b {
            if trigram_jaccard(da, db) >= match_threshold {
                common_a.insert(ida.clone());
                common_b.insert(idb.clone());
            }
        }
    }
    if common_a.is_empty() {
        return Ok(DriverCheck {
            common_a,
            common_b,
            original_similarity,
            recomputed_similarity: original_similarity,
            original_h,
            recomputed_h: original_h,
            is_driver: false,
        });
    }
    let docs_a = cluster_docs(tweets_a, &common_a);
    let docs_b = cluster_docs(tweets_b, &common_b);
    let recomputed_similarity =
        intercluster_similarity(&docs_a.iter().collect::<Vec<_>>(), &docs_b.iter().collect::<Vec<_>>());
    let recomputed_h = recomputed_similarity.and_then(|s| burst_from_history(s, &history, min_history));
    Ok(DriverCheck {
        common_a,
        common_b,
        original_similarity,
        recomputed_similarity,
        original_h,
        recomputed_h,
        is_driver: !recomputed_h.is_some_and(|h| rule.flags(h)),
    })
}

/// Report entry for one flagged day and cluster pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicalExtraction {
    pub day: NaiveDate,
    pub pair: (usize, usize),
    pub cluster_a: LsaExtraction,
    pub cluster_b: LsaExtraction,
    pub common_topical: BTreeSet<String>,
    pub check: DriverCheck,
}
