use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use nalgebra::DMatrix;
use proptest::prelude::*;

use sentinel_core::community::{modularity, rand_index, z_rand, Partition};
use sentinel_core::domains::{cluster_scores, first_principal_component, DomainMatrix, Linkage, SignConvention};
use sentinel_core::graph::RetweetGraph;
use sentinel_core::ingest::{
    extract_domain, normalize_text, parse_tweet_stream, write_tweet_stream, LinkDomain, ShortenerList, StopWords,
    TokenDoc, Trigram, TweetRecord,
};
use sentinel_core::linalg::thin_svd;
use sentinel_core::lsa::document_svd;
use sentinel_core::similarity::{burst_from_history, cosine_similarity, CommunityDayDoc};
use sentinel_core::stats::{chi_square, krippendorff_alpha, CodingMatrix, ContingencyTable};

fn arcs_strategy() -> impl Strategy<Value = Vec<(usize, usize, u64)>> {
    prop::collection::vec((0usize..10, 0usize..10, 1u64..6), 1..40)
        .prop_map(|v| v.into_iter().filter(|(a, b, _)| a != b).collect::<Vec<_>>())
        .prop_filter("needs an arc", |v| !v.is_empty())
}

fn graph_of(arcs: &[(usize, usize, u64)]) -> RetweetGraph {
    RetweetGraph::from_arcs(arcs.iter().map(|&(a, b, w)| (format!("n{a}"), format!("n{b}"), w)))
}

fn partition_of(graph: &RetweetGraph, labels: &[u32]) -> Partition {
    Partition::from_assignment(
        graph.node_ids().iter().map(|id| (id.clone(), labels[id[1..].parse::<usize>().unwrap()])),
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn repeated_www_prefix_is_stripped() {
    let none = ShortenerList::new(Vec::<String>::new());
    assert_eq!(
        extract_domain("http://www.www.news.example/a", &none).unwrap(),
        LinkDomain::Domain("news.example".into())
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn modularity_bounds_and_relabeling(arcs in arcs_strategy(), labels in prop::collection::vec(0u32..4, 10), shift in 1u32..50) {
        let g = graph_of(&arcs);
        let p = partition_of(&g, &labels);
        let q = modularity(&g, &p).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&q));
        prop_assert!(modularity(&g, &Partition::one_community(g.node_ids())).unwrap().abs() < 1e-12);
        let relabeled: Vec<u32> = labels.iter().map(|l| (l + shift) * 7).collect();
        prop_assert!(close(q, modularity(&g, &partition_of(&g, &relabeled)).unwrap(), 1e-12));
    }

    #[test]
    fn graph_ignores_arc_order(arcs in arcs_strategy(), seed in any::<u64>()) {
        let mut shuffled = arcs.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed.wrapping_mul(i as u64 + 17) % (i as u64 + 1)) as usize);
        }
        let (a, b) = (graph_of(&arcs), graph_of(&shuffled));
        let weights = |g: &RetweetGraph| -> BTreeMap<(String, String), u64> {
            g.arcs().map(|((i, j), w)| ((g.node_ids()[i].clone(), g.node_ids()[j].clone()), w)).collect()
        };
        prop_assert_eq!(weights(&a), weights(&b));
        prop_assert_eq!(a.total_weight(), arcs.iter().map(|x| x.2).sum::<u64>());
    }

    #[test]
    fn rand_index_symmetry(a in prop::collection::vec(0u32..4, 6..30), seed in any::<u64>()) {
        let b: Vec<u32> = a.iter().enumerate().map(|(i, &l)| if (seed >> (i % 64)) & 1 == 1 { (l + 1) % 4 } else { l }).collect();
        let pa = Partition::from_assignment(a.iter().enumerate().map(|(i, &l)| (format!("n{i}"), l)));
        let pb = Partition::from_assignment(b.iter().enumerate().map(|(i, &l)| (format!("n{i}"), l)));
        let r = rand_index(&pa, &pb).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(r, rand_index(&pb, &pa).unwrap());
        prop_assert_eq!(rand_index(&pa, &pa).unwrap(), 1.0);
        if let (Ok(x), Ok(y)) = (z_rand(&pa, &pb), z_rand(&pb, &pa)) {
            prop_assert!(close(x, y, 1e-9));
        }
    }

    #[test]
    fn cosine_scale_invariant(words in prop::collection::vec("[a-d]", 3..20), other in prop::collection::vec("[a-d]", 3..20), c in 1u32..5) {
        let u = TokenDoc::from_tokens(words).trigram_counts;
        let v = TokenDoc::from_tokens(other).trigram_counts;
        let scaled: BTreeMap<Trigram, u32> = u.iter().map(|(t, &n)| (t.clone(), n * c)).collect();
        let s = cosine_similarity(&u, &v).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
        prop_assert!(close(s, cosine_similarity(&scaled, &v).unwrap(), 1e-12));
        prop_assert!(close(cosine_similarity(&u, &u).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn trigram_counts_add_up(tweets in prop::collection::vec(prop::collection::vec("[a-c]", 0..8), 1..6)) {
        let docs: Vec<TokenDoc> = tweets.into_iter().map(TokenDoc::from_tokens).collect();
        for d in &docs {
            prop_assert_eq!(d.trigram_total() as usize, d.tokens.len().saturating_sub(2));
        }
        let day = chrono::NaiveDate::from_ymd_opt(2020, 8, 1).unwrap();
        let ids: Vec<String> = (0..docs.len()).map(|i| format!("t{i}")).collect();
        let merged = CommunityDayDoc::from_tweets(0, day, ids.iter().map(String::as_str).zip(docs.iter()));
        let mut expected: BTreeMap<Trigram, u32> = BTreeMap::new();
        for d in &docs {
            for (t, &n) in &d.trigram_counts {
                *expected.entry(t.clone()).or_insert(0) += n;
            }
        }
        prop_assert_eq!(&merged.trigrams, &expected);
    }

    #[test]
    fn burst_affine_invariant(history in prop::collection::vec(0.0f64..1.0, 7..20), value in 0.0f64..1.0, a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let moved: Vec<f64> = history.iter().map(|x| a * x + b).collect();
        match (burst_from_history(value, &history, 7), burst_from_history(a * value + b, &moved, 7)) {
            (Some(x), Some(y)) => prop_assert!(close(x, y, 1e-6)),
            (None, None) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn pca_translation_invariant(m in 2usize..8, n in 1usize..8, seed in prop::collection::vec(0.0f64..1.0, 64), shift in prop::collection::vec(-3.0f64..3.0, 8)) {
        let x = DMatrix::from_fn(m, n, |i, j| seed[i * 8 + j]);
        let moved = DMatrix::from_fn(m, n, |i, j| x[(i, j)] + shift[j]);
        let mk = |v: DMatrix<f64>| DomainMatrix::from_values((0..m as u32).collect(), (0..n).map(|j| format!("d{j}")).collect(), v).unwrap();
        let (Ok(a), Ok(b)) = (
            first_principal_component(&mk(x), &SignConvention::LargestLoadingPositive),
            first_principal_component(&mk(moved), &SignConvention::LargestLoadingPositive),
        ) else {
            return Ok(());
        };
        let norm: f64 = a.loadings.iter().map(|l| l * l).sum::<f64>().sqrt();
        prop_assert!(close(norm, 1.0, 1e-12));
        prop_assert!(a.scores.iter().sum::<f64>().abs() < 1e-9);
        let same = a.scores.iter().zip(&b.scores).all(|(p, q)| (p - q).abs() < 1e-7);
        let flipped = a.scores.iter().zip(&b.scores).all(|(p, q)| (p + q).abs() < 1e-7);
        prop_assert!(same || flipped);
    }

    #[test]
    fn clusters_are_contiguous(scores in prop::collection::vec(-10.0f64..10.0, 3..25), k in 1usize..4, centroid in any::<bool>()) {
        let labeled: Vec<(u32, f64)> = scores.iter().enumerate().map(|(i, &s)| (i as u32, s)).collect();
        let linkage = if centroid { Linkage::Centroid } else { Linkage::Average };
        let Ok(c) = cluster_scores(&labeled, k, linkage) else { return Ok(()); };
        prop_assert_eq!(c.cluster_count(), k);
        let mut sorted = labeled.clone();
        sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
        let seq: Vec<usize> = sorted.iter().map(|(l, _)| c.cluster_of(*l).unwrap()).collect();
        prop_assert!(seq.windows(2).all(|w| w[0] <= w[1]), "{:?}", seq);
        prop_assert!(c.centroids.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn chi_square_scales_with_counts(counts in prop::collection::vec(prop::collection::vec(1u64..50, 3), 2..5), c in 2u64..6) {
        let rows: Vec<String> = (0..counts.len()).map(|i| format!("r{i}")).collect();
        let cols: Vec<String> = (0..3).map(|j| format!("c{j}")).collect();
        let scaled: Vec<Vec<u64>> = counts.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
        let a = chi_square(&ContingencyTable::new(rows.clone(), cols.clone(), counts).unwrap()).unwrap();
        let b = chi_square(&ContingencyTable::new(rows, cols, scaled).unwrap()).unwrap();
        prop_assert!(close(b.statistic, a.statistic * c as f64, 1e-9));
        prop_assert_eq!(a.df, b.df);
    }

    #[test]
    fn alpha_ignores_category_names(values in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 0u32..4), 8), 2..5)) {
        let renamed: Vec<Vec<Option<u32>>> = values.iter().map(|r| r.iter().map(|v| v.map(|x| [9, 2, 40, 7][x as usize])).collect()).collect();
        let a = krippendorff_alpha(&CodingMatrix::from_rows(values).unwrap());
        let b = krippendorff_alpha(&CodingMatrix::from_rows(renamed).unwrap());
        match (a, b) {
            (Ok(x), Ok(y)) => prop_assert!(close(x, y, 1e-12)),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn domain_extraction_idempotent(labels in prop::collection::vec("[a-z]{1,6}", 2..4), path in "[a-z0-9/]{0,10}", www in any::<bool>()) {
        let host = labels.join(".");
        let url = format!("https://{}{host}/{path}", if www { "www." } else { "" });
        let shorteners = ShortenerList::new(["bit.ly"]);
        if let Ok(LinkDomain::Domain(d)) = extract_domain(&url, &shorteners) {
            prop_assert_eq!(extract_domain(&d, &shorteners).unwrap(), LinkDomain::Domain(d.clone()));
            prop_assert_eq!(extract_domain(&format!("http://{d}/x"), &shorteners).unwrap(), LinkDomain::Domain(d));
        }
    }

    #[test]
    fn normalization_is_stable(text in "[A-Za-z #@.:/]{0,60}") {
        let stop = StopWords::new(["the", "a"]);
        let once = normalize_text(&text, &stop);
        let again = normalize_text(&once.tokens.join(" "), &stop);
        prop_assert_eq!(once, again);
    }

    #[test]
    fn tweet_stream_round_trip(rows in prop::collection::vec(("[a-z ]{0,30}", 0u32..40, prop::option::of(0u32..40), 0i64..10_000_000), 1..20)) {
        let records: Vec<TweetRecord> = rows.into_iter().enumerate().map(|(i, (text, author, rt, secs))| TweetRecord {
            tweet_id: format!("{i:05}"),
            author_id: format!("u{author}"),
            created_at: Utc.timestamp_opt(1_590_000_000 + secs, 0).unwrap(),
            text,
            retweeted_author_id: rt.map(|r| format!("u{r}")).filter(|r| *r != format!("u{author}")),
            urls: vec![format!("https://site{i}.example/p")],
        }).collect();
        let mut buf = Vec::new();
        write_tweet_stream(&records, &mut buf).unwrap();
        let back = parse_tweet_stream(buf.as_slice()).unwrap();
        prop_assert_eq!(back.skipped, 0);
        prop_assert_eq!(back.records, records);
    }

    #[test]
    fn svd_factors_are_orthonormal(m in 1usize..12, n in 1usize..12, data in prop::collection::vec(-1.0f64..1.0, 144)) {
        let a = DMatrix::from_fn(m, n, |i, j| data[i * 12 + j]);
        let svd = thin_svd(&a);
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(svd.singular_values.clone()));
        prop_assert!((&svd.u * s * svd.v.transpose() - &a).amax() < 1e-10);
        let r = m.min(n);
        prop_assert!((svd.v.transpose() * &svd.v - DMatrix::identity(r, r)).amax() < 1e-10);
    }

    #[test]
    fn lsa_document_vectors_orthonormal(tweets in prop::collection::vec(prop::collection::vec("[a-c]", 3..9), 1..12)) {
        let docs: Vec<TokenDoc> = tweets.into_iter().map(TokenDoc::from_tokens).collect();
        let ids: Vec<String> = (0..docs.len()).map(|i| format!("t{i:02}")).collect();
        let input: Vec<(&str, &TokenDoc)> = ids.iter().map(String::as_str).zip(docs.iter()).collect();
        let svd = document_svd(&input).unwrap();
        let live: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-9).collect();
        for &i in &live {
            for &j in &live {
                let d = svd.doc_vectors.column(i).dot(&svd.doc_vectors.column(j));
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-9);
            }
        }
    }
}
