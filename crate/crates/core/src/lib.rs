//! Sentinel-node monitoring of retweet communities.
//!
//! A retweet corpus is turned into a weighted directed graph and split into
//! communities with Louvain. The most retweeted accounts of the largest
//! communities act as sentinels. Their links during a baseline period place
//! each community on a linked-domain axis (first principal component of the
//! community x domain matrix), and communities are clustered on that score.
//! Over the monitoring window the crate then measures topic rates per
//! community and daily trigram similarity between clusters. Days with an
//! unusually high similarity are flagged, and LSA picks out the tweets
//! that drove the jump.
//!
//! [`pipeline::run_pipeline`] runs every stage from a
//! [`config::PipelineConfig`] and writes each intermediate artifact, so a run
//! can resume from disk. The modules can also be used one by one; the
//! examples show each step on the bundled synthetic corpus ([`synth`]):
//!
//! | example | shows |
//! |---|---|
//! | `ingest_and_tokenize` | JSON Lines parsing, text cleaning, trigrams, link domains |
//! | `retweet_graph` | graph construction and the largest weak component |
//! | `louvain_communities` | Louvain, modularity, Rand index and z-Rand |
//! | `sentinel_selection` | sentinel choice, coverage and activity ledger |
//! | `linked_domain_pca` | domain matrix, PCA score and clustering |
//! | `topic_rates` | lexicon matching and per-capita topic rates |
//! | `burst_detection` | similarity series, burst scores, ADF test |
//! | `lsa_drivers` | LSA extraction and the removal check on flagged days |
//! | `coding_statistics` | chi-square, Krippendorff's alpha, stratified sampling |
//! | `full_pipeline` | everything end to end |
//!
//! The `sentinel` binary exposes the same stages as subcommands.

pub mod community;
pub mod config;
pub mod domains;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod linalg;
pub mod lsa;
pub mod pipeline;
pub mod sentinel;
pub mod similarity;
pub mod stats;
pub mod synth;
pub mod topics;

pub use error::{Error, Result};
