//! Corpus pipeline for extracting food–chemical `contains` relations from
//! scientific abstracts.
//!
//! The stages follow the order in which a corpus is built:
//!
//! 1. [`corpus`]: fetch, cache and parse PubMed abstracts.
//! 2. [`segment`]: sentence splitting and tokenization with character offsets.
//! 3. [`ner`]: gazetteer matching, external annotation import and food voting.
//! 4. [`relevance`]: co-occurrence pre-filter and relevance classification.
//! 5. [`pairs`]: masked candidate pairs and the labeled sample format.
//! 6. [`classifier`]: native hashed n-gram baseline and the classifier wire protocol.
//! 7. [`silver`]: unanimous voting over several classifiers.
//! 8. [`experiment`]: stratified k-fold evaluation of the training strategies.
//!
//! [`pipeline`] chains the stages together and backs the `relex` binary.

pub mod classifier;
pub mod config;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod ner;
pub mod pairs;
pub mod pipeline;
pub mod relevance;
pub mod segment;
pub mod silver;
pub mod text;

pub use error::{Error, Result};
