//! Ranking of static-analysis warnings by likelihood of being true positives.
//!
//! The pipeline parses a mini-C corpus, builds an inter-procedural system
//! dependence graph, slices each warning's context, abstracts and tokenizes
//! it, embeds the tokens with CBOW vectors and scores the result with a
//! two-branch BiLSTM network. Ranked lists are evaluated with Top-k%
//! precision and recall under stratified cross-validation.

pub mod dependence;
pub mod frontend;
pub mod slicer;
pub mod warnings;
pub mod preprocess;
pub mod embedding;
pub mod neural;
pub mod seeds;
pub mod eval;
pub mod harness;
