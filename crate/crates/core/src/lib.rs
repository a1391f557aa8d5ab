//! Item-ID construction for generative recommenders.
//!
//! The crate turns user–item interaction logs into token-sequence item IDs under
//! several indexing schemes (random, title, independent, sequential,
//! collaborative, semantic and hybrid), builds the prefix trie used for
//! constrained decoding, and measures the resulting assignments.
//!
//! Pipeline overview:
//!
//! ```text
//! interactions.tsv ──▶ corpus ──▶ split ──▶ co-occurrence graph ──▶ cluster tree
//!                         │          │                                  │
//!   metadata.jsonl ───────┘          └──────────▶ indexing ◀────────────┘
//!                                                     │
//!                                          trie / analysis / map.tsv
//! ```

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod indexing;
pub mod seed;
pub mod spectral;
pub mod tokenization;
pub mod trie;

pub use error::{Error, Result};
