//! Weakly supervised lexicon induction and multi-label cause identification
//! for short incident narratives.

pub mod bootstrap;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod labeler;
pub mod multilabel;
pub mod patterns;

pub use bootstrap::{Lexicon, LexiconEntry, Thresholds};
pub use corpus::{Category, Document, SeedLexicon};
pub use error::{Error, Result};
pub use labeler::LabelSet;
pub use patterns::{CooccurrenceIndex, Pattern, PatternConfig, Target, TargetKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
