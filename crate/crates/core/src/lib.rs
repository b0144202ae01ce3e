//! User-side privacy for black-box machine translation.
//!
//! Sensitive words are swapped for other dictionary words before text leaves
//! the machine, the masked text is translated by an untrusted engine, and the
//! substitutions are undone in the translated output using an induced word
//! translation dictionary.
//!
//! * [`text`] tokenization, POS tagging and case-preserving substitution.
//! * [`engine`] the mock and remote translators plus the outbound audit log.
//! * [`dictionary`] Monte-Carlo dictionary induction, persistence and lookup.
//! * [`mechanisms`] the randomized (differentially private) and the
//!   confidence-guided encoders, decoding, and the ε calculus.
//! * [`evaluation`] privacy/quality scoring, trade-off sweeps and AUPQC.

pub mod dictionary;
pub mod engine;
pub mod evaluation;
pub mod fixtures;
pub mod mechanisms;
pub mod text;

pub use engine::{AuditLog, EngineDescriptor, EngineRegistry, MockLexicon, Translator};
pub use text::{PosTag, TaggedText, Token};
