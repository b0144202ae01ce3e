//! Ready-made inputs built on the bundled lexicons: complete dictionaries,
//! the hideout/store example, seeded sentence sets and probe-induced
//! dictionaries.

use crate::dictionary::{
    build_dictionary, BuildConfig, BuildReport, DictKey, DictionaryError, DictionaryMode, RankedEntry, WordDictionary,
};
use crate::engine::MockLexicon;
use crate::evaluation::generate_synthetic_corpus;
use crate::mechanisms::DictionarySet;
use crate::text::{PosLexicon, Tagger, Vocabulary};

pub const RUNNING_EXAMPLE: &str = "Alice is heading to the hideout.";
pub const RUNNING_EXAMPLE_PUBLIC: &str = "Bob is heading to the store.";
pub const RUNNING_EXAMPLE_TRANSLATED: &str = "Alice se dirige vers la cachette.";

/// Token index and substitute of the example's two replacements.
pub const RUNNING_EXAMPLE_SUBSTITUTIONS: [(usize, &str); 2] = [(0, "bob"), (5, "store")];

/// One-entry lists taken straight from the mock lexicon, score 1. Keys of
/// the POS-keyed dictionary use each word's lexicon tag.
pub fn lexicon_dictionary(mode: DictionaryMode) -> WordDictionary {
    let lexicon = MockLexicon::fixture();
    let tags = PosLexicon::fixture();
    let lists = lexicon.entries().map(|(source, target)| {
        let key = match mode {
            DictionaryMode::Plain => DictKey::plain(source),
            DictionaryMode::PosKeyed => {
                DictKey::tagged(source, tags.get(source).expect("every lexicon word is tagged"))
            }
        };
        (
            key,
            vec![RankedEntry {
                target: target.to_string(),
                score: 1.0,
            }],
        )
    });
    WordDictionary::from_lists(mode, lists).expect("lexicon dictionary is valid")
}

/// Both complete dictionaries, for exact round trips.
pub fn lexicon_dictionaries() -> DictionarySet {
    DictionarySet::new(
        lexicon_dictionary(DictionaryMode::Plain),
        lexicon_dictionary(DictionaryMode::PosKeyed),
    )
}

/// `count` single sentences cut from seeded synthetic stories.
pub fn sentences(count: usize, seed: u64) -> Vec<String> {
    if count == 0 {
        return Vec::new();
    }
    let corpus = generate_synthetic_corpus(count.div_ceil(2), seed).expect("non-empty corpus");
    let mut out = corpus.sentences();
    out.truncate(count);
    out
}

/// Sentences standing in for the public monolingual corpus that
/// dictionaries are induced from.
pub fn public_corpus(seed: u64) -> Vec<String> {
    sentences(600, seed ^ 0x7075_626c_6963)
}

/// Every word of the bundled lexicon.
pub fn lexicon_vocabulary() -> Vocabulary {
    Vocabulary::new(MockLexicon::fixture().entries().map(|(s, _)| s)).expect("lexicon is non-empty")
}

/// Plain and POS-keyed dictionaries induced by probing the mock engine with
/// [`public_corpus`], over the whole lexicon vocabulary.
pub fn induced_dictionaries(
    samples_per_word: usize,
    seed: u64,
) -> Result<(DictionarySet, BuildReport, BuildReport), DictionaryError> {
    let engine = MockLexicon::fixture();
    let tagger = Tagger::fixture();
    let corpus = public_corpus(seed);
    let vocab = lexicon_vocabulary();
    let config = BuildConfig {
        samples_per_word,
        seed,
        ..BuildConfig::default()
    };
    let (plain, _, plain_report) = build_dictionary(&corpus, &engine, &vocab, &tagger, &config)?;
    let pos_config = BuildConfig {
        mode: DictionaryMode::PosKeyed,
        ..config
    };
    let (pos, _, pos_report) = build_dictionary(&corpus, &engine, &vocab, &tagger, &pos_config)?;
    Ok((DictionarySet::new(plain, pos), plain_report, pos_report))
}
