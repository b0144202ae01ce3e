use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{rank_order, ConfidenceTable, DictKey, DictionaryError, DictionaryMode, RankedEntry, WordDictionary};
use crate::engine::{EngineError, Translator};
use crate::text::{detokenize, substitute_token, tokenize, PosTag, TaggedText, Tagger, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub mode: DictionaryMode,
    pub samples_per_word: usize,
    pub seed: u64,
    /// Additive smoothing on both appearance rates.
    pub alpha: f64,
    /// Candidates kept per key.
    pub top_k: usize,
    /// Keys probed fewer times than this are dropped.
    pub min_support: usize,
    /// Concurrent engine callers.
    pub max_in_flight: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            mode: DictionaryMode::Plain,
            samples_per_word: 1000,
            seed: 0,
            alpha: 1.0,
            top_k: 10,
            min_support: 10,
            max_in_flight: 4,
        }
    }
}

/// Raw appearance counts. Appearance is per sentence: a target word counts
/// once per translation no matter how often it occurs in it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeStats {
    pub base_counts: HashMap<String, u32>,
    pub base_trials: u32,
    pub cond_counts: BTreeMap<DictKey, HashMap<String, u32>>,
    pub cond_trials: BTreeMap<DictKey, u32>,
}

/// Smoothed ratio `((c+α)/(T+α)) / ((b+α)/(B+α))` where `c` of `T`
/// conditional translations and `b` of `B` base translations contain
/// `target`.
pub fn score(stats: &ProbeStats, key: &DictKey, target: &str, alpha: f64) -> Result<f64, DictionaryError> {
    let cond_trials = *stats
        .cond_trials
        .get(key)
        .filter(|&&t| t > 0)
        .ok_or_else(|| DictionaryError::UnknownKey(key.clone()))?;
    if stats.base_trials == 0 {
        return Err(DictionaryError::UnknownKey(key.clone()));
    }
    let cond = stats
        .cond_counts
        .get(key)
        .and_then(|m| m.get(target))
        .copied()
        .unwrap_or(0);
    let base = stats.base_counts.get(target).copied().unwrap_or(0);
    Ok(smoothed_ratio(cond, cond_trials, base, stats.base_trials, alpha))
}

fn smoothed_ratio(cond: u32, cond_trials: u32, base: u32, base_trials: u32, alpha: f64) -> f64 {
    let cond_rate = (cond as f64 + alpha) / (cond_trials as f64 + alpha);
    let base_rate = (base as f64 + alpha) / (base_trials as f64 + alpha);
    cond_rate / base_rate
}

/// What happened during a build, besides the dictionary itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    pub stats: ProbeStats,
    /// Keys dropped for falling under `min_support` or never being
    /// placeable in any corpus sentence.
    pub dropped: Vec<DictKey>,
    pub engine_calls: usize,
}

struct Sentence {
    tokens: TaggedText,
    words: Vec<usize>,
    by_tag: HashMap<PosTag, Vec<usize>>,
}

fn appearance_set(translation: &str) -> HashSet<String> {
    tokenize(translation).word_keys().collect()
}

/// Probe `engine` to induce `L(w)` (or `L(w, s)`) for every word in `vocab`.
///
/// A shared base pool of `samples_per_word` corpus sentences is translated
/// once. Each key then draws its own `samples_per_word` sentences, replaces
/// one uniformly chosen word (one with tag `s` in POS-keyed mode) by `w`,
/// and translates the result. All draws are uniform with replacement and
/// seeded, so the output is independent of `max_in_flight`.
pub fn build_dictionary(
    corpus: &[String],
    engine: &dyn Translator,
    vocab: &Vocabulary,
    tagger: &Tagger,
    config: &BuildConfig,
) -> Result<(WordDictionary, ConfidenceTable, BuildReport), DictionaryError> {
    if corpus.iter().all(|s| s.trim().is_empty()) {
        return Err(DictionaryError::EmptyCorpus);
    }
    if config.samples_per_word == 0 {
        return Err(DictionaryError::NoSamples);
    }

    let sentences: Vec<Sentence> = corpus
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let tokens = tagger.tag(tokenize(s));
            let words = tokens.word_positions();
            let mut by_tag: HashMap<PosTag, Vec<usize>> = HashMap::new();
            for &i in &words {
                by_tag.entry(tokens.tags()[i]).or_default().push(i);
            }
            Sentence { tokens, words, by_tag }
        })
        .filter(|s| !s.words.is_empty())
        .collect();
    if sentences.is_empty() {
        return Err(DictionaryError::NoWords);
    }

    let keys = probe_keys(&sentences, vocab, tagger, config.mode);
    let samples = config.samples_per_word;
    let calls = AtomicUsize::new(0);

    // Base pool, stream 0.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut base_cache: HashMap<usize, HashSet<String>> = HashMap::new();
    let mut stats = ProbeStats::default();
    for _ in 0..samples {
        let index = rng.random_range(0..sentences.len());
        let seen = match base_cache.entry(index) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                let text = detokenize(&sentences[index].tokens);
                let translated = engine.translate(&text).map_err(|source| DictionaryError::Engine {
                    key: DictKey::plain(""),
                    source,
                })?;
                calls.fetch_add(1, Ordering::Relaxed);
                e.insert(appearance_set(&translated))
            }
        };
        for v in seen.iter() {
            *stats.base_counts.entry(v.clone()).or_insert(0) += 1;
        }
        stats.base_trials += 1;
    }

    // Conditional probes, one ChaCha stream per key.
    let results: Mutex<Vec<Option<KeyProbe>>> = Mutex::new((0..keys.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let failure: Mutex<Option<DictionaryError>> = Mutex::new(None);
    let workers = config.max_in_flight.clamp(1, keys.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if failure.lock().unwrap().is_some() {
                    return;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= keys.len() {
                    return;
                }
                match probe_key(&keys[i], i as u64 + 1, &sentences, engine, config, &calls) {
                    Ok(probe) => results.lock().unwrap()[i] = Some(probe),
                    Err(source) => {
                        let mut slot = failure.lock().unwrap();
                        if slot.is_none() {
                            *slot = Some(DictionaryError::Engine {
                                key: keys[i].clone(),
                                source,
                            });
                        }
                        return;
                    }
                }
            });
        }
    });
    if let Some(err) = failure.into_inner().unwrap() {
        return Err(err);
    }

    let mut report = BuildReport::default();
    let mut lists = Vec::new();
    for (key, probe) in keys.into_iter().zip(results.into_inner().unwrap()) {
        let probe = probe.expect("every key probed");
        stats.cond_trials.insert(key.clone(), probe.trials);
        stats.cond_counts.insert(key.clone(), probe.counts);
        if (probe.trials as usize) < config.min_support {
            report.dropped.push(key);
            continue;
        }
        let mut list: Vec<RankedEntry> = stats.cond_counts[&key]
            .keys()
            .map(|v| RankedEntry {
                target: v.clone(),
                score: score(&stats, &key, v, config.alpha).expect("key has trials"),
            })
            .collect();
        if list.is_empty() {
            report.dropped.push(key);
            continue;
        }
        list.sort_by(rank_order);
        list.truncate(config.top_k.max(1));
        lists.push((key, list));
    }

    let dict = WordDictionary::from_lists(config.mode, lists)?;
    let confidence = ConfidenceTable::from_dictionary(&dict);
    report.stats = stats;
    report.engine_calls = calls.into_inner();
    Ok((dict, confidence, report))
}

fn probe_keys(sentences: &[Sentence], vocab: &Vocabulary, tagger: &Tagger, mode: DictionaryMode) -> Vec<DictKey> {
    match mode {
        DictionaryMode::Plain => vocab.iter().map(DictKey::plain).collect(),
        DictionaryMode::PosKeyed => {
            let mut observed: BTreeMap<String, BTreeSet<PosTag>> = BTreeMap::new();
            for s in sentences {
                for &i in &s.words {
                    let word = s.tokens.tokens()[i].key();
                    if vocab.contains(&word) {
                        observed.entry(word).or_default().insert(s.tokens.tags()[i]);
                    }
                }
            }
            let mut keys = Vec::new();
            for word in vocab.iter() {
                match observed.get(word) {
                    Some(tags) => keys.extend(tags.iter().map(|&t| DictKey::tagged(word, t))),
                    None => keys.push(DictKey::tagged(word, tagger.tag_word_alone(word))),
                }
            }
            keys
        }
    }
}

struct KeyProbe {
    trials: u32,
    counts: HashMap<String, u32>,
}

fn probe_key(
    key: &DictKey,
    stream: u64,
    sentences: &[Sentence],
    engine: &dyn Translator,
    config: &BuildConfig,
    calls: &AtomicUsize,
) -> Result<KeyProbe, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);

    let eligible: Vec<usize> = match key.tag {
        None => (0..sentences.len()).collect(),
        Some(tag) => (0..sentences.len())
            .filter(|&i| sentences[i].by_tag.contains_key(&tag))
            .collect(),
    };
    let mut probe = KeyProbe {
        trials: 0,
        counts: HashMap::new(),
    };
    if eligible.is_empty() {
        return Ok(probe);
    }

    let mut cache: HashMap<String, HashSet<String>> = HashMap::new();
    for _ in 0..config.samples_per_word {
        // Uniform sentence, resampled until it has a slot with the key's tag.
        let sentence = loop {
            let s = &sentences[rng.random_range(0..sentences.len())];
            match key.tag {
                None => break s,
                Some(tag) if s.by_tag.contains_key(&tag) => break s,
                Some(_) => continue,
            }
        };
        let slots = match key.tag {
            None => &sentence.words,
            Some(tag) => &sentence.by_tag[&tag],
        };
        let position = slots[rng.random_range(0..slots.len())];
        let replaced = substitute_token(&sentence.tokens, position, &key.word).expect("word slot and vocabulary word");
        let text = detokenize(&replaced);
        if !cache.contains_key(&text) {
            let translated = engine.translate(&text)?;
            calls.fetch_add(1, Ordering::Relaxed);
            cache.insert(text.clone(), appearance_set(&translated));
        }
        for v in &cache[&text] {
            *probe.counts.entry(v.clone()).or_insert(0) += 1;
        }
        probe.trials += 1;
    }
    Ok(probe)
}
