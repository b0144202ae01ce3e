use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::engine::MockLexicon;
use crate::text::tokenize;

pub const NAMES: &[&str] = &[
    "alice", "bob", "carol", "david", "emma", "frank", "grace", "henry", "iris", "jack", "kate", "leo", "mia", "noah",
    "olivia", "peter", "quinn", "rosa", "sam", "tina", "victor", "wendy",
];
pub const PLACES: &[&str] = &[
    "bakery", "beach", "castle", "church", "farm", "forest", "garden", "harbor", "hideout", "lake", "library",
    "market", "museum", "park", "river", "school", "station", "store",
];
pub const OBJECTS: &[&str] = &[
    "apple", "ball", "basket", "bicycle", "book", "bottle", "box", "cake", "candle", "clock", "coin", "guitar", "hat",
    "key", "kite", "lamp", "letter", "map", "shoe", "umbrella",
];
pub const ANIMALS: &[&str] = &[
    "bear", "bird", "cat", "cow", "dog", "duck", "fox", "frog", "goat", "horse", "mouse", "owl", "pig", "rabbit",
    "sheep", "squirrel", "turtle", "wolf",
];
pub const COLORS: &[&str] = &[
    "black", "blue", "brown", "gray", "green", "pink", "purple", "red", "white", "yellow",
];

/// `{N}` name, `{P}` place, `{O}` object, `{A}` animal, `{C}` color.
const TEMPLATES: &[&str] = &[
    "{N} went to the {P} one morning. {N} carried a {C} {O} and saw a {A} there.",
    "One afternoon {N} walked to the {P} with a {C} {O}. A hungry {A} watched {N} and then ran home.",
    "{N} visited the {P} on a cold day. {N} fed a {A} and found a {C} {O} there.",
    "At the {P}, {N} found a {C} {O}. Later {N} played with a small {A}.",
    "{N} wanted a {C} {O} for the weekend. {N} took it to the {P} and met a happy {A}.",
    "Every evening {N} waited at the {P}. A {A} smiled at {N} because {N} had a {C} {O}.",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
    C,
    D,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::A, Label::B, Label::C, Label::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        ["A", "B", "C", "D"][self.index()]
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Label::A),
            "B" | "b" => Ok(Label::B),
            "C" | "c" => Ok(Label::C),
            "D" | "d" => Ok(Label::D),
            other => Err(format!("invalid answer label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    pub text: String,
}

/// A four-way multiple-choice question about one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub doc_id: usize,
    pub question: String,
    pub choices: [String; 4],
    pub answer: Label,
    /// Lowercase words the oracle looks for, one set per choice.
    pub probe_tokens: [Vec<String>; 4],
}

impl QaItem {
    /// The same item with every probe word mapped through `lexicon`, so
    /// that it can be checked against target-language text.
    pub fn translated(&self, lexicon: &MockLexicon) -> QaItem {
        let mut out = self.clone();
        for probes in &mut out.probe_tokens {
            for p in probes.iter_mut() {
                if let Some(t) = lexicon.get(p) {
                    *p = t.to_string();
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub items: Vec<QaItem>,
}

impl SyntheticCorpus {
    pub fn items_for(&self, doc_id: usize) -> impl Iterator<Item = &QaItem> {
        self.items.iter().filter(move |q| q.doc_id == doc_id)
    }

    /// Every sentence of every document, in order.
    pub fn sentences(&self) -> Vec<String> {
        self.documents.iter().flat_map(|d| split_sentences(&d.text)).collect()
    }
}

/// Split after `.`, `!` or `?` followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            out.push(current.trim().to_string());
            current.clear();
        }
    }
    if !current.trim().is_empty() {
        out.push(current.trim().to_string());
    }
    out
}

fn title(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

const QUESTIONS: [(&str, &[&str]); 4] = [
    ("Who is the story about?", NAMES),
    ("Where does the story take place?", PLACES),
    ("Which object is mentioned?", OBJECTS),
    ("Which animal appears?", ANIMALS),
];

/// Templated short stories with four questions each, answered by the name,
/// place, object and animal slot fillers. Distractor choices never occur in
/// their document, so the oracle evaluator answers every question correctly
/// on the plain text.
pub fn generate_synthetic_corpus(size: usize, seed: u64) -> Result<SyntheticCorpus, EvalError> {
    if size == 0 {
        return Err(EvalError::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = Vec::with_capacity(size);
    let mut items = Vec::with_capacity(size * 4);
    for id in 0..size {
        let template = TEMPLATES.choose(&mut rng).expect("templates");
        let fillers = [
            *NAMES.choose(&mut rng).expect("names"),
            *PLACES.choose(&mut rng).expect("places"),
            *OBJECTS.choose(&mut rng).expect("objects"),
            *ANIMALS.choose(&mut rng).expect("animals"),
        ];
        let color = *COLORS.choose(&mut rng).expect("colors");
        let text = template
            .replace("{N}", &title(fillers[0]))
            .replace("{P}", fillers[1])
            .replace("{O}", fillers[2])
            .replace("{A}", fillers[3])
            .replace("{C}", color);
        let in_doc: HashSet<String> = tokenize(&text).word_keys().collect();

        for (slot, ((question, pool), answer_word)) in QUESTIONS.iter().zip(fillers).enumerate() {
            let mut distractors: Vec<&str> = pool.iter().copied().filter(|w| !in_doc.contains(*w)).collect();
            distractors.shuffle(&mut rng);
            let answer = Label::ALL[rng.random_range(0..4)];
            let mut words = distractors[..3].to_vec();
            words.insert(answer.index(), answer_word);
            let display = |w: &str| if slot == 0 { title(w) } else { w.to_string() };
            items.push(QaItem {
                doc_id: id,
                question: question.to_string(),
                choices: std::array::from_fn(|i| display(words[i])),
                answer,
                probe_tokens: std::array::from_fn(|i| vec![words[i].to_string()]),
            });
        }
        documents.push(Document { id, text });
    }
    Ok(SyntheticCorpus { documents, items })
}
