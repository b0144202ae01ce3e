use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EvalError, Label, QaItem, SyntheticCorpus, TradeoffCurve, TradeoffPoint};
use crate::engine::{MockLexicon, Translator};
use crate::mechanisms::{run_pipeline, DecodeMode, DictionarySet, MechanismParams, Method};
use crate::text::{tokenize, Tagger};

/// Answers a question from a reference text.
pub trait Evaluator: Send + Sync {
    fn answer(&self, reference: &str, item: &QaItem) -> Label;
}

/// The first label (A to D) all of whose probe words occur in the
/// reference; `A` when none does.
pub fn oracle_evaluate(reference: &str, item: &QaItem) -> Label {
    let words: HashSet<String> = tokenize(reference).word_keys().collect();
    Label::ALL
        .into_iter()
        .find(|l| {
            let probes = &item.probe_tokens[l.index()];
            !probes.is_empty() && probes.iter().all(|p| words.contains(&p.to_lowercase()))
        })
        .unwrap_or(Label::A)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleEvaluator;

impl Evaluator for OracleEvaluator {
    fn answer(&self, reference: &str, item: &QaItem) -> Label {
        oracle_evaluate(reference, item)
    }
}

/// Always right, whatever the text. An upper bound on any adversary.
#[derive(Debug, Clone, Copy, Default)]
pub struct GoldEvaluator;

impl Evaluator for GoldEvaluator {
    fn answer(&self, _reference: &str, item: &QaItem) -> Label {
        item.answer
    }
}

/// What gets evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MechanismKind {
    /// Send the text unchanged.
    Identity,
    PrismR,
    PrismStar,
    Mixed {
        beta: f64,
    },
    /// Guided encoding without decoding the translation.
    NoDecode,
}

impl MechanismKind {
    pub fn name(&self) -> String {
        match self {
            MechanismKind::Identity => "identity".into(),
            MechanismKind::PrismR => "prism-r".into(),
            MechanismKind::PrismStar => "prism-star".into(),
            MechanismKind::Mixed { beta } => format!("mixed-{beta}"),
            MechanismKind::NoDecode => "no-decode".into(),
        }
    }

    /// Encoder parameters at ratio `r`, `None` for the identity.
    pub fn params(&self, r: f64, seed: u64) -> Result<Option<MechanismParams>, EvalError> {
        Ok(match *self {
            MechanismKind::Identity => None,
            MechanismKind::PrismR => Some(MechanismParams::prism_r(r, seed)?),
            MechanismKind::PrismStar | MechanismKind::NoDecode => {
                Some(MechanismParams::new(Method::PrismStar, r, seed)?)
            }
            MechanismKind::Mixed { beta } => Some(MechanismParams::mixed(r, beta, seed)?),
        })
    }

    fn decode_mode(&self) -> DecodeMode {
        match self {
            MechanismKind::NoDecode => DecodeMode::Skip,
            _ => DecodeMode::Decode,
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        if let Some(beta) = s.strip_prefix("mixed-").or_else(|| s.strip_prefix("mixed:")) {
            let beta: f64 = beta.parse().map_err(|_| format!("invalid beta {beta:?}"))?;
            return Ok(MechanismKind::Mixed { beta });
        }
        match s.as_str() {
            "identity" => Ok(MechanismKind::Identity),
            "prism-r" => Ok(MechanismKind::PrismR),
            "prism-star" | "prism*" => Ok(MechanismKind::PrismStar),
            "no-decode" | "nodecode" => Ok(MechanismKind::NoDecode),
            other => Err(format!("unknown mechanism {other:?}")),
        }
    }
}

/// Everything a sweep needs besides the corpus.
#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    pub dicts: &'a DictionarySet,
    pub tagger: &'a Tagger,
    pub engine: &'a dyn Translator,
    pub engine_id: &'a str,
    /// Maps question probes into the target language.
    pub probe_lexicon: &'a MockLexicon,
    pub evaluator: &'a dyn Evaluator,
    /// Per-document encoder seeds derive from this.
    pub seed: u64,
}

/// Seed for document `doc_id`. Independent of the ratio, so every point of
/// a sweep sees the same random draws.
pub fn document_seed(master: u64, doc_id: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(doc_id as u64 + 1);
    rng.next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScores {
    pub pps: f64,
    pub qs: f64,
}

fn check(corpus: &SyntheticCorpus) -> Result<(), EvalError> {
    if corpus.documents.is_empty() || corpus.items.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    Ok(())
}

/// PPS and QS of one mechanism at ratio `r`, from a single pipeline run per
/// document. PPS = 1 − accuracy of the evaluator on `x_pub`; QS = accuracy
/// on the decoded translation with translated probes.
pub fn evaluate_point(
    mechanism: MechanismKind,
    r: f64,
    corpus: &SyntheticCorpus,
    ctx: &EvalContext<'_>,
) -> Result<PointScores, EvalError> {
    check(corpus)?;
    let mut exposed_correct = 0usize;
    let mut decoded_correct = 0usize;
    let mut total = 0usize;
    for doc in &corpus.documents {
        let seed = document_seed(ctx.seed, doc.id);
        let (x_pub, y_pri) = match mechanism.params(r, seed)? {
            None => (doc.text.clone(), ctx.engine.translate(&doc.text)?),
            Some(params) => {
                let run = run_pipeline(
                    &doc.text,
                    ctx.dicts,
                    ctx.tagger,
                    &params,
                    ctx.engine,
                    mechanism.decode_mode(),
                )?;
                (run.encoded.x_pub, run.decoded.y_pri)
            }
        };
        for item in corpus.items_for(doc.id) {
            total += 1;
            if ctx.evaluator.answer(&x_pub, item) == item.answer {
                exposed_correct += 1;
            }
            if ctx.evaluator.answer(&y_pri, &item.translated(ctx.probe_lexicon)) == item.answer {
                decoded_correct += 1;
            }
        }
    }
    Ok(PointScores {
        pps: 1.0 - exposed_correct as f64 / total as f64,
        qs: decoded_correct as f64 / total as f64,
    })
}

/// 1 − accuracy of the evaluator on the encoded documents. Questions never
/// reach the encoder.
pub fn pps(
    mechanism: MechanismKind,
    r: f64,
    corpus: &SyntheticCorpus,
    tagger: &Tagger,
    dicts: &DictionarySet,
    evaluator: &dyn Evaluator,
    seed: u64,
) -> Result<f64, EvalError> {
    check(corpus)?;
    let mut correct = 0usize;
    let mut total = 0usize;
    for doc in &corpus.documents {
        let x_pub = match mechanism.params(r, document_seed(seed, doc.id))? {
            None => doc.text.clone(),
            Some(params) => crate::mechanisms::encode(&doc.text, dicts, tagger, &params)?.x_pub,
        };
        for item in corpus.items_for(doc.id) {
            total += 1;
            if evaluator.answer(&x_pub, item) == item.answer {
                correct += 1;
            }
        }
    }
    Ok(1.0 - correct as f64 / total as f64)
}

/// Accuracy of the evaluator on the full encode, translate, decode output.
pub fn qs(mechanism: MechanismKind, r: f64, corpus: &SyntheticCorpus, ctx: &EvalContext<'_>) -> Result<f64, EvalError> {
    Ok(evaluate_point(mechanism, r, corpus, ctx)?.qs)
}

/// One point per distinct grid value, evaluated in parallel, assembled into
/// a curve. The result does not depend on scheduling.
pub fn sweep(
    mechanism: MechanismKind,
    grid: &[f64],
    corpus: &SyntheticCorpus,
    ctx: &EvalContext<'_>,
) -> Result<TradeoffCurve, EvalError> {
    let mut values: Vec<f64> = grid.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    if values.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let results: Vec<Result<TradeoffPoint, EvalError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|&r| {
                scope.spawn(move || {
                    let s = evaluate_point(mechanism, r, corpus, ctx)?;
                    Ok(TradeoffPoint {
                        param: r,
                        pps: s.pps,
                        qs: s.qs,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let points = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    TradeoffCurve::new(mechanism.name(), ctx.engine_id, points)
}

/// The default grid 0.1, 0.2, …, 0.9.
pub fn default_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}
