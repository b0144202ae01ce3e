use std::collections::HashSet;

use proptest::prelude::*;

use prism_core::engine::{MockLexicon, Translator};
use prism_core::evaluation::{aupqc, TradeoffCurve, TradeoffPoint};
use prism_core::fixtures;
use prism_core::mechanisms::{
    decode, encode, encode_mixed, encode_prism_r, encode_prism_star, run_pipeline, Branch, DecodeMode, DictionarySet,
    MechanismParams,
};
use prism_core::text::{detokenize, normalize, tokenize, Tagger};

fn dicts() -> &'static DictionarySet {
    static DICTS: std::sync::OnceLock<DictionarySet> = std::sync::OnceLock::new();
    DICTS.get_or_init(fixtures::lexicon_dictionaries)
}

fn lexicon_words() -> Vec<String> {
    MockLexicon::fixture().entries().map(|(s, _)| s.to_string()).collect()
}

/// Sentences of lexicon words with occasional capitals and punctuation.
fn sentence() -> impl Strategy<Value = String> {
    let word = (
        prop::sample::select(lexicon_words()),
        any::<bool>(),
        prop::sample::select(vec!["", "", "", ",", ";"]),
    )
        .prop_map(|(w, cap, punct)| {
            let w = if cap {
                let mut c = w.chars();
                c.next().unwrap().to_uppercase().chain(c).collect()
            } else {
                w
            };
            format!("{w}{punct}")
        });
    (
        prop::collection::vec(word, 1..14),
        prop::sample::select(vec![".", "!", "?", ""]),
    )
        .prop_map(|(words, end)| format!("{}{end}", words.join(" ")))
}

fn ratio() -> impl Strategy<Value = f64> {
    (1u32..100).prop_map(|p| p as f64 / 100.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn round_trip_prism_r(text in sentence(), r in ratio(), seed in any::<u64>()) {
        let lexicon = MockLexicon::fixture();
        let params = MechanismParams::prism_r(r, seed).unwrap();
        let run = run_pipeline(&text, dicts(), &Tagger::fixture(), &params, &lexicon, DecodeMode::Decode).unwrap();
        prop_assert!(run.decoded.misses.is_empty());
        prop_assert_eq!(run.decoded.y_pri, lexicon.translate(&text).unwrap());
    }

    #[test]
    fn round_trip_prism_star(text in sentence(), r in ratio()) {
        let lexicon = MockLexicon::fixture();
        let params = MechanismParams::prism_star(r).unwrap();
        let run = run_pipeline(&text, dicts(), &Tagger::fixture(), &params, &lexicon, DecodeMode::Decode).unwrap();
        prop_assert!(run.decoded.misses.is_empty());
        prop_assert_eq!(run.decoded.y_pri, lexicon.translate(&text).unwrap());
    }

    #[test]
    fn token_count_and_history_reconstruct_source(text in sentence(), r in ratio(), seed in any::<u64>(), star in any::<bool>()) {
        let tagger = Tagger::fixture();
        let out = if star {
            encode_prism_star(&text, &dicts().pos_keyed, &dicts().confidence, &tagger, &MechanismParams::prism_star(r).unwrap())
        } else {
            encode_prism_r(&text, &dicts().plain, &MechanismParams::prism_r(r, seed).unwrap())
        }
        .unwrap();
        let private = tokenize(&text);
        let public = tokenize(&out.x_pub);
        prop_assert_eq!(private.len(), public.len());
        prop_assert_eq!(out.history.source_len, private.len());

        let mut positions = HashSet::new();
        let mut rebuilt: Vec<String> = public.tokens().iter().map(|t| t.surface().to_string()).collect();
        for record in out.history.iter() {
            prop_assert!(positions.insert(record.position));
            prop_assert_eq!(&rebuilt[record.position], &record.substitute);
            rebuilt[record.position] = record.original.clone();
        }
        let original: Vec<String> = private.tokens().iter().map(|t| t.surface().to_string()).collect();
        prop_assert_eq!(rebuilt, original);
    }

    #[test]
    fn prism_star_meets_its_quota(text in sentence(), r in ratio()) {
        let tagger = Tagger::fixture();
        let out = encode_prism_star(&text, &dicts().pos_keyed, &dicts().confidence, &tagger, &MechanismParams::prism_star(r).unwrap()).unwrap();
        let n = tokenize(&text).word_count();
        let target = ((r * n as f64) - 1e-9).ceil() as usize;
        prop_assert!(out.history.len() <= target);
        if out.warning.is_none() {
            prop_assert_eq!(out.history.len(), target);
        }
        let again = encode_prism_star(&text, &dicts().pos_keyed, &dicts().confidence, &tagger, &MechanismParams::prism_star(r).unwrap()).unwrap();
        prop_assert_eq!(out, again);
    }

    #[test]
    fn decode_accounts_for_every_record(text in sentence(), noise in sentence(), r in ratio(), seed in any::<u64>()) {
        let out = encode_prism_r(&text, &dicts().plain, &MechanismParams::prism_r(r, seed).unwrap()).unwrap();
        // Decode against an unrelated translation: every record must be
        // consumed once or reported.
        let y_pub = MockLexicon::fixture().translate(&noise).unwrap();
        let result = decode(&y_pub, &out.history, &dicts().plain);
        let hits: Vec<usize> = result.replaced.iter().flatten().copied().collect();
        prop_assert_eq!(hits.len() + result.misses.len(), out.history.len());
        prop_assert_eq!(hits.iter().collect::<HashSet<_>>().len(), hits.len());
        prop_assert_eq!(tokenize(&result.y_pri).len(), tokenize(&y_pub).len());
    }

    #[test]
    fn mixed_extremes_match_components(text in sentence(), r in ratio(), seed in any::<u64>()) {
        let tagger = Tagger::fixture();
        let never = encode_mixed(&text, dicts(), &tagger, &MechanismParams::mixed(r, 0.0, seed).unwrap()).unwrap();
        let plain = encode_prism_r(&text, &dicts().plain, &MechanismParams::prism_r(r, seed).unwrap()).unwrap();
        prop_assert_eq!(never.branch, Branch::PrismR);
        prop_assert_eq!(&never.x_pub, &plain.x_pub);
        prop_assert_eq!(&never.history, &plain.history);
        prop_assert_eq!(never.epsilon, plain.epsilon);

        let always = encode_mixed(&text, dicts(), &tagger, &MechanismParams::mixed(r, 1.0, seed).unwrap()).unwrap();
        let star = encode_prism_star(&text, &dicts().pos_keyed, &dicts().confidence, &tagger, &MechanismParams::prism_star(r).unwrap()).unwrap();
        prop_assert_eq!(always.branch, Branch::PrismStar);
        prop_assert_eq!(&always.x_pub, &star.x_pub);
        prop_assert_eq!(always.epsilon, None);
        prop_assert_eq!(always.mixture.unwrap().beta, 1.0);
    }

    #[test]
    fn no_decode_is_translation_of_guided_output(text in sentence(), r in ratio()) {
        let lexicon = MockLexicon::fixture();
        let tagger = Tagger::fixture();
        let params = MechanismParams::prism_star(r).unwrap();
        let run = run_pipeline(&text, dicts(), &tagger, &params, &lexicon, DecodeMode::Skip).unwrap();
        let x_pub = encode(&text, dicts(), &tagger, &params).unwrap().x_pub;
        prop_assert_eq!(run.decoded.y_pri, lexicon.translate(&x_pub).unwrap());
    }

    #[test]
    fn detokenize_inverts_tokenize(text in "\\PC{0,40}") {
        prop_assert_eq!(detokenize(&tokenize(&text)), normalize(&text));
    }

    #[test]
    fn aupqc_is_a_bounded_monotone_area(
        points in prop::collection::vec((0u32..=100, 0u32..=100, 0u32..=100), 1..12)
    ) {
        let make = |bump: u32| {
            TradeoffCurve::new("m", "e", points.iter().map(|&(p, q, _)| TradeoffPoint {
                param: 0.0,
                pps: p as f64 / 100.0,
                qs: (q + bump).min(100) as f64 / 100.0,
            }))
            .unwrap()
        };
        let base = make(0);
        let better = make(10);
        let a = aupqc(&base).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(aupqc(&better).unwrap() >= a);
        prop_assert!(base.points().windows(2).all(|w| w[0].pps < w[1].pps));
    }
}

#[test]
fn mixed_branch_frequency() {
    let tagger = Tagger::fixture();
    let text = "Alice went to the park one morning.";
    let star = (0..1000)
        .filter(|&seed| {
            let params = MechanismParams::mixed(0.5, 0.5, seed).unwrap();
            encode_mixed(text, dicts(), &tagger, &params).unwrap().branch == Branch::PrismStar
        })
        .count();
    let freq = star as f64 / 1000.0;
    assert!((freq - 0.5).abs() <= 0.05, "branch frequency {freq}");
}
