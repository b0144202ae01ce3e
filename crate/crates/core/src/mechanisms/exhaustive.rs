//! Brute-force checks of the randomized encoder's output distribution.
//!
//! [`encoder_distribution`] walks every keep/replace pattern and every draw
//! literally, so it shares no algebra with [`closed_form_probability`].

use std::collections::BTreeMap;

use super::{epsilon_for, transition_ratio_bound, MechanismError};
use crate::text::Vocabulary;

pub const MAX_EXHAUSTIVE_LEN: usize = 6;
pub const MAX_EXHAUSTIVE_VOCAB: usize = 6;
/// Cap on |V|^n for [`dp_ratio_check`], which enumerates every input text.
pub const MAX_EXHAUSTIVE_OUTPUTS: usize = 729;

fn check_bounds(n: usize, vocab: usize) -> Result<(), MechanismError> {
    if n > MAX_EXHAUSTIVE_LEN {
        return Err(MechanismError::TooLarge {
            limit: format!("{MAX_EXHAUSTIVE_LEN} words"),
            got: n.to_string(),
        });
    }
    if vocab > MAX_EXHAUSTIVE_VOCAB {
        return Err(MechanismError::TooLarge {
            limit: format!("vocabulary of {MAX_EXHAUSTIVE_VOCAB}"),
            got: vocab.to_string(),
        });
    }
    Ok(())
}

/// Exact output distribution of the randomized encoder on the word list
/// `x`, each word of which must belong to `vocab`.
pub fn encoder_distribution(
    x: &[&str],
    vocab: &Vocabulary,
    r: f64,
) -> Result<BTreeMap<Vec<String>, f64>, MechanismError> {
    check_bounds(x.len(), vocab.len())?;
    if !(r > 0.0 && r < 1.0) {
        return Err(MechanismError::InvalidRatio(r));
    }
    let outside: Vec<String> = x.iter().filter(|w| !vocab.contains(w)).map(|w| w.to_string()).collect();
    if !outside.is_empty() {
        return Err(MechanismError::OutsideVocabulary(outside));
    }
    let words: Vec<&str> = vocab.iter().collect();
    let v = words.len();
    let draw_p = r / v as f64;

    // Choice per slot: 0 keeps the word, k in 1..=v replaces it with the
    // (k-1)-th vocabulary word.
    let mut out = BTreeMap::new();
    let mut choice = vec![0usize; x.len()];
    loop {
        let mut prob = 1.0;
        let mut s = Vec::with_capacity(x.len());
        for (slot, &c) in choice.iter().enumerate() {
            if c == 0 {
                prob *= 1.0 - r;
                s.push(x[slot].to_lowercase());
            } else {
                prob *= draw_p;
                s.push(words[c - 1].to_string());
            }
        }
        *out.entry(s).or_insert(0.0) += prob;

        let mut slot = 0;
        loop {
            if slot == choice.len() {
                return Ok(out);
            }
            choice[slot] += 1;
            if choice[slot] <= v {
                break;
            }
            choice[slot] = 0;
            slot += 1;
        }
    }
}

/// r^c (1−r)^(n−c) (1/|V|)^c (1 + r/(|V|(1−r)))^(n−c), where `c` is the
/// number of slots where `s` differs from `x`.
pub fn closed_form_probability(x: &[&str], s: &[&str], vocab_size: usize, r: f64) -> f64 {
    assert_eq!(x.len(), s.len(), "texts must have equal length");
    let n = x.len() as i32;
    let c = x.iter().zip(s).filter(|(a, b)| !a.eq_ignore_ascii_case(b)).count() as i32;
    let v = vocab_size as f64;
    r.powi(c) * (1.0 - r).powi(n - c) * v.powi(-c) * (1.0 + r / (v * (1.0 - r))).powi(n - c)
}

/// Likelihood ratios Pr[A(x)=s] / Pr[A(x')=s] over all outputs `s`, keyed
/// by output.
pub fn pair_ratios(
    x: &[&str],
    x_prime: &[&str],
    vocab: &Vocabulary,
    r: f64,
) -> Result<BTreeMap<Vec<String>, f64>, MechanismError> {
    let p = encoder_distribution(x, vocab, r)?;
    let q = encoder_distribution(x_prime, vocab, r)?;
    Ok(p.iter().map(|(s, a)| (s.clone(), a / q[s])).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpCheck {
    pub n: usize,
    pub vocab_size: usize,
    pub r: f64,
    pub max_ratio: f64,
    /// (r + |V|(1 − r)) / r.
    pub predicted: f64,
    pub epsilon: f64,
    /// Ordered neighbouring pairs examined.
    pub pairs: usize,
    /// Largest distance of any ratio above e^ε; 0 when the bound holds.
    pub excess: f64,
}

impl DpCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.excess <= tol && (self.max_ratio - self.predicted).abs() <= tol
    }
}

/// Enumerate every text of `n` words over a synthetic vocabulary of
/// `vocab_size` words, every neighbour differing in one slot, and every
/// output, and report the largest likelihood ratio.
pub fn dp_ratio_check(n: usize, vocab_size: usize, r: f64) -> Result<DpCheck, MechanismError> {
    check_bounds(n, vocab_size)?;
    if vocab_size == 0 {
        return Err(MechanismError::EmptyVocabulary);
    }
    let texts = vocab_size.checked_pow(n as u32).unwrap_or(usize::MAX);
    if texts > MAX_EXHAUSTIVE_OUTPUTS {
        return Err(MechanismError::TooLarge {
            limit: format!("{MAX_EXHAUSTIVE_OUTPUTS} texts"),
            got: texts.to_string(),
        });
    }
    let epsilon = epsilon_for(r, vocab_size)?;
    let predicted = transition_ratio_bound(r, vocab_size)?;
    let names: Vec<String> = (0..vocab_size).map(|i| format!("w{i}")).collect();
    let vocab = Vocabulary::new(&names)?;

    let text_of = |mut index: usize| -> Vec<&str> {
        (0..n)
            .map(|_| {
                let w = names[index % vocab_size].as_str();
                index /= vocab_size;
                w
            })
            .collect()
    };
    let dists = (0..texts)
        .map(|i| encoder_distribution(&text_of(i), &vocab, r))
        .collect::<Result<Vec<_>, _>>()?;

    let bound = epsilon.exp();
    let mut max_ratio = 0.0f64;
    let mut excess = 0.0f64;
    let mut pairs = 0;
    let mut stride = 1;
    for _slot in 0..n {
        for i in 0..texts {
            let digit = (i / stride) % vocab_size;
            for other in 0..vocab_size {
                if other == digit {
                    continue;
                }
                let j = i - digit * stride + other * stride;
                pairs += 1;
                for (s, p) in &dists[i] {
                    let ratio = p / dists[j][s];
                    max_ratio = max_ratio.max(ratio);
                    excess = excess.max(ratio - bound);
                }
            }
        }
        stride *= vocab_size;
    }

    Ok(DpCheck {
        n,
        vocab_size,
        r,
        max_ratio,
        predicted,
        epsilon,
        pairs,
        excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(words: &[&str]) -> Vocabulary {
        Vocabulary::new(words).unwrap()
    }

    #[test]
    fn two_by_two_half() {
        let d = encoder_distribution(&["a", "b"], &v(&["a", "b"]), 0.5).unwrap();
        assert_eq!(d.len(), 4);
        assert!((d[&vec!["a".to_string(), "b".to_string()]] - 0.5625).abs() < 1e-15);
        assert!((d[&vec!["b".to_string(), "b".to_string()]] - 0.1875).abs() < 1e-15);
        assert!((d[&vec!["b".to_string(), "a".to_string()]] - 0.0625).abs() < 1e-15);
        assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_closed_form() {
        let vocab = v(&["a", "b", "c"]);
        let x = ["a", "c", "c"];
        for (s, p) in encoder_distribution(&x, &vocab, 0.3).unwrap() {
            let s: Vec<&str> = s.iter().map(String::as_str).collect();
            assert!((p - closed_form_probability(&x, &s, 3, 0.3)).abs() < 1e-15);
        }
    }

    #[test]
    fn known_max_ratio() {
        let check = dp_ratio_check(3, 3, 0.4).unwrap();
        assert!((check.max_ratio - 5.5).abs() < 1e-12);
        assert!(check.holds(1e-9));
        assert_eq!(check.pairs, 3 * 27 * 2);
        let check = dp_ratio_check(2, 2, 0.5).unwrap();
        assert!((check.max_ratio - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reflexive_pairs_are_one() {
        let vocab = v(&["a", "b", "c"]);
        for ratio in pair_ratios(&["a", "b"], &["a", "b"], &vocab, 0.6).unwrap().values() {
            assert_eq!(*ratio, 1.0);
        }
    }

    #[test]
    fn bounds_enforced() {
        let vocab = v(&["a"]);
        let long = ["a"; 7];
        assert!(matches!(
            encoder_distribution(&long, &vocab, 0.5),
            Err(MechanismError::TooLarge { .. })
        ));
        assert!(matches!(
            dp_ratio_check(4, 6, 0.5),
            Err(MechanismError::TooLarge { .. })
        ));
        assert!(matches!(
            encoder_distribution(&["z"], &vocab, 0.5),
            Err(MechanismError::OutsideVocabulary(_))
        ));
    }
}
