use super::MechanismError;

fn check_ratio(r: f64) -> Result<(), MechanismError> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(MechanismError::InvalidRatio(r))
    }
}

/// Worst-case likelihood ratio `(r + |V|(1 − r)) / r` between neighbouring
/// texts under the randomized encoder.
pub fn transition_ratio_bound(r: f64, vocab_size: usize) -> Result<f64, MechanismError> {
    check_ratio(r)?;
    if vocab_size == 0 {
        return Err(MechanismError::EmptyVocabulary);
    }
    Ok((r + vocab_size as f64 * (1.0 - r)) / r)
}

/// ε = ln((r + |V|(1 − r)) / r), with δ = 0.
///
/// Strictly decreasing in `r` and tending to 0 as `r` → 1.
pub fn epsilon_for(r: f64, vocab_size: usize) -> Result<f64, MechanismError> {
    check_ratio(r)?;
    if vocab_size == 0 {
        return Err(MechanismError::EmptyVocabulary);
    }
    // ln(1 + |V|(1-r)/r) keeps precision as r approaches 1.
    Ok((vocab_size as f64 * (1.0 - r) / r).ln_1p())
}

/// Inverse of [`epsilon_for`]: r = |V| / (e^ε − 1 + |V|).
pub fn ratio_for_epsilon(epsilon: f64, vocab_size: usize) -> Result<f64, MechanismError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(MechanismError::InvalidEpsilon(epsilon));
    }
    if vocab_size == 0 {
        return Err(MechanismError::EmptyVocabulary);
    }
    let v = vocab_size as f64;
    Ok(v / (epsilon.exp_m1() + v))
}
