//! Small probability helpers shared by the noise model and the decoders.

/// Lower clamp applied to probabilities before taking logarithms.
pub const PROB_EPS: f64 = 1e-12;

/// Probability that exactly one of two independent events with probabilities
/// `a` and `b` happens, `a(1-b) + b(1-a)`.
///
/// This is the composition used for merging error mechanisms with identical
/// signatures, for combining a bit-flip with a classification flip, and for
/// folding a soft flip probability into an edge or prior.
#[inline]
pub fn xor_prob(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

/// Folds [`xor_prob`] over a sequence of probabilities.
pub fn xor_prob_all<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    probs.into_iter().fold(0.0, xor_prob)
}

/// Log-likelihood edge weight `-ln(p / (1 - p))`, natural log.
///
/// `p` is clamped to `[PROB_EPS, 0.5 - PROB_EPS]` so the result is finite and
/// strictly positive.
#[inline]
pub fn edge_weight(p: f64) -> f64 {
    let p = p.clamp(PROB_EPS, 0.5 - PROB_EPS);
    -(p / (1.0 - p)).ln()
}

/// Log-likelihood ratio `ln((1 - p) / p)` with `p` clamped to
/// `[PROB_EPS, 1 - PROB_EPS]`.
#[inline]
pub fn llr(p: f64) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    ((1.0 - p) / p).ln()
}

/// Converts a disjoint "one of `k` Paulis with total probability `p`" channel
/// into the per-Pauli probability of an equivalent set of independent
/// mechanisms. `k = 3` for single-qubit and `k = 15` for two-qubit
/// depolarization.
pub fn depolarize_independent(p: f64, k: u32) -> f64 {
    // Each non-identity Pauli is a product of an odd number of the independent
    // mechanisms; matching the identity weight gives the closed form below.
    let (base, exponent) = match k {
        3 => (1.0 - 4.0 * p / 3.0, 0.5),
        15 => (1.0 - 16.0 * p / 15.0, 0.125),
        _ => panic!("unsupported depolarizing arity {k}"),
    };
    if base <= 0.0 {
        return 0.5;
    }
    0.5 - 0.5 * base.powf(exponent)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_prob_examples() {
        assert!((xor_prob(0.1, 0.1) - 0.18).abs() < 1e-15);
        assert!((xor_prob(0.2, 0.3) - 0.38).abs() < 1e-15);
        assert_eq!(xor_prob(0.0, 0.3), 0.3);
        assert!((xor_prob_all([0.1, 0.1]) - 0.18).abs() < 1e-15);
    }

    #[test]
    fn edge_weight_examples() {
        assert!((edge_weight(0.1) - 9f64.ln()).abs() < 1e-12);
        assert!(edge_weight(0.5) < 1e-10);
        assert!(edge_weight(0.5) > 0.0);
        assert!(edge_weight(0.0).is_finite());
    }

    #[test]
    fn depolarize_independent_matches_disjoint_channel() {
        // Composing three independent X/Y/Z mechanisms must give a total
        // non-identity probability p with each Pauli at p/3.
        for &p in &[1e-4, 1e-3, 0.01, 0.1] {
            let q = depolarize_independent(p, 3);
            // probability of X component: X alone, or Y and Z together.
            let px = q * (1.0 - q) * (1.0 - q) + q * q * (1.0 - q);
            assert!((px - p / 3.0).abs() < 1e-12, "p={p} px={px}");
        }
    }
}
