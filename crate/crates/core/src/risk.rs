//! Expectation and average value at risk of a discrete value distribution.

use crate::scalar::Scalar;

pub fn expectation<S: Scalar>(values: &[S], probs: &[S]) -> S {
    values.iter().zip(probs).map(|(v, p)| *v * *p).sum()
}

/// `inf_q { q + (1/kappa) E (v - q)_+ }`, evaluated exactly at the atoms.
pub fn avar<S: Scalar>(values: &[S], probs: &[S], kappa: S) -> S {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    avar_ordered(&order, values, probs, kappa)
}

/// As [`avar`] with `order` sorting `values` ascending; lets callers reuse a
/// sort across many probability vectors.
pub fn avar_ordered<S: Scalar>(order: &[usize], values: &[S], probs: &[S], kappa: S) -> S {
    if kappa >= S::one() {
        return expectation(values, probs);
    }
    let inv = S::one() / kappa;
    // suffix sums over the strictly larger part of the order
    let mut tail_p = S::zero();
    let mut tail_pv = S::zero();
    let mut best = S::infinity();
    for &i in order.iter().rev() {
        if probs[i] > S::zero() {
            let q = values[i];
            let f = q + inv * (tail_pv - q * tail_p);
            if f < best {
                best = f;
            }
        }
        tail_p = tail_p + probs[i];
        tail_pv = tail_pv + probs[i] * values[i];
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tail_mean(values: &[f64], probs: &[f64], kappa: f64) -> f64 {
        // mean of the worst kappa-fraction
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
        let mut left = kappa;
        let mut acc = 0.0;
        for i in idx {
            let w = probs[i].min(left);
            acc += w * values[i];
            left -= w;
            if left <= 0.0 {
                break;
            }
        }
        acc / kappa
    }

    #[test]
    fn matches_tail_mean() {
        let v = [3.0, -1.0, 2.0, 0.5];
        let p = [0.1, 0.4, 0.3, 0.2];
        for k in [0.05, 0.1, 0.25, 0.4, 0.7, 1.0] {
            assert!((avar(&v, &p, k) - tail_mean(&v, &p, k)).abs() < 1e-12, "kappa {k}");
        }
    }

    #[test]
    fn kappa_one_is_mean() {
        let v = [1.0f64, 2.0];
        let p = [0.25, 0.75];
        assert!((avar(&v, &p, 1.0) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn zero_mass_atoms_ignored() {
        let v = [100.0f64, 1.0];
        let p = [0.0, 1.0];
        assert!((avar(&v, &p, 0.1) - 1.0).abs() < 1e-12);
    }
}
