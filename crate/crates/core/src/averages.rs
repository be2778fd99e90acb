//! Running means over windows and the finite-window limsup protocol.

/// Running means of a sequence indexed from `-neg`.
///
/// With `neg > 0` entry `n` is the symmetric mean over `[-n, n]`, for every
/// `n` such that both ends are available. With `neg == 0` entry `n` is the
/// one-sided mean over `[0, n]`.
pub fn running_means(values: &[f64], neg: usize) -> Vec<f64> {
    if values.is_empty() || neg >= values.len() {
        return Vec::new();
    }
    if neg == 0 {
        let mut acc = 0.0;
        return values
            .iter()
            .enumerate()
            .map(|(n, v)| {
                acc += v;
                acc / (n + 1) as f64
            })
            .collect();
    }
    let max_n = neg.min(values.len() - 1 - neg);
    let mut out = Vec::with_capacity(max_n + 1);
    let mut acc = values[neg];
    out.push(acc);
    for n in 1..=max_n {
        acc += values[neg - n] + values[neg + n];
        out.push(acc / (2 * n + 1) as f64);
    }
    out
}

/// Limsup estimate: the maximum over the final half of the sequence.
pub fn final_half_max(seq: &[f64]) -> f64 {
    seq[seq.len() / 2..].iter().copied().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_and_symmetric() {
        assert_eq!(running_means(&[1.0, 3.0, 5.0], 0), vec![1.0, 2.0, 3.0]);
        // indices -1, 0, 1, 2
        assert_eq!(running_means(&[1.0, 4.0, 1.0, 9.0], 1), vec![4.0, 2.0]);
        assert!(running_means(&[], 0).is_empty());
    }

    #[test]
    fn final_half() {
        assert_eq!(final_half_max(&[9.0, 1.0, 2.0, 1.5]), 2.0);
        assert_eq!(final_half_max(&[]), 0.0);
    }
}
