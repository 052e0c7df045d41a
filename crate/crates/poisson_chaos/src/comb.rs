//! Small combinatorial helpers shared across modules.

/// n! as f64. Exact for n ≤ 18, within 1 ulp per multiplication beyond.
pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Binomial coefficient C(n, k) as f64, by the multiplicative formula.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Multinomial weight q!/Πᵢ mᵢ! for a multiplicity pattern `m` with Σmᵢ = q.
pub fn multinomial(q: usize, multiplicities: &[u32]) -> f64 {
    let mut acc = factorial(q);
    for &m in multiplicities {
        acc /= factorial(m as usize);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_factorials_exact() {
        assert_eq!(factorial(0), 1.0);
        assert_eq!(factorial(1), 1.0);
        assert_eq!(factorial(5), 120.0);
        assert_eq!(factorial(12), 479_001_600.0);
    }

    #[test]
    fn binomial_row_sums() {
        for n in 0..20 {
            let row: f64 = (0..=n).map(|k| binomial(n, k)).sum();
            assert_eq!(row, (2u64.pow(n as u32)) as f64);
        }
        assert_eq!(binomial(4, 7), 0.0);
    }

    #[test]
    fn multinomial_matches_direct() {
        assert_eq!(multinomial(4, &[2, 2]), 6.0);
        assert_eq!(multinomial(4, &[1, 1, 1, 1]), 24.0);
        assert_eq!(multinomial(3, &[3]), 1.0);
    }
}
