use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for fewer than two values.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(Self { mean, std, n })
    }
}

/// Which direction of a metric is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Better {
    Higher,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignTest {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// `P(X >= losses)` for `X ~ Binomial(wins + losses, 1/2)`.
    pub p_value: f64,
}

impl SignTest {
    /// Whether "the candidate is at least as good" is rejected at `alpha`.
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Upper tail `P(X >= k)` of `Binomial(n, 1/2)`.
pub fn binomial_upper_tail_half(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    // Accumulate pmf terms in log space: ln C(n, j) - n ln 2.
    let ln2n = n as f64 * std::f64::consts::LN_2;
    let mut ln_c = 0.0_f64; // ln C(n, 0)
    let mut tail = 0.0;
    for j in 0..=n {
        if j > 0 {
            ln_c += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        if j >= k {
            tail += (ln_c - ln2n).exp();
        }
    }
    tail.min(1.0)
}

/// One-sided paired sign test of `candidate` against `reference`. Ties are
/// dropped. The null hypothesis is that the candidate is at least as good.
pub fn paired_sign_test(candidate: &[f64], reference: &[f64], better: Better) -> SignTest {
    assert_eq!(candidate.len(), reference.len(), "paired samples must align");
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (&c, &r) in candidate.iter().zip(reference) {
        let ord = c.total_cmp(&r);
        let ord = if better == Better::Lower { ord.reverse() } else { ord };
        match ord {
            std::cmp::Ordering::Greater => wins += 1,
            std::cmp::Ordering::Less => losses += 1,
            std::cmp::Ordering::Equal => ties += 1,
        }
    }
    SignTest {
        wins,
        losses,
        ties,
        p_value: binomial_upper_tail_half(wins + losses, losses),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_matches_hand_sums() {
        // (15504 + 4845 + 1140 + 190 + 20 + 1) / 2^20
        assert!((binomial_upper_tail_half(20, 15) - 21700.0 / 1048576.0).abs() < 1e-15);
        // adds C(20, 14) = 38760
        assert!((binomial_upper_tail_half(20, 14) - 60460.0 / 1048576.0).abs() < 1e-15);
        assert_eq!(binomial_upper_tail_half(5, 0), 1.0);
        assert_eq!(binomial_upper_tail_half(5, 6), 0.0);
        assert!((binomial_upper_tail_half(1, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sign_test_directions() {
        let a = [3.0, 4.0, 5.0, 1.0];
        let b = [2.0, 4.0, 1.0, 2.0];
        let hi = paired_sign_test(&a, &b, Better::Higher);
        assert_eq!((hi.wins, hi.losses, hi.ties), (2, 1, 1));
        let lo = paired_sign_test(&a, &b, Better::Lower);
        assert_eq!((lo.wins, lo.losses, lo.ties), (1, 2, 1));
        assert!(!hi.rejects(0.05));
    }

    #[test]
    fn fifteen_losses_of_twenty_reject() {
        let c: Vec<f64> = (0..20).map(|i| if i < 15 { 0.0 } else { 1.0 }).collect();
        let r = vec![0.5; 20];
        assert!(paired_sign_test(&c, &r, Better::Higher).rejects(0.05));
        let c: Vec<f64> = (0..20).map(|i| if i < 14 { 0.0 } else { 1.0 }).collect();
        assert!(!paired_sign_test(&c, &r, Better::Higher).rejects(0.05));
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(m.mean, 5.0);
        assert!((m.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(MeanStd::of(&[1.5]).unwrap().std, 0.0);
        assert!(MeanStd::of(&[]).is_none());
    }
}
