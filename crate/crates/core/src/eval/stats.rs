use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest combined sample size for which p-values are computed exactly.
pub const EXACT_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceResult {
    /// U of the first sample: pairs `a > b` plus half the ties.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

impl SignificanceResult {
    pub fn significant(&self) -> bool {
        self.p < 0.05
    }
}

/// Doubled midranks of the pooled sample, so ties stay integral.
fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank ((i+1) + (j+1)) / 2
        let doubled = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = doubled;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Mann-Whitney U test.
///
/// Exact when `a.len() + b.len() <= EXACT_LIMIT`: the null distribution of
/// the first sample's rank sum is counted over all equally likely group
/// assignments of the observed (tied) ranks, and `p = 2 · min(P(U ≤ u),
/// P(U ≥ u))`, capped at 1. Larger samples use the tie-corrected normal
/// approximation with continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<SignificanceResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("Mann-Whitney U needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::Argument("Mann-Whitney U sample contains NaN".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let doubled_sum: u64 = ranks[..na].iter().sum();
    let base = (na * (na + 1)) as u64; // doubled n_a(n_a+1)/2
    let u = (doubled_sum - base) as f64 / 2.0;

    if n <= EXACT_LIMIT {
        let max_sum: u64 = ranks.iter().sum();
        // counts[k][s]: subsets of size k with doubled rank sum s
        let mut counts = vec![vec![0u64; max_sum as usize + 1]; na + 1];
        counts[0][0] = 1;
        for &r in &ranks {
            for k in (1..=na).rev() {
                for s in (r as usize..=max_sum as usize).rev() {
                    counts[k][s] += counts[k - 1][s - r as usize];
                }
            }
        }
        let dist = &counts[na];
        let total: u64 = dist.iter().sum();
        let obs = doubled_sum as usize;
        let lower: u64 = dist[..=obs].iter().sum();
        let upper: u64 = dist[obs..].iter().sum();
        let p = (2.0 * lower.min(upper) as f64 / total as f64).min(1.0);
        return Ok(SignificanceResult { u, p, exact: true });
    }

    let mean = (na * nb) as f64 / 2.0;
    let mut tie_term = 0.0;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let nf = n as f64;
    let var = (na * nb) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return Ok(SignificanceResult { u, p: 1.0, exact: false });
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * (1.0 - normal.cdf(z))).min(1.0);
    Ok(SignificanceResult { u, p, exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive oracle: every way to pick which pooled values form the
    /// first sample, with U from pairwise comparisons.
    fn enumerate(a: &[f64], b: &[f64]) -> (f64, f64) {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let n = pooled.len();
        let pair_u = |mask: u32| -> f64 {
            let mut u = 0.0;
            for i in 0..n {
                if mask & (1 << i) == 0 {
                    continue;
                }
                for j in 0..n {
                    if mask & (1 << j) != 0 {
                        continue;
                    }
                    if pooled[i] > pooled[j] {
                        u += 1.0;
                    } else if pooled[i] == pooled[j] {
                        u += 0.5;
                    }
                }
            }
            u
        };
        let observed = pair_u((1u32 << a.len()) - 1);
        let (mut total, mut le, mut ge) = (0u64, 0u64, 0u64);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != a.len() {
                continue;
            }
            let u = pair_u(mask);
            total += 1;
            if u <= observed {
                le += 1;
            }
            if u >= observed {
                ge += 1;
            }
        }
        (observed, (2.0 * le.min(ge) as f64 / total as f64).min(1.0))
    }

    #[test]
    fn fixtures() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.u, 0.0);
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((r.p - 0.1).abs() < 1e-15);
        assert!(!r.significant());
        let same = [0.3, 0.1, 0.7, 0.7];
        let r = mann_whitney_u(&same, &same).unwrap();
        assert!(r.p > 0.99);
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn exact_matches_enumeration_for_small_samples() {
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) % 5
        };
        for na in 1..10 {
            for nb in 1..=(10 - na) {
                for _ in 0..5 {
                    let a: Vec<f64> = (0..na).map(|_| next() as f64).collect();
                    let b: Vec<f64> = (0..nb).map(|_| next() as f64).collect();
                    let (u, p) = enumerate(&a, &b);
                    let got = mann_whitney_u(&a, &b).unwrap();
                    assert_eq!(got.u, u);
                    assert!((got.p - p).abs() <= 1e-12, "{a:?} {b:?}: {} vs {p}", got.p);
                }
            }
        }
    }

    #[test]
    fn normal_approximation_is_close_to_exact_scale() {
        let a: Vec<f64> = (0..30).map(f64::from).collect();
        let b: Vec<f64> = (15..45).map(f64::from).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        assert!(!r.exact);
        assert!(r.p < 0.01);
        let r = mann_whitney_u(&a, &a).unwrap();
        assert!(r.p > 0.95);
        let flat = vec![1.0; 20];
        assert_eq!(mann_whitney_u(&flat, &flat).unwrap().p, 1.0);
    }

    proptest! {
        #[test]
        fn swapping_samples_mirrors_u(
            a in prop::collection::vec(0u8..6, 1..12),
            b in prop::collection::vec(0u8..6, 1..12),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let x = mann_whitney_u(&a, &b).unwrap();
            let y = mann_whitney_u(&b, &a).unwrap();
            prop_assert_eq!(x.u + y.u, (a.len() * b.len()) as f64);
            prop_assert!((x.p - y.p).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x.p));
        }
    }
}
