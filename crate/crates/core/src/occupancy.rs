//! Exact distribution of the maximum occupancy by dynamic programming.
//!
//! States are occupancy vectors up to bin relabeling: the process is
//! exchangeable over bins, so the sorted (non-increasing) count vector is
//! a sufficient state. This collapses the state space from n^Θ(T) to the
//! number of partitions of rT into at most n parts.
//!
//! Weights are kept as big-integer numerators over the implicit common
//! denominator binom(n,r)^T, which avoids a gcd on every transition;
//! rationals are materialized only at the query boundary.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Zero};

use crate::{Error, Params, Rational};

/// Default cap on the number of occupancy classes tracked by the DP.
pub const DEFAULT_MAX_CLASSES: usize = 5_000_000;

/// Default cap on the number of round sequences the brute-force oracle
/// will enumerate.
pub const DEFAULT_MAX_SEQUENCES: u64 = 10_000_000;

/// One permutation class of occupancy vectors: counts sorted
/// non-increasing, with its exact probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyClass {
    pub counts: Vec<u32>,
    pub weight: Rational,
}

/// Exact distribution over occupancy classes after a number of rounds.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    params: Params,
    rounds: u32,
    /// Numerators over the implicit denominator binom(n,r)^rounds.
    classes: BTreeMap<Vec<u32>, BigInt>,
}

impl ExactDistribution {
    /// The T = 0 distribution: all bins empty with probability 1.
    pub fn initial(params: Params) -> Self {
        let mut classes = BTreeMap::new();
        classes.insert(vec![0u32; params.n() as usize], BigInt::one());
        ExactDistribution {
            params,
            rounds: 0,
            classes,
        }
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Common denominator binom(n,r)^rounds.
    fn denominator(&self) -> BigInt {
        let per_round = binomial(
            BigInt::from(self.params.n()),
            BigInt::from(self.params.r()),
        );
        num_traits::pow::pow(per_round, self.rounds as usize)
    }

    /// Classes with weights materialized as reduced rationals.
    pub fn classes(&self) -> Vec<OccupancyClass> {
        let den = self.denominator();
        self.classes
            .iter()
            .map(|(counts, num)| OccupancyClass {
                counts: counts.clone(),
                weight: Rational::new(num.clone(), den.clone()),
            })
            .collect()
    }

    /// Advances the process by one round with the default class cap.
    pub fn step(&self) -> Result<Self, Error> {
        self.step_capped(DEFAULT_MAX_CLASSES)
    }

    /// Advances the process by one round.
    ///
    /// For each class, bins are grouped by equal count value; a transition
    /// chooses k_v of the m_v bins at each value v, with
    /// Σ k_v = r and multiplicity Π binom(m_v, k_v). This enumerates
    /// transitions per class rather than all binom(n,r) subsets.
    pub fn step_capped(&self, max_classes: usize) -> Result<Self, Error> {
        let r = self.params.r();
        let mut next: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        let mut groups: Vec<(u32, u32)> = Vec::new();
        for (counts, num) in &self.classes {
            groups.clear();
            for &c in counts {
                match groups.last_mut() {
                    Some((v, m)) if *v == c => *m += 1,
                    _ => groups.push((c, 1)),
                }
            }
            distribute(&groups, r, num, counts.len(), &mut next);
            if next.len() > max_classes {
                return Err(Error::Capacity {
                    what: "occupancy classes",
                    cap: max_classes as u64,
                    actual: next.len() as u64,
                });
            }
        }
        Ok(ExactDistribution {
            params: self.params,
            rounds: self.rounds + 1,
            classes: next,
        })
    }

    /// E[max occupancy] as an exact rational.
    pub fn max_expectation(&self) -> Rational {
        let num: BigInt = self
            .classes
            .iter()
            .map(|(counts, w)| w * BigInt::from(counts[0]))
            .sum();
        Rational::new(num, self.denominator())
    }

    /// Exact PMF of the maximum occupancy.
    pub fn max_pmf(&self) -> BTreeMap<u32, Rational> {
        let den = self.denominator();
        let mut acc: BTreeMap<u32, BigInt> = BTreeMap::new();
        for (counts, w) in &self.classes {
            *acc.entry(counts[0]).or_insert_with(BigInt::zero) += w;
        }
        acc.into_iter()
            .map(|(m, num)| (m, Rational::new(num, den.clone())))
            .collect()
    }

    /// A = E[max occupancy] − (r/n)·rounds, exact.
    pub fn centered_max_expectation(&self) -> Rational {
        self.max_expectation()
            - self.params.drift() * Rational::from(BigInt::from(self.rounds))
    }

    /// Total probability mass as an exact rational (1 for any reachable
    /// distribution; exposed for invariant checks).
    pub fn total_weight(&self) -> Rational {
        let num: BigInt = self.classes.values().cloned().sum();
        Rational::new(num, self.denominator())
    }

    /// Text form, one class per line: `count-vector<TAB>num/den` with the
    /// count vector comma-separated. Classes in lexicographic key order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for class in self.classes() {
            let counts: Vec<String> = class.counts.iter().map(|c| c.to_string()).collect();
            out.push_str(&counts.join(","));
            out.push('\t');
            out.push_str(&format!(
                "{}/{}\n",
                class.weight.numer(),
                class.weight.denom()
            ));
        }
        out
    }
}

/// Enumerates ways to hand out `remaining` balls across the value groups,
/// choosing at most m_v bins from each group. Each completed assignment
/// contributes weight × Π binom(m_v, k_v) to the successor class.
fn distribute(
    groups: &[(u32, u32)],
    remaining: u32,
    weight: &BigInt,
    n: usize,
    next: &mut BTreeMap<Vec<u32>, BigInt>,
) {
    // choices[i] = balls given to group i
    fn rec(
        groups: &[(u32, u32)],
        idx: usize,
        remaining: u32,
        mult: BigInt,
        choices: &mut Vec<u32>,
        n: usize,
        next: &mut BTreeMap<Vec<u32>, BigInt>,
    ) {
        if idx == groups.len() {
            if remaining == 0 {
                let mut counts = Vec::with_capacity(n);
                for (i, &(v, m)) in groups.iter().enumerate() {
                    let k = choices[i];
                    // incremented bins first keeps each group's slice sorted,
                    // but cross-group order can break, so re-sort below
                    for _ in 0..k {
                        counts.push(v + 1);
                    }
                    for _ in 0..(m - k) {
                        counts.push(v);
                    }
                }
                counts.sort_unstable_by(|a, b| b.cmp(a));
                *next.entry(counts).or_insert_with(BigInt::zero) += mult;
            }
            return;
        }
        let (_, m) = groups[idx];
        let tail_capacity: u32 = groups[idx + 1..].iter().map(|&(_, m)| m).sum();
        let lo = remaining.saturating_sub(tail_capacity);
        let hi = remaining.min(m);
        for k in lo..=hi {
            choices.push(k);
            rec(
                groups,
                idx + 1,
                remaining - k,
                &mult * binomial(BigInt::from(m), BigInt::from(k)),
                choices,
                n,
                next,
            );
            choices.pop();
        }
    }
    let mut choices = Vec::with_capacity(groups.len());
    rec(groups, 0, remaining, weight.clone(), &mut choices, n, next);
}

/// E[U(n,r;T)] by the class DP, exact.
pub fn exact_max_expectation(params: Params, t: u32) -> Result<Rational, Error> {
    exact_max_expectation_capped(params, t, DEFAULT_MAX_CLASSES)
}

pub fn exact_max_expectation_capped(
    params: Params,
    t: u32,
    max_classes: usize,
) -> Result<Rational, Error> {
    let mut dist = ExactDistribution::initial(params);
    for _ in 0..t {
        dist = dist.step_capped(max_classes)?;
    }
    Ok(dist.max_expectation())
}

/// A(n,r;T) = E[U] − (r/n)·T, exact.
pub fn exact_a(params: Params, t: u32) -> Result<Rational, Error> {
    let eu = exact_max_expectation(params, t)?;
    Ok(eu - params.drift() * Rational::from(BigInt::from(t)))
}

/// Independent oracle: enumerates all binom(n,r)^T equally likely round
/// sequences and averages the maximum directly. Only feasible for tiny
/// instances; must agree with [`exact_max_expectation`] on its domain.
pub fn brute_force_max_expectation(params: Params, t: u32) -> Result<Rational, Error> {
    brute_force_max_expectation_capped(params, t, DEFAULT_MAX_SEQUENCES)
}

pub fn brute_force_max_expectation_capped(
    params: Params,
    t: u32,
    max_sequences: u64,
) -> Result<Rational, Error> {
    let n = params.n() as usize;
    let r = params.r() as usize;
    let subsets = all_subsets(n, r);
    let b = subsets.len() as u64;
    let total = b.checked_pow(t).filter(|&s| s <= max_sequences).ok_or(
        Error::Capacity {
            what: "brute-force round sequences",
            cap: max_sequences,
            actual: u64::MAX,
        },
    )?;

    let mut sum = 0u64;
    let mut counts = vec![0u32; n];
    let mut seq = vec![0usize; t as usize];
    for _ in 0..total {
        counts.iter_mut().for_each(|c| *c = 0);
        for &s in &seq {
            for &bin in &subsets[s] {
                counts[bin] += 1;
            }
        }
        sum += u64::from(*counts.iter().max().unwrap_or(&0));
        // odometer over base-b digits
        for digit in seq.iter_mut() {
            *digit += 1;
            if *digit < b as usize {
                break;
            }
            *digit = 0;
        }
    }
    Ok(Rational::new(BigInt::from(sum), BigInt::from(total)))
}

/// All r-subsets of {0..n-1} in lexicographic order.
fn all_subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(n: usize, r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, r, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, r, 0, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn params(n: u32, r: u32) -> Params {
        Params::new(n, r).unwrap()
    }

    #[test]
    fn initial_distribution_is_all_zero() {
        for (n, r) in [(3, 1), (4, 2), (1, 1)] {
            let d = ExactDistribution::initial(params(n, r));
            assert_eq!(d.rounds(), 0);
            let classes = d.classes();
            assert_eq!(classes.len(), 1);
            assert_eq!(classes[0].counts, vec![0; n as usize]);
            assert_eq!(classes[0].weight, rat(1, 1));
        }
    }

    #[test]
    fn single_steps_match_hand_enumeration() {
        // (n=2, r=1): one step from empty merges both outcomes
        let d = ExactDistribution::initial(params(2, 1)).step().unwrap();
        let classes = d.classes();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].counts, vec![1, 0]);
        assert_eq!(classes[0].weight, rat(1, 1));

        // second step splits [1,0] into [2,0] and [1,1], each 1/2
        let d = d.step().unwrap();
        let pmf: Vec<_> = d.classes();
        assert_eq!(pmf.len(), 2);
        assert_eq!(pmf[0].counts, vec![1, 1]);
        assert_eq!(pmf[0].weight, rat(1, 2));
        assert_eq!(pmf[1].counts, vec![2, 0]);
        assert_eq!(pmf[1].weight, rat(1, 2));

        // (n=4, r=2): all 6 subsets give the same class
        let d = ExactDistribution::initial(params(4, 2)).step().unwrap();
        let classes = d.classes();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].counts, vec![1, 1, 0, 0]);
        assert_eq!(classes[0].weight, rat(1, 1));
    }

    #[test]
    fn expectation_small_cases() {
        assert_eq!(exact_max_expectation(params(2, 1), 2).unwrap(), rat(3, 2));
        assert_eq!(exact_max_expectation(params(2, 1), 3).unwrap(), rat(9, 4));
        assert_eq!(exact_max_expectation(params(3, 3), 5).unwrap(), rat(5, 1));
    }

    #[test]
    fn centered_expectation_small_cases() {
        assert_eq!(exact_a(params(2, 1), 2).unwrap(), rat(1, 2));
        assert_eq!(exact_a(params(3, 3), 7).unwrap(), rat(0, 1));
        assert_eq!(exact_a(params(2, 1), 0).unwrap(), rat(0, 1));
    }

    #[test]
    fn brute_force_small_cases() {
        assert_eq!(
            brute_force_max_expectation(params(2, 1), 2).unwrap(),
            rat(3, 2)
        );
        assert_eq!(
            brute_force_max_expectation(params(4, 2), 1).unwrap(),
            rat(1, 1)
        );
        // 4 balls across 3 bins: the maximum is exactly 2 in all 9 sequences
        assert_eq!(
            brute_force_max_expectation(params(3, 2), 2).unwrap(),
            rat(2, 1)
        );
    }

    #[test]
    fn dp_matches_brute_force_everywhere_small() {
        for n in 1..=4u32 {
            for r in 1..=n {
                for t in 0..=4u32 {
                    let p = params(n, r);
                    assert_eq!(
                        exact_max_expectation(p, t).unwrap(),
                        brute_force_max_expectation(p, t).unwrap(),
                        "mismatch at n={n} r={r} t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn brute_force_cap_is_enforced() {
        let err = brute_force_max_expectation_capped(params(4, 2), 10, 1000).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }), "{err}");
    }

    #[test]
    fn class_cap_is_enforced() {
        let err = exact_max_expectation_capped(params(6, 2), 20, 10).unwrap_err();
        assert!(matches!(
            err,
            Error::Capacity {
                what: "occupancy classes",
                ..
            }
        ));
    }

    #[test]
    fn weights_sum_to_one_and_counts_sum_to_rt() {
        for (n, r) in [(2, 1), (3, 2), (4, 2), (5, 3)] {
            let p = params(n, r);
            let mut d = ExactDistribution::initial(p);
            for t in 1..=6u32 {
                d = d.step().unwrap();
                assert_eq!(d.total_weight(), rat(1, 1), "mass at n={n} r={r} t={t}");
                for class in d.classes() {
                    let s: u32 = class.counts.iter().sum();
                    assert_eq!(s, r * t);
                    assert!(class.counts.windows(2).all(|w| w[0] >= w[1]));
                }
            }
        }
    }

    #[test]
    fn expectation_monotone_in_t() {
        let p = params(3, 2);
        let mut prev = exact_max_expectation(p, 0).unwrap();
        let drift_minus_one = p.drift() - rat(1, 1);
        for t in 1..=8u32 {
            let cur = exact_max_expectation(p, t).unwrap();
            assert!(cur >= prev);
            assert!(cur >= &prev + &drift_minus_one);
            prev = cur;
        }
    }

    #[test]
    fn deterministic_when_r_equals_n() {
        for n in 1..=5u32 {
            let p = params(n, n);
            for t in 0..=6u32 {
                assert_eq!(exact_max_expectation(p, t).unwrap(), rat(i64::from(t), 1));
            }
        }
    }

    #[test]
    fn max_pmf_sums_to_one() {
        let p = params(2, 1);
        let mut d = ExactDistribution::initial(p);
        for _ in 0..3 {
            d = d.step().unwrap();
        }
        let pmf = d.max_pmf();
        // T=3: max is 3 w.p. 1/4 (all same bin), else 2
        assert_eq!(pmf[&3], rat(1, 4));
        assert_eq!(pmf[&2], rat(3, 4));
        let total: Rational = pmf.values().cloned().sum();
        assert_eq!(total, rat(1, 1));
    }

    #[test]
    fn text_serialization_shape() {
        let d = ExactDistribution::initial(params(2, 1))
            .step()
            .unwrap()
            .step()
            .unwrap();
        let text = d.to_text();
        assert_eq!(text, "1,1\t1/2\n2,0\t1/2\n");
    }

    #[test]
    fn expectation_decimal_sane() {
        // sanity on magnitude for a mid-size case
        let e = exact_max_expectation(params(4, 2), 20).unwrap();
        let v = e.to_f64().unwrap();
        assert!(v > 10.0 && v < 20.0, "{v}");
    }
}
