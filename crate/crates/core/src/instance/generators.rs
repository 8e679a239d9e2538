use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Instance;
use crate::error::{Error, Result};
use crate::rational::{int, ratio, Rational};

/// Fractional values keyed by `(offline node, arrival)`.
pub type EdgeValues = BTreeMap<(usize, usize), Rational>;

/// Largest round count accepted by [`gen_adversarial_waterlevel`] (3^9 = 19683 nodes).
pub const ADVERSARIAL_MAX_ROUNDS: u32 = 9;

/// Hard instance for the water-level algorithm with `n = 3^k` offline nodes.
///
/// Round `i` splits the sorted active nodes into consecutive triples, one
/// arrival per triple. The two lowest members of each triple stay active and
/// the highest drops out. After `k` rounds every remaining active node gets a
/// single-neighbour arrival. Matching each triple arrival to its dropped node
/// and each singleton to its node is perfect.
pub fn gen_adversarial_waterlevel(k: u32) -> Result<Instance> {
    if !(1..=ADVERSARIAL_MAX_ROUNDS).contains(&k) {
        return Err(Error::OutOfRange(format!(
            "adversarial round count {k} not in 1..={ADVERSARIAL_MAX_ROUNDS}"
        )));
    }
    let n = 3usize.pow(k);
    let mut active: Vec<usize> = (0..n).collect();
    let mut arrivals = Vec::with_capacity(n);
    for _ in 0..k {
        let mut next = Vec::with_capacity(active.len() / 3 * 2);
        for triple in active.chunks_exact(3) {
            arrivals.push(triple.to_vec());
            next.extend_from_slice(&triple[..2]);
        }
        active = next;
    }
    arrivals.extend(active.into_iter().map(|i| vec![i]));
    Instance::unweighted(n, arrivals)
}

/// Four nodes, arrivals `{0,1}`, `{2,3}`, then `{0,2}`, every listed value 1/2.
pub fn gen_example_impossible() -> (Instance, EdgeValues) {
    let arrivals = vec![vec![0, 1], vec![2, 3], vec![0, 2]];
    let inst = Instance::unweighted(4, arrivals).expect("static instance");
    let mut values = EdgeValues::new();
    for (t, nbrs) in inst.arrivals().iter().enumerate() {
        for &i in nbrs {
            values.insert((i, t), ratio(1, 2));
        }
    }
    (inst, values)
}

/// The eight equiprobable graphs of the three-choice counterexample.
///
/// Pair `p` (0-based) holds nodes `2p` and `2p + 1`. Arrivals 0..3 see their
/// pair; arrivals 3 and 4 both see the same chosen node of every pair.
pub fn gen_three_choice_counterexample() -> Vec<(Instance, EdgeValues, Rational)> {
    let mut out = Vec::with_capacity(8);
    for mask in 0u32..8 {
        let chosen: Vec<usize> = (0..3).map(|p| 2 * p + ((mask >> p) & 1) as usize).collect();
        let mut arrivals: Vec<Vec<usize>> = (0..3).map(|p| vec![2 * p, 2 * p + 1]).collect();
        arrivals.push(chosen.clone());
        arrivals.push(chosen);
        let inst = Instance::unweighted(6, arrivals).expect("static instance");

        let mut values = EdgeValues::new();
        for (t, nbrs) in inst.arrivals().iter().enumerate() {
            let v = match t {
                0..=2 => ratio(1, 2),
                3 => ratio(7, 24),
                _ => ratio(6965, 41472),
            };
            for &i in nbrs {
                values.insert((i, t), v.clone());
            }
        }
        out.push((inst, values, ratio(1, 8)));
    }
    out
}

/// Deterministic random instance; integer weights drawn from `weight_range` (inclusive).
pub fn gen_random_instance(
    n: usize,
    arrivals: usize,
    max_degree: usize,
    weight_range: (i64, i64),
    seed: u64,
) -> Result<Instance> {
    if n == 0 || max_degree > n {
        return Err(Error::OutOfRange(format!(
            "need n >= 1 and max_degree <= n (n = {n}, max_degree = {max_degree})"
        )));
    }
    let (lo, hi) = weight_range;
    if lo < 1 || hi < lo {
        return Err(Error::OutOfRange(format!(
            "weight range ({lo}, {hi}) must satisfy 1 <= lo <= hi"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<Rational> = (0..n)
        .map(|_| int(rng.gen_range(lo..=hi)))
        .collect();
    let lists = (0..arrivals)
        .map(|_| {
            let d = rng.gen_range(0..=max_degree);
            let mut nbrs = sample(&mut rng, n, d).into_vec();
            nbrs.sort_unstable();
            nbrs
        })
        .collect();
    Instance::new(weights, lists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{exhaustive_max_weight, max_weight_matching};
    use crate::rational::one;

    #[test]
    fn adversarial_k1() {
        let inst = gen_adversarial_waterlevel(1).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.arrivals(), &[vec![0, 1, 2], vec![0], vec![1]]);
        assert_eq!(exhaustive_max_weight(&inst), int(3));
    }

    #[test]
    fn adversarial_sizes_and_perfect_matching() {
        for k in 1..=6 {
            let inst = gen_adversarial_waterlevel(k).unwrap();
            let n = 3usize.pow(k);
            assert_eq!(inst.n(), n);
            assert_eq!(inst.num_arrivals(), n);
            let (value, m) = max_weight_matching(&inst);
            assert_eq!(value, int(n as i64));
            m.validate_against(&inst).unwrap();
        }
        assert!(gen_adversarial_waterlevel(0).is_err());
        assert!(gen_adversarial_waterlevel(10).is_err());
    }

    #[test]
    fn three_choice_values() {
        let all = gen_three_choice_counterexample();
        assert_eq!(all.len(), 8);
        let total: Rational = all.iter().map(|(_, _, p)| p.clone()).sum();
        assert_eq!(total, one());
        let q = ratio(19, 24);
        assert_eq!(ratio(6965, 41472), (one() - &q * &q * &q) / int(3));
    }

    #[test]
    fn random_instances() {
        let a = gen_random_instance(6, 9, 3, (1, 5), 42).unwrap();
        assert_eq!(a, gen_random_instance(6, 9, 3, (1, 5), 42).unwrap());
        let b = gen_random_instance(6, 9, 1, (1, 1), 7).unwrap();
        assert!(b.arrivals().iter().all(|nb| nb.len() <= 1));
        assert!(b.is_unweighted());
        assert!(gen_random_instance(3, 2, 4, (1, 1), 0).is_err());
    }
}
