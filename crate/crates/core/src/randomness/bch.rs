//! k-wise linearly independent vectors from BCH parity-check columns.

use fixedbitset::FixedBitSet;

use super::gf2::Gf2Field;
use crate::error::{Error, Result};

/// Vectors `v_1..v_m` in GF(2)^h, any `k` of which are linearly independent.
#[derive(Debug, Clone)]
pub struct KwiseVectors {
    pub k: usize,
    pub h: usize,
    pub vectors: Vec<FixedBitSet>,
}

/// Field degree used for `m` variables.
pub fn field_degree(m: usize) -> u32 {
    let mut q = 1;
    while (1usize << q) < m + 1 {
        q += 1;
    }
    q
}

/// Length `h` of the vectors produced for `(m, k)`.
pub fn kwise_length(m: usize, k: usize) -> usize {
    k.max(1).div_ceil(2) * field_degree(m) as usize
}

/// Column `i` is `(β, β^3, ..., β^(k-1))` with `β` the `i+1`-th nonzero element.
pub fn bch_kwise_vectors(m: usize, k: usize) -> Result<KwiseVectors> {
    if m == 0 {
        return Err(Error::Randomness("need at least one variable".into()));
    }
    let k = k.max(1).next_multiple_of(2);
    let q = field_degree(m);
    if q > 63 {
        return Err(Error::Randomness(format!("{m} variables exceed the field table")));
    }
    let field = Gf2Field::new(q)?;
    let h = (k / 2) * q as usize;
    let vectors = (0..m)
        .map(|i| {
            let beta = i as u64 + 1;
            let mut v = FixedBitSet::with_capacity(h);
            for (block, e) in (1..k).step_by(2).enumerate() {
                let p = field.pow(beta, e as u64);
                for bit in 0..q as usize {
                    if p >> bit & 1 == 1 {
                        v.insert(block * q as usize + bit);
                    }
                }
            }
            v
        })
        .collect();
    Ok(KwiseVectors { k, h, vectors })
}

impl KwiseVectors {
    pub fn m(&self) -> usize {
        self.vectors.len()
    }

    /// Exhaustively checks that no nonempty subset of size at most `k` sums to zero.
    pub fn verify_independent(&self) -> bool {
        fn rec(vs: &[FixedBitSet], start: usize, left: usize, acc: &FixedBitSet) -> bool {
            for i in start..vs.len() {
                let mut next = acc.clone();
                next.symmetric_difference_with(&vs[i]);
                if next.count_ones(..) == 0 {
                    return false;
                }
                if left > 1 && !rec(vs, i + 1, left - 1, &next) {
                    return false;
                }
            }
            true
        }
        rec(&self.vectors, 0, self.k, &FixedBitSet::with_capacity(self.h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_vectors_are_distinct_nonzero() {
        let v = bch_kwise_vectors(4, 2).unwrap();
        assert_eq!(v.h, 3);
        for (i, a) in v.vectors.iter().enumerate() {
            assert!(a.count_ones(..) > 0);
            for b in &v.vectors[i + 1..] {
                assert_ne!(a, b);
            }
        }
        assert!(v.verify_independent());
    }

    #[test]
    fn four_wise_sixteen() {
        let v = bch_kwise_vectors(16, 4).unwrap();
        assert!(v.h <= 2 * 4 + 2);
        assert!(v.verify_independent());
    }

    #[test]
    fn odd_k_rounds_up_and_large_m() {
        let v = bch_kwise_vectors(64, 3).unwrap();
        assert_eq!(v.k, 4);
        assert_eq!(v.h, 14);
        assert!(v.verify_independent());
    }

    #[test]
    fn single_variable() {
        let v = bch_kwise_vectors(1, 1).unwrap();
        assert_eq!(v.m(), 1);
        assert!(v.vectors[0].count_ones(..) > 0);
        assert!(bch_kwise_vectors(0, 2).is_err());
    }

    #[test]
    fn dependence_detected() {
        let mut v = bch_kwise_vectors(8, 2).unwrap();
        v.vectors[3] = v.vectors[5].clone();
        assert!(!v.verify_independent());
    }
}
