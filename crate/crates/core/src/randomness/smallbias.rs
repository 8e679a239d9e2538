//! ε-biased seed spaces, (δ,k)-dependent bit samples and exact bias checks.

use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, RngCore};
use serde::Serialize;

use super::bch::{bch_kwise_vectors, kwise_length, KwiseVectors};
use super::gf2::Gf2Field;
use crate::error::{Error, Result};
use crate::rational::{format, pow2_neg, to_f64, Rational};

/// A sample space over GF(2)^h.
#[derive(Debug, Clone)]
pub enum SeedSpace {
    /// Every vector of GF(2)^h with equal weight.
    Uniform { h: usize },
    /// Seeds `(x, y)` in GF(2^s)^2 with `r_j = <x^j, y>`.
    Powering { h: usize, field: Gf2Field },
}

/// Smallest `s` with `2^s * eps >= h`.
fn powering_degree(h: usize, eps: &Rational) -> u32 {
    let target = Rational::from_integer(BigInt::from(h)) / eps;
    let mut s = 1u32;
    while Rational::from_integer(BigInt::one() << s as usize) < target {
        s += 1;
    }
    s
}

/// An explicit space over GF(2)^h in which every nonempty parity has bias at
/// most `eps`; `eps = 0` gives the uniform space.
pub fn eps_biased_seed_space(h: usize, eps: &Rational) -> Result<SeedSpace> {
    if h == 0 {
        return Err(Error::Randomness("seed vectors need h >= 1".into()));
    }
    if eps.is_zero() {
        return Ok(SeedSpace::Uniform { h });
    }
    if eps.is_negative() || eps >= &Rational::one() {
        return Err(Error::Randomness(format!("bias {} not in (0, 1)", format(eps))));
    }
    let s = powering_degree(h, eps);
    if s > 63 {
        return Err(Error::Randomness(format!(
            "bias {} with h = {h} needs a field of degree {s} > 63",
            format(eps)
        )));
    }
    Ok(SeedSpace::Powering {
        h,
        field: Gf2Field::new(s)?,
    })
}

impl SeedSpace {
    pub fn h(&self) -> usize {
        match self {
            SeedSpace::Uniform { h } | SeedSpace::Powering { h, .. } => *h,
        }
    }

    pub fn seed_bits(&self) -> u32 {
        match self {
            SeedSpace::Uniform { h } => *h as u32,
            SeedSpace::Powering { field, .. } => 2 * field.degree(),
        }
    }

    /// Number of seeds when it fits in a `u128`.
    pub fn size(&self) -> Option<u128> {
        let bits = self.seed_bits();
        (bits < 128).then(|| 1u128 << bits)
    }

    /// The seed vector `r` for seed index `seed`.
    pub fn r_vector(&self, seed: u128) -> Result<FixedBitSet> {
        if self.size().is_none_or(|n| seed >= n) {
            return Err(Error::Randomness(format!("seed {seed} out of range")));
        }
        Ok(match self {
            SeedSpace::Uniform { h } => {
                let mut r = FixedBitSet::with_capacity(*h);
                for j in 0..*h {
                    r.set(j, seed >> j & 1 == 1);
                }
                r
            }
            SeedSpace::Powering { h, field } => {
                let s = field.degree();
                let x = (seed >> s) as u64;
                let y = (seed & ((1u128 << s) - 1)) as u64;
                powering_vector(*h, field, x, y)
            }
        })
    }

    /// Draws `r` from the space.
    pub fn sample_r<R: RngCore>(&self, rng: &mut R) -> FixedBitSet {
        match self {
            SeedSpace::Uniform { h } => {
                let mut r = FixedBitSet::with_capacity(*h);
                for j in 0..*h {
                    r.set(j, rng.gen::<bool>());
                }
                r
            }
            SeedSpace::Powering { h, field } => {
                let mask = (1u64 << field.degree()) - 1;
                let x = rng.next_u64() & mask;
                let y = rng.next_u64() & mask;
                powering_vector(*h, field, x, y)
            }
        }
    }

    pub fn construction(&self) -> &'static str {
        match self {
            SeedSpace::Uniform { .. } => "uniform",
            SeedSpace::Powering { .. } => "powering-v1",
        }
    }
}

fn powering_vector(h: usize, field: &Gf2Field, x: u64, y: u64) -> FixedBitSet {
    let mut r = FixedBitSet::with_capacity(h);
    let mut p = 1u64;
    for j in 0..h {
        r.set(j, (p & y).count_ones() & 1 == 1);
        p = field.mul(p, x);
    }
    r
}

fn inner(v: &FixedBitSet, r: &FixedBitSet) -> bool {
    v.intersection_count(r) & 1 == 1
}

/// A (δ,k)-dependent space of `m` bits: k-wise independent vectors fed by an
/// ε-biased seed, with `δ = 2^(k/2) ε`.
#[derive(Debug, Clone)]
pub struct SmallBiasSpace {
    pub eps: Rational,
    pub delta: Rational,
    pub vectors: KwiseVectors,
    pub space: SeedSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedAccounting {
    pub m: usize,
    pub k_prime: usize,
    pub eps: String,
    pub delta: String,
    pub h: usize,
    pub seed_bits: u32,
    pub construction: String,
}

impl SmallBiasSpace {
    pub fn new(m: usize, k: usize, eps: &Rational) -> Result<Self> {
        let vectors = bch_kwise_vectors(m, k)?;
        let space = eps_biased_seed_space(vectors.h, eps)?;
        let delta = eps * Rational::from_integer(BigInt::one() << (vectors.k / 2));
        Ok(SmallBiasSpace {
            eps: eps.clone(),
            delta,
            vectors,
            space,
        })
    }

    pub fn m(&self) -> usize {
        self.vectors.m()
    }

    pub fn k(&self) -> usize {
        self.vectors.k
    }

    pub fn h(&self) -> usize {
        self.vectors.h
    }

    pub fn seed_bits(&self) -> u32 {
        self.space.seed_bits()
    }

    pub fn accounting(&self) -> SeedAccounting {
        SeedAccounting {
            m: self.m(),
            k_prime: self.k(),
            eps: format(&self.eps),
            delta: format(&self.delta),
            h: self.h(),
            seed_bits: self.seed_bits(),
            construction: self.space.construction().to_string(),
        }
    }

    fn bits_from_r(&self, r: &FixedBitSet) -> Vec<bool> {
        self.vectors.vectors.iter().map(|v| inner(v, r)).collect()
    }

    pub fn sample<R: RngCore>(&self, rng: &mut R) -> Vec<bool> {
        self.bits_from_r(&self.space.sample_r(rng))
    }

    /// The full induced distribution, by enumerating every seed.
    pub fn distribution(&self) -> Result<BitDistribution> {
        let size = self
            .space
            .size()
            .filter(|&n| n <= 1 << 24)
            .ok_or_else(|| Error::TooLarge(format!("{} seed bits", self.seed_bits())))?;
        let mut outcomes = Vec::with_capacity(size as usize);
        for seed in 0..size {
            outcomes.push(pack(&sample_delta_k(&self.space, &self.vectors, seed)?)?);
        }
        BitDistribution::from_outcomes(self.m(), outcomes)
    }
}

/// `x_i = <v_i, r>` for the seed vector `r` indexed by `seed`.
pub fn sample_delta_k(space: &SeedSpace, vectors: &KwiseVectors, seed: u128) -> Result<Vec<bool>> {
    if space.h() != vectors.h {
        return Err(Error::Randomness(format!(
            "seed length {} does not match vector length {}",
            space.h(),
            vectors.h
        )));
    }
    let r = space.r_vector(seed)?;
    Ok(vectors.vectors.iter().map(|v| inner(v, &r)).collect())
}

fn pack(bits: &[bool]) -> Result<u64> {
    if bits.len() > 64 {
        return Err(Error::TooLarge(format!("{} variables", bits.len())));
    }
    Ok(bits
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | (b as u64) << i))
}

/// An explicit distribution over `{0,1}^m` (`m <= 64`); bit `i` of an outcome is `x_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitDistribution {
    m: usize,
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl BitDistribution {
    /// Equal weight on every listed outcome (repeats add weight).
    pub fn from_outcomes(m: usize, outcomes: impl IntoIterator<Item = u64>) -> Result<Self> {
        if m > 64 {
            return Err(Error::TooLarge(format!("{m} variables")));
        }
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for o in outcomes {
            if m < 64 && o >> m != 0 {
                return Err(Error::OutOfRange(format!("outcome {o:#x} has more than {m} bits")));
            }
            *counts.entry(o).or_insert(0) += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::Randomness("empty distribution".into()));
        }
        Ok(BitDistribution { m, counts, total })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m > 24 {
            return Err(Error::TooLarge(format!("uniform over {m} bits")));
        }
        Self::from_outcomes(m, 0..1u64 << m)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn prob(&self, outcome: u64) -> Rational {
        Rational::new(
            BigInt::from(self.counts.get(&outcome).copied().unwrap_or(0)),
            BigInt::from(self.total),
        )
    }

    /// `sum_x count(x) (-1)^{parity(x & mask)}`.
    fn correlation(&self, mask: u64) -> i128 {
        self.counts
            .iter()
            .map(|(&x, &c)| {
                if (x & mask).count_ones() & 1 == 1 {
                    -(c as i128)
                } else {
                    c as i128
                }
            })
            .sum()
    }
}

fn subset_mask(s: &[usize]) -> u64 {
    s.iter().fold(0, |acc, &i| acc | 1u64 << i)
}

/// `|Pr[parity 0] - Pr[parity 1]|` of the variables in `s`.
pub fn bias_of_subset(dist: &BitDistribution, s: &[usize]) -> Rational {
    let c = dist.correlation(subset_mask(s));
    Rational::new(BigInt::from(c.abs()), BigInt::from(dist.total))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaKReport {
    pub k: usize,
    pub delta: String,
    pub holds: bool,
    /// Largest total-variation sum over subsets of size at most `k`.
    pub worst: String,
    pub worst_subset: Vec<usize>,
    pub events_checked: usize,
    pub worst_event_gap: String,
}

fn subsets_up_to(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for i in start..m {
            cur.push(i);
            out.push(cur.clone());
            if cur.len() < k {
                rec(m, k, i + 1, cur, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(m, k, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// Exhaustive check of `sum_v |Pr[x_I = v] - 2^-|I|| <= delta` for all
/// `1 <= |I| <= k`, plus `events` planted events on random `k`-subsets.
pub fn verify_delta_k(
    dist: &BitDistribution,
    k: usize,
    delta: &Rational,
    events: usize,
    seed: u64,
) -> DeltaKReport {
    let k = k.min(dist.m);
    let subsets = subsets_up_to(dist.m, k);
    let corr: HashMap<u64, i128> = subsets
        .iter()
        .map(|s| {
            let mask = subset_mask(s);
            (mask, dist.correlation(mask))
        })
        .collect();
    // Pr[x_I = v] * total * 2^|I| = sum_{T ⊆ I} (-1)^{<v,T>} corr(T).
    let tv_numerator = |s: &[usize]| -> i128 {
        let size = s.len();
        let mut sum = 0i128;
        for v in 0..1u64 << size {
            let mut dev = 0i128;
            for t in 1..1u64 << size {
                let mask = (0..size)
                    .filter(|&b| t >> b & 1 == 1)
                    .fold(0u64, |acc, b| acc | 1u64 << s[b]);
                let sign = if (v & t).count_ones() & 1 == 1 { -1 } else { 1 };
                dev += sign * corr[&mask];
            }
            sum += dev.abs();
        }
        sum
    };
    let total = BigInt::from(dist.total);
    let mut worst = Rational::zero();
    let mut worst_subset = Vec::new();
    for s in &subsets {
        let tv = Rational::new(
            BigInt::from(tv_numerator(s)),
            &total * (BigInt::one() << s.len()),
        );
        if tv > worst {
            worst = tv;
            worst_subset = s.clone();
        }
    }

    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut worst_event = Rational::zero();
    if k > 0 {
        for _ in 0..events {
            let size = rng.gen_range(1..=k);
            let vars = rand::seq::index::sample(&mut rng, dist.m, size).into_vec();
            let accepted: Vec<bool> = (0..1usize << size).map(|_| rng.gen()).collect();
            let hits = accepted.iter().filter(|&&a| a).count();
            let mut p = Rational::zero();
            for (&x, &c) in &dist.counts {
                let idx = vars
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (b, &i)| acc | ((x >> i & 1) as usize) << b);
                if accepted[idx] {
                    p += Rational::new(BigInt::from(c), total.clone());
                }
            }
            let gap = (p - Rational::from_integer(BigInt::from(hits)) * pow2_neg(size as u32)).abs();
            worst_event = worst_event.max(gap);
        }
    }
    DeltaKReport {
        k,
        delta: format(delta),
        holds: &worst <= delta && &worst_event <= delta,
        worst: format(&worst),
        worst_subset,
        events_checked: events,
        worst_event_gap: format(&worst_event),
    }
}

/// Seed accounting for a k-level b-bit run over `arrivals` arrivals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedBudget {
    pub accounting: SeedAccounting,
    pub delta: f64,
    /// Measured `C` in `seed_bits = log2 log2 m + C (k' + log2(1/δ))`.
    pub constant: f64,
    pub bound_bits: f64,
}

/// Constant the budget check allows for `C`.
pub const SEED_BUDGET_CONSTANT: f64 = 4.0;

/// Builds the space for `m = 2 b T` variables with dependence order
/// `k' = b 2^(k+2)` and `ε = δ / 2^(k'/2)`, and reports its seed length.
pub fn seed_budget(arrivals: usize, k: u32, b: u32, delta: f64) -> Result<SeedBudget> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::OutOfRange(format!("δ = {delta} not in (0, 1]")));
    }
    let m = (2 * b as usize * arrivals).max(1);
    let k_prime = b as usize * (1usize << (k + 2));
    let h = kwise_length(m, k_prime);
    let half = k_prime.div_ceil(2);
    let delta_r = Rational::from_float(delta)
        .ok_or_else(|| Error::OutOfRange(format!("δ = {delta}")))?;
    let eps = &delta_r * pow2_neg(half as u32);
    let space = eps_biased_seed_space(h, &eps)?;
    let seed_bits = space.seed_bits();
    let loglog = (m as f64).log2().max(1.0).log2();
    let constant = (seed_bits as f64 - loglog) / (k_prime as f64 + (1.0 / delta).log2());
    let bound_bits = loglog + SEED_BUDGET_CONSTANT * (k_prime as f64 + (1.0 / delta).log2());
    let accounting = SeedAccounting {
        m,
        k_prime: k_prime.next_multiple_of(2),
        eps: to_f64(&eps).to_string(),
        delta: delta.to_string(),
        h,
        seed_bits,
        construction: space.construction().to_string(),
    };
    Ok(SeedBudget {
        accounting,
        delta,
        constant,
        bound_bits,
    })
}

impl SeedBudget {
    pub fn within_bound(&self) -> bool {
        (self.accounting.seed_bits as f64) <= self.bound_bits
    }
}

/// Exact probability of a single variable being 1, for reporting.
pub fn ones_probability(dist: &BitDistribution, i: usize) -> Rational {
    let ones: u64 = dist
        .counts
        .iter()
        .filter(|(&x, _)| x >> i & 1 == 1)
        .map(|(_, &c)| c)
        .sum();
    Rational::new(BigInt::from(ones), BigInt::from(dist.total))
}
