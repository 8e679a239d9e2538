//! Coin sources feeding the rounding engines.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bch::bch_kwise_vectors;
use super::smallbias::{SeedAccounting, SeedSpace, SmallBiasSpace};
use crate::error::{Error, Result};
use crate::rational::{dyadic_exponent, format, parse, pow2_neg, Rational};

/// Which of the two per-arrival slots a draw reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoinRole {
    A,
    B,
}

impl CoinRole {
    pub fn index(self) -> usize {
        match self {
            CoinRole::A => 0,
            CoinRole::B => 1,
        }
    }
}

/// Returns 1 iff the `b`-bit value (most significant bit first) is below `a`.
pub fn bernoulli_from_bits(bits: &[bool], a: u128) -> Result<bool> {
    let b = bits.len();
    if b > 64 {
        return Err(Error::Randomness(format!("{b} bits per slot exceed 64")));
    }
    if a > 1u128 << b {
        return Err(Error::Randomness(format!("numerator {a} exceeds 2^{b}")));
    }
    let value = bits.iter().fold(0u128, |acc, &x| acc << 1 | x as u128);
    Ok(value < a)
}

pub trait CoinSource {
    /// True with probability `p`.
    fn bernoulli(&mut self, t: usize, role: CoinRole, p: &Rational) -> Result<bool>;
    /// Index `i` with probability `probs[i]`; `probs.len()` with the remaining mass.
    fn categorical(&mut self, t: usize, role: CoinRole, probs: &[Rational]) -> Result<usize>;
    fn bits_consumed(&self) -> u64;
}

/// Fully independent coins with exact rational probabilities, realised by
/// lazily comparing a uniform real against each threshold.
pub struct IidSource {
    rng: ChaCha8Rng,
    word: u64,
    left: u32,
    drawn: Vec<bool>,
    consumed: u64,
}

impl IidSource {
    pub fn new(seed: u64) -> Self {
        IidSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
            word: 0,
            left: 0,
            drawn: Vec::new(),
            consumed: 0,
        }
    }

    fn bit(&mut self, j: usize) -> bool {
        while self.drawn.len() <= j {
            if self.left == 0 {
                self.word = self.rng.next_u64();
                self.left = 64;
            }
            self.drawn.push(self.word & 1 == 1);
            self.word >>= 1;
            self.left -= 1;
            self.consumed += 1;
        }
        self.drawn[j]
    }

    /// Whether the current uniform `U` is below `p`.
    fn below(&mut self, p: &Rational) -> bool {
        if !p.is_positive() {
            return false;
        }
        if p >= &Rational::one() {
            return true;
        }
        if let Some(e) = dyadic_exponent(p).filter(|&e| e <= 64) {
            let a = p.numer().to_u128().expect("numerator below 2^64");
            let mut value = 0u128;
            for j in 0..e as usize {
                value = value << 1 | self.bit(j) as u128;
            }
            return value < a;
        }
        let den = p.denom().clone();
        let mut num = p.numer().clone();
        for j in 0.. {
            num <<= 1;
            let pbit = num >= den;
            if pbit {
                num -= &den;
            }
            let ubit = self.bit(j);
            if ubit != pbit {
                return pbit;
            }
            if num.is_zero() {
                return false;
            }
        }
        unreachable!()
    }
}

impl CoinSource for IidSource {
    fn bernoulli(&mut self, _t: usize, _role: CoinRole, p: &Rational) -> Result<bool> {
        self.drawn.clear();
        Ok(self.below(p))
    }

    fn categorical(&mut self, _t: usize, _role: CoinRole, probs: &[Rational]) -> Result<usize> {
        self.drawn.clear();
        let mut cum = Rational::zero();
        for (i, p) in probs.iter().enumerate() {
            cum += p;
            if self.below(&cum) {
                return Ok(i);
            }
        }
        Ok(probs.len())
    }

    fn bits_consumed(&self) -> u64 {
        self.consumed
    }
}

/// Coins read from a fixed bit string: arrival `t` owns slots `2t` (A) and
/// `2t + 1` (B), each `b` bits wide.
pub struct SlotSource {
    b: u32,
    bits: Vec<bool>,
    consumed: u64,
}

impl SlotSource {
    pub fn new(b: u32, bits: Vec<bool>) -> Result<Self> {
        if !(1..=64).contains(&b) {
            return Err(Error::Randomness(format!("slot width {b} not in 1..=64")));
        }
        Ok(SlotSource { b, bits, consumed: 0 })
    }

    pub fn slot_range(&self, t: usize, role: CoinRole) -> std::ops::Range<usize> {
        let start = (2 * t + role.index()) * self.b as usize;
        start..start + self.b as usize
    }

    fn read(&mut self, t: usize, role: CoinRole) -> Result<u128> {
        let range = self.slot_range(t, role);
        let bits = self.bits.get(range.clone()).ok_or_else(|| {
            Error::Randomness(format!("slot for arrival {t} lies past {} bits", self.bits.len()))
        })?;
        self.consumed += self.b as u64;
        Ok(bits.iter().fold(0u128, |acc, &x| acc << 1 | x as u128))
    }

    fn numerator(&self, p: &Rational) -> Result<u128> {
        let scaled = p * Rational::from_integer(BigInt::one() << self.b as usize);
        if !scaled.is_integer() || scaled.is_negative() || scaled > Rational::from_integer(BigInt::one() << self.b as usize) {
            return Err(Error::Randomness(format!(
                "probability {} is not a {}-bit dyadic",
                format(p),
                self.b
            )));
        }
        Ok(scaled.to_integer().to_u128().expect("at most 2^64"))
    }
}

impl CoinSource for SlotSource {
    fn bernoulli(&mut self, t: usize, role: CoinRole, p: &Rational) -> Result<bool> {
        let a = self.numerator(p)?;
        Ok(self.read(t, role)? < a)
    }

    fn categorical(&mut self, t: usize, role: CoinRole, probs: &[Rational]) -> Result<usize> {
        let mut cum = 0u128;
        let mut thresholds = Vec::with_capacity(probs.len());
        for p in probs {
            cum += self.numerator(p)?;
            thresholds.push(cum);
        }
        if cum > 1u128 << self.b {
            return Err(Error::Randomness("categorical mass above 1".into()));
        }
        let u = self.read(t, role)?;
        Ok(thresholds.iter().position(|&c| u < c).unwrap_or(probs.len()))
    }

    fn bits_consumed(&self) -> u64 {
        self.consumed
    }
}

/// Kind of randomness requested on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RngSpec {
    Iid,
    /// Exactly `k'`-wise independent bits.
    KWise(usize),
    /// `(δ, b 2^(k+2))`-dependent bits from the powering space.
    SmallBias(Rational),
}

impl fmt::Display for RngSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RngSpec::Iid => f.write_str("iid"),
            RngSpec::KWise(k) => write!(f, "kwise:{k}"),
            RngSpec::SmallBias(d) => write!(f, "smallbias:{}", format(d)),
        }
    }
}

impl FromStr for RngSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::OutOfRange(format!("unknown randomness source `{s}`"));
        match s.split_once(':') {
            None if s == "iid" => Ok(RngSpec::Iid),
            Some(("kwise", k)) => {
                let k: usize = k.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(bad());
                }
                Ok(RngSpec::KWise(k))
            }
            Some(("smallbias", d)) => {
                let d = parse(d).map_err(|_| bad())?;
                if !d.is_positive() || d > Rational::one() {
                    return Err(Error::OutOfRange(format!("δ = {} not in (0, 1]", format(&d))));
                }
                Ok(RngSpec::SmallBias(d))
            }
            _ => Err(bad()),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `i`: `splitmix64(master ^ splitmix64(i))`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial))
}

enum Shared {
    Iid,
    Slots { b: u32, space: SmallBiasSpace },
}

/// Builds one coin source per trial; the underlying space is shared.
pub struct SourceFactory {
    spec: RngSpec,
    shared: Shared,
}

impl SourceFactory {
    /// `bits` is the slot width `b` and `levels` the level count `k` of the
    /// trace; both are needed for the structured sources.
    pub fn new(spec: &RngSpec, arrivals: usize, bits: Option<u32>, levels: Option<u32>) -> Result<Self> {
        let need_bits = || {
            bits.ok_or_else(|| {
                Error::Randomness(format!("{spec} needs a trace with finite bit precision"))
            })
        };
        let shared = match spec {
            RngSpec::Iid => Shared::Iid,
            RngSpec::KWise(k) => {
                let b = need_bits()?;
                let m = (2 * b as usize * arrivals).max(1);
                let vectors = bch_kwise_vectors(m, *k)?;
                let space = SmallBiasSpace {
                    eps: Rational::zero(),
                    delta: Rational::zero(),
                    space: SeedSpace::Uniform { h: vectors.h },
                    vectors,
                };
                Shared::Slots { b, space }
            }
            RngSpec::SmallBias(delta) => {
                let b = need_bits()?;
                let k = levels.ok_or_else(|| {
                    Error::Randomness(format!("{spec} needs a level-structured trace"))
                })?;
                let m = (2 * b as usize * arrivals).max(1);
                let k_prime = b as usize * (1usize << (k + 2));
                let eps = delta * pow2_neg(k_prime.div_ceil(2) as u32);
                Shared::Slots {
                    b,
                    space: SmallBiasSpace::new(m, k_prime, &eps)?,
                }
            }
        };
        Ok(SourceFactory {
            spec: spec.clone(),
            shared,
        })
    }

    pub fn spec(&self) -> &RngSpec {
        &self.spec
    }

    pub fn accounting(&self) -> Option<SeedAccounting> {
        match &self.shared {
            Shared::Iid => None,
            Shared::Slots { space, .. } => Some(space.accounting()),
        }
    }

    pub fn make(&self, seed: u64) -> Result<Box<dyn CoinSource>> {
        Ok(match &self.shared {
            Shared::Iid => Box::new(IidSource::new(seed)),
            Shared::Slots { b, space } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Box::new(SlotSource::new(*b, space.sample(&mut rng))?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn patterns(b: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1u32 << b).map(move |v| (0..b).rev().map(|j| v >> j & 1 == 1).collect())
    }

    #[test]
    fn bernoulli_from_bits_is_exact() {
        for b in 0..=10usize {
            for a in [0u128, 1, (1 << b) / 2, (1 << b) - 1, 1 << b] {
                let ones = patterns(b)
                    .filter(|bits| bernoulli_from_bits(bits, a).unwrap())
                    .count() as u128;
                assert_eq!(ones, a, "b = {b}, a = {a}");
            }
        }
        assert_eq!(patterns(3).filter(|p| bernoulli_from_bits(p, 7).unwrap()).count(), 7);
        assert!(bernoulli_from_bits(&[true, false], 5).is_err());
    }

    #[test]
    fn iid_frequencies() {
        let mut src = IidSource::new(7);
        for p in [ratio(1, 3), ratio(7, 8), ratio(0, 1), ratio(1, 1)] {
            let n = 20000;
            let hits = (0..n).filter(|_| src.bernoulli(0, CoinRole::A, &p).unwrap()).count();
            let f = hits as f64 / n as f64;
            assert!((f - crate::rational::to_f64(&p)).abs() < 0.02, "{p}: {f}");
        }
        let probs = [ratio(1, 5), ratio(1, 2)];
        let mut counts = [0usize; 3];
        for _ in 0..20000 {
            counts[src.categorical(0, CoinRole::B, &probs).unwrap()] += 1;
        }
        assert!((counts[0] as f64 / 20000.0 - 0.2).abs() < 0.02);
        assert!((counts[2] as f64 / 20000.0 - 0.3).abs() < 0.02);
        assert!(src.bits_consumed() > 0);
    }

    #[test]
    fn slots_are_fixed_positions() {
        let bits = vec![true, false, false, true, true, true, false, false];
        let mut src = SlotSource::new(2, bits).unwrap();
        assert_eq!(src.slot_range(1, CoinRole::B), 6..8);
        // slot A of arrival 0 reads 0b10 = 2
        assert!(!src.bernoulli(0, CoinRole::A, &ratio(1, 2)).unwrap());
        assert!(src.bernoulli(0, CoinRole::A, &ratio(3, 4)).unwrap());
        // slot B of arrival 0 reads 0b01 = 1
        assert_eq!(src.categorical(0, CoinRole::B, &[ratio(1, 4), ratio(1, 2)]).unwrap(), 1);
        assert_eq!(src.bits_consumed(), 6);
        assert!(src.bernoulli(0, CoinRole::A, &ratio(1, 3)).is_err());
        assert!(src.bernoulli(5, CoinRole::A, &ratio(1, 2)).is_err());
    }

    #[test]
    fn rng_spec_parsing() {
        assert_eq!("iid".parse::<RngSpec>().unwrap(), RngSpec::Iid);
        assert_eq!("kwise:8".parse::<RngSpec>().unwrap(), RngSpec::KWise(8));
        assert_eq!(
            "smallbias:1/4".parse::<RngSpec>().unwrap(),
            RngSpec::SmallBias(ratio(1, 4))
        );
        for bad in ["", "kwise", "kwise:0", "smallbias:2", "coin"] {
            assert!(bad.parse::<RngSpec>().is_err(), "{bad}");
        }
        assert_eq!(RngSpec::SmallBias(ratio(1, 4)).to_string(), "smallbias:1/4");
    }

    #[test]
    fn trial_seeds_differ_and_repeat() {
        assert_eq!(trial_seed(1, 2), trial_seed(1, 2));
        assert_ne!(trial_seed(1, 2), trial_seed(1, 3));
        assert_ne!(trial_seed(1, 2), trial_seed(2, 2));
    }

    #[test]
    fn factory_accounting() {
        let f = SourceFactory::new(&RngSpec::SmallBias(ratio(1, 4)), 9, Some(2), Some(2)).unwrap();
        let acc = f.accounting().unwrap();
        assert_eq!(acc.m, 36);
        assert_eq!(acc.k_prime, 32);
        assert_eq!(acc.construction, "powering-v1");
        assert!(f.make(3).is_ok());
        assert!(SourceFactory::new(&RngSpec::KWise(4), 9, None, None).is_err());
        assert!(SourceFactory::new(&RngSpec::Iid, 9, None, None).unwrap().accounting().is_none());
    }
}
