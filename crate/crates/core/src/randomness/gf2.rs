//! Arithmetic in GF(2^s) for `s <= 63`, elements stored as bit patterns.

use crate::error::{Error, Result};

/// Carry-less product of two polynomials over GF(2).
fn clmul(a: u128, b: u128) -> u128 {
    let mut out = 0u128;
    let (mut a, mut b) = (a, b);
    while b != 0 {
        if b & 1 == 1 {
            out ^= a;
        }
        a <<= 1;
        b >>= 1;
    }
    out
}

fn degree(p: u128) -> i32 {
    127 - p.leading_zeros() as i32
}

fn poly_mod(mut a: u128, m: u128) -> u128 {
    let dm = degree(m);
    while a != 0 && degree(a) >= dm {
        a ^= m << (degree(a) - dm);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_mod(a, b);
        a = b;
        b = r;
    }
    a
}

/// Ben-Or test: `f` of degree `s` is irreducible iff `gcd(x^(2^i) - x, f) = 1`
/// for every `i <= s/2`.
pub fn is_irreducible(f: u128) -> bool {
    let s = degree(f);
    if s < 1 {
        return false;
    }
    if f & 1 == 0 {
        return s == 1;
    }
    let mut xp = 0b10u128; // x^(2^0)
    for _ in 1..=s / 2 {
        xp = poly_mod(clmul(xp, xp), f);
        if poly_gcd(f, xp ^ 0b10) != 1 {
            return false;
        }
    }
    true
}

/// The field GF(2^s) built on the lexicographically first irreducible
/// polynomial `x^s + c(x)` with `c` odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gf2Field {
    s: u32,
    modulus: u128,
}

impl Gf2Field {
    pub fn new(s: u32) -> Result<Self> {
        if !(1..=63).contains(&s) {
            return Err(Error::Randomness(format!("field degree {s} not in 1..=63")));
        }
        let top = 1u128 << s;
        if s == 1 {
            return Ok(Gf2Field { s, modulus: 0b11 });
        }
        let mut c = 1u128;
        while c < top {
            if is_irreducible(top | c) {
                return Ok(Gf2Field { s, modulus: top | c });
            }
            c += 2;
        }
        Err(Error::Randomness(format!("no irreducible polynomial of degree {s}")))
    }

    pub fn degree(&self) -> u32 {
        self.s
    }

    pub fn modulus(&self) -> u128 {
        self.modulus
    }

    pub fn order(&self) -> u128 {
        1u128 << self.s
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        poly_mod(clmul(a as u128, b as u128), self.modulus) as u64
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut out = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                out = self.mul(out, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_irreducibles() {
        assert!(is_irreducible(0b111)); // x^2 + x + 1
        assert!(is_irreducible(0b1011)); // x^3 + x + 1
        assert!(!is_irreducible(0b101)); // (x + 1)^2
        assert!(is_irreducible(0b11111)); // x^4 + x^3 + x^2 + x + 1
        assert!(!is_irreducible(0b10101)); // (x^2 + x + 1)^2
    }

    #[test]
    fn field_axioms_small() {
        for s in 1..=8 {
            let f = Gf2Field::new(s).unwrap();
            let q = 1u64 << s;
            // Every nonzero element has order dividing q - 1.
            for a in 1..q {
                assert_eq!(f.pow(a, q - 1), 1, "s = {s}, a = {a}");
            }
        }
        assert!(Gf2Field::new(0).is_err());
        assert!(Gf2Field::new(63).is_ok());
    }

    #[test]
    fn distributive() {
        let f = Gf2Field::new(13).unwrap();
        for (a, b, c) in [(5u64, 77u64, 1234u64), (8191, 4095, 3)] {
            assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
        }
    }
}
