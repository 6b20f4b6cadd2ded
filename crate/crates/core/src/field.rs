//! Arithmetic in the prime field F_p for small p.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a prime")]
    NotPrime(u32),
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= p as u64 {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A prime modulus. Elements are plain `u32` values in `0..p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    p: u32,
}

impl Fp {
    pub fn new(p: u32) -> Result<Self, FieldError> {
        if is_prime(p) {
            Ok(Fp { p })
        } else {
            Err(FieldError::NotPrime(p))
        }
    }

    #[inline]
    pub fn p(self) -> u32 {
        self.p
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        ((a as u64 + self.p as u64 - b as u64 % self.p as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        self.sub(0, a)
    }

    pub fn pow(self, mut a: u32, mut e: u64) -> u32 {
        let mut r = 1 % self.p;
        a %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// Inverse of a nonzero element (Fermat).
    pub fn inv(self, a: u32) -> u32 {
        debug_assert!(!a.is_multiple_of(self.p));
        self.pow(a, self.p as u64 - 2)
    }

    pub fn from_i64(self, a: i64) -> u32 {
        a.rem_euclid(self.p as i64) as u32
    }

    /// Binomial coefficient reduced mod p (inputs small enough for exact u128).
    pub fn binomial(self, n: u32, k: u32) -> u32 {
        if k > n {
            return 0;
        }
        let mut r: u128 = 1;
        for i in 0..k as u128 {
            r = r * (n as u128 - i) / (i + 1);
        }
        (r % self.p as u128) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        let ps: Vec<u32> = (0..30).filter(|&p| is_prime(p)).collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(Fp::new(9).is_err());
    }

    #[test]
    fn inverses_and_signs() {
        let f = Fp::new(7).unwrap();
        for a in 1..7 {
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
        assert_eq!(f.from_i64(-1), 6);
        assert_eq!(f.neg(0), 0);
        assert_eq!(f.binomial(4, 2), 6);
        assert_eq!(Fp::new(3).unwrap().binomial(4, 2), 0);
    }
}
