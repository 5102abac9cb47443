//! Elementary integer number theory: Kronecker symbols, prime generation,
//! Chinese remaindering and trial-division factoring.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

/// Default ceiling for every prime search in the crate.
pub const DEFAULT_PRIME_CEILING: u64 = 100_000_000;

/// Largest integer `factor` accepts (trial division up to `10^7`).
pub const FACTOR_CEILING: u64 = 100_000_000_000_000;

const SEGMENT: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("search requires primes up to {requested}, above the configured ceiling {ceiling}")]
    ResourceExhausted { requested: u64, ceiling: u64 },
    #[error("residue classes {0} and {1} are incompatible")]
    Incompatible(ResidueClass, ResidueClass),
    #[error("invalid residue class: {0}")]
    InvalidClass(String),
    #[error("prime index must be at least 1")]
    ZeroIndex,
}

/// A congruence class `residue mod modulus` with `0 <= residue < modulus`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ResidueClass {
    residue: BigUint,
    modulus: BigUint,
}

impl ResidueClass {
    pub fn new(residue: impl Into<BigUint>, modulus: impl Into<BigUint>) -> Result<Self, ArithError> {
        let residue = residue.into();
        let modulus = modulus.into();
        if modulus.is_zero() {
            return Err(ArithError::InvalidClass("modulus must be positive".into()));
        }
        if residue >= modulus {
            return Err(ArithError::InvalidClass(format!("residue {residue} not reduced modulo {modulus}")));
        }
        Ok(Self { residue, modulus })
    }

    /// Builds the class of an arbitrary (possibly negative) integer.
    pub fn of(value: i64, modulus: u64) -> Result<Self, ArithError> {
        if modulus == 0 {
            return Err(ArithError::InvalidClass("modulus must be positive".into()));
        }
        let r = (value as i128).rem_euclid(modulus as i128) as u64;
        Self::new(r, modulus)
    }

    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn contains(&self, n: u64) -> bool {
        BigUint::from(n) % &self.modulus == self.residue
    }
}

impl fmt::Display for ResidueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.residue, self.modulus)
    }
}

/// The Kronecker symbol `(a | n)`, defined for every pair of integers.
pub fn kronecker(a: i64, n: i64) -> i8 {
    let a = a as i128;
    let mut n = n as i128;
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut sign = 1i8;
    if n < 0 {
        n = -n;
        if a < 0 {
            sign = -sign;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            sign = -sign;
        }
        n >>= twos;
    }
    sign * jacobi(a.rem_euclid(n) as u128, n as u128)
}

/// Jacobi symbol for odd positive `n` and `0 <= a < n`.
fn jacobi(mut a: u128, mut n: u128) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut t = 1i8;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Primality by trial division. Intended for validating user-supplied primes.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub fn is_squarefree(n: i64) -> bool {
    if n == 0 {
        return false;
    }
    let m = n.unsigned_abs();
    if m > FACTOR_CEILING {
        // Callers never pass such values; treat as unverifiable.
        return false;
    }
    match factor(m) {
        Ok(f) => f.iter().all(|&(_, e)| e == 1),
        Err(_) => false,
    }
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(n: i128, p: u64) -> u32 {
    debug_assert!(n != 0 && p >= 2);
    let p = p as i128;
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Trial-division factorization, returned as ascending `(prime, exponent)` pairs.
pub fn factor(n: u64) -> Result<Vec<(u64, u32)>, ArithError> {
    if n > FACTOR_CEILING {
        return Err(ArithError::ResourceExhausted { requested: n, ceiling: FACTOR_CEILING });
    }
    let mut out = Vec::new();
    let mut m = n;
    let mut d = 2u64;
    while d * d <= m {
        if m.is_multiple_of(d) {
            let mut e = 0;
            while m.is_multiple_of(d) {
                m /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    Ok(out)
}

/// Combines a list of congruences into a single class modulo their lcm.
pub fn crt(classes: &[ResidueClass]) -> Result<ResidueClass, ArithError> {
    let mut acc = ResidueClass { residue: BigUint::zero(), modulus: BigUint::one() };
    for c in classes {
        acc = crt_pair(&acc, c)?;
    }
    Ok(acc)
}

fn crt_pair(x: &ResidueClass, y: &ResidueClass) -> Result<ResidueClass, ArithError> {
    let m1 = BigInt::from(x.modulus.clone());
    let m2 = BigInt::from(y.modulus.clone());
    let r1 = BigInt::from(x.residue.clone());
    let r2 = BigInt::from(y.residue.clone());
    let eg = m1.extended_gcd(&m2);
    let g = eg.gcd;
    let diff = &r2 - &r1;
    if !(&diff % &g).is_zero() {
        return Err(ArithError::Incompatible(x.clone(), y.clone()));
    }
    let lcm = &m1 / &g * &m2;
    // r1 + m1 * ((diff / g) * inv(m1/g) mod m2/g)
    let m2g = &m2 / &g;
    let t = (&diff / &g * &eg.x).mod_floor(&m2g);
    let r = (&r1 + &m1 * t).mod_floor(&lcm);
    Ok(ResidueClass { residue: r.to_biguint().expect("nonnegative"), modulus: lcm.to_biguint().expect("positive") })
}

/// Segmented sieve of Eratosthenes with a hard ceiling.
#[derive(Debug, Clone)]
pub struct PrimeSieve {
    ceiling: u64,
    base: Vec<u64>,
}

impl Default for PrimeSieve {
    fn default() -> Self {
        Self::new(DEFAULT_PRIME_CEILING)
    }
}

impl PrimeSieve {
    pub fn new(ceiling: u64) -> Self {
        let root = (ceiling as f64).sqrt() as u64 + 2;
        Self { ceiling, base: simple_sieve(root) }
    }

    pub fn ceiling(&self) -> u64 {
        self.ceiling
    }

    fn check(&self, limit: u64) -> Result<(), ArithError> {
        if limit > self.ceiling {
            Err(ArithError::ResourceExhausted { requested: limit, ceiling: self.ceiling })
        } else {
            Ok(())
        }
    }

    /// All primes `p <= limit`.
    pub fn primes_up_to(&self, limit: u64) -> Result<Vec<u64>, ArithError> {
        self.check(limit)?;
        Ok(self.iter_from(2).take_while(|&p| p <= limit).collect())
    }

    /// Ascending primes `>= start`, stopping at the ceiling. Use
    /// [`PrimeSieve::ensure`] to turn running off the end into an error.
    pub fn iter_from(&self, start: u64) -> SegmentedPrimes<'_> {
        SegmentedPrimes { sieve: self, lo: start.max(2), buf: Vec::new(), pos: 0 }
    }

    pub fn ensure(&self, limit: u64) -> Result<(), ArithError> {
        self.check(limit)
    }

    /// The `n`-th prime, `p_1 = 2`.
    pub fn nth_prime(&self, n: u64) -> Result<u64, ArithError> {
        if n == 0 {
            return Err(ArithError::ZeroIndex);
        }
        self.iter_from(2)
            .nth((n - 1) as usize)
            .ok_or(ArithError::ResourceExhausted { requested: n, ceiling: self.ceiling })
    }
}

/// Iterator over a range of primes produced one segment at a time.
pub struct SegmentedPrimes<'a> {
    sieve: &'a PrimeSieve,
    lo: u64,
    buf: Vec<u64>,
    pos: usize,
}

impl Iterator for SegmentedPrimes<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if self.pos < self.buf.len() {
                self.pos += 1;
                return Some(self.buf[self.pos - 1]);
            }
            if self.lo > self.sieve.ceiling {
                return None;
            }
            let hi = (self.lo + SEGMENT).min(self.sieve.ceiling + 1);
            self.buf = sieve_segment(&self.sieve.base, self.lo, hi);
            self.pos = 0;
            self.lo = hi;
        }
    }
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn sieve_segment(base: &[u64], lo: u64, hi: u64) -> Vec<u64> {
    let len = (hi - lo) as usize;
    let mut composite = vec![false; len];
    for &p in base {
        if p * p >= hi {
            break;
        }
        let mut start = lo.div_ceil(p) * p;
        if start < p * p {
            start = p * p;
        }
        let mut j = start;
        while j < hi {
            composite[(j - lo) as usize] = true;
            j += p;
        }
    }
    (0..len).filter(|&i| !composite[i] && lo + i as u64 >= 2).map(|i| lo + i as u64).collect()
}

/// Shared sieve with the default ceiling.
pub fn default_sieve() -> &'static PrimeSieve {
    static SIEVE: std::sync::OnceLock<PrimeSieve> = std::sync::OnceLock::new();
    SIEVE.get_or_init(PrimeSieve::default)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rc(r: u64, m: u64) -> ResidueClass {
        ResidueClass::new(r, m).unwrap()
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(1, 7), 1);
        assert_eq!(kronecker(-4, 13), 1);
        assert_eq!(kronecker(-43, 2), -1);
        // x^2 = -43 has no solution mod 8
        assert!((0..8).all(|x: i64| (x * x - (-43i64)).rem_euclid(8) != 0));
    }

    #[test]
    fn kronecker_edge_arguments() {
        assert_eq!(kronecker(1, 0), 1);
        assert_eq!(kronecker(-1, 0), 1);
        assert_eq!(kronecker(2, 0), 0);
        assert_eq!(kronecker(-3, -1), -1);
        assert_eq!(kronecker(3, -1), 1);
        assert_eq!(kronecker(6, 4), 0);
        assert_eq!(kronecker(5, 8), -1);
        assert_eq!(kronecker(7, 8), 1);
    }

    #[test]
    fn kronecker_multiplicative_in_numerator() {
        for n in 1..=200i64 {
            for a in -200..=200i64 {
                for b in [-7i64, -3, -1, 2, 5, 11] {
                    assert_eq!(kronecker(a * b, n), kronecker(a, n) * kronecker(b, n), "a={a} b={b} n={n}");
                }
            }
        }
    }

    #[test]
    fn legendre_matches_squares() {
        for p in simple_sieve(500).into_iter().filter(|&p| p > 2) {
            let squares: std::collections::HashSet<i64> = (1..p as i64).map(|x| x * x % p as i64).collect();
            for a in -499..500i64 {
                if a.rem_euclid(p as i64) == 0 {
                    continue;
                }
                let is_sq = squares.contains(&a.rem_euclid(p as i64));
                assert_eq!(kronecker(a, p as i64) == 1, is_sq, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn nth_prime_examples() {
        let s = PrimeSieve::new(1_000_000);
        assert_eq!(s.nth_prime(1).unwrap(), 2);
        assert_eq!(s.nth_prime(6).unwrap(), 13);
        assert_eq!(s.nth_prime(25).unwrap(), 97);
        assert_eq!(s.nth_prime(0), Err(ArithError::ZeroIndex));
    }

    #[test]
    fn nth_prime_past_ceiling_is_resource_error() {
        let s = PrimeSieve::new(100);
        assert_eq!(s.nth_prime(25).unwrap(), 97);
        assert!(matches!(s.nth_prime(26), Err(ArithError::ResourceExhausted { .. })));
    }

    #[test]
    fn segmented_matches_simple() {
        let s = PrimeSieve::new(300_000);
        let a = s.primes_up_to(300_000).unwrap();
        assert_eq!(a, simple_sieve(300_000));
        let from: Vec<u64> = s.iter_from(199_990).take(3).collect();
        assert_eq!(from, vec![199_999, 200_003, 200_009]);
    }

    #[test]
    fn crt_examples() {
        assert_eq!(crt(&[rc(1, 3), rc(3, 8)]).unwrap(), rc(19, 24));
        assert_eq!(crt(&[rc(0, 2), rc(1, 3)]).unwrap(), rc(4, 6));
        assert!(matches!(crt(&[rc(1, 2), rc(0, 2)]), Err(ArithError::Incompatible(..))));
        // overlapping moduli that agree
        assert_eq!(crt(&[rc(3, 4), rc(7, 8), rc(1, 6)]).unwrap(), rc(7, 24));
        assert_eq!(crt(&[]).unwrap(), rc(0, 1));
    }

    #[test]
    fn factor_examples() {
        assert_eq!(factor(60).unwrap(), vec![(2, 2), (3, 1), (5, 1)]);
        assert_eq!(factor(1).unwrap(), vec![]);
        assert_eq!(factor(8633).unwrap(), vec![(89, 1), (97, 1)]);
        assert!(factor(FACTOR_CEILING + 1).is_err());
    }

    #[test]
    fn squarefree() {
        assert!(is_squarefree(-43));
        assert!(is_squarefree(-1));
        assert!(!is_squarefree(12));
        assert!(!is_squarefree(0));
    }

    proptest! {
        #[test]
        fn crt_solution_satisfies_inputs(
            r1 in 0u64..1000, m1 in 1u64..200,
            r2 in 0u64..1000, m2 in 1u64..200,
        ) {
            let a = rc(r1 % m1, m1);
            let b = rc(r2 % m2, m2);
            match crt(&[a.clone(), b.clone()]) {
                Ok(c) => {
                    let lcm = m1.lcm(&m2);
                    prop_assert_eq!(c.modulus(), &BigUint::from(lcm));
                    let r = u64::try_from(c.residue().clone()).unwrap();
                    prop_assert!(a.contains(r) && b.contains(r));
                    // uniqueness modulo lcm
                    let hits = (0..lcm).filter(|&x| a.contains(x) && b.contains(x)).count();
                    prop_assert_eq!(hits, 1);
                }
                Err(_) => {
                    prop_assert!((0..m1.lcm(&m2)).all(|x| !(a.contains(x) && b.contains(x))));
                }
            }
        }

        #[test]
        fn factor_reconstructs(n in 1u64..10_000_000) {
            let f = factor(n).unwrap();
            let prod: u64 = f.iter().map(|&(p, e)| p.pow(e)).product();
            prop_assert_eq!(prod, n);
            prop_assert!(f.iter().all(|&(p, _)| is_prime(p)));
        }
    }
}
